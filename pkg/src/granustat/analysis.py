"""Contact classification at a minimizer, per-vertex audit, v-vectors and the order parameter.

Stuck versus sheared uses pair data only: a solid-like contact is stuck when
the relative displacement vanishes, sheared when only its normal part does.
A pair rotation and a tangential shear are indistinguishable at this level.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyNeighborhoodError
from .packing import ContactGraph
from .qpsolve import TOL_GENERIC, QpSolution, genericity, line_margin, place_restrictions
from .rigidity import PartitionedSystem, assemble_rigidity_matrix, rigid_motion_basis

TOL_THEOREM = 1e-6

BROKEN, STUCK, SHEARED = "broken", "stuck", "sheared"


def full_displacement(partition: PartitionedSystem, z) -> np.ndarray:
    """U = (z; g) in the graph's interior-first ordering."""
    return np.concatenate([np.asarray(z, float).reshape(-1), partition.g])


@dataclass(frozen=True)
class ContactStates:
    states: tuple[str, ...]
    slack: np.ndarray
    tangential: np.ndarray
    tol: float

    def __len__(self):
        return len(self.states)

    @property
    def solid(self) -> np.ndarray:
        return np.array([s != BROKEN for s in self.states], dtype=bool)

    @property
    def active_edges(self) -> tuple[int, ...]:
        return tuple(int(l) for l in np.flatnonzero(self.solid))

    def count(self, kind: str) -> int:
        return sum(1 for s in self.states if s == kind)


def remove_rigid_part(graph: ContactGraph, U) -> np.ndarray:
    """U minus its least-squares projection onto the global rigid motions."""
    U = np.asarray(U, float).reshape(-1)
    B = np.stack(rigid_motion_basis(graph), axis=1)
    coef, *_ = np.linalg.lstsq(B, U, rcond=None)
    return U - B @ coef


def classify_contacts(graph: ContactGraph, U, tol_active: float, remove_rigid: bool = False) -> ContactStates:
    """Per-edge broken / stuck / sheared labels.

    With ``remove_rigid`` the tangential parts are measured after subtracting
    the best-fitting global rigid motion, which makes the labels invariant
    under adding any rigid field to U. Slacks are unaffected either way.
    """
    U = np.asarray(U, float).reshape(-1)
    if U.size != 2 * graph.n_vertices:
        raise ValueError(f"U has {U.size // 2} places, graph has {graph.n_vertices}")
    if remove_rigid:
        U = remove_rigid_part(graph, U)
    U = U.reshape(-1, 2)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    du = U[j] - U[i]
    q = graph.edge_units
    slack = np.einsum("ij,ij->i", du, q)
    tang = du[:, 0] * -q[:, 1] + du[:, 1] * q[:, 0]
    bad = np.flatnonzero(slack < -tol_active)
    if bad.size:
        raise ValueError(f"displacement penetrates contacts {bad.tolist()} (slack {slack[bad].min():.3g})")
    states = []
    for s, t in zip(slack, tang):
        if s > tol_active:
            states.append(BROKEN)
        elif abs(t) <= tol_active:
            states.append(STUCK)
        else:
            states.append(SHEARED)
    for arr in (slack, tang):
        arr.setflags(write=False)
    return ContactStates(tuple(states), slack, tang, tol_active)


def network_energy(graph: ContactGraph, U, d: float, delta, ordered_pairs: bool = False) -> float:
    """Spring energy 0.5*d**-3 * sum over contacts of (slack - d*delta)**2.

    ``ordered_pairs`` sums over both orientations of every contact, which
    doubles the value.
    """
    U = np.asarray(U, float).reshape(-1, 2)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    t = np.einsum("ij,ij->i", U[j] - U[i], graph.edge_units)
    e = 0.5 * d**-3 * float(np.sum((t - d * np.asarray(delta, float)) ** 2))
    return 2 * e if ordered_pairs else e


@dataclass
class VertexAudit:
    vertex: int
    original_id: int
    active_edges: tuple[int, ...]
    best_det: float
    passed: bool


@dataclass
class TheoremAudit:
    vertices: list[VertexAudit]
    tol_collinear: float

    @property
    def holds(self) -> bool:
        return all(v.passed for v in self.vertices)


def verify_theorem(graph: ContactGraph, states: ContactStates, tol_collinear: float = TOL_THEOREM) -> TheoremAudit:
    """Every interior vertex needs two solid-like incident edges with independent directions."""
    solid = states.solid
    nbrs = graph.neighbors()
    audits = []
    for v in range(graph.interior_count):
        act = sorted(l for _, l in nbrs[v] if solid[l])
        Q = graph.edge_units[act]
        best = 0.0
        if len(act) >= 2:
            dets = np.abs(Q[:, None, 0] * Q[None, :, 1] - Q[:, None, 1] * Q[None, :, 0])
            best = float(dets.max())
        audits.append(VertexAudit(v, int(graph.original_ids[v]), tuple(act), best, best > tol_collinear))
    return TheoremAudit(audits, tol_collinear)


@dataclass(frozen=True)
class VVectors:
    vectors: np.ndarray  # (n_interior, 2)
    min_norm: float
    weighted: bool


def _interior_R(graph: ContactGraph) -> np.ndarray:
    return assemble_rigidity_matrix(graph).dense()[:, : 2 * graph.interior_count]


def compute_v_vectors(graph: ContactGraph, delta=None) -> VVectors:
    """Unweighted sums of outward unit vectors, or the restriction of R^T delta when delta is given."""
    ni = graph.interior_count
    if delta is None:
        vec = np.zeros((ni, 2))
        for v, nb in enumerate(graph.neighbors()[:ni]):
            for _, l in nb:
                vec[v] += graph.outward_unit(l, v)
    else:
        vec = place_restrictions(_interior_R(graph), delta)
    norms = np.linalg.norm(vec, axis=1)
    return VVectors(vec, float(norms.min()) if ni else float("inf"), delta is not None)


@dataclass(frozen=True)
class GenericityReport:
    generic: bool
    margin: float
    per_vertex: tuple[float, ...]


def check_genericity(graph: ContactGraph, delta, tol_generic: float = TOL_GENERIC) -> GenericityReport:
    ok, margin, per = genericity(_interior_R(graph), delta, tol_generic)
    return GenericityReport(bool(ok), margin, tuple(per))


def vector_genericity(v, directions, tol_generic: float = TOL_GENERIC) -> GenericityReport:
    """Genericity test for a single hand-made vector against given line directions."""
    ok, m = line_margin(v, directions, tol_generic)
    return GenericityReport(ok, m, (m,))


def k_neighborhood(graph: ContactGraph, i: int, k: int) -> set[int]:
    n = graph.n_vertices
    if not (0 <= i < n):
        raise IndexError(f"vertex {i} out of range 0..{n - 1}")
    if k < 0:
        raise ValueError("k must be non-negative")
    adj = graph.neighbors()
    dist = {i: 0}
    todo = deque([i])
    while todo:
        v = todo.popleft()
        if dist[v] == k:
            continue
        for w, _ in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                todo.append(w)
    return set(dist)


def _induced_edges(graph: ContactGraph, verts: set[int]) -> np.ndarray:
    mask = np.zeros(graph.n_vertices, dtype=bool)
    mask[list(verts)] = True
    return np.flatnonzero(mask[graph.edges[:, 0]] & mask[graph.edges[:, 1]])


def order_parameter(graph: ContactGraph, states: ContactStates, i: int, k: int) -> float:
    """Fraction of solid-like contacts among edges with both ends in the k-ball around i."""
    edges = _induced_edges(graph, k_neighborhood(graph, i, k))
    if edges.size == 0:
        raise EmptyNeighborhoodError(f"no edges inside the {k}-neighborhood of vertex {i}")
    return int(states.solid[edges].sum()) / int(edges.size)


@dataclass
class BoundRecord:
    rho: list[float]
    n_solid: int
    derived_bound: float  # (N - N_b) / E
    stated_bound: float  # N / E, reported only
    rho_uniform: bool
    meets_derived: bool
    meets_stated: bool
    theorem_holds: bool

    @property
    def consistent(self) -> bool:
        """The derived bound must hold whenever the theorem audit passed."""
        return self.meets_derived or not self.theorem_holds


def order_parameter_bound(graph: ContactGraph, states: ContactStates, audit: TheoremAudit) -> BoundRecord:
    N, E = graph.n_vertices, graph.n_edges
    rho = [order_parameter(graph, states, v, N) for v in range(N)]
    n_solid = int(states.solid.sum())
    derived = graph.interior_count / E
    stated = N / E
    rec = BoundRecord(
        rho=rho,
        n_solid=n_solid,
        derived_bound=derived,
        stated_bound=stated,
        rho_uniform=all(r == rho[0] for r in rho),
        meets_derived=all(r >= derived for r in rho) and n_solid >= graph.interior_count,
        meets_stated=all(r >= stated for r in rho),
        theorem_holds=audit.holds,
    )
    return rec


@dataclass
class ContactReport:
    states: ContactStates
    audit: TheoremAudit
    bound: BoundRecord
    rho_table: dict[int, list[float]] = field(default_factory=dict)  # k -> rho per vertex
    qp_active: tuple[int, ...] = ()

    @property
    def theorem_holds(self) -> bool:
        return self.audit.holds

    @property
    def active_edges(self) -> tuple[int, ...]:
        return self.states.active_edges


def analyze_solution(
    partition: PartitionedSystem,
    solution: QpSolution,
    tol_active: float,
    tol_collinear: float = TOL_THEOREM,
    k_values=None,
) -> ContactReport:
    graph = partition.graph
    U = full_displacement(partition, solution.z_star)
    states = classify_contacts(graph, U, tol_active, remove_rigid=True)
    audit = verify_theorem(graph, states, tol_collinear)
    bound = order_parameter_bound(graph, states, audit)
    ks = range(1, graph.n_vertices + 1) if k_values is None else k_values
    table = {}
    for k in ks:
        row = []
        for v in range(graph.n_vertices):
            try:
                row.append(order_parameter(graph, states, v, k))
            except EmptyNeighborhoodError:
                row.append(float("nan"))
        table[int(k)] = row
    return ContactReport(states, audit, bound, table, tuple(solution.active_set))
