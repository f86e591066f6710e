"""Disk packings, contact detection and boundary displacement assembly.

Vertex ordering contract: every :class:`ContactGraph` lists interior vertices
first and boundary vertices last, so the boundary block of any per-vertex
vector is a plain tail slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateError,
    GroupContactError,
    GroupCoverageError,
    OverlapError,
    SizeError,
)

# clockwise rotation by pi/2
K = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Disk:
    id: int
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SizeError(f"disk {self.id}: radius must be positive, got {self.radius}")
        if not np.all(np.isfinite(self.center)):
            raise SizeError(f"disk {self.id}: non-finite center")


@dataclass(frozen=True)
class BoundaryGroup:
    name: str
    members: tuple[int, ...]


@dataclass(frozen=True)
class Packing:
    """Immutable disk configuration plus boundary-group labels."""

    disks: tuple[Disk, ...]
    groups: tuple[BoundaryGroup, ...] = ()

    def __post_init__(self):
        ids = [d.id for d in self.disks]
        if ids != list(range(len(ids))):
            raise SizeError("disk ids must be contiguous 0..N-1 in order")
        seen: dict[int, str] = {}
        names = set()
        for g in self.groups:
            if g.name in names:
                raise GroupCoverageError(f"duplicate group name {g.name!r}")
            names.add(g.name)
            for m in g.members:
                if not 0 <= m < len(ids):
                    raise GroupCoverageError(f"group {g.name!r}: invalid disk id {m}")
                if m in seen:
                    raise GroupCoverageError(
                        f"disk {m} belongs to groups {seen[m]!r} and {g.name!r}"
                    )
                seen[m] = g.name

    @property
    def n(self) -> int:
        return len(self.disks)

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.disks], dtype=float).reshape(-1, 2)

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks], dtype=float)

    @property
    def boundary_ids(self) -> set[int]:
        return {m for g in self.groups for m in g.members}

    def default_tol_contact(self) -> float:
        return 1e-9 * float(np.mean(self.radii)) if self.disks else 1e-9

    @classmethod
    def from_arrays(cls, centers, radii, groups: Mapping[str, Sequence[int]] | None = None):
        disks = tuple(
            Disk(i, (float(c[0]), float(c[1])), float(r))
            for i, (c, r) in enumerate(zip(np.asarray(centers, float), radii))
        )
        grp = tuple(
            BoundaryGroup(name, tuple(int(m) for m in members))
            for name, members in (groups or {}).items()
        )
        return cls(disks, grp)


@dataclass(frozen=True)
class RigidMotion:
    """Infinitesimal rigid displacement u(x) = c + alpha*K(x - x_star)."""

    c: tuple[float, float] = (0.0, 0.0)
    alpha: float = 0.0
    x_star: tuple[float, float] = (0.0, 0.0)

    def __call__(self, x) -> np.ndarray:
        return rigid_displacement(self, x)

    def __add__(self, other: RigidMotion) -> RigidMotion:
        # alpha*K(x - xs) summed: re-express both about the origin
        c1 = np.asarray(self.c) - self.alpha * K @ np.asarray(self.x_star)
        c2 = np.asarray(other.c) - other.alpha * K @ np.asarray(other.x_star)
        c = c1 + c2
        return RigidMotion((float(c[0]), float(c[1])), self.alpha + other.alpha, (0.0, 0.0))


def rigid_displacement(motion: RigidMotion, x) -> np.ndarray:
    """Evaluate ``c + alpha*K(x - x_star)``; ``x`` may be one point or an (n, 2) array."""
    x = np.asarray(x, dtype=float)
    rel = x - np.asarray(motion.x_star, dtype=float)
    return np.asarray(motion.c, dtype=float) + motion.alpha * rel @ K.T


@dataclass(frozen=True)
class ContactGraph:
    """Oriented contact network with interior-first vertex ordering.

    ``edges[l] = (i, j)`` with ``i < j`` in graph indexing and
    ``edge_units[l] = (x_j - x_i) / |x_j - x_i|``.
    """

    vertex_positions: np.ndarray
    edges: np.ndarray
    edge_units: np.ndarray
    interior_count: int
    boundary_count: int
    original_ids: np.ndarray
    radii: np.ndarray | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertex_positions", _frozen(self.vertex_positions).reshape(-1, 2))
        object.__setattr__(self, "edges", _frozen(self.edges, int).reshape(-1, 2))
        object.__setattr__(self, "edge_units", _frozen(self.edge_units).reshape(-1, 2))
        object.__setattr__(self, "original_ids", _frozen(self.original_ids, int))
        if self.radii is not None:
            object.__setattr__(self, "radii", _frozen(self.radii))
        object.__setattr__(
            self, "_index", {int(o): k for k, o in enumerate(self.original_ids)}
        )

    @property
    def n_vertices(self) -> int:
        return self.interior_count + self.boundary_count

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def is_interior(self, v: int) -> bool:
        return v < self.interior_count

    def index_of(self, original_id: int) -> int:
        return self._index[int(original_id)]

    def neighbors(self) -> list[list[tuple[int, int]]]:
        """Per vertex: list of (neighbor, edge id), edges in increasing id order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for l, (i, j) in enumerate(self.edges):
            adj[i].append((int(j), l))
            adj[j].append((int(i), l))
        return adj

    def outward_unit(self, l: int, v: int) -> np.ndarray:
        """Unit vector of edge ``l`` pointing away from its endpoint ``v``."""
        i, _ = self.edges[l]
        q = self.edge_units[l]
        return q if v == i else -q

    @classmethod
    def from_edges(cls, positions, edges, boundary, radii=None) -> ContactGraph:
        """Build a graph directly from positions and an edge list.

        ``boundary`` lists the indices (into ``positions``) of boundary
        vertices. Vertices are reordered interior-first; the input index is
        kept as the original id.
        """
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        n = len(pos)
        bset = {int(b) for b in boundary}
        order = [v for v in range(n) if v not in bset] + sorted(bset)
        new_of = {old: k for k, old in enumerate(order)}
        pairs = set()
        for a, b in edges:
            a, b = new_of[int(a)], new_of[int(b)]
            if a == b:
                raise DegenerateError(f"self-loop at vertex {order[a]}")
            pairs.add((min(a, b), max(a, b)))
        pairs = sorted(pairs)
        new_pos = pos[order]
        units = []
        for i, j in pairs:
            diff = new_pos[j] - new_pos[i]
            dist = float(np.hypot(*diff))
            if dist == 0.0:
                raise DegenerateError(f"coincident endpoints {order[i]}, {order[j]}")
            units.append(diff / dist)
        return cls(
            vertex_positions=new_pos,
            edges=np.array(pairs, dtype=int).reshape(-1, 2),
            edge_units=np.array(units, dtype=float).reshape(-1, 2),
            interior_count=n - len(bset),
            boundary_count=len(bset),
            original_ids=np.array(order, dtype=int),
            radii=None if radii is None else np.asarray(radii, float)[order],
        )


def build_contact_graph(packing: Packing, tol_contact: float | None = None) -> ContactGraph:
    """Detect contacts ``| |x_i - x_j| - (a_i + a_j) | <= tol`` and orient them."""
    if tol_contact is None:
        tol_contact = packing.default_tol_contact()
    x = packing.centers
    r = packing.radii
    n = len(x)
    diff = x[None, :, :] - x[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu, ju = np.triu_indices(n, k=1)
    d = dist[iu, ju]
    gap = d - (r[iu] + r[ju])
    if np.any(d == 0.0):
        k = int(np.flatnonzero(d == 0.0)[0])
        raise DegenerateError(f"disks {iu[k]} and {ju[k]} have coincident centers")
    if np.any(gap < -tol_contact):
        k = int(np.argmin(gap))
        raise OverlapError(f"disks {iu[k]} and {ju[k]} overlap by {-gap[k]:.3g}")
    touching = np.abs(gap) <= tol_contact
    contacts = list(zip(iu[touching].tolist(), ju[touching].tolist()))

    boundary = packing.boundary_ids
    adj = {k: set() for k in range(n)}
    for a, b in contacts:
        adj[a].add(b)
        adj[b].add(a)
    for g in packing.groups:
        members = set(g.members)
        if len(members) < 2:
            raise GroupContactError(f"group {g.name!r} needs at least two disks in contact")
        for m in g.members:
            if not adj[m] & (members - {m}):
                raise GroupContactError(
                    f"disk {m} touches no other disk of group {g.name!r}"
                )
    return ContactGraph.from_edges(x, contacts, boundary, radii=r)


@dataclass(frozen=True)
class BoundaryConditions:
    motions: tuple[RigidMotion, ...]
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", _frozen(self.g))


def assemble_boundary_vector(
    graph: ContactGraph,
    motions: Sequence[RigidMotion],
    groups: Sequence[Sequence[int]],
) -> BoundaryConditions:
    """Prescribed displacements of the boundary vertices, in graph ordering.

    ``groups`` hold original disk ids; ``motions[m]`` drives ``groups[m]``.
    """
    if len(motions) != len(groups):
        raise GroupCoverageError("need exactly one motion per group")
    nb, ni = graph.boundary_count, graph.interior_count
    owner = np.full(nb, -1)
    for m, members in enumerate(groups):
        for oid in members:
            try:
                v = graph.index_of(oid)
            except KeyError:
                raise GroupCoverageError(f"disk {oid} is not a graph vertex") from None
            if v < ni:
                raise GroupCoverageError(f"disk {oid} is interior but listed in group {m}")
            if owner[v - ni] != -1:
                raise GroupCoverageError(f"disk {oid} listed in two groups")
            owner[v - ni] = m
    if np.any(owner == -1):
        missing = graph.original_ids[ni:][owner == -1]
        raise GroupCoverageError(f"boundary disks without group: {missing.tolist()}")
    xb = graph.vertex_positions[ni:]
    g = np.zeros((nb, 2))
    for m, motion in enumerate(motions):
        sel = owner == m
        if np.any(sel):
            g[sel] = rigid_displacement(motion, xb[sel])
    return BoundaryConditions(tuple(motions), g.reshape(-1))


def boundary_conditions_for(packing: Packing, graph: ContactGraph, motions: Mapping[str, RigidMotion]):
    """Convenience wrapper: groups from the packing, missing motions are zero."""
    mlist = [motions.get(g.name, RigidMotion()) for g in packing.groups]
    return assemble_boundary_vector(graph, mlist, [g.members for g in packing.groups])


@dataclass
class GapReport:
    passed: bool
    slack_limit: float
    pairs: list[tuple[int, int, float, float]]  # (id_i, id_j, displaced distance, limit)
    violations: list[tuple[int, int, float, float]]


def check_a3_gap_condition(packing: Packing, graph: ContactGraph, bc: BoundaryConditions) -> GapReport:
    """Boundary-boundary contacts must not open gaps wider than the smallest disk."""
    ni = graph.interior_count
    r = packing.radii
    min_r = float(r.min())
    g = np.asarray(bc.g).reshape(-1, 2)
    pairs, bad = [], []
    for i, j in graph.edges:
        if i < ni or j < ni:
            continue
        oi, oj = int(graph.original_ids[i]), int(graph.original_ids[j])
        yi = graph.vertex_positions[i] + g[i - ni]
        yj = graph.vertex_positions[j] + g[j - ni]
        dist = float(np.hypot(*(yi - yj)))
        limit = r[oi] + r[oj] + min_r
        rec = (oi, oj, dist, float(limit))
        pairs.append(rec)
        if dist > limit:
            bad.append(rec)
    return GapReport(not bad, min_r, pairs, bad)


def generate_lattice_packing(rows: int, cols: int, radius: float = 1.0) -> Packing:
    """Equal disks on a convex triangular-lattice patch, perimeter disks in one group.

    The patch has ``rows`` rows and its longest row holds ``cols`` disks;
    row ends step by one radius per row so every side is a lattice line.
    ``rows = cols = 3`` is the seven-disk hexagonal cell.
    """
    if rows < 3 or cols < 3:
        raise SizeError(f"lattice needs rows, cols >= 3, got {rows}x{cols}")
    if not radius > 0:
        raise SizeError(f"radius must be positive, got {radius}")
    c_lo, c_hi = (rows - 1) // 2, rows // 2
    if cols - c_lo < 2:
        raise SizeError(f"{rows} rows need at least {c_lo + 2} columns")
    width = 2 * (cols - 1) + (c_hi - c_lo)
    centers, boundary = [], []
    h = np.sqrt(3.0) * radius
    for r in range(rows):
        lo = abs(r - c_lo)
        hi = width - abs(r - c_hi)
        for m in range(lo, hi + 1, 2):
            if r in (0, rows - 1) or m in (lo, hi):
                boundary.append(len(centers))
            centers.append((radius * m, r * h))
    return Packing.from_arrays(centers, [radius] * len(centers), {"boundary": boundary})
