"""Geometric hypotheses on a contact graph.

Faces come from the straight-line embedding: neighbors are sorted by angle
around each vertex and half-edges are walked with the face on the left, so
bounded faces have positive signed area and outer faces negative (or zero).
A bounded face counts as a triangle when its boundary has exactly three
corners; extra vertices lying on a side (straight angle) are allowed, which
is the geometric reading of "edges partition the domain into triangles".
Only faces with exactly three vertices can be glued as rigid triangles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import EmbeddingError, ExplosionError
from .packing import ContactGraph

TOL_COLLINEAR = 1e-9
CELL_EXHAUSTIVE_CAP = 18
CELL_SAMPLE_SIZE = 5


def _det(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def collinear(qa, qb, tol: float = TOL_COLLINEAR) -> bool:
    return abs(_det(qa, qb)) <= tol


# ---------------------------------------------------------------- embedding


def check_embedding(graph: ContactGraph, tol: float = 1e-12) -> None:
    """Raise EmbeddingError if two edges meet anywhere except a shared endpoint."""
    x = graph.vertex_positions
    e = graph.edges
    E = len(e)
    if E < 2:
        return
    scale = float(np.ptp(x, axis=0).max()) or 1.0
    eps = tol * scale * scale
    p, r = x[e[:, 0]], x[e[:, 1]] - x[e[:, 0]]
    for a in range(E - 1):
        b = np.arange(a + 1, E)
        shared = (
            (e[b, 0] == e[a, 0]) | (e[b, 0] == e[a, 1]) | (e[b, 1] == e[a, 0]) | (e[b, 1] == e[a, 1])
        )
        qp = p[b] - p[a]
        rxs = r[a, 0] * r[b, 1] - r[a, 1] * r[b, 0]
        qpxr = qp[:, 0] * r[a, 1] - qp[:, 1] * r[a, 0]
        qpxs = qp[:, 0] * r[b, 1] - qp[:, 1] * r[b, 0]
        par = np.abs(rxs) <= eps
        with np.errstate(divide="ignore", invalid="ignore"):
            t = qpxs / rxs
            u = qpxr / rxs
        cross = ~par & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        # touching at an endpoint that is not shared (T-contact on an edge interior)
        touch = ~par & ~shared & (t >= -1e-12) & (t <= 1 + 1e-12) & (u >= -1e-12) & (u <= 1 + 1e-12)
        overlap = np.zeros(len(b), dtype=bool)
        col = par & (np.abs(qpxr) <= eps)
        if np.any(col):
            rr = float(r[a] @ r[a])
            t0 = (qp[col] @ r[a]) / rr
            t1 = t0 + (r[b][col] @ r[a]) / rr
            lo, hi = np.minimum(t0, t1), np.maximum(t0, t1)
            overlap[col] = (np.minimum(hi, 1.0) - np.maximum(lo, 0.0)) > 1e-12
        bad = cross | touch | overlap
        if np.any(bad):
            k = int(b[np.flatnonzero(bad)[0]])
            ia = graph.original_ids[e[a]].tolist()
            ib = graph.original_ids[e[k]].tolist()
            raise EmbeddingError(f"edges {ia} and {ib} cross or overlap")


def _rotation_system(graph: ContactGraph) -> list[list[int]]:
    x = graph.vertex_positions
    rot = [[] for _ in range(graph.n_vertices)]
    for v, nbrs in enumerate(graph.neighbors()):
        ws = [w for w, _ in nbrs]
        ang = [np.arctan2(*(x[w] - x[v])[::-1]) for w in ws]
        rot[v] = [w for _, w in sorted(zip(ang, ws))]
    return rot


def _signed_area(x, face) -> float:
    pts = x[list(face)]
    return 0.5 * float(np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1]))


def _canonical(face) -> tuple[int, ...]:
    k = face.index(min(face))
    return tuple(face[k:] + face[:k])


def _corners(x, face, tol) -> int:
    n = len(face)
    count = 0
    for k in range(n):
        a, b, c = x[face[k - 1]], x[face[k]], x[face[(k + 1) % n]]
        u, w = b - a, c - b
        nu, nw = np.hypot(*u), np.hypot(*w)
        if nu == 0 or nw == 0 or abs(_det(u / nu, w / nw)) > tol:
            count += 1
    return count


@dataclass
class Face:
    vertices: tuple[int, ...]
    area: float
    corners: int

    @property
    def is_triangle(self) -> bool:
        return self.corners == 3 and len(set(self.vertices)) == len(self.vertices)

    @property
    def is_simple_triangle(self) -> bool:
        return len(self.vertices) == 3 and self.is_triangle


@dataclass
class TriangulationResult:
    is_triangulation: bool
    faces: list[Face]
    outer_faces: list[tuple[int, ...]]
    reasons: list[str] = field(default_factory=list)


def planar_faces(graph: ContactGraph, tol_collinear: float = TOL_COLLINEAR):
    x = graph.vertex_positions
    rot = _rotation_system(graph)
    pos = [{w: k for k, w in enumerate(r)} for r in rot]
    seen = set()
    bounded, outer = [], []
    for v in range(graph.n_vertices):
        for w in rot[v]:
            if (v, w) in seen:
                continue
            face = []
            a, b = v, w
            while (a, b) not in seen:
                seen.add((a, b))
                face.append(a)
                nb = rot[b]
                c = nb[(pos[b][a] - 1) % len(nb)]
                a, b = b, c
            area = _signed_area(x, face)
            if area > 0:
                bounded.append(Face(_canonical(face), area, _corners(x, face, tol_collinear)))
            else:
                outer.append(_canonical(face))
    bounded.sort(key=lambda f: tuple(sorted(f.vertices)))
    return bounded, outer


def _connected(n, edges) -> bool:
    if n == 0:
        return False
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(int(i))] = find(int(j))
    return len({find(v) for v in range(n)}) == 1


def check_triangulation(graph: ContactGraph, tol_collinear: float = TOL_COLLINEAR) -> TriangulationResult:
    check_embedding(graph)
    faces, outer = planar_faces(graph, tol_collinear)
    reasons = []
    if not _connected(graph.n_vertices, graph.edges):
        reasons.append("graph is not connected")
    if len(outer) != 1:
        reasons.append(f"expected one outer face, found {len(outer)}")
    if not faces:
        reasons.append("no bounded face")
    for f in faces:
        if not f.is_triangle:
            ids = graph.original_ids[list(f.vertices)].tolist()
            reasons.append(f"face {ids} has {f.corners} corners")
            break
    return TriangulationResult(not reasons, faces, outer, reasons)


# ---------------------------------------------------------------- gluing


@dataclass
class SequentialResult:
    ok: bool
    order: list[tuple[int, ...]]
    frontier: list[tuple[int, ...]]


def _face_edges(face):
    n = len(face)
    return [frozenset((face[k], face[(k + 1) % n])) for k in range(n)]


def check_sequential_construction(graph: ContactGraph, faces: list[Face] | None = None) -> SequentialResult:
    """Greedy triangle gluing: each next triangle shares a full edge with the union."""
    if faces is None:
        faces = check_triangulation(graph).faces
    if not faces:
        return SequentialResult(False, [], [])
    glue = [f for f in faces if f.is_simple_triangle]
    blocked = [f.vertices for f in faces if not f.is_simple_triangle]
    if not glue:
        return SequentialResult(False, [], blocked)
    by_edge: dict[frozenset, list[int]] = {}
    for k, f in enumerate(glue):
        for e in _face_edges(f.vertices):
            by_edge.setdefault(e, []).append(k)
    placed = [False] * len(glue)
    order = [0]
    placed[0] = True
    # candidate heap keyed by face index keeps the smallest-index rule
    import heapq

    heap: list[int] = []
    queued = set()

    def push_neighbors(k):
        for e in _face_edges(glue[k].vertices):
            for m in by_edge[e]:
                if not placed[m] and m not in queued:
                    queued.add(m)
                    heapq.heappush(heap, m)

    push_neighbors(0)
    while heap:
        m = heapq.heappop(heap)
        placed[m] = True
        order.append(m)
        push_neighbors(m)
    frontier = [glue[k].vertices for k in range(len(glue)) if not placed[k]] + blocked
    return SequentialResult(not frontier, [glue[k].vertices for k in order], frontier)


# ---------------------------------------------------------------- boundary


def check_boundary_compatibility(graph: ContactGraph, tol_collinear: float = TOL_COLLINEAR):
    """Interior vertices touching the boundary need two non-collinear boundary edges.

    Returns (ok, violating original ids).
    """
    ni = graph.interior_count
    bad = []
    for v, nbrs in enumerate(graph.neighbors()[:ni]):
        qs = [graph.outward_unit(l, v) for w, l in nbrs if w >= ni]
        if not qs:
            continue
        if not any(not collinear(a, b, tol_collinear) for a, b in combinations(qs, 2)):
            bad.append(int(graph.original_ids[v]))
    return not bad, bad


# ---------------------------------------------------------------- cell connectedness


def _connected_subsets(adj_mask: list[int], verts: list[int], max_size: int | None = None):
    """Yield bitmasks of connected vertex sets (size >= 1), each exactly once.

    ``adj_mask[v]`` is the neighbor bitmask of v restricted to ``verts``.
    """
    for v in verts:
        higher = 0
        for u in verts:
            if u > v:
                higher |= 1 << u
        stack = [(1 << v, adj_mask[v] & higher, 0, 1)]
        while stack:
            S, ext, banned, size = stack.pop()
            yield S
            if max_size is not None and size >= max_size:
                continue
            rest = ext
            while rest:
                w_bit = rest & -rest
                rest ^= w_bit
                w = w_bit.bit_length() - 1
                new_banned = banned | (ext & ~rest & ~w_bit) | w_bit
                new_ext = (rest | (adj_mask[w] & higher)) & ~S & ~new_banned & ~w_bit
                stack.append((S | w_bit, new_ext, new_banned, size + 1))


@dataclass
class CellResult:
    ok: bool
    witness: list[int] | None
    mode: str
    checked: int
    strict_ok: bool
    strict_witness: list[int] | None


def _adjacent_triangle_quads(faces: list[Face]) -> list[tuple[int, int]]:
    """For each pair of 3-vertex faces sharing an edge: (quad mask, mask of the shared edge)."""
    tri = [f.vertices for f in faces if f.is_simple_triangle]
    by_edge: dict[frozenset, list[int]] = {}
    for k, t in enumerate(tri):
        for e in _face_edges(t):
            by_edge.setdefault(e, []).append(k)
    quads = set()
    for e, ks in by_edge.items():
        for a, b in combinations(ks, 2):
            verts = set(tri[a]) | set(tri[b])
            if len(verts) == 4:
                quads.add(sum(1 << v for v in verts))
    return sorted(quads)


def check_cell_connected(
    graph: ContactGraph,
    faces: list[Face] | None = None,
    mode: str = "auto",
    cap: int = CELL_EXHAUSTIVE_CAP,
    sample_size: int = CELL_SAMPLE_SIZE,
) -> CellResult:
    """Every connected interior G_X (|X| >= 2) must attach through two adjacent triangles.

    ``ok``/``witness`` use the reading where the two outside vertices may be
    any vertices not in X; ``strict_ok``/``strict_witness`` additionally
    require them to be interior.
    """
    if faces is None:
        faces = check_triangulation(graph).faces
    ni = graph.interior_count
    if mode not in ("auto", "exhaustive", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exhaustive" and ni > cap:
        raise ExplosionError(f"{ni} interior vertices exceed the exhaustive cap {cap}")
    exhaustive = mode == "exhaustive" or (mode == "auto" and ni <= cap)

    quads = _adjacent_triangle_quads(faces)
    interior_mask = (1 << ni) - 1
    adj = [0] * graph.n_vertices
    for i, j in graph.edges:
        if i < ni and j < ni:
            adj[i] |= 1 << int(j)
            adj[j] |= 1 << int(i)
    verts = list(range(ni))

    def to_ids(S):
        return sorted(int(graph.original_ids[v]) for v in verts if S >> v & 1)

    if exhaustive:
        subsets = _connected_subsets(adj, verts)
    else:
        subsets = _sampled_subsets(adj, verts, sample_size)

    ok, witness, strict_ok, strict_witness = True, None, True, None
    checked = 0
    for S in subsets:
        if S & (S - 1) == 0:
            continue
        checked += 1
        relaxed_hit = strict_hit = False
        for Q in quads:
            inside = Q & S
            if bin(inside).count("1") == 2:
                relaxed_hit = True
                if (Q & ~S) & ~interior_mask == 0:
                    strict_hit = True
                    break
        if not relaxed_hit and ok:
            ok, witness = False, to_ids(S)
        if not strict_hit and strict_ok:
            strict_ok, strict_witness = False, to_ids(S)
        if not ok and not strict_ok:
            break
    return CellResult(ok, witness, "exhaustive" if exhaustive else "sampled", checked, strict_ok, strict_witness)


def _sampled_subsets(adj, verts, sample_size):
    """All connected sets up to ``sample_size`` plus BFS balls around every vertex."""
    seen = set()
    for S in _connected_subsets(adj, verts, max_size=sample_size):
        seen.add(S)
        yield S
    for v in verts:
        ball, frontier = 1 << v, 1 << v
        while frontier:
            nxt = 0
            rest = frontier
            while rest:
                b = rest & -rest
                rest ^= b
                nxt |= adj[b.bit_length() - 1]
            frontier = nxt & ~ball
            ball |= frontier
            if ball not in seen:
                seen.add(ball)
                yield ball


# ---------------------------------------------------------------- Gamma_max


@dataclass
class GammaMaxCertificate:
    additions: list[tuple[int, tuple[int, int]]]  # (graph vertex, (edge id, edge id))
    covered: bool
    uncovered: list[int]

    @property
    def chosen_edges(self) -> list[int]:
        return [l for _, pair in self.additions for l in pair]


def build_gamma_max(graph: ContactGraph, tol_collinear: float = TOL_COLLINEAR) -> GammaMaxCertificate:
    """Absorb interior vertices one at a time through two non-collinear edges."""
    ni = graph.interior_count
    nbrs = graph.neighbors()
    covered = [v >= ni for v in range(graph.n_vertices)]
    additions = []
    progress = True
    while progress:
        progress = False
        for v in range(ni):
            if covered[v]:
                continue
            links = [l for w, l in nbrs[v] if covered[w]]
            pair = None
            for a, b in combinations(links, 2):
                if not collinear(graph.outward_unit(a, v), graph.outward_unit(b, v), tol_collinear):
                    pair = (a, b)
                    break
            if pair is not None:
                covered[v] = True
                additions.append((v, pair))
                progress = True
                break
    uncovered = [int(graph.original_ids[v]) for v in range(ni) if not covered[v]]
    return GammaMaxCertificate(additions, not uncovered, uncovered)


# ---------------------------------------------------------------- aggregate


@dataclass
class RegularityReport:
    is_triangulation: bool
    triangulation_reasons: list[str]
    n_faces: int
    has_sequential_construction: bool
    triangle_order: list[tuple[int, ...]]
    sequential_frontier: list[tuple[int, ...]]
    boundary_compatible: bool
    boundary_violations: list[int]
    is_cell_connected: bool
    cell_witness: list[int] | None
    cell_mode: str
    cell_subsets_checked: int
    cell_strict_interior: bool
    cell_strict_witness: list[int] | None

    @property
    def overall(self) -> bool:
        return (
            self.is_triangulation
            and self.has_sequential_construction
            and self.boundary_compatible
            and self.is_cell_connected
        )


def check_regular_triangulation(
    graph: ContactGraph, tol_collinear: float = TOL_COLLINEAR, cell_mode: str = "auto"
) -> RegularityReport:
    tri = check_triangulation(graph, tol_collinear)
    bok, bbad = check_boundary_compatibility(graph, tol_collinear)
    if tri.is_triangulation:
        seq = check_sequential_construction(graph, tri.faces)
        cell = check_cell_connected(graph, tri.faces, mode=cell_mode)
    else:
        seq = SequentialResult(False, [], [])
        cell = CellResult(False, None, "skipped", 0, False, None)
    ids = graph.original_ids

    def relabel(faces):
        return [tuple(int(ids[v]) for v in f) for f in faces]

    return RegularityReport(
        is_triangulation=tri.is_triangulation,
        triangulation_reasons=tri.reasons,
        n_faces=len(tri.faces),
        has_sequential_construction=seq.ok,
        triangle_order=relabel(seq.order),
        sequential_frontier=relabel(seq.frontier),
        boundary_compatible=bok,
        boundary_violations=bbad,
        is_cell_connected=cell.ok,
        cell_witness=cell.witness,
        cell_mode=cell.mode,
        cell_subsets_checked=cell.checked,
        cell_strict_interior=cell.strict_ok,
        cell_strict_witness=cell.strict_witness,
    )
