"""Ready-made packings, graphs and boundary motions used by tests, scripts and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import SizeError
from .packing import ContactGraph, Packing, RigidMotion, generate_lattice_packing

S3 = np.sqrt(3.0)


def hex_cell_packing(radius: float = 1.0, grouping: str = "single") -> Packing:
    """Disk 0 at the origin, disks 1..6 at distance 2r and angles 0, 60, ..., 300 degrees.

    grouping: ``single`` (one ring group), ``walls`` (top/left/right pairs)
    or ``sectors`` (three pairs centred on 30, 150 and 270 degrees).
    """
    if not radius > 0:
        raise SizeError("radius must be positive")
    ang = np.deg2rad(60.0 * np.arange(6))
    ring = 2 * radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    centers = np.vstack([[0.0, 0.0], ring])
    groups = {
        "single": {"boundary": [1, 2, 3, 4, 5, 6]},
        "walls": {"top": [2, 3], "left": [4, 5], "right": [1, 6]},
        "sectors": {"s1": [1, 2], "s2": [3, 4], "s3": [5, 6]},
    }
    if grouping not in groups:
        raise ValueError(f"unknown grouping {grouping!r}")
    return Packing.from_arrays(centers, [radius] * 7, groups[grouping])


def with_wall_groups(packing: Packing) -> Packing:
    """Regroup a triangular-lattice perimeter into ``top``, ``left`` and ``right`` walls.

    ``top`` holds the top-row disks strictly between the end disks of the
    row below; every other perimeter disk joins ``left`` or ``right`` by its
    x coordinate relative to the lattice centre.
    """
    x = packing.centers
    bnd = sorted(packing.boundary_ids)
    ys = np.unique(np.round(x[:, 1], 9))
    if len(ys) < 2:
        raise SizeError("need at least two rows")
    top_y, below_y = ys[-1], ys[-2]
    below = x[np.isclose(x[:, 1], below_y)][:, 0]
    lo, hi = below.min(), below.max()
    cx = 0.5 * (x[:, 0].min() + x[:, 0].max())
    top, left, right = [], [], []
    for i in bnd:
        xi, yi = x[i]
        if np.isclose(yi, top_y) and lo + 1e-9 < xi < hi - 1e-9:
            top.append(i)
        elif xi < cx:
            left.append(i)
        else:
            right.append(i)
    return Packing.from_arrays(x, packing.radii, {"top": top, "left": left, "right": right})


def lattice_packing(rows: int, cols: int, radius: float = 1.0, grouping: str = "single") -> Packing:
    p = generate_lattice_packing(rows, cols, radius)
    if grouping == "single":
        return p
    if grouping == "walls":
        return with_wall_groups(p)
    raise ValueError(f"unknown grouping {grouping!r}")


def square_lattice_packing(rows: int, cols: int, radius: float = 1.0) -> Packing:
    if rows < 2 or cols < 2:
        raise SizeError("square lattice needs at least 2x2 disks")
    centers, boundary = [], []
    for r in range(rows):
        for c in range(cols):
            if r in (0, rows - 1) or c in (0, cols - 1):
                boundary.append(len(centers))
            centers.append((2 * radius * c, 2 * radius * r))
    return Packing.from_arrays(centers, [radius] * len(centers), {"boundary": boundary})


def fig3c_graph() -> ContactGraph:
    """Hexagon with an inner triangle hung on edge midpoints.

    Each inner vertex sits on the straight segment between two alternate
    hexagon vertices, so it attaches by a collinear pair of edges.
    """
    ang = np.deg2rad(60.0 * np.arange(6))
    hexagon = 2.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    p = 0.5 * (hexagon[0] + hexagon[2])
    q = 0.5 * (hexagon[2] + hexagon[4])
    r = 0.5 * (hexagon[4] + hexagon[0])
    pos = np.vstack([[p, q, r], hexagon])
    P, Q, R = 0, 1, 2
    H = [3 + k for k in range(6)]
    edges = [(P, Q), (Q, R), (R, P), (P, H[0]), (P, H[2]), (Q, H[2]), (Q, H[4]), (R, H[4]), (R, H[0])]
    edges += [(H[k], H[(k + 1) % 6]) for k in range(6)]
    return ContactGraph.from_edges(pos, edges, boundary=H)


# ---------------------------------------------------------------- motions


def _group_direction(packing: Packing, members) -> np.ndarray:
    x = packing.centers
    v = x[list(members)].mean(axis=0) - x.mean(axis=0)
    n = np.hypot(*v)
    if n == 0:
        raise ValueError("group centroid coincides with the packing centroid")
    return v / n


def radial_motions(packing: Packing, eps: float) -> dict[str, RigidMotion]:
    """Translate every group by ``eps`` along the direction from the packing centroid to its centroid.

    Positive ``eps`` dilates, negative ``eps`` compresses.
    """
    out = {}
    for g in packing.groups:
        c = eps * _group_direction(packing, g.members)
        out[g.name] = RigidMotion((float(c[0]), float(c[1])), 0.0, (0.0, 0.0))
    return out


def top_compression(eps: float, kappa: float = 2.0) -> dict[str, RigidMotion]:
    """Top wall down by ``eps``, side walls out by ``kappa*eps``."""
    return {
        "top": RigidMotion((0.0, -eps)),
        "left": RigidMotion((-kappa * eps, 0.0)),
        "right": RigidMotion((kappa * eps, 0.0)),
    }


def preset_motions(packing: Packing, name: str, eps: float, kappa: float = 2.0) -> dict[str, RigidMotion]:
    if name == "none":
        return {}
    if name == "outward":
        return radial_motions(packing, eps)
    if name == "inward":
        return radial_motions(packing, -eps)
    if name == "top-compression":
        names = {g.name for g in packing.groups}
        if not {"top", "left", "right"} <= names:
            raise ValueError("top-compression needs groups named top, left and right")
        return top_compression(eps, kappa)
    raise ValueError(f"unknown motion preset {name!r}")


# ---------------------------------------------------------------- random instances


def random_delaunay_graph(rng: np.random.Generator, n_interior: int, n_hull: int) -> ContactGraph:
    """Delaunay triangulation of hull points on the unit circle plus interior points."""
    from scipy.spatial import Delaunay

    # jittered even spacing keeps hull edges from degenerating
    ang = np.linspace(0, 2 * np.pi, n_hull, endpoint=False) + rng.uniform(-0.25, 0.25, n_hull) * (2 * np.pi / n_hull)
    hull = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rad = 0.55 * np.sqrt(rng.uniform(0.05, 1.0, n_interior))
    th = rng.uniform(0, 2 * np.pi, n_interior)
    inner = np.stack([rad * np.cos(th), rad * np.sin(th)], axis=1)
    pts = np.vstack([inner, hull])
    tri = Delaunay(pts)
    edges = set()
    for s in tri.simplices:
        for a, b in ((s[0], s[1]), (s[1], s[2]), (s[0], s[2])):
            edges.add((int(min(a, b)), int(max(a, b))))
    boundary = list(range(n_interior, n_interior + n_hull))
    return ContactGraph.from_edges(pts, sorted(edges), boundary)


def random_dilation_field(graph: ContactGraph, rng: np.random.Generator, strength: float = 1.0, noise: float = 0.5):
    """Boundary displacements from a random dilating affine map plus per-vertex noise."""
    xb = graph.vertex_positions[graph.interior_count :]
    c = xb.mean(axis=0)
    M = rng.normal(scale=0.3, size=(2, 2))
    A = strength * (np.eye(2) + 0.5 * (M + M.T) * 0.5) + 0.5 * strength * (M - M.T)
    g = (xb - c) @ A.T + rng.normal(scale=noise * strength, size=xb.shape) + rng.normal(size=2) * strength
    return g.reshape(-1)


def random_oracle_instance(rng: np.random.Generator, d: float, max_edges: int = 12, max_tries: int = 200):
    """A feasible small QP: random triangulation or hex cell, dilating boundary data, generic delta.

    Returns (graph, partition, qp). Draws that compress a boundary contact or
    leave the feasible set empty are rejected.
    """
    from .errors import BoundaryViolationError, GenericityError
    from .packing import build_contact_graph
    from .qpsolve import PreStress, assemble_qp, find_feasible_point, select_generic_delta
    from .rigidity import assemble_rigidity_matrix, partition_system

    shapes = [(1, 4), (1, 5), (1, 6), (2, 4), (2, 5), (0, 0)]
    for _ in range(max_tries):
        ni, nh = shapes[int(rng.integers(len(shapes)))]
        if ni == 0:
            graph = build_contact_graph(hex_cell_packing())
        else:
            graph = random_delaunay_graph(rng, ni, nh)
        if graph.n_edges > max_edges:
            continue
        strength = float(rng.choice([0.01, 0.1, 1.0])) * d
        g = random_dilation_field(graph, rng, strength=strength, noise=float(rng.uniform(0.0, 0.8)))
        part = partition_system(assemble_rigidity_matrix(graph), graph, g)
        try:
            delta = select_generic_delta(part.R, int(rng.integers(2**31))).delta
            qp = assemble_qp(part, PreStress(d, delta))
        except (BoundaryViolationError, GenericityError):
            continue
        if find_feasible_point(qp).feasible:
            return graph, part, qp
    raise RuntimeError("no feasible random instance found")
