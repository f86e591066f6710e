"""Scan the cutoff d for top-wall compression on lattice patches and report when the theorem kicks in."""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass

import numpy as np

from _common import parse_config
from granustat.fixtures import hex_cell_packing, lattice_packing, top_compression
from granustat.packing import boundary_conditions_for, build_contact_graph
from granustat.qpsolve import scan_for_dstar, select_generic_delta
from granustat.rigidity import assemble_rigidity_matrix, partition_system


@dataclass(frozen=True)
class DScanConfig:
    """d-ladder scan over hex cell and n x n lattices."""

    sizes: tuple[int, ...] = (3, 4, 5, 6, 7, 8)
    seeds: tuple[int, ...] = (0, 1, 2)
    eps: float = 0.1
    kappa: float = 2.0
    k_min: int = 0
    k_max: int = 12
    out: str = "-"


def fixture(n: int):
    return hex_cell_packing(grouping="walls") if n == 3 else lattice_packing(n, n, grouping="walls")


def main(cfg: DScanConfig) -> None:
    ladder = [2.0**k for k in range(cfg.k_min, cfg.k_max + 1)]
    fh = sys.stdout if cfg.out == "-" else open(cfg.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["size", "N", "E", "seed", "d", "status", "n_active", "theorem_ok", "objective", "d_star"])
    for n in cfg.sizes:
        packing = fixture(n)
        graph = build_contact_graph(packing)
        bc = boundary_conditions_for(packing, graph, top_compression(cfg.eps, cfg.kappa))
        part = partition_system(assemble_rigidity_matrix(graph), graph, bc.g)
        for seed in cfg.seeds:
            delta = select_generic_delta(part.R, seed).delta
            table = scan_for_dstar(part, delta, ladder)
            for r in table.rows:
                w.writerow([n, graph.n_vertices, graph.n_edges, seed, r.d, r.status, r.n_active,
                            r.theorem_ok, f"{r.objective:.10g}" if r.objective is not None else "", table.d_star])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main(parse_config(DScanConfig))
