"""Compare the active-set solver against exhaustive enumeration on random small problems."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from _common import parse_config
from granustat.fixtures import random_oracle_instance
from granustat.qpsolve import brute_force_solve, solve_qp


@dataclass(frozen=True)
class SweepConfig:
    """Random oracle sweep."""

    n: int = 1000
    seed: int = 0
    d_values: tuple[float, ...] = (4.0, 64.0, 1024.0)
    max_edges: int = 12


def main(cfg: SweepConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    status, bad = Counter(), []
    worst_dz = worst_kkt = 0.0
    iters = []
    t0 = time.perf_counter()
    for k in range(cfg.n):
        d = cfg.d_values[k % len(cfg.d_values)]
        _, _, qp = random_oracle_instance(rng, d, cfg.max_edges)
        a, b = solve_qp(qp), brute_force_solve(qp, cap=cfg.max_edges)
        dz = float(np.linalg.norm(a.z_star - b.z_star)) / qp.ref
        worst_dz = max(worst_dz, dz)
        worst_kkt = max(worst_kkt, a.kkt.worst, b.kkt.worst)
        status[a.status] += 1
        iters.append(a.iterations)
        if dz > 1e-8 or a.active_set != b.active_set:
            bad.append(k)
    dt = time.perf_counter() - t0
    print(f"instances        {cfg.n}")
    print(f"statuses         {dict(status)}")
    print(f"mismatches       {len(bad)} {bad[:10]}")
    print(f"max |dz|/ref     {worst_dz:.3e}")
    print(f"max KKT residual {worst_kkt:.3e}")
    print(f"iterations       mean {np.mean(iters):.2f} max {max(iters)}")
    print(f"time             {dt:.2f}s")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main(parse_config(SweepConfig)))
