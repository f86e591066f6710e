"""Solve, analyze and render one fixture end to end through the command line entry point."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from _common import parse_config
from granustat.cli import main as cli


@dataclass(frozen=True)
class DemoConfig:
    """End-to-end demo."""

    kind: str = "tri-lattice"
    rows: int = 6
    cols: int = 6
    d: float = 1024.0
    seed: int = 0
    outdir: str = "demo_out"


def main(cfg: DemoConfig) -> int:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    pk, sol, ana, svg = (out / n for n in ("packing.txt", "solution.txt", "analysis.txt", "contacts.svg"))
    steps = [
        ["generate", "--kind", cfg.kind, "--rows", cfg.rows, "--cols", cfg.cols, "--groups", "walls",
         "--motion", "top-compression", "--out", pk],
        ["validate", "--input", pk, "--out", out / "regularity.txt"],
        ["solve", "--input", pk, "--out", sol, "--d", cfg.d, "--seed", cfg.seed],
        ["analyze", "--input", sol, "--out", ana],
        ["render", "--input", sol, "--analysis", ana, "--out", svg, "--deformed"],
    ]
    for argv in steps:
        rc = cli([str(a) for a in argv])
        print(f"{argv[0]:<9} exit {rc}")
        if rc:
            return rc
    print(f"wrote {svg}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(parse_config(DemoConfig)))
