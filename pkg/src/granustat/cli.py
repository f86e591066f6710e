"""Command line: ``granustat <generate|validate|solve|analyze|render> [flags]``.

Exit codes: 0 success, 1 validation failed, 2 usage or parse error,
3 infeasible boundary data, 4 input has the wrong solution status.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .analysis import analyze_solution, full_displacement
from .errors import BoundaryViolationError, GranustatError, ParseError
from .fixtures import hex_cell_packing, lattice_packing, preset_motions, square_lattice_packing
from .netvalidate import check_regular_triangulation
from .packing import boundary_conditions_for, build_contact_graph, check_a3_gap_condition
from .qpsolve import (
    PreStress,
    QpSolution,
    assemble_qp,
    check_a1_unconstrained,
    find_feasible_point,
    genericity,
    scan_for_dstar,
    select_generic_delta,
    solve_qp,
)
from .render import render_svg
from .rigidity import assemble_rigidity_matrix, partition_system, write_matrix_market

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_STATUS = 0, 1, 2, 3, 4

CONVENTION = "d_vec=-d*delta delta_in_[0.5,1] lambda_unscaled"
CONTACT_CONVENTION = "rigid_fit_removed stuck=zero_relative_displacement sheared=zero_normal_nonzero_tangential"


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path | None = None
    out: Path | None = None
    d_ladder: tuple[float, ...] = (256.0,)
    seed: int = 0
    tol_contact: float | None = None
    tol_active: float | None = None
    tol_kkt: float = 1e-8
    tol_collinear: float = 1e-9
    tol_theorem: float = 1e-6
    tol_generic: float = 1e-6
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("tol_contact", "tol_active", "tol_kkt", "tol_collinear", "tol_theorem", "tol_generic"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        lad = self.d_ladder
        if not lad or any(d <= 0 for d in lad) or any(b <= a for a, b in zip(lad, lad[1:])):
            raise ValueError("d ladder must be positive and strictly increasing")


def _parse_ladder(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="granustat", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def tols(p):
        p.add_argument("--tol-contact", type=float)
        p.add_argument("--tol-collinear", type=float, default=1e-9)

    g = sub.add_parser("generate", help="write a packing file")
    g.add_argument("--kind", required=True, choices=["hex-cell", "tri-lattice", "square-lattice"])
    g.add_argument("--rows", type=int, default=4)
    g.add_argument("--cols", type=int, default=4)
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--groups", default="single", choices=["single", "walls", "sectors"])
    g.add_argument("--motion", default="none", choices=["none", "outward", "inward", "top-compression"])
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--kappa", type=float, default=2.0)
    g.add_argument("--out", required=True)

    v = sub.add_parser("validate", help="regularity report for a packing")
    v.add_argument("--input", required=True)
    v.add_argument("--out")
    v.add_argument("--cell-mode", default="auto", choices=["auto", "exhaustive", "sampled"])
    tols(v)

    s = sub.add_parser("solve", help="solve the constrained problem")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--d", type=float)
    s.add_argument("--d-ladder")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--uniform-delta", type=float)
    s.add_argument("--motion", choices=["outward", "inward", "top-compression"])
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--force", action="store_true")
    s.add_argument("--export-matrix")
    s.add_argument("--tol-active", type=float)
    s.add_argument("--tol-kkt", type=float, default=1e-8)
    s.add_argument("--tol-generic", type=float, default=1e-6)
    s.add_argument("--tol-theorem", type=float, default=1e-6)
    tols(s)

    a = sub.add_parser("analyze", help="contact report for a solution")
    a.add_argument("--input", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--tol-theorem", type=float, default=1e-6)

    r = sub.add_parser("render", help="SVG of a solution and its analysis")
    r.add_argument("--input", required=True)
    r.add_argument("--analysis", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--deformed", action="store_true")
    return ap


def config_from_args(args) -> RunConfig:
    ladder = (256.0,)
    if getattr(args, "d_ladder", None):
        ladder = _parse_ladder(args.d_ladder)
    elif getattr(args, "d", None) is not None:
        ladder = (args.d,)
    seed = getattr(args, "seed", 0)
    env = os.environ.get("GRANUSTAT_SEED")
    if env is not None:
        seed = int(env)
    return RunConfig(
        command=args.command,
        input=Path(args.input) if getattr(args, "input", None) else None,
        out=Path(args.out) if getattr(args, "out", None) else None,
        d_ladder=ladder,
        seed=seed,
        tol_contact=getattr(args, "tol_contact", None),
        tol_active=getattr(args, "tol_active", None),
        tol_kkt=getattr(args, "tol_kkt", 1e-8),
        tol_collinear=getattr(args, "tol_collinear", 1e-9),
        tol_theorem=getattr(args, "tol_theorem", 1e-6),
        tol_generic=getattr(args, "tol_generic", 1e-6),
    )


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    if args.kind == "hex-cell":
        packing = hex_cell_packing(args.radius, args.groups)
    elif args.kind == "tri-lattice":
        if args.groups == "sectors":
            raise ValueError("sectors grouping exists only for the hex cell")
        packing = lattice_packing(args.rows, args.cols, args.radius, args.groups)
    else:
        packing = square_lattice_packing(args.rows, args.cols, args.radius)
    motions = preset_motions(packing, args.motion, args.eps, args.kappa)
    io.write_packing(args.out, packing, motions)
    return EXIT_OK


def regularity_items(report) -> list[tuple[str, object]]:
    return [
        ("overall", report.overall),
        ("is_triangulation", report.is_triangulation),
        ("triangulation_reasons", "; ".join(report.triangulation_reasons) or "none"),
        ("n_faces", report.n_faces),
        ("has_sequential_construction", report.has_sequential_construction),
        ("triangle_order", " ".join("-".join(map(str, t)) for t in report.triangle_order) or "none"),
        ("boundary_compatible", report.boundary_compatible),
        ("boundary_violations", report.boundary_violations or "none"),
        ("is_cell_connected", report.is_cell_connected),
        ("cell_mode", report.cell_mode),
        ("cell_subsets_checked", report.cell_subsets_checked),
        ("cell_witness", report.cell_witness or "none"),
        ("cell_connected_interior_only", report.cell_strict_interior),
        ("cell_interior_only_witness", report.cell_strict_witness or "none"),
    ]


def cmd_validate(args, cfg: RunConfig) -> int:
    packing, _ = io.read_packing(cfg.input)
    graph = build_contact_graph(packing, cfg.tol_contact)
    report = check_regular_triangulation(graph, cfg.tol_collinear, cell_mode=args.cell_mode)
    text = io.dumps_report([("report", "granustat regularity v1")] + regularity_items(report))
    if cfg.out:
        cfg.out.write_text(text)
    sys.stdout.write(text)
    if not report.is_triangulation:
        sys.stdout.write("not a triangulation\n")
    return EXIT_OK if report.overall else EXIT_INVALID


def _solve_items(cfg, packing, motions, graph, delta_info, tol_contact) -> list[tuple[str, object]]:
    return [
        ("report", "granustat solution v1"),
        ("convention", CONVENTION),
        ("seed", cfg.seed),
        ("d_ladder", list(cfg.d_ladder)),
        ("tol_contact", tol_contact),
        ("tol_kkt", cfg.tol_kkt),
        ("tol_generic", cfg.tol_generic),
        ("tol_theorem", cfg.tol_theorem),
        ("n_interior", graph.interior_count),
        ("n_boundary", graph.boundary_count),
        ("n_edges", graph.n_edges),
        ("vertex_order", graph.original_ids.tolist()),
        ("edges", graph.original_ids[graph.edges].reshape(-1).tolist()),
    ] + delta_info


def cmd_solve(args, cfg: RunConfig) -> int:
    packing, motions = io.read_packing(cfg.input)
    if args.motion:
        motions = preset_motions(packing, args.motion, args.eps, args.kappa)
    tol_contact = cfg.tol_contact if cfg.tol_contact is not None else packing.default_tol_contact()
    graph = build_contact_graph(packing, tol_contact)
    reg = check_regular_triangulation(graph, cfg.tol_collinear)
    if not reg.overall and not args.force:
        sys.stderr.write("packing is not a regular triangulation (use --force)\n")
        return EXIT_INVALID
    bc = boundary_conditions_for(packing, graph, motions)
    a3 = check_a3_gap_condition(packing, graph, bc)
    Rfull = assemble_rigidity_matrix(graph)
    if args.export_matrix:
        write_matrix_market(args.export_matrix, Rfull)
    part = partition_system(Rfull, graph, bc.g)

    if args.uniform_delta is not None:
        delta = np.full(graph.n_edges, float(args.uniform_delta))
        ok, margin, _ = genericity(part.R, delta, cfg.tol_generic)
        delta_info = [("delta_source", "uniform"), ("delta", delta), ("generic", ok), ("genericity_margin", margin)]
    else:
        sample = select_generic_delta(part.R, cfg.seed, cfg.tol_generic)
        delta = sample.delta
        delta_info = [
            ("delta_source", "sampled"),
            ("delta", delta),
            ("generic", True),
            ("genericity_margin", sample.margin),
            ("delta_attempts", sample.attempts),
        ]
    items = _solve_items(cfg, packing, motions, graph, delta_info, tol_contact)
    items += [("regular_triangulation", reg.overall), ("a3_passed", a3.passed), ("a3_violations", len(a3.violations))]

    d = cfg.d_ladder[-1]
    try:
        qp = assemble_qp(part, PreStress(d, delta), tol_active=cfg.tol_active)
        boundary_ok = True
    except BoundaryViolationError:
        qp = assemble_qp(part, PreStress(d, delta), tol_active=cfg.tol_active, check_boundary=False)
        boundary_ok = False
    items += [("d", d), ("scale", qp.scale), ("tol_active", qp.tol_active), ("boundary_contacts_ok", boundary_ok)]

    feas = find_feasible_point(qp)
    if not boundary_ok or not feas.feasible:
        items += [("status", "infeasible"), ("phase1_residual", feas.residual)]
        items += io.packing_report_items(packing, motions)
        cfg.out.write_text(io.dumps_report(items))
        sys.stderr.write(f"infeasible: phase-1 residual {feas.residual:.6g}\n")
        return EXIT_INFEASIBLE

    a1 = check_a1_unconstrained(qp)
    sol = solve_qp(qp, tol_kkt=cfg.tol_kkt)
    items += [
        ("status", sol.status),
        ("a1_holds", a1.holds),
        ("a1_min_slack", a1.min_slack),
        ("phase1_residual", feas.residual),
        ("objective", sol.objective_value),
        ("iterations", sol.iterations),
        ("active_set", list(sol.active_set) or "none"),
        ("z", sol.z_star),
        ("lambda", sol.lambda_star),
        ("lambda_scaled", sol.scaled_multipliers),
        ("kkt_stationarity", sol.kkt.stationarity),
        ("kkt_primal", sol.kkt.primal),
        ("kkt_complementarity", sol.kkt.complementarity),
        ("kkt_dual", sol.kkt.dual),
        ("kkt_passed", sol.kkt.passed),
    ]
    if len(cfg.d_ladder) > 1:
        table = scan_for_dstar(part, delta, cfg.d_ladder, cfg.tol_theorem)
        for k, row in enumerate(table.rows):
            ok = "none" if row.theorem_ok is None else io.fmt(row.theorem_ok)
            items.append((f"scan.{k}", f"{io.fmt(row.d)} {row.status} {row.n_active} {ok}"))
        items.append(("d_star", table.d_star))
    items += io.packing_report_items(packing, motions)
    cfg.out.write_text(io.dumps_report(items))
    return EXIT_OK


def _rebuild(rep):
    packing, motions = io.packing_from_report(rep)
    tol_contact = float(rep["tol_contact"])
    graph = build_contact_graph(packing, tol_contact)
    bc = boundary_conditions_for(packing, graph, motions)
    part = partition_system(assemble_rigidity_matrix(graph), graph, bc.g)
    return packing, graph, part


def cmd_analyze(args, cfg: RunConfig) -> int:
    rep = io.read_report(cfg.input)
    status = rep.get("status")
    if status != "optimal":
        sys.stderr.write(f"analysis needs an optimal solution, got status {status}\n")
        return EXIT_STATUS
    packing, graph, part = _rebuild(rep)
    z = io.report_floats(rep, "z")
    tol_active = float(rep["tol_active"])
    sol = QpSolution(z, None, tuple(io.report_ints(rep, "active_set")), float(rep["objective"]), None, status)
    cr = analyze_solution(part, sol, tol_active, cfg.tol_theorem)
    oid = graph.original_ids
    items: list[tuple[str, object]] = [
        ("report", "granustat analysis v1"),
        ("convention", CONTACT_CONVENTION),
        ("tol_active", tol_active),
        ("tol_theorem", cfg.tol_theorem),
        ("theorem_holds", cr.theorem_holds),
        ("n_broken", cr.states.count("broken")),
        ("n_stuck", cr.states.count("stuck")),
        ("n_sheared", cr.states.count("sheared")),
        ("active_edges", list(cr.active_edges) or "none"),
        ("qp_active_set", list(cr.qp_active) or "none"),
    ]
    for l, ((i, j), st) in enumerate(zip(graph.edges, cr.states.states)):
        items.append((f"edge.{l}", f"{oid[i]} {oid[j]} {st} {io.fmt(cr.states.slack[l])} {io.fmt(cr.states.tangential[l])}"))
    for va in cr.audit.vertices:
        items.append((f"theorem.{va.original_id}", f"{'PASS' if va.passed else 'FAIL'} {len(va.active_edges)} {io.fmt(va.best_det)}"))
    b = cr.bound
    items += [
        ("n_solid", b.n_solid),
        ("derived_bound", b.derived_bound),
        ("stated_bound", b.stated_bound),
        ("meets_derived_bound", b.meets_derived),
        ("meets_stated_bound", b.meets_stated),
        ("rho_uniform", b.rho_uniform),
        ("rho_vertex_order", oid.tolist()),
    ]
    for k, row in cr.rho_table.items():
        items.append((f"rho.{k}", row))
    cfg.out.write_text(io.dumps_report(items))
    return EXIT_OK


def cmd_render(args, cfg: RunConfig) -> int:
    rep = io.read_report(cfg.input)
    ana = io.read_report(args.analysis)
    packing, graph, part = _rebuild(rep)
    states = []
    for l in range(graph.n_edges):
        try:
            states.append(ana[f"edge.{l}"].split()[2])
        except KeyError:
            raise ParseError(f"analysis lacks edge.{l}") from None
    U = None
    if args.deformed:
        U = full_displacement(part, io.report_floats(rep, "z")).reshape(-1, 2)
    svg = render_svg(
        graph.vertex_positions,
        packing.radii[graph.original_ids],
        graph.edges,
        states,
        displacement=U,
        labels=graph.original_ids.tolist(),
    )
    cfg.out.write_text(svg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "validate":
            return cmd_validate(args, cfg)
        if args.command == "solve":
            return cmd_solve(args, cfg)
        if args.command == "analyze":
            return cmd_analyze(args, cfg)
        return cmd_render(args, cfg)
    except (ParseError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except GranustatError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
