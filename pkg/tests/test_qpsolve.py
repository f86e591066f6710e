from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from granustat.analysis import network_energy
from granustat.errors import (
    BoundaryViolationError,
    CapError,
    DimensionError,
    MaxIterError,
    RankError,
    StartInfeasibleError,
)
from granustat.fixtures import (
    hex_cell_packing,
    lattice_packing,
    preset_motions,
    random_oracle_instance,
    top_compression,
)
from granustat.packing import boundary_conditions_for, build_contact_graph
from granustat.qpsolve import (
    PreStress,
    QpProblem,
    assemble_qp,
    brute_force_solve,
    check_a1_unconstrained,
    find_feasible_point,
    genericity,
    line_margin,
    scan_for_dstar,
    select_generic_delta,
    solve_active_set,
    solve_qp,
    verify_kkt,
)
from granustat.rigidity import assemble_rigidity_matrix, partition_system

EPS = 0.1


def hex_partition(grouping="single", motions=None, g=None):
    p = hex_cell_packing(grouping=grouping)
    graph = build_contact_graph(p)
    if g is None:
        g = boundary_conditions_for(p, graph, motions or {}).g
    return partition_system(assemble_rigidity_matrix(graph), graph, g)


def radial(graph, eps):
    """Per-disk radial boundary motion u^j = eps * q^{0j} on the hex cell."""
    return (eps * graph.edge_units[:6]).reshape(-1)


def top_hex():
    return hex_partition("walls", top_compression(EPS))


def tiny(R, a, dv, scale=1.0):
    return QpProblem(np.atleast_2d(np.asarray(R, float)), np.asarray(a, float), np.asarray(dv, float), scale)


class TestPreStress:
    def test_sign_convention(self):
        ps = PreStress(4.0, [0.5, 1.0])
        assert ps.d_vec.tolist() == [-2.0, -4.0]

    @pytest.mark.parametrize("d, delta", [(0.0, [0.7]), (-1.0, [0.7]), (1.0, [0.4]), (1.0, [1.1])])
    def test_invalid(self, d, delta):
        with pytest.raises(DimensionError):
            PreStress(d, delta)


class TestGenericDelta:
    def test_hex_cell_sampler(self):
        part = hex_partition()
        s = select_generic_delta(part.R, 0)
        assert s.margin > 1e-6
        assert np.all((s.delta > 0.5) & (s.delta < 1.0))

    def test_uniform_delta_on_hex_is_rejected(self):
        part = hex_partition()
        ok, margin, _ = genericity(part.R, np.full(12, 0.75))
        assert not ok and margin < 1e-12

    def test_single_edge_never_generic(self):
        # R^T delta at the one place is -delta*q, always on the line through q
        R = np.array([[1.0, 0.0]])
        assert not genericity(R, [0.8])[0]
        # a place with one contact also leaves R rank deficient, so sampling stops earlier
        with pytest.raises(RankError):
            select_generic_delta(R, 0)

    def test_perpendicular_vector_margin(self):
        ok, m = line_margin([0.0, 0.3], [[1.0, 0.0]])
        assert ok and m == pytest.approx(0.3)

    def test_rank_deficient(self):
        with pytest.raises(RankError):
            select_generic_delta(np.array([[1.0, 0.0], [2.0, 0.0]]), 0)

    def test_seed_determinism(self):
        R = top_hex().R
        assert np.array_equal(select_generic_delta(R, 7).delta, select_generic_delta(R, 7).delta)


class TestAssemble:
    def test_objective_at_zero(self):
        part = hex_partition()
        delta = np.linspace(0.5, 1.0, 12)
        qp = assemble_qp(part, PreStress(8.0, delta))
        assert qp.objective(np.zeros(2)) == pytest.approx(0.5 * 8.0**-3 * np.sum((8.0 * delta) ** 2), rel=1e-14)

    def test_no_prestress_optimum_at_zero(self):
        qp = tiny(np.eye(2), [0.0, 0.0], [0.0, 0.0])
        sol = solve_qp(qp)
        assert np.allclose(sol.z_star, 0) and sol.objective_value == 0.0

    def test_matches_network_energy(self):
        graph = build_contact_graph(hex_cell_packing())
        part = hex_partition(g=radial(graph, EPS))
        delta = select_generic_delta(part.R, 3).delta
        qp = assemble_qp(part, PreStress(16.0, delta))
        rng = np.random.default_rng(0)
        for _ in range(20):
            z = rng.normal(size=2)
            U = np.concatenate([z, part.g])
            ref = network_energy(graph, U, 16.0, delta)
            assert abs(qp.objective(z) - ref) <= 1e-12 * max(1.0, ref)

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            assemble_qp(hex_partition(), PreStress(1.0, [0.7] * 5))

    def test_compressed_boundary_contact_rejected(self):
        part = hex_partition("sectors", preset_motions(hex_cell_packing(grouping="sectors"), "inward", EPS))
        with pytest.raises(BoundaryViolationError):
            assemble_qp(part, PreStress(10.0, np.full(12, 0.75)))


class TestPhase1:
    def test_nonnegative_a_is_feasible_at_zero(self):
        r = find_feasible_point(tiny([[1.0], [2.0]], [0.5, 0.0], [0.0, 0.0]))
        assert r.feasible and r.iterations == 0 and r.z.tolist() == [0.0]

    def test_single_constraint(self):
        r = find_feasible_point(tiny([[1.0]], [-1.0], [0.0]))
        assert r.feasible and r.residual == 0.0 and r.z[0] >= 1.0 - 1e-12

    def test_radial_inward_is_infeasible(self):
        graph = build_contact_graph(hex_cell_packing())
        part = hex_partition(g=radial(graph, -EPS))
        qp = assemble_qp(part, PreStress(10.0, np.full(12, 0.75)), check_boundary=False)
        r = find_feasible_point(qp)
        assert not r.feasible
        # six spokes each violated by eps at the symmetric point z = 0
        assert r.residual == pytest.approx(6 * EPS**2, rel=1e-12)


class TestA1:
    def test_outward_uniform_violates_a1(self):
        graph = build_contact_graph(hex_cell_packing())
        part = hex_partition(g=radial(graph, EPS))
        qp = assemble_qp(part, PreStress(10.0, np.full(12, 0.75)))
        r = check_a1_unconstrained(qp)
        assert np.allclose(r.z_hat, 0.0, atol=1e-14) and not r.holds
        sol = solve_qp(qp)
        assert sol.status == "unconstrained-feasible" and sol.active_set == ()

    def test_top_compression_satisfies_a1(self):
        part = top_hex()
        qp = assemble_qp(part, PreStress(256.0, select_generic_delta(part.R, 0).delta))
        assert check_a1_unconstrained(qp).holds

    def test_trivial(self):
        r = check_a1_unconstrained(tiny(np.eye(2), [0, 0], [0, 0]))
        assert not r.holds and np.allclose(r.z_hat, 0)

    def test_rank_error(self):
        with pytest.raises(RankError):
            check_a1_unconstrained(tiny([[1.0, 0.0]], [0.0], [0.0]))


class TestActiveSet:
    def test_one_variable(self):
        # F = (z - 2)^2 written as 0.5 * 2 * (z - 3 + 1)^2, constraint z - 3 >= 0
        qp = tiny([[1.0]], [-3.0], [1.0], scale=2.0)
        sol = solve_active_set(qp, [5.0])
        assert sol.z_star[0] == pytest.approx(3.0)
        assert sol.active_set == (0,)
        assert sol.scaled_multipliers[0] == pytest.approx(2.0)
        assert sol.lambda_star[0] == pytest.approx(1.0)
        assert sol.status == "optimal"

    def test_unconstrained_start(self):
        qp = tiny([[1.0]], [0.0], [-1.0])
        sol = solve_active_set(qp, [0.0])
        assert sol.z_star[0] == pytest.approx(1.0) and sol.status == "unconstrained-feasible"

    def test_start_infeasible(self):
        with pytest.raises(StartInfeasibleError):
            solve_active_set(tiny([[1.0]], [-3.0], [1.0]), [0.0])

    def test_max_iter(self):
        part = lattice_partition()
        qp = assemble_qp(part, PreStress(64.0, select_generic_delta(part.R, 0).delta))
        z0 = find_feasible_point(qp).z
        with pytest.raises(MaxIterError) as info:
            solve_active_set(qp, z0, max_iter=1)
        assert info.value.z is not None and info.value.residuals is not None

    def test_hex_top_compression_matches_oracle(self):
        part = top_hex()
        qp = assemble_qp(part, PreStress(1024.0, select_generic_delta(part.R, 0).delta))
        a, b = solve_qp(qp), brute_force_solve(qp)
        assert np.linalg.norm(a.z_star - b.z_star) <= 1e-8 * qp.ref
        assert a.active_set == b.active_set and a.active_set

    def test_monotone_descent(self):
        part = lattice_partition()
        qp = assemble_qp(part, PreStress(64.0, select_generic_delta(part.R, 1).delta))
        sol = solve_qp(qp)
        h = np.array(sol.history)
        assert np.all(np.diff(h) <= 1e-12 * max(1.0, h[0]))
        assert sol.kkt.passed

    def test_lambda_zero_off_active_set(self):
        part = lattice_partition()
        qp = assemble_qp(part, PreStress(64.0, select_generic_delta(part.R, 2).delta))
        sol = solve_qp(qp)
        off = np.setdiff1d(np.arange(qp.E), sol.active_set)
        assert np.all(sol.lambda_star[off] == 0.0)


def lattice_partition(n=6):
    p = lattice_packing(n, n, grouping="walls")
    graph = build_contact_graph(p)
    bc = boundary_conditions_for(p, graph, top_compression(EPS))
    return partition_system(assemble_rigidity_matrix(graph), graph, bc.g)


class TestBruteForce:
    def test_cap(self):
        part = lattice_partition(5)
        qp = assemble_qp(part, PreStress(4.0, select_generic_delta(part.R, 0).delta))
        with pytest.raises(CapError):
            brute_force_solve(qp)

    def test_infeasible(self):
        sol = brute_force_solve(tiny([[1.0], [-1.0]], [-2.0, -2.0], [0.0, 0.0]))
        assert sol.status == "infeasible" and sol.z_star is None

    def test_unconstrained(self):
        sol = brute_force_solve(tiny([[1.0]], [0.0], [-1.0]))
        assert sol.active_set == () and sol.status == "unconstrained-feasible"

    def test_residuals_tiny(self):
        part = top_hex()
        qp = assemble_qp(part, PreStress(64.0, select_generic_delta(part.R, 0).delta))
        sol = brute_force_solve(qp)
        assert sol.kkt.worst <= 1e-10


class TestKkt:
    def test_stationarity_flagged(self):
        qp = tiny([[1.0]], [0.0], [-1.0])
        rep = verify_kkt(qp, [3.0], [0.0])
        assert rep.stationarity > 0 and not rep.passed

    def test_negative_multiplier_flagged(self):
        qp = tiny([[1.0]], [-3.0], [1.0])
        rep = verify_kkt(qp, [3.0], [-1.0])
        assert rep.dual > 0 and not rep.passed

    def test_dimension(self):
        with pytest.raises(DimensionError):
            verify_kkt(tiny([[1.0]], [0.0], [0.0]), [1.0, 2.0], [0.0])


class TestScan:
    def test_hex_ladder(self):
        part = top_hex()
        delta = select_generic_delta(part.R, 0).delta
        ladder = [2.0**k for k in range(11)]
        t = scan_for_dstar(part, delta, ladder)
        assert [r.d for r in t.rows] == ladder
        assert all(r.status == "optimal" and r.n_active >= 1 for r in t.rows)
        assert t.stabilized

    def test_a1_violated_everywhere(self):
        graph = build_contact_graph(hex_cell_packing())
        part = hex_partition(g=radial(graph, EPS))
        t = scan_for_dstar(part, np.full(12, 0.75), [1.0, 10.0, 100.0])
        assert all(r.status == "unconstrained-feasible" for r in t.rows)
        assert t.d_star is None

    def test_single_value(self):
        part = top_hex()
        t = scan_for_dstar(part, select_generic_delta(part.R, 0).delta, [64.0])
        assert len(t.rows) == 1

    def test_increasing_required(self):
        with pytest.raises(ValueError):
            scan_for_dstar(top_hex(), np.full(12, 0.75), [4.0, 2.0])


@settings(max_examples=25)
@given(st.integers(0, 2**31 - 1), st.sampled_from([4.0, 64.0, 1024.0]), st.floats(1e-3, 1e3))
def test_scaling_invariance(seed, d, c):
    rng = np.random.default_rng(seed)
    _, part, qp = random_oracle_instance(rng, d)
    base = solve_qp(qp)
    other = solve_qp(QpProblem(qp.R, qp.a, qp.d_vec, qp.scale * c, qp.d, qp.delta))
    assert np.allclose(base.z_star, other.z_star, rtol=0, atol=1e-10 * qp.ref)
    assert base.active_set == other.active_set
    assert np.array_equal(base.lambda_star == 0, other.lambda_star == 0)
    np.testing.assert_allclose(other.scaled_multipliers, c * base.scaled_multipliers, rtol=1e-8, atol=1e-12 * qp.ref * other.scale)


@settings(max_examples=30)
@given(st.integers(0, 2**31 - 1), st.sampled_from([4.0, 64.0, 1024.0]))
def test_unique_certified_minimizer_and_boundary_optimality(seed, d):
    rng = np.random.default_rng(seed)
    _, _, qp = random_oracle_instance(rng, d)
    b = brute_force_solve(qp)
    assert b.distinct_minimizers == 1
    if check_a1_unconstrained(qp).holds:
        assert solve_qp(qp).active_set
