from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from granustat.analysis import (
    BROKEN,
    SHEARED,
    STUCK,
    analyze_solution,
    check_genericity,
    classify_contacts,
    compute_v_vectors,
    full_displacement,
    k_neighborhood,
    network_energy,
    order_parameter,
    order_parameter_bound,
    vector_genericity,
    verify_theorem,
)
from granustat.errors import EmptyNeighborhoodError
from granustat.fixtures import hex_cell_packing, lattice_packing, top_compression
from granustat.packing import ContactGraph, boundary_conditions_for, build_contact_graph
from granustat.qpsolve import PreStress, assemble_qp, select_generic_delta, solve_qp
from granustat.rigidity import assemble_rigidity_matrix, partition_system

TOL = 1e-9


@pytest.fixture(scope="module")
def hex_graph():
    return build_contact_graph(hex_cell_packing())


def rigid_field(graph, t, omega):
    x = graph.vertex_positions
    rot = omega * np.stack([-x[:, 1], x[:, 0]], axis=1)
    return (rot + np.asarray(t)).reshape(-1)


def solved(packing, d=1024.0, seed=0):
    graph = build_contact_graph(packing)
    bc = boundary_conditions_for(packing, graph, top_compression(0.1))
    part = partition_system(assemble_rigidity_matrix(graph), graph, bc.g)
    delta = select_generic_delta(part.R, seed).delta
    qp = assemble_qp(part, PreStress(d, delta))
    return graph, part, qp, solve_qp(qp)


@pytest.fixture(scope="module")
def hex_solved():
    return solved(hex_cell_packing(grouping="walls"))


class TestClassify:
    def test_translation_is_stuck(self, hex_graph):
        st_ = classify_contacts(hex_graph, rigid_field(hex_graph, (0.3, -0.2), 0.0), TOL)
        assert set(st_.states) == {STUCK}

    def test_rotation_is_sheared_pairwise(self, hex_graph):
        st_ = classify_contacts(hex_graph, rigid_field(hex_graph, (0, 0), 0.01), TOL)
        assert set(st_.states) == {SHEARED}
        # relative tangential displacement is omega times the centre distance
        assert np.allclose(st_.tangential, 0.01 * 2.0)
        assert np.allclose(st_.slack, 0.0, atol=1e-15)

    def test_rotation_is_stuck_after_rigid_removal(self, hex_graph):
        st_ = classify_contacts(hex_graph, rigid_field(hex_graph, (0, 0), 0.01), TOL, remove_rigid=True)
        assert set(st_.states) == {STUCK}

    def test_pulled_pair_is_broken(self):
        g = ContactGraph.from_edges([[0, 0], [2, 0]], [(0, 1)], boundary=[1])
        st_ = classify_contacts(g, [0.0, 0.0, 0.5, 0.0], TOL)
        assert st_.states == (BROKEN,) and st_.slack[0] == pytest.approx(0.5)

    def test_penetration_rejected(self):
        g = ContactGraph.from_edges([[0, 0], [2, 0]], [(0, 1)], boundary=[1])
        with pytest.raises(ValueError):
            classify_contacts(g, [0.0, 0.0, -0.5, 0.0], TOL)

    def test_wrong_length(self, hex_graph):
        with pytest.raises(ValueError):
            classify_contacts(hex_graph, np.zeros(5), TOL)


@settings(max_examples=40)
@given(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.05, 0.05),
)
def test_labels_invariant_under_rigid_motion(tx, ty, omega):
    graph, part, qp, sol = HEX
    U = full_displacement(part, sol.z_star)
    base = classify_contacts(graph, U, qp.tol_active, remove_rigid=True)
    moved = classify_contacts(graph, U + rigid_field(graph, (tx, ty), omega), qp.tol_active, remove_rigid=True)
    assert base.states == moved.states
    np.testing.assert_allclose(moved.tangential, base.tangential, atol=1e-12)


HEX = solved(hex_cell_packing(grouping="walls"))


class TestTheorem:
    def star(self, angles):
        ang = np.deg2rad(angles)
        pos = np.vstack([[0, 0], 2 * np.stack([np.cos(ang), np.sin(ang)], axis=1)])
        return ContactGraph.from_edges(pos, [(0, k + 1) for k in range(len(angles))], boundary=range(1, len(angles) + 1))

    def all_solid(self, g):
        return classify_contacts(g, np.zeros(2 * g.n_vertices), TOL)

    def test_sixty_degrees_passes(self):
        g = self.star([0, 60])
        a = verify_theorem(g, self.all_solid(g))
        assert a.holds and a.vertices[0].best_det == pytest.approx(np.sin(np.pi / 3))

    def test_collinear_fails(self):
        g = self.star([0, 180])
        a = verify_theorem(g, self.all_solid(g))
        assert not a.holds and a.vertices[0].best_det < 1e-15

    def test_one_edge_fails(self):
        g = self.star([0])
        assert not verify_theorem(g, self.all_solid(g)).holds

    def test_solution_passes(self):
        graph, part, qp, sol = HEX
        rep = analyze_solution(part, sol, qp.tol_active)
        assert rep.theorem_holds
        assert set(sol.active_set) <= set(rep.active_edges)


class TestVVectors:
    def test_hex_cell_cancels(self, hex_graph):
        v = compute_v_vectors(hex_graph)
        assert v.min_norm < 1e-14
        vw = compute_v_vectors(hex_graph, np.full(12, 0.75))
        assert np.allclose(vw.vectors, 0.0, atol=1e-14)

    def test_right_angle(self):
        g = TestTheorem().star([0, 90])
        assert np.allclose(compute_v_vectors(g).vectors[0], [1.0, 1.0])

    def test_genericity_reports(self, hex_graph):
        assert not check_genericity(hex_graph, np.full(12, 0.75)).generic
        delta = select_generic_delta(assemble_rigidity_matrix(hex_graph).dense()[:, :2], 5).delta
        r = check_genericity(hex_graph, delta)
        assert r.generic and r.margin > 1e-6

    def test_single_vector(self):
        r = vector_genericity([0.0, 2.0], [[1.0, 0.0]])
        assert r.generic and r.margin == pytest.approx(2.0)
        assert not vector_genericity([2.0, 0.0], [[1.0, 0.0]]).generic


class TestNeighborhoods:
    def path(self):
        return ContactGraph.from_edges([[0, 0], [2, 0], [4, 0], [6, 0]], [(0, 1), (1, 2), (2, 3)], boundary=[3])

    def test_k_zero(self):
        assert k_neighborhood(self.path(), 0, 0) == {0}

    def test_path(self):
        g = self.path()
        assert k_neighborhood(g, 0, 1) == {0, 1}
        assert k_neighborhood(g, 0, 2) == {0, 1, 2}
        assert k_neighborhood(g, 0, 10) == {0, 1, 2, 3}

    def test_hex(self, hex_graph):
        assert k_neighborhood(hex_graph, 0, 1) == set(range(7))
        assert k_neighborhood(hex_graph, 1, 1) == {0, 1, 2, 6}

    def test_errors(self):
        with pytest.raises(IndexError):
            k_neighborhood(self.path(), 9, 1)
        with pytest.raises(ValueError):
            k_neighborhood(self.path(), 0, -1)

    def test_empty(self, hex_graph):
        states = classify_contacts(hex_graph, np.zeros(14), TOL)
        with pytest.raises(EmptyNeighborhoodError):
            order_parameter(hex_graph, states, 0, 0)


class TestOrderParameter:
    def test_all_solid_and_none(self, hex_graph):
        solid = classify_contacts(hex_graph, np.zeros(14), TOL)
        assert order_parameter(hex_graph, solid, 0, 1) == 1.0
        x = hex_graph.vertex_positions
        broken = classify_contacts(hex_graph, (0.1 * x).reshape(-1), TOL)
        assert order_parameter(hex_graph, broken, 0, 1) == 0.0

    def test_partial_fractions(self, hex_graph):
        # pushing ring disk 1 (angle 0) outward opens its spoke and both ring contacts
        U = np.zeros((7, 2))
        U[1] = [0.5, 0.0]
        states = classify_contacts(hex_graph, U.reshape(-1), TOL)
        assert states.count(BROKEN) == 3
        assert order_parameter(hex_graph, states, 0, 1) == pytest.approx(9 / 12)
        U[4] = [-0.5, 0.0]
        states = classify_contacts(hex_graph, U.reshape(-1), TOL)
        assert order_parameter(hex_graph, states, 0, 1) == pytest.approx(6 / 12)

    def test_bound_record_hex(self):
        graph, part, qp, sol = HEX
        rep = analyze_solution(part, sol, qp.tol_active)
        b = rep.bound
        assert b.rho_uniform
        assert b.rho[0] == pytest.approx(b.n_solid / graph.n_edges)
        assert b.derived_bound == pytest.approx(1 / 12) and b.stated_bound == pytest.approx(7 / 12)
        assert b.meets_derived and b.consistent

    def test_bound_flags_failures(self, hex_graph):
        x = hex_graph.vertex_positions
        states = classify_contacts(hex_graph, (0.1 * x).reshape(-1), TOL)
        audit = verify_theorem(hex_graph, states)
        b = order_parameter_bound(hex_graph, states, audit)
        assert not audit.holds and not b.meets_derived and b.consistent


class TestEnergy:
    def test_single_and_ordered_sums(self, hex_graph):
        delta = np.linspace(0.5, 1.0, 12)
        U = np.random.default_rng(1).normal(size=14)
        e = network_energy(hex_graph, U, 4.0, delta)
        t = np.einsum("ij,ij->i", U.reshape(-1, 2)[hex_graph.edges[:, 1]] - U.reshape(-1, 2)[hex_graph.edges[:, 0]], hex_graph.edge_units)
        assert e == pytest.approx(0.5 / 64 * np.sum((t - 4 * delta) ** 2), rel=1e-14)
        assert network_energy(hex_graph, U, 4.0, delta, ordered_pairs=True) == pytest.approx(2 * e, rel=1e-15)

    def test_equals_qp_objective(self):
        graph, part, qp, sol = HEX
        U = full_displacement(part, sol.z_star)
        assert network_energy(graph, U, qp.d, qp.delta) == pytest.approx(sol.objective_value, rel=1e-12)


def test_rho_table_keys():
    graph, part, qp, sol = solved(lattice_packing(5, 5, grouping="walls"))
    rep = analyze_solution(part, sol, qp.tol_active, k_values=[1, 2])
    assert sorted(rep.rho_table) == [1, 2]
    assert len(rep.rho_table[1]) == graph.n_vertices
