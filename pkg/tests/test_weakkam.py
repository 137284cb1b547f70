"""Unit tests for the discrete weak-KAM module: shortest distances against
an independent scipy oracle, potential inequalities, invariant sets,
channel shape, crossing surgery."""

import math

import numpy as np
import pytest
from scipy.sparse.csgraph import bellman_ford

from manelab.lagrangian import (pendulum, free_particle, PhaseState,
                                el_flow, flow_window)
from manelab.weakkam import (WeakKAMError, TIME_MENU, build_action_graph,
                             critical_value, mane_potential, lax_oleinik,
                             peierls_barrier, classify_and_extract_sets,
                             energy_resolution, quadratic_bound_check,
                             build_channel_continuous, closed_curve_actions,
                             crossing_gain, second_order_action_bound)


@pytest.fixture(scope="module")
def pend():
    return pendulum()


@pytest.fixture(scope="module")
def graph(pend):
    return build_action_graph(pend)


def test_critical_value_pendulum(pend, graph):
    cv = critical_value(pend, graph)
    assert abs(cv["value"] - 1.0) < 0.02
    assert cv["bracket"] < 1e-5
    assert cv["certificate_cycle"] is not None


def test_critical_value_free_particle():
    free = free_particle()
    g = build_action_graph(free)
    cv = critical_value(free, g)
    assert abs(cv["value"]) < 1e-5


def test_shortest_distances_against_scipy(pend, graph):
    for c in (1.0, 1.5):
        mat = graph.min_weight_matrix(c)
        sources = [0, 57, 140]
        ours = graph.shortest_distances(c, sources)
        ref = bellman_ford(mat, indices=sources)
        assert np.allclose(ours, ref, atol=1e-10)


def test_mane_potential_triangle_inequality(pend, graph):
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.0, 2.0 * math.pi, size=6)
    vals = {}
    for x in pts:
        for y in pts:
            vals[(x, y)] = mane_potential(pend, 1.0, x, y, graph)
    for x in pts:
        for y in pts:
            for z in pts:
                assert vals[(x, z)] <= vals[(x, y)] + vals[(y, z)] + 1e-9


def test_mane_potential_symmetrized_nonnegative(pend, graph):
    rng = np.random.default_rng(4)
    for x, y in rng.uniform(0.0, 2.0 * math.pi, size=(10, 2)):
        fwd = mane_potential(pend, 1.0, x, y, graph)
        bwd = mane_potential(pend, 1.0, y, x, graph)
        assert fwd + bwd >= -1e-9


def test_mane_potential_subcritical_is_minus_infinity(pend, graph):
    val = mane_potential(pend, 0.5, 0.3, 2.0, graph)
    assert val == float("-inf")


def test_weak_kam_solution_matches_truth(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    xs = graph.nodes
    truth = 4.0 * (1.0 - np.cos(
        (np.mod(xs + math.pi, 2.0 * math.pi) - math.pi) / 2.0))
    err = u.values - truth
    assert np.max(err) - np.min(err) < 0.02


def test_domination_holds_everywhere(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    assert u.domination_violations(graph) == 0


def test_lax_oleinik_rejects_subcritical(pend, graph):
    with pytest.raises(WeakKAMError):
        lax_oleinik(pend, 0.5, graph)


def test_peierls_loop_barrier_nonnegative_and_vanishes_on_aubry(pend,
                                                                graph):
    b = peierls_barrier(graph, 1.0)
    assert np.min(b) >= -1e-12
    u = lax_oleinik(pend, 1.0, graph)
    _, aubry, _ = classify_and_extract_sets(pend, 1.0, u, graph)
    for idx in aubry.node_indices:
        assert abs(b[int(idx)]) <= 1e-9


def test_invariant_set_inclusions(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    mather, aubry, mane = classify_and_extract_sets(pend, 1.0, u, graph)
    a_nodes = set(map(int, aubry.node_indices))
    m_nodes = set(map(int, mather.node_indices))
    assert m_nodes <= a_nodes
    assert aubry.contains(mather)
    assert mane.contains(aubry)


def test_pendulum_aubry_is_the_static_point(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    _, aubry, _ = classify_and_extract_sets(pend, 1.0, u, graph)
    assert len(aubry.points) == 1
    x, v = aubry.points[0]
    assert abs(x) < 1e-9 and abs(v) < 1e-9


def test_free_particle_aubry_is_whole_torus():
    free = free_particle()
    g = build_action_graph(free)
    u = lax_oleinik(free, 0.0, g)
    _, aubry, _ = classify_and_extract_sets(free, 0.0, u, g)
    assert len(aubry.points) == g.n_nodes
    assert np.max(np.abs(aubry.points[:, 1])) < 1e-12


def test_mane_energy_within_resolution(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    _, _, mane = classify_and_extract_sets(pend, 1.0, u, graph)
    pts = mane.points
    e = 0.5 * pts[:, 1] ** 2 + np.cos(pts[:, 0])
    vmax = float(np.max(np.abs(pts[:, 1])))
    assert np.max(np.abs(e - 1.0)) <= energy_resolution(graph, vmax)


def test_quadratic_bound_measurement(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    static = PhaseState(position=[0.0], velocity=[0.0], period=pend.period)
    k = quadratic_bound_check(pend, u, static, radius=1.0)
    assert 0.4 <= k <= 0.7


def test_quadratic_bound_rejects_small_radius(pend, graph):
    u = lax_oleinik(pend, 1.0, graph)
    static = PhaseState(position=[0.0], velocity=[0.0], period=pend.period)
    with pytest.raises(WeakKAMError):
        quadratic_bound_check(pend, u, static, radius=graph.h)


def test_channel_shape():
    eps, rho, gamma_bar = 0.1, 0.03, 0.5
    phi = build_channel_continuous([0.25], eps, rho, gamma_bar)
    xs = np.linspace(0.0, 1.0, 2001)
    vals = phi(xs)
    assert np.min(vals) >= 0.0
    assert phi(0.25) < 1e-12
    plateau = eps * gamma_bar ** 2 / 32.0
    far = np.abs(xs - 0.25) >= gamma_bar / 4.0
    assert np.min(vals[far]) >= plateau - 1e-12
    beyond_rho = np.abs(xs - 0.25) >= rho
    assert np.min(vals[beyond_rho]) >= eps * rho ** 2 / 4.0
    assert phi.c2_norm() < 10.0 * eps


def test_channel_rejects_bad_ordering():
    with pytest.raises(WeakKAMError):
        build_channel_continuous([0.25], 0.1, rho=0.2, gamma_bar=0.5)


def test_closed_curve_actions_nonnegative(pend, graph):
    acts = closed_curve_actions(pend, 1.0, 200, seed=5, graph=graph)
    assert float(np.min(acts)) >= -1e-3


def test_crossing_gain_exchange(pend):
    # two separatrix branches crossing transversally near the bottom
    up = flow_window(pend, PhaseState(position=[math.pi],
                                      velocity=[2.0], period=pend.period),
                     t_center=0.0, half_width=2.0, step=1e-3)
    down = flow_window(pend, PhaseState(position=[math.pi],
                                        velocity=[-2.0],
                                        period=pend.period),
                       t_center=0.0, half_width=2.0, step=1e-3)
    res = crossing_gain(pend, None, up, down, t0=0.0)
    assert "rejected" not in res
    assert res["gain"] > 0


def test_crossing_gain_rejects_tangential(pend):
    # parallel nearby curves: position gap without velocity gap
    a = flow_window(pend, PhaseState(position=[1.0], velocity=[0.5],
                                     period=pend.period),
                    t_center=0.0, half_width=2.0, step=1e-3)
    b = flow_window(pend, PhaseState(position=[1.3], velocity=[0.5],
                                     period=pend.period),
                    t_center=0.0, half_width=2.0, step=1e-3)
    res = crossing_gain(pend, None, a, b, t0=0.0)
    assert "rejected" in res
    assert "angle" in res["rejected"]


def test_second_order_action_bound(pend):
    ref = flow_window(pend, PhaseState(position=[1.0], velocity=[0.5],
                                       period=pend.period),
                      t_center=0.0, half_width=1.0, step=1e-3)
    nearby = []
    for d in (1e-3, 1e-2):
        pert = flow_window(pend, PhaseState(position=[1.0 + d],
                                            velocity=[0.5],
                                            period=pend.period),
                           t_center=0.0, half_width=1.0, step=1e-3)
        nearby.append(pert)
    out = second_order_action_bound(pend, ref, nearby)
    assert out["holds"]
