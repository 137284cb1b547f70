"""Unit tests for the cat-map shadowing module: the shadow is a genuine
periodic orbit near the pseudo-orbit, closeness decay, expansivity,
escape segmentation."""

import math

import numpy as np
import pytest

from manelab.shadowing import (ShadowingError, CAT_LAMBDA, CAT_LOG_LAMBDA,
                               DELTA0, cat_map, perturbed_cat_map,
                               cat_matrix_power, cat_periodic_points,
                               cat_periodic_orbit, torus_delta,
                               torus_distance, shadow_pseudo_orbit,
                               shadow_specification, SpecificationNumeric,
                               exponential_closeness, expansivity_estimate,
                               EscapeThresholds, escape_segmentation)


@pytest.fixture(scope="module")
def model():
    return cat_map()


def _random_periodic_pseudo_orbit(model, rng, length, delta):
    base = cat_periodic_orbit(length)
    return np.mod(base + rng.uniform(-delta / 4.0, delta / 4.0,
                                     size=base.shape), 1.0)


def test_cat_matrix_power_exact():
    a = np.array([[2, 1], [1, 1]])
    p = np.linalg.matrix_power(a, 9)
    assert (cat_matrix_power(9) == p).all()


def test_periodic_points_are_periodic(model):
    for n in (1, 2, 5, 7):
        pts = cat_periodic_points(n)
        for p in pts[:20]:
            q = model.orbit(p, n + 1)[-1]
            assert float(torus_distance(q, p)) < 1e-9


def test_periodic_orbit_has_exact_period(model):
    for n in (7, 50, 200):
        orb = cat_periodic_orbit(n)
        assert len(orb) == n
        nxt = model.step(orb)
        assert float(np.max(torus_distance(nxt,
                                           np.roll(orb, -1, axis=0)))) \
            < 1e-9


def test_shadow_is_a_genuine_periodic_orbit(model):
    rng = np.random.default_rng(31)
    pts = _random_periodic_pseudo_orbit(model, rng, 100, 1e-3)
    res = shadow_pseudo_orbit(model, pts)
    orb = res.shadow_orbit
    defects = torus_distance(model.step(orb), np.roll(orb, -1, axis=0))
    assert float(np.max(defects)) < 1e-9


def test_shadow_error_within_geometric_series_bound(model):
    rng = np.random.default_rng(32)
    bound = 1.0 / (1.0 - 1.0 / CAT_LAMBDA)
    for delta in (1e-2, 1e-3):
        pts = _random_periodic_pseudo_orbit(model, rng, 60, delta)
        jump = float(np.max(np.linalg.norm(
            torus_delta(np.roll(pts, -1, axis=0), model.step(pts)),
            axis=1)))
        res = shadow_pseudo_orbit(model, pts)
        assert res.sup_error <= bound * jump + 1e-12
        assert res.e_measured <= bound + 1e-9


def test_shadow_refuses_large_jumps(model):
    pts = np.array([[0.1, 0.2], [0.9, 0.7], [0.3, 0.4]])
    with pytest.raises(ShadowingError):
        shadow_pseudo_orbit(model, pts)


def test_shadow_perturbed_map():
    pm = perturbed_cat_map(1e-3)
    rng = np.random.default_rng(33)
    base = cat_periodic_orbit(40)
    pts = np.mod(base + rng.uniform(-2e-3, 2e-3, size=base.shape), 1.0)
    res = shadow_pseudo_orbit(pm, pts)
    orb = res.shadow_orbit
    defects = torus_distance(pm.step(orb), np.roll(orb, -1, axis=0))
    assert float(np.max(defects)) < 1e-9


def test_specification_shadowing(model):
    orb = cat_periodic_orbit(21)
    spec = SpecificationNumeric(
        segments=[(p.copy(), 1) for p in orb], jumps=[0.0], periodic=True)
    res = shadow_specification(model, spec)
    assert res.sup_error < 1e-9


def test_exponential_closeness_rate(model):
    rng = np.random.default_rng(34)
    for window in (5, 10, 20):
        x = rng.random(2)
        amp = 0.02 * math.exp(-CAT_LOG_LAMBDA * window)
        y = np.mod(x + amp * model.e_u, 1.0)
        prof = exponential_closeness(model, x, y, window=window)
        assert abs(prof.decay_rate) >= 0.9 * CAT_LOG_LAMBDA
        assert prof.domination_constant <= 1.0 + 1e-9


def test_exponential_closeness_rejects_separating(model):
    x = np.array([0.3, 0.4])
    y = np.mod(x + 0.04 * model.e_u, 1.0)
    with pytest.raises(ShadowingError):
        exponential_closeness(model, x, y, window=10)


def test_expansivity_estimate_positive(model):
    out = expansivity_estimate(model, 0.2)
    assert out["alpha_bar"] > 0


def _synthetic_profiles(rng, n_samples=200):
    """Random nonnegative profiles with f <= g ending at time 0."""
    times = np.linspace(-float(n_samples - 1), 0.0, n_samples)
    f = np.abs(np.cumsum(rng.normal(size=n_samples))) * 0.05
    f = np.convolve(f, np.ones(5) / 5.0, mode="same")
    g = f + np.abs(rng.normal(size=n_samples)) * 0.02
    return times, f, g


def test_escape_segmentation_order_relations():
    thr = EscapeThresholds(g_enter=0.02, f_return=0.1, f_escape=0.4)
    bad = 0
    for i in range(500):
        rng = np.random.default_rng([41, i])
        times, f, g = _synthetic_profiles(rng)
        seg = escape_segmentation(times, f, g, thr)
        if not seg.order_relations_hold():
            bad += 1
    assert bad == 0


def test_escape_segmentation_hand_example():
    times = np.arange(-9.0, 1.0)
    #        -9   -8   -7   -6   -5   -4   -3   -2   -1    0
    f = np.array([0.0, 0.0, 0.5, 0.5, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0])
    g = f + np.array([0.0, 0.0, 0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0])
    thr = EscapeThresholds(g_enter=0.02, f_return=0.1, f_escape=0.4)
    seg = escape_segmentation(times, f, g, thr)
    assert seg.S[0] == 0.0
    assert seg.T[0] == -1.0   # last gated time before 0
    assert seg.C[0] == -6.0   # last escape level crossing before T
    assert seg.S[1] == -4.0   # first gated time after C
    assert seg.B[0] == -8.0   # last return-level time before C
    assert seg.order_relations_hold()


def test_escape_segmentation_rejects_f_above_g():
    thr = EscapeThresholds(g_enter=0.02, f_return=0.1, f_escape=0.4)
    times = np.array([-1.0, 0.0])
    with pytest.raises(ValueError):
        escape_segmentation(times, np.array([1.0, 1.0]),
                            np.array([0.0, 0.0]), thr)


def test_threshold_ordering_enforced():
    with pytest.raises(ValueError):
        EscapeThresholds(g_enter=0.5, f_return=0.1, f_escape=0.4)
