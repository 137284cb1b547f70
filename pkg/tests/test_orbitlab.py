"""Unit tests for the periodic-orbit pipeline on the cat-map testbed:
specification design, metrics, cut surgery, the full loop, the constant
ledger."""

import math

import numpy as np
import pytest

from manelab.shadowing import cat_map, torus_distance, DELTA0
from manelab.orbitlab import (OrbitlabError, CUT_RATIO, CatMapTestbed,
                              PeriodicOrbitNumeric, build_specification,
                              spec_to_periodic_orbit, alga_check,
                              cut_and_shadow, palga_pipeline, horizon_sweep,
                              measure_constants)


@pytest.fixture(scope="module")
def testbed():
    return CatMapTestbed()


def test_reference_orbit_is_periodic(testbed):
    orb = testbed.aubry_orbit
    nxt = testbed.model.step(orb)
    assert float(np.max(torus_distance(nxt, np.roll(orb, -1, axis=0)))) \
        < 1e-12


def test_specification_jumps_within_budget(testbed):
    for t in (4, 8):
        spec = build_specification(testbed, t)
        assert spec.delta < DELTA0
        assert spec.total_steps % testbed.aubry_period == 0
        # the opening junction carries an exponentially small displacement
        assert min(spec.jumps) < 1e-10


def test_specification_rejects_bad_horizon(testbed):
    with pytest.raises(OrbitlabError):
        build_specification(testbed, 0)


def test_shadow_collapses_to_reference_orbit(testbed):
    spec = build_specification(testbed, 6)
    orbit = spec_to_periodic_orbit(testbed, spec)
    assert orbit.period == testbed.aubry_period
    assert orbit.action == 0.0
    assert orbit.aubry_distance == 0.0


def test_alga_zero_side(testbed):
    spec = build_specification(testbed, 4)
    orbit = spec_to_periodic_orbit(testbed, spec)
    ok, witness = alga_check(orbit, 0.1)
    assert ok
    assert not witness


def test_alga_fails_with_witness_on_doubled_orbit(testbed):
    orbit = _doubled_orbit(testbed)
    ok, witness = alga_check(orbit, 0.1)
    assert not ok
    assert not witness.get("inadmissible")
    n = orbit.period
    cut = (witness["r2"] - witness["r1"]) % n
    assert n / (n - cut) >= CUT_RATIO


def _doubled_orbit(testbed) -> PeriodicOrbitNumeric:
    """Two traversals of the reference orbit, the second displaced by a
    small unstable vector: a valid periodic orbit of nothing, used only to
    exercise the cut mechanics (metrics are recomputed from the points)."""
    ref = testbed.aubry_orbit
    disp = 1e-3 * testbed.model.e_u
    pts = np.concatenate([ref, np.mod(ref + disp, 1.0)], axis=0)
    from manelab.orbitlab import _make_orbit, _orbit_metrics
    gap, cdist, act = _orbit_metrics(testbed, pts)
    return PeriodicOrbitNumeric(points=pts, period=len(pts), action=act,
                                gap=gap, aubry_distance=cdist,
                                terminal=False)


def test_cut_and_shadow_reduces_to_single_traversal(testbed):
    orbit = _doubled_orbit(testbed)
    ok, witness = alga_check(orbit, 0.1)
    assert not ok
    new = cut_and_shadow(testbed, orbit, witness)
    assert new.period < orbit.period
    assert new.period % testbed.aubry_period == 0
    assert new.aubry_distance <= orbit.aubry_distance


def test_pipeline_all_horizons(testbed):
    for t in (4, 6, 8, 10):
        orbit, log = palga_pipeline(testbed, 0.1, t)
        assert not orbit.terminal
        assert orbit.action == 0.0 and orbit.aubry_distance == 0.0
        assert log["initial_period"] >= 4 * t
        for i, entry in enumerate(log["rounds"]):
            assert entry["round"] == i
            for key in ("period", "action", "gap", "aubry_distance",
                        "alga", "witness"):
                assert key in entry
        assert log["rounds"][-1]["alga"]


def test_horizon_sweep_trends(testbed):
    rows = horizon_sweep(testbed, 0.1)
    acts = [r["final_action"] for r in rows]
    dists = [r["final_aubry_distance"] for r in rows]
    assert all(b <= a for a, b in zip(acts, acts[1:]))
    assert all(b <= a for a, b in zip(dists, dists[1:]))
    ratios = [math.log(r["initial_period"]) / r["horizon"] for r in rows]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_constant_ledger_invariants(testbed):
    led = measure_constants(testbed, 0.1)
    values = vars(led)
    assert all(v > 0 for v in values.values())
    assert led.b4 > 4
    assert led.b4 == max(led.b3 + 4.0, 2.0 * led.d0 / 0.1)
    assert led.b1 == 2.0 * led.c
    assert led.b2 == led.b1 + 2.0 * led.e
    assert led.k2 == 2.0 * led.k1
    assert led.k4 == led.k3 * led.b


def test_initial_action_below_trend_bound(testbed):
    led = measure_constants(testbed, 0.1)
    for t in (4, 6, 8, 10):
        spec = build_specification(testbed, t)
        orbit = spec_to_periodic_orbit(testbed, spec)
        assert orbit.action <= led.k5 * spec.total_steps * math.exp(
            -2.0 * led.lam * t)
