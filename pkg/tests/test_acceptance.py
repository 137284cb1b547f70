"""Acceptance suite: eleven quantitative criteria over the library's
testbeds, one test and one printed pass/fail line per criterion."""

import math
import time

import numpy as np
import pytest

from manelab.sft import (golden_mean_shift, random_sft, entropy,
                         word_count_entropy, shortest_periodic_orbit)
from manelab.ergopt import (random_instance, min_mean_cycle, discrete_aubry,
                            class_one_search, alga_condition,
                            build_channel_discrete, verify_locking)
from manelab.lagrangian import pendulum, free_particle, PhaseState, el_flow
from manelab.weakkam import (build_action_graph, critical_value,
                             mane_potential, lax_oleinik,
                             classify_and_extract_sets, energy_resolution,
                             quadratic_bound_check, closed_curve_actions)
from manelab.shadowing import (CAT_LOG_LAMBDA, cat_map, cat_periodic_orbit,
                               torus_delta, shadow_pseudo_orbit,
                               exponential_closeness, EscapeThresholds,
                               escape_segmentation)
from manelab.orbitlab import CatMapTestbed, horizon_sweep


def _verdict(num: int, title: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    print(f"criterion {num:2d} ({title}): {tag}" +
          (f"  [{detail}]" if detail else ""))
    assert ok, f"criterion {num} ({title}) failed: {detail}"


@pytest.fixture(scope="module")
def pendulum_setup():
    pend = pendulum()
    graph = build_action_graph(pend)
    u = lax_oleinik(pend, 1.0, graph)
    return pend, graph, u


def test_criterion_01_girth_bound():
    t0 = time.monotonic()
    violations = 0
    for i in range(200):
        rng = np.random.default_rng([0, i])
        s = random_sft(rng, max_symbols=10)
        orbit = shortest_periodic_orbit(s)
        bound = 1.0 + s.alphabet_size * math.exp(1.0 - entropy(s))
        if orbit.period > bound:
            violations += 1
    elapsed = time.monotonic() - t0
    _verdict(1, "girth bound on 200 random subshifts",
             violations == 0 and elapsed < 10.0,
             f"violations={violations}, {elapsed:.2f}s")


def test_criterion_02_golden_mean_entropy():
    gm = golden_mean_shift()
    target = math.log((1.0 + math.sqrt(5.0)) / 2.0)
    h_spec = entropy(gm)
    h_word = word_count_entropy(gm, 24)
    ok = abs(h_spec - target) < 1e-9 and abs(h_word - h_spec) < 0.02
    _verdict(2, "golden-mean entropy",
             ok, f"spectral err={abs(h_spec - target):.2e}, "
                 f"word-count err={abs(h_word - h_spec):.4f}")


def test_criterion_03_cat_shadowing_sweep():
    t0 = time.monotonic()
    model = cat_map()
    base = cat_periodic_orbit(200)
    jumps, errors = [], []
    worst_ratio = 0.0
    for delta in (1e-2, 1e-3, 1e-4):
        for i in range(50):
            rng = np.random.default_rng([3, int(1 / delta), i])
            pts = np.mod(base + rng.uniform(-delta / 4.0, delta / 4.0,
                                            size=base.shape), 1.0)
            res = shadow_pseudo_orbit(model, pts)
            jump = float(np.max(np.linalg.norm(
                torus_delta(np.roll(pts, -1, axis=0), model.step(pts)),
                axis=1)))
            jumps.append(jump)
            errors.append(res.sup_error)
            worst_ratio = max(worst_ratio, res.sup_error / delta)
    slope = float(np.polyfit(np.log(jumps), np.log(errors), 1)[0])
    elapsed = time.monotonic() - t0
    ok = worst_ratio <= 1.7 and abs(slope - 1.0) <= 0.05 and elapsed < 30.0
    _verdict(3, "cat-map shadowing sweep", ok,
             f"sup error/delta={worst_ratio:.3f}, slope={slope:.3f}, "
             f"{elapsed:.1f}s")


def test_criterion_04_exponential_closeness():
    model = cat_map()
    rng = np.random.default_rng(4)
    rates = {}
    for window in (5, 10, 20):
        x = rng.random(2)
        amp = 0.02 * math.exp(-CAT_LOG_LAMBDA * window)
        y = np.mod(x + amp * model.e_u, 1.0)
        prof = exponential_closeness(model, x, y, window=window)
        rates[window] = abs(prof.decay_rate)
    ok = all(r >= 0.9 * CAT_LOG_LAMBDA for r in rates.values())
    _verdict(4, "exponential closeness decay rates", ok,
             ", ".join(f"L={k}: {v:.3f}" for k, v in rates.items()))


def test_criterion_05_critical_values(pendulum_setup):
    t0 = time.monotonic()
    pend, graph, _ = pendulum_setup
    cv = critical_value(pend, graph)
    pend_ok = abs(cv["value"] - 1.0) <= 0.02
    free = free_particle()
    fgraph = build_action_graph(free)
    free_ok = True
    rel_errs = []
    for k in (0.125, 0.5, 2.0):
        for x, y in ((0.0, 0.3), (0.1, 0.6), (0.25, 0.75)):
            d = min(abs(x - y), 1.0 - abs(x - y))
            got = mane_potential(free, k, x, y, fgraph)
            ref = d * math.sqrt(2.0 * k)
            rel = abs(got - ref) / ref
            rel_errs.append(rel)
            free_ok = free_ok and rel <= 0.02
    elapsed = time.monotonic() - t0
    ok = pend_ok and free_ok and elapsed < 60.0
    _verdict(5, "pendulum critical value and free-particle potential", ok,
             f"c={cv['value']:.6f}, max rel err={max(rel_errs):.4f}, "
             f"{elapsed:.1f}s")


def test_criterion_06_weak_kam_solution(pendulum_setup):
    pend, graph, u = pendulum_setup
    xs = graph.nodes
    truth = 4.0 * (1.0 - np.cos(
        (np.mod(xs + math.pi, 2.0 * math.pi) - math.pi) / 2.0))
    err = u.values - truth
    sup = float(np.max(err) - np.min(err))
    dom = u.domination_violations(graph)
    static = PhaseState(position=[0.0], velocity=[0.0], period=pend.period)
    k1 = quadratic_bound_check(pend, u, static, radius=1.0)
    graph2 = build_action_graph(pend, n_nodes=400, max_hop=40)
    u2 = lax_oleinik(pend, 1.0, graph2)
    k2 = quadratic_bound_check(pend, u2, static, radius=1.0)
    stable = abs(k2 - k1) / k1 <= 0.2
    ok = sup <= 0.02 and dom == 0 and 0.4 <= k1 <= 0.7 and stable
    _verdict(6, "weak KAM solution and quadratic bound", ok,
             f"sup err={sup:.4f}, domination violations={dom}, "
             f"K={k1:.3f}, refined K={k2:.3f}")


def test_criterion_07_invariant_sets(pendulum_setup):
    pend, graph, u = pendulum_setup
    mather, aubry, mane = classify_and_extract_sets(pend, 1.0, u, graph)
    aubry_ok = len(aubry.points) == 1 and \
        abs(aubry.points[0][0]) < 1e-9 and abs(aubry.points[0][1]) < 1e-9
    # one-sided set distance to the separatrix, in grid-cell units
    xs = np.linspace(0.0, 2.0 * math.pi, 8001)
    sep = np.vstack([np.c_[xs, 2.0 * np.sin(xs / 2.0)],
                     np.c_[xs, -2.0 * np.sin(xs / 2.0)]])
    hx = graph.h
    hv = graph.h / max(graph.time_menu)

    def cell_dist(p):
        dx = np.abs(p[0] - sep[:, 0])
        dx = np.minimum(dx, 2.0 * math.pi - dx)
        return float(np.min(np.maximum(dx / hx,
                                       np.abs(p[1] - sep[:, 1]) / hv)))

    max_dist = max(cell_dist(p) for p in mane.points)
    inclusion_ok = aubry.contains(mather) and mane.contains(aubry)
    flow = el_flow(pend, PhaseState(position=[0.0], velocity=[0.0],
                                    period=pend.period), 5.0, 1e-2)
    flow_ok = float(np.max(np.abs(flow.positions))) < 1e-9 and \
        float(np.max(np.abs(flow.velocities))) < 1e-9
    ok = aubry_ok and max_dist <= 2.0 and inclusion_ok and flow_ok
    _verdict(7, "invariant sets", ok,
             f"aubry={aubry.points.tolist()}, "
             f"mane max cell dist={max_dist:.3f}, "
             f"inclusions={inclusion_ok}, flow invariant={flow_ok}")


def test_criterion_08_closed_curve_nonnegativity(pendulum_setup):
    pend, graph, _ = pendulum_setup
    acts = closed_curve_actions(pend, 1.0, 1000, seed=8, graph=graph)
    worst = float(np.min(acts))
    _verdict(8, "closed-curve nonnegativity", worst >= -1e-3,
             f"min action={worst:.4f} over 1000 curves")


def test_criterion_09_locking_suite():
    unexplained = 0
    alga_fail = 0
    for i in range(100):
        rng = np.random.default_rng([9, i])
        f = random_instance(rng)
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        orbit = class_one_search(f, 0.1)
        cond = alga_condition(orbit, f, aubry, 0.1)
        if not cond["holds"]:
            alga_fail += 1
        if cond["gap"] > 0:
            phi = build_channel_discrete(orbit, 0.1)
        else:
            phi = build_channel_discrete(orbit, 0.1, rho=0.0625,
                                         gamma_bar=0.5)
        locked, cert = verify_locking(f, phi, orbit)
        if not locked and "competing_cycle" not in cert and \
                "competing_edge" not in cert:
            unexplained += 1
    ok = alga_fail == 0 and unexplained == 0
    _verdict(9, "locking suite", ok,
             f"alga failures={alga_fail}, unexplained={unexplained}")


def test_criterion_10_palga_trend():
    testbed = CatMapTestbed()
    rows = horizon_sweep(testbed, 0.1)
    acts = [r["final_action"] for r in rows]
    dists = [r["final_aubry_distance"] for r in rows]
    ratios = [math.log(r["initial_period"]) / r["horizon"] for r in rows]
    mono = all(b <= a for a, b in zip(acts, acts[1:])) and \
        all(b <= a for a, b in zip(dists, dists[1:]))
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    ok = mono and decreasing and not any(r["terminal"] for r in rows)
    _verdict(10, "pipeline trend over horizons", ok,
             f"actions={acts}, distances={dists}, "
             f"log P/T={[round(r, 3) for r in ratios]}")


def test_criterion_11_escape_segmentation():
    thr = EscapeThresholds(g_enter=0.02, f_return=0.1, f_escape=0.4)
    violations = 0
    for i in range(500):
        rng = np.random.default_rng([11, i])
        n = 200
        times = np.linspace(-float(n - 1), 0.0, n)
        f = np.abs(np.cumsum(rng.normal(size=n))) * 0.05
        f = np.convolve(f, np.ones(5) / 5.0, mode="same")
        g = f + np.abs(rng.normal(size=n)) * 0.02
        seg = escape_segmentation(times, f, g, thr)
        if not seg.order_relations_hold():
            violations += 1
    _verdict(11, "escape segmentation order relations", violations == 0,
             f"violations={violations} over 500 profiles")
