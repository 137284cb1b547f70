"""Unit tests for exact ergodic optimization: minimum mean against cycle
enumeration, potential/sub-action inequalities, locking certificates."""

from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from manelab.sft import Sft, golden_mean_shift
from manelab.ergopt import (EdgePotential, potential_from_edges, combine,
                            min_mean_cycle, discrete_mane_potential,
                            discrete_aubry, sub_action, orbit_mean,
                            orbit_metrics, alga_condition, class_one_search,
                            build_channel_discrete, verify_locking,
                            random_instance, ErgoptError)


def brute_force_min_mean(f: EdgePotential) -> Fraction:
    """Exact minimum cycle mean by enumerating all simple cycles."""
    g = nx.DiGraph()
    for word, cost in f.values.items():
        g.add_edge(word[0], word[1], w=Fraction(cost))
    best = None
    for cyc in nx.simple_cycles(g):
        total = sum(g[cyc[i]][cyc[(i + 1) % len(cyc)]]["w"]
                    for i in range(len(cyc)))
        mean = Fraction(total, len(cyc))
        if best is None or mean < best:
            best = mean
    return best


@pytest.fixture(scope="module")
def instances():
    out = []
    for i in range(30):
        rng = np.random.default_rng([21, i])
        out.append(random_instance(rng))
    return out


def test_min_mean_matches_enumeration(instances):
    for f in instances:
        assert min_mean_cycle(f).mean == brute_force_min_mean(f)


def test_min_mean_cycle_realizes_its_mean(instances):
    for f in instances:
        mm = min_mean_cycle(f)
        assert orbit_mean(f, mm.cycle) == mm.mean


def test_mane_potential_triangle_inequality(instances):
    for f in instances[:10]:
        mm = min_mean_cycle(f)
        phi = discrete_mane_potential(f, mm.mean)
        verts = sorted({a for a, _ in phi})
        for a in verts:
            for b in verts:
                for c in verts:
                    if (a, c) in phi and (a, b) in phi and (b, c) in phi:
                        assert phi[(a, c)] <= phi[(a, b)] + phi[(b, c)]


def test_mane_potential_nonnegative_loops(instances):
    for f in instances[:10]:
        mm = min_mean_cycle(f)
        phi = discrete_mane_potential(f, mm.mean)
        for (a, b), v in phi.items():
            if a == b:
                assert v >= 0


def test_sub_action_dominates(instances):
    checked = 0
    for f in instances[:10]:
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        try:
            u = sub_action(f, mm.mean)
        except ErgoptError:
            # vertices with no path from the Aubry set have no sub-action
            continue
        assert u.check(f, aubry)
        checked += 1
    assert checked >= 3


def test_aubry_vertices_have_zero_loop_potential(instances):
    for f in instances[:10]:
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        phi = discrete_mane_potential(f, mm.mean)
        for a in aubry.vertices:
            assert phi[(a, a)] == 0


def test_alga_zero_side_on_tight_cycle(instances):
    for f in instances[:10]:
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        cond = alga_condition(mm.cycle, f, aubry, eps=0.1)
        assert cond["holds"]
        assert cond["reduced_action"] == 0


def test_orbit_metrics_reduced_action_nonnegative(instances):
    for f in instances[:5]:
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        _, _, act = orbit_metrics(mm.cycle, f, aubry)
        assert act >= 0


def test_class_one_search_passes_alga(instances):
    for f in instances[:10]:
        orbit = class_one_search(f, eps=0.1)
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        assert alga_condition(orbit, f, aubry, eps=0.1)["holds"]


def test_channel_vanishes_exactly_on_orbit():
    f = _two_cycle_instance()
    orbit = class_one_search(f, eps=0.1)
    phi = build_channel_discrete(orbit, 0.1, rho=0.0625, gamma_bar=0.5)
    for v in phi.values.values():
        assert v >= 0
    assert orbit_mean(phi, orbit) == 0


def _two_cycle_instance() -> EdgePotential:
    """Two disjoint 2-cycles with distinct means, linked both ways."""
    t = np.array([[0, 1, 1, 0], [1, 0, 0, 0],
                  [0, 0, 0, 1], [1, 0, 1, 0]])
    sft = Sft(alphabet_size=4, transitions=t)
    costs = {(0, 1): Fraction(0), (1, 0): Fraction(0),
             (0, 2): Fraction(2), (2, 3): Fraction(1),
             (3, 2): Fraction(1), (3, 0): Fraction(2)}
    return potential_from_edges(sft, costs)


def test_verify_locking_accepts_channel():
    f = _two_cycle_instance()
    orbit = class_one_search(f, eps=0.1)
    phi = build_channel_discrete(orbit, 0.1, rho=0.0625, gamma_bar=0.5)
    locked, cert = verify_locking(f, phi, orbit)
    assert locked, cert


def test_verify_locking_reports_competing_cycle():
    # without any channel the tied cycles are both minimizing
    sft = Sft(alphabet_size=4, transitions=np.array(
        [[0, 1, 1, 0], [1, 0, 0, 0], [0, 0, 0, 1], [1, 0, 1, 0]]))
    costs = {(0, 1): Fraction(0), (1, 0): Fraction(0),
             (0, 2): Fraction(1), (2, 3): Fraction(0),
             (3, 2): Fraction(0), (3, 0): Fraction(1)}
    f = potential_from_edges(sft, costs)
    zero = potential_from_edges(sft, {k: Fraction(0) for k in costs})
    mm = min_mean_cycle(f)
    locked, cert = verify_locking(f, zero, mm.cycle)
    assert not locked
    assert "competing_cycle" in cert or "competing_edge" in cert


def test_combine_adds_costs():
    f = _two_cycle_instance()
    g = combine(f, f)
    for k, v in f.values.items():
        assert g.values[k] == 2 * v


def test_rejects_eps_out_of_range():
    f = _two_cycle_instance()
    with pytest.raises(ErgoptError):
        class_one_search(f, eps=1.5)
