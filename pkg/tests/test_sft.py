"""Unit tests for the subshift module: entropy oracles, girth against a
brute-force shortest-cycle computation, word counts, codings."""

import math

import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from manelab.sft import (Sft, SftError, full_shift, golden_mean_shift,
                         random_sft, entropy, word_count,
                         word_count_entropy, shortest_periodic_orbit,
                         shift_distance)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def brute_force_girth(sft: Sft) -> int:
    """Shortest cycle length: min over edges (a, b) of dist(b, a) + 1."""
    dist = shortest_path(sft.csr, unweighted=True)
    best = None
    for a in range(sft.alphabet_size):
        for b in sft.successors(a):
            total = dist[int(b), a] + 1
            if np.isfinite(total) and (best is None or total < best):
                best = int(total)
    return best


def brute_force_words(sft: Sft, n: int) -> int:
    words = [(a,) for a in range(sft.alphabet_size)]
    for _ in range(n - 1):
        words = [w + (b,) for w in words for b in sft.successors(w[-1])]
    return len(words)


def test_golden_mean_entropy_exact():
    assert abs(entropy(golden_mean_shift()) - math.log(GOLDEN)) < 1e-12


def test_full_shift_entropy():
    for m in (2, 3, 5):
        assert abs(entropy(full_shift(m)) - math.log(m)) < 1e-12


def test_word_count_against_enumeration():
    gm = golden_mean_shift()
    for n in range(1, 11):
        assert word_count(gm, n) == brute_force_words(gm, n)


def test_word_count_entropy_converges():
    gm = golden_mean_shift()
    h = entropy(gm)
    assert abs(word_count_entropy(gm, 24) - h) < 0.02


def test_girth_matches_brute_force():
    for i in range(100):
        rng = np.random.default_rng([11, i])
        s = random_sft(rng, max_symbols=8)
        orbit = shortest_periodic_orbit(s)
        assert orbit.period == brute_force_girth(s)


def test_recovered_word_is_cyclically_admissible():
    for i in range(100):
        rng = np.random.default_rng([12, i])
        s = random_sft(rng)
        w = shortest_periodic_orbit(s).word
        for a, b in zip(w, w[1:] + w[:1]):
            assert s.allows(a, b)


def test_min_period_lower_bound():
    gm = golden_mean_shift()
    for p in (1, 2, 3, 5):
        assert shortest_periodic_orbit(gm, min_period=p).period >= p


def test_shift_distance_metric_properties():
    w = (0, 1, 0, 0, 1, 0, 1, 0)
    for i in range(len(w)):
        assert shift_distance(w, i, w, i) == 0.0
        for j in range(len(w)):
            d_ij = shift_distance(w, i, w, j)
            assert d_ij == shift_distance(w, j, w, i)
            assert d_ij >= 0.0


def test_sft_validation_rejects_empty_subshift():
    with pytest.raises(SftError):
        Sft(alphabet_size=2, transitions=np.array([[0, 1], [0, 0]]))


def test_sft_json_round_trip():
    s = golden_mean_shift()
    t = Sft.from_json(s.to_json())
    assert t.alphabet_size == s.alphabet_size
    assert (t.transitions == s.transitions).all()
