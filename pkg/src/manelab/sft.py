"""Subshifts of finite type: entropy, girth, dynamic-ball codings.

Provides the symbolic layer: topological entropy as the log spectral radius
of the transition matrix (cross-checked against word-count growth), shortest
periodic orbits with the girth bound period <= 1 + M e^{1-h}, the dynamic-ball
transition coding of hyperbolic systems, and the construction of periodic
specifications with exponentially small measured jumps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .shadowing import (
    HyperbolicModel,
    SpecificationNumeric,
    torus_delta,
)


class SftError(ValueError):
    """Raised when a subshift invariant or precondition fails."""


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------


@dataclass
class Sft:
    """A subshift of finite type: alphabet size M and a 0/1 transition matrix.

    transitions may be a dense array (small alphabets) or a scipy CSR matrix
    (dynamic-ball codings).  Every row and column must contain a 1 and the
    transition graph must contain a cycle.
    """

    alphabet_size: int
    transitions: object

    def __post_init__(self):
        m = self.alphabet_size
        if m < 1:
            raise SftError("alphabet_size must be positive")
        t = self.transitions
        if not sp.issparse(t):
            t = np.asarray(t)
            if t.shape != (m, m):
                raise SftError("transitions must be an MxM matrix")
            if not np.isin(t, (0, 1)).all():
                raise SftError("transition entries must be 0 or 1")
            self.transitions = t.astype(np.int8)
        else:
            if t.shape != (m, m):
                raise SftError("transitions must be an MxM matrix")
            self.transitions = t.tocsr().astype(np.int8)
        csr = self.csr
        if (csr.sum(axis=1) == 0).any() or (csr.sum(axis=0) == 0).any():
            raise SftError("every symbol needs a successor and a predecessor")
        if not self._has_cycle():
            raise SftError("transition graph has no cycle (empty subshift)")

    @property
    def csr(self) -> sp.csr_matrix:
        cached = getattr(self, "_csr", None)
        if cached is None:
            t = self.transitions
            cached = t if sp.issparse(t) else sp.csr_matrix(t)
            object.__setattr__(self, "_csr", cached)
        return cached

    def _has_cycle(self) -> bool:
        csr = self.csr
        if csr.diagonal().any():
            return True
        n_comp, labels = connected_components(csr, directed=True,
                                              connection="strong")
        counts = np.bincount(labels, minlength=n_comp)
        return bool((counts >= 2).any())

    def allows(self, a: int, b: int) -> bool:
        t = self.transitions
        if sp.issparse(t):
            return bool(t[a, b])
        return bool(t[a, b])

    def successors(self, a: int) -> np.ndarray:
        csr = self.csr
        return csr.indices[csr.indptr[a]:csr.indptr[a + 1]]

    def to_json(self) -> str:
        t = self.transitions
        dense = t.toarray() if sp.issparse(t) else t
        return json.dumps({"alphabet_size": self.alphabet_size,
                           "transitions": dense.astype(int).tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Sft":
        obj = json.loads(text)
        return cls(alphabet_size=int(obj["alphabet_size"]),
                   transitions=np.array(obj["transitions"]))


def full_shift(m: int) -> Sft:
    return Sft(alphabet_size=m, transitions=np.ones((m, m), dtype=np.int8))


def golden_mean_shift() -> Sft:
    return Sft(alphabet_size=2, transitions=np.array([[1, 1], [1, 0]]))


def random_sft(rng: np.random.Generator, max_symbols: int = 10) -> Sft:
    """A seeded random subshift: alphabet size in [2, max_symbols], each
    symbol gets 1-3 random successors, columns patched so every symbol is
    reachable; resampled until the transition graph has a cycle."""
    for _ in range(200):
        m = int(rng.integers(2, max_symbols + 1))
        t = np.zeros((m, m), dtype=np.int8)
        for a in range(m):
            deg = int(rng.integers(1, min(3, m) + 1))
            t[a, rng.choice(m, size=deg, replace=False)] = 1
        for b in range(m):
            if t[:, b].sum() == 0:
                t[int(rng.integers(0, m)), b] = 1
        try:
            return Sft(alphabet_size=m, transitions=t)
        except SftError:
            continue
    raise SftError("failed to sample a random subshift")


@dataclass
class SymbolicOrbit:
    """A periodic word in a subshift; period is the word length."""

    word: tuple
    sft: Sft = None

    def __post_init__(self):
        self.word = tuple(int(s) for s in self.word)
        if not self.word:
            raise SftError("empty word")
        if self.sft is not None:
            p = len(self.word)
            for i in range(p):
                a, b = self.word[i], self.word[(i + 1) % p]
                if not self.sft.allows(a, b):
                    raise SftError(f"transition {a}->{b} not allowed")

    @property
    def period(self) -> int:
        return len(self.word)

    def primitive(self) -> "SymbolicOrbit":
        """Reduce to the minimal period (word may be a repeated block)."""
        p = len(self.word)
        for q in range(1, p):
            if p % q == 0 and self.word == self.word[q:] + self.word[:q]:
                return SymbolicOrbit(word=self.word[:q], sft=self.sft)
        return self


@dataclass
class SpecificationSymbolic:
    """Periodic specification in symbolic form.

    segments is a periodic list of (start symbol index, segment length);
    jump_sizes are shift-metric distances, each either 0 or a power of 1/2.
    """

    segments: list
    jump_sizes: list
    period: int

    @property
    def jump_count(self) -> int:
        return len(self.segments)

    def __post_init__(self):
        for j in self.jump_sizes:
            if j != 0 and not _is_power_of_half(j):
                raise SftError(f"jump size {j} is not a power of 1/2")


def _is_power_of_half(x: float) -> bool:
    if x <= 0:
        return False
    e = math.log2(x)
    return abs(e - round(e)) < 1e-9


# ---------------------------------------------------------------------------
# shift metric
# ---------------------------------------------------------------------------


def shift_distance(word_x: tuple, i: int, word_y: tuple, j: int,
                   radius_cap: int = None) -> float:
    """Two-sided shift-metric distance d = 2^{1-r} between periodic points.

    Compares the bi-infinite periodic extensions of word_x shifted to index i
    and word_y shifted to index j; r is the first radius at which they
    disagree (d = 0 when they agree out to the least common period).
    """
    px, py = len(word_x), len(word_y)
    cap = radius_cap if radius_cap is not None else _lcm(px, py) + max(px, py)
    for r in range(cap + 1):
        for k in (r, -r) if r else (0,):
            if word_x[(i + k) % px] != word_y[(j + k) % py]:
                return 2.0 ** (1 - r)
    return 0.0


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def entropy(sft: Sft, details: bool = False):
    """Topological entropy log(spectral radius) of the transition matrix.

    Reducible matrices are handled by maximizing over strongly connected
    components (the variational definition); with details=True the component
    realizing the value is reported.
    """
    csr = sft.csr
    m = sft.alphabet_size
    if m > 600:
        h = math.log(max(_power_radius(csr), 1.0))
        return (h, {"component": None, "method": "power"}) if details else h
    n_comp, labels = connected_components(csr, directed=True,
                                          connection="strong")
    dense = csr.toarray().astype(float)
    best_h, best_comp = 0.0, None
    for c in range(n_comp):
        idx = np.nonzero(labels == c)[0]
        block = dense[np.ix_(idx, idx)]
        if len(idx) == 1 and block[0, 0] == 0:
            continue
        rho = float(np.max(np.abs(np.linalg.eigvals(block))))
        h = math.log(rho) if rho > 0 else 0.0
        if best_comp is None or h > best_h:
            best_h, best_comp = max(h, 0.0), idx
    if best_comp is None:
        raise SftError("no recurrent component")
    if details:
        return best_h, {"component": [int(i) for i in best_comp],
                        "method": "dense"}
    return best_h


def _power_radius(csr: sp.csr_matrix, iters: int = 300) -> float:
    mat = csr.astype(float)
    v = np.ones(mat.shape[0])
    rho = 0.0
    for _ in range(iters):
        w = mat @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0:
            return 0.0
        new_rho = nrm / float(np.linalg.norm(v))
        w /= nrm
        if abs(new_rho - rho) < 1e-12 * max(1.0, rho):
            rho = new_rho
            break
        rho, v = new_rho, w
    return rho


def word_count(sft: Sft, n: int) -> int:
    """Number of allowed words of length n (exact integer arithmetic)."""
    if n < 1:
        raise SftError("word length must be >= 1")
    t = sft.csr.toarray().astype(object)
    m = sft.alphabet_size
    acc = np.ones(m, dtype=object)
    for _ in range(n - 1):
        acc = t @ acc
    return int(np.sum(acc))


def word_count_entropy(sft: Sft, n: int = 24) -> float:
    """Entropy estimator log(#words of length n)/n."""
    return math.log(word_count(sft, n)) / n


# ---------------------------------------------------------------------------
# girth / shortest periodic orbit
# ---------------------------------------------------------------------------


def shortest_periodic_orbit(sft: Sft, min_period: int = 1,
                            check_bound: bool = True) -> SymbolicOrbit:
    """A periodic word of minimal length >= min_period.

    The length-n closed walks through symbol a are counted by the diagonal
    of the n-th boolean matrix power; the word is recovered by walking the
    stored powers.  Asserts the counting bound girth <= 1 + M e^{1-h} when
    min_period == 1.
    """
    if min_period < 1:
        raise SftError("min_period must be >= 1")
    base = sft.csr.astype(bool)
    m = sft.alphabet_size
    powers = [sp.identity(m, dtype=bool, format="csr"), base]
    found = None
    # a cycle of length <= M exists, so some closed walk length lands in
    # [min_period, min_period + M]
    for n in range(1, min_period + m + 1):
        while len(powers) <= n:
            powers.append((powers[-1] @ base).astype(bool).tocsr())
        if n >= min_period:
            diag = powers[n].diagonal()
            hits = np.nonzero(diag)[0]
            if hits.size:
                found = (n, int(hits[0]))
                break
    if found is None:
        raise SftError(f"no closed walk of length >= {min_period}")
    length, start = found
    word = [start]
    cur = start
    for remaining in range(length - 1, 0, -1):
        # remaining = steps still needed from the next symbol back to start
        back = powers[remaining]
        for j in sft.successors(cur):
            if back[int(j), start]:
                cur = int(j)
                word.append(cur)
                break
        else:
            raise AssertionError("cycle recovery failed")
    assert sft.allows(word[-1], start), "recovered word does not close"
    orbit = SymbolicOrbit(word=tuple(word), sft=sft)
    if check_bound and min_period <= 1:
        h = entropy(sft)
        bound = 1 + m * math.exp(1 - h)
        assert orbit.period <= bound + 1e-9, (
            f"girth {orbit.period} violates bound {bound}")
    return orbit


# ---------------------------------------------------------------------------
# dynamic-ball codings
# ---------------------------------------------------------------------------


@dataclass
class SymbolicSystem:
    """A subshift viewed as the system to be coded, with shift metric scale.

    delta in (0, 1] sets the metric radius: a radius-delta ball around a
    point fixes coordinates out to k = ceil(-log2 delta) on both sides.
    """

    sft: Sft
    delta: float = 0.5


@dataclass
class FixedPointSystem:
    """The trivial one-point system."""


@dataclass
class ToralPointSystem:
    """A finite ground set of cat-map phase points to be coded.

    points is an (N, 2) float array; when the set is an invariant rational
    lattice, exact_num (integer coordinates) and exact_den allow the
    dynamics to be iterated in exact integer arithmetic.
    """

    model: HyperbolicModel
    points: np.ndarray
    exact_num: np.ndarray = None
    exact_den: int = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise SftError("points must be an (N, 2) array")

    def iterate(self, n: int) -> np.ndarray:
        """phi^n applied to every ground point."""
        if self.exact_num is not None and self.exact_den:
            mat = np.array([[2, 1], [1, 1]], dtype=object)
            power = np.array([[1, 0], [0, 1]], dtype=object)
            for _ in range(n):
                power = power @ mat
            num = (self.exact_num @ power.T) % self.exact_den
            return num.astype(float) / self.exact_den
        pts = self.points
        for _ in range(n):
            pts = self.model.step(pts)
        return pts


def uniform_grid_system(q: int, model: HyperbolicModel = None) -> ToralPointSystem:
    """Ground set (1/q) Z^2 on the torus; invariant under the cat map."""
    from .shadowing import cat_map
    model = model or cat_map()
    i = np.arange(q)
    num = np.stack(np.meshgrid(i, i, indexing="ij"), axis=-1).reshape(-1, 2)
    return ToralPointSystem(model=model, points=num.astype(float) / q,
                            exact_num=num.astype(object), exact_den=q)


def periodic_points_system(n: int, model: HyperbolicModel = None) -> ToralPointSystem:
    """Ground set Fix(A^n), the invariant rational lattice of n-periodic points."""
    from .shadowing import cat_map, cat_matrix_power, cat_periodic_points
    model = model or cat_map()
    pts = cat_periodic_points(n)
    m = cat_matrix_power(n) - np.array([[1, 0], [0, 1]], dtype=object)
    den = abs(int(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
    num = np.round(pts * den).astype(np.int64).astype(object)
    return ToralPointSystem(model=model, points=pts, exact_num=num,
                            exact_den=den)


@dataclass
class DynamicBallCoding:
    """Result of dynamic_ball_transitions: the coded Sft plus geometry."""

    sft: Sft
    center_indices: np.ndarray = None   # toral codings
    center_points: np.ndarray = None
    center_words: list = None           # symbolic codings
    system: object = None
    horizon: int = 0
    radius: float = 0.0
    condition: str = "center"


def _eigen_window_pairs(model, src_eigen, tgt_points, r_u, r_s):
    """All (i, j) with the torus displacement tgt_j - src_i inside the
    eigen-coordinate window |du| <= r_u, |ds| <= r_s.

    src_eigen are (u, s) coordinates of source points (arbitrary lifts);
    targets are expanded over the 9 integer translates so that torus wrap
    is captured, then matched through a sort on the u coordinate.
    """
    tgt_points = np.asarray(tgt_points, dtype=float)
    offs = np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
    tiled = (tgt_points[None, :, :] + offs[:, None, :]).reshape(-1, 2)
    tgt_idx = np.tile(np.arange(len(tgt_points)), 9)
    e_u, e_s = None, None
    e_u = tiled @ model.e_u
    e_s = tiled @ model.e_s
    order = np.argsort(e_u, kind="stable")
    e_u, e_s, tgt_idx = e_u[order], e_s[order], tgt_idx[order]

    pairs_i, pairs_j = [], []
    su, ss = src_eigen[:, 0], src_eigen[:, 1]
    lo = np.searchsorted(e_u, su - r_u, side="left")
    hi = np.searchsorted(e_u, su + r_u, side="right")
    for i in range(len(su)):
        a, b = lo[i], hi[i]
        if a >= b:
            continue
        mask = np.abs(e_s[a:b] - ss[i]) <= r_s
        if mask.any():
            js = tgt_idx[a:b][mask]
            pairs_i.append(np.full(js.shape, i, dtype=np.int64))
            pairs_j.append(js.astype(np.int64))
    if not pairs_i:
        return (np.empty(0, dtype=np.int64),) * 2
    return np.concatenate(pairs_i), np.concatenate(pairs_j)


def _trim_to_core(matrix: sp.csr_matrix):
    """Iteratively drop symbols without successors or predecessors."""
    keep = np.arange(matrix.shape[0])
    mat = matrix.tocsr()
    while True:
        rows = np.asarray(mat.sum(axis=1)).ravel()
        cols = np.asarray(mat.sum(axis=0)).ravel()
        alive = (rows > 0) & (cols > 0)
        if alive.all():
            return mat, keep
        if not alive.any():
            raise SftError("coding produced an empty subshift")
        mat = mat[alive][:, alive].tocsr()
        keep = keep[alive]


def dynamic_ball_transitions(system, horizon: int, radius: float,
                             condition: str = "center") -> DynamicBallCoding:
    """Code a system by a minimal (2T, delta)-spanning set of dynamic balls.

    Symbols are spanning-set elements; with condition="center" a transition
    theta -> vartheta is allowed when phi_{2T}(theta) lies in the dynamic
    ball B(vartheta, 2T, delta) (the source construction); with
    condition="overlap" it is allowed when the image of the whole ball meets
    the target ball (a pseudo-orbit closure, whose entropy approximates the
    system entropy from above as the ground set is refined).
    """
    if condition not in ("center", "overlap"):
        raise SftError("condition must be 'center' or 'overlap'")
    t2 = 2 * int(horizon)
    if t2 <= 0:
        raise SftError("horizon must be positive")
    if isinstance(system, FixedPointSystem):
        return DynamicBallCoding(sft=Sft(1, np.array([[1]])), system=system,
                                 horizon=horizon, radius=radius,
                                 condition=condition)
    if isinstance(system, SymbolicSystem):
        return _code_symbolic(system, horizon, radius, condition)
    if isinstance(system, ToralPointSystem):
        return _code_toral(system, horizon, radius, condition)
    raise SftError(f"unsupported system {type(system).__name__}")


def _code_symbolic(system: SymbolicSystem, horizon: int, radius: float,
                   condition: str) -> DynamicBallCoding:
    """Dynamic-ball coding of a subshift by itself.

    A radius-delta ball in the shift metric fixes a central window of
    half-width k = number of coordinates with 2^{1-r} > delta; spanning-set
    elements are therefore exactly the allowed words of length 2T + 2k + 1
    and transitions are the 2T-step overlaps, a higher-block presentation
    conjugate to the original subshift.
    """
    if not 0 < system.delta <= 1:
        raise SftError("symbolic delta must lie in (0, 1]")
    k = max(1, math.ceil(1 - math.log2(system.delta)) - 1)
    t2 = 2 * horizon
    length = t2 + 2 * k + 1
    words = _allowed_words(system.sft, length)
    if not words:
        raise SftError("degenerate radius: empty spanning set")
    index = {w: i for i, w in enumerate(words)}
    rows, cols = [], []
    for w, i in index.items():
        # the image word advances by 2T; consistency on the overlap window
        suffix = w[t2:]
        for w2, j in index.items():
            if w2[:len(suffix)] == suffix:
                rows.append(i)
                cols.append(j)
    mat = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                        shape=(len(words), len(words)))
    mat, keep = _trim_to_core(mat)
    kept_words = [words[i] for i in keep]
    sft = Sft(alphabet_size=mat.shape[0], transitions=mat)
    return DynamicBallCoding(sft=sft, center_words=kept_words, system=system,
                             horizon=horizon, radius=system.delta,
                             condition=condition)


def _allowed_words(sft: Sft, length: int) -> list:
    words = [(a,) for a in range(sft.alphabet_size)]
    for _ in range(length - 1):
        nxt = []
        for w in words:
            for b in sft.successors(w[-1]):
                nxt.append(w + (int(b),))
        words = nxt
        if len(words) > 2_000_000:
            raise SftError("symbolic coding too large")
    return words


def _code_toral(system: ToralPointSystem, horizon: int, radius: float,
                condition: str) -> DynamicBallCoding:
    model = system.model
    t2 = 2 * horizon
    lam = model.lam_u
    delta = float(radius)
    if delta <= 0 or delta >= 0.5:
        raise SftError("radius must lie in (0, 0.5)")
    pts = system.points
    n = len(pts)
    # Dynamic ball of radius delta over [0, 2T]: |A^s d| <= delta for all s;
    # by convexity of the eigen-profile it suffices at s = 0 and s = 2T,
    # conservatively boxed as |du| <= delta lam^{-2T}, |ds| <= delta.
    r_u_ball = delta * lam ** (-t2)
    r_s_ball = delta

    # greedy spanning set in lexicographic grid order
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    eig = model.eigen_coords(pts)
    cover_i, cover_j = _eigen_window_pairs(model, eig, pts, r_u_ball, r_s_ball)
    # adjacency: point i covers point j
    cov = sp.csr_matrix((np.ones(len(cover_i), dtype=np.int8),
                         (cover_i, cover_j)), shape=(n, n))
    covered = np.zeros(n, dtype=bool)
    centers = []
    indptr, indices = cov.indptr, cov.indices
    for i in order:
        if covered[i]:
            continue
        centers.append(int(i))
        covered[indices[indptr[i]:indptr[i + 1]]] = True
        covered[i] = True
    centers = np.array(centers, dtype=np.int64)
    if centers.size == 0:
        raise SftError("degenerate radius: empty spanning set")

    center_pts = pts[centers]
    if system.exact_num is not None:
        sub = ToralPointSystem(model=model, points=center_pts,
                               exact_num=system.exact_num[centers],
                               exact_den=system.exact_den)
        images = sub.iterate(t2)
    else:
        images = center_pts
        for _ in range(t2):
            images = model.step(images)
    img_eig = model.eigen_coords(images)
    if condition == "center":
        r_u, r_s = r_u_ball, r_s_ball
    else:
        # box overlap of the image of the source ball with the target ball
        r_u = delta * (1.0 + lam ** (-t2))
        r_s = delta * (1.0 + lam ** (-t2))
    ti, tj = _eigen_window_pairs(model, img_eig, center_pts, r_u, r_s)
    if condition == "center":
        # exact dynamic-ball membership check at both window endpoints
        dvec = torus_delta(images[ti], center_pts[tj])
        de = model.eigen_coords(dvec)
        ok = (de[:, 0] ** 2 + de[:, 1] ** 2 <= delta ** 2 + 1e-15) & (
            (de[:, 0] * lam ** t2) ** 2 + (de[:, 1] * lam ** (-t2)) ** 2
            <= delta ** 2 * (1 + 1e-9))
        ti, tj = ti[ok], tj[ok]
    mat = sp.csr_matrix((np.ones(len(ti), dtype=np.int8), (ti, tj)),
                        shape=(len(centers), len(centers)))
    mat.data = np.minimum(mat.data, 1).astype(np.int8)
    mat, keep = _trim_to_core(mat)
    centers = centers[keep]
    sft = Sft(alphabet_size=mat.shape[0], transitions=mat)
    return DynamicBallCoding(sft=sft, center_indices=centers,
                             center_points=pts[centers], system=system,
                             horizon=horizon, radius=delta,
                             condition=condition)


# ---------------------------------------------------------------------------
# periodic specifications
# ---------------------------------------------------------------------------


def build_periodic_specification(system, horizon: int, radius: float = 0.05,
                                 condition: str = "center",
                                 min_period: int = 1):
    """Periodic specification from the shortest cycle of the coded subshift.

    Each symbol contributes the middle [T, 3T] window of the 4T-orbit of its
    center; consecutive symbols satisfy the dynamic-ball transition
    condition, so the measured junction jumps decay like e^{-lambda T}.

    Returns a SpecificationSymbolic for symbolic/trivial systems (jumps in
    the shift metric, exact zeros for the higher-block coding) and a
    SpecificationNumeric for toral systems.
    """
    coding = dynamic_ball_transitions(system, horizon, radius,
                                      condition=condition)
    cycle = shortest_periodic_orbit(coding.sft, min_period=min_period,
                                    check_bound=False)
    p = cycle.period
    if isinstance(system, (SymbolicSystem, FixedPointSystem)):
        segments = [(int(s), 2 * horizon) for s in cycle.word]
        jumps = [0.0] * p
        return SpecificationSymbolic(segments=segments, jump_sizes=jumps,
                                     period=2 * horizon * p)
    model = system.model
    centers = coding.center_points[list(cycle.word)]
    # start each segment at phi_T(center); measure the junction gaps
    starts = centers.copy()
    for _ in range(horizon):
        starts = model.step(starts)
    ends = starts.copy()
    for _ in range(2 * horizon):
        ends = model.step(ends)
    jumps = [float(np.linalg.norm(torus_delta(ends[i], starts[(i + 1) % p])))
             for i in range(p)]
    segments = [(starts[i].copy(), 2 * horizon) for i in range(p)]
    return SpecificationNumeric(segments=segments, jumps=jumps, periodic=True)


def _anchor_displacement(model: HyperbolicModel, x: np.ndarray, t2: int,
                         delta: float, margin: float) -> np.ndarray:
    """Largest displacement w with x in the dynamic ball B(x + w, t2, delta).

    The stable component is margin*delta; the unstable coefficient is set so
    the window-end separation has unstable size margin*delta.  For the
    unperturbed cat map this is margin*delta*lam^{-t2} in closed form; for
    perturbed maps it is found by a secant iteration on the measured
    window-end unstable component (the linearization of phi_{t2} along the
    orbit).
    """
    lam = model.lam_u
    base = -margin * delta * model.e_s
    if model.kind == "cat_map" and not model.eps_p:
        return base + margin * delta * lam ** (-t2) * model.e_u

    # perturbed maps: shoot the anchor onto the stable set of x so the
    # separation decays monotonically through the window.  The unstable
    # coefficient is refined window-by-window (a Newton step per length)
    # which keeps every measured separation small and wrap-free.
    def end_u(alpha, n):
        a, b = x, np.mod(x + base + alpha * model.e_u, 1.0)
        for _ in range(n):
            a, b = model.step(a), model.step(b)
        return float(torus_delta(a, b) @ model.e_u)

    alpha = 0.0
    for n in range(1, t2 + 1):
        h = delta * lam ** (-n) * 1e-4
        for _ in range(3):
            r = end_u(alpha, n)
            slope = (end_u(alpha + h, n) - r) / h
            if abs(r) < 1e-13 or slope == 0:
                break
            alpha -= r / slope
    return base + alpha * model.e_u


def jump_decay_experiment(horizons=(2, 3, 4, 5, 6), delta: float = 0.2,
                          model: HyperbolicModel = None,
                          margin: float = 0.9) -> dict:
    """Measure the e^{-lambda T} decay of specification jumps on the cat map.

    For each horizon T, take theta on the period-7 orbit and place the next
    segment anchor at vartheta = phi_{2T}(theta) + w, with w the largest
    displacement keeping phi_{2T}(theta) inside the dynamic ball
    B(vartheta, 2T, delta): eigen components (margin delta lam^{-2T},
    -margin delta).  The ball condition is verified by iterating both
    orbits; the specification takes the middle [T, 3T] windows, so the
    junction jump |A^T w| ~ lam^{-T} delta.  Returns the fitted decay rate
    of log(jump) against T, which should match log(lam).
    """
    from .shadowing import cat_map, cat_periodic_orbit
    model = model or cat_map()
    lam = model.lam_u
    theta = cat_periodic_orbit(7)[0]
    specs, jumps = [], []
    for t in horizons:
        t2 = 2 * t
        x = theta
        for _ in range(t2):
            x = model.step(x)
        w = _anchor_displacement(model, x, t2, delta, margin)
        vartheta = np.mod(x + w, 1.0)
        # verify the transition condition: phi_{2T}(theta) stays delta-close
        # to the orbit of vartheta over the whole window
        a, b = x, vartheta
        worst = 0.0
        for _ in range(t2 + 1):
            worst = max(worst, float(np.linalg.norm(torus_delta(a, b))))
            a, b = model.step(a), model.step(b)
        if worst > delta * (1 + 1e-9):
            raise SftError(f"ball condition fails at horizon {t}: {worst}")
        # middle [T, 3T] windows of the two anchors
        s1 = theta
        for _ in range(t):
            s1 = model.step(s1)
        e1 = s1
        for _ in range(t2):
            e1 = model.step(e1)
        s2 = vartheta
        for _ in range(t):
            s2 = model.step(s2)
        jump = float(np.linalg.norm(torus_delta(e1, s2)))
        specs.append(SpecificationNumeric(
            segments=[(s1, t2), (s2, t2)], jumps=[jump], periodic=False))
        jumps.append(jump)
    ts = np.asarray(horizons, dtype=float)
    slope = float(np.polyfit(ts, np.log(jumps), 1)[0])
    return {"horizons": list(horizons), "jumps": jumps,
            "decay_rate": -slope, "target_rate": math.log(lam),
            "specifications": specs}
