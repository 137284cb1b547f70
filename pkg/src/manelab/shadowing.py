"""Hyperbolic shadowing on exactly solvable systems.

Implements the shadowing layer on the Arnold cat map (linear toral
automorphism), a smoothly perturbed cat map, and a constant-roof suspension:

- stable/unstable splittings and canonical coordinates (bracket + time shift),
- shadowing of delta-possible periodic specifications with measured error
  constants,
- two-sided exponential closeness profiles,
- a statistical expansivity estimate,
- the escape-time segmentation of distance profiles (S_k, T_k, C_k, B_k).

The cat map is solved exactly: its eigenbasis is orthonormal (the matrix is
symmetric), so dynamic balls, brackets and the linear shadowing equation all
reduce to closed-form one-dimensional geometric series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT5 = math.sqrt(5.0)

#: Expansion rate of the cat map, the large eigenvalue (3+sqrt(5))/2.
CAT_LAMBDA = (3.0 + SQRT5) / 2.0

#: Per-step expansion exponent log((3+sqrt(5))/2); also the entropy.
CAT_LOG_LAMBDA = math.log(CAT_LAMBDA)


class ShadowingError(ValueError):
    """Raised when a shadowing precondition fails."""


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperbolicModel:
    """A hyperbolic testbed system.

    kind is one of "cat_map", "perturbed_cat_map", "suspension".  The
    splitting is constant for the (perturbed) cat map: unstable and stable
    directions are the eigenvectors of [[2,1],[1,1]], which are orthonormal.

    eps_p is the size of the smooth perturbation for "perturbed_cat_map"
    (x -> A x + eps_p * s(x) with s = (sin 2 pi x2, sin 2 pi x1) / (2 pi)).
    roof is the constant roof function for the suspension flow.
    """

    kind: str = "cat_map"
    eps_p: float = 0.0
    roof: float = 1.0

    def __post_init__(self):
        if self.kind not in ("cat_map", "perturbed_cat_map", "suspension"):
            raise ShadowingError(f"unsupported model kind {self.kind!r}")
        if self.kind == "perturbed_cat_map" and not 0 <= self.eps_p < 0.05:
            raise ShadowingError("eps_p must be small and nonnegative")
        if self.roof <= 0:
            raise ShadowingError("roof must be positive")

    # matrix and splitting ---------------------------------------------------

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[2.0, 1.0], [1.0, 1.0]])

    @property
    def lam_u(self) -> float:
        return CAT_LAMBDA

    @property
    def lam_s(self) -> float:
        return 1.0 / CAT_LAMBDA

    @property
    def e_u(self) -> np.ndarray:
        """Unit unstable eigenvector (1, (sqrt(5)-1)/2), normalized."""
        v = np.array([1.0, (SQRT5 - 1.0) / 2.0])
        return v / np.linalg.norm(v)

    @property
    def e_s(self) -> np.ndarray:
        """Unit stable eigenvector, orthogonal to e_u."""
        v = np.array([(SQRT5 - 1.0) / 2.0, -1.0])
        return v / np.linalg.norm(v)

    # dynamics ---------------------------------------------------------------

    def step(self, x: np.ndarray) -> np.ndarray:
        """One forward step of the map (points in the last axis of shape 2)."""
        x = np.asarray(x, dtype=float)
        y = x @ self.matrix.T
        if self.kind == "perturbed_cat_map" and self.eps_p:
            two_pi = 2.0 * math.pi
            pert = np.stack(
                [np.sin(two_pi * x[..., 1]), np.sin(two_pi * x[..., 0])],
                axis=-1,
            ) / two_pi
            y = y + self.eps_p * pert
        return np.mod(y, 1.0)

    def step_back(self, x: np.ndarray) -> np.ndarray:
        """One backward step (exact inverse for cat_map, Newton otherwise)."""
        x = np.asarray(x, dtype=float)
        ainv = np.array([[1.0, -1.0], [-1.0, 2.0]])
        y = np.mod(x @ ainv.T, 1.0)
        if self.kind == "perturbed_cat_map" and self.eps_p:
            for _ in range(40):
                delta = torus_delta(self.step(y), x)
                if np.max(np.abs(delta)) < 1e-14:
                    break
                y = np.mod(y + delta @ ainv.T, 1.0)
        return y

    def orbit(self, x: np.ndarray, n: int) -> np.ndarray:
        """Forward orbit segment [x, f(x), ..., f^(n-1)(x)], shape (n, 2)."""
        out = np.empty((n, 2))
        cur = np.asarray(x, dtype=float)
        for i in range(n):
            out[i] = cur
            cur = self.step(cur)
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        if self.kind != "perturbed_cat_map" or not self.eps_p:
            return self.matrix
        two_pi = 2.0 * math.pi
        j = self.matrix.copy()
        j[0, 1] += self.eps_p * math.cos(two_pi * x[1])
        j[1, 0] += self.eps_p * math.cos(two_pi * x[0])
        return j

    def eigen_coords(self, delta: np.ndarray) -> np.ndarray:
        """Project displacement vectors onto (unstable, stable) coordinates."""
        delta = np.asarray(delta, dtype=float)
        return np.stack([delta @ self.e_u, delta @ self.e_s], axis=-1)


def cat_map() -> HyperbolicModel:
    return HyperbolicModel(kind="cat_map")


def perturbed_cat_map(eps_p: float) -> HyperbolicModel:
    return HyperbolicModel(kind="perturbed_cat_map", eps_p=eps_p)


def suspension(roof: float = 1.0) -> HyperbolicModel:
    return HyperbolicModel(kind="suspension", roof=roof)


def torus_delta(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shortest displacement b - a on the torus, componentwise in [-1/2, 1/2)."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    return d - np.round(d)


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(torus_delta(a, b), axis=-1)


# ---------------------------------------------------------------------------
# rational periodic points of the cat map
# ---------------------------------------------------------------------------


def _hnf_basis(cols: list[tuple[int, int]]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Hermite-style triangular basis of the integer lattice spanned by cols.

    Returns (a, 0), (b, c) with a, c > 0: every lattice element is
    i*(a,0) + j*(b,c).
    """
    cols = [c for c in cols if c != (0, 0)]
    # Reduce second components by the gcd using column operations.
    work = [list(c) for c in cols]
    while True:
        nz = [c for c in work if c[1] != 0]
        if len(nz) <= 1:
            break
        nz.sort(key=lambda c: abs(c[1]))
        pivot = nz[0]
        for c in nz[1:]:
            q = c[1] // pivot[1]
            c[0] -= q * pivot[0]
            c[1] -= q * pivot[1]
    second = [c for c in work if c[1] != 0]
    firsts = [c[0] for c in work if c[1] == 0 and c[0] != 0]
    a = math.gcd(*firsts) if len(firsts) > 1 else (abs(firsts[0]) if firsts else 0)
    if not second:
        raise ValueError("degenerate lattice")
    b, c = second[0]
    if c < 0:
        b, c = -b, -c
    if a == 0:
        raise ValueError("degenerate lattice")
    b %= a if a else 1
    return (a, 0), (b, c)


def cat_matrix_power(n: int) -> np.ndarray:
    """Integer matrix A^n for the cat map, via exact integer arithmetic."""
    m = np.array([[2, 1], [1, 1]], dtype=object)
    out = np.array([[1, 0], [0, 1]], dtype=object)
    for _ in range(n):
        out = out @ m
    return out


def cat_periodic_points(n: int) -> np.ndarray:
    """All fixed points of the n-th cat map iterate, as an (N, 2) float array.

    These are the rational points x with (A^n - I) x integral; there are
    det(A^n - I) = lam^n + lam^(-n) - 2 of them and they form a sublattice
    of the torus, enumerated through a triangular basis of the solution
    lattice.
    """
    m = cat_matrix_power(n) - np.array([[1, 0], [0, 1]], dtype=object)
    det = int(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    big_n = abs(det)
    if big_n == 0:
        raise ValueError("degenerate power")
    # adj(M) columns generate {x in Z^2 : M x = 0 mod N}, together with N Z^2.
    adj_cols = [
        (int(m[1, 1]), int(-m[1, 0])),
        (int(-m[0, 1]), int(m[0, 0])),
        (big_n, 0),
        (0, big_n),
    ]
    (a, _), (b, c) = _hnf_basis(adj_cols)
    n_i = big_n // a
    n_j = big_n // c
    assert n_i * n_j == big_n
    i = np.arange(n_i)
    j = np.arange(n_j)
    px = (a * i[:, None] + b * j[None, :]) % big_n
    py = (c * np.broadcast_to(j[None, :], px.shape)) % big_n
    pts = np.stack([px.ravel(), py.ravel()], axis=1).astype(float) / big_n
    return pts


def cat_periodic_orbit(period: int) -> np.ndarray:
    """A periodic orbit of the cat map with the exact given prime period.

    Picks a nonzero fixed point of A^period and verifies the period is not a
    proper divisor.  Returns the orbit as a (period, 2) array of exact
    rationals represented in float (denominator |det(A^period - I)|).
    """
    m = cat_matrix_power(period) - np.array([[1, 0], [0, 1]], dtype=object)
    det = int(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    big_n = abs(det)
    # x = M^{-1} (1, 0) = (m22, -m21) / det, which satisfies M x = (1,0) = 0 mod 1
    p = int(m[1, 1]) % big_n
    q = int(-m[1, 0]) % big_n
    amat = np.array([[2, 1], [1, 1]], dtype=object)
    pts = []
    cur = (p, q)
    for _ in range(period):
        pts.append(cur)
        cur = (int(amat[0, 0] * cur[0] + amat[0, 1] * cur[1]) % big_n,
               int(amat[1, 0] * cur[0] + amat[1, 1] * cur[1]) % big_n)
    if cur != (p, q):
        raise AssertionError("orbit did not close")
    if len({tuple(pt) for pt in pts}) != period:
        raise AssertionError(f"period {period} is not primitive for this seed")
    return np.array(pts, dtype=float) / big_n


# ---------------------------------------------------------------------------
# canonical coordinates
# ---------------------------------------------------------------------------


#: Default closeness threshold for the bracket operation (measured; the
#: bracket of the linear model is globally defined but loses its local
#: meaning past the injectivity scale of the torus).
ETA0 = 0.2


def canonical_coordinates(model: HyperbolicModel, x, y, eta0: float = ETA0):
    """Bracket point <x, y> and time shift v.

    For map kinds v = 0 and <x, y> is the intersection of the stable line
    through x with the unstable line through y, solved in the eigenbasis.
    For the suspension, the base points are bracketed and v is the roof-aware
    difference of the fiber coordinates.
    """
    if model.kind == "suspension":
        (xb, xt), (yb, yt) = (x[0], x[1]), (y[0], y[1])
        base_model = cat_map()
        d_base = float(torus_distance(np.asarray(xb), np.asarray(yb)))
        v = yt - xt
        v -= model.roof * round(v / model.roof)
        if max(d_base, abs(v)) > eta0:
            raise ShadowingError(f"points are farther apart than eta0={eta0}")
        bracket_base, _ = canonical_coordinates(base_model, xb, yb, eta0=eta0)
        return (bracket_base, yt), v

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    delta = torus_delta(x, y)
    dist = float(np.linalg.norm(delta))
    if dist > eta0:
        raise ShadowingError(f"d(x,y)={dist:.4g} exceeds eta0={eta0}")
    ds = float(delta @ model.e_s)
    bracket = np.mod(x + ds * model.e_s, 1.0)
    if model.kind == "perturbed_cat_map" and model.eps_p:
        bracket = _bracket_newton(model, x, y, bracket)
    return bracket, 0.0


def _bracket_newton(model, x, y, z0, horizon: int = 12):
    """Refine the linear bracket on the perturbed map.

    Solves for z with the forward orbit of z tracking x (unstable component
    of the horizon-step image difference vanishes) and the backward orbit
    tracking y.
    """
    z = z0.copy()

    def residual(z):
        fu = torus_delta(_orbit_end(model, x, horizon), _orbit_end(model, z, horizon))
        bu = torus_delta(_orbit_end(model, y, -horizon), _orbit_end(model, z, -horizon))
        return np.array([fu @ model.e_u, bu @ model.e_s])

    for _ in range(30):
        r = residual(z)
        if np.max(np.abs(r)) < 1e-13:
            break
        eps = 1e-7
        jac = np.empty((2, 2))
        for k, basis in enumerate((model.e_u, model.e_s)):
            jac[:, k] = (residual(np.mod(z + eps * basis, 1.0)) - r) / eps
        corr = np.linalg.solve(jac, -r)
        z = np.mod(z + corr[0] * model.e_u + corr[1] * model.e_s, 1.0)
    return z


def _orbit_end(model, x, n):
    cur = np.asarray(x, dtype=float)
    stepper = model.step if n >= 0 else model.step_back
    for _ in range(abs(n)):
        cur = stepper(cur)
    return cur


# ---------------------------------------------------------------------------
# specifications and shadowing
# ---------------------------------------------------------------------------


@dataclass
class SpecificationNumeric:
    """A delta-possible specification: periodic chain of orbit segments.

    segments is a list of (start point, integer duration); jumps[i] is the
    measured gap between the end of segment i and the start of segment i+1
    (cyclically).  delta is the maximum jump.
    """

    segments: list
    jumps: list
    periodic: bool = True

    @property
    def delta(self) -> float:
        return max(self.jumps) if self.jumps else 0.0

    @property
    def total_steps(self) -> int:
        return sum(int(n) for _, n in self.segments)

    def pseudo_orbit(self, model: HyperbolicModel) -> np.ndarray:
        """Concatenate the segments into one periodic pseudo-orbit."""
        pieces = [model.orbit(np.asarray(p, dtype=float), int(n))
                  for p, n in self.segments]
        return np.concatenate(pieces, axis=0)


def specification_from_points(model, points, jump_indices=None):
    """Build a single-segment-per-jump specification from a pseudo-orbit."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    gaps = torus_distance(model.step(points), np.roll(points, -1, axis=0))
    segments = [(points[0].copy(), n)]
    return SpecificationNumeric(segments=segments, jumps=[float(np.max(gaps))],
                                periodic=True), gaps


@dataclass
class ShadowResult:
    """Outcome of shadowing a specification."""

    shadow_point: np.ndarray
    shadow_orbit: np.ndarray
    corrections: np.ndarray
    sup_error: float
    e_measured: float
    reparametrization: object = None  # identity for maps

    def sigma(self, t):
        """Reparametrization sigma(t); identity for map models."""
        return t


#: Threshold above which the linearized shadowing solve is refused.
DELTA0 = 0.05


def shadow_pseudo_orbit(model: HyperbolicModel, points: np.ndarray,
                        delta0: float = DELTA0) -> ShadowResult:
    """Shadow a periodic pseudo-orbit of the (perturbed) cat map.

    Solves the periodic linear conjugacy equation d_{i+1} = A d_i + e_i in
    the eigenbasis by geometric series (expanding component backward, the
    contracting one forward), then Newton-iterates for the perturbed map.
    The per-direction correction is bounded by max|e| / (1 - lam^{-1}).
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < 1:
        raise ShadowingError("empty pseudo-orbit")
    errors = torus_delta(np.roll(points, -1, axis=0), model.step(points))
    jump = float(np.max(np.linalg.norm(errors, axis=1))) if n else 0.0
    if jump >= delta0:
        raise ShadowingError(
            f"max jump {jump:.4g} is not below delta0={delta0}")

    shadow = points.copy()
    lam = model.lam_u
    for _ in range(60):
        errors = torus_delta(np.roll(shadow, -1, axis=0), model.step(shadow))
        resid = float(np.max(np.abs(errors)))
        if resid < 1e-14:
            break
        eu, es = model.eigen_coords(errors).T
        # d_{i+1} = lam * d_i + e_i (unstable): solve backward, geometric;
        # each pass around the circle contracts the defect by lam^{-n}.
        du = np.zeros(n)
        for _ in range(200):
            prev = du[0]
            for i in range(n - 1, -1, -1):
                du[i] = (du[(i + 1) % n] - eu[i]) / lam
            if abs(du[0] - prev) < 1e-16:
                break
        # contracting component forward.
        ds = np.zeros(n)
        for _ in range(200):
            prev = ds[0]
            for i in range(n):
                ds[(i + 1) % n] = ds[i] / lam + es[i]
            if abs(ds[0] - prev) < 1e-16:
                break
        corr = du[:, None] * model.e_u[None, :] + ds[:, None] * model.e_s[None, :]
        shadow = np.mod(shadow + corr, 1.0)
        if model.kind == "cat_map":
            break

    corrections = torus_delta(points, shadow)
    sup_error = float(np.max(np.linalg.norm(corrections, axis=1)))
    delta = jump if jump > 0 else 1.0
    return ShadowResult(shadow_point=shadow[0].copy(), shadow_orbit=shadow,
                        corrections=corrections, sup_error=sup_error,
                        e_measured=sup_error / delta)


def shadow_specification(model: HyperbolicModel, spec: SpecificationNumeric,
                         delta0: float = DELTA0) -> ShadowResult:
    """Shadow a delta-possible periodic specification (Bowen-style)."""
    if not spec.periodic:
        raise ShadowingError("only periodic specifications are supported")
    if spec.delta >= delta0:
        raise ShadowingError(f"delta={spec.delta:.4g} is not below {delta0}")
    points = spec.pseudo_orbit(model)
    result = shadow_pseudo_orbit(model, points, delta0=delta0)
    # Periodicity of the shadow: re-imaging the first point around the period
    # must return to itself.
    back = result.shadow_orbit[0]
    closing = float(torus_distance(
        model.step(result.shadow_orbit[-1]), result.shadow_orbit[0]))
    assert closing < 1e-9, f"shadow failed to close (gap {closing:.3g})"
    del back
    return result


# ---------------------------------------------------------------------------
# exponential closeness and expansivity
# ---------------------------------------------------------------------------


#: Closeness threshold for the two-sided profile estimate.
BETA0 = 0.05


@dataclass
class ClosenessProfile:
    times: np.ndarray
    distances: np.ndarray
    v: float
    decay_rate: float
    domination_constant: float


def exponential_closeness(model: HyperbolicModel, x, y, window: int,
                          beta0: float = BETA0) -> ClosenessProfile:
    """Distance profile d(f^s x, f^s y) for s in [-L, L], with decay fit.

    Requires the orbits to stay beta0-close over the whole window.  The
    profile is computed from the eigen-decomposition of the displacement
    (exact for the linear model, avoiding catastrophic cancellation for
    displacements far below float resolution after expansion).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    delta = torus_delta(x, y)
    du, ds = model.eigen_coords(delta)
    lam = model.lam_u
    s = np.arange(-window, window + 1)
    prof = np.sqrt((du * lam ** s.astype(float)) ** 2
                   + (ds * lam ** (-s.astype(float))) ** 2)
    if prof.size and float(np.max(prof)) > beta0:
        raise ShadowingError(
            f"orbits separate beyond beta0={beta0} inside the window")
    endpoint_sum = prof[0] + prof[-1]
    with np.errstate(divide="ignore"):
        bound = np.exp(-CAT_LOG_LAMBDA * (window - np.abs(s))) * endpoint_sum
        ratios = np.where(bound > 0, prof / np.maximum(bound, 1e-300), 0.0)
    dom = float(np.max(ratios)) if prof.size else 0.0

    # Fit the decay exponent on the right half (unstable-dominated side).
    mask = (s >= 0) & (prof > 0)
    if np.count_nonzero(mask) >= 3:
        coeffs = np.polyfit(s[mask].astype(float), np.log(prof[mask]), 1)
        rate = float(coeffs[0])
    else:
        rate = float("nan")
    return ClosenessProfile(times=s, distances=prof, v=0.0,
                            decay_rate=rate, domination_constant=dom)


def expansivity_estimate(model: HyperbolicModel, eta: float, window: int = 10,
                         samples: int = 200, seed: int = 0) -> dict:
    """Statistical expansivity constant alpha-bar at shift budget eta.

    Samples pairs of distinct points not on a common orbit segment and
    records the smallest over pairs of the largest orbit separation within
    [-L, L]; any closeness threshold below that value forces coincidence (up
    to a time shift of at most eta, trivial for maps).
    """
    if eta <= 0:
        raise ShadowingError("eta must be positive")
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(samples):
        x = rng.random(2)
        d0 = 10 ** rng.uniform(-4, -0.8)
        ang = rng.uniform(0, 2 * math.pi)
        y = np.mod(x + d0 * np.array([math.cos(ang), math.sin(ang)]), 1.0)
        sep = 0.0
        xf, yf = x.copy(), y.copy()
        xb, yb = x.copy(), y.copy()
        for _ in range(window):
            xf, yf = model.step(xf), model.step(yf)
            xb, yb = model.step_back(xb), model.step_back(yb)
            sep = max(sep, float(torus_distance(xf, yf)),
                      float(torus_distance(xb, yb)))
        worst = min(worst, sep)
    return {"alpha_bar": worst, "eta": eta, "window": window,
            "samples": samples}


# ---------------------------------------------------------------------------
# escape-time segmentation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EscapeThresholds:
    """Thresholds (channel entry C(B+1) rho, f-level gamma/3, return gamma/4)."""

    g_enter: float
    f_escape: float
    f_return: float

    def __post_init__(self):
        if not 0 < self.g_enter < self.f_return < self.f_escape:
            raise ValueError(
                "thresholds must satisfy 0 < g_enter < f_return < f_escape")


@dataclass
class EscapeSegmentation:
    """Backward-in-time escape bookkeeping of distance profiles.

    times is the (ascending) sample grid ending at 0.  S, T, C, B hold the
    recorded times; S[0] = 0 always.  All entries are elements of times.
    """

    times: np.ndarray
    S: list = field(default_factory=list)
    T: list = field(default_factory=list)
    C: list = field(default_factory=list)
    B: list = field(default_factory=list)
    thresholds: EscapeThresholds = None

    def order_relations_hold(self) -> bool:
        """The segmentation order relations: T_{k+1} <= C_k < S_k <= T_k <= S_{k-1}."""
        for k in range(len(self.C)):
            if not (self.C[k] < self.S[k + 1] <= self.T[k] <= self.S[k]):
                return False
            if k + 1 < len(self.T) and not self.T[k + 1] <= self.C[k]:
                return False
        return True


def escape_segmentation(times, f, g, thresholds: EscapeThresholds) -> EscapeSegmentation:
    """Segment sampled distance profiles f (to the whole orbit) and g (to the
    synchronized point) into escape episodes, scanning backward from time 0.

    Recursion: S_0 = 0; T_k = last time before S_{k-1} with g <= g_enter;
    C_k = last time before T_k where f reaches f_escape; S_k = first time
    after C_k with g <= g_enter; B_k = last time before C_k with
    f <= f_return.  Stops when no further crossing exists.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if times.ndim != 1 or times.size < 2 or not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing with >= 2 samples")
    if abs(times[-1]) > 1e-12:
        raise ValueError("profiles must end at time 0")
    if f.shape != times.shape or g.shape != times.shape:
        raise ValueError("profile shapes must match times")
    if np.any(f > g + 1e-12):
        raise ValueError("requires f <= g pointwise")

    seg = EscapeSegmentation(times=times, thresholds=thresholds)
    seg.S.append(0.0)
    prev_s_idx = times.size - 1
    while True:
        # T_k: last index strictly before S_{k-1} with g below the gate.
        cand = np.nonzero(g[:prev_s_idx] <= thresholds.g_enter)[0]
        if cand.size == 0:
            break
        t_idx = int(cand[-1])
        seg.T.append(float(times[t_idx]))
        # C_k: last index strictly before T_k where f reaches the escape level.
        cand = np.nonzero(f[:t_idx] >= thresholds.f_escape)[0]
        if cand.size == 0:
            break
        c_idx = int(cand[-1])
        seg.C.append(float(times[c_idx]))
        # S_k: first index strictly after C_k with g below the gate.
        cand = np.nonzero(g[c_idx + 1:] <= thresholds.g_enter)[0]
        assert cand.size > 0  # t_idx qualifies
        s_idx = c_idx + 1 + int(cand[0])
        seg.S.append(float(times[s_idx]))
        # B_k: last index before C_k with f back below the return level.
        cand = np.nonzero(f[:c_idx] <= thresholds.f_return)[0]
        if cand.size:
            seg.B.append(float(times[int(cand[-1])]))
        else:
            break
        prev_s_idx = s_idx
    return seg
