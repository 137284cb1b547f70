"""Continuous variational layer on grid discretizations of the torus.

An ActionGraph discretizes the free-time action: nodes are spatial grid
points, edges are short hops with a finite menu of travel times, and the
edge weight at level k is the discretized integral of L + k.  On top of it:
the Mane action potential, the critical value by bisection with
negative-cycle certificates, Lax-Oleinik value fields, Mather/Aubry/Mane
set extraction, quadratic bounds at static points, crossing-gain surgery,
second-order action bounds, and the continuous channel potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import (
    NegativeCycleError,
    bellman_ford,
    dijkstra,
)

from .lagrangian import Curve, LagrangianModel, PhaseState, action, el_flow


class WeakKAMError(ValueError):
    """Raised on invalid parameters or diverging value iterations."""


TIME_MENU = (0.05, 0.1, 0.2, 0.4)


# ---------------------------------------------------------------------------
# action graph
# ---------------------------------------------------------------------------


@dataclass
class ActionGraph:
    """Discretized free-time action on a one-dimensional torus grid.

    Edges i -> (i + off) mod n for |off| <= max_hop carry one weight per
    travel time in the menu: w(k) = |off h|^2/(2 dt) - (U_i + U_j)/2 dt
    + k dt, affine in k with slope dt.
    """

    model: LagrangianModel
    n_nodes: int = 200
    max_hop: int = 20
    time_menu: tuple = TIME_MENU

    def __post_init__(self):
        if self.model.dimension != 1:
            raise WeakKAMError("ActionGraph supports dimension 1")
        n, per = self.n_nodes, self.model.period
        self.h = per / n
        self.nodes = np.arange(n) * self.h
        self.u_grid = np.asarray(self.model.u(self.nodes), dtype=float)
        offs = np.arange(-self.max_hop, self.max_hop + 1)
        src, dst, base, dts, vels = [], [], [], [], []
        for off in offs:
            dx = off * self.h
            j = (np.arange(n) + off) % n
            ubar = 0.5 * (self.u_grid + self.u_grid[j])
            for dt in self.time_menu:
                src.append(np.arange(n))
                dst.append(j)
                base.append(0.5 * dx * dx / dt - ubar * dt)
                dts.append(np.full(n, dt))
                vels.append(np.full(n, dx / dt))
        self.src = np.concatenate(src)
        self.dst = np.concatenate(dst)
        self.base = np.concatenate(base)
        self.dt = np.concatenate(dts)
        self.vel = np.concatenate(vels)
        # grouping of parallel edges for per-k minimum reduction
        self._order = np.lexsort((self.dst, self.src))
        s, d = self.src[self._order], self.dst[self._order]
        starts = np.nonzero(np.r_[True, (s[1:] != s[:-1]) | (d[1:] != d[:-1])])[0]
        self._starts = starts
        self._gsrc = s[starts]
        self._gdst = d[starts]

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def weights(self, k: float) -> np.ndarray:
        return self.base + k * self.dt

    def min_weight_matrix(self, k: float) -> csr_matrix:
        """Sparse matrix of the cheapest parallel edge per node pair."""
        w = self.weights(k)[self._order]
        wmin = np.minimum.reduceat(w, self._starts)
        return csr_matrix((wmin, (self._gsrc, self._gdst)),
                          shape=(self.n_nodes, self.n_nodes))

    def node_of(self, x: float) -> int:
        return int(np.round(float(x) / self.h)) % self.n_nodes

    def shortest_distances(self, k: float, sources) -> np.ndarray:
        mat = self.min_weight_matrix(k)
        if mat.data.min() >= 0:
            d = dijkstra(mat, indices=sources)
        else:
            d = bellman_ford(mat, indices=sources)
        return d

    def negative_cycle(self, k: float):
        """A cycle with negative weight at level k, or None (SPFA search)."""
        from collections import deque

        mat = self.min_weight_matrix(k).tocsr()
        n = self.n_nodes
        indptr, indices, data = mat.indptr, mat.indices, mat.data
        dist = np.zeros(n)
        pred = np.full(n, -1, dtype=np.int64)
        count = np.zeros(n, dtype=np.int64)
        inq = np.ones(n, dtype=bool)
        queue = deque(range(n))
        while queue:
            a = queue.popleft()
            inq[a] = False
            for idx in range(indptr[a], indptr[a + 1]):
                b, w = indices[idx], data[idx]
                cand = dist[a] + w
                if cand < dist[b] - 1e-15:
                    dist[b] = cand
                    pred[b] = a
                    count[b] += 1
                    if count[b] > n:
                        v = b
                        for _ in range(n):
                            v = pred[v]
                        cycle, cur = [v], pred[v]
                        while cur != v:
                            cycle.append(int(cur))
                            cur = pred[cur]
                        cycle.reverse()
                        return cycle
                    if not inq[b]:
                        inq[b] = True
                        queue.append(int(b))
        return None


def build_action_graph(model: LagrangianModel, n_nodes: int = 200,
                       max_hop: int = 20,
                       time_menu: tuple = TIME_MENU) -> ActionGraph:
    return ActionGraph(model=model, n_nodes=n_nodes, max_hop=max_hop,
                       time_menu=time_menu)


# ---------------------------------------------------------------------------
# potential and critical value
# ---------------------------------------------------------------------------


def mane_potential(model: LagrangianModel, k: float, x: float, y: float,
                   graph: ActionGraph = None) -> float:
    """Phi_k(x, y): cheapest >= 1 edge path value; -inf when a negative
    cycle is reachable (the grid torus is strongly connected, so any
    negative cycle connects every pair)."""
    graph = graph or build_action_graph(model)
    if graph.negative_cycle(k) is not None:
        return float("-inf")
    a, b = graph.node_of(x), graph.node_of(y)
    dist = graph.shortest_distances(k, [a])[0]
    assert np.all(np.isfinite(dist)), "grid graph must be connected"
    if a != b:
        return float(dist[b])
    return _loop_value(graph, k, a)


def _loop_value(graph: ActionGraph, k: float, a: int) -> float:
    """min over out-edges (a -> j) of w + dist(j, a), with >= 1 edge."""
    w = graph.weights(k)
    mask = graph.src == a
    mat = graph.min_weight_matrix(k)
    back = dijkstra(mat.T, indices=[a])[0] if mat.data.min() >= 0 \
        else bellman_ford(mat.T, indices=[a])[0]
    return float(np.min(w[mask] + back[graph.dst[mask]]))


def critical_value(model: LagrangianModel, graph: ActionGraph = None,
                   tol: float = 1e-6) -> dict:
    """Discrete Mane critical value by bisection on k with the
    negative-cycle oracle; returns the value, the bracket width, and a
    negative closed-curve certificate for k just below it."""
    graph = graph or build_action_graph(model)
    lo = float(graph.u_grid.min()) - 1.0
    hi = float(graph.u_grid.max()) + 1.0
    for attempt in range(2):
        if graph.negative_cycle(lo) is not None and \
                graph.negative_cycle(hi) is None:
            break
        lo -= 10.0
        hi += 10.0
    else:
        raise WeakKAMError("bisection bracket failure after widening")
    # negative closed curves exist exactly for k below the critical value
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if graph.negative_cycle(mid) is None:
            hi = mid
        else:
            lo = mid
    cert = graph.negative_cycle(hi - 2 * tol)
    return {"value": hi, "bracket": hi - lo,
            "certificate_cycle": cert,
            "discretization_estimate": graph.h}


# ---------------------------------------------------------------------------
# Lax-Oleinik value fields
# ---------------------------------------------------------------------------


@dataclass
class ValueField:
    """A dominated grid function u with its level c and grid geometry."""

    values: np.ndarray
    nodes: np.ndarray
    h: float
    level: float
    sources: np.ndarray = None

    def __call__(self, x):
        per = self.h * len(self.nodes)
        return np.interp(np.mod(np.asarray(x, dtype=float), per),
                         np.r_[self.nodes, per],
                         np.r_[self.values, self.values[0]])

    def domination_violations(self, graph: ActionGraph,
                              tol: float = 1e-9) -> int:
        w = graph.weights(self.level)
        gap = self.values[graph.dst] - self.values[graph.src] - w
        return int(np.sum(gap > tol))

    def to_csv(self) -> str:
        lines = ["x,u"]
        for x, u in zip(self.nodes, self.values):
            lines.append(f"{x:.17g},{u:.17g}")
        return "\n".join(lines)


def lax_oleinik(model: LagrangianModel, c: float,
                graph: ActionGraph = None, backward: bool = False) -> ValueField:
    """u(x) = Phi_c(p, x) minimized over the potential maxima p, the fixed
    point of the value iteration; backward=True gives ubar(x) = Phi_c(x, p).

    Raises with the measured drift rate when c is subcritical (negative
    cycle present, so the iteration diverges linearly).
    """
    graph = graph or build_action_graph(model)
    cyc = graph.negative_cycle(c)
    if cyc is not None:
        w = graph.min_weight_matrix(c)
        drift = sum(w[cyc[i], cyc[(i + 1) % len(cyc)]]
                    for i in range(len(cyc)))
        raise WeakKAMError(
            f"value iteration diverges: negative cycle with drift rate "
            f"{drift:.3e} per loop")
    sources = np.nonzero(graph.u_grid >= graph.u_grid.max() - 1e-12)[0]
    mat = graph.min_weight_matrix(c)
    if backward:
        mat = mat.T.tocsr()
    if mat.data.min() >= 0:
        d = dijkstra(mat, indices=sources)
    else:
        d = bellman_ford(mat, indices=sources)
    u = np.min(np.atleast_2d(d), axis=0)
    assert np.all(np.isfinite(u))
    return ValueField(values=u, nodes=graph.nodes.copy(), h=graph.h,
                      level=c, sources=sources)


# ---------------------------------------------------------------------------
# invariant set extraction
# ---------------------------------------------------------------------------


@dataclass
class InvariantSetApprox:
    """Flagged phase cells approximating one of the invariant sets."""

    kind: str
    points: np.ndarray          # rows (x, v)
    node_indices: np.ndarray
    tolerance: float

    def contains(self, other: "InvariantSetApprox") -> bool:
        mine = {tuple(np.round(p, 12)) for p in self.points}
        return all(tuple(np.round(p, 12)) in mine for p in other.points)


def peierls_barrier(graph: ActionGraph, c: float,
                    min_edges: int = 256) -> np.ndarray:
    """Loop barrier h(x, x) through at least min_edges hops, computed by
    min-plus matrix squaring.  Short loops near a potential maximum are
    almost free, so the one-edge barrier cannot separate the Aubry set;
    long loops must pay the off-Aubry running cost on every hop."""
    w = graph.weights(c)
    dist = np.full((graph.n_nodes, graph.n_nodes), np.inf)
    np.minimum.at(dist, (graph.src, graph.dst), w)
    power = dist.copy()
    steps = max(1, int(math.ceil(math.log2(min_edges))))
    for _ in range(steps):
        power = np.min(power[:, :, None] + power[None, :, :], axis=1)
    return np.diag(power).copy()


def classify_and_extract_sets(model: LagrangianModel, c: float,
                              u: ValueField,
                              graph: ActionGraph = None) -> tuple:
    """(Mather, Aubry, Mane) flagged approximations.

    Aubry: nodes whose long-loop barrier vanishes (the cheapest node can
    idle on its zero-cost self loop, so the zero set is exact up to
    rounding).  Mather: nodes whose own self loop is free, the static
    minimizing configurations.  Mane: Aubry cells plus the phase cells of
    edges calibrating the forward or backward value field, with tolerance
    h^2 / 3 (a third of the per-cell action quantum).  The inclusions
    Mather <= Aubry <= Mane hold by construction.
    """
    graph = graph or build_action_graph(model)
    w = graph.weights(c)
    zero_tol = 1e-9 * (1.0 + abs(c))
    barrier = peierls_barrier(graph, c)
    aubry_nodes = np.nonzero(barrier <= zero_tol)[0]
    self_loop = np.full(graph.n_nodes, np.inf)
    loops = graph.src == graph.dst
    np.minimum.at(self_loop, graph.src[loops], w[loops])
    mather_nodes = np.nonzero(self_loop <= zero_tol)[0]

    def loop_velocity(i):
        mask = graph.src == i
        if self_loop[i] <= zero_tol:
            return 0.0
        return float(graph.vel[mask][np.argmin(w[mask])])

    aubry_pts = np.array([[graph.nodes[i], loop_velocity(i)]
                          for i in aubry_nodes]).reshape(-1, 2)
    mather_pts = np.array([[graph.nodes[i], loop_velocity(i)]
                           for i in mather_nodes]).reshape(-1, 2)

    ubar = lax_oleinik(model, c, graph, backward=True)
    # per-edge tolerance scales with duration so the implied velocity
    # error, of order sqrt(tol / dt), is uniform across the time menu
    cal_tol = (graph.h ** 2 / 3.0) * graph.dt / max(graph.time_menu)
    gap_f = u.values[graph.dst] - u.values[graph.src] - w
    gap_b = ubar.values[graph.src] - ubar.values[graph.dst] - w
    mane_rows = [tuple(p) for p in aubry_pts]
    mane_nodes = set(int(i) for i in aubry_nodes)
    period = graph.h * graph.n_nodes
    # flag chord midpoints of short calibrated edges; long chords place
    # their endpoints far from where their velocity meets the energy shell
    short = np.abs(graph.vel * graph.dt) <= 8 * graph.h + 1e-12
    for gap in (gap_f, gap_b):
        idx = np.nonzero((np.abs(gap) <= cal_tol) & short)[0]
        for e in idx:
            a, b, v = int(graph.src[e]), int(graph.dst[e]), float(graph.vel[e])
            xm = (graph.nodes[a] + 0.5 * v * graph.dt[e]) % period
            mane_rows.append((xm, v))
            mane_nodes.update((a, b))
    mane_pts = np.array(sorted(set(mane_rows))).reshape(-1, 2)
    mather = InvariantSetApprox(kind="Mather", points=mather_pts,
                                node_indices=mather_nodes,
                                tolerance=zero_tol)
    aubry = InvariantSetApprox(kind="Aubry", points=aubry_pts,
                               node_indices=aubry_nodes, tolerance=zero_tol)
    mane = InvariantSetApprox(kind="Mane", points=mane_pts,
                              node_indices=np.array(sorted(mane_nodes)),
                              tolerance=float(graph.h ** 2 / 3.0))
    assert aubry.contains(mather), "Mather not inside Aubry"
    assert mane.contains(aubry), "Aubry not inside Mane"
    return mather, aubry, mane


def energy_resolution(graph: ActionGraph, vmax: float) -> float:
    """Scale of |E - c| attainable by calibrated cells whose speed stays
    below vmax: three cells of velocity quantization times the speed, the
    matching kinetic correction, and the potential variation per cell."""
    dv = graph.h / max(graph.time_menu)
    du = np.abs(np.diff(np.r_[graph.u_grid, graph.u_grid[0]])).max()
    return 3 * dv * vmax + 0.5 * (3 * dv) ** 2 + 2 * du


# ---------------------------------------------------------------------------
# quadratic bound at static points
# ---------------------------------------------------------------------------


def quadratic_bound_check(model: LagrangianModel, u: ValueField,
                          static_state: PhaseState, radius: float) -> float:
    """Measured K = sup over radius/4 <= |y-z| <= radius of
    |u(y) - u(z) - dL/dv(z, zdot) (y - z)| / |y - z|^2.  The inner cutoff
    keeps the grid error of u, of order h, from being divided by a
    vanishing |y-z|^2."""
    if radius < 8 * u.h:
        raise WeakKAMError(
            f"radius {radius} too small for grid resolution {u.h}; "
            f"need at least {8 * u.h}")
    z = float(static_state.position[0])
    vz = float(static_state.velocity[0])
    per = u.h * len(u.nodes)
    ys = z + np.linspace(-radius, radius, 801)
    dy = ys - z
    mask = np.abs(dy) >= radius / 4.0
    num = np.abs(u(np.mod(ys, per)) - u(np.mod(z, per)) - vz * dy)
    k_measured = float(np.max(num[mask] / dy[mask] ** 2))
    assert math.isfinite(k_measured)
    return k_measured


# ---------------------------------------------------------------------------
# crossing constants, crossing gain, second-order bounds
# ---------------------------------------------------------------------------


@dataclass
class CrossingConstants:
    eps: float
    delta: float
    eta: float
    zeta: float
    big_c: float

    def __post_init__(self):
        vals = (self.eps, self.delta, self.eta, self.zeta, self.big_c)
        if any(v <= 0 for v in vals):
            raise WeakKAMError("crossing constants must be positive")
        if self.big_c <= 1:
            raise WeakKAMError("C must exceed 1")


def _curve_state(curve: Curve, t: float):
    i = int(np.searchsorted(curve.times, t))
    i = max(0, min(i, len(curve.times) - 1))
    x = curve.positions[i]
    v = curve.velocities[i] if curve.velocities is not None else None
    return x, v


def crossing_gain(model: LagrangianModel, phi, curve_a: Curve,
                  curve_b: Curve, t0: float, window: float = 0.5,
                  big_c: float = 2.0) -> dict:
    """Action surplus of the exchange surgery at a transversal crossing.

    Both curves must be Euler-Lagrange for L + phi near t0 (caller's
    responsibility) and satisfy the angle condition
    d(da(t0), dg(t0)) >= C d(a(t0), g(t0)); violations are reported as a
    classified rejection naming the failed inequality.
    """
    pm = model if phi is None else _perturbed(model, phi)
    xa, va = _curve_state(curve_a, t0)
    xb, vb = _curve_state(curve_b, t0)
    pos_gap = float(np.linalg.norm(xa - xb))
    angle = float(np.linalg.norm(np.r_[xa - xb, va - vb]))
    if angle < big_c * pos_gap:
        return {"rejected": "angle condition d(da,dg) >= C d(a,g) failed",
                "angle": angle, "position_gap": pos_gap}
    ta, tb = t0 - window, t0 + window
    if ta < curve_a.times[0] or tb > curve_a.times[-1] or \
            ta < curve_b.times[0] or tb > curve_b.times[-1]:
        return {"rejected": "window exceeds curve domains",
                "angle": angle, "position_gap": pos_gap}
    sa, sb = curve_a.restrict(ta, tb), curve_b.restrict(ta, tb)
    ex_ab = _interp_curve(sa.times, sa.positions[0], sb.positions[-1])
    ex_ba = _interp_curve(sa.times, sb.positions[0], sa.positions[-1])
    original = action(pm, sa) + action(pm, sb)
    exchanged = action(pm, ex_ab) + action(pm, ex_ba)
    gain = original - exchanged
    eta = gain / angle ** 2 if angle > 0 else 0.0
    return {"gain": gain, "angle": angle, "eta_measured": eta,
            "surgery": (ex_ab, ex_ba), "position_gap": pos_gap}


def _interp_curve(times: np.ndarray, x0: np.ndarray,
                  x1: np.ndarray) -> Curve:
    s = (times - times[0]) / (times[-1] - times[0])
    pos = x0[None, :] + s[:, None] * (x1 - x0)[None, :]
    return Curve(times=times, positions=pos)


def _perturbed(model: LagrangianModel, phi) -> LagrangianModel:
    """Model with potential U - phi is wrong; L + phi means U -> U - phi."""
    base_u, base_g = model.potential, model.grad_potential
    h = 1e-6

    def u(x):
        return base_u(x) - phi(x)

    def grad(x):
        return base_g(x) - (phi(np.asarray(x) + h) - phi(np.asarray(x) - h)) \
            / (2 * h)

    return LagrangianModel(dimension=model.dimension, potential=u,
                           grad_potential=grad, period=model.period,
                           omega=model.omega, name=model.name + "+phi")


def second_order_action_bound(model: LagrangianModel, reference: Curve,
                              nearby: list, k_const: float = None) -> dict:
    """Check |action difference - boundary term| <= K (1 + T) rho^2 for each
    nearby curve, and the exchange-quadruple version with constant 3K."""
    t_len = reference.duration
    if k_const is None:
        xs = np.linspace(0.0, model.period, 512, endpoint=False)
        d2 = np.gradient(np.gradient(model.u(xs), xs), xs)
        k_const = 1.0 + float(np.max(np.abs(d2)))
    results = []
    vr0 = reference.velocities[0] if reference.velocities is not None else \
        (reference.positions[1] - reference.positions[0]) / \
        (reference.times[1] - reference.times[0])
    vr1 = reference.velocities[-1] if reference.velocities is not None else \
        (reference.positions[-1] - reference.positions[-2]) / \
        (reference.times[-1] - reference.times[-2])
    a_ref = action(model, reference)
    for curve in nearby:
        rho = _phase_distance(reference, curve)
        if rho > 1.0:
            raise WeakKAMError("nearby curve exits the comparison tube")
        boundary = float(np.dot(vr1, curve.positions[-1]
                                - reference.positions[-1])
                         - np.dot(vr0, curve.positions[0]
                                  - reference.positions[0]))
        diff = action(model, curve) - a_ref
        bound = k_const * (1.0 + t_len) * rho ** 2
        results.append({"rho": rho, "residual": abs(diff - boundary),
                        "bound": bound,
                        "holds": abs(diff - boundary) <= bound + 1e-12})
    ok = all(r["holds"] for r in results)
    quad = 3 * k_const * (1.0 + t_len) * max(
        (r["rho"] for r in results), default=0.0) ** 2
    return {"holds": ok, "per_curve": results, "k_const": k_const,
            "exchange_bound": quad}


def _phase_distance(a: Curve, b: Curve) -> float:
    pos = float(np.max(np.linalg.norm(a.positions - b.positions, axis=-1)))
    if a.velocities is not None and b.velocities is not None:
        vel = float(np.max(np.linalg.norm(a.velocities - b.velocities,
                                          axis=-1)))
        return max(pos, vel)
    return pos


# ---------------------------------------------------------------------------
# continuous channel potential
# ---------------------------------------------------------------------------


@dataclass
class GridPotential:
    """A nonnegative grid bump with closed-form evaluation."""

    values: np.ndarray
    nodes: np.ndarray
    h: float
    params: dict

    def __call__(self, x):
        per = self.h * len(self.nodes)
        return np.interp(np.mod(np.asarray(x, dtype=float), per),
                         np.r_[self.nodes, per],
                         np.r_[self.values, self.values[0]])

    def c2_norm(self) -> float:
        v = self.values
        d1 = (np.roll(v, -1) - np.roll(v, 1)) / (2 * self.h)
        d2 = (np.roll(v, -1) - 2 * v + np.roll(v, 1)) / self.h ** 2
        return float(max(np.max(np.abs(v)), np.max(np.abs(d1)),
                         np.max(np.abs(d2))))


def build_channel_continuous(orbit_positions, eps: float, rho: float,
                             gamma_bar: float, period: float = 1.0,
                             grid_n: int = 400) -> GridPotential:
    """The configuration-space channel: zero exactly on the projected orbit,
    quadratic floor >= eps rho^2 / 4 beyond distance rho, plateau
    eps gamma_bar^2 / 32 beyond gamma_bar / 4, with C2 norm below 10 eps.

    phi(d) = P (2 t^2 - t^4), t = min(d / m, 1), m = gamma_bar / 4,
    P = eps gamma_bar^2 / 32; then phi(rho) >= P (rho/m)^2 = eps rho^2 / 2.
    """
    if not rho < gamma_bar / 4:
        raise WeakKAMError(
            f"parameter ordering violated: rho = {rho} must be < "
            f"gamma_bar/4 = {gamma_bar / 4}")
    pts = np.atleast_1d(np.asarray(orbit_positions, dtype=float)).ravel()
    nodes = np.arange(grid_n) * (period / grid_n)
    diff = np.abs(nodes[:, None] - pts[None, :]) % period
    dist = np.min(np.minimum(diff, period - diff), axis=1)
    m = gamma_bar / 4.0
    plateau = eps * gamma_bar ** 2 / 32.0
    t = np.minimum(dist / m, 1.0)
    values = plateau * (2.0 * t ** 2 - t ** 4)
    phi = GridPotential(values=values, nodes=nodes, h=period / grid_n,
                        params={"eps": eps, "rho": rho,
                                "gamma_bar": gamma_bar,
                                "plateau": plateau})
    assert phi.c2_norm() < 10 * eps, "channel exceeds its C2 budget"
    return phi


# ---------------------------------------------------------------------------
# closed-curve nonnegativity
# ---------------------------------------------------------------------------


def closed_curve_actions(model: LagrangianModel, c: float, n_curves: int,
                         seed: int, graph: ActionGraph = None,
                         length: int = 30) -> np.ndarray:
    """Discretized actions of random closed grid curves at level c."""
    graph = graph or build_action_graph(model)
    rng = np.random.default_rng(seed)
    mat = graph.min_weight_matrix(c)
    dist = dijkstra(mat) if mat.data.min() >= 0 else bellman_ford(mat)
    w = graph.weights(c)
    by_src = {}
    for e in range(graph.n_edges):
        by_src.setdefault(int(graph.src[e]), []).append(e)
    out = []
    for _ in range(n_curves):
        start = int(rng.integers(graph.n_nodes))
        total, node = 0.0, start
        for _ in range(length):
            e = by_src[node][int(rng.integers(len(by_src[node])))]
            total += w[e]
            node = int(graph.dst[e])
        total += float(dist[node, start]) if node != start else 0.0
        out.append(total)
    return np.asarray(out)
