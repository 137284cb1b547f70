"""Tonelli Lagrangian testbed on flat one- and two-dimensional tori.

Mechanical Lagrangians L = |v|^2/2 + omega(x).v - U(x) with the flat metric:
energy, a time-reversible symplectic Euler-Lagrange flow, direct-method
Tonelli minimizers over homotopy lifts, and the a priori speed bound that
follows from energy conservation plus an action bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


class LagrangianError(ValueError):
    """Raised on invalid models, parameters, or failed convergence."""


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass
class LagrangianModel:
    """L = |v|^2/2 + omega(x).v - U(x) on a flat torus of the given period.

    The kinetic metric is the identity, so the convexity constant is 1.
    potential/grad_potential are vectorized callables; omega, when present,
    maps positions to covectors (d = 2 only in the flow).
    """

    dimension: int
    potential: object
    grad_potential: object
    period: float = 1.0
    omega: object = None
    name: str = "custom"
    convexity: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise LagrangianError("dimension must be 1 or 2")
        if self.period <= 0:
            raise LagrangianError("period must be positive")

    def u(self, x):
        return self.potential(np.asarray(x, dtype=float))

    def grad_u(self, x):
        return self.grad_potential(np.asarray(x, dtype=float))

    def wrap(self, x):
        return np.mod(np.asarray(x, dtype=float), self.period)

    def max_potential(self, samples: int = 4096) -> float:
        xs = np.linspace(0.0, self.period, samples, endpoint=False)
        grid = xs if self.dimension == 1 else np.stack(
            np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)
        return float(np.max(self.u(grid)))

    def min_potential(self, samples: int = 4096) -> float:
        xs = np.linspace(0.0, self.period, samples, endpoint=False)
        grid = xs if self.dimension == 1 else np.stack(
            np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)
        return float(np.min(self.u(grid)))

    def lagrangian(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        kin = 0.5 * np.sum(np.atleast_1d(v) ** 2, axis=-1)
        mag = 0.0
        if self.omega is not None:
            mag = np.sum(np.atleast_1d(self.omega(x))
                         * np.atleast_1d(v), axis=-1)
        return kin + mag - self.u(x)

    def to_json(self) -> str:
        obj = {"dim": self.dimension, "potential": self.name,
               "period": self.period}
        if self.name == "table":
            obj["samples"] = list(np.asarray(self._samples, dtype=float))
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "LagrangianModel":
        obj = json.loads(text)
        kind = obj.get("potential", "free")
        if kind == "cos":
            return pendulum()
        if kind == "free":
            return free_particle(int(obj.get("dim", 1)))
        if kind == "table":
            return table_model(np.asarray(obj["samples"], dtype=float),
                               period=float(obj.get("period", 1.0)))
        raise LagrangianError(f"unknown potential kind {kind!r}")


def free_particle(dimension: int = 1) -> LagrangianModel:
    def u(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1] if dimension > 1 else x.shape
        return np.zeros(shape)

    def grad(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    return LagrangianModel(dimension=dimension, potential=u,
                           grad_potential=grad, period=1.0, name="free")


def pendulum() -> LagrangianModel:
    """U(x) = cos x on the circle of length 2 pi; critical value max U = 1."""

    def u(x):
        return np.cos(np.asarray(x, dtype=float))

    def grad(x):
        return -np.sin(np.asarray(x, dtype=float))

    return LagrangianModel(dimension=1, potential=u, grad_potential=grad,
                           period=2.0 * math.pi, name="cos")


def table_model(samples: np.ndarray, period: float = 1.0) -> LagrangianModel:
    """One-dimensional potential from periodic samples, trigonometric
    interpolation so the gradient is analytic."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    coeffs = np.fft.rfft(samples) / n
    ks = np.arange(len(coeffs)) * (2.0 * math.pi / period)

    def u(x):
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, ks)
        out = coeffs[0].real + 2.0 * np.sum(
            coeffs[1:].real * np.cos(phase[..., 1:])
            - coeffs[1:].imag * np.sin(phase[..., 1:]), axis=-1)
        if n % 2 == 0:
            out -= coeffs[-1].real * np.cos(phase[..., -1])
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, ks)
        out = 2.0 * np.sum(
            -coeffs[1:].real * ks[1:] * np.sin(phase[..., 1:])
            - coeffs[1:].imag * ks[1:] * np.cos(phase[..., 1:]), axis=-1)
        if n % 2 == 0:
            out += coeffs[-1].real * ks[-1] * np.sin(phase[..., -1])
        return out

    model = LagrangianModel(dimension=1, potential=u, grad_potential=grad,
                            period=period, name="table")
    model._samples = samples
    return model


# ---------------------------------------------------------------------------
# phase states and curves
# ---------------------------------------------------------------------------


@dataclass
class PhaseState:
    """A tangent vector (x, v); the position is wrapped into the fundamental
    domain of its model's torus."""

    position: np.ndarray
    velocity: np.ndarray
    period: float = 1.0

    def __post_init__(self):
        self.position = np.mod(np.atleast_1d(
            np.asarray(self.position, dtype=float)), self.period)
        self.velocity = np.atleast_1d(np.asarray(self.velocity, dtype=float))
        if self.position.shape != self.velocity.shape:
            raise LagrangianError("position/velocity shape mismatch")


@dataclass
class Curve:
    """A piecewise-linear curve: strictly increasing times, lifted positions
    (not wrapped, so winding is visible), optional sampled velocities."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions[:, None]
        if self.velocities is not None:
            self.velocities = np.asarray(self.velocities, dtype=float)
            if self.velocities.ndim == 1:
                self.velocities = self.velocities[:, None]
        if len(self.times) != len(self.positions):
            raise LagrangianError("times/positions length mismatch")
        if not np.all(np.diff(self.times) > 0):
            raise LagrangianError("times must be strictly increasing")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def speeds(self) -> np.ndarray:
        if self.velocities is not None:
            return np.linalg.norm(self.velocities, axis=-1)
        dx = np.diff(self.positions, axis=0)
        dt = np.diff(self.times)[:, None]
        return np.linalg.norm(dx / dt, axis=-1)

    def restrict(self, t0: float, t1: float) -> "Curve":
        mask = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        vel = self.velocities[mask] if self.velocities is not None else None
        return Curve(times=self.times[mask], positions=self.positions[mask],
                     velocities=vel)

    def to_csv(self) -> str:
        lines = ["t," + ",".join(f"x{i}" for i in range(self.positions.shape[1]))
                 + ("," + ",".join(f"v{i}" for i in
                                   range(self.positions.shape[1]))
                    if self.velocities is not None else "")]
        for i, t in enumerate(self.times):
            row = [f"{t:.12g}"] + [f"{x:.12g}" for x in self.positions[i]]
            if self.velocities is not None:
                row += [f"{v:.12g}" for v in self.velocities[i]]
            lines.append(",".join(row))
        return "\n".join(lines)


def action(model: LagrangianModel, curve: Curve, offset: float = 0.0) -> float:
    """Discretized action sum of (L + offset) over the curve's segments.

    Segment rule: exact kinetic term of the linear interpolant plus the
    trapezoid rule for U and the midpoint rule for the magnetic term; the
    sum is exactly additive over a shared sample grid.
    """
    t, x = curve.times, curve.positions
    dt = np.diff(t)
    dx = np.diff(x, axis=0)
    kin = 0.5 * np.sum(dx ** 2, axis=-1) / dt
    xa = x[:-1, 0] if model.dimension == 1 else x[:-1]
    xb = x[1:, 0] if model.dimension == 1 else x[1:]
    pot = 0.5 * (model.u(xa) + model.u(xb)) * dt
    total = kin - pot + offset * dt
    if model.omega is not None:
        mid = 0.5 * (x[:-1] + x[1:])
        om = np.atleast_2d(model.omega(mid))
        total = total + np.sum(om * dx, axis=-1)
    return float(np.sum(total))


# ---------------------------------------------------------------------------
# energy and flow
# ---------------------------------------------------------------------------


def energy(model: LagrangianModel, state: PhaseState) -> float:
    """E = v . dL/dv - L = |v|^2 / 2 + U(x); the magnetic term cancels."""
    x = state.position if model.dimension > 1 else state.position[0]
    return float(0.5 * np.sum(state.velocity ** 2) + model.u(x))


MAX_FLOW_STEP = 0.05

_YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA_W0 = 1.0 - 2.0 * _YOSHIDA_W1


def _force(model: LagrangianModel, x):
    return -np.atleast_1d(np.asarray(model.grad_u(x), dtype=float))


def _kdk(model: LagrangianModel, x, v, dt):
    xq = x if model.dimension > 1 else x[0]
    v = v - 0.5 * dt * (-_force(model, xq))
    if model.omega is not None and model.dimension == 2:
        # Boris rotation for the magnetic force B J v
        h = 1e-5
        b = ((model.omega(x + [h, 0])[1] - model.omega(x - [h, 0])[1])
             - (model.omega(x + [0, h])[0] - model.omega(x - [0, h])[0])) / (2 * h)
        ang = b * dt
        c, s = math.cos(ang), math.sin(ang)
        v = np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1]])
    x = x + dt * v
    xq = x if model.dimension > 1 else x[0]
    v = v - 0.5 * dt * (-_force(model, xq))
    return x, v


def _flow_step(model: LagrangianModel, x, v, dt):
    """Fourth-order Yoshida composition of the symmetric kick-drift-kick."""
    for w in (_YOSHIDA_W1, _YOSHIDA_W0, _YOSHIDA_W1):
        x, v = _kdk(model, x, v, w * dt)
    return x, v


def el_flow(model: LagrangianModel, state: PhaseState, duration: float,
            step: float = 1e-3) -> Curve:
    """Integrate the Euler-Lagrange flow; returns a Curve with velocities.

    Fourth-order symplectic composition, time-reversible; the returned
    positions are the continuous lift (winding preserved).
    """
    if step <= 0:
        raise LagrangianError("step must be positive")
    if step > MAX_FLOW_STEP:
        raise LagrangianError(
            f"step {step} too large; max admissible step is {MAX_FLOW_STEP}")
    sign = 1.0 if duration >= 0 else -1.0
    n = max(1, int(round(abs(duration) / step)))
    dt = sign * abs(duration) / n
    x = np.atleast_1d(np.asarray(state.position, dtype=float)).copy()
    v = np.atleast_1d(np.asarray(state.velocity, dtype=float)).copy()
    ts, xs, vs = [0.0], [x.copy()], [v.copy()]
    for i in range(n):
        x, v = _flow_step(model, x, v, dt)
        ts.append((i + 1) * dt)
        xs.append(x.copy())
        vs.append(v.copy())
    order = np.argsort(ts)
    return Curve(times=np.asarray(ts)[order],
                 positions=np.asarray(xs)[order],
                 velocities=np.asarray(vs)[order])


def flow_window(model: LagrangianModel, state: PhaseState, t_center: float,
                half_width: float, step: float = 1e-3) -> Curve:
    """Flow curve through the given state at time t_center, covering
    [t_center - half_width, t_center + half_width]."""
    back = el_flow(model, state, -half_width, step)
    fwd = el_flow(model, state, half_width, step)
    times = np.r_[back.times[:-1], fwd.times] + t_center
    pos = np.r_[back.positions[:-1], fwd.positions]
    vel = np.r_[back.velocities[:-1], fwd.velocities]
    return Curve(times=times, positions=pos, velocities=vel)


# ---------------------------------------------------------------------------
# Tonelli minimizers
# ---------------------------------------------------------------------------


def straight_curve(model: LagrangianModel, x, y, duration: float,
                   nodes: int) -> Curve:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ts = np.linspace(0.0, duration, nodes + 1)
    pos = x[None, :] + (ts / duration)[:, None] * (y - x)[None, :]
    return Curve(times=ts, positions=pos)


def tonelli_minimizer(model: LagrangianModel, x, y, duration: float,
                      grid: int = 64, winding: int = 3,
                      tol: float = 1e-6) -> Curve:
    """Fixed-endpoint fixed-time action minimizer by the direct method.

    Minimizes the discretized action over broken paths (L-BFGS with the
    analytic gradient), over all homotopy lifts with |winding| bounded.
    Asserts first-order stationarity and that the result does not exceed
    the straight lift's action.
    """
    if duration <= 0:
        raise LagrangianError("duration must be positive")
    if model.omega is not None:
        raise LagrangianError("magnetic minimizers are not supported")
    d = model.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ts = np.linspace(0.0, duration, grid + 1)
    dt = duration / grid
    per = model.period

    def objective(z, x0, y0):
        pts = np.concatenate([[x0], z.reshape(grid - 1, d), [y0]])
        dx = np.diff(pts, axis=0)
        q = pts[:, 0] if d == 1 else pts
        uvals = model.u(q)
        s = float(np.sum(0.5 * np.sum(dx ** 2, axis=-1) / dt
                         - 0.5 * (uvals[:-1] + uvals[1:]) * dt))
        gu = np.atleast_2d(np.asarray(model.grad_u(q), dtype=float).reshape(
            grid + 1, d))
        grad = np.zeros((grid - 1, d))
        inner = pts[1:-1]
        grad += (2 * inner - pts[:-2] - pts[2:]) / dt
        grad -= gu[1:-1] * dt
        return s, grad.ravel()

    best = None
    winds = range(-winding, winding + 1)
    combos = [(k,) for k in winds] if d == 1 else \
        [(i, j) for i in winds for j in winds]
    for combo in combos:
        y_lift = y + per * np.asarray(combo, dtype=float)
        z0 = (x[None, :] + (ts[1:-1] / duration)[:, None]
              * (y_lift - x)[None, :]).ravel()
        res = minimize(objective, z0, args=(x, y_lift), jac=True,
                       method="L-BFGS-B",
                       options={"maxiter": 2000, "ftol": 1e-14,
                                "gtol": tol * 1e-2})
        val = res.fun
        if best is None or val < best[0]:
            best = (val, res, y_lift)
    val, res, y_lift = best
    pts = np.concatenate([[x], res.x.reshape(grid - 1, d), [y_lift]])
    curve = Curve(times=ts, positions=pts)
    resid = float(np.max(np.abs(objective(res.x, x, y_lift)[1])))
    if resid > tol * (1 + abs(val)):
        raise LagrangianError(
            f"stationarity residual {resid:.2e} exceeds tolerance; "
            f"best action {val:.6g}")
    straight = straight_curve(model, x, y_lift, duration, grid)
    assert action(model, curve) <= action(model, straight) + 1e-9, \
        "minimizer beaten by the straight lift"
    return curve


# ---------------------------------------------------------------------------
# a priori bounds
# ---------------------------------------------------------------------------


def apriori_speed_bound(model: LagrangianModel, c_bound: float) -> float:
    """Closed-form speed bound for curves of mean action at most C.

    Mean action <= C forces a point with kinetic energy <= C + max U, hence
    total energy <= C + 2 max U; conservation then bounds the speed by
    sqrt(2 (C + 2 max U - min U)) everywhere on the curve.
    """
    umax, umin = model.max_potential(), model.min_potential()
    val = 2.0 * (c_bound + 2.0 * umax - umin)
    return math.sqrt(max(val, 0.0))


def apriori_bound_check(model: LagrangianModel, curve: Curve,
                        c_bound: float) -> tuple:
    """(bound holds, measured sup speed, closed-form bound A0(C)).

    Precondition (checked): the curve's mean action is below C.
    """
    mean_action = action(model, curve) / curve.duration
    if mean_action > c_bound + 1e-9:
        raise LagrangianError(
            f"curve mean action {mean_action:.6g} exceeds C = {c_bound}")
    a0 = apriori_speed_bound(model, c_bound)
    sup_speed = float(np.max(curve.speeds()))
    return sup_speed <= a0 + 1e-9, sup_speed, a0
