"""Gradient-flow training of two-layer ReLU networks in the mean-field scaling.

The network is ``f(x) = (1/m) sum_i a_i relu(w_i . x + b_i)`` and the risk is
the weighted quadratic loss against labelled data. Particles are stored as
rows ``(a, w_1..w_d, b)`` of a parameter matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measure import Neuron

__all__ = [
    "FlowState",
    "RiskSpec",
    "FlowStalled",
    "IndexedView",
    "risk",
    "grad",
    "flow",
    "init_small_uniform",
    "init_he",
    "indexed_view",
    "flow_indexed",
    "bound_rhs",
]

DT_FLOOR = 1e-12
RISK_SLACK = 1e-12


@dataclass(frozen=True)
class RiskSpec:
    """Labelled data ``(x_j, y_j)`` with weights summing to one (quadratic loss)."""

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray = None
    loss: str = "quadratic"

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if len(x) == 0:
            raise ValueError("risk needs at least one target")
        if len(y) != len(x):
            raise ValueError("x and y have different lengths")
        w = np.full(len(x), 1.0 / len(x)) if self.weights is None else np.asarray(self.weights, float)
        if w.shape != y.shape or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        if self.loss != "quadratic":
            raise ValueError("only the quadratic loss is supported")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_function(cls, x, target, weights=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return cls(x, np.asarray(target(x), dtype=float), weights)

    @property
    def dim(self):
        return self.x.shape[1]


@dataclass(frozen=True, eq=False)
class FlowState:
    """Parameters ``theta`` (rows ``(a, w, b)``), time and recorded history.

    ``history`` rows are ``(t, risk, path_norm, second_moment)``.
    """

    theta: np.ndarray
    t: float = 0.0
    history: tuple = field(default_factory=tuple)

    def __post_init__(self):
        th = np.array(self.theta, dtype=float)
        if th.ndim != 2 or th.shape[1] < 3:
            raise ValueError("theta must have shape (m, d + 2)")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_neurons(cls, neurons, t=0.0):
        return cls(np.array([[n.a, *n.w, n.b] for n in neurons]), t)

    @property
    def m(self):
        return self.theta.shape[0]

    @property
    def dim(self):
        return self.theta.shape[1] - 2

    @property
    def a(self):
        return self.theta[:, 0]

    @property
    def w(self):
        return self.theta[:, 1:-1]

    @property
    def b(self):
        return self.theta[:, -1]

    @property
    def particles(self):
        return [Neuron(r[0], r[1:-1], r[-1]) for r in self.theta]

    @property
    def path_norm(self) -> float:
        """``(1/m) sum_i |a_i| |(w_i, b_i)|``."""
        return float(np.mean(np.abs(self.a) * np.linalg.norm(self.theta[:, 1:], axis=1)))

    @property
    def second_moment(self) -> float:
        """``(1/m) sum_i (a_i^2 + |w_i|^2 + b_i^2)``."""
        return float(np.mean(np.sum(self.theta**2, axis=1)))

    def __call__(self, x):
        return _network(self.theta, np.atleast_2d(np.asarray(x, dtype=float)))


class FlowStalled(RuntimeError):
    """The step size fell below the floor without decreasing the risk."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


def _network(theta, x):
    z = x @ theta[:, 1:-1].T + theta[:, -1]
    return np.maximum(z, 0.0) @ theta[:, 0] / len(theta)


def _risk(theta, spec):
    r = _network(theta, spec.x) - spec.y
    return float(spec.weights @ (r * r))


def risk(state: FlowState, spec: RiskSpec) -> float:
    """``sum_j p_j (f(x_j) - y_j)^2``."""
    return _risk(state.theta, spec)


def _grad(theta, spec, cell=None):
    """Gradient of the risk in ``theta``; ``cell`` is the per-particle weight (``1/m``)."""
    m = len(theta)
    cell = 1.0 / m if cell is None else cell
    z = spec.x @ theta[:, 1:-1].T + theta[:, -1]
    act = np.maximum(z, 0.0)
    r = act @ theta[:, 0] / m - spec.y
    pr = 2.0 * spec.weights * r
    # relu'(0) = 0
    gate = (z > 0.0) * pr[:, None]
    g = np.empty_like(theta)
    g[:, 0] = cell * (pr @ act)
    g[:, 1:-1] = cell * theta[:, 0, None] * (gate.T @ spec.x)
    g[:, -1] = cell * theta[:, 0] * gate.sum(axis=0)
    return g


def grad(state: FlowState, spec: RiskSpec) -> np.ndarray:
    """Per-particle gradient rows ``(dR/da, dR/dw, dR/db)`` with ``relu'(0) = 0``."""
    return _grad(state.theta, spec)


def bound_rhs(m0: float, r0: float, t) -> np.ndarray:
    """``2 (M_0 + R_0 t)``, the growth bound for the second moment."""
    return 2.0 * (m0 + r0 * np.asarray(t, dtype=float))


def _record(theta, t, spec):
    st = FlowState(theta, t)
    return (float(t), _risk(theta, spec), st.path_norm, st.second_moment)


def _rk4(theta, field_fn, dt):
    k1 = field_fn(theta)
    k2 = field_fn(theta + 0.5 * dt * k1)
    k3 = field_fn(theta + 0.5 * dt * k2)
    k4 = field_fn(theta + dt * k3)
    return theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate(theta, t, history, field_fn, spec, dt, n_steps, make_state):
    if not dt > 0:
        raise ValueError("dt must be positive")
    history = list(history) or [_record(theta, t, spec)]
    current = history[-1][1]
    h = dt
    for _ in range(n_steps):
        while True:
            trial = _rk4(theta, field_fn, h)
            r = _risk(trial, spec)
            if r <= current + RISK_SLACK:
                break
            h *= 0.5
            if h < DT_FLOOR:
                raise FlowStalled(
                    f"step size fell below {DT_FLOOR} at t={t}",
                    make_state(theta, t, tuple(history)),
                )
        theta, t, current = trial, t + h, r
        history.append(_record(theta, t, spec))
    return make_state(theta, t, tuple(history))


def flow(state: FlowState, spec: RiskSpec, dt: float, n_steps: int, time_rescale: str = "m") -> FlowState:
    """RK4 integration of ``theta' = -c grad R`` with ``c = m`` (``"m"``) or ``1`` (``"none"``).

    A step that raises the risk by more than ``1e-12`` is retried with half the
    step size, which is kept for the following steps. One history row is
    appended per step.
    """
    if time_rescale == "m":
        c = float(state.m)
    elif time_rescale == "none":
        c = 1.0
    else:
        raise ValueError(f"time_rescale must be 'm' or 'none', got {time_rescale!r}")
    if state.dim != spec.dim:
        raise ValueError(f"state has d={state.dim}, data has d={spec.dim}")

    def field_fn(th):
        return -c * _grad(th, spec)

    def make(th, t, hist):
        return FlowState(th, t, hist)

    return _integrate(state.theta, state.t, state.history, field_fn, spec, dt, n_steps, make)


# initializers ------------------------------------------------------------------------

def init_small_uniform(m: int, d: int, scale: float = 0.1, seed: int = 0) -> FlowState:
    """Uniform ``[-scale, scale]`` parameters with particles paired as ``(a, w, b)``, ``(-a, w, b)``.

    The pairing makes the initial network vanish identically.
    """
    if m < 2 or m % 2:
        raise ValueError("m must be an even number >= 2")
    rng = np.random.default_rng(seed)
    half = rng.uniform(-scale, scale, size=(m // 2, d + 2))
    mirror = half.copy()
    mirror[:, 0] *= -1.0
    return FlowState(np.vstack([half, mirror]))


def init_he(m: int, d: int, seed: int = 0) -> FlowState:
    """``w ~ N(0, 2/d)``, ``b = 0``, ``a ~ N(0, 1)``."""
    rng = np.random.default_rng(seed)
    theta = np.zeros((m, d + 2))
    theta[:, 0] = rng.standard_normal(m)
    theta[:, 1:-1] = rng.standard_normal((m, d)) * math.sqrt(2.0 / d)
    return FlowState(theta)


# indexed-particle view ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IndexedView:
    """Step functions ``theta -> (a, w, b)`` on ``[0, 1]``, constant on ``[(k-1)/m, k/m)``."""

    values: np.ndarray
    t: float = 0.0
    history: tuple = ()

    @property
    def m(self):
        return len(self.values)

    def _index(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s < 0) | (s > 1)):
            raise ValueError("index variable must lie in [0, 1]")
        return np.minimum((s * self.m).astype(int), self.m - 1)

    def a(self, s):
        return self.values[self._index(s), 0]

    def w(self, s):
        return self.values[self._index(s), 1:-1]

    def b(self, s):
        return self.values[self._index(s), -1]

    def __call__(self, x):
        """``int_0^1 a(s) relu(w(s) . x + b(s)) ds``, exact for step functions."""
        return _network(self.values, np.atleast_2d(np.asarray(x, dtype=float)))

    def to_state(self) -> FlowState:
        return FlowState(self.values, self.t, self.history)


def indexed_view(state: FlowState) -> IndexedView:
    return IndexedView(state.theta.copy(), state.t, state.history)


def flow_indexed(view: IndexedView, spec: RiskSpec, dt: float, n_steps: int) -> IndexedView:
    """L^2 gradient flow of the risk over step functions on ``[0, 1]``.

    The L^2 derivative of ``R`` at index ``s`` is the pointwise gradient of
    the integrand, i.e. ``m`` times the particle gradient of cell ``s``.
    """
    def field_fn(vals):
        return -_grad(vals, spec, cell=1.0)

    def make(vals, t, hist):
        return IndexedView(vals, t, hist)

    return _integrate(view.values, view.t, view.history, field_fn, spec, dt, n_steps, make)

