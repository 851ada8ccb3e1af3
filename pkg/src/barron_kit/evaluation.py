"""Pointwise evaluation, one-sided derivatives and the behaviour at infinity."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .measure import BarronFunction, SphereMeasure, homogeneous_reduce

__all__ = [
    "DirectionalDerivatives",
    "evaluate",
    "evaluate_measure",
    "directional_derivative",
    "active_tolerance",
    "asymptotic_profile",
    "bounded_part",
    "read_points_csv",
    "write_values_csv",
]

_BLOCK = 2048
_POINT_CHUNK = 2048


def _neumaier(total, comp, value):
    t = total + value
    comp += np.where(np.abs(total) >= np.abs(value), (total - t) + value, (value - t) + total)
    return t, comp


def evaluate_measure(mu: SphereMeasure, x) -> np.ndarray:
    """Evaluate ``f_mu`` at the rows of ``x`` (shape ``(n, d)`` or ``(d,)``).

    Terms are summed pairwise inside blocks of 2048 directions and the block
    sums are accumulated with Neumaier compensation, in the measure's
    (lexicographic) storage order. Each point is reduced on its own, so the
    result does not depend on how the points are batched.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != mu.dim:
        raise ValueError(f"points have dimension {x.shape[1]}, measure has {mu.dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    weights, dirs = mu.weights, mu.dirs
    out = np.empty(len(x))
    for start in range(0, len(x), _POINT_CHUNK):
        xs = x[start : start + _POINT_CHUNK]
        total = np.zeros(len(xs))
        comp = np.zeros(len(xs))
        for b in range(0, len(weights), _BLOCK):
            u = dirs[b : b + _BLOCK]
            # einsum's plain loops (unlike BLAS, whose kernels depend on the
            # batch shape) plus a per-row pairwise sum keep each point's
            # value independent of the batch it is evaluated in
            z = np.einsum("ik,jk->ij", xs, u[:, :-1], optimize=False)
            z += u[:, -1]
            np.maximum(z, 0.0, out=z)
            z *= weights[b : b + _BLOCK]
            part = z.sum(axis=1)
            total, comp = _neumaier(total, comp, part)
        out[start : start + _POINT_CHUNK] = total + comp
    return out[0] if single else out


def _measure_of(f):
    return f.measure if isinstance(f, BarronFunction) else f


def evaluate(f, x):
    """Evaluate a :class:`BarronFunction` (or bare measure) at one or many points."""
    return evaluate_measure(_measure_of(f), x)


@dataclass(frozen=True)
class DirectionalDerivatives:
    forward: float
    backward: float
    jump: float


def active_tolerance(x) -> float:
    """Half-width of the band ``|w . x + b| <= tau`` counted as *on* a hyperplane."""
    return 1e-9 * (1.0 + float(np.linalg.norm(x)))


def directional_derivative(f, x, v) -> DirectionalDerivatives:
    """One-sided derivatives of ``f`` at ``x`` along ``v`` and their jump.

    Directions with ``|w . x + b| <= tau`` (see :func:`active_tolerance`) are
    treated as active at the kink; they contribute ``relu(w . v)`` forward,
    ``-relu(-w . v)`` backward and ``|w . v|`` to the jump.
    """
    mu = _measure_of(f)
    x = np.asarray(x, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if x.shape != (mu.dim,) or v.shape != (mu.dim,):
        raise ValueError(f"x and v must have dimension {mu.dim}")
    if not np.any(v):
        raise ValueError("direction v must be nonzero")
    weights, dirs = mu.weights, mu.dirs
    if len(weights) == 0:
        return DirectionalDerivatives(0.0, 0.0, 0.0)
    z = dirs[:, :-1] @ x + dirs[:, -1]
    wv = dirs[:, :-1] @ v
    tau = active_tolerance(x)
    on = np.abs(z) <= tau
    up = z > tau
    smooth = float(np.sum(weights[up] * wv[up]))
    forward = smooth + float(np.sum(weights[on] * np.maximum(wv[on], 0.0)))
    backward = smooth - float(np.sum(weights[on] * np.maximum(-wv[on], 0.0)))
    return DirectionalDerivatives(forward, backward, forward - backward)


def asymptotic_profile(f) -> BarronFunction:
    """``x -> lim_{r->inf} f(r x) / r`` as a bias-free Barron function."""
    return BarronFunction(homogeneous_reduce(_measure_of(f)))


class BoundedPart:
    """``x -> f(x) - f_inf(x)``, evaluated lazily.

    Its sup norm is at most twice the Barron norm of ``f``.
    """

    def __init__(self, f):
        self.f = f if isinstance(f, BarronFunction) else BarronFunction(f)
        self.f_inf = asymptotic_profile(self.f)

    def __call__(self, x):
        return evaluate(self.f, x) - evaluate(self.f_inf, x)


def bounded_part(f) -> BoundedPart:
    return BoundedPart(f)


# CSV batch interface ---------------------------------------------------------

def read_points_csv(path) -> np.ndarray:
    """Read points from CSV; a non-numeric first row is taken as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no points")
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_values_csv(path, x, values) -> None:
    x = np.atleast_2d(x)
    header = [f"x_{i + 1}" for i in range(x.shape[1])] + ["f"]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, val in zip(x, values):
            w.writerow([repr(float(c)) for c in row] + [repr(float(val))])
