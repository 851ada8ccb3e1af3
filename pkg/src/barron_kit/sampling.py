"""Monte-Carlo approximation of Barron functions by finite networks.

A signed measure is turned into a probability over directions with constant
amplitude ``+-TV`` (equalized form). Drawing ``m`` directions iid and scaling
each amplitude by ``1/m`` gives an unbiased ``m``-neuron network whose path
norm is exactly ``TV``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_FLOOR, Decimal

import numpy as np

from .evaluation import evaluate
from .measure import BarronFunction, MeasureError, Neuron, SphereMeasure

__all__ = [
    "DataDistribution",
    "Equalized",
    "SampledNetwork",
    "L2Estimate",
    "equalize",
    "sample_network",
    "l2_error",
    "direct_bound",
    "rate_experiment",
    "digit_interleave",
    "digit_deinterleave",
    "inverse_cdf_sample",
    "n_threads",
]

DIGIT_BUDGET = 12
_MC_BLOCK = 4096


def n_threads() -> int:
    """Worker count: ``BARRON_KIT_THREADS`` if set, else all cores."""
    env = os.environ.get("BARRON_KIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"BARRON_KIT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# data distributions ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DataDistribution:
    """Data distribution ``P``: ``"empirical"``, ``"gaussian"`` or ``"ball"``."""

    kind: str
    dim: int
    points: np.ndarray | None = None
    weights: np.ndarray | None = None
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("empirical", "gaussian", "ball"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "empirical":
            pts = np.atleast_2d(np.asarray(self.points, dtype=float))
            if pts.shape[1] != self.dim or len(pts) == 0:
                raise ValueError("empirical points must be a nonempty (n, d) array")
            w = np.full(len(pts), 1.0 / len(pts)) if self.weights is None else np.asarray(self.weights, float)
            if w.shape != (len(pts),) or np.any(w < 0):
                raise ValueError("weights must be nonnegative, one per point")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "weights", w)
        elif self.kind == "ball" and not self.radius > 0:
            raise ValueError("radius must be positive")

    @classmethod
    def gaussian(cls, d):
        return cls("gaussian", d)

    @classmethod
    def ball(cls, d, radius=1.0):
        return cls("ball", d, radius=float(radius))

    @classmethod
    def empirical(cls, points, weights=None):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return cls("empirical", points.shape[1], points, weights)

    @property
    def second_moment_plus_one(self) -> float:
        """``int (|x|^2 + 1) dP``."""
        if self.kind == "gaussian":
            return self.dim + 1.0
        if self.kind == "ball":
            return self.radius**2 * self.dim / (self.dim + 2.0) + 1.0
        return float(self.weights @ (np.sum(self.points**2, axis=1) + 1.0))

    def sample(self, n, rng) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal((n, self.dim))
        if self.kind == "ball":
            g = rng.standard_normal((n, self.dim))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            r = self.radius * rng.random(n) ** (1.0 / self.dim)
            return g * r[:, None]
        idx = rng.choice(len(self.points), size=n, p=self.weights)
        return self.points[idx]


# equalized sampling -------------------------------------------------------------

@dataclass(frozen=True)
class Equalized:
    """Probability ``probs`` over ``dirs`` with amplitudes ``sign * tv``."""

    probs: np.ndarray
    amplitudes: np.ndarray
    dirs: np.ndarray
    tv: float


def _measure(mu):
    return mu.measure if isinstance(mu, BarronFunction) else mu


def equalize(mu) -> Equalized:
    """Equalized form of ``mu``: ``P(u) = |c_u| / TV``, amplitude ``sign(c_u) TV``."""
    mu = _measure(mu)
    weights, dirs = mu.weights, mu.dirs
    keep = weights != 0.0
    weights, dirs = weights[keep], dirs[keep]
    tv = math.fsum(np.abs(weights))
    if tv == 0.0:
        raise MeasureError("cannot equalize the zero measure")
    return Equalized(np.abs(weights) / tv, np.sign(weights) * tv, dirs, tv)


@dataclass(frozen=True, eq=False)
class SampledNetwork:
    """``x -> sum_i a_i relu(w_i . x + b_i)`` with unit ``(w_i, b_i)``."""

    a: np.ndarray
    dirs: np.ndarray

    @property
    def m(self):
        return len(self.a)

    @property
    def dim(self):
        return self.dirs.shape[1] - 1

    @property
    def neurons(self):
        return [Neuron(c, u[:-1], u[-1]) for c, u in zip(self.a, self.dirs)]

    @property
    def path_norm(self) -> float:
        return math.fsum(np.abs(self.a) * np.linalg.norm(self.dirs, axis=1))

    def to_measure(self) -> SphereMeasure:
        return SphereMeasure(self.dim, self.a, self.dirs)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.maximum(x @ self.dirs[:, :-1].T + self.dirs[:, -1], 0.0) @ self.a


def sample_network(mu, m: int, seed: int = 0) -> SampledNetwork:
    """Draw ``m`` neurons iid from :func:`equalize` (``mu``), each with amplitude ``+-TV/m``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    eq = equalize(mu)
    cdf = np.cumsum(eq.probs)
    cdf[-1] = 1.0
    u = np.random.default_rng([seed, m]).random(m)
    idx = inverse_cdf_sample((np.arange(len(cdf)), cdf), u).astype(int)
    return SampledNetwork(eq.amplitudes[idx] / m, eq.dirs[idx])


# L2 error -------------------------------------------------------------------------

@dataclass(frozen=True)
class L2Estimate:
    value: float
    stderr: float

    def __float__(self):
        return self.value


def _eval(fn, x):
    if isinstance(fn, (BarronFunction, SphereMeasure)):
        return evaluate(fn, x)
    return np.asarray(fn(x), dtype=float)


def _dim(fn):
    if isinstance(fn, BarronFunction):
        return fn.dim
    return getattr(fn, "dim", None)


def _mc_moments(f, g, P, n_mc, seed):
    """Sum and sum of squares of ``(f - g)^2`` over ``n_mc`` samples.

    Samples come in blocks of 4096, each with its own child seed, so the
    result does not depend on the number of worker threads.
    """
    n_blocks = -(-n_mc // _MC_BLOCK)
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)

    def block(i):
        n = min(_MC_BLOCK, n_mc - i * _MC_BLOCK)
        x = P.sample(n, np.random.default_rng(seeds[i]))
        sq = (_eval(f, x) - _eval(g, x)) ** 2
        return math.fsum(sq), math.fsum(sq * sq)

    workers = min(n_threads(), n_blocks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(i) for i in range(n_blocks)]
    return math.fsum(p[0] for p in parts), math.fsum(p[1] for p in parts)


def l2_error(f, g, P: DataDistribution, n_mc: int = 16384, seed: int = 0) -> L2Estimate:
    """``||f - g||_{L^2(P)}`` with a delta-method standard error.

    Exact weighted sum (``stderr = 0``) for empirical ``P``; Monte Carlo
    with ``n_mc`` samples otherwise.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    for fn in (f, g):
        d = _dim(fn)
        if d is not None and d != P.dim:
            raise ValueError(f"dimension mismatch: function has d={d}, distribution has d={P.dim}")
    if P.kind == "empirical":
        sq = (_eval(f, P.points) - _eval(g, P.points)) ** 2
        return L2Estimate(math.sqrt(math.fsum(P.weights * sq)), 0.0)
    s1, s2 = _mc_moments(f, g, P, n_mc, seed)
    mean = s1 / n_mc
    var = max(s2 / n_mc - mean * mean, 0.0)
    value = math.sqrt(mean)
    se_mean = math.sqrt(var / n_mc)
    return L2Estimate(value, se_mean / (2.0 * value) if value > 0 else 0.0)


def direct_bound(tv: float, P: DataDistribution, m: int) -> float:
    """``2 TV sqrt(int |x|^2 + 1 dP) / sqrt(m)``."""
    return 2.0 * tv * math.sqrt(P.second_moment_plus_one) / math.sqrt(m)


def rate_experiment(f, P: DataDistribution, ms, seeds, n_mc: int = 8192, mc_seed: int = 0):
    """Errors of sampled networks for every width in ``ms`` and seed in ``seeds``.

    One evaluation sample of size ``n_mc`` (seeded by ``mc_seed``) is shared by
    all runs, so ``f`` is evaluated once. Returns dict rows with keys ``m``,
    ``seed``, ``l2_error``, ``stderr``, ``bound``, ``path_norm``.
    """
    f = f if isinstance(f, BarronFunction) else BarronFunction(f)
    if f.dim != P.dim:
        raise ValueError(f"dimension mismatch: function has d={f.dim}, distribution has d={P.dim}")
    if P.kind == "empirical":
        x, w = P.points, P.weights
    else:
        x = P.sample(n_mc, np.random.default_rng(np.random.SeedSequence(mc_seed)))
        w = np.full(len(x), 1.0 / len(x))
    fx = evaluate(f, x)
    tv = f.norm_upper_bound
    jobs = [(int(m), int(s)) for m in ms for s in seeds]

    def run(job):
        m, s = job
        g = sample_network(f.measure, m, s)
        sq = (fx - g(x)) ** 2
        mean = math.fsum(w * sq)
        if P.kind == "empirical":
            se = 0.0
        else:
            var = max(math.fsum(w * sq * sq) - mean * mean, 0.0)
            se = math.sqrt(var / len(x)) / (2.0 * math.sqrt(mean)) if mean > 0 else 0.0
        return {
            "m": m,
            "seed": s,
            "l2_error": math.sqrt(mean),
            "stderr": se,
            "bound": direct_bound(tv, P, m),
            "path_norm": g.path_norm,
        }

    workers = min(n_threads(), len(jobs)) or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


# measurable bijections ---------------------------------------------------------------

def _digits(x, n):
    """First ``n`` decimal digits of ``x`` in ``[0, 1]``; ``x = 1`` maps to all nines."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"coordinate {x!r} outside [0, 1]")
    if x == 1.0:
        return 10**n - 1
    scaled = (Decimal(repr(float(x))) * (10**n)).to_integral_value(rounding=ROUND_FLOOR)
    return int(scaled)


def digit_interleave(x, budget: int = DIGIT_BUDGET) -> float:
    """Map ``x`` in ``[0, 1]^d`` to ``[0, 1]`` by interleaving decimal digits.

    Each coordinate keeps ``budget // d`` digits; digit ``k`` of coordinate
    ``i`` goes to position ``k d + i`` of the result.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = len(x)
    n = budget // d
    if n < 1:
        raise ValueError(f"digit budget {budget} too small for d={d}")
    strs = [str(_digits(c, n)).zfill(n) for c in x]
    out = "".join(strs[i][k] for k in range(n) for i in range(d))
    return float(Decimal(int(out)) / Decimal(10) ** (n * d))


def digit_deinterleave(y: float, d: int, budget: int = DIGIT_BUDGET) -> np.ndarray:
    """Inverse of :func:`digit_interleave` at the same digit budget."""
    n = budget // d
    if n < 1:
        raise ValueError(f"digit budget {budget} too small for d={d}")
    digits = str(_digits(y, n * d)).zfill(n * d)
    return np.array([int(digits[i::d]) / 10**n for i in range(d)])


def inverse_cdf_sample(cdf_table, u, mode: str = "step"):
    """Generalized inverse ``psi(u) = inf{z : F(z) >= u}`` of a tabulated CDF.

    ``cdf_table`` is ``(z, F)`` with both nondecreasing and ``F`` in ``[0, 1]``.
    ``mode="step"`` treats the table as a step function (exact for discrete
    laws); ``mode="linear"`` interpolates between table points.
    """
    z, F = (np.asarray(a, dtype=float) for a in cdf_table)
    if z.shape != F.shape or z.ndim != 1 or len(z) == 0:
        raise ValueError("cdf table must be two equal-length 1-d arrays")
    if np.any(np.diff(F) < 0) or np.any(np.diff(z) < 0):
        raise ValueError("cdf table is not monotone")
    if F[0] < 0 or F[-1] > 1:
        raise ValueError("cdf values must lie in [0, 1]")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("uniform variates must lie in [0, 1]")
    idx = np.minimum(np.searchsorted(F, u_arr, side="left"), len(F) - 1)
    if mode == "step":
        out = z[idx]
    elif mode == "linear":
        lo = np.maximum(idx - 1, 0)
        span = F[idx] - F[lo]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(span > 0, (u_arr - F[lo]) / span, 1.0)
        out = z[lo] + np.clip(t, 0.0, 1.0) * (z[idx] - z[lo])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out if np.ndim(out) else float(out)
