"""Canonical Barron functions built as sphere measures.

Every construction is deterministic given its arguments (including ``seed``
where point sets are randomized), so two calls produce identical measures.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .calculus1d import Profile1D, _profile_neurons, profile_to_measure, reconstruct
from .measure import BarronFunction, SphereMeasure

__all__ = [
    "sphere_nodes",
    "euclidean_norm",
    "partial_norm",
    "square_profile",
    "square_fn",
    "gaussian_profile",
    "radial_profile",
    "chi_average_profile",
    "gaussian_decay",
    "ridge_average",
    "chi_quadrature",
    "DecayRecipe",
    "DecayRecipeError",
    "decay_constraints",
    "piecewise_linear_profile",
    "solve_decay_kernel",
    "higher_decay",
]

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


# point sets on spheres -------------------------------------------------------

def _riesz_refine(u, iters):
    """Spread points on S^{d-1} by a few projected steps down the Riesz energy."""
    n, d = u.shape
    s = d - 1
    step = 0.02 * n ** (-1.0 / (d - 1))
    for _ in range(iters):
        r2 = np.maximum(2.0 - 2.0 * (u @ u.T), 1e-18)
        np.fill_diagonal(r2, np.inf)
        k = r2 ** (-(s + 2) / 2.0)
        force = u * k.sum(axis=1, keepdims=True) - k @ u
        force -= np.sum(force * u, axis=1, keepdims=True) * u
        scale = np.linalg.norm(force, axis=1).mean()
        if scale == 0.0:
            break
        u = u + step * force / scale
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u


def sphere_nodes(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Approximately uniform points on S^{d-1} (rows of unit length).

    * ``d = 1``: the two points ``+-1`` (``n`` is ignored).
    * ``d = 2``: ``n`` equispaced angles.
    * ``d = 3``: Fibonacci lattice.
    * ``d >= 4``: scrambled Sobol points pushed through the normal quantile
      and normalized, then relaxed by repulsion. ``seed`` fixes the scramble.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if n < 1:
        raise ValueError("need at least one node")
    i = np.arange(n)
    if d == 2:
        theta = 2.0 * np.pi * (i + 0.5) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if d == 3:
        z = 1.0 - (2.0 * i + 1.0) / n
        r = np.sqrt(1.0 - z * z)
        phi = i * _GOLDEN_ANGLE
        u = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        return u / np.linalg.norm(u, axis=1, keepdims=True)
    with warnings.catch_warnings():
        # non-power-of-two sample sizes are fine here
        warnings.simplefilter("ignore", UserWarning)
        pts = qmc.Sobol(d, scramble=True, seed=seed).random(n)
    g = _normal.ppf(np.clip(pts, 1e-12, 1.0 - 1e-12))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    iters = min(100, int(4e8 // max(n * n, 1)))
    return _riesz_refine(u, iters) if n > 1 else u


def _embed(u, d, bias=None):
    """Rows of ``u`` (first ``k`` coordinates) placed in R^{d+1} with zero padding."""
    out = np.zeros((len(u), d + 1))
    out[:, : u.shape[1]] = u
    if bias is not None:
        out[:, -1] = bias
    return out


# homogeneous examples ----------------------------------------------------------

def euclidean_norm(d: int, n_nodes: int = 1000, seed: int = 0):
    """``|x|_2`` as ``c_d * E_u relu(u . x)`` over the uniform measure on S^{d-1}.

    ``c_d = 1 / E_u relu(u_1)`` is estimated with the same nodes, so the
    construction is exact along ``e_1``. Returns ``(BarronFunction, c_d)``.
    For ``d = 1`` the measure is the two atoms of ``relu(x) + relu(-x)``.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if d > 1 and n_nodes < 16:
        raise ValueError("n_nodes must be at least 16")
    u = sphere_nodes(d, n_nodes, seed)
    c_d = 1.0 / float(np.mean(np.maximum(u[:, 0], 0.0)))
    weights = np.full(len(u), c_d / len(u))
    if d == 1:
        mu = SphereMeasure(1, weights, _embed(u, 1))
    else:
        mu = SphereMeasure(d, np.zeros(0), np.zeros((0, d + 1)), weights, _embed(u, d))
    return BarronFunction(mu), c_d


def partial_norm(d: int, k: int, n_nodes: int = 1000, seed: int = 0) -> BarronFunction:
    """``sqrt(x_1^2 + ... + x_k^2)`` in R^d."""
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    base, _ = euclidean_norm(k, n_nodes, seed)
    m = base.measure
    pad = lambda dirs: _embed(dirs[:, :k], d)  # noqa: E731
    return BarronFunction(
        SphereMeasure(d, m.atom_weights, pad(m.atom_dirs), m.node_weights, pad(m.node_dirs))
    )


def square_profile(n_nodes: int = 1024) -> Profile1D:
    """``x^2`` on ``[0, 1]``: ``f(0) = f'(0) = 0`` and ``f'' = 2`` discretized by midpoints."""
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    t = (np.arange(n_nodes) + 0.5) / n_nodes
    return Profile1D(0.0, 0.0, d2_nodes=np.column_stack([t, np.full(n_nodes, 2.0 / n_nodes)]))


def square_fn(n_nodes: int = 1024) -> BarronFunction:
    """``x^2 = 2 int_0^1 relu(x - t) dt`` on ``[0, 1]`` (d = 1)."""
    return BarronFunction(profile_to_measure(square_profile(n_nodes), one_sided=True))


# Gaussian direction averages -------------------------------------------------------

def chi_quadrature(d: int, order: int):
    """Nodes/weights for ``E g(rho)`` with ``rho = |nu|``, ``nu ~ N(0, I_d)``.

    Generalized Gauss-Laguerre in ``s = rho^2 / 2 ~ Gamma(d/2)``.
    """
    s, w = special.roots_genlaguerre(order, d / 2.0 - 1.0)
    return np.sqrt(2.0 * s), w / special.gamma(d / 2.0)


def _tilted_chi_average(q, t, d, order):
    """``E_rho[q(rho, t) exp(-rho^2 t^2 / 2)]`` for ``rho ~ chi_d``.

    The Gaussian factor is absorbed into the Laguerre weight by the
    substitution ``s' = (1 + t^2) rho^2 / 2``; for polynomial ``q`` the rule is
    exact once ``order`` exceeds half its degree in ``rho``.
    """
    s, w = special.roots_genlaguerre(order, d / 2.0 - 1.0)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    scale = 1.0 + t * t
    rho = np.sqrt(2.0 * s[None, :] / scale[:, None])
    vals = q(rho, t[:, None]) @ w
    return vals * scale ** (-d / 2.0) / special.gamma(d / 2.0)


def _tan_cells(n_nodes):
    """Cell edges and midpoints of a tangent grid covering R (even count, edge at 0)."""
    if n_nodes < 2 or n_nodes % 2:
        raise ValueError("n_nodes must be an even number >= 2")
    theta_e = -0.5 * np.pi + np.pi * np.arange(n_nodes + 1) / n_nodes
    theta_m = 0.5 * (theta_e[1:] + theta_e[:-1])
    edges = np.tan(theta_e[1:-1])
    edges[n_nodes // 2 - 1] = 0.0
    return edges, np.tan(theta_m)


def radial_profile(f0, slope, n_nodes=256) -> Profile1D:
    """Profile of a radially averaged kernel from its exact first derivative.

    ``slope(t, side)`` returns ``H'(t)`` for an array of nonzero ``t``, and
    ``H'(0+)`` / ``H'(0-)`` for ``t = 0`` with ``side = +1`` / ``-1``. ``H'``
    must vanish at infinity. Each cell of a tangent grid receives the mass
    ``H'(right) - H'(left)`` at its midpoint, so the slopes at +-infinity are
    reproduced exactly; a kink at 0 becomes a point mass.
    """
    edges, mids = _tan_cells(n_nodes)
    half = n_nodes // 2
    neg = np.concatenate([[0.0], slope(edges[: half - 1], -1), [slope(np.zeros(1), -1)[0]]])
    pos = np.concatenate([[slope(np.zeros(1), 1)[0]], slope(edges[half:], 1), [0.0]])
    masses = np.concatenate([np.diff(neg), np.diff(pos)])
    jump0 = pos[0] - neg[-1]
    atoms = np.array([[0.0, jump0]]) if jump0 != 0.0 else np.zeros((0, 2))
    return Profile1D(f0, neg[-1], atoms, np.column_stack([mids, masses]))


def gaussian_profile(d: int, n_nodes: int = 256, n_radial: int = 64) -> Profile1D:
    """Profile of ``H(t) = E_rho exp(-rho^2 t^2 / 2)``, the radial average of ``h(z) = exp(-z^2/2)``.

    ``H'(t) = E_rho[rho h'(rho t)]`` with ``h'(z) = -z exp(-z^2/2)`` is computed
    by the tilted chi rule; the second derivative is discretized cellwise by
    :func:`radial_profile`. ``H(0) = 1``.
    """
    def slope(t, side):
        return _tilted_chi_average(lambda rho, tt: -(rho**2) * tt, t, d, n_radial)

    return radial_profile(1.0, slope, n_nodes)


def _chi_partial_mean(c, d):
    """``E[rho; rho < c]`` for ``rho ~ chi_d`` (zero for ``c <= 0``)."""
    c = np.maximum(c, 0.0)
    mean = math.sqrt(2.0) * math.exp(special.gammaln((d + 1) / 2.0) - special.gammaln(d / 2.0))
    return mean * special.gammainc((d + 1) / 2.0, 0.5 * c * c)


def chi_average_profile(p: Profile1D, d: int, n_nodes: int = 256) -> Profile1D:
    """Profile of ``H(t) = E_rho h(rho t)`` for a compactly supported piecewise-linear ``h``.

    ``h`` must have no density part. ``H'`` follows in closed form from the
    partial means of the chi distribution.
    """
    if len(p.d2_nodes):
        raise ValueError("chi_average_profile needs a profile without density nodes")
    knots = p.d2_atoms[:, 0]
    vals = reconstruct(p, knots)
    # slope of h on (knots[i], knots[i+1]); zero outside the support
    inner = np.diff(vals) / np.diff(knots)
    full = np.concatenate([[0.0], inner, [0.0]])  # piece i is (knots[i-1], knots[i])
    h_mean = float(_chi_partial_mean(np.inf, d))
    s0_minus = full[np.searchsorted(knots, 0.0, side="left")]
    s0_plus = full[np.searchsorted(knots, 0.0, side="right")]

    def slope(t, side):
        t = np.asarray(t, dtype=float)
        out = np.zeros(len(t))
        zero = t == 0.0
        out[zero] = h_mean * (s0_plus if side > 0 else s0_minus)
        tz = t[~zero]
        if len(tz):
            # E[rho; rho t in (knot_i, knot_{i+1})], orientation flips for t < 0
            bounds = knots[None, :] / tz[:, None]
            cdf = _chi_partial_mean(bounds, d)
            pieces = np.where(tz[:, None] > 0, np.diff(cdf, axis=1), -np.diff(cdf, axis=1))
            out[~zero] = pieces @ inner
        return out

    return radial_profile(p.f0, slope, n_nodes)


def ridge_average(p: Profile1D, directions, weights) -> SphereMeasure:
    """Measure of ``x -> sum_k weights_k g(directions_k . x)`` for ``g`` given by ``p``.

    Constant terms become one atom; every other term becomes a density node.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    weights = np.asarray(weights, dtype=float)
    d = directions.shape[1]
    atoms, nodes = _profile_neurons(p)
    terms = np.array(atoms + nodes, dtype=float).reshape(-1, 3)
    const = terms[:, 1] == 0.0
    # constant neurons: a relu(b) with b = +-1
    c0 = float(np.sum(terms[const, 0] * np.maximum(terms[const, 2], 0.0))) * float(weights.sum())
    t = terms[~const]
    a = (weights[:, None] * t[None, :, 0]).ravel()
    w = (directions[:, None, :] * t[None, :, 1, None]).reshape(-1, d)
    b = np.broadcast_to(t[None, :, 2], (len(directions), len(t))).ravel()
    v = np.column_stack([w, b])
    r = np.linalg.norm(v, axis=1)
    keep = (r > 0) & (a != 0)
    node_w = a[keep] * r[keep]
    node_d = v[keep] / r[keep, None]
    atom_w = np.array([c0]) if c0 != 0.0 else np.zeros(0)
    atom_d = _embed(np.zeros((len(atom_w), 0)), d, bias=1.0)
    return SphereMeasure(d, atom_w, atom_d, node_w, node_d)


def _default_dirs(d):
    return {1: 2, 2: 64, 3: 400}.get(d, 1024)


def gaussian_decay(d: int, n_radial: int = 64, n_nodes: int = 256, n_dirs: int | None = None,
                   seed: int = 0) -> BarronFunction:
    """``(|x|^2 + 1)^(-1/2)`` as the Gaussian average of ``x -> exp(-(nu . x)^2 / 2)``.

    Writing ``nu = rho u`` splits the average into a radial part, folded into
    the one-dimensional profile :func:`gaussian_profile`, and an average over
    ``u`` on the sphere using ``n_dirs`` nodes.
    """
    if d < 1:
        raise ValueError("d must be positive")
    n_dirs = _default_dirs(d) if n_dirs is None else n_dirs
    u = sphere_nodes(d, n_dirs, seed)
    prof = gaussian_profile(d, n_nodes, n_radial)
    return BarronFunction(ridge_average(prof, u, np.full(len(u), 1.0 / len(u))))


# higher-order decay -----------------------------------------------------------------

class DecayRecipeError(ValueError):
    """A decay kernel violates one of its constraints."""

    def __init__(self, index, message):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class DecayRecipe:
    """One-dimensional kernel ``h`` on ``[-1, 1]`` with vanishing even moments.

    Constraint vector (see :func:`decay_constraints`): index 0 is ``h(1)``,
    index 1 is ``h(-1)``, index ``2 + j`` is ``int h(y) y^(2j) dy`` for
    ``j < k``. All of them vanish and ``h(0) != 0``.
    ``radial_quadrature`` is the Gauss-Legendre order per linear piece used
    by the radial evaluator.
    """

    k: int
    h_profile: Profile1D
    radial_quadrature: int = 32


def _breakpoints(p: Profile1D, lo=-1.0, hi=1.0):
    locs = p.masses[:, 0]
    inner = locs[(locs > lo) & (locs < hi)]
    return np.unique(np.concatenate([[lo, hi], inner]))


def _piecewise_integral(p: Profile1D, g, order=32, lo=-1.0, hi=1.0):
    """``int_lo^hi h(y) g(y) dy`` with Gauss-Legendre on each linear piece of ``h``."""
    x, w = np.polynomial.legendre.leggauss(order)
    bp = _breakpoints(p, lo, hi)
    a, b = bp[:-1, None], bp[1:, None]
    y = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    vals = reconstruct(p, y) * g(y)
    return float(np.sum(0.5 * (b - a) * (vals @ w[:, None])))


def decay_constraints(p: Profile1D, k: int) -> np.ndarray:
    """``[h(1), h(-1), int h, int h y^2, ..., int h y^(2k-2)]``."""
    out = [reconstruct(p, 1.0), reconstruct(p, -1.0)]
    out += [_piecewise_integral(p, lambda y, j=j: y ** (2 * j)) for j in range(k)]
    return np.array(out)


def _check_recipe(recipe: DecayRecipe, tol=1e-10):
    p = recipe.h_profile
    cons = decay_constraints(p, recipe.k)
    names = ["h(1)", "h(-1)"] + [f"moment of order {2 * j}" for j in range(recipe.k)]
    for i, val in enumerate(cons):
        if abs(val) > tol:
            raise DecayRecipeError(i, f"constraint {i} ({names[i]}) violated: {val:.3g}")
    for side in (-2.0, 2.0):
        if abs(reconstruct(p, side)) > tol:
            raise DecayRecipeError(
                0 if side > 0 else 1, "h is not supported in [-1, 1]"
            )
    if abs(p.f0) <= tol:
        raise DecayRecipeError(len(cons), "h(0) vanishes")


def piecewise_linear_profile(xs, ys) -> Profile1D:
    """Profile of the continuous piecewise-linear interpolant, zero outside ``[xs[0], xs[-1]]``.

    ``ys`` must vanish at both ends for the extension to be continuous.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slopes = np.concatenate([[0.0], np.diff(ys) / np.diff(xs), [0.0]])
    jumps = np.diff(slopes)
    f0 = float(np.interp(0.0, xs, ys, left=0.0, right=0.0))
    # left-continuous derivative at 0: slope of the piece ending at or after 0
    idx = np.searchsorted(xs, 0.0, side="left")
    df0 = float(slopes[idx])
    return Profile1D(f0, df0, np.column_stack([xs, jumps]))


def solve_decay_kernel(k: int, basis_size: int, radial_quadrature: int = 32) -> DecayRecipe:
    """Find ``h`` in the span of hat functions with ``k`` vanishing even moments.

    The hats live on the uniform interior grid of ``[-1, 1]`` (so ``h(+-1) = 0``).
    Among unit vectors of the moment nullspace the one maximizing ``|h(0)|`` is
    the normalized projection of the evaluation functional at 0; the result is
    scaled to ``h(0) = 1``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if basis_size < k + 3:
        raise ValueError(f"basis_size must be at least k + 3 = {k + 3}")
    n = basis_size
    grid = np.linspace(-1.0, 1.0, n + 2)
    nodes = grid[1:-1]
    gx, gw = np.polynomial.legendre.leggauss(k + 2)
    moments = np.zeros((k, n))
    for i in range(n):
        for lo, hi in ((grid[i], grid[i + 1]), (grid[i + 1], grid[i + 2])):
            y = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
            phi = 1.0 - np.abs(y - nodes[i]) / (grid[1] - grid[0])
            for j in range(k):
                moments[j, i] += 0.5 * (hi - lo) * np.sum(gw * phi * y ** (2 * j))
    at_zero = np.maximum(1.0 - np.abs(nodes) / (grid[1] - grid[0]), 0.0)
    basis = linalg.null_space(moments) if k else np.eye(n)
    z = basis.T @ at_zero
    if np.linalg.norm(z) < 1e-12:
        raise DecayRecipeError(k + 2, f"no kernel element with h(0) != 0 for k={k}, basis_size={n}")
    coef = basis @ z
    coef /= coef @ at_zero
    p = piecewise_linear_profile(grid, np.concatenate([[0.0], coef, [0.0]]))
    recipe = DecayRecipe(k, p, radial_quadrature)
    _check_recipe(recipe)
    return recipe


def higher_decay(recipe: DecayRecipe, d: int, n_dirs: int | None = None, n_nodes: int = 256,
                 seed: int = 0):
    """Barron function ``f(x) = E_nu h(nu . x)``, ``nu ~ N(0, I_d)``, decaying like ``|x|^-(2k+1)``.

    Returns ``(radial, f)`` where ``radial(r) = f(r e_1)`` is computed from the
    one-dimensional reduction ``(2 pi)^(-1/2) r^(-1) int h(y) exp(-y^2/(2 r^2)) dy``
    and ``f`` averages the radial profile :func:`chi_average_profile` over
    ``n_dirs`` sphere nodes.
    """
    _check_recipe(recipe)
    p = recipe.h_profile
    order = recipe.radial_quadrature

    def radial(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(len(r))
        for i, ri in enumerate(np.abs(r)):
            if ri == 0.0:
                out[i] = p.f0
            else:
                out[i] = _piecewise_integral(
                    p, lambda y, s=ri: np.exp(-y * y / (2.0 * s * s)), order
                ) / (math.sqrt(2.0 * math.pi) * ri)
        return out

    n_dirs = _default_dirs(d) if n_dirs is None else n_dirs
    u = sphere_nodes(d, n_dirs, seed)
    prof = chi_average_profile(p, d, n_nodes)
    return radial, BarronFunction(ridge_average(prof, u, np.full(len(u), 1.0 / len(u))))
