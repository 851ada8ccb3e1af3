"""Signed measures on the parameter sphere S^d and the functions they induce.

A two-layer ReLU network ``sum_i a_i relu(w_i . x + b_i)`` is positively
one-homogeneous in ``(w_i, b_i)``, so every neuron can be moved onto the unit
sphere of R^{d+1} by absorbing ``|(w_i, b_i)|`` into the outer weight. A
:class:`SphereMeasure` stores the result as weighted directions: point masses
(``atoms``) plus optional quadrature nodes that discretize an absolutely
continuous part (``density_nodes``).

The last coordinate of every direction multiplies the homogenized coordinate
``1``, i.e. it is the bias.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "Neuron",
    "SphereMeasure",
    "BarronFunction",
    "MeasureError",
    "from_neurons",
    "to_neurons",
    "total_variation",
    "odd_even_split",
    "linear_part",
    "homogeneous_reduce",
    "measure_to_json",
    "measure_from_json",
    "load_measure",
    "save_measure",
]

UNIT_TOL = 1e-12
LOAD_UNIT_TOL = 1e-9
MERGE_TOL = 1e-10


class MeasureError(ValueError):
    """Invalid measure data (non-unit direction, bad shape, zero neuron...)."""


@dataclass(frozen=True)
class Neuron:
    """One ReLU unit ``a * relu(w . x + b)``."""

    a: float
    w: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "w", np.atleast_1d(np.asarray(self.w, dtype=float)))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.a * np.maximum(x @ self.w + self.b, 0.0)


def _as_dirs(dirs, dim):
    dirs = np.asarray(dirs, dtype=float)
    if dirs.size == 0:
        return np.zeros((0, dim + 1))
    dirs = np.atleast_2d(dirs)
    if dirs.shape[1] != dim + 1:
        raise MeasureError(f"directions must have {dim + 1} components, got {dirs.shape[1]}")
    return dirs


def _lexsort(dirs):
    # np.lexsort sorts by the last key first
    return np.lexsort(dirs.T[::-1]) if len(dirs) else np.zeros(0, dtype=int)


def _merge_atoms(weights, dirs, tol=MERGE_TOL):
    """Merge atoms whose directions agree within ``tol`` (chordal ~ angular)."""
    if len(weights) < 2:
        return weights, dirs
    pairs = cKDTree(dirs).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return weights, dirs
    parent = np.arange(len(weights))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(weights))])
    keep = np.unique(roots)
    new_w = np.zeros(len(keep))
    # roots are visited in input (lexicographic) order, so sums are reproducible
    index = {r: k for k, r in enumerate(keep)}
    for i, r in enumerate(roots):
        new_w[index[r]] += weights[i]
    return new_w, dirs[keep]


@dataclass(frozen=True, eq=False)
class SphereMeasure:
    """Finite signed measure on the unit sphere of R^{d+1}.

    Parameters
    ----------
    dim : int
        Ambient data dimension ``d``.
    atom_weights, atom_dirs : array_like
        Point masses. Directions closer than ``1e-10`` are merged and their
        weights summed; zero-weight atoms that result from merging are kept.
    node_weights, node_dirs : array_like, optional
        Quadrature nodes of an absolutely continuous part, with the quadrature
        weight already folded into the weight. Never merged.

    All directions must have unit Euclidean norm within ``1e-12``. Atoms and
    nodes are stored in lexicographic order of their directions.
    """

    dim: int
    atom_weights: np.ndarray
    atom_dirs: np.ndarray
    node_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    node_dirs: np.ndarray = None
    unit_tol: float = UNIT_TOL

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise MeasureError("dimension must be positive")
        aw = np.atleast_1d(np.asarray(self.atom_weights, dtype=float)).ravel()
        ad = _as_dirs(self.atom_dirs, dim)
        nw = np.atleast_1d(np.asarray(self.node_weights, dtype=float)).ravel()
        nd = _as_dirs(self.node_dirs if self.node_dirs is not None else [], dim)
        for name, w, d_ in (("atom", aw, ad), ("density node", nw, nd)):
            if len(w) != len(d_):
                raise MeasureError(f"{name} weights and directions differ in length")
            if not np.all(np.isfinite(w)) or not np.all(np.isfinite(d_)):
                raise MeasureError(f"non-finite {name} data")
            if len(d_):
                dev = np.abs(np.linalg.norm(d_, axis=1) - 1.0)
                bad = np.flatnonzero(dev > self.unit_tol)
                if len(bad):
                    raise MeasureError(
                        f"{name} {bad[0]} has direction norm off by {dev[bad[0]]:.3g}"
                    )
        order = _lexsort(ad)
        aw, ad = _merge_atoms(aw[order], ad[order])
        order = _lexsort(nd)
        nw, nd = nw[order], nd[order]
        for arr in (aw, ad, nw, nd):
            arr.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "atom_weights", aw)
        object.__setattr__(self, "atom_dirs", ad)
        object.__setattr__(self, "node_weights", nw)
        object.__setattr__(self, "node_dirs", nd)

    # convenience -------------------------------------------------------
    @classmethod
    def empty(cls, dim):
        return cls(dim, np.zeros(0), np.zeros((0, dim + 1)))

    @property
    def n_atoms(self):
        return len(self.atom_weights)

    @property
    def n_nodes(self):
        return len(self.node_weights)

    @property
    def weights(self):
        """All weights, atoms first."""
        return np.concatenate([self.atom_weights, self.node_weights])

    @property
    def dirs(self):
        """All directions, atoms first."""
        return np.vstack([self.atom_dirs, self.node_dirs])

    @property
    def total_variation(self):
        return total_variation(self)

    def scaled(self, c):
        return SphereMeasure(
            self.dim, c * self.atom_weights, self.atom_dirs, c * self.node_weights, self.node_dirs
        )

    def __add__(self, other):
        if not isinstance(other, SphereMeasure):
            return NotImplemented
        if other.dim != self.dim:
            raise MeasureError("cannot add measures of different dimension")
        return SphereMeasure(
            self.dim,
            np.concatenate([self.atom_weights, other.atom_weights]),
            np.vstack([self.atom_dirs, other.atom_dirs]),
            np.concatenate([self.node_weights, other.node_weights]),
            np.vstack([self.node_dirs, other.node_dirs]),
        )

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def pushforward(self, fn):
        """Push the measure forward along a map of unit directions to unit directions."""
        return SphereMeasure(
            self.dim, self.atom_weights, fn(self.atom_dirs), self.node_weights, fn(self.node_dirs)
        )

    def __repr__(self):
        return (
            f"SphereMeasure(dim={self.dim}, atoms={self.n_atoms}, "
            f"density_nodes={self.n_nodes}, tv={self.total_variation:.6g})"
        )


class BarronFunction:
    """The function ``x -> int relu(w . x + b) dmu(w, b)`` of a :class:`SphereMeasure`.

    ``norm_upper_bound`` is the total variation of the held representation.
    The Barron norm itself is an infimum over all representing measures and
    is never computed; this value only bounds it from above.
    """

    def __init__(self, measure: SphereMeasure):
        self.measure = measure
        self.norm_upper_bound = total_variation(measure)

    @property
    def dim(self):
        return self.measure.dim

    def __call__(self, x):
        from .evaluation import evaluate

        return evaluate(self, x)

    def __repr__(self):
        return f"BarronFunction(dim={self.dim}, norm_upper_bound={self.norm_upper_bound:.6g})"


def from_neurons(neurons, d=None):
    """Normalize a list of neurons into a :class:`SphereMeasure`.

    Neuron ``(a, w, b)`` becomes an atom of weight ``a * |(w, b)|`` at
    ``(w, b) / |(w, b)|``. The induced function is unchanged.
    """
    neurons = list(neurons)
    if d is None:
        if not neurons:
            raise MeasureError("dimension needed for an empty neuron list")
        d = len(neurons[0].w)
    weights = np.empty(len(neurons))
    dirs = np.empty((len(neurons), d + 1))
    for i, n in enumerate(neurons):
        if len(n.w) != d:
            raise MeasureError(f"neuron {i} has inner weight of length {len(n.w)}, expected {d}")
        v = np.append(n.w, n.b)
        r = np.linalg.norm(v)
        if r == 0.0:
            raise MeasureError(f"neuron {i} has zero inner weight and bias")
        weights[i] = n.a * r
        dirs[i] = v / r
    return SphereMeasure(d, weights, dirs)


def to_neurons(mu: SphereMeasure):
    """Atoms and density nodes as a list of already-normalized neurons."""
    return [Neuron(c, u[:-1], u[-1]) for c, u in zip(mu.weights, mu.dirs)]


def total_variation(mu: SphereMeasure) -> float:
    return float(np.sum(np.abs(mu.atom_weights)) + np.sum(np.abs(mu.node_weights)))


def odd_even_split(mu: SphereMeasure):
    """Return ``(even, odd)`` with ``even = (mu + T#mu)/2``, ``odd = (mu - T#mu)/2``, ``T = -id``."""
    half = mu.scaled(0.5)
    reflected = half.pushforward(np.negative)
    return half + reflected, half - reflected


def linear_part(mu: SphereMeasure) -> np.ndarray:
    """Coefficients of the linear function carried by the odd part.

    Returns a vector of length ``d + 1``; the first ``d`` entries multiply
    ``x`` and the last one is a constant offset.
    """
    _, odd = odd_even_split(mu)
    if not len(odd.weights):
        return np.zeros(mu.dim + 1)
    return 0.5 * (odd.weights @ odd.dirs)


def _homogeneous_parts(weights, dirs):
    w = dirs[:, :-1]
    r = np.linalg.norm(w, axis=1)
    keep = r > 0
    new_dirs = np.zeros((int(keep.sum()), dirs.shape[1]))
    new_dirs[:, :-1] = w[keep] / r[keep, None]
    # renormalize away the rounding from the division
    new_dirs /= np.linalg.norm(new_dirs, axis=1, keepdims=True)
    new_weights = weights[keep] * r[keep]
    # bias-free directions are already homogeneous; keep them bit for bit
    flat = dirs[keep, -1] == 0.0
    new_dirs[flat] = dirs[keep][flat]
    new_weights[flat] = weights[keep][flat]
    return new_weights, new_dirs


def homogeneous_reduce(mu: SphereMeasure) -> SphereMeasure:
    """Push ``|w| mu`` forward along ``(w, b) -> (w/|w|, 0)``.

    The result induces ``lim_{r->inf} f(r x) / r``. Pure-bias atoms (``w = 0``)
    vanish in that limit and are dropped.
    """
    aw, ad = _homogeneous_parts(mu.atom_weights, mu.atom_dirs)
    nw, nd = _homogeneous_parts(mu.node_weights, mu.node_dirs)
    return SphereMeasure(mu.dim, aw, ad, nw, nd)


# serialization --------------------------------------------------------------

def measure_to_json(mu: SphereMeasure) -> dict:
    return {
        "dim": mu.dim,
        "atoms": [
            {"weight": float(c), "dir": [float(v) for v in u]}
            for c, u in zip(mu.atom_weights, mu.atom_dirs)
        ],
        "density_nodes": [
            {"weight": float(c), "dir": [float(v) for v in u]}
            for c, u in zip(mu.node_weights, mu.node_dirs)
        ],
    }


def _entries(data, key, dim):
    items = data.get(key, []) or []
    if not isinstance(items, list):
        raise MeasureError(f"'{key}' must be a list")
    w = np.zeros(len(items))
    u = np.zeros((len(items), dim + 1))
    for i, item in enumerate(items):
        try:
            w[i] = float(item["weight"])
            u[i] = np.asarray(item["dir"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise MeasureError(f"{key}[{i}] is malformed: {exc}") from None
    return w, u


def measure_from_json(data: dict) -> SphereMeasure:
    """Inverse of :func:`measure_to_json`; directions must be unit within 1e-9.

    Directions are renormalized after the check so the stored measure meets
    the tighter in-memory tolerance.
    """
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError):
        raise MeasureError("measure JSON needs an integer 'dim'") from None
    aw, ad = _entries(data, "atoms", dim)
    nw, nd = _entries(data, "density_nodes", dim)
    for name, u in (("atoms", ad), ("density_nodes", nd)):
        if len(u):
            dev = np.abs(np.linalg.norm(u, axis=1) - 1.0)
            bad = np.flatnonzero(dev > LOAD_UNIT_TOL)
            if len(bad):
                raise MeasureError(f"{name}[{bad[0]}] is not a unit vector (off by {dev[bad[0]]:.3g})")
            u /= np.linalg.norm(u, axis=1, keepdims=True)
    return SphereMeasure(dim, aw, ad, nw, nd)


def save_measure(mu: SphereMeasure, path) -> None:
    Path(path).write_text(json.dumps(measure_to_json(mu), indent=1) + "\n")


def load_measure(path) -> SphereMeasure:
    return measure_from_json(json.loads(Path(path).read_text()))
