"""One-dimensional Barron calculus.

A Barron function of one variable is determined by ``f(0)``, the
left-continuous ``f'(0)`` and the measure ``f''``. We reconstruct it
two-sidedly, exactly on all of R::

    f(x) = f(0) + f'(0) x + sum_{xi >= 0} m relu(x - xi) + sum_{xi < 0} m relu(xi - x)

Each term on the right is linear on the side of ``xi`` that contains the
origin, so ``f(0)`` and ``f'(0-)`` are recovered exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measure import Neuron, SphereMeasure

__all__ = [
    "Profile1D",
    "reconstruct",
    "norm_1d",
    "profile_to_measure",
    "measure_to_profile",
    "slice_1d",
    "compose_profile",
    "profile_to_json",
    "profile_from_json",
]

_LOC_TOL = 1e-14


def _pairs(data):
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    return np.atleast_2d(arr).reshape(-1, 2)


def _merge_locations(pairs):
    if len(pairs) == 0:
        return pairs
    pairs = pairs[np.argsort(pairs[:, 0], kind="stable")]
    locs, masses = [pairs[0, 0]], [pairs[0, 1]]
    for loc, m in pairs[1:]:
        if abs(loc - locs[-1]) <= _LOC_TOL * max(1.0, abs(loc)):
            masses[-1] += m
        else:
            locs.append(loc)
            masses.append(m)
    return np.column_stack([locs, masses])


@dataclass(frozen=True, eq=False)
class Profile1D:
    """``(f(0), f'(0-), f'')`` of a one-dimensional Barron function.

    ``d2_atoms`` are point masses of ``f''`` as ``(location, mass)`` rows;
    ``d2_nodes`` discretize a density part as ``(location, density * weight)``.
    Point masses at equal locations are merged.
    """

    f0: float = 0.0
    df0: float = 0.0
    d2_atoms: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    d2_nodes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        object.__setattr__(self, "f0", float(self.f0))
        object.__setattr__(self, "df0", float(self.df0))
        atoms = _merge_locations(_pairs(self.d2_atoms))
        nodes = _pairs(self.d2_nodes)
        nodes = nodes[np.argsort(nodes[:, 0], kind="stable")] if len(nodes) else nodes
        for arr in (atoms, nodes):
            if not np.all(np.isfinite(arr)):
                raise ValueError("second-derivative data must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "d2_atoms", atoms)
        object.__setattr__(self, "d2_nodes", nodes)

    @property
    def masses(self):
        """All ``(location, mass)`` rows, atoms first."""
        return np.vstack([self.d2_atoms, self.d2_nodes])

    @property
    def first_moment(self):
        m = self.masses
        return float(np.sum(np.abs(m[:, 1]) * (1.0 + np.abs(m[:, 0]))))

    def __add__(self, other):
        return Profile1D(
            self.f0 + other.f0,
            self.df0 + other.df0,
            np.vstack([self.d2_atoms, other.d2_atoms]),
            np.vstack([self.d2_nodes, other.d2_nodes]),
        )

    def scaled(self, c):
        c = float(c)
        sc = np.array([1.0, c])
        return Profile1D(c * self.f0, c * self.df0, self.d2_atoms * sc, self.d2_nodes * sc)

    def __call__(self, x):
        return reconstruct(self, x)


def reconstruct(p: Profile1D, x) -> np.ndarray:
    """Evaluate the function described by ``p``."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    out = p.f0 + p.df0 * flat
    m = p.masses
    if len(m):
        loc, mass = m[:, 0], m[:, 1]
        right = loc >= 0
        out = out + np.maximum(flat[:, None] - loc[right], 0.0) @ mass[right]
        out = out + np.maximum(loc[~right] - flat[:, None], 0.0) @ mass[~right]
    return out.reshape(x.shape) if x.ndim else float(out[0])


def norm_1d(p: Profile1D, weight: str = "real") -> float:
    """``|f(0)| + |f'(0)| + int rho(b) |f''|(db)``.

    ``weight="real"`` uses ``rho(b) = sqrt(1 + b^2)`` (the norm on all of R);
    ``weight="unit"`` uses ``rho = 1`` (the norm on a bounded interval such as
    ``[0, 1]``, where the weights are comparable).
    """
    m = p.masses
    if weight == "real":
        rho = np.sqrt(1.0 + m[:, 0] ** 2)
    elif weight == "unit":
        rho = np.ones(len(m))
    else:
        raise ValueError(f"unknown weight {weight!r}")
    return float(abs(p.f0) + abs(p.df0) + np.sum(rho * np.abs(m[:, 1])))


def _mass_neurons(pairs, one_sided):
    out = []
    for loc, mass in pairs:
        if one_sided or loc >= 0:
            out.append((mass, 1.0, -loc))
        else:
            out.append((mass, -1.0, loc))
    return out


def _profile_neurons(p: Profile1D, one_sided=False):
    """Scalar neurons ``(a, w, b)`` with ``a relu(w t + b)`` summing to ``p``.

    Returns ``(atom_terms, node_terms)`` so that density nodes stay nodes.
    """
    atoms = []
    if p.f0 != 0.0:
        atoms.append((p.f0, 0.0, 1.0))
    if p.df0 != 0.0:
        atoms.append((p.df0, 1.0, 0.0))
        if not one_sided:
            atoms.append((-p.df0, -1.0, 0.0))
    atoms += _mass_neurons(p.d2_atoms, one_sided)
    return atoms, _mass_neurons(p.d2_nodes, one_sided)


def _terms_to_measure(atom_terms, node_terms, d, lift):
    def normalize(terms):
        if not terms:
            return np.zeros(0), np.zeros((0, d + 1))
        a = np.array([t[0] for t in terms])
        v = np.array([lift(t[1], t[2]) for t in terms])
        r = np.linalg.norm(v, axis=1)
        keep = r > 0
        return a[keep] * r[keep], v[keep] / r[keep, None]

    aw, ad = normalize(atom_terms)
    nw, nd = normalize(node_terms)
    return SphereMeasure(d, aw, ad, nw, nd)


def profile_to_measure(p: Profile1D, one_sided: bool = False) -> SphereMeasure:
    """Sphere measure on S^1 inducing the reconstruction of ``p``.

    With ``one_sided=True`` every mass uses ``relu(x - xi)`` and the linear
    term is a single ``relu(x)``. This is the classical construction on
    ``[0, 1]``; it matches ``p`` on ``[0, inf)`` when all masses sit at
    ``xi >= 0`` and not elsewhere.
    """
    atoms, nodes = _profile_neurons(p, one_sided)
    return _terms_to_measure(atoms, nodes, 1, lambda w, b: (w, b))


def compose_profile(p: Profile1D, direction) -> SphereMeasure:
    """Measure of ``x -> g(direction . x)`` in R^d where ``g`` is reconstructed from ``p``."""
    direction = np.asarray(direction, dtype=float).ravel()
    d = len(direction)
    atoms, nodes = _profile_neurons(p)

    def lift(w, b):
        return np.append(w * direction, b)

    return _terms_to_measure(atoms, nodes, d, lift)


def _to_profile_terms(weights, dirs):
    """Map weighted 1D neurons ``c relu(w t + b)`` to profile contributions."""
    f0 = 0.0
    df0 = 0.0
    pairs = []
    for c, (w, b) in zip(weights, dirs):
        if c == 0.0:
            continue
        if w == 0.0:
            f0 += c * max(b, 0.0)
            continue
        m = c * abs(w)
        if w > 0:
            xi = -b / w
            if xi < 0:
                # relu(t - xi) = (t - xi) + relu(xi - t)
                f0 -= m * xi
                df0 += m
        else:
            xi = b / abs(w)
            if xi >= 0:
                # relu(xi - t) = (xi - t) + relu(t - xi)
                f0 += m * xi
                df0 -= m
        pairs.append((xi, m))
    return f0, df0, np.array(pairs).reshape(-1, 2)


def measure_to_profile(mu: SphereMeasure) -> Profile1D:
    """Profile of ``f_mu`` for a measure on S^1 (``d = 1``).

    Directions with ``w > 0`` and ``w < 0`` are pushed forward along
    ``(w, b) -> -b/w`` resp. ``b/|w|`` with mass ``c |w|``; ``w = 0`` atoms are
    constants. Terms living on the "wrong" side of the origin are rewritten
    so that ``f'(0)`` is the left-continuous derivative.
    """
    if mu.dim != 1:
        raise ValueError("measure_to_profile needs a measure on S^1 (dim=1)")
    fa, da, atoms = _to_profile_terms(mu.atom_weights, mu.atom_dirs)
    fn, dn, nodes = _to_profile_terms(mu.node_weights, mu.node_dirs)
    return Profile1D(fa + fn, da + dn, atoms, nodes)


def slice_1d(f, nu) -> Profile1D:
    """Profile of ``r -> f(r nu)`` for a unit vector ``nu``."""
    mu = f.measure if hasattr(f, "measure") else f
    nu = np.asarray(nu, dtype=float).ravel()
    if nu.shape != (mu.dim,):
        raise ValueError(f"nu must have dimension {mu.dim}")
    if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
        raise ValueError("nu must be a unit vector")

    def project(dirs):
        # neuron (c, (w, b)) restricted to the line is c relu((w . nu) r + b)
        return np.column_stack([dirs[:, :-1] @ nu, dirs[:, -1]])

    fa, da, atoms = _to_profile_terms(mu.atom_weights, project(mu.atom_dirs))
    fn, dn, nodes = _to_profile_terms(mu.node_weights, project(mu.node_dirs))
    return Profile1D(fa + fn, da + dn, atoms, nodes)


def neurons_1d(p: Profile1D):
    """The profile as a list of scalar :class:`Neuron` objects (two-sided form)."""
    atoms, nodes = _profile_neurons(p)
    return [Neuron(a, [w], b) for a, w, b in atoms + nodes]


def profile_to_json(p: Profile1D) -> dict:
    return {
        "f0": p.f0,
        "df0": p.df0,
        "d2_atoms": [[float(a), float(b)] for a, b in p.d2_atoms],
        "d2_nodes": [[float(a), float(b)] for a, b in p.d2_nodes],
    }


_PROFILE_KEYS = {"f0", "df0", "d2_atoms", "d2_nodes"}


def profile_from_json(data: dict) -> Profile1D:
    extra = set(data) - _PROFILE_KEYS
    if extra:
        # e.g. a measure file passed where a profile is expected
        raise ValueError(f"malformed profile: unexpected keys {sorted(extra)}")
    try:
        return Profile1D(
            float(data.get("f0", 0.0)),
            float(data.get("df0", 0.0)),
            data.get("d2_atoms", []),
            data.get("d2_nodes", []),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed profile: {exc}") from None


def load_profile(path) -> Profile1D:
    return profile_from_json(json.loads(Path(path).read_text()))


def save_profile(p: Profile1D, path) -> None:
    Path(path).write_text(json.dumps(profile_to_json(p), indent=1) + "\n")

