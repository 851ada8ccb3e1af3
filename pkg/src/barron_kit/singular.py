"""Affine strata of the singular set of a Barron function.

An atom at ``(w, b)`` puts a kink on the hyperplane ``w . x + b = 0``. Atoms
whose directions span the same line of R^{d+1} (``u`` and ``-u``) share that
hyperplane and form one stratum. A block of density nodes whose directions
span a proper subspace of R^{d+1} is singular along the affine set where all
of them vanish; density nodes spanning everything give a C^1 function.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import active_tolerance, directional_derivative
from .measure import BarronFunction, SphereMeasure

__all__ = [
    "Stratum",
    "SingularReport",
    "StratifyError",
    "stratify",
    "stratify_density",
    "singular_report",
    "analyze",
    "report_to_json",
    "write_report_json",
    "write_report_csv",
]

SPAN_TOL = 1e-8
ANCHOR_TOL = 1e-8
CANCEL_TOL = 1e-10


class StratifyError(ValueError):
    """Raised for inputs outside the atomic stratification."""


@dataclass(frozen=True)
class Stratum:
    """Atoms (or density nodes) singular along a common affine subspace.

    ``subspace_dim`` is the dimension ``s`` of the span of the ``w``-parts and
    ``singular_dim = d - s``. ``anchor`` lies on every member hyperplane (None
    when they do not intersect). ``jump_witness`` is the jump of the one-sided
    derivatives at ``anchor`` along ``direction``.
    """

    atom_indices: tuple
    subspace_dim: int
    singular_dim: int
    anchor: np.ndarray | None
    jump_witness: float
    direction: np.ndarray | None = None
    kind: str = "atomic"

    @property
    def cancelled(self) -> bool:
        return abs(self.jump_witness) <= CANCEL_TOL


@dataclass(frozen=True)
class SingularReport:
    dim: int
    strata: list = field(default_factory=list)
    smooth_density: bool = False

    @property
    def cancelled(self):
        return [s.cancelled for s in self.strata]

    @property
    def active(self):
        """Strata with a nonzero jump witness."""
        return [s for s in self.strata if not s.cancelled]


def _oriented(v):
    """Sign-normalize so the first nonzero entry is positive."""
    nz = np.flatnonzero(np.abs(v) > SPAN_TOL)
    v = -v if len(nz) and v[nz[0]] < 0 else v
    return v + 0.0


def _residual(w, b, x):
    return np.abs(w @ x + b)


def _solve_anchor(w, b):
    """Least-squares point on ``{w_i . x + b_i = 0}``; None if inconsistent."""
    x, *_ = np.linalg.lstsq(w, -b, rcond=None)
    if np.max(_residual(w, b, x), initial=0.0) > ANCHOR_TOL:
        return None
    return x


def _generic_shift(x0, w_span, others, rng):
    """Move ``x0`` inside the stratum off the hyperplanes of non-member atoms."""
    d = len(x0)
    if len(w_span):
        _, sv, vt = np.linalg.svd(w_span)
        rank = int(np.sum(sv > SPAN_TOL))
        null = vt[rank:].T
    else:
        null = np.eye(d)
    if null.shape[1] == 0 or len(others) == 0:
        return x0
    ow, ob = others[:, :-1], others[:, -1]
    scale = 1.0 + np.linalg.norm(x0)
    x = x0
    for _ in range(16):
        tau = 10.0 * active_tolerance(x)
        if np.all(np.abs(ow @ x + ob) > tau):
            return x
        x = x0 + null @ rng.uniform(-0.5, 0.5, null.shape[1]) * scale
    return x


def _group_lines(weights, dirs):
    """Greedy grouping in descending ``|weight|``: a direction joins the first group whose line contains it."""
    order = np.argsort(-np.abs(weights), kind="stable")
    reps, groups = [], []
    for i in order:
        u = dirs[i]
        for g, r in enumerate(reps):
            # distance of u to span{r}
            if np.linalg.norm(u - (u @ r) * r) < SPAN_TOL:
                groups[g].append(int(i))
                break
        else:
            reps.append(u)
            groups.append([int(i)])
    return [sorted(g) for g in groups]


def stratify(mu, seed: int = 0):
    """Strata of an atomic measure, one per hyperplane.

    Zero-weight atoms carry no mass and are skipped. Pure-bias atoms
    (``w = 0``) are constants: they form a stratum with ``s = 0`` and no
    anchor. Measures with density nodes are rejected; see
    :func:`stratify_density`.
    """
    mu = mu.measure if isinstance(mu, BarronFunction) else mu
    if mu.n_nodes:
        raise StratifyError(
            "measure has density nodes; use stratify_density (a density part is C^1 "
            "unless its directions span a proper subspace)"
        )
    d = mu.dim
    live = np.flatnonzero(mu.atom_weights != 0.0)
    weights, dirs = mu.atom_weights[live], mu.atom_dirs[live]
    rng = np.random.default_rng(seed)
    strata = []
    for group in _group_lines(weights, dirs):
        idx = live[group]
        w, b = dirs[group, :-1], dirs[group, -1]
        wn = np.linalg.norm(w[0])
        if wn < SPAN_TOL:
            strata.append(Stratum(tuple(int(i) for i in idx), 0, d, None, 0.0))
            continue
        x0 = _solve_anchor(w, b)
        others = np.delete(dirs, group, axis=0)
        anchor = _generic_shift(x0, w, others, rng) + 0.0
        v = _oriented(w[0] / wn)
        jump = directional_derivative(mu, anchor, v).jump
        strata.append(Stratum(tuple(int(i) for i in idx), 1, d - 1, anchor, jump, v))
    return strata


def stratify_density(mu):
    """C^1 test for the density part of ``mu`` (atoms are ignored).

    If the node directions span all of R^{d+1} the induced function is C^1
    and the result is empty. Otherwise the nodes form a single stratum whose
    ``s`` is the rank of their ``w``-parts.
    """
    mu = mu.measure if isinstance(mu, BarronFunction) else mu
    d = mu.dim
    keep = mu.node_weights != 0.0
    weights, dirs = mu.node_weights[keep], mu.node_dirs[keep]
    if not len(weights):
        return []
    rank = int(np.linalg.matrix_rank(dirs, tol=SPAN_TOL))
    if rank == d + 1:
        return []
    w, b = dirs[:, :-1], dirs[:, -1]
    _, sv, vt = np.linalg.svd(w)
    s = int(np.sum(sv > SPAN_TOL))
    anchor = _solve_anchor(w, b)
    v = _oriented(vt[0]) if s else None
    jump = 0.0
    if anchor is not None and v is not None:
        nodes_only = SphereMeasure(d, np.zeros(0), np.zeros((0, d + 1)), weights, dirs)
        jump = directional_derivative(nodes_only, anchor, v).jump
    idx = tuple(int(i) for i in np.flatnonzero(keep))
    return [Stratum(idx, s, d - s, anchor, jump, v, kind="density")]


def singular_report(f, seed: int = 0) -> SingularReport:
    """Strata with jump witnesses; strata with ``|jump| <= 1e-10`` are flagged cancelled.

    A zero witness flags a possible cancellation; it does not prove smoothness.
    """
    mu = f.measure if isinstance(f, BarronFunction) else f
    if mu.n_nodes:
        raise StratifyError("singular_report needs an atomic measure")
    return SingularReport(mu.dim, stratify(mu, seed))


def analyze(f, seed: int = 0) -> SingularReport:
    """Report for a mixed measure: atomic strata plus the density part's stratum, if any.

    ``smooth_density`` is True when density nodes are present and span all of
    R^{d+1}, i.e. the density part is C^1.
    """
    mu = f.measure if isinstance(f, BarronFunction) else f
    atomic = SphereMeasure(mu.dim, mu.atom_weights, mu.atom_dirs)
    dens = stratify_density(mu)
    smooth = bool(np.any(mu.node_weights != 0.0)) and not dens
    return SingularReport(mu.dim, stratify(atomic, seed) + dens, smooth)


def _stratum_json(s: Stratum) -> dict:
    return {
        "kind": s.kind,
        "atom_indices": list(s.atom_indices),
        "subspace_dim": s.subspace_dim,
        "singular_dim": s.singular_dim,
        "anchor": None if s.anchor is None else [float(c) for c in s.anchor],
        "jump_witness": float(s.jump_witness),
        "cancelled": s.cancelled,
    }


def report_to_json(report) -> dict:
    strata = report.strata if isinstance(report, SingularReport) else list(report)
    out = {"dim": None, "strata": [_stratum_json(s) for s in strata]}
    if isinstance(report, SingularReport):
        out["dim"] = report.dim
        out["smooth_density"] = report.smooth_density
    return out


def write_report_json(report, path) -> None:
    Path(path).write_text(json.dumps(report_to_json(report), indent=1) + "\n")


def write_report_csv(report, path) -> None:
    strata = report.strata if isinstance(report, SingularReport) else list(report)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stratum", "kind", "n_atoms", "subspace_dim", "singular_dim", "jump_witness", "cancelled"])
        for i, s in enumerate(strata):
            w.writerow([i, s.kind, len(s.atom_indices), s.subspace_dim, s.singular_dim,
                        repr(float(s.jump_witness)), int(s.cancelled)])
