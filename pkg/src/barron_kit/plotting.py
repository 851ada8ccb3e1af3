"""Optional figures for the ``approx`` and ``train`` reports.

matplotlib is imported on first use (Agg backend) and is not a hard
dependency; install the ``plot`` extra to enable these functions.
"""
from __future__ import annotations

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise RuntimeError("plotting needs matplotlib (pip install 'barron-kit[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_rate(rows, path):
    """Median L2 error against width on log axes, with the direct-approximation bound."""
    plt = _pyplot()
    ms = sorted({r["m"] for r in rows})
    med = [np.median([r["l2_error"] for r in rows if r["m"] == m]) for m in ms]
    lo = [np.quantile([r["l2_error"] for r in rows if r["m"] == m], 0.1) for m in ms]
    hi = [np.quantile([r["l2_error"] for r in rows if r["m"] == m], 0.9) for m in ms]
    bound = [next(r["bound"] for r in rows if r["m"] == m) for m in ms]
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.fill_between(ms, lo, hi, alpha=0.25, label="10-90% of seeds")
    ax.plot(ms, med, "o-", label="median error")
    ax.plot(ms, bound, "k--", label="bound")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("width m")
    ax.set_ylabel("L2(P) error")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_history(history, path):
    """Risk and second moment along a training run; ``history`` columns are ``t, risk, path_norm, second_moment, bound_rhs``."""
    plt = _pyplot()
    h = np.asarray(history, dtype=float)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax0.semilogy(h[:, 0], h[:, 1])
    ax0.set_xlabel("t")
    ax0.set_ylabel("risk")
    ax1.plot(h[:, 0], h[:, 3], label="second moment")
    ax1.plot(h[:, 0], h[:, 4], "k--", label="2(M0 + R0 t)")
    ax1.plot(h[:, 0], h[:, 2], label="path norm")
    ax1.set_xlabel("t")
    ax1.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
