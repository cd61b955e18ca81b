"""Matplotlib rendering of the CSV report tables.

Every CLI command writes its delimited output first; these helpers render
companion PNG files next to it.  The CSVs remain the machine-readable
contract; figures are a convenience view and can be disabled with
``--no-figures``.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.frameon": False,
}


def _new_axes(title: str):
    plt.rcParams.update(_RC)
    fig, ax = plt.subplots()
    ax.set_title(title)
    return fig, ax


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def trace_figure(path, times, grad_norms, bound=None, label: str = "run") -> None:
    fig, ax = _new_axes("gradient gap along the run")
    mask = np.asarray(times) >= 1
    ax.semilogy(np.asarray(times)[mask], np.asarray(grad_norms)[mask], label=label)
    if bound is not None:
        ax.semilogy(np.asarray(times)[mask], np.asarray(bound)[mask], "--",
                    label="guaranteed ceiling")
    ax.set_xlabel("t")
    ax.set_ylabel("||F(z^t)||")
    ax.legend()
    _save(fig, path)


def gap_figure(path, reports) -> None:
    fig, ax = _new_axes("gap measures along the run")
    ts = [r.t for r in reports]
    ax.semilogy(ts, [max(r.grad_gap, 1e-300) for r in reports], label="gradient gap")
    if any(r.total_gap is not None for r in reports):
        ax.semilogy(
            ts,
            [max(r.total_gap, 1e-300) if r.total_gap is not None else np.nan
             for r in reports],
            label="total gap",
        )
    if any(r.total_gap_bound is not None for r in reports):
        ax.semilogy(
            ts,
            [r.total_gap_bound if r.total_gap_bound is not None else np.nan
             for r in reports],
            "--",
            label="upper bound",
        )
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, path)


def potential_figure(path, ftilde_norms, grad_norms, residuals) -> None:
    fig, ax = _new_axes("adaptive potential vs gradient gap")
    t = np.arange(len(ftilde_norms))
    ax.semilogy(t, np.maximum(ftilde_norms, 1e-300), label="||Ftilde^t||")
    ax.semilogy(
        np.arange(len(grad_norms)), np.maximum(grad_norms, 1e-300),
        alpha=0.7, label="||F(z^t)||",
    )
    ax.semilogy(
        np.arange(len(residuals)), np.maximum(residuals, 1e-300),
        ":", label="identity residual",
    )
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, path)


def sweep_figure(path, nus, rhos, floor: Optional[float] = None) -> None:
    fig, ax = _new_axes("spectral radius over the instance window")
    ax.plot(nus, rhos, lw=1.0)
    if floor is not None:
        ax.axhline(floor, ls="--", color="tab:red", label="guaranteed floor")
        ax.legend()
    ax.set_xlabel("nu")
    ax.set_ylabel("rho")
    _save(fig, path)


def lowerbound_figure(path, Ts, measured, reference, ref_label: str) -> None:
    fig, ax = _new_axes("measured decay on hard instances")
    ax.loglog(Ts, measured, "o-", label="measured")
    ax.loglog(Ts, reference, "--", label=ref_label)
    ax.set_xlabel("T")
    ax.legend()
    _save(fig, path)


def regret_figure(path, series: Sequence[tuple[str, np.ndarray]]) -> None:
    fig, ax = _new_axes("regret growth")
    for label, values in series:
        ax.plot(np.arange(1, len(values) + 1), values, label=label)
    ax.set_xlabel("T")
    ax.set_ylabel("regret")
    ax.legend()
    _save(fig, path)


def ratefit_figure(path, ts, values, slope, intercept) -> None:
    fig, ax = _new_axes("log-log rate fit")
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    pos = values > 0
    ax.loglog(ts[pos], values[pos], "o", label="data")
    grid = np.linspace(np.log(ts[pos].min()), np.log(ts[pos].max()), 50)
    ax.loglog(np.exp(grid), np.exp(slope * grid + intercept), "--",
              label=f"slope {slope:.3f}")
    ax.set_xlabel("T")
    ax.legend()
    _save(fig, path)
