"""Figures rendered by the report path, saved next to the delimited output.

Plots are diagnostics only; the CSV/JSON files remain the stable interface.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .gridfn import GridFunction  # noqa: E402

_FIGSIZE = (7.0, 4.3)
_DPI = 150


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def _trusted_curve(f: GridFunction):
    mask = f.trusted_mask()
    return f.domain.axis_nodes(0)[mask], f.values[mask]


def save_iterates_figure(path, f0: GridFunction, j_final: GridFunction | None,
                         i_final: GridFunction | None, oracle_curve: GridFunction | None = None,
                         title: str = ""):
    """Initial datum, final iterates, and the oracle curve on the trusted region."""
    fig, ax = plt.subplots(figsize=_FIGSIZE, constrained_layout=True)
    if f0.domain.dim == 2:
        ref = j_final if j_final is not None else i_final
        im = ax.imshow(ref.values.T, origin="lower", aspect="auto",
                       extent=(f0.domain.lower[0], f0.domain.upper[0],
                               f0.domain.lower[1], f0.domain.upper[1]))
        fig.colorbar(im, ax=ax, label="iterate value")
    else:
        ax.plot(f0.domain.axis_nodes(0), f0.values, color="0.6", lw=1.0, label="initial datum")
        if j_final is not None:
            ax.plot(*_trusted_curve(j_final), color="tab:blue", lw=1.4, label="lower iterate")
        if i_final is not None:
            ax.plot(*_trusted_curve(i_final), color="tab:red", lw=1.4, label="upper iterate")
        if oracle_curve is not None:
            ax.plot(*_trusted_curve(oracle_curve), color="k", ls="--", lw=1.2, label="oracle value")
        ax.legend(loc="best", fontsize=9)
        ax.set_ylabel("value")
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    _save(fig, path)


def save_convergence_figure(path, rows: list[dict], eps: float | None = None,
                            title: str = "gap vs number of steps"):
    """Measured gap and the rate bound against n, log-log."""
    ns = [row["n"] for row in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE, constrained_layout=True)
    gaps = [row.get("measured_gap") for row in rows]
    bounds = [row.get("gap_bound") for row in rows]
    if any(g is not None for g in gaps):
        ax.loglog(ns, gaps, "o-", color="tab:blue", label="measured gap")
    if any(b is not None for b in bounds):
        ax.loglog(ns, bounds, "s--", color="tab:red", label="rate bound (t/n) conj(lip)")
    if eps is not None:
        ax.axhline(eps, color="0.4", ls=":", label=f"eps = {eps:g}")
    ax.set_xlabel("steps n")
    ax.set_ylabel("sup (upper - lower)")
    ax.set_title(title)
    ax.grid(which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    _save(fig, path)


def save_sandwich_figure(path, j_final: GridFunction, i_final: GridFunction,
                         oracle_curve: GridFunction | None, tol: float,
                         title: str = "two-sided enclosure"):
    """The enclosure band with the oracle inside it (d = 1 only)."""
    fig, ax = plt.subplots(figsize=_FIGSIZE, constrained_layout=True)
    xj, vj = _trusted_curve(j_final)
    xi, vi = _trusted_curve(i_final)
    ax.plot(xj, vj - 2 * tol, color="tab:blue", lw=1.2, label="lower - 2 tol(h)")
    ax.plot(xi, vi + 2 * tol, color="tab:red", lw=1.2, label="upper + 2 tol(h)")
    if oracle_curve is not None:
        ax.plot(*_trusted_curve(oracle_curve), color="k", ls="--", lw=1.2, label="oracle value")
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    _save(fig, path)
