"""Figure rendering for suite datasets.

Sweep datasets become log-log convergence plots, one line per group value;
trajectory datasets become time plots of each column on a symmetric log
scale.  All rendering goes through the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

from .suites import Dataset  # noqa: E402


def _column(ds: Dataset, name: str) -> list:
    idx = ds.columns.index(name)
    return [row[idx] for row in ds.rows]


def render_sweep(ds: Dataset, path: Path) -> None:
    xcol = ds.x or ds.columns[0]
    ycol = ds.columns[-1]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if ds.group:
        keys = []
        for val in _column(ds, ds.group):
            if val not in keys:
                keys.append(val)
        for key in keys:
            rows = [r for r, g in zip(ds.rows, _column(ds, ds.group))
                    if g == key]
            xs = [r[ds.columns.index(xcol)] for r in rows]
            ys = [r[ds.columns.index(ycol)] for r in rows]
            ax.loglog(xs, ys, marker="o", label=f"{ds.group}={key}")
        ax.legend(fontsize=8)
    else:
        ax.loglog(_column(ds, xcol), _column(ds, ycol), marker="o")
    ax.set_xlabel(xcol)
    ax.set_ylabel(ycol)
    ax.set_title(ds.name)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_trajectory(ds: Dataset, path: Path) -> None:
    xcol = ds.x or ds.columns[0]
    xs = _column(ds, xcol)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for col in ds.columns:
        if col == xcol:
            continue
        ax.plot(xs, [max(abs(v), 1e-18) for v in _column(ds, col)],
                marker=".", label=col)
    ax.set_yscale("log")
    ax.set_xlabel(xcol)
    ax.set_ylabel("absolute deviation")
    ax.set_title(ds.name)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_dataset(ds: Dataset, path: Path) -> bool:
    """Render one dataset to a file; tables have no figure form."""
    if ds.kind == "sweep":
        render_sweep(ds, path)
        return True
    if ds.kind == "trajectory":
        render_trajectory(ds, path)
        return True
    return False
