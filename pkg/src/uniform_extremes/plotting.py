"""Figures for parameter sweeps: estimate and coefficient of variation against
the swept parameter, written next to the tabular output."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .results import ResultRow, finite  # noqa: E402

_RC = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "uniform-extremes",
}


def sweep_parameter(rows: Sequence[ResultRow]) -> str | None:
    """The single parameter that varies across ``rows``, if there is one."""
    names = [k for k in rows[0].params if len({r.params.get(k) for r in rows}) > 1] if rows else []
    return names[0] if len(names) == 1 else None


def plot_sweep(rows: Sequence[ResultRow], path, param: str | None = None, title: str | None = None) -> Path:
    param = param or sweep_parameter(rows)
    if param is None:
        raise ValueError("rows do not vary in exactly one parameter; pass param explicitly")
    x = [r.params[param] for r in rows]
    est = [r.est for r in rows]
    cv = [r.cv if finite(r.cv) else float("nan") for r in rows]
    path = Path(path)
    with plt.rc_context(_RC):
        fig, (ax_est, ax_cv) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        ax_est.scatter(x, est, s=14, color="black")
        if any(e > 0 for e in est):
            ax_est.set_yscale("log")
        ax_est.set_xlabel(param)
        ax_est.set_ylabel("estimate")
        ax_cv.scatter(x, cv, s=14, color="black")
        ax_cv.set_xlabel(param)
        ax_cv.set_ylabel("CV")
        ax_cv.set_ylim(bottom=0)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=150, metadata={"Software": None})
        plt.close(fig)
    return path
