"""Figure builders: pure functions from CSV content to a matplotlib figure.

Styling is fixed in one place and nothing time- or path-dependent enters
the canvas, so rendering the same CSVs twice produces identical bytes.
"""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "lines.linewidth": 1.4,
}


class SchemaError(ValueError):
    """A CSV is missing required columns or has no data rows."""


def read_csv(path: str, required: set[str]) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    missing = required - set(rows[0])
    if missing:
        raise SchemaError(f"{path}: missing columns {sorted(missing)}")
    return rows


def _col(rows: list[dict], name: str) -> list[float]:
    return [float(r[name]) for r in rows]


def _label(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def render_roc(paths: list[str]):
    """ROC of the two detection rules; two curves per input CSV."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for path in paths:
            rows = read_csv(path, {"pf_plain", "pd_plain", "pf_ia", "pd_ia"})
            tag = f" [{_label(path)}]" if len(paths) > 1 else ""
            ax.plot(_col(rows, "pf_plain"), _col(rows, "pd_plain"),
                    label="non-coherent" + tag)
            ax.plot(_col(rows, "pf_ia"), _col(rows, "pd_ia"), linestyle="--",
                    label="interference-aware" + tag)
        ax.set_xscale("log")
        ax.set_xlabel("false alarm probability $P_F$")
        ax.set_ylabel("detection probability $P_D$")
        ax.set_ylim(0.0, 1.02)
        ax.legend(loc="lower right")
        fig.tight_layout()
    return fig


def render_detect(paths: list[str]):
    """P_D, P_CC and the squared-detection bound vs. channel load."""
    (path,) = paths
    rows = read_csv(path, {"g", "pd", "pcc", "pd_sq"})
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        g = _col(rows, "g")
        ax.plot(g, _col(rows, "pd"), marker="o", label="$P_D$")
        ax.plot(g, _col(rows, "pcc"), marker="s", label="$P_{CC}$")
        ax.plot(g, _col(rows, "pd_sq"), linestyle=":", label="$P_D^2$ bound")
        ax.set_xlabel("channel load G [packets/$T_p$]")
        ax.set_ylabel("probability")
        ax.set_ylim(0.9, 1.005)
        ax.legend(loc="lower left")
        fig.tight_layout()
    return fig


def render_throughput(paths: list[str]):
    """Spectral efficiency of the two-phase receiver vs. the ideal baseline."""
    (path,) = paths
    rows = read_csv(path, {"g", "xi_two_phase", "xi_ideal"})
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        g = _col(rows, "g")
        two = _col(rows, "xi_two_phase")
        ideal = _col(rows, "xi_ideal")
        ax.plot(g, two, marker="o", label="two-phase detection")
        ax.plot(g, ideal, marker="s", linestyle="--", label="known positions")
        ax.set_xlabel("channel load G [packets/$T_p$]")
        ax.set_ylabel("spectral efficiency $\\xi$ [b/s/Hz]")
        ax.set_ylim(0.0, max(1.4, 1.05 * max(two + ideal)))
        ax.legend(loc="upper left")
        fig.tight_layout()
    return fig


RENDERERS = {
    "roc": render_roc,
    "detect": render_detect,
    "throughput": render_throughput,
}
