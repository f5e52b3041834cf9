"""Figure builders for experiment output tables.

All figures are deterministic: fixed style, fixed sizes, no timestamps,
and a fixed SVG hash salt, so re-rendering a figure from the same inputs
is byte-stable up to image-format metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .schema import REQUIRED_COLUMNS, column, load_table  # noqa: E402

FIGURE_KINDS = tuple(REQUIRED_COLUMNS)

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "zetalab-plots",
}
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: inputs, kind, output path, axis options."""

    inputs: tuple[str, ...]
    kind: str
    out: str
    log_y: bool | None = None      # None = kind default (log for tail curves)
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"choose from {', '.join(FIGURE_KINDS)}")
        if not self.inputs:
            raise ValueError("figure needs at least one input file")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def _tail_floor(counts) -> float:
    """Display floor replacing p_hat = 0 on a log axis."""
    biggest = max(counts) if counts else 1
    return 10.0 ** math.floor(math.log10(1.0 / (5.0 * biggest)))


def _group(rows, key):
    order = []
    groups = {}
    for row in rows:
        value = float(row[key])
        if value not in groups:
            groups[value] = []
            order.append(value)
        groups[value].append(row)
    return [(value, groups[value]) for value in sorted(order)]


def _tail_axes(ax, rows_by_series, series_label, log_y):
    floor = _tail_floor([int(float(r["n"])) for _, rows in rows_by_series for r in rows])
    for color, (value, rows) in zip(_COLORS, rows_by_series):
        rows = sorted(rows, key=lambda r: float(r["K"]))
        ks = column(rows, "K")
        p = np.array(column(rows, "p_hat"))
        lo = np.array(column(rows, "ci_low"))
        hi = np.array(column(rows, "ci_high"))
        if log_y:
            shown = np.maximum(p, floor)
            err = np.vstack([shown - np.maximum(lo, floor), np.maximum(hi, floor) - shown])
        else:
            shown = p
            err = np.vstack([p - lo, hi - p])
        ax.errorbar(ks, shown, yerr=err, marker="o", capsize=3, color=color,
                    label=f"{series_label} = {value:g}")
    ax.set_xlabel("K")
    ax.set_ylabel("P(discrepancy > K)")
    if log_y:
        ax.set_yscale("log")
    ax.legend()


def tail_curve(spec: FigureSpec, fig) -> None:
    rows = [row for path in spec.inputs for row in load_table(path, "tail-curve")]
    ax = fig.subplots()
    log_y = True if spec.log_y is None else spec.log_y
    _tail_axes(ax, _group(rows, "alpha"), "alpha", log_y)
    ax.set_title(spec.title or "Discrepancy tail vs K")


def k_stability(spec: FigureSpec, fig) -> None:
    rows = [row for path in spec.inputs for row in load_table(path, "k-stability")]
    ax = fig.subplots()
    log_y = True if spec.log_y is None else spec.log_y
    floor = _tail_floor([int(float(r["n"])) for r in rows])
    for color, (k_value, k_rows) in zip(_COLORS, _group(rows, "k")):
        k_rows = sorted(k_rows, key=lambda r: float(r["K"]))
        ks = column(k_rows, "K")
        p = np.array(column(k_rows, "p_hat"))
        lo = np.array(column(k_rows, "ci_low"))
        hi = np.array(column(k_rows, "ci_high"))
        if log_y:
            p, lo, hi = (np.maximum(v, floor) for v in (p, lo, hi))
        ax.fill_between(ks, lo, hi, color=color, alpha=0.25)
        ax.plot(ks, p, marker="o", color=color, label=f"k = {k_value:g}")
    ax.set_xlabel("K")
    ax.set_ylabel("P(discrepancy > K)")
    if log_y:
        ax.set_yscale("log")
    ax.legend()
    ax.set_title(spec.title or "Tail stability across scales")


def alpha_sweep(spec: FigureSpec, fig) -> None:
    rows = [row for path in spec.inputs for row in load_table(path, "alpha-sweep")]
    ax = fig.subplots()
    for color, (k_value, k_rows) in zip(_COLORS, _group(rows, "K")):
        k_rows = sorted(k_rows, key=lambda r: float(r["alpha"]))
        alphas = column(k_rows, "alpha")
        p = np.array(column(k_rows, "p_hat"))
        lo = np.array(column(k_rows, "ci_low"))
        hi = np.array(column(k_rows, "ci_high"))
        ax.fill_between(alphas, lo, hi, color=color, alpha=0.25)
        ax.plot(alphas, p, marker="o", color=color, label=f"K = {k_value:g}")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("alpha")
    ax.set_ylabel("P(discrepancy > K)")
    ax.legend()
    ax.set_title(spec.title or "Discrepancy tail vs grid coarseness")


def discrepancy_hist(spec: FigureSpec, fig) -> None:
    rows = [row for path in spec.inputs for row in load_table(path, "discrepancy-hist")]
    values = np.array([float(row["discrepancy"]) for row in rows])
    ax = fig.subplots()
    if values.size and float(values.min()) == float(values.max()):
        center = float(values[0])
        half = max(abs(center), 1.0) * 1e-3
        ax.hist(values, bins=[center - half, center + half])
    else:
        ax.hist(values, bins=40)
    ax.set_xlabel("discrepancy")
    ax.set_ylabel("trials")
    ax.set_title(spec.title or f"Discrepancy histogram ({values.size} trials)")


def pnt_deviation(spec: FigureSpec, fig) -> None:
    rows = [row for path in spec.inputs for row in load_table(path, "pnt-deviation")]
    ax = fig.subplots()
    for color, (j_value, j_rows) in zip(_COLORS, _group(rows, "j")):
        j_rows = sorted(j_rows, key=lambda r: (float(r["P"]), float(r["Q"])))
        ps = column(j_rows, "P")
        dev = column(j_rows, "deviation")
        ax.plot(ps, dev, marker="o", linestyle="none", color=color,
                label=f"j = {j_value:g}")
    ax.set_xscale("log")
    ax.set_xlabel("P (lower end of the prime range)")
    ax.set_ylabel("|moment sum - main term|")
    ax.legend()
    ax.set_title(spec.title or "Prime moment deviations")


_BUILDERS = {
    "tail-curve": tail_curve,
    "alpha-sweep": alpha_sweep,
    "k-stability": k_stability,
    "discrepancy-hist": discrepancy_hist,
    "pnt-deviation": pnt_deviation,
}


def render(spec: FigureSpec) -> str:
    """Build the figure and write it to spec.out; returns the output path.

    Inputs are only ever read; output format follows the extension
    (.png or .svg).
    """
    with plt.rc_context(_STYLE):
        fig = plt.figure()
        try:
            _BUILDERS[spec.kind](spec, fig)
            fig.tight_layout()
            if spec.out.endswith(".svg"):
                fig.savefig(spec.out, metadata={"Date": None})
            else:
                fig.savefig(spec.out)
        finally:
            plt.close(fig)
    return spec.out
