"""Log-log convergence and spectrum figures from the solver's CSV files.

These scripts never recompute physics: they parse the two CSV schemas

    convergence: abscissa,channel,error
    spectrum:    t,k_shell,n_rad

and render deterministic vector images (fixed style, hashed SVG ids, no
timestamps), so identical CSV input gives byte-identical output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams.update({
    "svg.hashsalt": "picard-nls-plots",
    "figure.dpi": 100,
    "font.size": 10,
})


class SchemaError(ValueError):
    """The CSV does not match the expected column layout."""


@dataclass
class PlotSpec:
    csv_paths: list
    kind: str                      # "convergence" | "spectrum"
    output: str
    reference_slopes: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""

    def __post_init__(self):
        if self.kind not in ("convergence", "spectrum"):
            raise SchemaError(f"unknown plot kind {self.kind!r}")
        if isinstance(self.csv_paths, str):
            self.csv_paths = [self.csv_paths]


def _read_csv(path, expected_header):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {expected_header}")
        if header != expected_header:
            raise SchemaError(
                f"{path}: header {header} does not match expected columns {expected_header}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_convergence(path):
    """-> {channel: (abscissa array, error array)} sorted by falling abscissa."""
    rows = _read_csv(path, ["abscissa", "channel", "error"])
    series: dict = {}
    for x, channel, err in rows:
        series.setdefault(channel, []).append((float(x), float(err)))
    out = {}
    for channel, pts in series.items():
        pts.sort(key=lambda q: -q[0])
        xs, ys = zip(*pts)
        out[channel] = (np.array(xs), np.array(ys))
    return out


def read_spectrum(path):
    """-> {t: (k array, n_rad array)} with times in ascending order."""
    rows = _read_csv(path, ["t", "k_shell", "n_rad"])
    series: dict = {}
    for t, k, v in rows:
        series.setdefault(float(t), []).append((float(k), float(v)))
    out = {}
    for t in sorted(series):
        pts = sorted(series[t])
        ks, vs = zip(*pts)
        out[t] = (np.array(ks), np.array(vs))
    return out


def _guide_line(ax, xs, ys, slope, color="0.4"):
    """Power-law guide anchored at the first positive data point."""
    mask = ys > 0
    if not mask.any():
        return
    x0, y0 = xs[mask][0], ys[mask][0]
    xg = np.array([xs.min(), xs.max()])
    ax.plot(xg, y0 * (xg / x0) ** slope, linestyle="--", linewidth=0.9,
            color=color, label=f"slope {slope:g}")


def plot_convergence(spec: PlotSpec):
    """One log-log panel per channel with the declared guide slopes."""
    data = {}
    for path in spec.csv_paths:
        for channel, series in read_convergence(path).items():
            data[channel] = series
    channels = sorted(data)
    fig, axes = plt.subplots(1, len(channels), figsize=(3.2 * len(channels), 3.0),
                             squeeze=False)
    for ax, channel in zip(axes[0], channels):
        xs, ys = data[channel]
        pos = ys > 0
        ax.loglog(xs[pos], ys[pos], marker="o", markersize=3.5, linewidth=1.0,
                  label=channel)
        for slope in spec.reference_slopes:
            _guide_line(ax, xs[pos], ys[pos], slope)
        ax.set_xlabel(spec.xlabel or "step")
        ax.set_ylabel(spec.ylabel or "L2 error")
        ax.grid(True, which="both", alpha=0.25)
        ax.legend(fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def plot_spectrum(spec: PlotSpec):
    """One curve per recorded time on log-log axes, with optional guides."""
    merged: dict = {}
    for path in spec.csv_paths:
        merged.update(read_spectrum(path))
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    last = None
    for t in sorted(merged):
        ks, vs = merged[t]
        pos = (ks > 0) & (vs > 0)
        if not pos.any():
            continue
        ax.loglog(ks[pos], vs[pos], linewidth=1.0, label=f"t = {t:g}")
        last = (ks[pos], vs[pos])
    if last is not None:
        for slope in spec.reference_slopes:
            _guide_line(ax, *last, slope)
    ax.set_xlabel(spec.xlabel or "wavenumber shell")
    ax.set_ylabel(spec.ylabel or "shell wave action")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=7)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> str:
    """Draw and save the figure; SVG/PDF output carries no timestamps."""
    fig = plot_convergence(spec) if spec.kind == "convergence" else plot_spectrum(spec)
    try:
        fig.savefig(spec.output, metadata=_no_dates(spec.output))
    finally:
        plt.close(fig)
    return spec.output


def _no_dates(path: str):
    if path.endswith(".svg"):
        return {"Date": None}
    if path.endswith(".pdf"):
        return {"CreationDate": None}
    return None
