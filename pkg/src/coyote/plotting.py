"""Static SVG figures rendered with matplotlib.

Output is byte-stable for identical input: no timestamp metadata, a fixed
hash salt for element ids, and deterministic decimation of long series.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MAX_POINTS = 2000

_RC = {
    "svg.hashsalt": "coyote",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "path.simplify": False,
}


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    linestyle: str = "-"
    marker: str = ""


@dataclass(frozen=True)
class PlotStyle:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    loglog: bool = False
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    width: float = 6.0
    height: float = 4.0


def _decimate(x, y):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(int))
    return x[idx], y[idx]


def render_plot(series: list[Series], style: PlotStyle = PlotStyle()) -> str:
    """Draw ``series`` on one axes and return the SVG document.

    Each series is a single line whose SVG group id is ``series<i>``.  With
    ``loglog`` only strictly positive points are drawn.
    """
    if not series:
        raise ValueError("nothing to plot: empty series list")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(style.width, style.height))
        ax.patch.set_gid("plot-area")
        for i, s in enumerate(series):
            x = np.asarray(s.x, dtype=float)
            y = np.asarray(s.y, dtype=float)
            if x.shape != y.shape or x.size == 0:
                raise ValueError(f"series {s.label!r} is empty or has mismatched x/y")
            if style.loglog:
                keep = (x > 0) & (y > 0)
                x, y = x[keep], y[keep]
            x, y = _decimate(x, y)
            (line,) = ax.plot(x, y, linestyle=s.linestyle, marker=s.marker, label=s.label)
            line.set_gid(f"series{i}")
        if style.loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        if style.xlim:
            ax.set_xlim(*style.xlim)
        if style.ylim:
            ax.set_ylim(*style.ylim)
        ax.set_title(style.title)
        ax.set_xlabel(style.xlabel)
        ax.set_ylabel(style.ylabel)
        if any(s.label for s in series):
            ax.legend(loc="best")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def save_plot(path: str | Path, series: list[Series], style: PlotStyle = PlotStyle()) -> Path:
    path = Path(path)
    path.write_text(render_plot(series, style), encoding="utf-8")
    return path
