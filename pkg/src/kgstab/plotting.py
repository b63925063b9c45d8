"""Standalone SVG line plots with byte-stable output."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


@dataclass(frozen=True)
class Series:
    x: Sequence[float]
    y: Sequence[float]
    label: str = ""
    xlabel: str = "x"
    ylabel: str = "y"
    title: str = ""
    logy: bool = False


def render_svg(series: Series) -> bytes:
    """SVG bytes for one series; identical input gives identical bytes."""
    x = np.asarray(series.x, dtype=float)
    y = np.asarray(series.y, dtype=float)
    if x.size == 0 or x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be two nonempty 1-d arrays of equal length")
    if series.logy:
        bad = np.flatnonzero(~(y > 0))
        if bad.size:
            raise ValueError(f"log scale needs positive values; value {float(y[bad[0]])!r} at index {int(bad[0])}")
    finite = np.isfinite(y)
    with matplotlib.rc_context({"svg.hashsalt": "kgstab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            ax.plot(x[finite], y[finite], marker="." if x.size < 50 else None, label=series.label or None)
            if series.logy:
                ax.set_yscale("log")
            ax.set_xlabel(series.xlabel)
            ax.set_ylabel(series.ylabel)
            if series.title:
                ax.set_title(series.title)
            if series.label:
                ax.legend()
            ax.grid(True, alpha=0.3)
            buf = io.BytesIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def emit_plot(series: Series, path: str | Path) -> Path:
    """Write one series as an SVG file."""
    data = render_svg(series)
    p = Path(path)
    p.write_bytes(data)
    return p
