"""
SVG line charts of run diagnostics and convergence studies
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from whipchain.datatypes import LengthMismatchError, ValidationError

logger = logging.getLogger(__name__)

# fixed ids and no timestamp, so identical data gives identical files
matplotlib.rcParams["svg.hashsalt"] = "whipchain"
matplotlib.rcParams["svg.fonttype"] = "path"


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape:
            raise LengthMismatchError(f"Series '{self.label}' has {self.x.size} x values and {self.y.size} y values")


def emit_svg(file_path: str,
             series: Sequence[Series],
             title: str = "",
             xlabel: str = "",
             ylabel: str = "",
             loglog: bool = False,
             annotation: Optional[str] = None):
    """ Write a self-contained SVG line chart with one line per series """
    if not series or all(s.x.size == 0 for s in series):
        raise ValidationError("Nothing to plot: the series list is empty")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    try:
        for s in series:
            ax.plot(s.x, s.y, marker="o" if loglog else None, markersize=3, label=s.label)
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", linewidth=0.3)
        if len(series) > 1 or series[0].label:
            ax.legend(loc="best", fontsize="small")
        if annotation:
            ax.annotate(annotation, xy=(0.02, 0.02), xycoords="axes fraction", fontsize="small")
        fig.savefig(file_path, format="svg", bbox_inches="tight", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.debug(f"Wrote {file_path}")
