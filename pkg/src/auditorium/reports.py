"""Figure rendering for analysis output.

Two figures cover the standard report: rated quality per condition with
confidence intervals, and seat occupancy on the room grid. Both render
headless via the Agg backend and write PNG files next to the CSV output.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import errors
from .analysis import gray_level
from .session import ATTRIBUTES

_CONDITION_COLORS = {
    "reference": "#487890",
    "hidden_reference": "#487890",
    "lowpass_anchor": "#b0b0b0",
    "non_parametric": "#d1762f",
    "parametric": "#7f9c45",
}
_FALLBACK_COLOR = "#888888"

_ATTRIBUTE_NAMES = {a[0]: a[1] for a in ATTRIBUTES}


def ratings_figure(cells, path, dpi=150):
    """Render aggregated ratings as grouped bars with CI whiskers.

    One group per attribute, one bar per condition. Cells come from
    analysis.aggregate; degenerate cells render without whiskers.
    """
    if not cells:
        raise errors.EmptyInput("no aggregate cells to plot")
    attributes = sorted({c.attribute for c in cells},
                        key=lambda a: (a not in _ATTRIBUTE_NAMES, a))
    conditions = sorted({c.condition for c in cells})
    by_key = {(c.attribute, c.condition): c for c in cells}

    width = 0.8 / len(conditions)
    fig, ax = plt.subplots(figsize=(max(6.0, 2.2 * len(attributes)), 4.2))
    x = np.arange(len(attributes))
    for j, cond in enumerate(conditions):
        offs = x + (j - (len(conditions) - 1) / 2) * width
        means, half_lo, half_hi = [], [], []
        for attr in attributes:
            cell = by_key.get((attr, cond))
            if cell is None:
                means.append(np.nan)
                half_lo.append(0.0)
                half_hi.append(0.0)
            else:
                means.append(cell.mean)
                half_lo.append(cell.mean - cell.ci_low)
                half_hi.append(cell.ci_high - cell.mean)
        color = _CONDITION_COLORS.get(cond, _FALLBACK_COLOR)
        ax.bar(offs, means, width * 0.92, label=cond, color=color)
        ax.errorbar(offs, means, yerr=[half_lo, half_hi], fmt="none",
                    ecolor="#303030", elinewidth=1.1, capsize=3)

    ax.set_ylim(0, 100)
    ax.set_ylabel("rating")
    ax.set_xticks(x)
    ax.set_xticklabels([_ATTRIBUTE_NAMES.get(a, a) for a in attributes],
                       fontsize=9)
    ax.legend(fontsize=8, loc="lower right", framealpha=0.9)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path


def occupancy_figure(dwell, visits, seats, path, dpi=150):
    """Render seat usage: marker area tracks dwell time, shade tracks visits."""
    if not dwell:
        raise errors.EmptyInput("no dwell data to plot")
    for label in dwell:
        if label not in seats:
            raise errors.KeyNotFound(f"dwell references unknown seat {label!r}")

    max_dwell = max(dwell.values()) or 1.0
    max_visits = max(visits.values()) if visits else 0
    rows = [s.row for s in seats.values()]
    cols = [s.col for s in seats.values()]

    fig, ax = plt.subplots(figsize=(1.1 * (max(cols) + 2), 1.1 * (max(rows) + 2)))
    for label, seat in sorted(seats.items()):
        ax.text(seat.col, seat.row + 0.32, label, ha="center", va="center",
                fontsize=8, color="#a0a0a0")
        d = dwell.get(label)
        if d is None:
            continue
        g = gray_level(visits.get(label, 0), max_visits)
        area = 1200.0 * d / max_dwell  # area, not radius: matches perceived weight
        ax.scatter([seat.col], [seat.row], s=max(area, 12.0),
                   color=(g / 255, g / 255, g / 255), edgecolors="#404040",
                   linewidths=0.8, zorder=3)

    ax.set_xlim(-0.7, max(cols) + 0.7)
    ax.set_ylim(max(rows) + 0.7, -0.7)  # row A at the top, like the room
    ax.set_xticks(sorted(set(cols)))
    ax.set_xticklabels([str(c + 1) for c in sorted(set(cols))])
    ax.set_yticks(sorted(set(rows)))
    ax.set_yticklabels([chr(65 + r) for r in sorted(set(rows))])
    ax.set_aspect("equal")
    ax.set_title("seat occupancy (size: dwell, shade: visits)", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
