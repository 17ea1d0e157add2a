"""Post-screening, aggregation and seat-usage heatmaps.

Screening follows the hidden-reference rule: an assessor is excluded
when they rated the hidden reference below the threshold in strictly
more than ``max_fraction`` of the rated items (attribute x trial cells).
The boundary matters: 2 of 12 items (0.1667) excludes at the default
0.15, 1 of 12 (0.0833) does not.

Aggregation reports one row per (attribute, condition). The point
estimate and the confidence interval are computed over per-assessor
means (each assessor contributes one number); ``pooled=True`` switches
to treating every rating as independent. Intervals are clipped to the
rating scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from . import errors
from .arir import HIDDEN_REFERENCE

HEATMAP_CSV_HEADER = ("seat", "row", "col", "dwell_ms", "visits")


@dataclass
class AssessorScreen:
    assessor: str
    n_items: int       # hidden-reference cells rated
    n_below: int       # of those, strictly below the threshold
    fraction: float
    excluded: bool


def screen_assessors(rows, threshold: int = 90, max_fraction: float = 0.15
                     ) -> list[AssessorScreen]:
    """Hidden-reference screening over result rows (as from the CSV)."""
    if not rows:
        raise errors.EmptyInput("no rating rows")
    assessors: dict[str, list[int]] = {}
    for row in rows:
        assessors.setdefault(row["assessor"], [])
        if row["condition"] == HIDDEN_REFERENCE:
            assessors[row["assessor"]].append(row["value"])

    out = []
    for assessor in sorted(assessors):
        values = assessors[assessor]
        if not values:
            raise errors.NoHiddenReference(
                f"assessor {assessor!r} has no hidden-reference ratings")
        below = sum(1 for v in values if v < threshold)
        fraction = below / len(values)
        out.append(AssessorScreen(assessor, len(values), below, fraction,
                                  excluded=fraction > max_fraction))
    return out


def apply_screening(rows, screens) -> list[dict]:
    keep = {s.assessor for s in screens if not s.excluded}
    return [r for r in rows if r["assessor"] in keep]


@dataclass
class AggregateCell:
    attribute: str
    condition: str
    mean: float
    ci_low: float
    ci_high: float
    n_assessors: int
    n_ratings: int
    degenerate: bool   # single contributor: the interval collapses to the mean


def aggregate(rows, level: float = 0.95, pooled: bool = False) -> list[AggregateCell]:
    if not rows:
        raise errors.EmptyInput("no rating rows")
    if not 0 < level < 1:
        raise errors.OutOfRange(f"confidence level must be in (0, 1), got {level}")

    groups: dict[tuple[str, str], dict[str, list[int]]] = {}
    for row in rows:
        key = (row["attribute"], row["condition"])
        groups.setdefault(key, {}).setdefault(row["assessor"], []).append(row["value"])

    out = []
    for (attribute, condition) in sorted(groups):
        by_assessor = groups[(attribute, condition)]
        per_assessor = np.array([np.mean(v) for v in by_assessor.values()])
        n_ratings = sum(len(v) for v in by_assessor.values())
        samples = np.array([v for vs in by_assessor.values() for v in vs], dtype=float) \
            if pooled else per_assessor
        center = float(samples.mean())
        n = len(samples)
        if n < 2:
            cell = AggregateCell(attribute, condition, center, center, center,
                                 len(per_assessor), n_ratings, degenerate=True)
        else:
            half = float(stats.t.ppf(0.5 + level / 2, n - 1)
                         * samples.std(ddof=1) / math.sqrt(n))
            cell = AggregateCell(attribute, condition, center,
                                 max(0.0, center - half), min(100.0, center + half),
                                 len(per_assessor), n_ratings, degenerate=False)
        out.append(cell)
    return out


def write_aggregate_csv(path: str | Path, cells) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("attribute", "condition", "mean", "ci_low", "ci_high",
                         "n_assessors", "n_ratings", "degenerate"))
        for c in cells:
            writer.writerow((c.attribute, c.condition, f"{c.mean:.4f}",
                             f"{c.ci_low:.4f}", f"{c.ci_high:.4f}",
                             c.n_assessors, c.n_ratings, int(c.degenerate)))
    return path


def write_screening_csv(path: str | Path, screens) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("assessor", "n_items", "n_below", "fraction", "excluded"))
        for s in screens:
            writer.writerow((s.assessor, s.n_items, s.n_below,
                             f"{s.fraction:.4f}", int(s.excluded)))
    return path


# -- seat-usage heatmap ---------------------------------------------------

_CELL = 100          # svg grid pitch in user units
_MAX_RADIUS = 40.0
_GRAY_HI = 230       # fewest visits: light
_GRAY_LO = 30        # most visits: dark


def heatmap_table(dwell: dict[str, float], visits: dict[str, int], seats) -> list[tuple]:
    """Sorted (seat, row, col, dwell_ms, visits) rows for every visited seat."""
    if not dwell:
        raise errors.EmptyInput("no dwell data")
    rows = []
    for label in sorted(dwell):
        if label not in seats:
            raise errors.KeyNotFound(f"dwell references unknown seat {label!r}")
        seat = seats[label]
        rows.append((label, seat.row, seat.col, float(dwell[label]),
                     int(visits.get(label, 0))))
    return rows


def gray_level(visits: int, max_visits: int) -> int:
    """Monotone map: more visits, darker fill."""
    if max_visits <= 0:
        return _GRAY_HI
    frac = min(visits / max_visits, 1.0)
    return round(_GRAY_HI - (_GRAY_HI - _GRAY_LO) * frac)


def export_heatmap(dwell: dict[str, float], visits: dict[str, int], seats,
                   csv_path: str | Path, svg_path: str | Path) -> tuple[Path, Path]:
    """Write the delimited table and an SVG seat map.

    Circle area tracks dwell time (radius proportional to its square
    root), fill goes monotonically darker with the number of visits.
    """
    rows = heatmap_table(dwell, visits, seats)

    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEATMAP_CSV_HEADER)
        writer.writerows(rows)

    n_rows = 1 + max(s.row for s in seats.values())
    n_cols = 1 + max(s.col for s in seats.values())
    max_dwell = max(r[3] for r in rows)
    max_visits = max(r[4] for r in rows)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {n_cols * _CELL} {n_rows * _CELL}">',
        f'<rect width="{n_cols * _CELL}" height="{n_rows * _CELL}" fill="white"/>',
    ]
    for seat in sorted(seats.values(), key=lambda s: s.label):
        cx, cy = seat.col * _CELL + _CELL // 2, seat.row * _CELL + _CELL // 2
        parts.append(f'<text x="{cx}" y="{cy + 4}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12" fill="#b0b0b0">'
                     f'{seat.label}</text>')
    for label, row, col, dw, vis in rows:
        cx, cy = col * _CELL + _CELL // 2, row * _CELL + _CELL // 2
        radius = _MAX_RADIUS * math.sqrt(dw / max_dwell) if max_dwell > 0 else 0.0
        g = gray_level(vis, max_visits)
        parts.append(f'<circle data-seat="{label}" cx="{cx}" cy="{cy}" r="{radius:.4f}" '
                     f'fill="rgb({g},{g},{g})" fill-opacity="0.85"/>')
    parts.append("</svg>")

    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text("\n".join(parts))
    return csv_path, svg_path
