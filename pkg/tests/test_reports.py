"""PNG figure rendering sanity checks."""

import pytest

from auditorium import errors
from auditorium.analysis import aggregate
from auditorium.arir import SeatId
from auditorium.reports import occupancy_figure, ratings_figure

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def rows():
    out = []
    for assessor in ("a", "b", "c"):
        for cond, base in (("hidden_reference", 98), ("lowpass_anchor", 30),
                           ("non_parametric", 75), ("parametric", 60)):
            for attr in ("basic_audio_quality", "spatial_quality"):
                out.append({"assessor": assessor, "trial": 0, "attribute": attr,
                            "condition": cond, "label": "A",
                            "value": base + {"a": -3, "b": 0, "c": 4}[assessor],
                            "unix_ms": 0})
    return out


def test_ratings_figure_writes_png(tmp_path):
    path = ratings_figure(aggregate(rows()), tmp_path / "ratings.png")
    data = path.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 4000  # an actual plot, not an empty canvas


def test_occupancy_figure_writes_png(tmp_path):
    seats = {lbl: SeatId(*SeatId.parse_label(lbl), position=(0.0, 0.0, 1.2))
             for lbl in ("A1", "B2", "C3", "C5")}
    path = occupancy_figure({"A1": 5000.0, "B2": 20000.0}, {"A1": 2, "B2": 7},
                            seats, tmp_path / "seats.png")
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_figure_errors(tmp_path):
    with pytest.raises(errors.EmptyInput):
        ratings_figure([], tmp_path / "x.png")
    with pytest.raises(errors.EmptyInput):
        occupancy_figure({}, {}, {}, tmp_path / "x.png")
    with pytest.raises(errors.KeyNotFound):
        occupancy_figure({"Z9": 1.0}, {}, {}, tmp_path / "x.png")
