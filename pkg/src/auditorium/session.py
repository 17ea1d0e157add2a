"""Listening-test sessions: blinding, rating collection, result persistence.

A session runs one assessor through a familiarization phase and a fixed
number of rated trials. Every trial draws a fresh blinded label map
(deterministic per session seed), so "A".."D" mean different conditions
from trial to trial. The visible reference button is the fixed label
"ref"; it always plays the reference and can never be rated.

Results go to one CSV, written atomically and idempotently:
``assessor,trial,attribute,condition,label,value,unix_ms``.
"""

from __future__ import annotations

import csv
import os
import random
import string
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import errors
from .arir import HIDDEN_REFERENCE, LOWPASS_ANCHOR, NON_PARAMETRIC, PARAMETRIC, REFERENCE

REFERENCE_LABEL = "ref"

#: rating attributes: id, display name, scale endpoints (low, high), info text
ATTRIBUTES = (
    ("basic_audio_quality", "Basic Audio Quality", "0", "100",
     "Global attribute used to judge all detected differences between the "
     "reference and the object."),
    ("localizability", "Localizability", "More difficult", "Easier",
     "Correlates with the perceived spatial extent of a source. Localizability "
     "is low when spatial extent and location of a sound source are difficult "
     "to estimate or appear diffuse. It is high if a sound source is clearly "
     "delimited."),
    ("spatial_quality", "Spatial Quality", "Low Quality", "High Quality",
     "A measure of the ability of the item to acoustically describe the "
     "presented scene with respect to the reference. Takes into account all "
     "spatial characteristics, e.g., depth, width, spatial distribution, "
     "reverberation, spatialization, distance, envelopment, immersion."),
    ("timbral_quality", "Timbral Quality", "Low Quality", "High Quality",
     "How accurately the item maintains the original harmonic content, tone "
     "color, and spectral balance of the sound with respect to the reference."),
)
ATTRIBUTE_IDS = tuple(a[0] for a in ATTRIBUTES)
ATTRIBUTE_INFO = {a[0]: {"name": a[1], "low": a[2], "high": a[3], "description": a[4]}
                  for a in ATTRIBUTES}

CSV_HEADER = ("assessor", "trial", "attribute", "condition", "label", "value", "unix_ms")

FAMILIARIZATION = -1


@dataclass
class SessionConfig:
    assessor: str
    conditions: tuple = (HIDDEN_REFERENCE, LOWPASS_ANCHOR, NON_PARAMETRIC, PARAMETRIC)
    n_trials: int = 3
    seed: int = 0
    out_path: str | Path | None = None

    def validate(self):
        if not self.assessor or not self.assessor.strip():
            raise errors.InvalidConfig("assessor id must be non-empty")
        if self.n_trials < 1:
            raise errors.InvalidConfig(f"need at least one trial, got {self.n_trials}")
        if len(self.conditions) < 2:
            raise errors.InvalidConfig("need at least two conditions to compare")
        if len(set(self.conditions)) != len(self.conditions):
            raise errors.InvalidConfig("duplicate conditions")
        if HIDDEN_REFERENCE not in self.conditions:
            raise errors.InvalidConfig(
                "hidden_reference must be among the rated conditions")
        if len(self.conditions) > 26:
            raise errors.InvalidConfig("more conditions than single-letter labels")
        if REFERENCE in self.conditions:
            raise errors.InvalidConfig(
                "the open reference is always playable as 'ref'; rate hidden_reference instead")


@dataclass
class _Cell:
    condition: str
    value: int
    unix_ms: int


class Session:
    def __init__(self, config: SessionConfig, clock=time.time):
        config.validate()
        self.config = config
        self._clock = clock
        self.trial_index = FAMILIARIZATION
        self._ratings: list[dict[tuple[str, str], _Cell]] = [
            {} for _ in range(config.n_trials)]
        self._label_maps = [self._draw_labels(t) for t in range(-1, config.n_trials)]
        self.finalized_path: Path | None = None

    def _draw_labels(self, trial: int) -> dict[str, str]:
        rng = random.Random(f"{self.config.seed}/{trial}")
        conditions = list(self.config.conditions)
        rng.shuffle(conditions)
        return dict(zip(string.ascii_uppercase, conditions))

    # -- state ----------------------------------------------------------

    @property
    def finished(self) -> bool:
        return self.trial_index >= self.config.n_trials

    @property
    def in_familiarization(self) -> bool:
        return self.trial_index == FAMILIARIZATION

    def labels(self) -> dict[str, str]:
        """Blinded label -> condition map for the current phase."""
        idx = min(self.trial_index, self.config.n_trials - 1)
        return dict(self._label_maps[idx + 1])

    def condition_for(self, label: str) -> str:
        if label == REFERENCE_LABEL:
            return REFERENCE
        cond = self.labels().get(label)
        if cond is None:
            raise errors.UnknownLabel(
                f"{label!r}; valid: {', '.join(sorted(self.labels()))} and '{REFERENCE_LABEL}'")
        return cond

    def progress(self) -> dict:
        done = 0 if not (0 <= self.trial_index < self.config.n_trials) \
            else len(self._ratings[self.trial_index])
        return {
            "assessor": self.config.assessor,
            "trial": self.trial_index,
            "n_trials": self.config.n_trials,
            "cells_rated": done,
            "cells_total": len(ATTRIBUTE_IDS) * len(self.config.conditions),
            "finished": self.finished,
        }

    # -- rating ---------------------------------------------------------

    def rate(self, attribute: str, label: str, value) -> None:
        if self.in_familiarization:
            raise errors.WrongPhase("ratings are not collected during familiarization")
        if self.finished:
            raise errors.WrongPhase("session is already finished")
        if attribute not in ATTRIBUTE_IDS:
            raise errors.UnknownLabel(
                f"unknown attribute {attribute!r}; valid: {', '.join(ATTRIBUTE_IDS)}")
        if label == REFERENCE_LABEL:
            raise errors.UnknownLabel("the open reference is not rated")
        condition = self.condition_for(label)
        if isinstance(value, float) and not value.is_integer():
            raise errors.OutOfRange(f"ratings are integers, got {value}")
        value = int(value)
        if not 0 <= value <= 100:
            raise errors.OutOfRange(f"rating must be in 0..100, got {value}")
        self._ratings[self.trial_index][(attribute, label)] = _Cell(
            condition, value, int(self._clock() * 1000))

    def ratings_view(self) -> dict[str, dict[str, int]]:
        """Current trial's ratings as attribute -> label -> value (still blind)."""
        out: dict[str, dict[str, int]] = {attr: {} for attr in ATTRIBUTE_IDS}
        if 0 <= self.trial_index < self.config.n_trials:
            for (attr, label), cell in self._ratings[self.trial_index].items():
                out[attr][label] = cell.value
        return out

    def missing_cells(self) -> list[str]:
        """Unrated attribute/label pairs of the current trial."""
        if not 0 <= self.trial_index < self.config.n_trials:
            return []
        have = self._ratings[self.trial_index]
        labels = sorted(self.labels())
        return [f"{attr}/{label}" for attr in ATTRIBUTE_IDS for label in labels
                if (attr, label) not in have]

    def next_trial(self) -> int:
        """Advance to the next phase; returns the new trial index."""
        if self.finished:
            raise errors.WrongPhase("session is already finished")
        if not self.in_familiarization:
            missing = self.missing_cells()
            if missing:
                raise errors.Incomplete(missing)
        self.trial_index += 1
        if self.finished:
            self.finalize()
        return self.trial_index

    # -- persistence ----------------------------------------------------

    def rows(self) -> list[tuple]:
        out = []
        for trial, cells in enumerate(self._ratings):
            for attr in ATTRIBUTE_IDS:
                for label in sorted(l for (a, l) in cells if a == attr):
                    cell = cells[(attr, label)]
                    out.append((self.config.assessor, trial, attr, cell.condition,
                                label, cell.value, cell.unix_ms))
        return out

    def finalize(self, path: str | Path | None = None) -> Path | None:
        """Write the result CSV; safe to call again (same content, same path)."""
        if not self.finished:
            raise errors.NotFinished(
                f"session is in trial {self.trial_index} of {self.config.n_trials}")
        target = Path(path) if path is not None else (
            Path(self.config.out_path) if self.config.out_path else None)
        if target is None:
            return None
        write_rating_rows(target, self.rows())
        self.finalized_path = target
        return target


def write_rating_rows(path: Path, rows) -> Path:
    """Atomic CSV write: temp file in the target directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            writer.writerows(rows)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink(missing_ok=True)
        except OSError:
            pass
        raise errors.PersistFailure(f"cannot write {path}: {exc}") from None
    return path


def read_rating_rows(path: str | Path) -> list[dict]:
    """Load a result CSV back into dicts with typed trial/value/unix_ms."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
                raise errors.MalformedTrace(
                    f"{path}: expected header {','.join(CSV_HEADER)}")
            out = []
            for row in reader:
                try:
                    row["trial"] = int(row["trial"])
                    row["value"] = int(row["value"])
                    row["unix_ms"] = int(row["unix_ms"])
                except (TypeError, ValueError):
                    raise errors.MalformedTrace(f"{path}: non-numeric row {row}") from None
                out.append(row)
            return out
    except OSError as exc:
        raise errors.MalformedTrace(f"cannot read {path}: {exc}") from None
