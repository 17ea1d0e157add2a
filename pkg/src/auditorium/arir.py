"""Ambisonic room-impulse-response datasets and anechoic source samples.

A dataset lives in one directory: a TOML manifest at the root plus one
subdirectory per stored condition, holding multichannel float32 WAV files
named ``<seat_label>_src<k>.wav``. Hidden-reference and low-pass-anchor
conditions are virtual: they resolve to the reference data and never
appear on disk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import errors

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - py310
    import tomli as tomllib

# Canonical condition ids. Anything else is accepted as an open-ended
# string id for additional stored datasets.
REFERENCE = "reference"
HIDDEN_REFERENCE = "hidden_reference"
NON_PARAMETRIC = "non_parametric"
LOWPASS_ANCHOR = "lowpass_anchor"
PARAMETRIC = "parametric"

#: Conditions that resolve to the reference ARIR data instead of their own
#: files. The anchor additionally flags the engine's low-pass filter.
VIRTUAL_CONDITIONS = (HIDDEN_REFERENCE, LOWPASS_ANCHOR)

CONVENTIONS = ("ACN/SN3D", "ACN/N3D")

GRID_ROWS = 5
GRID_COLS = 5


def resolve_condition(condition: str) -> str:
    """Map a condition id to the id whose ARIR data it plays."""
    return REFERENCE if condition in VIRTUAL_CONDITIONS else condition


@dataclass(frozen=True)
class AmbisonicConfig:
    order: int
    convention: str
    sample_rate: int

    @property
    def channel_count(self) -> int:
        return (self.order + 1) ** 2

    def validate(self):
        if self.order < 1:
            raise errors.MalformedManifest(f"ambisonic order must be >= 1, got {self.order}")
        if self.convention not in CONVENTIONS:
            raise errors.MalformedManifest(
                f"convention must be one of {CONVENTIONS}, got {self.convention!r}")
        if self.sample_rate <= 0:
            raise errors.MalformedManifest(f"bad sample rate {self.sample_rate}")


@dataclass(frozen=True)
class SeatId:
    row: int
    col: int
    position: tuple[float, float, float]

    def __post_init__(self):
        if not (0 <= self.row < GRID_ROWS and 0 <= self.col < GRID_COLS):
            raise errors.MalformedManifest(f"seat ({self.row},{self.col}) outside the 5x5 grid")

    @property
    def label(self) -> str:
        return f"{chr(ord('A') + self.row)}{self.col + 1}"

    @staticmethod
    def parse_label(label: str) -> tuple[int, int]:
        """Return (row, col) for a label like 'B3'; raises on anything else."""
        if len(label) == 2 and "A" <= label[0] <= "E" and "1" <= label[1] <= "5":
            return ord(label[0]) - ord("A"), int(label[1]) - 1
        raise errors.MalformedManifest(f"bad seat label {label!r}")


@dataclass(frozen=True)
class SourceId:
    index: int
    position: tuple[float, float, float]


@dataclass
class ArirSet:
    """Immutable after load; safe to share read-only across threads."""

    config: AmbisonicConfig
    room: str
    seats: dict[str, SeatId]                 # keyed by label
    sources: list[SourceId]
    stored_conditions: list[str]             # condition ids with data on disk
    rirs: dict[tuple[str, str, int], np.ndarray] = field(repr=False, default_factory=dict)

    @property
    def conditions(self) -> list[str]:
        """All playable condition ids, virtual ones included."""
        out = list(self.stored_conditions)
        if REFERENCE in out:
            for virt in VIRTUAL_CONDITIONS:
                if virt not in out:
                    out.append(virt)
        return out

    def seat(self, label: str) -> SeatId:
        try:
            return self.seats[label]
        except KeyError:
            raise errors.KeyNotFound(
                f"unknown seat {label!r}; valid: {', '.join(sorted(self.seats))}") from None

    def get(self, condition: str, seat_label: str, source_index: int) -> np.ndarray:
        """IR for (condition, seat, source); virtual conditions return reference data."""
        stored = resolve_condition(condition)
        key = (stored, seat_label, source_index)
        try:
            return self.rirs[key]
        except KeyError:
            raise errors.KeyNotFound(f"no impulse response for {key}") from None

    def max_ir_length(self) -> int:
        return max(ir.shape[1] for ir in self.rirs.values())


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise errors.MalformedManifest(f"manifest {context} is missing {key!r}")
    return table[key]


def _parse_xyz(value, context: str) -> tuple[float, float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or not all(isinstance(v, (int, float)) for v in value)):
        raise errors.MalformedManifest(f"{context}: position must be [x, y, z] numbers")
    return (float(value[0]), float(value[1]), float(value[2]))


def parse_manifest(path: Path) -> dict:
    """Parse and validate the dataset manifest; returns the raw TOML table."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise errors.MalformedManifest(f"manifest not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise errors.MalformedManifest(f"{path}: {exc}") from None

    for key in ("room", "sample_rate", "order", "convention", "seats", "sources", "conditions"):
        _require(data, key, str(path))
    if not data["conditions"]:
        raise errors.MalformedManifest(f"{path}: no conditions declared")
    if not data["seats"]:
        raise errors.MalformedManifest(f"{path}: no seats declared")
    if not data["sources"]:
        raise errors.MalformedManifest(f"{path}: no sources declared")
    return data


def load_arir_set(root: str | Path, manifest: str | Path | None = None) -> ArirSet:
    """Load a full dataset. Every key declared in the manifest must load.

    Sample-rate mismatches are hard errors; nothing is resampled.
    """
    root = Path(root)
    manifest_path = Path(manifest) if manifest is not None else root / "manifest.toml"
    data = parse_manifest(manifest_path)

    config = AmbisonicConfig(
        order=int(data["order"]),
        convention=str(data["convention"]),
        sample_rate=int(data["sample_rate"]),
    )
    config.validate()

    seats: dict[str, SeatId] = {}
    for entry in data["seats"]:
        label = str(_require(entry, "label", "seat entry"))
        row, col = SeatId.parse_label(label)
        seat = SeatId(row, col, _parse_xyz(_require(entry, "position", "seat entry"), label))
        if label in seats:
            raise errors.MalformedManifest(f"duplicate seat label {label}")
        seats[label] = seat

    sources = []
    for idx, entry in enumerate(data["sources"]):
        sources.append(SourceId(idx, _parse_xyz(_require(entry, "position", "source entry"),
                                                f"source {idx}")))
    positions = {s.position for s in sources}
    if len(positions) != len(sources):
        raise errors.MalformedManifest("source positions must be distinct")

    stored = []
    rirs: dict[tuple[str, str, int], np.ndarray] = {}
    for entry in data["conditions"]:
        cond = str(_require(entry, "id", "condition entry"))
        if cond in VIRTUAL_CONDITIONS:
            raise errors.MalformedManifest(
                f"{cond} is a virtual condition and cannot have a dataset directory")
        cond_dir = root / str(_require(entry, "dir", "condition entry"))
        stored.append(cond)
        for label in seats:
            for src in sources:
                path = cond_dir / f"{label}_src{src.index}.wav"
                rirs[(cond, label, src.index)] = _read_ir(path, config)

    return ArirSet(config=config, room=str(data["room"]), seats=seats,
                   sources=sources, stored_conditions=stored, rirs=rirs)


def _read_ir(path: Path, config: AmbisonicConfig) -> np.ndarray:
    if not path.is_file():
        raise errors.MissingFile(f"missing impulse response {path.stem}: {path}", path)
    rate, samples = _read_wav(path)
    if rate != config.sample_rate:
        raise errors.SampleRateMismatch(path, config.sample_rate, rate)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[1] != config.channel_count:
        raise errors.ChannelCountMismatch(path, config.channel_count, samples.shape[1])
    data = samples.T  # -> (channels, length)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise errors.NonFiniteSample(path, int(bad[0]))
    return data


def _read_wav(path: Path) -> tuple[int, np.ndarray]:
    try:
        rate, samples = wavfile.read(path)
    except (ValueError, EOFError, OSError) as exc:
        raise errors.UnreadableFile(f"{path}: {exc}") from None
    if not np.issubdtype(samples.dtype, np.floating):
        # Integer PCM is accepted and scaled to [-1, 1) floats.
        info = np.iinfo(samples.dtype)
        samples = samples.astype(np.float32) / float(max(abs(info.min), info.max))
    return int(rate), samples


def load_source_sample(path: str | Path, expected_rate: int) -> "SourceSample":
    path = Path(path)
    rate, samples = _read_wav(path)
    if samples.ndim != 1:
        raise errors.NotMono(f"{path}: expected mono, found {samples.shape[1]} channels")
    if rate != expected_rate:
        raise errors.SampleRateMismatch(path, expected_rate, rate)
    if not np.isfinite(samples).all():
        raise errors.NonFiniteSample(path, int(np.flatnonzero(~np.isfinite(samples))[0]))
    return SourceSample(id=path.stem, samples=samples, sample_rate=rate)


@dataclass
class SourceSample:
    id: str
    samples: np.ndarray  # mono float32
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


# --- writing (fixture generation and round-trip checks) ---

def _toml_value(value) -> str:
    if isinstance(value, str):
        return json.dumps(value)  # valid TOML basic string
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite value in manifest")
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)} to TOML")


def write_arir_set(arirs: ArirSet, root: str | Path) -> Path:
    """Write a dataset in the documented layout; returns the manifest path.

    Reloading a written set yields sample-identical data (IRs are stored
    float32, exactly as held in memory).
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)

    lines = [
        f"room = {_toml_value(arirs.room)}",
        f"sample_rate = {arirs.config.sample_rate}",
        f"order = {arirs.config.order}",
        f"convention = {_toml_value(arirs.config.convention)}",
        "",
    ]
    for label in sorted(arirs.seats):
        seat = arirs.seats[label]
        lines += ["[[seats]]",
                  f"label = {_toml_value(label)}",
                  f"position = {_toml_value(list(seat.position))}",
                  ""]
    for src in arirs.sources:
        lines += ["[[sources]]",
                  f"position = {_toml_value(list(src.position))}",
                  ""]
    for cond in arirs.stored_conditions:
        lines += ["[[conditions]]",
                  f"id = {_toml_value(cond)}",
                  f"dir = {_toml_value(cond)}",
                  ""]
    manifest_path = root / "manifest.toml"
    manifest_path.write_text("\n".join(lines))

    for (cond, label, src_index), ir in arirs.rirs.items():
        cond_dir = root / cond
        cond_dir.mkdir(exist_ok=True)
        wavfile.write(cond_dir / f"{label}_src{src_index}.wav",
                      arirs.config.sample_rate, np.ascontiguousarray(ir.T, dtype=np.float32))
    return manifest_path


def write_source_sample(path: str | Path, samples: np.ndarray, rate: int):
    wavfile.write(Path(path), rate, np.asarray(samples, dtype=np.float32))
