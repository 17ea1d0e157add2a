"""Synthetic demo datasets.

Real measurement sets are large; tests, the demo CLI paths and the web UI
integration run against a small generated room instead. IRs are decaying
noise with a direct-path impulse, degraded conditions lose high-order
spatial detail, so conditions are numerically distinct but well behaved.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .arir import (AmbisonicConfig, ArirSet, SeatId, SourceId, REFERENCE,
                   NON_PARAMETRIC, PARAMETRIC, write_arir_set, write_source_sample)


@dataclass
class DemoPaths:
    root: Path
    manifest: Path
    samples: list[Path]


def make_demo_arirs(*, seat_labels=("A1", "B2", "C3"), n_sources: int = 2,
                    ir_seconds: float = 0.25, sample_rate: int = 48000,
                    conditions=(REFERENCE, NON_PARAMETRIC, PARAMETRIC),
                    seed: int = 2024) -> ArirSet:
    rng = np.random.default_rng(seed)
    config = AmbisonicConfig(order=2, convention="ACN/SN3D", sample_rate=sample_rate)
    n = max(int(ir_seconds * sample_rate), 32)

    seats = {}
    for label in seat_labels:
        row, col = SeatId.parse_label(label)
        seats[label] = SeatId(row, col, (row * 1.0, col * 1.0, 1.2))
    sources = [SourceId(k, (-3.0, 1.5 * k, 1.7)) for k in range(n_sources)]

    decay = np.exp(-np.arange(n) / (0.08 * sample_rate))
    rirs = {}
    for label in seats:
        for src in sources:
            ir = rng.standard_normal((config.channel_count, n)) * decay * 0.05
            ir[0, 0] += 0.9  # direct path on the omni channel
            ir = ir.astype(np.float32)
            for cond in conditions:
                if cond == REFERENCE:
                    rirs[(cond, label, src.index)] = ir
                else:
                    # Degradations: drop second-order detail, perturb the rest.
                    deg = ir.copy()
                    deg[4:, :] *= 0.2 if cond == NON_PARAMETRIC else 0.0
                    deg[1:4, :] *= 0.8
                    deg += rng.standard_normal(deg.shape).astype(np.float32) * decay * 0.002
                    rirs[(cond, label, src.index)] = deg.astype(np.float32)

    return ArirSet(config=config, room="demo room", seats=seats, sources=sources,
                   stored_conditions=list(conditions), rirs=rirs)


def make_demo_sample(duration: float, sample_rate: int, seed: int = 7) -> np.ndarray:
    """Mono test signal: a few partials over band-limited noise, unit headroom."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * sample_rate)) / sample_rate
    sig = np.zeros_like(t)
    for freq, amp in ((220.0, 0.30), (495.0, 0.18), (1210.0, 0.10)):
        sig += amp * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    # one-pole low pass keeps the noise from dominating the top octaves
    pole = 0.95
    noise = lfilter([1 - pole], [1, -pole], rng.standard_normal(len(t)))
    sig += 0.1 * noise
    sig *= 0.5 / np.max(np.abs(sig))
    return sig.astype(np.float32)


def build_demo_dataset(root: str | Path, *, seat_labels=("A1", "B2", "C3"),
                       n_sources: int = 2, ir_seconds: float = 0.25,
                       sample_rate: int = 48000, sample_seconds: float = 2.0,
                       seed: int = 2024) -> DemoPaths:
    """Write a complete playable dataset under ``root``; returns its paths."""
    root = Path(root)
    arirs = make_demo_arirs(seat_labels=seat_labels, n_sources=n_sources,
                            ir_seconds=ir_seconds, sample_rate=sample_rate, seed=seed)
    manifest = write_arir_set(arirs, root)

    samples_dir = root / "samples"
    samples_dir.mkdir(exist_ok=True)
    paths = []
    for k in range(n_sources):
        path = samples_dir / f"sample{k}.wav"
        write_source_sample(path, make_demo_sample(sample_seconds, sample_rate, seed=seed + k),
                            sample_rate)
        paths.append(path)
    return DemoPaths(root=root, manifest=manifest, samples=paths)
