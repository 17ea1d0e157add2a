"""Block-based render engine.

One engine owns the signal chain for a listener: looped anechoic
sources -> shared frequency-domain delay line -> per-condition ARIR
kernels -> SH rotation for the current head orientation -> binaural
decode -> optional anchor low pass.

Condition and seat switches swap kernels on the shared FDL under a
50 ms equal-power crossfade; the playhead and the delay line are never
reset, so after the fade the output is exactly what it would have been
had the new kernel been active all along. Switches that resolve to the
same stored data (reference vs. hidden reference) are no-ops on the
audio path, which keeps those two conditions sample-identical at all
times.

The engine is single-threaded and purely pull-based: callers invoke
``render_block()`` and apply control changes between blocks. Thread
plumbing lives in ``host``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .arir import ArirSet, LOWPASS_ANCHOR, resolve_condition
from .binaural import AnchorFilter, BinauralDecoder
from .convolver import FdlState, PartitionedKernel
from .rotation import Orientation, sh_rotation_matrix

DEFAULT_BLOCK = 512
CROSSFADE_SECONDS = 0.05
MAX_VOICES = 4
KERNEL_CACHE_SIZE = 16


@dataclass
class EngineConfig:
    block_size: int = DEFAULT_BLOCK
    crossfade_seconds: float = CROSSFADE_SECONDS
    anchor_cutoff: float = 3500.0
    kernel_cache_size: int = KERNEL_CACHE_SIZE


@dataclass
class _Voice:
    kernel: PartitionedKernel
    mode: str = "hold"        # hold | in | out
    pos: int = 0
    length: int = 1
    start_gain: float = 1.0   # out fades start from the interrupted value

    def gains(self, n: int) -> np.ndarray | None:
        """Per-sample gains for the next ``n`` samples; None means unity."""
        if self.mode == "hold":
            return None
        phase = np.clip((self.pos + np.arange(n) + 0.5) / self.length, 0.0, 1.0) * (math.pi / 2)
        self.pos += n
        if self.mode == "in":
            g = np.sin(phase)
            if self.pos >= self.length:
                self.mode = "hold"
            return g
        return self.start_gain * np.cos(phase)

    @property
    def current_gain(self) -> float:
        if self.mode == "hold":
            return 1.0
        phase = min(self.pos / self.length, 1.0) * (math.pi / 2)
        return math.sin(phase) if self.mode == "in" else self.start_gain * math.cos(phase)

    @property
    def dead(self) -> bool:
        return self.mode == "out" and self.pos >= self.length


class Engine:
    def __init__(self, arirs: ArirSet, samples, decoder: BinauralDecoder | None,
                 config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.arirs = arirs
        if decoder is None:
            raise errors.MissingDecoder("a binaural decoder is required")
        if decoder.n_channels != arirs.config.channel_count:
            raise errors.ChannelCountMismatch(
                "decoder", arirs.config.channel_count, decoder.n_channels)
        self.decoder = decoder
        self.decoder.reset(self.config.block_size)

        self.samples: list[np.ndarray] = []
        self.set_samples(samples)

        p = self.config.block_size
        self._n_partitions = max(1, math.ceil(arirs.max_ir_length() / p))
        self._fdl = FdlState(len(self.samples), p, self._n_partitions)
        self._kernels: dict[tuple[str, str], PartitionedKernel] = {}

        self.sample_rate = arirs.config.sample_rate
        self.fade_samples = max(1, round(self.config.crossfade_seconds * self.sample_rate))
        self.seat = min(arirs.seats)
        self.condition = "reference"
        self.playing = False
        self.playhead = 0
        self.active_sources = set(range(len(self.samples)))

        self._orientation = Orientation.identity()
        self._rot = np.eye(arirs.config.channel_count)
        self._rot_dirty = False

        self._anchor = AnchorFilter(self.sample_rate, self.config.anchor_cutoff)
        self._anchor_target = 0.0           # wet mix the fade is heading to
        self._anchor_pos = self.fade_samples  # sample position inside the fade

        self._voices = [_Voice(self._kernel_for(self.condition, self.seat))]

    # -- kernels --------------------------------------------------------

    def _kernel_for(self, condition: str, seat: str) -> PartitionedKernel:
        key = (resolve_condition(condition), seat)
        if key not in self._kernels:
            if len(self._kernels) >= self.config.kernel_cache_size:
                self._kernels.pop(next(iter(self._kernels)))
            irs = [self.arirs.get(key[0], seat, src.index) for src in self.arirs.sources]
            length = max(ir.shape[1] for ir in irs)
            tensor = np.zeros((self.arirs.config.channel_count, len(irs), length))
            for ci, ir in enumerate(irs):
                tensor[:, ci, :ir.shape[1]] = ir
            self._kernels[key] = PartitionedKernel(tensor, self.config.block_size,
                                                   n_partitions=self._n_partitions)
        else:
            self._kernels[key] = self._kernels.pop(key)  # refresh LRU order
        return self._kernels[key]

    # -- control --------------------------------------------------------

    def set_orientation(self, orientation: Orientation):
        self._orientation = orientation.normalized()
        self._rot_dirty = True

    @property
    def orientation(self) -> Orientation:
        return self._orientation

    def set_seat(self, label: str):
        if label not in self.arirs.seats:
            raise errors.UnknownSeat(
                f"{label!r}; dataset seats: {', '.join(sorted(self.arirs.seats))}")
        if label != self.seat:
            self.seat = label
            self._swap_kernel()

    def set_condition(self, condition: str):
        if condition not in self.arirs.conditions:
            raise errors.UnknownCondition(
                f"{condition!r}; available: {', '.join(self.arirs.conditions)}")
        if condition == self.condition:
            return
        old_key = (resolve_condition(self.condition), self.seat)
        self.condition = condition
        if (resolve_condition(condition), self.seat) != old_key:
            self._swap_kernel()
        self._set_anchor(condition == LOWPASS_ANCHOR)

    def _swap_kernel(self):
        kernel = self._kernel_for(self.condition, self.seat)
        if not self.playing:
            self._voices = [_Voice(kernel)]
            return
        if len(self._voices) == 1 and self._voices[0].mode == "hold" \
                and self._voices[0].kernel is kernel:
            return
        for v in self._voices:
            v.start_gain = v.current_gain
            v.mode, v.pos, v.length = "out", 0, self.fade_samples
        self._voices.append(_Voice(kernel, "in", 0, self.fade_samples))
        if len(self._voices) > MAX_VOICES:
            fading = sorted((v for v in self._voices[:-1]), key=lambda v: v.current_gain)
            self._voices.remove(fading[0])

    def _set_anchor(self, on: bool):
        target = 1.0 if on else 0.0
        if target == self._anchor_target:
            return
        self._anchor_target = target
        self._anchor_pos = 0 if self.playing else self.fade_samples

    def play(self, condition: str | None = None):
        """Start (or keep) playing, optionally switching condition first.

        While stopped the switch is instant; while playing it crossfades.
        """
        if condition is not None:
            self.set_condition(condition)
        self.playing = True

    def stop(self):
        """Hard stop: output drops to silence, all state freezes in place."""
        self.playing = False
        # collapse any unfinished fade; resume plays the newest target cleanly
        self._voices = [_Voice(self._voices[-1].kernel)]
        self._anchor_pos = self.fade_samples

    def set_samples(self, samples):
        """Swap program material (one sample per source); rewinds the playhead.

        Used between trials. The delay line is left alone: old source
        history rings out through the current kernel, so no click.
        """
        arrays = [np.asarray(s.samples if hasattr(s, "samples") else s, dtype=np.float64)
                  for s in samples]
        if len(arrays) != len(self.arirs.sources):
            raise errors.DimensionMismatch(
                f"dataset has {len(self.arirs.sources)} sources, got {len(arrays)} samples")
        want = self.arirs.config.sample_rate
        for s in samples:
            rate = getattr(s, "sample_rate", want)
            if rate != want:
                raise errors.SampleRateMismatch("source sample", want, rate)
        for a in arrays:
            if a.ndim != 1 or not len(a):
                raise errors.DimensionMismatch("source samples must be non-empty mono")
        self.samples = arrays
        self.playhead = 0

    def set_active_sources(self, indices):
        idx = set(int(i) for i in indices)
        bad = idx - set(range(len(self.samples)))
        if bad:
            raise errors.KeyNotFound(f"no such sources: {sorted(bad)}")
        self.active_sources = idx

    def status(self) -> dict:
        return {
            "seat": self.seat,
            "condition": self.condition,
            "playing": self.playing,
            "sample_rate": self.sample_rate,
            "block_size": self.config.block_size,
            "sources": sorted(self.active_sources),
        }

    # -- audio ----------------------------------------------------------

    @property
    def block_duration(self) -> float:
        return self.config.block_size / self.sample_rate

    def _source_hops(self) -> np.ndarray:
        p = self.config.block_size
        hops = np.zeros((len(self.samples), p))
        for k, s in enumerate(self.samples):
            if k in self.active_sources and len(s):
                idx = (self.playhead + np.arange(p)) % len(s)
                hops[k] = s[idx]
        self.playhead += p
        return hops

    def render_block(self) -> np.ndarray:
        """Next (2, block_size) stereo block; silence while stopped."""
        p = self.config.block_size
        if not self.playing:
            return np.zeros((2, p))

        self._fdl.push(self._source_hops())

        amb = None
        for voice in self._voices:
            part = self._fdl.render(voice.kernel)
            g = voice.gains(p)
            contrib = part if g is None else part * g
            amb = contrib if amb is None else amb + contrib
        self._voices = [v for v in self._voices if not v.dead]

        if self._rot_dirty:
            self._rot = sh_rotation_matrix(self._orientation.inverse(),
                                           self.arirs.config.order)
            self._rot_dirty = False
        ears = self.decoder.process(self._rot @ amb)

        wet = self._anchor.process(ears)      # filter always runs: state stays warm
        if self._anchor_pos >= self.fade_samples:
            return wet if self._anchor_target >= 1.0 else ears
        phase = np.clip((self._anchor_pos + np.arange(p) + 0.5) / self.fade_samples,
                        0.0, 1.0) * (math.pi / 2)
        self._anchor_pos += p
        if self._anchor_target >= 1.0:
            return ears * np.cos(phase) + wet * np.sin(phase)
        return ears * np.sin(phase) + wet * np.cos(phase)


def render_offline(engine: Engine, seconds: float, events=()) -> np.ndarray:
    """Render ``seconds`` of output; ``events`` is [(sample_pos, fn)] applied
    at the block boundary at or before each position."""
    n_total = round(seconds * engine.sample_rate)
    out = np.zeros((2, n_total))
    queue = sorted(events, key=lambda e: e[0])
    qi, pos = 0, 0
    while pos < n_total:
        while qi < len(queue) and queue[qi][0] <= pos:
            queue[qi][1](engine)
            qi += 1
        block = engine.render_block()
        take = min(engine.config.block_size, n_total - pos)
        out[:, pos:pos + take] = block[:, :take]
        pos += take
    return out
