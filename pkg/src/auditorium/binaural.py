"""Binaural decoding and the low-pass anchor filter.

A decoder is a bank of FIR filters, one pair per SH channel, stored as a
WAV whose columns interleave ears per ACN channel: acn0_L, acn0_R,
acn1_L, acn1_R, ... Decoding is plain multichannel convolution, so it
shares the streaming convolver and stays continuous across condition
switches.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import butter, sosfilt, sosfilt_zi

from . import errors
from .convolver import Convolver

# per-order beam weights for the fallback decoder, roughly max-rE at order 2
_FALLBACK_ORDER_GAINS = (1.0, 0.775, 0.4)
_CROSSFEED_DELAY = 7
_CROSSFEED_GAIN = 0.15


class BinauralDecoder:
    """Streaming SH-to-ears decoder; ``filters`` is (2, n_channels, taps)."""

    def __init__(self, filters: np.ndarray, sample_rate: int):
        filters = np.asarray(filters, dtype=np.float64)
        if filters.ndim != 3 or filters.shape[0] != 2:
            raise errors.ChannelCountMismatch("decoder", "(2, channels, taps)", filters.shape)
        n_ch = filters.shape[1]
        if int(math.isqrt(n_ch)) ** 2 != n_ch:
            raise errors.ChannelCountMismatch("decoder", "a square number of SH channels", n_ch)
        self.filters = filters
        self.sample_rate = int(sample_rate)
        self._conv: Convolver | None = None

    @property
    def n_channels(self) -> int:
        return self.filters.shape[1]

    @property
    def taps(self) -> int:
        return self.filters.shape[2]

    def reset(self, block_size: int = 512):
        self._conv = Convolver(self.filters, block_size)

    def process(self, block: np.ndarray) -> np.ndarray:
        """Decode one (n_channels, n) SH block to (2, n) ears."""
        if self._conv is None:
            self.reset(max(block.shape[1] if block.ndim == 2 else 0, 8))
        return self._conv.process(block)


def save_decoder(path: str | Path, decoder: BinauralDecoder):
    interleaved = np.empty((decoder.taps, 2 * decoder.n_channels), dtype=np.float32)
    for ch in range(decoder.n_channels):
        interleaved[:, 2 * ch] = decoder.filters[0, ch]
        interleaved[:, 2 * ch + 1] = decoder.filters[1, ch]
    wavfile.write(Path(path), decoder.sample_rate, interleaved)


def load_decoder(path: str | Path, expected_rate: int | None = None,
                 n_channels: int | None = None) -> BinauralDecoder:
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError, OSError) as exc:
        raise errors.UnreadableFile(f"{path}: {exc}") from None
    if expected_rate is not None and rate != expected_rate:
        raise errors.SampleRateMismatch(path, expected_rate, rate)
    if data.ndim != 2 or data.shape[1] % 2:
        raise errors.ChannelCountMismatch(path, "an even channel count", getattr(
            data, "shape", ("?",))[-1])
    found = data.shape[1] // 2
    if n_channels is not None and found != n_channels:
        raise errors.ChannelCountMismatch(path, 2 * n_channels, data.shape[1])
    if not np.issubdtype(data.dtype, np.floating):
        info = np.iinfo(data.dtype)
        data = data.astype(np.float64) / float(max(abs(info.min), info.max))
    filters = np.empty((2, found, data.shape[0]))
    for ch in range(found):
        filters[0, ch] = data[:, 2 * ch]
        filters[1, ch] = data[:, 2 * ch + 1]
    return BinauralDecoder(filters, rate)


def default_decoder(sample_rate: int, order: int = 2, taps: int = 24) -> BinauralDecoder:
    """Fallback decoder: virtual beams toward each ear plus a crossfeed echo.

    Not a measured HRTF set. It exists so demos and tests can run without
    shipping one; output is stable, left/right symmetric and engages all
    SH orders through the beam weights.
    """
    n_ch = (order + 1) ** 2
    rows = np.zeros((2, n_ch))
    for ear, sign in ((0, 1.0), (1, -1.0)):  # left ear looks toward +y
        d = (0.0, sign, 0.0)
        basis = _sh_basis_2(d)[:n_ch]
        for l in range(order + 1):
            g = _FALLBACK_ORDER_GAINS[min(l, len(_FALLBACK_ORDER_GAINS) - 1)]
            rows[ear, l * l:(l + 1) * (l + 1)] = g * basis[l * l:(l + 1) * (l + 1)]
    rows *= 0.5  # headroom: omni gain 0.5 per ear

    filters = np.zeros((2, n_ch, taps))
    filters[:, :, 0] = rows
    filters[0, :, _CROSSFEED_DELAY] = _CROSSFEED_GAIN * rows[1]
    filters[1, :, _CROSSFEED_DELAY] = _CROSSFEED_GAIN * rows[0]
    return BinauralDecoder(filters, sample_rate)


def _sh_basis_2(d):
    x, y, z = d
    s3 = math.sqrt(3.0)
    return np.array([
        1.0, y, z, x,
        s3 * x * y, s3 * y * z, (3 * z * z - 1) / 2, s3 * x * z, (s3 / 2) * (x * x - y * y),
    ])


def design_anchor_filter(sample_rate: int, cutoff: float = 3500.0) -> np.ndarray:
    """Fourth-order Butterworth low pass as second-order sections."""
    if not 0 < cutoff < sample_rate / 2:
        raise errors.CutoffOutOfRange(
            f"cutoff must lie in (0, {sample_rate / 2}), got {cutoff}")
    return butter(4, cutoff, btype="low", fs=sample_rate, output="sos")


class AnchorFilter:
    """Stateful stereo low pass; runs continuously so toggling is click-free."""

    def __init__(self, sample_rate: int, cutoff: float = 3500.0, n_channels: int = 2):
        self.sos = design_anchor_filter(sample_rate, cutoff)
        self.cutoff = float(cutoff)
        zi = sosfilt_zi(self.sos) * 0.0
        self._zi = np.repeat(zi[:, None, :], n_channels, axis=1)

    def process(self, block: np.ndarray) -> np.ndarray:
        """Filter (n_channels, n); state carries over between calls."""
        out, self._zi = sosfilt(self.sos, block, axis=1, zi=self._zi)
        return out

    def reset(self):
        self._zi[:] = 0.0
