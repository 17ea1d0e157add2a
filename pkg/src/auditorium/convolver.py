"""Uniform-partitioned overlap-save convolution.

The frequency-domain delay line (FDL) holds spectra of past *input*
blocks only, so it is independent of the kernel. Several kernels can be
rendered against one shared FDL in the same hop, which is what makes
seamless condition switches possible: after a swap the output is exactly
what it would have been had the signal always played through the new
kernel.

Math is done in float64/complex128. Per-hop work is one rfft over the
input channels, one batched complex matmul and one irfft, which for the
sizes used here runs far below the real-time budget.
"""

from __future__ import annotations

import math

import numpy as np

from . import errors

MIN_BLOCK = 8


def _as_kernel_array(ir) -> np.ndarray:
    """Normalize to (n_out, n_in, length) float64."""
    ir = np.asarray(ir, dtype=np.float64)
    if ir.ndim == 1:
        ir = ir[None, None, :]
    elif ir.ndim == 2:
        ir = ir[:, None, :]
    elif ir.ndim != 3:
        raise errors.DimensionMismatch(f"kernel must be 1-D, 2-D or 3-D, got {ir.ndim}-D")
    if ir.shape[-1] == 0 or not np.any(ir):
        raise errors.EmptyIr("kernel has no samples (or is all zero)")
    if not np.isfinite(ir).all():
        raise errors.EmptyIr("kernel contains non-finite samples")
    return ir


class PartitionedKernel:
    """Kernel spectra laid out for a single batched matmul per hop.

    ``spectra`` has shape (n_bins, n_out, n_partitions * n_in); the
    partition axis flattens as (partition, input channel), matching
    ``FdlState.fdl.reshape(n_bins, -1)``.
    """

    def __init__(self, ir, block_size: int = 512, n_partitions: int | None = None):
        if block_size < MIN_BLOCK:
            raise errors.InvalidBlockSize(f"block size must be >= {MIN_BLOCK}, got {block_size}")
        ir = _as_kernel_array(ir)
        self.n_out, self.n_in, self.ir_length = ir.shape
        self.block_size = int(block_size)

        needed = max(1, math.ceil(self.ir_length / block_size))
        if n_partitions is None:
            n_partitions = needed
        elif n_partitions < needed:
            raise errors.InvalidBlockSize(
                f"kernel needs {needed} partitions, {n_partitions} requested")
        self.n_partitions = int(n_partitions)

        padded = np.zeros((self.n_out, self.n_in, self.n_partitions * block_size))
        padded[:, :, :self.ir_length] = ir
        parts = padded.reshape(self.n_out, self.n_in, self.n_partitions, block_size)
        spec = np.fft.rfft(parts, n=2 * block_size, axis=3)  # (Co, Ci, NB, NF)
        # -> (NF, Co, NB, Ci) -> (NF, Co, NB*Ci)
        self.spectra = np.ascontiguousarray(
            spec.transpose(3, 0, 2, 1).reshape(spec.shape[3], self.n_out, -1))

    @property
    def n_bins(self) -> int:
        return self.block_size + 1


class FdlState:
    """Input-side state of the convolution: FDL plus the previous hop.

    ``push`` commits one hop of input; ``render`` is a pure read that can
    be called once per kernel. ``preview`` evaluates a padded partial hop
    without committing anything.
    """

    def __init__(self, n_in: int, block_size: int, n_partitions: int):
        if block_size < MIN_BLOCK:
            raise errors.InvalidBlockSize(f"block size must be >= {MIN_BLOCK}, got {block_size}")
        self.n_in = int(n_in)
        self.block_size = int(block_size)
        self.n_partitions = int(n_partitions)
        self.fdl = np.zeros((block_size + 1, n_partitions, n_in), dtype=np.complex128)
        self.prev = np.zeros((n_in, block_size))

    def _window_spectrum(self, hop: np.ndarray) -> np.ndarray:
        window = np.concatenate([self.prev, hop], axis=1)
        return np.fft.rfft(window, axis=1).T.copy()  # (NF, Ci)

    def _check(self, hop: np.ndarray):
        if hop.shape != (self.n_in, self.block_size):
            raise errors.DimensionMismatch(
                f"hop must be {(self.n_in, self.block_size)}, got {hop.shape}")

    def push(self, hop: np.ndarray):
        hop = np.asarray(hop, dtype=np.float64)
        self._check(hop)
        spec = self._window_spectrum(hop)
        self.fdl[:, 1:, :] = self.fdl[:, :-1, :]
        self.fdl[:, 0, :] = spec
        self.prev = hop.copy()

    def _mix(self, kernel: PartitionedKernel, fdl: np.ndarray) -> np.ndarray:
        if kernel.n_in != self.n_in or kernel.block_size != self.block_size \
                or kernel.n_partitions != self.n_partitions:
            raise errors.DimensionMismatch(
                "kernel layout does not match this FDL "
                f"(kernel {kernel.n_in}ch/{kernel.block_size}/{kernel.n_partitions}, "
                f"fdl {self.n_in}ch/{self.block_size}/{self.n_partitions})")
        y = kernel.spectra @ fdl.reshape(self.block_size + 1, -1, 1)
        out = np.fft.irfft(y[:, :, 0], n=2 * self.block_size, axis=0)
        return out[self.block_size:, :].T  # (Co, P), overlap-save keeps the back half

    def render(self, kernel: PartitionedKernel) -> np.ndarray:
        """Output hop for the committed input, through ``kernel``."""
        return self._mix(kernel, self.fdl)

    def preview(self, hop: np.ndarray, kernel: PartitionedKernel) -> np.ndarray:
        """Output hop as if ``hop`` were pushed; state is left untouched."""
        hop = np.asarray(hop, dtype=np.float64)
        self._check(hop)
        spec = self._window_spectrum(hop)
        shifted = np.concatenate([spec[:, None, :], self.fdl[:, :-1, :]], axis=1)
        return self._mix(kernel, shifted)


class Convolver:
    """Streaming convolver for arbitrary chunk sizes.

    Output chunk ``i`` has exactly the length of input chunk ``i``;
    partial hops are evaluated by zero-padded preview, which is exact for
    the samples emitted because later input cannot influence them.
    """

    def __init__(self, ir, block_size: int = 512):
        self.kernel = ir if isinstance(ir, PartitionedKernel) else \
            PartitionedKernel(ir, block_size)
        self.state = FdlState(self.kernel.n_in, self.kernel.block_size,
                              self.kernel.n_partitions)
        self._pending = np.zeros((self.kernel.n_in, 0))
        self._emitted = 0  # output samples of the pending hop already returned

    def process(self, chunk) -> np.ndarray:
        chunk = np.asarray(chunk, dtype=np.float64)
        mono = chunk.ndim == 1
        if mono:
            chunk = chunk[None, :]
        if chunk.shape[0] != self.kernel.n_in:
            raise errors.DimensionMismatch(
                f"expected {self.kernel.n_in} input channels, got {chunk.shape[0]}")

        p = self.kernel.block_size
        self._pending = np.concatenate([self._pending, chunk], axis=1)
        outs = []
        while self._pending.shape[1] >= p:
            self.state.push(self._pending[:, :p])
            outs.append(self.state.render(self.kernel)[:, self._emitted:])
            self._pending = self._pending[:, p:]
            self._emitted = 0
        q = self._pending.shape[1]
        if q > self._emitted:
            padded = np.zeros((self.kernel.n_in, p))
            padded[:, :q] = self._pending
            y = self.state.preview(padded, self.kernel)
            outs.append(y[:, self._emitted:q])
            self._emitted = q

        out = np.concatenate(outs, axis=1) if outs else np.zeros((self.kernel.n_out, 0))
        if mono and self.kernel.n_out == 1:
            return out[0]
        return out

    def flush(self, n: int | None = None) -> np.ndarray:
        """Drain ``n`` tail samples (default: the full kernel tail)."""
        if n is None:
            n = self.kernel.ir_length - 1
        zeros = np.zeros((self.kernel.n_in, n))
        return self.process(zeros if self.kernel.n_in > 1 else zeros[0])


def make_convolver(ir, block_size: int = 512) -> Convolver:
    """Streaming convolver for ``ir`` ((L,), (n_out, L) or (n_out, n_in, L))."""
    return Convolver(ir, block_size)
