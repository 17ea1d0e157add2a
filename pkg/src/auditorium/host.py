"""Render-thread host and audio sinks.

The render loop owns the engine: control changes arrive through a bounded
queue and are applied only at block boundaries, so the audio path never
waits on a lock. Head pose bypasses the queue through a latest-wins slot;
stale poses are worthless and must not back up behind other control
traffic. Queue overflow drops the control (counted), never the audio.
"""

import queue
import threading
import time

import numpy as np

from . import errors


class NullSink:
    """Bit bucket, optionally paced to wall clock so serve behaves like
    real hardware when no device is available."""

    def __init__(self, sample_rate: int, block_size: int, paced: bool = True):
        self.block_seconds = block_size / sample_rate
        self.paced = paced
        self._deadline = None

    def write(self, block: np.ndarray):
        if not self.paced:
            return
        now = time.monotonic()
        if self._deadline is None:
            self._deadline = now
        self._deadline += self.block_seconds  # absolute schedule, no drift
        delay = self._deadline - now
        if delay > 0:
            time.sleep(delay)

    def close(self):
        pass


class WavSink:
    """Capture sink: accumulates blocks, writes one stereo WAV on close."""

    def __init__(self, path, sample_rate: int):
        self.path = path
        self.sample_rate = sample_rate
        self._blocks = []

    def write(self, block: np.ndarray):
        self._blocks.append(np.array(block, dtype=np.float32))

    def close(self):
        from scipy.io import wavfile

        data = (np.concatenate(self._blocks, axis=1).T if self._blocks
                else np.zeros((0, 2), dtype=np.float32))
        wavfile.write(self.path, self.sample_rate, data)


class DeviceSink:
    """Blocking writes to a hardware device via the optional sounddevice
    backend; import stays lazy so the null path needs no audio stack."""

    def __init__(self, device, sample_rate: int, block_size: int):
        try:
            import sounddevice as sd
        except ImportError as exc:
            raise errors.AudioUnavailable(
                "sounddevice is not installed; install the [audio] extra "
                "or use device 'null'") from exc
        try:
            self._stream = sd.OutputStream(
                samplerate=sample_rate, blocksize=block_size, channels=2,
                dtype="float32", device=None if device == "default" else device)
            self._stream.start()
        except Exception as exc:
            raise errors.AudioUnavailable(f"cannot open device {device!r}: {exc}") from exc

    def write(self, block: np.ndarray):
        self._stream.write(np.ascontiguousarray(block.T, dtype=np.float32))

    def close(self):
        self._stream.stop()
        self._stream.close()


def open_sink(device: str, sample_rate: int, block_size: int):
    if device == "null":
        return NullSink(sample_rate, block_size)
    return DeviceSink(device, sample_rate, block_size)


class AudioHost:
    def __init__(self, engine, sink, queue_size: int = 256):
        self.engine = engine
        self.sink = sink
        self._inbox: queue.Queue = queue.Queue(maxsize=queue_size)
        self._pose = None            # latest-wins (orientation, position)
        self._pose_seen = None
        self._stop = threading.Event()
        self._thread = None
        self.blocks = 0
        self.dropped_controls = 0
        self.control_errors = 0
        self.last_error: str | None = None
        self._busy_seconds = 0.0
        self._peak_seconds = 0.0

    # -- control side -----------------------------------------------------

    def submit(self, fn) -> bool:
        """Queue a control op fn(engine) for the next block boundary."""
        try:
            self._inbox.put_nowait(fn)
            return True
        except queue.Full:
            self.dropped_controls += 1
            return False

    def set_pose(self, orientation, position=None):
        self._pose = (orientation, position)  # single assignment: atomic

    # -- render side --------------------------------------------------------

    def _apply_controls(self):
        pose = self._pose
        if pose is not None and pose is not self._pose_seen:
            self._pose_seen = pose
            self.engine.set_orientation(pose[0])
        while True:
            try:
                fn = self._inbox.get_nowait()
            except queue.Empty:
                return
            try:
                fn(self.engine)
            except Exception as exc:  # control bugs must not stop audio
                self.control_errors += 1
                self.last_error = f"{type(exc).__name__}: {exc}"

    def _run(self):
        while not self._stop.is_set():
            t0 = time.perf_counter()
            self._apply_controls()
            block = self.engine.render_block()
            busy = time.perf_counter() - t0
            self._busy_seconds += busy
            self._peak_seconds = max(self._peak_seconds, busy)
            self.blocks += 1
            self.sink.write(block)

    def start(self):
        if self._thread is not None:
            return self
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="audio-render",
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self):
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join()
        self._thread = None
        self.sink.close()

    def stats(self) -> dict:
        return {
            "blocks": self.blocks,
            "dropped_controls": self.dropped_controls,
            "control_errors": self.control_errors,
            "last_error": self.last_error,
            "mean_block_seconds": self._busy_seconds / self.blocks if self.blocks else 0.0,
            "peak_block_seconds": self._peak_seconds,
        }
