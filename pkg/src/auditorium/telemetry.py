"""Behavioral telemetry: pose stream, teleports, UI events.

Events are dicts with a ``type`` field, persisted as JSON Lines. Three
types exist:

    {"type": "pose", "t": ms, "position": [x, y, z],
     "orientation": [w, x, y, z]}
    {"type": "teleport", "t": ms, "from": "A1" | null, "to": "B3"}
    {"type": "ui", "t": ms, "kind": "play", "payload": "A"}

``t`` is milliseconds since session start. Timestamps are clamped to be
non-decreasing at record time (a warning counter tracks how often), so
a stored log is always ordered. Dwell analysis treats the gap between
consecutive teleports as time spent at the departed seat; teleporting a
seat onto itself is legal and counts as a visit.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from pathlib import Path

from . import errors

UI_KINDS = ("play", "stop", "rating", "info", "trial_advance", "source_select")


class TelemetryLog:
    """In-memory event recorder with monotone-clamped timestamps."""

    def __init__(self, sink=None):
        self.events: list[dict] = []
        self.clamp_warnings = 0
        self._last_t = 0
        self._sink = sink  # optional callable, e.g. TelemetryWriter.submit

    def _stamp(self, t_ms) -> int:
        t = int(t_ms)
        if t < self._last_t:
            t = self._last_t
            self.clamp_warnings += 1
        self._last_t = t
        return t

    def _emit(self, event: dict):
        self.events.append(event)
        if self._sink is not None:
            self._sink(event)

    def record_pose(self, t_ms, position, orientation):
        self._emit({
            "type": "pose",
            "t": self._stamp(t_ms),
            "position": [float(v) for v in position],
            "orientation": [float(v) for v in orientation],
        })

    def record_teleport(self, t_ms, from_seat: str | None, to_seat: str):
        self._emit({"type": "teleport", "t": self._stamp(t_ms),
                    "from": from_seat, "to": to_seat})

    def record_ui(self, t_ms, kind: str, payload: str = ""):
        if kind not in UI_KINDS:
            raise errors.KeyNotFound(f"unknown ui event kind {kind!r}")
        self._emit({"type": "ui", "t": self._stamp(t_ms), "kind": kind,
                    "payload": str(payload)})


class TelemetryWriter:
    """Threaded JSONL appender with a bounded queue and periodic flushes.

    ``submit`` never blocks: when the queue is full the event is counted
    as dropped and the caller moves on. Audio and control paths must not
    stall on disk.
    """

    def __init__(self, path: str | Path, flush_interval: float = 0.25,
                 max_queue: int = 8192):
        self.path = Path(path)
        self.flush_interval = flush_interval
        self.dropped = 0
        self._q: queue.Queue = queue.Queue(maxsize=max_queue)
        self._thread: threading.Thread | None = None
        self._fh = None

    def start(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self._fh = open(self.path, "a", buffering=1024 * 64)
        except OSError as exc:
            raise errors.PersistFailure(f"cannot open {self.path}: {exc}") from None
        self._thread = threading.Thread(target=self._run, name="telemetry-writer",
                                        daemon=True)
        self._thread.start()
        return self

    def submit(self, event: dict) -> bool:
        try:
            self._q.put_nowait(event)
            return True
        except queue.Full:
            self.dropped += 1
            return False

    def _run(self):
        last_flush = time.monotonic()
        while True:
            try:
                item = self._q.get(timeout=self.flush_interval)
            except queue.Empty:
                item = False  # timeout: flush check only
            if item is None:  # close sentinel
                break
            if item is not False:
                self._fh.write(json.dumps(item) + "\n")
            now = time.monotonic()
            if now - last_flush >= self.flush_interval:
                self._fh.flush()
                last_flush = now
        while True:  # drain whatever arrived before the sentinel
            try:
                item = self._q.get_nowait()
            except queue.Empty:
                break
            if item is not None:
                self._fh.write(json.dumps(item) + "\n")
        self._fh.flush()
        self._fh.close()

    def close(self):
        if self._thread is None:
            return
        self._q.put(None)  # blocking put: the sentinel must get through
        self._thread.join(timeout=5.0)
        self._thread = None


def write_events(path: str | Path, events) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for event in events:
            fh.write(json.dumps(event) + "\n")
    return path


def read_events(path: str | Path) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise errors.MalformedTrace(f"cannot read {path}: {exc}") from None
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError as exc:
            raise errors.MalformedTrace(f"{path}:{lineno}: {exc}") from None
        if not isinstance(event, dict) or not isinstance(event.get("type"), str) \
                or not isinstance(event.get("t"), (int, float)):
            raise errors.MalformedTrace(f"{path}:{lineno}: not a telemetry event: {line!r}")
        out.append(event)
    return out


def _check_ordered(events):
    last = None
    for event in events:
        if last is not None and event["t"] < last:
            raise errors.UnorderedInput(
                f"event at t={event['t']} after t={last}; clamp or sort the log first")
        last = event["t"]


def compute_dwell(events, end_ms: int | None = None) -> dict[str, float]:
    """Milliseconds spent at each seat, keyed by seat label.

    The interval between consecutive teleports is credited to the seat
    being left; the final seat gets the remainder until ``end_ms``
    (default: the last event timestamp). The values always sum to
    ``end_ms`` minus the first teleport time.
    """
    _check_ordered(events)
    teleports = [e for e in events if e["type"] == "teleport"]
    if not teleports:
        return {}
    if end_ms is None:
        end_ms = events[-1]["t"]
    if end_ms < teleports[-1]["t"]:
        raise errors.OutOfRange(
            f"end_ms {end_ms} precedes the last teleport at {teleports[-1]['t']}")
    dwell: dict[str, float] = {}
    for here, after in zip(teleports, teleports[1:]):
        dwell[here["to"]] = dwell.get(here["to"], 0.0) + (after["t"] - here["t"])
    last = teleports[-1]
    dwell[last["to"]] = dwell.get(last["to"], 0.0) + (end_ms - last["t"])
    return dwell


def count_visits(events) -> dict[str, int]:
    """Teleport arrivals per seat; self-teleports count as a new visit."""
    _check_ordered(events)
    visits: dict[str, int] = {}
    for event in events:
        if event["type"] == "teleport":
            visits[event["to"]] = visits.get(event["to"], 0) + 1
    return visits
