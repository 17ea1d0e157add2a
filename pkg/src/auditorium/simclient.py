"""Headless control client: replays telemetry-format traces over UDP.

A trace is the same JSON Lines schema the telemetry writer produces, so any
recorded session replays directly against a live server. Pose events expand
to the two wire messages a tracked client sends per frame; everything else
maps 1:1 onto the control address space.
"""

import socket
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import errors
from .osc import encode_message
from .session import ATTRIBUTE_IDS
from .telemetry import read_events


def event_to_datagrams(event: dict) -> list[bytes]:
    kind = event.get("type")
    if kind == "pose":
        px, py, pz = (float(v) for v in event["position"])
        w, x, y, z = (float(v) for v in event["orientation"])
        return [encode_message("/head/position", (px, py, pz)),
                encode_message("/head/rotation", (w, x, y, z))]
    if kind == "teleport":
        return [encode_message("/seat", (str(event["to"]),))]
    if kind == "ui":
        ui = event.get("kind")
        payload = str(event.get("payload", ""))
        if ui == "play":
            return [encode_message("/ui/play", (payload,))]
        if ui == "stop":
            return [encode_message("/ui/stop")]
        if ui == "rating":
            try:
                attribute, label, value = payload.rsplit(":", 2)
                return [encode_message("/ui/rating",
                                       (attribute, label, int(value)))]
            except ValueError:
                raise errors.MalformedTrace(
                    f"rating payload must be attribute:label:value, got {payload!r}")
        if ui == "trial_advance":
            return [encode_message("/ui/trial/next")]
        if ui == "source_select":
            return [encode_message("/ui/source", (payload,))]
        if ui == "info":
            return [encode_message("/ui/info", (payload,))]
        raise errors.MalformedTrace(f"unknown ui kind {ui!r}")
    raise errors.MalformedTrace(f"unknown event type {kind!r}")


@dataclass
class ReplayReport:
    sent: int = 0
    events: int = 0
    duration_seconds: float = 0.0
    jitter_mean_ms: float = 0.0
    jitter_max_ms: float = 0.0
    deviations_ms: list = field(default_factory=list, repr=False)

    def summary(self) -> str:
        return (f"{self.sent} datagrams from {self.events} events in "
                f"{self.duration_seconds:.2f} s; timing jitter "
                f"mean {self.jitter_mean_ms:.2f} ms, max {self.jitter_max_ms:.2f} ms")


def replay(trace, host: str = "127.0.0.1", port: int = 9000,
           speed: float = 1.0, rate_hz: float | None = None) -> ReplayReport:
    """Send a trace's events to a control endpoint at their recorded pace.

    speed scales the recorded timeline (2.0 = twice as fast); rate_hz
    discards recorded timestamps and paces events at a fixed rate instead.
    """
    if isinstance(trace, (str, Path)):
        events = read_events(trace)
    else:
        events = list(trace)
    if speed <= 0:
        raise errors.OutOfRange(f"speed must be positive, got {speed}")
    last = None
    for e in events:
        t = e.get("t")
        if not isinstance(t, (int, float)):
            raise errors.MalformedTrace(f"event without timestamp: {e}")
        if last is not None and t < last:
            raise errors.MalformedTrace("trace timestamps go backwards")
        last = t
    plans = [(e["t"], event_to_datagrams(e)) for e in events]  # validate all first

    report = ReplayReport(events=len(events))
    if not plans:
        return report
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        sock.connect((host, port))  # surfaces unroutable targets early
    except OSError as exc:
        sock.close()
        raise errors.UnreachableTarget(f"{host}:{port}: {exc}") from None

    t0 = time.monotonic()
    base_ms = plans[0][0]
    try:
        for i, (t_ms, datagrams) in enumerate(plans):
            if rate_hz is not None:
                due = i / rate_hz
            else:
                due = (t_ms - base_ms) / 1000.0 / speed
            delay = t0 + due - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            actual = time.monotonic() - t0
            report.deviations_ms.append(abs(actual - due) * 1000.0)
            for dgram in datagrams:
                try:
                    sock.send(dgram)
                except OSError as exc:
                    raise errors.UnreachableTarget(
                        f"{host}:{port}: {exc}") from None
                report.sent += 1
    finally:
        sock.close()
    report.duration_seconds = time.monotonic() - t0
    report.jitter_mean_ms = sum(report.deviations_ms) / len(report.deviations_ms)
    report.jitter_max_ms = max(report.deviations_ms)
    return report


def script_session(seats, labels, n_trials: int, *, step_ms: int = 40,
                   poses_per_trial: int = 5, seed: int = 0) -> list[dict]:
    """Synthesize a complete assessor session as a telemetry-format trace.

    The script visits seats round-robin, plays every stimulus, rates all
    cells with deterministic values derived from the seed, and advances
    through every trial. Replaying it against a fresh server with the same
    label alphabet completes the whole session.
    """
    seats = list(seats)
    labels = sorted(labels)
    t = 0
    events: list[dict] = []

    def emit(type_, **fields):
        nonlocal t
        events.append({"type": type_, "t": t, **fields})
        t += step_ms

    def ui(kind, payload=""):
        emit("ui", kind=kind, payload=payload)

    def pose_burst(count):
        for k in range(count):
            emit("pose", position=[0.0, 0.0, 1.2],
                 orientation=[1.0, 0.0, 0.0, 0.0])

    # familiarization: look around, listen to the reference once
    prev = seats[0]
    emit("teleport", **{"from": None, "to": prev})
    pose_burst(poses_per_trial)
    ui("play", "ref")
    ui("stop")
    ui("trial_advance", "0")

    for trial in range(n_trials):
        seat = seats[(trial + 1) % len(seats)]
        emit("teleport", **{"from": prev, "to": seat})
        prev = seat
        pose_burst(poses_per_trial)
        for j, label in enumerate(labels):
            ui("play", label)
            for k, attribute in enumerate(ATTRIBUTE_IDS):
                value = (seed * 31 + trial * 17 + j * 7 + k * 3) % 101
                ui("rating", f"{attribute}:{label}:{value}")
        ui("stop")
        ui("trial_advance", str(trial + 1))
    return events
