"""Trace replay: wire mapping, pacing, end-to-end session completion."""

import socket
import time

import pytest

from auditorium import errors
from auditorium.config import ServerConfig
from auditorium.fixtures import build_demo_dataset
from auditorium.host import NullSink
from auditorium.osc import decode
from auditorium.server import EvaluationServer
from auditorium.simclient import (ReplayReport, event_to_datagrams, replay,
                                  script_session)
from auditorium.telemetry import write_events

RATE = 8000


def test_event_wire_mapping():
    pose = {"type": "pose", "t": 0, "position": [1.0, 2.0, 3.0],
            "orientation": [1.0, 0.0, 0.0, 0.0]}
    dgrams = event_to_datagrams(pose)
    assert len(dgrams) == 2  # position and rotation travel separately
    (pos_msg,), (rot_msg,) = decode(dgrams[0]), decode(dgrams[1])
    assert pos_msg.address == "/head/position" and pos_msg.args == (1.0, 2.0, 3.0)
    assert rot_msg.address == "/head/rotation" and len(rot_msg.args) == 4

    (seat,) = decode(event_to_datagrams(
        {"type": "teleport", "t": 0, "from": None, "to": "B2"})[0])
    assert seat.address == "/seat" and seat.args == ("B2",)

    (rating,) = decode(event_to_datagrams(
        {"type": "ui", "t": 0, "kind": "rating",
         "payload": "timbral_quality:A:64"})[0])
    assert rating.args == ("timbral_quality", "A", 64)

    (advance,) = decode(event_to_datagrams(
        {"type": "ui", "t": 0, "kind": "trial_advance", "payload": "1"})[0])
    assert advance.address == "/ui/trial/next" and advance.args == ()

    for bad in ({"type": "mystery", "t": 0},
                {"type": "ui", "t": 0, "kind": "rating", "payload": "nope"},
                {"type": "ui", "t": 0, "kind": "warp", "payload": ""}):
        with pytest.raises(errors.MalformedTrace):
            event_to_datagrams(bad)


def test_replay_empty_and_error_cases(tmp_path):
    report = replay([], port=1)
    assert isinstance(report, ReplayReport)
    assert report.sent == 0 and report.events == 0

    with pytest.raises(errors.MalformedTrace):
        replay([{"type": "ui", "t": 100, "kind": "stop", "payload": ""},
                {"type": "ui", "t": 50, "kind": "stop", "payload": ""}], port=1)
    with pytest.raises(errors.MalformedTrace):
        replay([{"type": "ui", "kind": "stop", "payload": ""}], port=1)
    with pytest.raises(errors.OutOfRange):
        replay([{"type": "ui", "t": 0, "kind": "stop", "payload": ""}],
               port=1, speed=0)


def test_replay_paces_and_counts():
    sink = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sink.bind(("127.0.0.1", 0))
    sink.settimeout(2.0)
    port = sink.getsockname()[1]

    events = [{"type": "pose", "t": 100 * k, "position": [0, 0, 0],
               "orientation": [1, 0, 0, 0]} for k in range(5)]
    t0 = time.monotonic()
    report = replay(events, port=port, speed=2.0)
    elapsed = time.monotonic() - t0
    assert report.sent == 10 and report.events == 5
    # 400 ms of trace at double speed: at least the scaled duration
    assert 0.2 <= elapsed < 2.0
    assert report.jitter_max_ms < 500.0
    got = 0
    while got < 10:
        sink.recvfrom(65536)
        got += 1
    sink.close()


def test_replay_fixed_rate_overrides_trace_times():
    sink = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sink.bind(("127.0.0.1", 0))
    port = sink.getsockname()[1]
    # recorded over 10 s, replayed in ~30 ms at 100 Hz
    events = [{"type": "ui", "t": 5000 * k, "kind": "stop", "payload": ""}
              for k in range(4)]
    t0 = time.monotonic()
    report = replay(events, port=port, rate_hz=100.0)
    assert time.monotonic() - t0 < 1.0
    assert report.sent == 4
    sink.close()


def test_scripted_session_completes_server(tmp_path):
    paths = build_demo_dataset(tmp_path / "data", ir_seconds=0.05,
                               sample_seconds=0.3, sample_rate=RATE)
    cfg = ServerConfig(
        manifest=paths.manifest, samples=tuple(paths.samples),
        osc_port=0, notify_port=19293, ws_port=0,
        assessor="sim", n_trials=2, seed=9,
        out_dir=tmp_path / "out",
    )
    server = EvaluationServer(
        cfg, sink=NullSink(RATE, cfg.block_size, paced=False)).start()
    try:
        trace = script_session(sorted(server.arirs.seats),
                               server.session.labels(), cfg.n_trials)
        trace_path = write_events(tmp_path / "trace.jsonl", trace)
        report = replay(trace_path, port=server.endpoint.port, rate_hz=2000.0)
        deadline = time.monotonic() + 10.0
        while not server.session.finished and time.monotonic() < deadline:
            time.sleep(0.01)
        assert server.session.finished
        assert server.session.finalized_path.is_file()
        assert len(server.session.rows()) == 32  # 2 trials x 16 cells
        assert report.sent > len(trace)  # poses fan out to two datagrams
        assert server.endpoint.stats.handler_errors == 0
        assert server.endpoint.stats.malformed == 0
    finally:
        server.stop()
