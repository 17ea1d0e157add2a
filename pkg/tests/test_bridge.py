"""WebSocket bridge: JSON control, state fan-out, static assets."""

import asyncio
import json
import time
import urllib.error
import urllib.request

import pytest
from websockets.asyncio.client import connect

from auditorium.bridge import Bridge
from auditorium.config import ServerConfig
from auditorium.fixtures import build_demo_dataset
from auditorium.host import NullSink
from auditorium.server import EvaluationServer

RATE = 8000


@pytest.fixture
def bridged(tmp_path):
    paths = build_demo_dataset(tmp_path / "data", ir_seconds=0.05,
                               sample_seconds=0.3, sample_rate=RATE)
    assets = tmp_path / "assets"
    assets.mkdir()
    (assets / "index.html").write_text("<!doctype html><title>ui</title>")
    (assets / "app.js").write_text("console.log('ui')")
    cfg = ServerConfig(
        manifest=paths.manifest, samples=tuple(paths.samples),
        osc_port=0, notify_port=19199, ws_port=0,
        assessor="wstest", n_trials=1, seed=3,
        out_dir=tmp_path / "out", assets_dir=assets,
    )
    server = EvaluationServer(
        cfg, sink=NullSink(RATE, cfg.block_size, paced=False)).start()
    bridge = Bridge(server, port=0, assets_dir=assets).start()
    try:
        yield server, bridge
    finally:
        bridge.stop()
        server.stop()


def run(coro):
    return asyncio.run(asyncio.wait_for(coro, timeout=10.0))


async def recv_event(ws, wanted_type, pred=lambda m: True):
    """Skip interleaved broadcasts until a matching message arrives."""
    while True:
        msg = json.loads(await asyncio.wait_for(ws.recv(), 5.0))
        if msg["type"] == wanted_type and pred(msg):
            return msg


def test_connect_sends_snapshot(bridged):
    _, bridge = bridged

    async def script():
        async with connect(f"ws://127.0.0.1:{bridge.port}/ws") as ws:
            snap = json.loads(await ws.recv())
            assert snap["type"] == "state"
            assert snap["phase"] == "familiarization"
            assert snap["labels"] == ["A", "B", "C", "D"]
            assert snap["reference_label"] == "ref"
            await ws.send(json.dumps({"type": "hello"}))
            again = await recv_event(ws, "state")
            assert again["phase"] == "familiarization"

    run(script())


def test_events_drive_session_and_broadcast(bridged):
    server, bridge = bridged

    async def script():
        async with connect(f"ws://127.0.0.1:{bridge.port}/ws") as ws:
            await ws.recv()  # initial snapshot
            await ws.send(json.dumps({"type": "seat", "id": "C3"}))
            note = await recv_event(ws, "notify")
            assert note["address"] == "/state/seat" and note["args"] == ["C3"]

            await ws.send(json.dumps({"type": "next"}))
            snap = await recv_event(ws, "state", lambda m: m["phase"] == "rating")
            assert snap["trial"] == 0

            await ws.send(json.dumps({"type": "play", "label": "A"}))
            await recv_event(ws, "notify")
            await ws.send(json.dumps(
                {"type": "rating", "attribute": "timbral_quality",
                 "label": "A", "value": 64}))
            await ws.send(json.dumps({"type": "hello"}))
            snap = await recv_event(
                ws, "state", lambda m: m["ratings"]["timbral_quality"])
            assert snap["ratings"]["timbral_quality"]["A"] == 64
            assert snap["transport"] == "playing"

    run(script())
    assert server.seat == "C3"
    assert server.session.ratings_view()["timbral_quality"]["A"] == 64


def test_second_client_sees_broadcasts(bridged):
    _, bridge = bridged
    url = f"ws://127.0.0.1:{bridge.port}/ws"

    async def script():
        async with connect(url) as a, connect(url) as b:
            await a.recv()
            await b.recv()
            await a.send(json.dumps({"type": "seat", "id": "B2"}))
            note = await recv_event(b, "notify")
            assert note == {"type": "notify", "address": "/state/seat",
                            "args": ["B2"]}
            snap = await recv_event(b, "state")
            assert snap["seat"] == "B2"

    run(script())


def test_refused_and_malformed_events(bridged):
    server, bridge = bridged

    async def script():
        async with connect(f"ws://127.0.0.1:{bridge.port}/ws") as ws:
            await ws.recv()
            # rating during familiarization is refused by the session
            await ws.send(json.dumps({"type": "rating", "label": "A",
                                      "attribute": "localizability", "value": 5}))
            err = await recv_event(ws, "error")
            assert err["error"] == "WrongPhase"

            await ws.send(json.dumps({"type": "next"}))
            await recv_event(ws, "state")
            await ws.send(json.dumps({"type": "next"}))  # nothing rated yet
            err = await recv_event(ws, "error")
            assert err["error"] == "Incomplete"
            assert len(err["missing"]) == 16

            await ws.send("{not json")
            err = await recv_event(ws, "error")
            assert err["error"] == "BadEvent"
            await ws.send(json.dumps({"type": "warp"}))
            err = await recv_event(ws, "error")
            assert err["error"] == "BadEvent"
            await ws.send(json.dumps({"type": "rating"}))  # missing fields
            err = await recv_event(ws, "error")
            assert err["error"] == "BadEvent"

            # connection still serves after every refusal
            await ws.send(json.dumps({"type": "hello"}))
            assert (await recv_event(ws, "state"))["phase"] == "rating"

    run(script())
    assert bridge.rejected == 5


def test_pose_events_reach_engine(bridged):
    server, bridge = bridged

    async def script():
        async with connect(f"ws://127.0.0.1:{bridge.port}/ws") as ws:
            await ws.recv()
            await ws.send(json.dumps({
                "type": "pose",
                "orientation": [0.7071068, 0.0, 0.0, 0.7071068],
                "position": [0.1, 0.2, 0.3]}))
            await ws.send(json.dumps({"type": "hello"}))
            await recv_event(ws, "state")

    run(script())
    deadline = time.monotonic() + 5.0
    while server.engine.orientation.z < 0.7 and time.monotonic() < deadline:
        time.sleep(0.01)
    assert server.engine.orientation.z == pytest.approx(0.7071068, abs=1e-6)
    assert server._position == (0.1, 0.2, 0.3)
    assert any(e["type"] == "pose" for e in server.telemetry.events)


def test_static_assets_and_health(bridged):
    _, bridge = bridged
    base = f"http://127.0.0.1:{bridge.port}"
    with urllib.request.urlopen(f"{base}/") as resp:
        assert resp.headers["Content-Type"].startswith("text/html")
        assert b"ui" in resp.read()
    with urllib.request.urlopen(f"{base}/app.js") as resp:
        assert resp.headers["Content-Type"] == "text/javascript"
    with urllib.request.urlopen(f"{base}/healthz") as resp:
        assert resp.read() == b"ok\n"
    with pytest.raises(urllib.error.HTTPError) as exc:
        urllib.request.urlopen(f"{base}/no-such-file.js")
    assert exc.value.code == 404
    with pytest.raises(urllib.error.HTTPError):
        urllib.request.urlopen(f"{base}/%2e%2e/data/manifest.toml")


def test_placeholder_page_without_assets(bridged):
    server, _ = bridged
    bare = Bridge(server, port=0).start()
    try:
        with urllib.request.urlopen(f"http://127.0.0.1:{bare.port}/") as resp:
            assert b"auditorium" in resp.read()
    finally:
        bare.stop()
