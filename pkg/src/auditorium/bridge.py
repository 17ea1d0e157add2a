"""WebSocket JSON control surface plus static asset hosting, one port.

Browsers cannot speak UDP, so the bridge mirrors the OSC address space as
JSON over a WebSocket and forwards 1:1 to the same server handlers the UDP
endpoint uses. Plain HTTP GETs on the same port serve the web UI's static
files, so one listener covers the whole browser story.

Wire shape, client to server (one object per interaction):
    {"type": "seat", "id": "B3"}
    {"type": "pose", "orientation": [w, x, y, z], "position": [x, y, z]}
    {"type": "play", "label": "C"}        {"type": "stop"}
    {"type": "rating", "attribute": "timbral_quality", "label": "A", "value": 64}
    {"type": "source", "spec": "all"}     {"type": "next"}
    {"type": "info", "attribute": "localizability"}    {"type": "hello"}

Server to client:
    {"type": "state", ...}                full snapshot: on connect, as the
                                          ack of each applied event, on "hello"
    {"type": "notify", "address": "/state/trial", "args": [0]}
    {"type": "error", "error": "Incomplete", "message": "...", "missing": [...]}
"""

import asyncio
import http
import json
import mimetypes
import threading
from pathlib import Path

from websockets.asyncio.server import serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Response

from . import errors

PLACEHOLDER_PAGE = """<!doctype html>
<meta charset="utf-8">
<title>auditorium</title>
<body style="font-family: system-ui; margin: 4em auto; max-width: 40em">
<h1>auditorium</h1>
<p>The evaluation server is running. No web UI assets are configured;
point <code>output.assets</code> at a built frontend, or connect over
the WebSocket at <code>/ws</code> or the UDP control port.</p>
"""


class Bridge:
    def __init__(self, server, host: str = "127.0.0.1", port: int = 8765,
                 assets_dir=None):
        self.server = server
        self.host = host
        self.port = port
        self.assets_dir = Path(assets_dir).resolve() if assets_dir else None
        self.clients = set()
        self.messages = 0
        self.rejected = 0
        self._loop = None
        self._ws_server = None
        self._thread = None
        self._ready = threading.Event()
        self._startup_error = None
        server.add_listener(self._on_state_change)

    # -- static assets ------------------------------------------------------

    def _serve_asset(self, connection, request):
        if request.headers.get("Upgrade", "").lower() == "websocket":
            return None  # proceed with the WebSocket handshake
        path = request.path.split("?", 1)[0]
        if path == "/healthz":
            return connection.respond(http.HTTPStatus.OK, "ok\n")
        if self.assets_dir is None:
            if path in ("/", "/index.html"):
                return _page(PLACEHOLDER_PAGE)
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        name = path.lstrip("/") or "index.html"
        target = (self.assets_dir / name).resolve()
        if not str(target).startswith(str(self.assets_dir)) or not target.is_file():
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        return Response(200, "OK", Headers([("Content-Type", ctype)]),
                        target.read_bytes())

    # -- websocket side ------------------------------------------------------

    async def _client(self, websocket):
        self.clients.add(websocket)
        try:
            await websocket.send(json.dumps(self.server.snapshot()))
            async for raw in websocket:
                reply = self._apply(raw)
                if reply is not None:
                    await websocket.send(json.dumps(reply))
        except ConnectionClosed:
            pass
        finally:
            self.clients.discard(websocket)

    def _apply(self, raw) -> dict | None:
        """Translate one JSON event to a server handler call."""
        self.messages += 1
        try:
            event = json.loads(raw)
            if not isinstance(event, dict):
                raise ValueError("event must be an object")
            kind = event["type"]
            if kind == "hello":
                return self.server.snapshot()
            if kind == "seat":
                self.server.handle_seat(str(event["id"]))
            elif kind == "pose":
                o = [float(v) for v in event["orientation"]]
                if len(o) != 4:
                    raise ValueError("orientation must be [w, x, y, z]")
                if "position" in event:
                    p = [float(v) for v in event["position"]]
                    if len(p) != 3:
                        raise ValueError("position must be [x, y, z]")
                    self.server.handle_position(*p)
                self.server.handle_rotation(*o)
            elif kind == "play":
                self.server.handle_play(str(event["label"]))
            elif kind == "stop":
                self.server.handle_stop()
            elif kind == "rating":
                self.server.handle_rating(str(event["attribute"]),
                                          str(event["label"]),
                                          int(event["value"]))
            elif kind == "source":
                self.server.handle_source(str(event["spec"]))
            elif kind == "next":
                self.server.handle_next_trial()
            elif kind == "info":
                self.server.handle_info(str(event["attribute"]))
            else:
                raise ValueError(f"unknown event type {kind!r}")
        except errors.AuditoriumError as exc:
            self.rejected += 1
            reply = {"type": "error", "error": type(exc).__name__,
                     "message": str(exc)}
            if isinstance(exc, errors.Incomplete):
                reply["missing"] = exc.missing
            return reply
        except (KeyError, ValueError, TypeError) as exc:
            self.rejected += 1
            return {"type": "error", "error": "BadEvent", "message": str(exc)}
        # acknowledge with fresh state so optimistic UIs can reconcile
        return self.server.snapshot()

    # -- state fan-out -------------------------------------------------------

    def _on_state_change(self, address, args):
        loop = self._loop
        if loop is None or not loop.is_running():
            return
        note = json.dumps({"type": "notify", "address": address,
                           "args": list(args)})
        snap = json.dumps(self.server.snapshot())
        loop.call_soon_threadsafe(self._broadcast, note, snap)

    def _broadcast(self, *payloads):
        for client in list(self.clients):
            for payload in payloads:
                try:
                    asyncio.ensure_future(client.send(payload))
                except ConnectionClosed:
                    pass

    # -- lifecycle -------------------------------------------------------------

    async def _main(self):
        try:
            async with serve(self._client, self.host, self.port,
                             process_request=self._serve_asset) as ws_server:
                self._ws_server = ws_server
                self.port = ws_server.sockets[0].getsockname()[1]
                self._ready.set()
                await asyncio.get_running_loop().create_future()  # run until cancelled
        except OSError as exc:
            self._startup_error = errors.BindFailed(
                f"cannot bind ws {self.host}:{self.port}: {exc}")
            self._ready.set()

    def _run(self):
        loop = self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(loop)
        try:
            loop.run_until_complete(self._main())
        except asyncio.CancelledError:
            pass
        finally:
            loop.close()

    def start(self):
        self._thread = threading.Thread(target=self._run, name="ws-bridge",
                                        daemon=True)
        self._thread.start()
        self._ready.wait(timeout=10.0)
        if self._startup_error is not None:
            self._thread.join(timeout=5.0)
            raise self._startup_error
        return self

    def stop(self):
        loop, self._loop = self._loop, None
        if loop is None or self._thread is None:
            return
        def shutdown():
            for task in asyncio.all_tasks(loop):
                task.cancel()
        loop.call_soon_threadsafe(shutdown)
        self._thread.join(timeout=10.0)
        self._thread = None


def _page(html: str) -> Response:
    return Response(200, "OK", Headers([("Content-Type", "text/html; charset=utf-8")]),
                    html.encode())
