"""Evaluation server: dataset + engine + session + telemetry behind one
control surface.

Control events arrive from two places (the UDP/OSC endpoint and the
WebSocket bridge) and funnel through the handle_* methods here, serialized
by one lock. Engine mutations are forwarded to the render thread through
the host's bounded queue; session and telemetry state is owned by the
control side. State changes fan out as /state/* notifications over UDP and
to any registered listener (the bridge broadcasts them to browsers).
"""

import math
import time
from pathlib import Path
from threading import RLock

from . import errors
from .arir import load_arir_set, load_source_sample
from .binaural import default_decoder, load_decoder
from .config import ServerConfig
from .engine import Engine, EngineConfig
from .host import AudioHost, open_sink
from .osc import Router, OscEndpoint
from .rotation import Orientation
from .session import (ATTRIBUTE_INFO, ATTRIBUTE_IDS, REFERENCE_LABEL, Session,
                      SessionConfig, write_rating_rows)
from .telemetry import TelemetryLog, TelemetryWriter


def load_parts(cfg: ServerConfig):
    """Load dataset, samples and decoder; shared by serve, check and render."""
    cfg.validate()
    arirs = load_arir_set(cfg.manifest.parent, cfg.manifest)
    rate = arirs.config.sample_rate
    samples = [load_source_sample(p, rate) for p in cfg.samples]
    if cfg.decoder is not None:
        decoder = load_decoder(cfg.decoder, expected_rate=rate,
                               n_channels=arirs.config.channel_count)
    else:
        decoder = default_decoder(rate, order=arirs.config.order)
    return arirs, samples, decoder


class EvaluationServer:
    def __init__(self, cfg: ServerConfig, sink=None, clock=time.time):
        self.cfg = cfg
        self.clock = clock
        self.arirs, self._samples, decoder = load_parts(cfg)
        rate = self.arirs.config.sample_rate
        self.engine = Engine(self.arirs, self._samples, decoder,
                             EngineConfig(block_size=cfg.block_size))
        if sink is None:
            sink = open_sink(cfg.device, rate, cfg.block_size)
        self.host = AudioHost(self.engine, sink)

        stamp = time.strftime("%Y%m%d-%H%M%S")
        out = Path(cfg.out_dir)
        self.ratings_path = out / f"ratings_{cfg.assessor}.csv"
        self.telemetry_path = out / f"telemetry_{cfg.assessor}_{stamp}.jsonl"

        session_cfg = SessionConfig(
            assessor=cfg.assessor, n_trials=cfg.n_trials, seed=cfg.seed,
            out_path=self.ratings_path)
        if cfg.conditions:
            session_cfg.conditions = tuple(cfg.conditions)
        self.session = Session(session_cfg, clock=clock)

        self._writer = TelemetryWriter(self.telemetry_path)
        self.telemetry = TelemetryLog(sink=self._writer.submit)

        self._lock = RLock()
        self._listeners = []
        self._started_ms = None
        self.seat = self.engine.seat
        self.transport = "stopped"
        self.stimulus: str | None = None
        self._position = (0.0, 0.0, 0.0)

        self.router = Router()
        self.router.on("/seat", self.handle_seat)
        self.router.on("/head/position", self.handle_position)
        self.router.on("/head/rotation", self.handle_rotation)
        self.router.on("/ui/play", self.handle_play)
        self.router.on("/ui/stop", self.handle_stop)
        self.router.on("/ui/rating", self.handle_rating)
        self.router.on("/ui/source", self.handle_source)
        self.router.on("/ui/trial/next", self.handle_next_trial)
        self.router.on("/ui/info", self.handle_info)
        self.endpoint = OscEndpoint(self.router, cfg.host, cfg.osc_port,
                                    reply_to=(cfg.host, cfg.notify_port))

    # -- lifecycle --------------------------------------------------------

    def start(self):
        self.telemetry_path.parent.mkdir(parents=True, exist_ok=True)
        self._writer.start()
        self._started_ms = int(self.clock() * 1000)
        # the assessor materializes at the default seat: from here on,
        # dwell intervals cover the whole session
        self.telemetry.record_teleport(0, None, self.seat)
        self.host.start()
        self.endpoint.start()
        self._announce_all()
        return self

    def stop(self):
        """Graceful shutdown; unfinished ratings persist as *.aborted.csv."""
        self.host.stop()
        self.endpoint.close()
        if not self.session.finished:
            rows = self.session.rows()
            if rows:
                aborted = self.ratings_path.with_suffix(".aborted.csv")
                write_rating_rows(aborted, rows)
        self._writer.close()

    def now_ms(self) -> int:
        if self._started_ms is None:
            return 0
        return int(self.clock() * 1000) - self._started_ms

    # -- notifications ----------------------------------------------------

    def add_listener(self, fn):
        """fn(address, args tuple); called after every state change."""
        self._listeners.append(fn)

    def _emit(self, address: str, *args):
        self.endpoint.notify(address, *args)
        for fn in list(self._listeners):
            try:
                fn(address, args)
            except Exception:
                pass  # a dead listener must not break control flow

    def _announce_all(self):
        self._emit("/state/trial", self.session.trial_index)
        self._emit("/state/transport", self.transport)
        self._emit("/state/seat", self.seat)

    # -- control handlers -------------------------------------------------

    def handle_seat(self, label: str):
        with self._lock:
            self.arirs.seat(label)  # unknown labels never reach the engine
            previous = self.seat
            self.seat = label
            self.host.submit(lambda e: e.set_seat(label))
            self.telemetry.record_teleport(self.now_ms(), previous, label)
            self._emit("/state/seat", label)

    def handle_position(self, x: float, y: float, z: float):
        pos = (float(x), float(y), float(z))
        if not all(math.isfinite(v) for v in pos):
            raise errors.OutOfRange(f"non-finite head position {pos}")
        self._position = pos

    def handle_rotation(self, w: float, x: float, y: float, z: float):
        orientation = Orientation(float(w), float(x), float(y), float(z)).normalized()
        self.host.set_pose(orientation, self._position)
        self.telemetry.record_pose(self.now_ms(), self._position,
                                   (orientation.w, orientation.x, orientation.y,
                                    orientation.z))

    def handle_play(self, label: str):
        with self._lock:
            condition = self.session.condition_for(label)
            self.stimulus = label
            self.host.submit(lambda e: e.play(condition))
            self.telemetry.record_ui(self.now_ms(), "play", label)
            if self.transport != "playing":
                self.transport = "playing"
                self._emit("/state/transport", "playing")

    def handle_stop(self):
        with self._lock:
            self.stimulus = None
            self.host.submit(lambda e: e.stop())
            self.telemetry.record_ui(self.now_ms(), "stop")
            if self.transport != "stopped":
                self.transport = "stopped"
                self._emit("/state/transport", "stopped")

    def handle_rating(self, attribute: str, label: str, value: int):
        with self._lock:
            self.telemetry.record_ui(self.now_ms(), "rating",
                                     f"{attribute}:{label}:{value}")
            self.session.rate(attribute, label, value)

    def handle_source(self, spec: str):
        with self._lock:
            indices = parse_source_spec(spec, len(self.arirs.sources))
            self.host.submit(lambda e: e.set_active_sources(indices))
            self.telemetry.record_ui(self.now_ms(), "source_select", spec)

    def handle_next_trial(self):
        with self._lock:
            index = self.session.next_trial()
            self.telemetry.record_ui(self.now_ms(), "trial_advance", str(index))
            # fresh trial, fresh program: rewind and stop the transport
            self.stimulus = None
            self.host.submit(lambda e: (e.stop(), e.set_samples(self._samples)))
            if self.transport != "stopped":
                self.transport = "stopped"
                self._emit("/state/transport", "stopped")
            self._emit("/state/trial", index)

    def handle_info(self, attribute: str):
        with self._lock:
            self.telemetry.record_ui(self.now_ms(), "info", attribute)

    # -- read side ---------------------------------------------------------

    def snapshot(self) -> dict:
        """Complete UI-visible state; labels stay blind."""
        with self._lock:
            session = self.session
            if session.in_familiarization:
                phase = "familiarization"
            elif session.finished:
                phase = "finished"
            else:
                phase = "rating"
            return {
                "type": "state",
                "assessor": self.cfg.assessor,
                "phase": phase,
                "trial": session.trial_index,
                "n_trials": session.config.n_trials,
                "labels": sorted(session.labels()),
                "reference_label": REFERENCE_LABEL,
                "attributes": [dict(ATTRIBUTE_INFO[a], id=a) for a in ATTRIBUTE_IDS],
                "ratings": session.ratings_view(),
                "missing": session.missing_cells(),
                "seat": self.seat,
                "seats": sorted(self.arirs.seats),
                "sources": len(self.arirs.sources),
                "transport": self.transport,
                "stimulus": self.stimulus,
            }


def parse_source_spec(spec: str, n_sources: int) -> list[int]:
    """Source selector strings: "all", "0", or comma-joined indices."""
    spec = spec.strip().lower()
    if spec == "all":
        return list(range(n_sources))
    try:
        indices = [int(part) for part in spec.split(",") if part.strip() != ""]
    except ValueError:
        raise errors.KeyNotFound(f"bad source selector {spec!r}")
    if not indices:
        raise errors.KeyNotFound(f"bad source selector {spec!r}")
    for i in indices:
        if not 0 <= i < n_sources:
            raise errors.KeyNotFound(f"source {i} out of range 0..{n_sources - 1}")
    return indices
