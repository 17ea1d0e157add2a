"""Operator entry point.

Subcommands: serve (live evaluation session), render (offline binaural
render to WAV), analyze (screening, aggregation, figures), simulate-client
(replay a trace over UDP), make-dataset (synthetic dataset + config for
trying the whole stack). Exit codes: 0 success, 1 configuration problem,
2 runtime failure.
"""

import argparse
import signal
import sys
import threading
import time
from pathlib import Path

import numpy as np

from . import errors
from .config import apply_overrides, config_path_from, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auditorium",
        description="Seat-based spatial audio listening tests: real-time "
                    "binaural rendering, MUSHRA sessions, behavior analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", "-c", metavar="TOML",
                       help="config file (or set AUDITORIUM_CONFIG)")

    p = sub.add_parser("serve", help="run the evaluation server")
    add_config(p)
    p.add_argument("--check", action="store_true",
                   help="validate config and dataset, then exit")
    p.add_argument("--host")
    p.add_argument("--device", help='audio output, e.g. "null" or a device name')
    p.add_argument("--block-size", type=int, dest="block_size")
    p.add_argument("--osc-port", type=int, dest="osc_port")
    p.add_argument("--notify-port", type=int, dest="notify_port")
    p.add_argument("--ws-port", type=int, dest="ws_port")
    p.add_argument("--assessor")
    p.add_argument("--trials", type=int, dest="n_trials")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--assets", dest="assets_dir")
    p.add_argument("--decoder")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("render", help="render a condition offline to a WAV file")
    add_config(p)
    p.add_argument("--condition", default="reference")
    p.add_argument("--seat", default=None, help="seat label, e.g. B2")
    p.add_argument("--seconds", type=float, default=2.0)
    p.add_argument("--sources", default="all", help='"all" or comma-joined indices')
    p.add_argument("--orientation", type=float, nargs=4, metavar=("W", "X", "Y", "Z"),
                   help="static head orientation quaternion")
    p.add_argument("--trajectory", help="telemetry JSONL; pose events steer the head")
    p.add_argument("--out", required=True, metavar="WAV")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("analyze", help="screen, aggregate and plot results")
    p.add_argument("--results", nargs="+", required=True, metavar="CSV",
                   help="rating CSV files (all assessors)")
    p.add_argument("--telemetry", nargs="*", default=[], metavar="JSONL")
    add_config(p)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--threshold", type=int, default=90)
    p.add_argument("--max-fraction", type=float, default=0.15, dest="max_fraction")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--pooled", action="store_true",
                   help="pool raw ratings instead of per-assessor means")
    p.add_argument("--keep-excluded", action="store_true",
                   help="aggregate over all assessors, screening report only")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate-client",
                       help="replay a telemetry trace against a server")
    p.add_argument("--target", default="127.0.0.1:9000", metavar="HOST:PORT")
    p.add_argument("--trace", required=True, metavar="JSONL")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=None,
                   help="fixed event rate in Hz, overrides trace timing")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("make-dataset",
                       help="write a small synthetic dataset plus server config")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--seats", nargs="+", default=["A1", "B2", "C3"])
    p.add_argument("--sources", type=int, default=2)
    p.add_argument("--rate", type=int, default=48000)
    p.add_argument("--ir-seconds", type=float, default=0.25, dest="ir_seconds")
    p.add_argument("--sample-seconds", type=float, default=2.0, dest="sample_seconds")
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=cmd_make_dataset)

    return parser


def load_effective_config(args):
    cfg = load_config(config_path_from(getattr(args, "config", None)))
    names = ("host", "device", "block_size", "osc_port", "notify_port",
             "ws_port", "assessor", "n_trials", "seed", "out_dir",
             "assets_dir", "decoder")
    return apply_overrides(
        cfg, **{n: getattr(args, n) for n in names if hasattr(args, n)})


def cmd_serve(args) -> int:
    from .bridge import Bridge
    from .server import EvaluationServer, load_parts

    cfg = load_effective_config(args)
    if args.check:
        arirs, samples, decoder = load_parts(cfg)
        print(f"ok: {cfg.manifest}")
        print(f"ok: room {arirs.room!r}, {len(arirs.seats)} seats, "
              f"{len(arirs.sources)} sources, conditions: "
              f"{', '.join(arirs.conditions)}")
        print(f"ok: {len(samples)} source samples, decoder "
              f"{cfg.decoder or 'built-in'}")
        return 0

    server = EvaluationServer(cfg)
    bridge = Bridge(server, cfg.host, cfg.ws_port, cfg.assets_dir)
    stop = threading.Event()

    def on_signal(signum, frame):
        stop.set()

    prev_int = signal.signal(signal.SIGINT, on_signal)
    prev_term = signal.signal(signal.SIGTERM, on_signal)
    try:
        server.start()
        bridge.start()
        print(f"serving: control udp {cfg.host}:{server.endpoint.port}, "
              f"notify udp {cfg.host}:{cfg.notify_port}, "
              f"web http+ws {cfg.host}:{bridge.port}", flush=True)
        print(f"dataset: room {server.arirs.room!r}, assessor {cfg.assessor}, "
              f"{cfg.n_trials} trials -> {server.ratings_path}", flush=True)
        stop.wait()
    finally:
        signal.signal(signal.SIGINT, prev_int)
        signal.signal(signal.SIGTERM, prev_term)
        bridge.stop()
        server.stop()
        stats = server.host.stats()
        print(f"stopped after {stats['blocks']} blocks; "
              f"mean block {stats['mean_block_seconds'] * 1000:.2f} ms, "
              f"dropped controls {stats['dropped_controls']}, "
              f"osc malformed {server.endpoint.stats.malformed}")
    return 0


def cmd_render(args) -> int:
    from scipy.io import wavfile

    from .engine import Engine, EngineConfig, render_offline
    from .rotation import Orientation
    from .server import load_parts, parse_source_spec
    from .telemetry import read_events

    cfg = load_effective_config(args)
    arirs, samples, decoder = load_parts(cfg)
    engine = Engine(arirs, samples, decoder, EngineConfig(block_size=cfg.block_size))
    if args.seat is not None:
        engine.set_seat(args.seat)
    engine.set_active_sources(parse_source_spec(args.sources, len(arirs.sources)))
    if args.orientation:
        engine.set_orientation(Orientation(*args.orientation))

    events = []
    if args.trajectory:
        for event in read_events(args.trajectory):
            if event.get("type") != "pose":
                continue
            w, x, y, z = (float(v) for v in event["orientation"])
            pos = round(event["t"] * engine.sample_rate / 1000)
            events.append((pos, lambda e, o=Orientation(w, x, y, z):
                           e.set_orientation(o)))

    engine.play(args.condition)
    audio = render_offline(engine, args.seconds, events)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(out, engine.sample_rate, audio.T.astype(np.float32))
    peak = float(np.abs(audio).max()) if audio.size else 0.0
    print(f"wrote {out}: {audio.shape[1]} frames at {engine.sample_rate} Hz, "
          f"condition {args.condition}, seat {engine.seat}, peak {peak:.3f}")
    return 0


def cmd_analyze(args) -> int:
    from .analysis import (aggregate, apply_screening, export_heatmap,
                           screen_assessors, write_aggregate_csv,
                           write_screening_csv)
    from .reports import occupancy_figure, ratings_figure
    from .session import read_rating_rows
    from .telemetry import compute_dwell, count_visits, read_events

    rows = []
    for path in args.results:
        rows.extend(read_rating_rows(path))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    screens = screen_assessors(rows, threshold=args.threshold,
                               max_fraction=args.max_fraction)
    write_screening_csv(out / "screening.csv", screens)
    kept = rows if args.keep_excluded else apply_screening(rows, screens)
    if not kept:
        print("error: screening excluded every assessor", file=sys.stderr)
        return 1
    cells = aggregate(kept, level=args.level, pooled=args.pooled)
    write_aggregate_csv(out / "aggregate.csv", cells)
    ratings_figure(cells, out / "ratings.png")
    excluded = [s.assessor for s in screens if s.excluded]
    print(f"screening.csv: {len(screens)} assessors, "
          f"{len(excluded)} excluded{': ' + ', '.join(excluded) if excluded else ''}")
    print(f"aggregate.csv: {len(cells)} cells from {len(kept)} ratings")
    print(f"ratings.png: rated quality per condition")

    if args.telemetry:
        dwell: dict[str, float] = {}
        visits: dict[str, int] = {}
        for path in args.telemetry:
            events = read_events(path)
            teleports = [e for e in events if e["type"] == "teleport"]
            for seat, ms in compute_dwell(teleports).items():
                dwell[seat] = dwell.get(seat, 0.0) + ms
            for seat, n in count_visits(teleports).items():
                visits[seat] = visits.get(seat, 0) + n
        cfg = load_config(config_path_from(getattr(args, "config", None)))
        from .arir import load_arir_set

        arirs = load_arir_set(cfg.manifest.parent, cfg.manifest)
        export_heatmap(dwell, visits, arirs.seats,
                       out / "heatmap.csv", out / "heatmap.svg")
        occupancy_figure(dwell, visits, arirs.seats, out / "occupancy.png")
        print(f"heatmap.csv, heatmap.svg, occupancy.png: "
              f"{len(dwell)} seats visited")
    return 0


def cmd_simulate(args) -> int:
    from .simclient import replay

    host, _, port = args.target.rpartition(":")
    if not host or not port.isdigit():
        raise errors.InvalidConfig(f"target must be HOST:PORT, got {args.target!r}")
    report = replay(args.trace, host=host, port=int(port),
                    speed=args.speed, rate_hz=args.rate)
    print(report.summary())
    return 0


def cmd_make_dataset(args) -> int:
    from .config import ServerConfig, write_config
    from .fixtures import build_demo_dataset

    root = Path(args.out)
    paths = build_demo_dataset(
        root / "dataset", seat_labels=tuple(args.seats), n_sources=args.sources,
        ir_seconds=args.ir_seconds, sample_rate=args.rate,
        sample_seconds=args.sample_seconds, seed=args.seed)
    cfg = ServerConfig(manifest=paths.manifest,
                       samples=tuple(paths.samples),
                       out_dir=root / "results")
    config_path = write_config(root / "server.toml", cfg)
    cfg.validate()
    print(f"dataset: {paths.root}")
    print(f"config: {config_path}")
    print(f"try: auditorium serve -c {config_path} --check")
    return 0


CONFIG_ERRORS = (errors.InvalidConfig, errors.DatasetError, errors.MalformedTrace,
                 errors.UnsupportedOrder, errors.UnknownSeat, errors.UnknownCondition)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except errors.AuditoriumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
