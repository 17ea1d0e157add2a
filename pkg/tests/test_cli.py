"""Command line: exit codes, offline render, analyze outputs, serve loop."""

import csv
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

from auditorium.cli import main
from auditorium.session import ATTRIBUTE_IDS, write_rating_rows
from auditorium.simclient import script_session
from auditorium.telemetry import write_events

# 16 kHz keeps renders cheap while leaving an octave above the 3.5 kHz
# anchor cutoff for spectrum assertions
RATE = 16000


@pytest.fixture
def dataset(tmp_path):
    code = main(["make-dataset", "--out", str(tmp_path), "--rate", str(RATE),
                 "--ir-seconds", "0.05", "--sample-seconds", "0.3"])
    assert code == 0
    return tmp_path / "server.toml"


def free_port():
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_make_dataset_then_check(dataset, capsys):
    assert main(["serve", "-c", str(dataset), "--check"]) == 0
    out = capsys.readouterr().out
    assert "3 seats" in out and "reference" in out


def test_check_fails_on_missing_decoder(dataset, tmp_path, capsys):
    code = main(["serve", "-c", str(dataset), "--check",
                 "--decoder", str(tmp_path / "no-such-decoder.wav")])
    assert code == 1
    assert "no-such-decoder.wav" in capsys.readouterr().err


def test_missing_config_is_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("AUDITORIUM_CONFIG", raising=False)
    assert main(["serve", "--check"]) == 1
    assert main(["serve", "-c", str(tmp_path / "ghost.toml"), "--check"]) == 1


def test_render_deterministic_and_conditions_differ(dataset, tmp_path):
    out_a = tmp_path / "a.wav"
    out_b = tmp_path / "b.wav"
    base = ["render", "-c", str(dataset), "--seat", "B2", "--seconds", "0.5"]
    assert main(base + ["--out", str(out_a)]) == 0
    assert main(base + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()  # bit-identical

    anchor = tmp_path / "anchor.wav"
    assert main(base + ["--condition", "lowpass_anchor", "--out", str(anchor)]) == 0
    rate, ref = wavfile.read(out_a)
    _, low = wavfile.read(anchor)
    # Hann window: the loud partials below the cutoff would otherwise leak
    # into the stopband bins and swamp the comparison.
    window = np.hanning(len(ref))
    spec_ref = np.abs(np.fft.rfft(ref[:, 0] * window))
    spec_low = np.abs(np.fft.rfft(low[:, 0] * window))
    freqs = np.fft.rfftfreq(len(ref), 1 / rate)
    hi = freqs >= 7000  # an octave above the cutoff: at least 24 dB down
    ratio = spec_low[hi].sum() / spec_ref[hi].sum()
    assert ratio < 10 ** (-24 / 20)


def test_render_rejects_unknown_seat(dataset, capsys):
    code = main(["render", "-c", str(dataset), "--seat", "Q9", "--out", "x.wav"])
    assert code == 1
    err = capsys.readouterr().err
    assert "A1" in err and "B2" in err  # valid labels are listed


def test_render_with_trajectory(dataset, tmp_path):
    trace = tmp_path / "head.jsonl"
    write_events(trace, [
        {"type": "pose", "t": 0, "position": [0, 0, 1.2],
         "orientation": [1, 0, 0, 0]},
        {"type": "pose", "t": 100, "position": [0, 0, 1.2],
         "orientation": [0.7071068, 0, 0, 0.7071068]},
    ])
    moving = tmp_path / "moving.wav"
    still = tmp_path / "still.wav"
    base = ["render", "-c", str(dataset), "--seconds", "0.3"]
    assert main(base + ["--trajectory", str(trace), "--out", str(moving)]) == 0
    assert main(base + ["--out", str(still)]) == 0
    _, a = wavfile.read(moving)
    _, b = wavfile.read(still)
    assert not np.array_equal(a, b)  # the head turn changed the render


def test_analyze_writes_tables_and_figures(dataset, tmp_path, capsys):
    rows = []
    for assessor, base in (("alice", 95), ("bob", 40)):
        for trial in range(2):
            for attr in ATTRIBUTE_IDS:
                for label, cond in (("A", "hidden_reference"), ("B", "parametric")):
                    value = base if cond == "hidden_reference" else 50
                    rows.append((assessor, trial, attr, cond, label, value, 0))
    results = tmp_path / "ratings.csv"
    write_rating_rows(results, rows)
    telemetry = tmp_path / "t.jsonl"
    write_events(telemetry, [
        {"type": "teleport", "t": 0, "from": None, "to": "A1"},
        {"type": "teleport", "t": 1000, "from": "A1", "to": "B2"},
        {"type": "teleport", "t": 4000, "from": "B2", "to": "A1"},
        {"type": "ui", "t": 5000, "kind": "stop", "payload": ""},
    ])
    out = tmp_path / "report"
    code = main(["analyze", "--results", str(results),
                 "--telemetry", str(telemetry),
                 "-c", str(dataset), "--out", str(out)])
    assert code == 0
    for name in ("screening.csv", "aggregate.csv", "ratings.png",
                 "heatmap.csv", "heatmap.svg", "occupancy.png"):
        assert (out / name).is_file(), name
    with open(out / "screening.csv") as fh:
        screens = {r["assessor"]: r for r in csv.DictReader(fh)}
    assert screens["bob"]["excluded"] == "1"     # rated the hidden ref at 40
    assert screens["alice"]["excluded"] == "0"
    with open(out / "aggregate.csv") as fh:
        cells = list(csv.DictReader(fh))
    assert {c["condition"] for c in cells} == {"hidden_reference", "parametric"}
    text = capsys.readouterr().out
    assert "1 excluded: bob" in text


def test_analyze_all_excluded_is_config_error(dataset, tmp_path, capsys):
    rows = [("solo", 0, a, "hidden_reference", "A", 10, 0) for a in ATTRIBUTE_IDS]
    results = tmp_path / "r.csv"
    write_rating_rows(results, rows)
    code = main(["analyze", "--results", str(results), "--out", str(tmp_path / "o")])
    assert code == 1


def test_simulate_client_against_no_server(tmp_path):
    trace = tmp_path / "trace.jsonl"
    write_events(trace, [{"type": "ui", "t": 0, "kind": "stop", "payload": ""}])
    # UDP send to a closed local port does not error; success with 1 datagram
    assert main(["simulate-client", "--target", f"127.0.0.1:{free_port()}",
                 "--trace", str(trace), "--rate", "100"]) == 0
    assert main(["simulate-client", "--target", "not-a-target",
                 "--trace", str(trace)]) == 1


def test_serve_and_simulate_end_to_end(dataset, tmp_path):
    osc, notify, ws = free_port(), free_port(), free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "auditorium", "serve", "-c", str(dataset),
         "--osc-port", str(osc), "--notify-port", str(notify),
         "--ws-port", str(ws), "--trials", "1", "--assessor", "e2e"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
        cwd=str(tmp_path))
    try:
        line = proc.stdout.readline()
        assert "serving:" in line and str(osc) in line

        trace = script_session(["A1", "B2", "C3"], ["A", "B", "C", "D"], 1)
        trace_path = tmp_path / "session.jsonl"
        write_events(trace_path, trace)
        code = main(["simulate-client", "--target", f"127.0.0.1:{osc}",
                     "--trace", str(trace_path), "--rate", "500"])
        assert code == 0

        results = tmp_path / "results" / "ratings_e2e.csv"
        deadline = time.monotonic() + 15.0
        while not results.is_file() and time.monotonic() < deadline:
            time.sleep(0.05)
        assert results.is_file()
        with open(results) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 16
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            proc.wait(timeout=15.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            raise
    assert proc.returncode == 0
    tail = proc.stdout.read()
    assert "stopped after" in tail


def test_help_for_every_subcommand(capsys):
    for cmd in ("serve", "render", "analyze", "simulate-client", "make-dataset"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        assert cmd in capsys.readouterr().out
