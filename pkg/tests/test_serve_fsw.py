"""Two-process serve + fsw through the real CLI, compared against `run`."""

import socket
import subprocess
import sys
from pathlib import Path

DEMO = Path(__file__).resolve().parent.parent / "scenarios" / "demo.toml"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_plus_fsw_matches_run_byte_for_byte(tmp_path):
    port = free_port()
    serve = subprocess.Popen(
        [sys.executable, "-m", "upstage", "serve", str(DEMO),
         "--pil-listen", f"127.0.0.1:{port}",
         "--duration", "10", "--seed", "9", "--out", str(tmp_path / "serve")],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        # wait for the lockstep endpoint banner before connecting
        banner = serve.stdout.readline().decode()
        assert "lockstep endpoint" in banner
        fsw = subprocess.run(
            [sys.executable, "-m", "upstage", "fsw",
             "--connect", f"127.0.0.1:{port}", "--scenario", str(DEMO)],
            capture_output=True, timeout=120)
        out, err = serve.communicate(timeout=120)
    finally:
        serve.kill()
    assert fsw.returncode == 0, fsw.stderr.decode()
    assert serve.returncode == 0, err.decode()
    assert b"answered 100 frames" in fsw.stdout

    run = subprocess.run(
        [sys.executable, "-m", "upstage", "run", str(DEMO),
         "--duration", "10", "--seed", "9", "--out", str(tmp_path / "run")],
        capture_output=True, timeout=120)
    assert run.returncode == 0, run.stderr.decode()

    trace_serve = (tmp_path / "serve" / "trace.csv").read_bytes()
    trace_run = (tmp_path / "run" / "trace.csv").read_bytes()
    assert trace_serve == trace_run
