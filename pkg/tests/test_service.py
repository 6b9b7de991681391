"""Telemetry/command service: stream, acks, steering, pause semantics."""

import json
import socket
import threading
import time

import numpy as np
import pytest

from upstage.fsw import FlightSoftware
from upstage.service import ServiceController, TelemetryService
from upstage.simloop import ClosedLoop, Hooks, InProcessPeer, load_program

from scenarios import make_scenario


class Client:
    """Minimal line-JSON client against the service endpoint."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.sock.settimeout(0.2)
        self.buf = b""
        self.records = []
        self.acks = []
        self.errors = []
        self.hello = None

    def send(self, **msg):
        self.sock.sendall((json.dumps(msg) + "\n").encode())

    def pump(self, seconds):
        end = time.time() + seconds
        while time.time() < end:
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                continue
            if not chunk:
                return
            self.buf += chunk
            while b"\n" in self.buf:
                line, self.buf = self.buf.split(b"\n", 1)
                if not line.strip():
                    continue
                msg = json.loads(line)
                kind = msg.get("type")
                if kind == "telemetry":
                    self.records.append(msg)
                elif kind == "ack":
                    self.acks.append(msg)
                elif kind == "error":
                    self.errors.append(msg)
                elif kind == "hello":
                    self.hello = msg

    def close(self):
        self.sock.close()


@pytest.fixture
def served():
    """A running loop with the service attached; yields (client, thread)."""
    scn = make_scenario(fsw={"controller": "phase_plane"})
    fsw = FlightSoftware(scn, load_program(scn))
    hooks = Hooks()
    loop = ClosedLoop(scn, InProcessPeer(fsw), seed=1, hooks=hooks)
    service = TelemetryService("127.0.0.1", 0)
    service.hello = {"type": "hello", "scenario": "test",
                     "states": [], "thrusters": [t.id for t in loop.bank],
                     "rate_hz": 10.0, "decimation": 10, "dt": 0.01}
    controller = ServiceController(service, loop, fsw=fsw, realtime=False)

    def throttled(l):   # keep the loop alive while the client interacts
        time.sleep(0.005)
        controller.pre_exchange(l)

    hooks.pre_exchange = throttled
    hooks.on_row = controller.on_row

    result = {}

    def run():
        result["run"] = loop.run(60.0)

    thread = threading.Thread(target=run)
    client = Client(service.bound_port)
    time.sleep(0.05)
    thread.start()
    yield client, service, loop, result
    service.paused = False
    thread.join(timeout=30)
    client.close()
    service.close()


def test_stream_and_commands(served):
    client, service, loop, result = served
    client.pump(0.4)
    assert client.hello is not None
    assert len(client.records) > 0
    ts = [r["t"] for r in client.records]
    assert ts == sorted(ts)

    # fault injection acked and event-logged
    client.send(type="command", id=11, command="inject_fault",
                thruster="roll_p", kind="degraded", params={"eta": 0.5})
    client.pump(0.3)
    assert any(a["id"] == 11 for a in client.acks)
    bank = {t.id: t for t in loop.bank}
    assert bank["roll_p"].fault.kind == "degraded"

    # rate retarget through the console path
    client.send(type="command", id=12, command="set_rate_target",
                w_deg_s=[0.0, 0.0, 2.0])
    client.pump(0.3)
    assert any(a["id"] == 12 for a in client.acks)

    # bad commands rejected with a reason, not fatal
    client.send(type="command", id=13, command="inject_fault",
                thruster="ghost", kind="leak")
    client.send(type="command", id=14, command="sequence_goto", state="X")
    client.pump(0.3)
    reasons = {e["id"]: e["reason"] for e in client.errors}
    assert "ghost" in reasons[13]
    assert 14 in reasons

    ops = [e for r in client.records for e in r.get("events", [])
           if e["kind"] == "operator_command"]
    assert len(ops) >= 2


def test_pause_and_resume(served):
    client, service, loop, result = served
    client.pump(0.3)
    client.send(type="command", id=1, command="pause")
    client.pump(0.3)
    assert any(a["id"] == 1 for a in client.acks)
    t_paused = loop.state.t
    time.sleep(0.3)
    assert loop.state.t <= t_paused + 0.11  # at most the tick in flight
    client.send(type="command", id=2, command="resume")
    client.pump(0.5)
    assert loop.state.t > t_paused
