"""Telemetry/command stream service hosted by `serve`.

One TCP endpoint, line-delimited JSON both ways.  The server pushes one
telemetry record per decimated plant tick and answers every command with
an ack (or an error) carrying the client's request id.  Commands are
applied at FSW tick boundaries only, and every applied command lands in
the event log, so a steered run replays as a fault schedule.

Client -> server commands::

    {"type": "command", "id": 1, "command": "inject_fault",
     "thruster": "xp", "kind": "stuck_open", "params": {...}}
    {"type": "command", "id": 2, "command": "sequence_goto", "state": "SAFE"}
    {"type": "command", "id": 3, "command": "set_rate_target", "w_deg_s": [0,0,3]}
    {"type": "command", "id": 4, "command": "pause"} / "resume"
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time

import numpy as np

from .actuation import FaultSpec
from .config import FAULT_KINDS
from .sequencer import UnknownState
from .simloop import ClosedLoop


class TelemetryService:
    """Broadcast telemetry to every client; funnel commands to the loop."""

    def __init__(self, host: str, port: int):
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(8)
        self.bound_port = self._listener.getsockname()[1]
        self._clients: list = []
        self._lock = threading.Lock()
        self.commands: queue.Queue = queue.Queue()
        self.paused = False
        self._stop = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)
        self._accept_thread.start()
        self.hello: dict = {}

    def _accept_loop(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._lock:
                self._clients.append(conn)
            if self.hello:
                self._send(conn, self.hello)
            threading.Thread(target=self._reader_loop, args=(conn,),
                             daemon=True).start()

    def _reader_loop(self, conn: socket.socket) -> None:
        buf = b""
        while not self._stop.is_set():
            try:
                chunk = conn.recv(4096)
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if not line.strip():
                    continue
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError:
                    self._send(conn, {"type": "error", "id": None,
                                      "reason": "bad json"})
                    continue
                self.commands.put((conn, msg))
        self._drop(conn)

    def _send(self, conn: socket.socket, obj: dict) -> None:
        try:
            conn.sendall((json.dumps(obj) + "\n").encode())
        except OSError:
            self._drop(conn)

    def _drop(self, conn: socket.socket) -> None:
        with self._lock:
            if conn in self._clients:
                self._clients.remove(conn)
        try:
            conn.close()
        except OSError:
            pass

    def broadcast(self, obj: dict) -> None:
        line = (json.dumps(obj) + "\n").encode()
        with self._lock:
            clients = list(self._clients)
        for conn in clients:
            try:
                conn.sendall(line)
            except OSError:
                self._drop(conn)

    def reply(self, conn: socket.socket, obj: dict) -> None:
        self._send(conn, obj)

    def close(self) -> None:
        self._stop.set()
        with self._lock:
            for conn in self._clients:
                try:
                    conn.close()
                except OSError:
                    pass
            self._clients.clear()
        self._listener.close()


def telemetry_record(row: dict) -> dict:
    deg = 180.0 / np.pi
    return {
        "type": "telemetry",
        "t": row["t"], "tick": row["tick"],
        "w_deg_s": [row["wx"] * deg, row["wy"] * deg, row["wz"] * deg],
        "rate_err_deg_s": row["rate_err_mag"] * deg,
        "nutation_deg": row["nutation"] * deg,
        "p_tank": row["p_tank"], "m_prop": row["m_prop"],
        "t_tank": row["t_tank"],
        "seq_state": row["seq_state"], "ctrl_mode": row["ctrl_mode"],
        "pulse_count": row["pulse_count"], "flags": row["flags"],
    }


class ServiceController:
    """Applies console commands to a running loop at tick boundaries."""

    def __init__(self, service: TelemetryService, loop: ClosedLoop,
                 fsw=None, realtime: bool = False):
        self.service = service
        self.loop = loop
        self.fsw = fsw                    # None when the FSW peer is remote
        self.realtime = realtime
        self._wall_start = None
        self._recent_events = 0

    def pre_exchange(self, loop: ClosedLoop) -> None:
        self._drain_commands()
        if self.service.paused:
            pause_began = time.monotonic()
            while self.service.paused:
                time.sleep(0.02)
                self._drain_commands()
            if self._wall_start is not None:
                # shift the pacing origin so the run does not sprint to
                # catch up with the wall clock after a pause
                self._wall_start += time.monotonic() - pause_began
        if self.realtime:
            if self._wall_start is None:
                self._wall_start = time.monotonic()
            target = self._wall_start + loop.state.t
            now = time.monotonic()
            if target > now:
                time.sleep(target - now)

    def on_row(self, row: dict) -> None:
        rec = telemetry_record(row)
        events = self.loop.events.events
        if len(events) > self._recent_events:
            rec["events"] = events[self._recent_events:]
            self._recent_events = len(events)
        self.service.broadcast(rec)

    def _drain_commands(self) -> None:
        while True:
            try:
                conn, msg = self.service.commands.get_nowait()
            except queue.Empty:
                return
            self._apply(conn, msg)

    def _apply(self, conn, msg: dict) -> None:
        req_id = msg.get("id")
        cmd = msg.get("command")
        tick = self.loop.fsw_tick
        t = self.loop.state.t
        try:
            if cmd == "inject_fault":
                self._inject_fault(msg, t)
            elif cmd == "sequence_goto":
                if self.fsw is None:
                    raise ValueError("flight software is remote; "
                                     "sequence_goto unavailable")
                self.fsw.operator_goto(str(msg["state"]))
            elif cmd == "set_rate_target":
                if self.fsw is None:
                    raise ValueError("flight software is remote; "
                                     "set_rate_target unavailable")
                w = np.asarray(msg["w_deg_s"], dtype=float) * np.pi / 180.0
                self.fsw.operator_rate_target(w)
            elif cmd == "pause":
                self.service.paused = True
            elif cmd == "resume":
                self.service.paused = False
            else:
                raise ValueError(f"unknown command {cmd!r}")
        except (KeyError, ValueError, UnknownState) as exc:
            self.service.reply(conn, {"type": "error", "id": req_id,
                                      "reason": str(exc)})
            return
        self.loop.events.append(t, "operator_command", command=cmd,
                                request_id=req_id,
                                detail={k: v for k, v in msg.items()
                                        if k not in ("type", "id", "command")})
        self.service.reply(conn, {"type": "ack", "id": req_id,
                                  "applied_tick": tick})

    def _inject_fault(self, msg: dict, t: float) -> None:
        thruster_id = str(msg["thruster"])
        kind = str(msg["kind"])
        if kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {kind!r}")
        params = msg.get("params", {})
        bank = {th.id: th for th in self.loop.bank}
        if thruster_id not in bank:
            raise ValueError(f"unknown thruster {thruster_id!r}")
        bank[thruster_id].fault = FaultSpec(
            kind=kind, t_onset=t,
            mdot=float(params.get("mdot", 0.0)),
            thrust_fraction=float(params.get("thrust_fraction", 0.0)),
            eta=float(params.get("eta", 1.0)),
            extra_delay=float(params.get("extra_delay", 0.0)))
