"""Processor-in-the-loop harness: binary frame protocol and lockstep link.

Wire layout (all little-endian)::

    magic   4 bytes  "USAC"
    version 1 byte   = 1
    msg_type 1 byte  1=SENSOR 2=ACTUATOR 3=SYNC 4=SHUTDOWN
    flags   2 bytes
    tick    8 bytes  unsigned
    payload_len 4 bytes unsigned
    payload  payload_len bytes: IEEE-754 binary64 values, field order
             fixed per msg_type, then one 8-byte discrete bitfield
    crc     4 bytes  CRC-32 (IEEE polynomial, reflected) over header+payload

Floats cross the wire as raw binary64 bit patterns, never as text, so
the in-process and remote flight software compute on identical inputs;
that is what lets the equivalence run demand exact equality.
"""

from __future__ import annotations

import socket
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .frames import ActuatorFrame, SensorFrame

MAGIC = b"USAC"
VERSION = 1

MSG_SENSOR = 1
MSG_ACTUATOR = 2
MSG_SYNC = 3
MSG_SHUTDOWN = 4

_HEADER = struct.Struct("<4sBBHQI")
HEADER_SIZE = _HEADER.size  # 20
_CRC = struct.Struct("<I")
_U64 = struct.Struct("<Q")


class MagicMismatch(ValueError):
    pass


class VersionUnsupported(ValueError):
    pass


class CrcMismatch(ValueError):
    pass


class Truncated(ValueError):
    pass


@dataclass
class WireFrame:
    msg_type: int
    tick: int
    values: tuple = ()          # binary64 payload values, fixed order
    discretes: int = 0          # trailing 8-byte bitfield
    flags: int = 0


def encode_frame(frame: WireFrame) -> bytes:
    payload = struct.pack(f"<{len(frame.values)}d", *frame.values) \
        + _U64.pack(frame.discretes & 0xFFFFFFFFFFFFFFFF)
    header = _HEADER.pack(MAGIC, VERSION, frame.msg_type, frame.flags,
                          frame.tick, len(payload))
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    return header + payload + _CRC.pack(crc)


def decode_frame(buf: bytes) -> WireFrame:
    if len(buf) < HEADER_SIZE:
        raise Truncated(f"{len(buf)} bytes, header needs {HEADER_SIZE}")
    magic, version, msg_type, flags, tick, payload_len = \
        _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise MagicMismatch(magic.hex())
    if version != VERSION:
        raise VersionUnsupported(str(version))
    total = HEADER_SIZE + payload_len + _CRC.size
    if len(buf) < total:
        raise Truncated(f"{len(buf)} bytes, frame needs {total}")
    payload = buf[HEADER_SIZE:HEADER_SIZE + payload_len]
    (crc_stored,) = _CRC.unpack_from(buf, HEADER_SIZE + payload_len)
    crc = zlib.crc32(buf[:HEADER_SIZE + payload_len]) & 0xFFFFFFFF
    if crc != crc_stored:
        raise CrcMismatch(f"computed {crc:08x}, stored {crc_stored:08x}")
    if payload_len < 8 or (payload_len - 8) % 8 != 0:
        raise Truncated(f"payload length {payload_len} not 8k+8")
    n_vals = (payload_len - 8) // 8
    values = struct.unpack_from(f"<{n_vals}d", payload, 0)
    (discretes,) = _U64.unpack_from(payload, n_vals * 8)
    return WireFrame(msg_type=msg_type, tick=tick, values=values,
                     discretes=discretes, flags=flags)


# -- frame adapters ---------------------------------------------------------

def sensor_to_wire(frame: SensorFrame) -> WireFrame:
    values = (frame.t, *[float(x) for x in frame.w_meas],
              *[float(x) for x in frame.q_meas],
              frame.p_tank, frame.m_prop_meas)
    return WireFrame(MSG_SENSOR, frame.tick, values, frame.discretes)


def wire_to_sensor(w: WireFrame) -> SensorFrame:
    v = w.values
    return SensorFrame(tick=w.tick, t=v[0], w_meas=np.array(v[1:4]),
                       q_meas=np.array(v[4:8]), p_tank=v[8],
                       m_prop_meas=v[9], discretes=w.discretes)


def actuator_to_wire(frame: ActuatorFrame) -> WireFrame:
    values = (*[float(x) for x in frame.on_times], frame.engine_throttle,
              frame.rate_err_mag, float(frame.seq_state_idx),
              float(frame.ctrl_mode_idx))
    return WireFrame(MSG_ACTUATOR, frame.tick, values, frame.sep_commands,
                     flags=frame.flags)


def wire_to_actuator(w: WireFrame, n_thrusters: int) -> ActuatorFrame:
    v = w.values
    if len(v) != n_thrusters + 4:
        raise Truncated(f"actuator payload has {len(v)} values, "
                        f"expected {n_thrusters + 4}")
    return ActuatorFrame(tick=w.tick, on_times=np.array(v[:n_thrusters]),
                         engine_throttle=v[n_thrusters],
                         sep_commands=w.discretes, flags=w.flags,
                         rate_err_mag=v[n_thrusters + 1],
                         seq_state_idx=int(v[n_thrusters + 2]),
                         ctrl_mode_idx=int(v[n_thrusters + 3]))


def sync_frame(period: float, delay: int, n_thrusters: int) -> WireFrame:
    return WireFrame(MSG_SYNC, 0, (period, float(delay), float(n_thrusters)), 0)


# -- stream I/O ---------------------------------------------------------------

def read_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            raise Truncated(f"stream closed after {got}/{n} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> WireFrame:
    header = read_exact(sock, HEADER_SIZE)
    _, _, _, _, _, payload_len = _HEADER.unpack(header)
    rest = read_exact(sock, payload_len + _CRC.size)
    return decode_frame(header + rest)


def send_frame(sock: socket.socket, frame: WireFrame) -> None:
    sock.sendall(encode_frame(frame))


# -- lockstep peers -----------------------------------------------------------

class SocketPeer:
    """Plant-side lockstep endpoint: serves one FSW connection."""

    def __init__(self, host: str, port: int, period: float, delay: int,
                 n_thrusters: int, timeout: float, accept_timeout: float = 30.0):
        from .simloop import LinkTimeout, ProtocolViolation
        self._timeouterr = LinkTimeout
        self._protoerr = ProtocolViolation
        self.n_thrusters = n_thrusters
        self.timeout = timeout
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self._listener.settimeout(accept_timeout)
        self.bound_port = self._listener.getsockname()[1]
        self._sync = sync_frame(period, delay, n_thrusters)
        self.conn = None

    def _handshake(self) -> None:
        self.conn, _ = self._listener.accept()
        self.conn.settimeout(self.timeout)
        self.conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        hello = read_frame(self.conn)
        if hello.msg_type != MSG_SYNC:
            raise self._protoerr(f"expected SYNC, got type {hello.msg_type}")
        if hello.values != self._sync.values:
            raise self._protoerr(
                f"SYNC mismatch: peer {hello.values}, local {self._sync.values}")
        send_frame(self.conn, self._sync)

    def exchange(self, frame: SensorFrame) -> ActuatorFrame:
        if self.conn is None:
            self._handshake()
        try:
            send_frame(self.conn, sensor_to_wire(frame))
            reply = read_frame(self.conn)
        except socket.timeout:
            raise self._timeouterr(f"no actuator frame within {self.timeout} s") \
                from None
        if reply.msg_type != MSG_ACTUATOR:
            raise self._protoerr(f"expected ACTUATOR, got type {reply.msg_type}")
        if reply.tick != frame.tick:
            raise self._protoerr(f"tick echo {reply.tick} != {frame.tick}")
        return wire_to_actuator(reply, self.n_thrusters)

    def shutdown(self) -> None:
        try:
            if self.conn is not None:
                send_frame(self.conn, WireFrame(MSG_SHUTDOWN, 0))
                self.conn.close()
        except OSError:
            pass
        self._listener.close()


def serve_fsw(host: str, port: int, fsw, period: float, delay: int,
              timeout: float = 30.0) -> int:
    """Remote-peer loop: connect, handshake, answer every SENSOR frame.

    Runs until SHUTDOWN or stream close; returns the number of frames
    answered.  This is the whole remote flight computer.
    """
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.settimeout(timeout)
    sock.connect((host, port))
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    n = 0
    try:
        send_frame(sock, sync_frame(period, delay, len(fsw.scenario.thrusters)))
        ack = read_frame(sock)
        if ack.msg_type != MSG_SYNC:
            raise ValueError(f"handshake failed: type {ack.msg_type}")
        while True:
            frame = read_frame(sock)
            if frame.msg_type == MSG_SHUTDOWN:
                break
            if frame.msg_type != MSG_SENSOR:
                raise ValueError(f"unexpected frame type {frame.msg_type}")
            reply = fsw.step(wire_to_sensor(frame))
            send_frame(sock, actuator_to_wire(reply))
            n += 1
    finally:
        sock.close()
    return n
