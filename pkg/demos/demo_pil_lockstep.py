"""Processor-in-the-loop equivalence: same bits in process and on the wire.

Encodes a frame to show the wire layout, then runs the demo scenario
twice - flight software in-process and flight software in a separate
process behind the lockstep socket - and diffs the full telemetry
traces.  Binary64 payloads mean both executors compute on identical
inputs, so the difference is exactly zero.
"""

from upstage.equivalence import run_equivalence
from upstage.frames import SensorFrame
from upstage.pil import encode_frame, sensor_to_wire

import numpy as np

frame = SensorFrame(tick=7, t=0.7, w_meas=np.array([1e-3, -2e-3, 0.05236]),
                    q_meas=np.array([1.0, 0.0, 0.0, 0.0]),
                    p_tank=2.0078e6, m_prop_meas=600.0, discretes=0b01)
buf = encode_frame(sensor_to_wire(frame))
print(f"SENSOR frame on the wire: {len(buf)} bytes")
print(f"  magic+header : {buf[:20].hex()}")
print(f"  payload      : {buf[20:52].hex()} ... ({len(buf) - 24} bytes)")
print(f"  crc32        : {buf[-4:].hex()}\n")

print("Running 500 lockstep ticks both ways (this spawns a second "
      "process)...")
eq = run_equivalence("scenarios/demo.toml", n_ticks=500, seed=1)
print(f"  rows compared        : {eq.n_rows}")
print(f"  max |difference|     : {eq.max_abs_diff}")
print(f"  string columns equal : {eq.string_columns_equal}")
worst = sorted(eq.per_signal.items(), key=lambda kv: -kv[1])[:3]
print(f"  largest per-signal   : {worst}")
