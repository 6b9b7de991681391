"""Thruster pulses: minimum impulse bit, blowdown thrust, and faults.

Shows the trapezoid pulse profile, the exact impulse identity
(plateau x commanded on-time), sub-MIB quantization, the pressure
dependence of thrust, and what each injectable fault does to the bank
output.
"""

import numpy as np

from upstage.actuation import (FaultSpec, PulseCommand, Thruster,
                               bank_forces_torques, shape_pulse)

P_REF = 2.0e6

thruster = Thruster(id="demo", position=np.array([1.1, 0.0, 0.0]),
                    direction=np.array([0.0, 1.0, 0.0]), f_ref=20.0,
                    p_ref=P_REF, mib=0.03, t_delay=0.01, t_ramp=0.005)

print("Pulse profile for a 100 ms command (20 N thruster, 5 ms ramps):")
cmd = PulseCommand("demo", t_start=0.0, t_on=0.1)
ts = np.linspace(0.0, 0.14, 1401)
profile = np.array([shape_pulse(cmd, thruster, P_REF, t) for t in ts])
for t_probe in (0.005, 0.012, 0.05, 0.112, 0.118):
    f = shape_pulse(cmd, thruster, P_REF, t_probe)
    print(f"  t = {t_probe * 1000:6.1f} ms   thrust = {f:6.2f} N")
impulse = np.trapezoid(profile, ts)
print(f"  integrated impulse {impulse:.6f} N s  (plateau x t_on = "
      f"{20.0 * 0.1:.6f} N s)\n")

print("Sub-MIB commands are physically unrealizable and quantize up:")
small = PulseCommand("demo", t_start=0.0, t_on=0.01)
imp_small = np.trapezoid([shape_pulse(small, thruster, P_REF, t) for t in ts], ts)
print(f"  commanded 10 ms -> delivered impulse {imp_small:.4f} N s "
      f"(= MIB impulse {20.0 * 0.03:.4f} N s)\n")

print("Blowdown: plateau thrust follows tank pressure:")
for frac in (1.0, 0.75, 0.5):
    f = shape_pulse(cmd, thruster, frac * P_REF, 0.05)
    print(f"  p = {frac:4.2f} p_ref -> {f:5.2f} N")

print("\nFault injection at the physical level (bank of one):")
for fault, label in [
    (FaultSpec(kind="stuck_open", t_onset=0.0), "stuck open (no command!)"),
    (FaultSpec(kind="stuck_closed", t_onset=0.0), "stuck closed (commanded)"),
    (FaultSpec(kind="degraded", eta=0.6), "degraded to 60 %"),
    (FaultSpec(kind="leak", mdot=0.02, thrust_fraction=0.1), "leaking"),
]:
    th = Thruster(id="demo", position=thruster.position,
                  direction=thruster.direction, f_ref=20.0, p_ref=P_REF,
                  mib=0.03, t_ramp=0.0, fault=fault)
    cmds = [] if fault.kind == "stuck_open" else [PulseCommand("demo", 0.0, 0.1)]
    force, torque, mdot = bank_forces_torques(cmds, [th], P_REF, t=0.05)
    print(f"  {label:26s} |F| = {np.linalg.norm(force):5.2f} N   "
          f"mdot = {mdot * 1000:6.3f} g/s")
