"""The mission sequence DSL: parse, pretty-print, interpret.

Loads the shipped two-payload mission, shows its structure, then runs
the full closed loop and prints the transition/release timeline,
including the emergency branch triggered by an injected leak.
"""

from upstage.config import load_scenario
from upstage.fsw import vocabulary
from upstage.sequencer import parse_sequence, pretty_print
from upstage.simloop import run_scenario

scn = load_scenario("scenarios/demo.toml")
text = (scn.base_dir / scn.sequence_path).read_text()
program = parse_sequence(text, vocabulary(scn))

print(f"sequence {program.name!r}: {len(program.states)} states, "
      f"{len(program.handlers)} global handler(s)")
for st in program.states:
    kinds = ", ".join(a.kind for a in st.entry_actions) or "none"
    print(f"  {st.name:18s} entry: {kinds}; {len(st.transitions)} transition(s)")
print("\nCanonical form round-trips through the parser:")
assert parse_sequence(pretty_print(program), vocabulary(scn)).states == program.states
print("  pretty_print(parse(text)) reparses structurally equal\n")

print("Nominal mission (260 s):")
res = run_scenario(scn, duration=260.0, seed=4)
for e in res.events.of_kind("seq_transition"):
    print(f"  t = {e['t']:7.2f} s  -> {e['state']}")
for e in res.events.of_kind("release"):
    print(f"  t = {e['t']:7.2f} s  released {e['payload']} "
          f"(v_rel {e['v_rel']:.3f} m/s)")

print("\nSame mission with a propellant leak from t = 30 s:")
scn_leak = load_scenario("scenarios/demo.toml", [
    'fault=[{thruster="zp", kind="leak", t_onset=30.0, mdot=2.0, '
    'thrust_fraction=0.02}]'])
res = run_scenario(scn_leak, duration=150.0, seed=4)
for e in res.events.of_kind("seq_transition"):
    print(f"  t = {e['t']:7.2f} s  -> {e['state']}")
print(f"  ({len(res.events.of_kind('release'))} emergency releases, "
      f"{res.state.m_prop:.0f} kg propellant left at t = 150 s)")
