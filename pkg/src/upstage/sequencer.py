"""Mission sequence DSL: parser and deterministic tick interpreter.

Grammar (line-oriented, ``#`` comments)::

    sequence NAME {
      state NAME {
        entry: action(arg, ...); action(...);
        goto TARGET when SIGNAL CMP VALUE [UNIT] [for DURATION];
        goto TARGET after DURATION;
      }
      on SIGNAL CMP VALUE [UNIT] [for DURATION] goto TARGET;
    }

Actions: set_rate_target(x, y, z) [deg/s], arm(device), fire(device),
set_controller(phase_plane|mpc|adaptive), set_flag(name).  Signal names
must come from the published telemetry dictionary; unit suffixes are
converted to SI at parse time.  The interpreter evaluates global
handlers first, then the current state's transitions in declaration
order, takes at most one transition per tick, and emits the target
state's entry actions exactly once per entry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .config import CONTROLLER_MODES
from .telemetry import UNIT_FACTORS


class SequenceError(ValueError):
    """Base for parse errors; carries file position for diagnostics."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class SequenceSyntaxError(SequenceError):
    def __init__(self, line: int, col: int, expected: str):
        self.expected = expected
        super().__init__(f"expected {expected}", line, col)


class UnknownState(SequenceError):
    def __init__(self, name: str, line: int = 0):
        self.name = name
        super().__init__(f"unknown state {name!r}", line)


class UnknownSignal(SequenceError):
    def __init__(self, name: str, line: int = 0):
        self.name = name
        super().__init__(f"unknown signal {name!r}", line)


class UnknownDevice(SequenceError):
    def __init__(self, name: str, line: int = 0):
        self.name = name
        super().__init__(f"unknown device {name!r}", line)


class DuplicateState(SequenceError):
    def __init__(self, name: str, line: int = 0):
        self.name = name
        super().__init__(f"duplicate state {name!r}", line)


class MissingSignal(KeyError):
    pass


@dataclass
class SequenceVocabulary:
    """Names a sequence may reference, derived from the scenario."""
    signals: frozenset
    devices: frozenset
    modes: frozenset = frozenset(CONTROLLER_MODES)


@dataclass(frozen=True)
class Condition:
    signal: str
    comparator: str             # < > <= >=
    threshold: float            # SI
    persistence: float = 0.0    # s


@dataclass(frozen=True)
class Action:
    kind: str
    args: tuple = ()


@dataclass
class Transition:
    target: str
    condition: Condition | None = None
    after: float | None = None
    line: int = field(default=0, compare=False)


@dataclass
class SeqState:
    name: str
    entry_actions: list
    transitions: list
    line: int = field(default=0, compare=False)


@dataclass
class GlobalHandler:
    condition: Condition
    target: str
    line: int = field(default=0, compare=False)


@dataclass
class SequenceProgram:
    name: str
    states: list
    handlers: list

    @property
    def initial(self) -> str:
        return self.states[0].name

    def state(self, name: str) -> SeqState:
        for s in self.states:
            if s.name == name:
                return s
        raise UnknownState(name)

    def state_names(self) -> list:
        return [s.name for s in self.states]


_NAME = r"[A-Za-z_][A-Za-z0-9_./-]*"
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_CMP = r"<=|>=|<|>"
_COND = (rf"(?P<signal>{_NAME})\s*(?P<cmp>{_CMP})\s*(?P<value>{_NUM})"
         rf"(?:\s+(?P<unit>[A-Za-z/]+))?(?:\s+for\s+(?P<persist>{_NUM})\s*s?)?")

_RE_SEQUENCE = re.compile(rf"^sequence\s+(?P<name>{_NAME})\s*\{{$")
_RE_STATE = re.compile(rf"^state\s+(?P<name>{_NAME})\s*\{{$")
_RE_ENTRY = re.compile(r"^entry:\s*(?P<body>.*);$")
_RE_GOTO_WHEN = re.compile(rf"^goto\s+(?P<target>{_NAME})\s+when\s+{_COND};$")
_RE_GOTO_AFTER = re.compile(rf"^goto\s+(?P<target>{_NAME})\s+after\s+(?P<dur>{_NUM})\s*s?;$")
_RE_ON = re.compile(rf"^on\s+{_COND}\s+goto\s+(?P<target>{_NAME});$")
_RE_ACTION = re.compile(rf"^(?P<fn>{_NAME})\s*\(\s*(?P<args>[^)]*)\s*\)$")
_RE_CLOSE = re.compile(r"^\}$")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _convert_unit(value: float, unit: str | None, line: int, col: int) -> float:
    if unit is None:
        return value
    factor = UNIT_FACTORS.get(unit.lower())
    if factor is None:
        raise SequenceSyntaxError(line, col, f"a known unit, got {unit!r}")
    return value * factor


def _parse_condition(m: re.Match, line: int, vocab: SequenceVocabulary) -> Condition:
    signal = m.group("signal")
    if signal not in vocab.signals:
        raise UnknownSignal(signal, line)
    value = _convert_unit(float(m.group("value")), m.group("unit"),
                          line, m.start("value") + 1)
    persistence = float(m.group("persist")) if m.group("persist") else 0.0
    return Condition(signal=signal, comparator=m.group("cmp"),
                     threshold=value, persistence=persistence)


def _parse_action(text: str, line: int, vocab: SequenceVocabulary) -> Action:
    m = _RE_ACTION.match(text.strip())
    if not m:
        raise SequenceSyntaxError(line, 1, f"an action call, got {text.strip()!r}")
    fn = m.group("fn")
    args = [a.strip() for a in m.group("args").split(",")] if m.group("args").strip() else []
    if fn == "set_rate_target":
        if len(args) != 3:
            raise SequenceSyntaxError(line, 1, "set_rate_target(x, y, z) in deg/s")
        return Action("set_rate_target",
                      tuple(float(a) * np.pi / 180.0 for a in args))
    if fn in ("arm", "fire"):
        if len(args) != 1:
            raise SequenceSyntaxError(line, 1, f"{fn}(device)")
        if args[0] not in vocab.devices:
            raise UnknownDevice(args[0], line)
        return Action(fn, (args[0],))
    if fn == "set_controller":
        if len(args) != 1 or args[0] not in vocab.modes:
            raise SequenceSyntaxError(line, 1,
                                      f"set_controller(one of {sorted(vocab.modes)})")
        return Action("set_controller", (args[0],))
    if fn == "set_flag":
        if len(args) != 1:
            raise SequenceSyntaxError(line, 1, "set_flag(name)")
        return Action("set_flag", (args[0],))
    raise SequenceSyntaxError(line, 1, f"a known action, got {fn!r}")


def parse_sequence(text: str, vocab: SequenceVocabulary) -> SequenceProgram:
    """Parse `.seq` text into a SequenceProgram; rejects bad input with
    line/column diagnostics and resolves all cross-references."""
    lines = text.splitlines()
    program_name = None
    states: list = []
    handlers: list = []
    current: SeqState | None = None
    depth = 0

    for lineno, raw in enumerate(lines, start=1):
        stripped = _strip(raw)
        if not stripped:
            continue
        col = raw.index(stripped[0]) + 1 if stripped else 1

        if depth == 0:
            m = _RE_SEQUENCE.match(stripped)
            if not m:
                raise SequenceSyntaxError(lineno, col, "'sequence NAME {'")
            program_name = m.group("name")
            depth = 1
            continue

        if depth == 1:
            if _RE_CLOSE.match(stripped):
                depth = 0
                continue
            m = _RE_STATE.match(stripped)
            if m:
                name = m.group("name")
                if any(s.name == name for s in states):
                    raise DuplicateState(name, lineno)
                current = SeqState(name=name, entry_actions=[], transitions=[],
                                   line=lineno)
                states.append(current)
                depth = 2
                continue
            m = _RE_ON.match(stripped)
            if m:
                cond = _parse_condition(m, lineno, vocab)
                handlers.append(GlobalHandler(condition=cond,
                                              target=m.group("target"),
                                              line=lineno))
                continue
            raise SequenceSyntaxError(lineno, col, "'state NAME {', 'on ...;' or '}'")

        # depth == 2: inside a state
        if _RE_CLOSE.match(stripped):
            depth = 1
            current = None
            continue
        m = _RE_ENTRY.match(stripped)
        if m:
            body = m.group("body")
            for part in body.split(";"):
                part = part.strip()
                if part:
                    current.entry_actions.append(_parse_action(part, lineno, vocab))
            continue
        m = _RE_GOTO_WHEN.match(stripped)
        if m:
            cond = _parse_condition(m, lineno, vocab)
            current.transitions.append(Transition(target=m.group("target"),
                                                  condition=cond, line=lineno))
            continue
        m = _RE_GOTO_AFTER.match(stripped)
        if m:
            current.transitions.append(Transition(target=m.group("target"),
                                                  after=float(m.group("dur")),
                                                  line=lineno))
            continue
        raise SequenceSyntaxError(lineno, col,
                                  "'entry: ...;', 'goto ...;' or '}'")

    if program_name is None:
        raise SequenceSyntaxError(1, 1, "'sequence NAME {'")
    if depth != 0:
        raise SequenceSyntaxError(len(lines), 1, "'}' to close the block")
    if not states:
        raise SequenceSyntaxError(len(lines), 1, "at least one state")

    program = SequenceProgram(name=program_name, states=states, handlers=handlers)
    names = set(program.state_names())
    for st in states:
        for tr in st.transitions:
            if tr.target not in names:
                raise UnknownState(tr.target, tr.line)
    for h in handlers:
        if h.target not in names:
            raise UnknownState(h.target, h.line)
    return program


def pretty_print(program: SequenceProgram) -> str:
    """Canonical text form; reparses to a structurally equal program."""
    out = [f"sequence {program.name} {{"]
    for st in program.states:
        out.append(f"  state {st.name} {{")
        if st.entry_actions:
            parts = []
            for a in st.entry_actions:
                if a.kind == "set_rate_target":
                    deg = [repr(x * 180.0 / np.pi) for x in a.args]
                    parts.append(f"set_rate_target({', '.join(deg)})")
                else:
                    parts.append(f"{a.kind}({', '.join(a.args)})")
            out.append(f"    entry: {'; '.join(parts)};")
        for tr in st.transitions:
            if tr.condition is not None:
                c = tr.condition
                clause = f"{c.signal} {c.comparator} {c.threshold!r}"
                if c.persistence:
                    clause += f" for {c.persistence!r}"
                out.append(f"    goto {tr.target} when {clause};")
            else:
                out.append(f"    goto {tr.target} after {tr.after!r};")
        out.append("  }")
    for h in program.handlers:
        c = h.condition
        clause = f"{c.signal} {c.comparator} {c.threshold!r}"
        if c.persistence:
            clause += f" for {c.persistence!r}"
        out.append(f"  on {clause} goto {h.target};")
    out.append("}")
    return "\n".join(out) + "\n"


_CMP_FNS = {"<": lambda a, b: a < b, ">": lambda a, b: a > b,
            "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b}

_HOLD_SLACK = 1e-9  # absorbs float accumulation of dt into the hold timer


def check_condition(cond: Condition, telemetry: dict, hold: float,
                    dt: float) -> tuple:
    """One persistence-timer update; returns (fired, new_hold).

    The hold timer accumulates dt on every true evaluation (the first true
    sample already counts dt) and resets to zero when false.
    """
    if cond.signal not in telemetry:
        raise MissingSignal(cond.signal)
    true_now = _CMP_FNS[cond.comparator](telemetry[cond.signal], cond.threshold)
    if not true_now:
        return False, 0.0
    hold = hold + dt
    return hold + _HOLD_SLACK >= cond.persistence, hold


@dataclass
class InterpState:
    current: str = ""
    t_entry: float = 0.0
    started: bool = False
    holds: dict = field(default_factory=dict)
    forced_goto: str | None = None
    flags: set = field(default_factory=set)


def step_sequencer(program: SequenceProgram, interp: InterpState,
                   telemetry: dict, t: float, dt: float) -> list:
    """One interpreter tick; returns the list of emitted actions."""
    if not interp.started:
        interp.started = True
        return _enter(program, interp, program.initial, t)

    if interp.forced_goto is not None:
        target = interp.forced_goto
        interp.forced_goto = None
        return _enter(program, interp, target, t)

    # Global failure handlers first, in declaration order.  A handler does
    # not re-trigger while already in its target state.
    for i, handler in enumerate(program.handlers):
        key = ("g", i)
        fired, interp.holds[key] = check_condition(
            handler.condition, telemetry, interp.holds.get(key, 0.0), dt)
        if fired and interp.current != handler.target:
            interp.holds[key] = 0.0
            return _enter(program, interp, handler.target, t)

    state = program.state(interp.current)
    for i, tr in enumerate(state.transitions):
        if tr.condition is not None:
            key = ("s", state.name, i)
            fired, interp.holds[key] = check_condition(
                tr.condition, telemetry, interp.holds.get(key, 0.0), dt)
            if fired:
                return _enter(program, interp, tr.target, t)
        else:
            if t - interp.t_entry + _HOLD_SLACK >= tr.after:
                return _enter(program, interp, tr.target, t)
    return []


def _enter(program: SequenceProgram, interp: InterpState, target: str,
           t: float) -> list:
    # reset the departing state's local persistence timers
    interp.holds = {k: v for k, v in interp.holds.items()
                    if not (k[0] == "s" and k[1] == interp.current)}
    interp.current = target
    interp.t_entry = t
    actions = list(program.state(target).entry_actions)
    for a in actions:
        if a.kind == "set_flag":
            interp.flags.add(a.args[0])
    return actions


def force_goto(program: SequenceProgram, interp: InterpState, target: str) -> None:
    """Queue an operator-commanded state jump for the next tick."""
    if target not in program.state_names():
        raise UnknownState(target)
    interp.forced_goto = target
