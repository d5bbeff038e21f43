"""Plain-text pulse programs (``.ips``): parser, pretty-printer and scheduler.

Grammar, one statement per line, ``#`` starts a comment::

    init SD n=0
    pulse carrier ion=1 theta=0.5pi phi=0
    pulse blue ion=2 theta=1pi phi=0.5pi
    wait 15us
    gate phase ion=2
    gate cnot1 ion=2
    gate czcnot control=1 target=2
    gate spinecho deflection=1.0um phi=0.25pi
    measure

Angles are decimals with an optional ``pi`` suffix, multiplied at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .gates import SETTLE_TIME, Sequence, cnot_single_ion, composite_phase_gate, cz_cnot, spin_echo
from .pulses import AddressingModel, Pulse, PulseKind, RabiConfig

_NUMBER = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_ANGLE_RE = re.compile(rf"^({_NUMBER})?(pi)?$", re.ASCII)
_NUMBER_RE = re.compile(rf"^{_NUMBER}$", re.ASCII)
_INT_RE = re.compile(r"^\d+$", re.ASCII)
_QUBITS_RE = re.compile(r"^[SD]+$", re.ASCII)
_TOKEN_RE = re.compile(r"\S+")

GATE_ARGS = {
    "phase": ("ion",),
    "cnot1": ("ion",),
    "czcnot": ("control", "target"),
    "spinecho": ("deflection", "phi"),
}
_GATE_OPTIONAL = {"spinecho": ("ion",)}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ProgramError(Exception):
    """Raised with one or more positioned diagnostics; no partial program is returned."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Angle:
    coefficient: float
    pi: bool = False

    @property
    def radians(self) -> float:
        return self.coefficient * np.pi if self.pi else self.coefficient

    def __str__(self):
        return f"{self.coefficient!r}pi" if self.pi else repr(self.coefficient)


@dataclass(frozen=True)
class Init:
    qubits: str
    n: int
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def __str__(self):
        return f"init {self.qubits} n={self.n}"


@dataclass(frozen=True)
class PulseStmt:
    kind: str
    ion: int
    theta: Angle
    phi: Angle
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def __str__(self):
        return f"pulse {self.kind} ion={self.ion} theta={self.theta} phi={self.phi}"


@dataclass(frozen=True)
class WaitStmt:
    microseconds: float
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def __str__(self):
        return f"wait {self.microseconds!r}us"


@dataclass(frozen=True)
class GateStmt:
    name: str
    args: tuple  # ((key, value), ...) in canonical key order
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def arg(self, key, default=None):
        return dict(self.args).get(key, default)

    def __str__(self):
        parts = []
        for k, v in self.args:
            if k == "deflection":
                parts.append(f"{k}={v!r}um")
            else:
                parts.append(f"{k}={v}")
        return " ".join(["gate", self.name] + parts)


@dataclass(frozen=True)
class MeasureStmt:
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def __str__(self):
        return "measure"


@dataclass(frozen=True)
class Program:
    statements: tuple

    @property
    def init(self) -> Init:
        return self.statements[0]

    @property
    def num_ions(self) -> int:
        return len(self.init.qubits)

    @property
    def has_measure(self) -> bool:
        return isinstance(self.statements[-1], MeasureStmt)

    def __len__(self):
        return len(self.statements)


def format_program(program: Program) -> str:
    return "\n".join(str(s) for s in program.statements) + "\n"


class _Line:
    def __init__(self, lineno: int, text: str, diags: list):
        self.lineno = lineno
        self.tokens = [(m.group(), m.start() + 1) for m in _TOKEN_RE.finditer(text)]
        self.diags = diags
        self.ok = True

    def error(self, column: int, message: str):
        self.diags.append(Diagnostic(self.lineno, column, message))
        self.ok = False

    def keyvals(self, tokens, allowed, required):
        """Parse ``key=value`` tokens into {key: (value, column)}."""
        out = {}
        for tok, col in tokens:
            key, eq, val = tok.partition("=")
            if not eq or not key:
                self.error(col, f"expected key=value, got {tok!r}")
                continue
            if key not in allowed:
                self.error(col, f"unknown argument {key!r}")
                continue
            if key in out:
                self.error(col, f"duplicate argument {key!r}")
                continue
            out[key] = (val, col + len(key) + 1)
        for key in required:
            if key not in out and self.ok:
                col = tokens[-1][1] if tokens else self.tokens[0][1]
                self.error(col, f"missing argument {key!r}")
        return out

    def integer(self, val, col, what, minimum=0):
        if not _INT_RE.match(val):
            self.error(col, f"malformed integer for {what}: {val!r}")
            return None
        v = int(val)
        if v < minimum:
            self.error(col, f"{what} must be >= {minimum}")
            return None
        return v

    def angle(self, val, col, what, nonneg=False):
        m = _ANGLE_RE.match(val)
        if not val or not m or (m.group(1) is None and m.group(2) is None):
            self.error(col, f"malformed angle for {what}: {val!r}")
            return None
        coef = float(m.group(1)) if m.group(1) is not None else 1.0
        if not math.isfinite(coef):
            self.error(col, f"angle out of range for {what}: {val!r}")
            return None
        if nonneg and coef < 0:
            self.error(col, f"{what} must be non-negative")
            return None
        return Angle(coef, m.group(2) is not None)

    def number_with_unit(self, val, col, unit, what):
        if not val.endswith(unit) or not _NUMBER_RE.match(val[: -len(unit)]):
            self.error(col, f"malformed {what}: expected <number>{unit}, got {val!r}")
            return None
        v = float(val[: -len(unit)])
        if not math.isfinite(v):
            self.error(col, f"{what} out of range: {val!r}")
            return None
        return v


def _parse_line(ln: _Line):
    (kw, kcol), rest = ln.tokens[0], ln.tokens[1:]
    pos = dict(line=ln.lineno, column=kcol)
    if kw == "init":
        if not rest:
            ln.error(kcol, "init needs a qubit string and n=<int>")
            return None
        q, qcol = rest[0]
        if not _QUBITS_RE.match(q):
            ln.error(qcol, f"qubit string must consist of S and D, got {q!r}")
            return None
        kv = ln.keyvals(rest[1:], ("n",), ("n",))
        if not ln.ok:
            return None
        n = ln.integer(*kv["n"], "n")
        return Init(q, n, **pos) if ln.ok else None
    if kw == "pulse":
        if not rest:
            ln.error(kcol, "pulse needs a kind (carrier or blue)")
            return None
        kind, kindcol = rest[0]
        if kind not in ("carrier", "blue"):
            ln.error(kindcol, f"unknown pulse kind {kind!r}")
            return None
        kv = ln.keyvals(rest[1:], ("ion", "theta", "phi"), ("ion", "theta", "phi"))
        if not ln.ok:
            return None
        ion = ln.integer(*kv["ion"], "ion", minimum=1)
        theta = ln.angle(*kv["theta"], "theta", nonneg=True)
        phi = ln.angle(*kv["phi"], "phi")
        return PulseStmt(kind, ion, theta, phi, **pos) if ln.ok else None
    if kw == "wait":
        if len(rest) != 1:
            ln.error(kcol, "wait takes exactly one duration like 15us")
            return None
        us = ln.number_with_unit(rest[0][0], rest[0][1], "us", "duration")
        if ln.ok and us < 0:
            ln.error(rest[0][1], "duration must be non-negative")
        return WaitStmt(us, **pos) if ln.ok else None
    if kw == "gate":
        if not rest:
            ln.error(kcol, "gate needs a name")
            return None
        name, ncol = rest[0]
        if name not in GATE_ARGS:
            ln.error(ncol, f"unknown gate {name!r}")
            return None
        required = GATE_ARGS[name]
        allowed = required + _GATE_OPTIONAL.get(name, ())
        kv = ln.keyvals(rest[1:], allowed, required)
        if not ln.ok:
            return None
        args = []
        for key in allowed:
            if key not in kv:
                continue
            val, col = kv[key]
            if key == "deflection":
                v = ln.number_with_unit(val, col, "um", "deflection")
            elif key == "phi":
                v = ln.angle(val, col, "phi")
            else:
                v = ln.integer(val, col, key, minimum=1)
            args.append((key, v))
        return GateStmt(name, tuple(args), **pos) if ln.ok else None
    if kw == "measure":
        if rest:
            ln.error(rest[0][1], "measure takes no arguments")
            return None
        return MeasureStmt(**pos)
    ln.error(kcol, f"unknown keyword {kw!r}")
    return None


def _decode(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8")
    except UnicodeDecodeError as e:
        head = bytes(data)[: e.start]
        line = head.count(b"\n") + 1
        col = e.start - (head.rfind(b"\n") + 1) + 1
        raise ProgramError([Diagnostic(line, col, "invalid UTF-8 byte")]) from None


def parse_program(text) -> Program:
    """Parse program text (``str`` or UTF-8 ``bytes``); raise :class:`ProgramError` on failure."""
    text = _decode(text)
    diags: list[Diagnostic] = []
    stmts = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        raw = raw[:-1] if raw.endswith("\r") else raw
        body = raw.split("#", 1)[0]
        ln = _Line(lineno, body, diags)
        if not ln.tokens:
            continue
        stmt = _parse_line(ln)
        if stmt is not None:
            stmts.append(stmt)
    inits = [s for s in stmts if isinstance(s, Init)]
    if not diags:
        if not inits:
            diags.append(Diagnostic(1, 1, "missing init"))
        else:
            for extra in inits[1:]:
                diags.append(Diagnostic(extra.line, extra.column, "duplicate init"))
            if not isinstance(stmts[0], Init):
                diags.append(Diagnostic(inits[0].line, inits[0].column,
                                        "init must come before any other statement"))
        for s in stmts[:-1]:
            if isinstance(s, MeasureStmt):
                diags.append(Diagnostic(s.line, s.column, "measure must be the last statement"))
    if diags:
        raise ProgramError(sorted(diags, key=lambda d: (d.line, d.column)))
    return Program(tuple(stmts))


def schedule(program: Program, rabi: RabiConfig = RabiConfig(), settle: float = SETTLE_TIME,
             addressing: AddressingModel | None = None) -> Sequence:
    """Expand macros, assign durations and insert settle waits on ion retargets."""
    addressing = addressing or AddressingModel()
    num_ions = program.num_ions
    diags = []

    def check_ion(stmt, ion):
        if not 1 <= ion <= num_ions:
            diags.append(Diagnostic(stmt.line, stmt.column,
                                    f"ion {ion} outside register of {num_ions} ion(s)"))
            return False
        return True

    pulses = []
    for s in program.statements[1:]:
        if isinstance(s, PulseStmt):
            if check_ion(s, s.ion):
                kind = PulseKind.CARRIER if s.kind == "carrier" else PulseKind.BLUE
                pulses.append(Pulse.make(kind, s.ion, s.theta.radians, s.phi.radians, rabi))
        elif isinstance(s, WaitStmt):
            pulses.append(Pulse.wait(s.microseconds * 1e-6))
        elif isinstance(s, GateStmt):
            if s.name in ("phase", "cnot1"):
                ion = s.arg("ion")
                if check_ion(s, ion):
                    build = composite_phase_gate if s.name == "phase" else cnot_single_ion
                    pulses.extend(build(ion, rabi).pulses)
            elif s.name == "czcnot":
                c, t = s.arg("control"), s.arg("target")
                if check_ion(s, c) and check_ion(s, t):
                    if c == t:
                        diags.append(Diagnostic(s.line, s.column, "control and target must differ"))
                    else:
                        pulses.extend(cz_cnot(c, t, rabi, settle_time=0.0).pulses)
            elif s.name == "spinecho":
                ion = s.arg("ion", 1)
                if num_ions != 1:
                    diags.append(Diagnostic(s.line, s.column, "spinecho needs a single-ion register"))
                elif check_ion(s, ion):
                    seq = spin_echo(s.arg("deflection") * 1e-6, s.arg("phi").radians, addressing, rabi, ion)
                    pulses.extend(seq.pulses)
    if diags:
        raise ProgramError(diags)
    return Sequence.build(pulses, settle)
