"""Scripted firmware surrogate.

A script drives the machine through MMIO accesses the way a driver would::

    @init
    write 0x4006a015 0x01          # RWFIFO: watermark 1
    write 0x4006a003 0x20          # C2: RIE
    write 0xe000e100 0x80000000    # NVIC ISER0: IRQ 31
    @main
    feed uart0 41
    wait 31 max 20
    @irq 31
    read 0x4006a004
    read 0x4006a007 expect 0x41

Step forms: ``read ADDR [expect V]``, ``write ADDR V``, ``feed PERIPH HEX``,
``wait IRQ [max N]``, ``tick [N]``, ``label NAME``,
``poll ADDR mask M eq V [max N]`` and ``loop N { ... }`` (multi-line, or
inline with ``;`` between steps).

After every firmware step the machine ticks once and a dispatched IRQ runs
its handler to completion before the next step. ``feed`` and ``label`` are
not firmware instructions and do not tick. Interrupts are only delivered
from the main context.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .errors import ChainLimitExceeded, Overflow, ScriptSyntaxError, UnknownDirective
from .machine import Machine


@dataclass(frozen=True)
class Read:
    line: int
    address: int
    expect: int | None = None


@dataclass(frozen=True)
class Write:
    line: int
    address: int
    value: int


@dataclass(frozen=True)
class FeedRx:
    line: int
    peripheral: str
    data: bytes


@dataclass(frozen=True)
class WaitIrq:
    line: int
    irq: int
    max_steps: int | None = None


@dataclass(frozen=True)
class TickN:
    line: int
    count: int = 1


@dataclass(frozen=True)
class Label:
    line: int
    name: str


@dataclass(frozen=True)
class PollUntil:
    line: int
    address: int
    mask: int
    value: int
    max_steps: int | None = None


@dataclass(frozen=True)
class LoopN:
    line: int
    count: int
    body: tuple


Step = Union[Read, Write, FeedRx, WaitIrq, TickN, Label, PollUntil, LoopN]


@dataclass
class Handler:
    line: int
    steps: list[Step] = field(default_factory=list)


@dataclass
class Script:
    name: str = "script"
    init: list[Step] = field(default_factory=list)
    main: list[Step] = field(default_factory=list)
    handlers: dict[int, Handler] = field(default_factory=dict)
    labels: dict[str, int] = field(default_factory=dict)


# ---------------------------------------------------------------- parsing

_INT = r"(0[xX][0-9a-fA-F]+|\d+)"


def _num(text: str, lineno: int) -> int:
    try:
        return int(text, 16) if text.lower().startswith("0x") else int(text, 10)
    except ValueError:
        raise ScriptSyntaxError(lineno, f"bad number {text!r}") from None


def _feed_bytes(text: str, lineno: int) -> bytes:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] == '"':
        return text[1:-1].encode("latin-1")
    try:
        return bytes.fromhex(text.replace("0x", "").replace(",", " "))
    except ValueError:
        raise ScriptSyntaxError(lineno, f"feed data must be hex bytes or \"text\": {text!r}") from None


def _parse_step(text: str, lineno: int) -> Step:
    words = text.split()
    op, args = words[0].lower(), words[1:]

    def arg_after(keyword: str) -> int | None:
        if keyword in args:
            i = args.index(keyword)
            if i + 1 >= len(args):
                raise ScriptSyntaxError(lineno, f"'{keyword}' needs a value")
            return _num(args[i + 1], lineno)
        return None

    if op == "read":
        if len(args) not in (1, 3) or (len(args) == 3 and args[1] != "expect"):
            raise ScriptSyntaxError(lineno, "read ADDR [expect VALUE]")
        return Read(lineno, _num(args[0], lineno), arg_after("expect"))
    if op == "write":
        if len(args) != 2:
            raise ScriptSyntaxError(lineno, "write ADDR VALUE")
        return Write(lineno, _num(args[0], lineno), _num(args[1], lineno))
    if op == "feed":
        if len(args) < 2:
            raise ScriptSyntaxError(lineno, "feed PERIPH HEXBYTES")
        rest = text.split(None, 2)[2]
        return FeedRx(lineno, args[0], _feed_bytes(rest, lineno))
    if op == "wait":
        if len(args) not in (1, 3):
            raise ScriptSyntaxError(lineno, "wait IRQ [max N]")
        return WaitIrq(lineno, _num(args[0], lineno), arg_after("max"))
    if op == "tick":
        count = _num(args[0], lineno) if args else 1
        if count < 1:
            raise ScriptSyntaxError(lineno, "tick count must be >= 1")
        return TickN(lineno, count)
    if op == "label":
        if len(args) != 1:
            raise ScriptSyntaxError(lineno, "label NAME")
        return Label(lineno, args[0])
    if op == "poll":
        m = re.fullmatch(rf"poll\s+{_INT}\s+mask\s+{_INT}\s+eq\s+{_INT}(?:\s+max\s+{_INT})?",
                         text.strip(), re.I)
        if m is None:
            raise ScriptSyntaxError(lineno, "poll ADDR mask M eq V [max N]")
        a, mk, v, mx = m.groups()
        return PollUntil(lineno, _num(a, lineno), _num(mk, lineno), _num(v, lineno),
                         _num(mx, lineno) if mx else None)
    raise UnknownDirective(lineno, f"unknown step {words[0]!r}")


def _check_no_wait(steps, lineno: int, where: str) -> None:
    for step in steps:
        if isinstance(step, WaitIrq):
            raise ScriptSyntaxError(step.line, f"'wait' is not allowed in {where}")
        if isinstance(step, LoopN):
            _check_no_wait(step.body, lineno, where)


def parse_script(text: str, name: str = "script") -> Script:
    script = Script(name=name)
    target: list | None = None
    section = None
    stack: list[tuple[int, int, list]] = []  # (line, count, outer body)

    def add(step: Step) -> None:
        if target is None:
            raise ScriptSyntaxError(step.line, "step outside a section")
        if isinstance(step, Label):
            if step.name in script.labels:
                raise ScriptSyntaxError(step.line, f"duplicate label {step.name!r}")
            script.labels[step.name] = step.line
        target.append(step)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@"):
            if stack:
                raise ScriptSyntaxError(lineno, "section marker inside a loop")
            words = line.split()
            if words[0] == "@init" and len(words) == 1:
                section, target = "init", script.init
            elif words[0] == "@main" and len(words) == 1:
                section, target = "main", script.main
            elif words[0] == "@irq" and len(words) == 2:
                irq = _num(words[1], lineno)
                if irq in script.handlers:
                    raise ScriptSyntaxError(lineno, f"duplicate handler for IRQ {irq}")
                handler = Handler(lineno)
                script.handlers[irq] = handler
                section, target = "irq", handler.steps
            else:
                raise UnknownDirective(lineno, f"unknown section {line!r}")
            continue

        m = re.fullmatch(r"loop\s+(\S+)\s*\{(.*)", line, re.I)
        if m:
            count = _num(m.group(1), lineno)
            if count < 1:
                raise ScriptSyntaxError(lineno, "loop count must be >= 1")
            inline = m.group(2).strip()
            if inline:
                if not inline.endswith("}"):
                    raise ScriptSyntaxError(lineno, "inline loop must end with '}'")
                body = tuple(_parse_step(s, lineno) for s in inline[:-1].split(";") if s.strip())
                add(LoopN(lineno, count, body))
            else:
                if target is None:
                    raise ScriptSyntaxError(lineno, "loop outside a section")
                stack.append((lineno, count, target))
                target = []
            continue
        if line == "}":
            if not stack:
                raise ScriptSyntaxError(lineno, "unmatched '}'")
            loop_line, count, outer = stack.pop()
            body, target = tuple(target), outer
            target.append(LoopN(loop_line, count, body))
            continue
        add(_parse_step(line, lineno))

    if stack:
        raise ScriptSyntaxError(stack[-1][0], "unterminated loop")
    _check_no_wait(script.init, 0, "@init")
    for handler in script.handlers.values():
        _check_no_wait(handler.steps, handler.line, "an interrupt handler")
    return script


# ----------------------------------------------------------------- traces

CONTEXTS = ("init", "main", "irq")


@dataclass(frozen=True)
class TraceEvent:
    step_id: str
    context: str
    history_mark: int = field(default=0, compare=False)


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def export(self) -> str:
        return "".join(f"{e.context}|{e.step_id}\n" for e in self.events)

    @classmethod
    def from_text(cls, text: str) -> Trace:
        events = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            ctx, sep, sym = line.partition("|")
            if not sep or ctx not in CONTEXTS:
                raise ValueError(f"trace line {lineno}: expected 'context|symbol', got {line!r}")
            events.append(TraceEvent(sym, ctx))
        return cls(events)


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # mismatch, timeout, unhandled, overflow, abort
    step_id: str
    detail: str = ""
    history_index: int | None = None
    expected: int | None = None
    actual: int | None = None

    def line(self) -> str:
        return f"{self.kind} {self.step_id} {self.detail}".rstrip()


@dataclass
class RunResult:
    trace: Trace
    machine: Machine
    diagnostics: list[Diagnostic]
    error: Exception | None = None

    @property
    def mismatches(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.kind == "mismatch"]

    @property
    def timeouts(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.kind == "timeout"]


class _Runner:
    def __init__(self, machine: Machine, script: Script):
        self.machine = machine
        self.script = script
        self.trace = Trace()
        self.diags: list[Diagnostic] = []
        self.max_steps = machine.config.max_steps_per_wait
        self.next_segment = 2

    def emit(self, step_id: str, context: str) -> None:
        self.trace.events.append(TraceEvent(step_id, context, len(self.machine.history)))

    def sid(self, line: int, iters: tuple[int, ...]) -> str:
        return f"{self.script.name}:{line}#{'.'.join(map(str, iters)) if iters else 0}"

    def after_step(self, context: str) -> None:
        if context != "main":
            self.machine.step(context, deliver=False)
            return
        irq = self.machine.step(context)
        if irq is not None:
            self.run_handler(irq)

    def run_handler(self, irq: int) -> None:
        handler = self.script.handlers.get(irq)
        if handler is None:
            self.diags.append(Diagnostic("unhandled", f"irq{irq}", f"no handler for IRQ {irq}"))
            return
        outer = self.machine.segment
        self.machine.segment = self.next_segment
        self.next_segment += 1
        base = f"{self.script.name}:{handler.line}"
        self.emit(f"{base}#enter", "irq")
        self.run_steps(handler.steps, "irq", ())
        self.emit(f"{base}#exit", "irq")
        self.machine.segment = outer

    def run_steps(self, steps, context: str, iters: tuple[int, ...]) -> None:
        for step in steps:
            self.run_step(step, context, iters)

    def read(self, step, sid: str, context: str) -> int:
        value = self.machine.mmio_read(step.address, context)
        expect = getattr(step, "expect", None)
        if expect is not None and value != expect:
            self.diags.append(Diagnostic(
                "mismatch", sid, f"read {step.address:#x}: expected {expect:#x}, got {value:#x}",
                len(self.machine.history) - 1, expect, value))
        return value

    def run_step(self, step: Step, context: str, iters: tuple[int, ...]) -> None:
        if isinstance(step, LoopN):
            for i in range(step.count):
                self.run_steps(step.body, context, iters + (i,))
            return
        sid = self.sid(step.line, iters)
        m = self.machine
        if isinstance(step, Label):
            self.emit(sid, context)
        elif isinstance(step, FeedRx):
            self.emit(sid, context)
            try:
                m.feed(step.peripheral, step.data, context)
            except Overflow as exc:
                self.diags.append(Diagnostic("overflow", sid, str(exc)))
        elif isinstance(step, Read):
            self.emit(sid, context)
            self.read(step, sid, context)
            self.after_step(context)
        elif isinstance(step, Write):
            self.emit(sid, context)
            m.mmio_write(step.address, step.value, context)
            self.after_step(context)
        elif isinstance(step, TickN):
            self.emit(sid, context)
            for _ in range(step.count):
                self.after_step(context)
        elif isinstance(step, PollUntil):
            limit = step.max_steps or self.max_steps
            for _ in range(limit):
                self.emit(sid, context)
                value = m.mmio_read(step.address, context)
                self.after_step(context)
                if value & step.mask == step.value:
                    break
            else:
                self.diags.append(Diagnostic(
                    "timeout", sid, f"poll {step.address:#x} & {step.mask:#x} != {step.value:#x}"))
        elif isinstance(step, WaitIrq):
            self.emit(sid, context)
            for _ in range(step.max_steps or self.max_steps):
                irq = m.step(context)
                if irq is not None:
                    self.run_handler(irq)
                    if irq == step.irq:
                        break
            else:
                self.diags.append(Diagnostic("timeout", sid, f"IRQ {step.irq} never dispatched"))


def run(machine: Machine, script: Script) -> RunResult:
    """Execute ``script`` on ``machine``; init first, then main.

    Expect mismatches and wait/poll timeouts become diagnostics. A rule
    cycle (ChainLimitExceeded) stops the run and is returned as ``error``
    with the partial trace.
    """
    runner = _Runner(machine, script)
    error = None
    try:
        machine.segment = 0
        runner.run_steps(script.init, "init", ())
        machine.segment = 1
        runner.run_steps(script.main, "main", ())
    except ChainLimitExceeded as exc:
        error = exc
        runner.diags.append(Diagnostic("abort", "-", str(exc)))
    return RunResult(runner.trace, machine, runner.diags, error)
