"""Driver compliance checks over a completed access history.

R1: a data-register access in main or interrupt context must be preceded,
since the previous access to the same data register, by a read of its
status guard in the same execution segment. An interrupt handler that
touches the data register between a main-context check and the main
access therefore invalidates that check.

R2: NVIC enable bits and peripheral-local interrupt enables must agree.
R2A is an IRQ enabled in the NVIC with no local enable ever set; R2B is a
local enable with the NVIC bit never set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .machine import AccessRecord, Machine
from .ruledsl import ActionKind, EntityKind, EntityRef, Op, ResolvedRuleSet, Trigger, parse_entity

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Guard:
    peripheral: str
    direction: str  # "read" or "write"
    data_address: int
    entity: EntityRef
    address: int
    value: int


@dataclass
class GuardSpec:
    entries: list[Guard] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def for_access(self, rec: AccessRecord) -> list[Guard]:
        direction = "read" if rec.direction == "R" else "write"
        return [g for g in self.entries
                if g.peripheral == rec.target and g.direction == direction
                and g.data_address == rec.address]


@dataclass(frozen=True)
class Violation:
    rule: str  # R1, R2A, R2B
    peripheral: str
    detail: str
    index: int | None = None

    def line(self) -> str:
        where = "end" if self.index is None else str(self.index)
        return f"{self.rule} {self.peripheral} {self.detail} @{where}"


@dataclass
class ComplianceReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def text(self) -> str:
        return "".join(v.line() + "\n" for v in self.violations)


_READY = {"rx": (Op.GE, Op.GT), "tx": (Op.LE, Op.LT)}


def derive_guards(rules: ResolvedRuleSet, peripheral: str) -> GuardSpec:
    """Status fields that B rules set when a data buffer becomes ready.

    A receive buffer is ready when its occupancy rises past a threshold
    (``>=``/``>``); a transmit buffer when it falls below one (``<=``/``<``).
    """
    spec = GuardSpec()
    has_data = False
    for side, direction in (("rx", "read"), ("tx", "write")):
        data_address = rules.address_of(side)
        if data_address is None:
            continue
        has_data = True
        for rule in rules.on_buffer.get(side, []):
            ready = any(p.trigger is Trigger.B and p.lhs.side == side and p.op in _READY[side]
                        for p in rule.predicates)
            if not ready:
                continue
            for a in rule.actions:
                if a.kind is ActionKind.FIELD_ASSIGN and isinstance(a.value, int):
                    lay = rules.layout[a.target]
                    spec.entries.append(Guard(peripheral, direction, data_address,
                                              a.target, lay.address, a.value))
    if has_data and not spec.entries:
        msg = f"NoGuardDerivable: {peripheral} has data registers but no B rules"
        log.warning(msg)
        spec.warnings.append(msg)
    return spec


def machine_guards(machine: Machine, override: GuardSpec | None = None) -> GuardSpec:
    if override is not None:
        return override
    spec = GuardSpec()
    for p in machine.peripherals:
        sub = derive_guards(p.rules, p.name)
        spec.entries += sub.entries
        spec.warnings += sub.warnings
    return spec


def parse_guards(text: str, machine: Machine) -> GuardSpec:
    """Read a guard override file: ``<periph> <read|write> <Reg[Field]> <value>`` per line."""
    spec = GuardSpec()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        if len(words) != 4 or words[1] not in ("read", "write"):
            raise ValueError(f"guard line {lineno}: expected '<periph> <read|write> <Reg[Field]> <value>'")
        name, direction, ent_text, value = words
        periph = machine.peripheral(name)
        entity = parse_entity(ent_text)
        lay = periph.rules.layout.get(entity)
        if lay is None:
            raise ValueError(f"guard line {lineno}: {name} has no entity {ent_text}")
        data_address = periph.rx_address if direction == "read" else periph.tx_address
        if data_address is None:
            raise ValueError(f"guard line {lineno}: {name} has no data register for {direction}")
        spec.entries.append(Guard(name, direction, data_address, entity, lay.address, int(value, 0)))
    return spec


def check_r1(history: list[AccessRecord], guards: GuardSpec) -> list[Violation]:
    out: list[Violation] = []
    for i, rec in enumerate(history):
        if rec.context == "init":
            continue
        applicable = guards.for_access(rec)
        if not applicable:
            continue
        guard_addresses = {g.address for g in applicable}
        checked = False
        for prev in reversed(history[:i]):
            if prev.context == "init":
                break
            if rec.context == "irq" and prev.segment != rec.segment:
                break
            if (prev.target == rec.target and prev.address == rec.address
                    and prev.direction == rec.direction):
                break
            if (prev.segment == rec.segment and prev.direction == "R"
                    and prev.target == rec.target and prev.address in guard_addresses):
                checked = True
                break
        if not checked:
            direction = "read" if rec.direction == "R" else "write"
            data = "D[R]" if direction == "read" else "D[T]"
            guard_names = "|".join(sorted({str(g.entity) for g in applicable}))
            out.append(Violation("R1", rec.target, f"{direction}:{data}:unchecked:{guard_names}", rec.index))
    return out


def local_enables(rules: ResolvedRuleSet) -> dict[int, set[EntityRef]]:
    """IRQ number -> fields that must hold 1 for some rule to raise that IRQ."""
    out: dict[int, set[EntityRef]] = {}
    for rule in rules.rules:
        for a in rule.actions:
            if a.kind is not ActionKind.IRQ_SET:
                continue
            irq = rules.regmap.irq_number(a.target)
            if irq is None:
                continue
            fields = out.setdefault(irq, set())
            for p in rule.predicates:
                if p.lhs.kind is EntityKind.FIELD and p.op is Op.EQ and p.rhs == 1 and not isinstance(p.rhs, bool):
                    fields.add(p.lhs)
    return out


def _ever_written(history: list[AccessRecord], periph: str, rules: ResolvedRuleSet,
                  entity: EntityRef, value: int) -> bool:
    lay = rules.layout[entity]
    return any(r.direction == "W" and r.target == periph and r.address == lay.address
               and (r.value & lay.mask) >> lay.shift == value for r in history)


def check_r2(history: list[AccessRecord], peripherals: list[tuple[str, ResolvedRuleSet]], iser: int) -> list[Violation]:
    out: list[Violation] = []
    for name, rules in peripherals:
        for irq, fields in sorted(local_enables(rules).items()):
            if not fields:
                continue
            local = sorted(str(f) for f in fields
                           if _ever_written(history, name, rules, f, 1))
            nvic = bool(iser >> irq & 1)
            if nvic and not local:
                out.append(Violation("R2A", name, f"irq{irq}:nvic-enabled:no-local-enable"))
            elif local and not nvic:
                out.append(Violation("R2B", name, f"irq{irq}:local-enable:{'|'.join(local)}:nvic-disabled"))
    return out


def check_machine(machine: Machine, guards: GuardSpec | None = None) -> ComplianceReport:
    spec = machine_guards(machine, guards)
    report = ComplianceReport(warnings=list(spec.warnings))
    report.violations += check_r1(machine.history, spec)
    report.violations += check_r2(machine.history, [(p.name, p.rules) for p in machine.peripherals],
                                  machine.iser)
    return report
