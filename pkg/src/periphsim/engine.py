"""Condition-action rule evaluation and chained execution.

``dispatch`` runs in two phases. Phase one evaluates the rules indexed
under the incoming event (W rules for a firmware write, R rules for a
read, B rules for a buffer change, O rules for a tick) in rule-file order.
Phase two chains: every field changed so far wakes the V rules that
reference it, and the waves repeat until nothing changes. A rule fires at
most once per wave, so a rule set with a cycle hits ``chain_limit`` rather
than spinning forever.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Union

from .errors import ChainLimitExceeded, UnboundWildcard
from .ruledsl import (
    Action,
    ActionKind,
    EntityKind,
    EntityRef,
    Op,
    Predicate,
    RequestState,
    ResolvedRuleSet,
    Rule,
    Trigger,
    Wildcard,
)
from .state import FieldChange, PeripheralState

log = logging.getLogger(__name__)

DEFAULT_CHAIN_LIMIT = 16


@dataclass(frozen=True)
class FirmwareWrite:
    address: int
    value: int
    context: str = "main"


@dataclass(frozen=True)
class FirmwareRead:
    address: int
    value: int
    context: str = "main"


@dataclass(frozen=True)
class BufferChanged:
    side: str
    context: str = "main"


@dataclass(frozen=True)
class Tick:
    context: str = "main"


Event = Union[FirmwareWrite, FirmwareRead, BufferChanged, Tick]


@dataclass(frozen=True)
class Transition:
    source: str
    old: RequestState
    new: RequestState


@dataclass
class Firing:
    """One executed rule (or, with ``rule_id=None``, one raw firmware store)."""

    rule_id: int | None
    changes: list[FieldChange] = field(default_factory=list)
    irq: list[Transition] = field(default_factory=list)
    dma: list[Transition] = field(default_factory=list)
    depth: int = 0
    binding: int | None = None
    context: str = "main"
    peripheral: str = ""
    source: str = ""
    seq: int = 0

    def touches(self, entity: EntityRef) -> bool:
        return any(c.entity == entity for c in self.changes)


@dataclass
class EffectLog:
    entries: list[Firing] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def append(self, firing: Firing) -> None:
        self.entries.append(firing)

    def extend(self, other: EffectLog) -> None:
        self.entries.extend(other.entries)
        self.warnings.extend(other.warnings)

    def fired(self) -> list[int]:
        return [f.rule_id for f in self.entries if f.rule_id is not None]

    def export(self) -> str:
        lines = []
        for f in self.entries:
            rid = "fw" if f.rule_id is None else str(f.rule_id)
            for c in f.changes:
                lines.append(f"{rid}|{c.entity}|{c.old}->{c.new}")
            for t in f.irq:
                lines.append(f"IRQ {t.source} -> {t.new.value}")
            for t in f.dma:
                lines.append(f"DMA {t.source} -> {t.new.value}")
        return "".join(line + "\n" for line in lines)


def _event_value(pred: Predicate, state: PeripheralState, event: Event | None) -> int | None:
    """Value the firmware access carried for ``pred.lhs``, if the event is that access."""
    if pred.trigger is Trigger.W and isinstance(event, FirmwareWrite):
        pass
    elif pred.trigger is Trigger.R and isinstance(event, FirmwareRead):
        pass
    else:
        return None
    lay = state.layout[pred.lhs]
    if lay.address != event.address:
        return None
    return (event.value & lay.mask) >> lay.shift


def _evaluate(state: PeripheralState, pred: Predicate, event: Event | None) -> tuple[bool, int | None]:
    if pred.lhs.kind is EntityKind.ALWAYS:
        return True, None
    bound = _event_value(pred, state, event)
    lhs = bound if bound is not None else state.read_field(pred.lhs)
    rhs = pred.rhs
    if isinstance(rhs, EntityRef):
        rhs = state.read_field(rhs)
    elif isinstance(rhs, Wildcard):
        rhs = None
    return pred.op.holds(lhs, rhs), bound


def eval_predicate(state: PeripheralState, pred: Predicate, event: Event | None = None) -> bool:
    """Test one predicate against the current state (and the triggering access, if any)."""
    return _evaluate(state, pred, event)[0]


def apply_action(
    state: PeripheralState, action: Action, binding: int | None = None
) -> tuple[list[FieldChange], list[Transition], list[Transition]]:
    """Execute one action; returns (field changes, IRQ transitions, DMA transitions)."""
    if action.kind is ActionKind.FIELD_ASSIGN:
        target = action.target
        max_value = state.layout[target].max_value
        value = action.value
        if isinstance(value, Wildcard):
            if binding is None:
                raise UnboundWildcard(f"'*' assigned to {target} outside a W/R firing")
            value = binding & max_value
        elif isinstance(value, EntityRef):
            value = state.read_field(value) & max_value
        old = state.read_field(target)
        state.write_field(target, value)
        return [FieldChange(target, old, value)], [], []

    table = state.irq if action.kind is ActionKind.IRQ_SET else state.dma
    old = table.get(action.target, RequestState.ENABLE)
    table[action.target] = action.value
    trans = [Transition(action.target, old, action.value)]
    if action.kind is ActionKind.IRQ_SET:
        return [], trans, []
    return [], [], trans


def _try_fire(
    state: PeripheralState, rule: Rule, event: Event | None, depth: int, context: str,
    peripheral: str, clock: Callable[[], int],
) -> Firing | None:
    binding = None
    for pred in rule.predicates:
        ok, bound = _evaluate(state, pred, event)
        if not ok:
            return None
        if bound is not None and binding is None and pred.op is Op.ANY:
            binding = bound
    firing = Firing(rule.id, depth=depth, binding=binding, context=context,
                    peripheral=peripheral, source=rule.source or str(rule), seq=clock())
    for action in rule.actions:
        changes, irq, dma = apply_action(state, action, binding)
        firing.changes += changes
        firing.irq += irq
        firing.dma += dma
    return firing


def _phase_one_rules(state: PeripheralState, rules: ResolvedRuleSet, event: Event) -> list[Rule]:
    if isinstance(event, FirmwareWrite):
        return rules.on_write.get(event.address, [])
    if isinstance(event, FirmwareRead):
        return rules.on_read.get(event.address, [])
    if isinstance(event, BufferChanged):
        return rules.on_buffer.get(event.side, [])
    return rules.on_other


def dispatch(
    state: PeripheralState,
    rules: ResolvedRuleSet,
    event: Event,
    chain_limit: int = DEFAULT_CHAIN_LIMIT,
    clock: Callable[[], int] | None = None,
    peripheral: str = "",
) -> EffectLog:
    """Deliver ``event`` to one peripheral and run chained rules to a fixpoint.

    A ``FirmwareWrite`` to a non-data register stores the raw value first
    (logged as a ``rule_id=None`` firing); the fields it changed seed the
    first V wave together with whatever phase-one rules changed.
    """
    if clock is None:
        clock = itertools.count().__next__
    out = EffectLog()
    ctx = event.context
    changed: dict[EntityRef, None] = {}

    if isinstance(event, FirmwareWrite) and event.address not in rules.data_addresses:
        changes, violations = state.store(event.address, event.value, rules.fields_at(event.address))
        for entity in violations:
            msg = f"AccessViolation: firmware write to read-only {entity}"
            log.warning(msg)
            out.warnings.append(msg)
        out.append(Firing(None, changes, context=ctx, peripheral=peripheral,
                          source=f"write {event.address:#x}={event.value:#x}", seq=clock()))
        changed.update((c.entity, None) for c in changes if c.changed)

    for rule in _phase_one_rules(state, rules, event):
        firing = _try_fire(state, rule, event, 0, ctx, peripheral, clock)
        if firing is not None:
            out.append(firing)
            changed.update((c.entity, None) for c in firing.changes if c.changed)

    depth = 0
    while changed:
        depth += 1
        if depth > chain_limit:
            exc = ChainLimitExceeded(chain_limit)
            exc.log = out
            raise exc
        woken: dict[int, Rule] = {}
        for entity in changed:
            for rule in rules.on_value.get(entity, ()):
                woken[rule.id] = rule
        changed = {}
        for rule in sorted(woken.values(), key=lambda r: rules.position[r.id]):
            firing = _try_fire(state, rule, None, depth, ctx, peripheral, clock)
            if firing is not None:
                out.append(firing)
                changed.update((c.entity, None) for c in firing.changes if c.changed)
    return out
