"""Reader and writer for condition-action rule files.

A rule file describes one peripheral in four line-oriented sections::

    Field Name              Address                   Bits
    S1[RDRF]                0x4006a004                   5
    D[R]                    0x4006a007                   *
    ------------------------------------------------------
    Interrupt Source                            IRQ Number
    RDRF                                                31
    ------------------------------------------------------
    DMA Source                                  IRQ Number
    Channel 0 transfer complete                          0
    ------------------------------------------------------
    Rules
    B #D[R] >= RWFIFO[RXWATER]  -> S1[RDRF] := 1
    V S1[RDRF] == 1 & V C2[RIE] == 1 -> IRQ[RDRF] := Ready

``#`` marks a buffer occupancy (it is *not* a comment), ``//`` starts a
comment, dashed lines and ``...`` elision lines are ignored.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

from .errors import DuplicateEntity, RuleSyntaxError, UnknownEntity, WidthOverflow


class EntityKind(enum.Enum):
    FIELD = "field"
    RX_BUFFER = "rx_buffer"
    TX_BUFFER = "tx_buffer"
    RX_OCCUPANCY = "rx_occupancy"
    TX_OCCUPANCY = "tx_occupancy"
    ALWAYS = "always"


@dataclass(frozen=True, order=True)
class EntityRef:
    """A named entity: ``Reg[Field]``, ``D[R]``/``D[T]`` or ``#D[R]``/``#D[T]``."""

    register: str
    field: str
    kind: EntityKind = EntityKind.FIELD

    def __str__(self) -> str:
        if self.kind is EntityKind.ALWAYS:
            return "*"
        prefix = "#" if self.is_occupancy else ""
        if self.register == self.field:
            return prefix + self.register
        return f"{prefix}{self.register}[{self.field}]"

    @property
    def is_buffer(self) -> bool:
        return self.kind in (EntityKind.RX_BUFFER, EntityKind.TX_BUFFER)

    @property
    def is_occupancy(self) -> bool:
        return self.kind in (EntityKind.RX_OCCUPANCY, EntityKind.TX_OCCUPANCY)

    @property
    def side(self) -> str | None:
        """``"rx"``/``"tx"`` for buffer and occupancy entities, else None."""
        if self.kind in (EntityKind.RX_BUFFER, EntityKind.RX_OCCUPANCY):
            return "rx"
        if self.kind in (EntityKind.TX_BUFFER, EntityKind.TX_OCCUPANCY):
            return "tx"
        return None

    def buffer(self) -> EntityRef:
        """The data-buffer entity an occupancy refers to."""
        kind = EntityKind.RX_BUFFER if self.side == "rx" else EntityKind.TX_BUFFER
        return EntityRef(self.register, self.field, kind)


ALWAYS = EntityRef("*", "*", EntityKind.ALWAYS)


class Trigger(enum.Enum):
    B = "B"
    W = "W"
    R = "R"
    V = "V"
    O = "O"


class Op(enum.Enum):
    EQ = "=="
    GE = ">="
    LE = "<="
    GT = ">"
    LT = "<"
    ANY = "*"

    def holds(self, lhs: int, rhs: int | None) -> bool:
        if self is Op.ANY:
            return True
        assert rhs is not None
        if self is Op.EQ:
            return lhs == rhs
        if self is Op.GE:
            return lhs >= rhs
        if self is Op.LE:
            return lhs <= rhs
        if self is Op.GT:
            return lhs > rhs
        return lhs < rhs


class Wildcard:
    """The ``*`` value: matches anything in a condition, binds in an action."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "WILDCARD"

    def __reduce__(self):
        return (Wildcard, ())


WILDCARD = Wildcard()


class RequestState(enum.Enum):
    DISABLE = "Disable"
    ENABLE = "Enable"
    PENDING = "Pending"

    @classmethod
    def parse(cls, text: str) -> RequestState:
        key = text.strip().lower()
        if key == "ready":
            return cls.PENDING
        for state in cls:
            if state.value.lower() == key:
                return state
        raise ValueError(f"not a request state: {text!r}")


Operand = Union[int, EntityRef, Wildcard]


@dataclass(frozen=True)
class Predicate:
    trigger: Trigger
    lhs: EntityRef
    op: Op
    rhs: Operand = WILDCARD

    def entities(self) -> list[EntityRef]:
        out = [self.lhs] if self.lhs.kind is not EntityKind.ALWAYS else []
        if isinstance(self.rhs, EntityRef):
            out.append(self.rhs)
        return out


class ActionKind(enum.Enum):
    FIELD_ASSIGN = "field"
    IRQ_SET = "irq"
    DMA_SET = "dma"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    target: EntityRef | str
    value: int | EntityRef | Wildcard | RequestState


@dataclass(frozen=True)
class Rule:
    id: int
    predicates: tuple[Predicate, ...]
    actions: tuple[Action, ...]
    source: str = field(default="", compare=False)

    @property
    def triggers(self) -> set[Trigger]:
        return {p.trigger for p in self.predicates}

    def __str__(self) -> str:
        return serialize_rule(self)


@dataclass(frozen=True)
class FieldDef:
    """One row of the field table.

    ``bits`` is ``(lo, hi)`` inclusive, or None for a whole-register entity
    (written ``*``).
    """

    entity: EntityRef
    address: int
    bits: tuple[int, int] | None
    access: str | None = None
    reset: int | None = None


@dataclass
class RegisterMap:
    entities: list[FieldDef] = field(default_factory=list)
    irq_sources: list[tuple[str, int]] = field(default_factory=list)
    dma_sources: list[tuple[str, int]] = field(default_factory=list)
    register_width: int = 32

    def find(self, entity: EntityRef) -> FieldDef | None:
        for fd in self.entities:
            if fd.entity == entity:
                return fd
        return None

    def irq_number(self, source: str) -> int | None:
        for name, num in self.irq_sources:
            if name == source:
                return num
        return None

    def dma_completion_irq(self, channel: int) -> int:
        """IRQ raised when ``channel`` finishes; falls back to the channel number."""
        pattern = re.compile(rf"channel\s+{channel}\s+transfer\s+complete", re.I)
        for name, num in self.dma_sources:
            if pattern.fullmatch(name.strip()):
                return num
        return channel


# ---------------------------------------------------------------- parsing

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_ENTITY_RE = re.compile(rf"(#?)({_NAME})(?:\[\s*({_NAME})\s*\])?")
_INT_RE = re.compile(r"0[xX][0-9a-fA-F]+|0[bB][01]+|\d+")
_PRED_OPS = {"==": Op.EQ, ">=": Op.GE, "<=": Op.LE, ">": Op.GT, "<": Op.LT,
             "≥": Op.GE, "≤": Op.LE}
_PRED_RE = re.compile(r"^(\S+?)\s*(==|>=|<=|≥|≤|>|<)\s*(.+)$")
_ACTION_RE = re.compile(r"^(.+?)\s*(:=|==|=)\s*(.+)$")
_REQUEST_RE = re.compile(r"^(IRQ|DMA)\[\s*([^\]]+?)\s*\]$")
_ACCESS = {"RO", "WO", "RW"}


def _parse_int(text: str) -> int:
    low = text.lower()
    if low.startswith(("0x", "0b")):
        return int(low, 0)
    return int(low, 10)


def parse_entity(text: str) -> EntityRef:
    """Parse ``Reg[Field]``, ``NAME``, ``D[R]``, ``#D[T]`` or ``*``."""
    text = text.strip()
    if text == "*":
        return ALWAYS
    m = _ENTITY_RE.fullmatch(text)
    if not m:
        raise ValueError(f"not an entity: {text!r}")
    hash_, reg, fld = m.group(1), m.group(2), m.group(3) or m.group(2)
    if reg == "D" and fld in ("R", "T"):
        if hash_:
            kind = EntityKind.RX_OCCUPANCY if fld == "R" else EntityKind.TX_OCCUPANCY
        else:
            kind = EntityKind.RX_BUFFER if fld == "R" else EntityKind.TX_BUFFER
        return EntityRef(reg, fld, kind)
    if hash_:
        raise ValueError(f"'#' only applies to D[R]/D[T]: {text!r}")
    return EntityRef(reg, fld)


def _parse_operand(text: str) -> Operand:
    text = text.strip()
    if text == "*":
        return WILDCARD
    if _INT_RE.fullmatch(text):
        return _parse_int(text)
    return parse_entity(text)


def _parse_predicate(text: str, inherited: Trigger | None, lineno: int) -> Predicate:
    text = text.strip()
    trigger = inherited
    head, _, rest = text.partition(" ")
    if head in Trigger.__members__ and rest.strip():
        trigger = Trigger[head]
        text = rest.strip()
    elif head in Trigger.__members__ and head == "O" and not rest:
        raise RuleSyntaxError(lineno, "O trigger needs a condition, e.g. 'O *'")
    if trigger is None:
        raise RuleSyntaxError(lineno, f"condition {text!r} has no trigger letter")

    try:
        if text == "*":
            pred = Predicate(trigger, ALWAYS, Op.ANY, WILDCARD)
        else:
            m = _PRED_RE.match(text)
            if m is None:
                # bare 'R/W Reg[Field]' form
                pred = Predicate(trigger, parse_entity(text), Op.ANY, WILDCARD)
            else:
                lhs = parse_entity(m.group(1))
                op = _PRED_OPS[m.group(2)]
                rhs = _parse_operand(m.group(3))
                if rhs is WILDCARD:
                    if op is not Op.EQ:
                        raise RuleSyntaxError(lineno, "'*' only compares with '=='")
                    op = Op.ANY
                pred = Predicate(trigger, lhs, op, rhs)
    except ValueError as exc:
        raise RuleSyntaxError(lineno, str(exc)) from None
    _check_predicate(pred, lineno)
    return pred


def _check_predicate(pred: Predicate, lineno: int) -> None:
    kind = pred.lhs.kind
    if pred.trigger is Trigger.B:
        if not pred.lhs.is_occupancy:
            raise RuleSyntaxError(lineno, "B condition must test #D[R] or #D[T]")
    elif pred.trigger in (Trigger.W, Trigger.R):
        if kind not in (EntityKind.FIELD, EntityKind.RX_BUFFER, EntityKind.TX_BUFFER):
            raise RuleSyntaxError(lineno, f"{pred.trigger.value} condition needs a field or data buffer")
        if pred.trigger is Trigger.W and kind is EntityKind.RX_BUFFER:
            raise RuleSyntaxError(lineno, "firmware writes go to D[T], not D[R]")
        if pred.trigger is Trigger.R and kind is EntityKind.TX_BUFFER:
            raise RuleSyntaxError(lineno, "firmware reads come from D[R], not D[T]")
    elif pred.trigger is Trigger.V:
        if kind is not EntityKind.FIELD:
            raise RuleSyntaxError(lineno, "V condition must test a register field")
    elif pred.trigger is Trigger.O:
        if kind not in (EntityKind.ALWAYS, EntityKind.FIELD):
            raise RuleSyntaxError(lineno, "O condition must be '*' or a field test")
    if kind is EntityKind.ALWAYS and pred.trigger is not Trigger.O:
        raise RuleSyntaxError(lineno, "'*' condition is only valid with O")


def _parse_action(text: str, lineno: int) -> Action:
    m = _ACTION_RE.match(text.strip())
    if m is None:
        raise RuleSyntaxError(lineno, f"malformed action {text.strip()!r}")
    target_text, value_text = m.group(1).strip(), m.group(3).strip()
    req = _REQUEST_RE.match(target_text)
    try:
        if req:
            kind = ActionKind.IRQ_SET if req.group(1) == "IRQ" else ActionKind.DMA_SET
            return Action(kind, req.group(2), RequestState.parse(value_text))
        target = parse_entity(target_text)
        if target.kind is not EntityKind.FIELD:
            raise RuleSyntaxError(lineno, f"cannot assign to {target}")
        return Action(ActionKind.FIELD_ASSIGN, target, _parse_operand(value_text))
    except ValueError as exc:
        raise RuleSyntaxError(lineno, str(exc)) from None


def parse_rule(text: str, rule_id: int = 1, lineno: int = 1) -> Rule:
    """Parse one rule line such as ``B #D[R] >= RWFIFO[RXWATER] -> S1[RDRF] := 1``."""
    body = text.split("//", 1)[0].strip()
    body = body.replace("→", "->")
    if "->" not in body:
        raise RuleSyntaxError(lineno, "rule has no '->'")
    cond_text, action_text = body.split("->", 1)
    if not cond_text.strip() or not action_text.strip():
        raise RuleSyntaxError(lineno, "rule needs conditions and actions")

    preds: list[Predicate] = []
    trigger: Trigger | None = None
    for part in cond_text.split("&"):
        pred = _parse_predicate(part, trigger, lineno)
        trigger = pred.trigger
        preds.append(pred)
    primary = [p.trigger for p in preds if p.trigger in (Trigger.B, Trigger.W, Trigger.R)]
    if len(set(primary)) > 1:
        raise RuleSyntaxError(lineno, "at most one of B/W/R per rule")

    actions = tuple(_parse_action(a, lineno) for a in action_text.split(","))
    return Rule(rule_id, tuple(preds), actions, source=text.split("//", 1)[0].strip())


def _parse_bits(text: str, lineno: int) -> tuple[int, int] | None:
    if text == "*":
        return None
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise RuleSyntaxError(lineno, f"bad bit spec {text!r}") from None
    if lo > hi:
        lo, hi = hi, lo
    return (lo, hi)


def _parse_field_row(line: str, lineno: int) -> FieldDef:
    tokens = line.split()
    if len(tokens) < 3:
        raise RuleSyntaxError(lineno, "field row needs NAME ADDRESS BITS")
    try:
        entity = parse_entity(tokens[0])
    except ValueError as exc:
        raise RuleSyntaxError(lineno, str(exc)) from None
    if entity.is_occupancy or entity.kind is EntityKind.ALWAYS:
        raise RuleSyntaxError(lineno, f"{tokens[0]} cannot be defined in the field table")
    if not tokens[1].lower().startswith("0x"):
        raise RuleSyntaxError(lineno, "addresses must be hex with 0x prefix")
    try:
        address = int(tokens[1], 16)
    except ValueError:
        raise RuleSyntaxError(lineno, f"bad address {tokens[1]!r}") from None
    bits = _parse_bits(tokens[2], lineno)
    access = reset = None
    for tok in tokens[3:]:
        if tok.upper() in _ACCESS:
            access = tok.upper()
        elif tok.lower().startswith("reset="):
            try:
                reset = _parse_int(tok.split("=", 1)[1])
            except ValueError:
                raise RuleSyntaxError(lineno, f"bad reset value {tok!r}") from None
        else:
            raise RuleSyntaxError(lineno, f"unexpected column {tok!r}")
    return FieldDef(entity, address, bits, access, reset)


def _parse_source_row(line: str, lineno: int) -> tuple[str, int]:
    name, _, number = line.rpartition(" ")
    name = " ".join(name.split())
    if not name or not number.isdigit():
        raise RuleSyntaxError(lineno, "source row needs NAME NUMBER")
    return name, int(number)


def _section_of(line: str) -> str | None:
    low = " ".join(line.lower().split())
    if low.startswith("field name") or low == "fields":
        return "fields"
    if low.startswith("interrupt source"):
        return "irq"
    if low.startswith("dma source"):
        return "dma"
    if low == "rules":
        return "rules"
    return None


def _bit_mask(bits: tuple[int, int] | None, width: int) -> int:
    if bits is None:
        return (1 << width) - 1
    lo, hi = bits
    return ((1 << (hi - lo + 1)) - 1) << lo


def parse_rule_file(text: str) -> tuple[RegisterMap, list[Rule]]:
    """Parse a whole rule file into its register map and rules (file order)."""
    regmap = RegisterMap()
    rules: list[Rule] = []
    section: str | None = None
    seen: set[tuple[str, str]] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line or set(line) <= {"-"} or line in ("...", "…"):
            continue
        header = _section_of(line)
        if header is not None:
            section = header
            continue
        if section is None:
            raise RuleSyntaxError(lineno, "content before any section header")
        if section == "fields":
            fd = _parse_field_row(line, lineno)
            key = (fd.entity.register, fd.entity.field)
            if key in seen:
                raise DuplicateEntity(f"line {lineno}: {fd.entity} defined twice")
            seen.add(key)
            regmap.entities.append(fd)
        elif section == "irq":
            regmap.irq_sources.append(_parse_source_row(line, lineno))
        elif section == "dma":
            regmap.dma_sources.append(_parse_source_row(line, lineno))
        else:
            rules.append(parse_rule(raw, len(rules) + 1, lineno))

    _check_overlaps(regmap)
    return regmap, rules


def _check_overlaps(regmap: RegisterMap) -> None:
    by_addr: dict[int, list[FieldDef]] = {}
    for fd in regmap.entities:
        if fd.entity.kind is EntityKind.FIELD:
            by_addr.setdefault(fd.address, []).append(fd)
    for fds in by_addr.values():
        for i, a in enumerate(fds):
            ma = _bit_mask(a.bits, regmap.register_width)
            for b in fds[i + 1:]:
                if ma & _bit_mask(b.bits, regmap.register_width):
                    raise DuplicateEntity(f"{a.entity} and {b.entity} overlap at {a.address:#x}")


# ------------------------------------------------------------ serializing

def _fmt_operand(value) -> str:
    if isinstance(value, Wildcard):
        return "*"
    if isinstance(value, RequestState):
        return value.value
    return str(value)


def _fmt_predicate(p: Predicate) -> str:
    if p.lhs.kind is EntityKind.ALWAYS:
        return f"{p.trigger.value} *"
    if p.op is Op.ANY:
        return f"{p.trigger.value} {p.lhs} == *"
    return f"{p.trigger.value} {p.lhs} {p.op.value} {_fmt_operand(p.rhs)}"


def _fmt_action(a: Action) -> str:
    if a.kind is ActionKind.FIELD_ASSIGN:
        return f"{a.target} := {_fmt_operand(a.value)}"
    tag = "IRQ" if a.kind is ActionKind.IRQ_SET else "DMA"
    return f"{tag}[{a.target}] := {_fmt_operand(a.value)}"


def serialize_rule(rule: Rule) -> str:
    """Canonical text for ``rule``: single spaces, ``:=`` everywhere, ``Ready`` as ``Pending``."""
    conds = " & ".join(_fmt_predicate(p) for p in rule.predicates)
    acts = ", ".join(_fmt_action(a) for a in rule.actions)
    return f"{conds} -> {acts}"


def serialize_rule_file(regmap: RegisterMap, rules: list[Rule]) -> str:
    sep = "-" * 54
    lines = [f"{'Field Name':<24}{'Address':<14}Bits"]
    for fd in regmap.entities:
        if fd.bits is None:
            bits = "*"
        elif fd.bits[0] == fd.bits[1]:
            bits = str(fd.bits[0])
        else:
            bits = f"{fd.bits[0]}-{fd.bits[1]}"
        row = f"{str(fd.entity):<24}{fd.address:#010x}    {bits}"
        if fd.access:
            row += f" {fd.access}"
        if fd.reset is not None:
            row += f" reset={fd.reset:#x}"
        lines.append(row)
    lines += [sep, f"{'Interrupt Source':<44}IRQ Number"]
    lines += [f"{name:<44}{num}" for name, num in regmap.irq_sources]
    if regmap.dma_sources:
        lines += [sep, f"{'DMA Source':<44}IRQ Number"]
        lines += [f"{name:<44}{num}" for name, num in regmap.dma_sources]
    lines += [sep, "Rules"]
    lines += [serialize_rule(r) for r in rules]
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------- resolving

@dataclass(frozen=True)
class FieldLayout:
    entity: EntityRef
    address: int
    mask: int
    shift: int
    access: str | None = None

    @property
    def max_value(self) -> int:
        return self.mask >> self.shift


@dataclass
class ResolvedRuleSet:
    """Rules bound to addresses and masks, with per-trigger dispatch indices."""

    regmap: RegisterMap
    rules: list[Rule]
    layout: dict[EntityRef, FieldLayout]
    on_write: dict[int, list[Rule]] = field(default_factory=dict)
    on_read: dict[int, list[Rule]] = field(default_factory=dict)
    on_buffer: dict[str, list[Rule]] = field(default_factory=dict)
    on_value: dict[EntityRef, list[Rule]] = field(default_factory=dict)
    on_other: list[Rule] = field(default_factory=list)
    position: dict[int, int] = field(default_factory=dict)

    @property
    def irq_names(self) -> list[str]:
        return self._request_names(self.regmap.irq_sources, ActionKind.IRQ_SET)

    @property
    def dma_names(self) -> list[str]:
        return self._request_names(self.regmap.dma_sources, ActionKind.DMA_SET)

    def _request_names(self, table, kind: ActionKind) -> list[str]:
        names = [name for name, _ in table]
        for rule in self.rules:
            for a in rule.actions:
                if a.kind is kind and a.target not in names:
                    names.append(a.target)
        return names

    def address_of(self, side: str) -> int | None:
        kind = EntityKind.RX_BUFFER if side == "rx" else EntityKind.TX_BUFFER
        lay = self.layout.get(EntityRef("D", "R" if side == "rx" else "T", kind))
        return lay.address if lay else None

    @property
    def data_addresses(self) -> set[int]:
        return {a for a in (self.address_of("rx"), self.address_of("tx")) if a is not None}

    def fields_at(self, address: int) -> list[FieldLayout]:
        return [lay for lay in self.layout.values()
                if lay.address == address and lay.entity.kind is EntityKind.FIELD]


def _add(index: dict, key, rule: Rule) -> None:
    bucket = index.setdefault(key, [])
    if not bucket or bucket[-1] is not rule:
        bucket.append(rule)


def resolve_rules(regmap: RegisterMap, rules: list[Rule]) -> ResolvedRuleSet:
    """Bind every entity to (address, mask, shift) and build the trigger indices."""
    width = regmap.register_width
    layout: dict[EntityRef, FieldLayout] = {}
    for fd in regmap.entities:
        mask = _bit_mask(fd.bits, width)
        shift = fd.bits[0] if fd.bits else 0
        layout[fd.entity] = FieldLayout(fd.entity, fd.address, mask, shift, fd.access)
    for side, buf in (("rx", EntityRef("D", "R", EntityKind.RX_BUFFER)),
                      ("tx", EntityRef("D", "T", EntityKind.TX_BUFFER))):
        if buf in layout:
            occ = EntityRef("D", buf.field,
                            EntityKind.RX_OCCUPANCY if side == "rx" else EntityKind.TX_OCCUPANCY)
            lay = layout[buf]
            layout[occ] = FieldLayout(occ, lay.address, lay.mask, 0, "RO")

    def need(entity: EntityRef, rule: Rule) -> FieldLayout | None:
        if entity.kind is EntityKind.ALWAYS:
            return None
        try:
            return layout[entity]
        except KeyError:
            raise UnknownEntity(str(entity), rule.id) from None

    rs = ResolvedRuleSet(regmap, list(rules), layout)
    for pos, rule in enumerate(rules):
        rs.position[rule.id] = pos
        for p in rule.predicates:
            lay = need(p.lhs, rule)
            if isinstance(p.rhs, EntityRef):
                need(p.rhs, rule)
            if p.trigger is Trigger.W:
                _add(rs.on_write, lay.address, rule)
            elif p.trigger is Trigger.R:
                _add(rs.on_read, lay.address, rule)
            elif p.trigger is Trigger.B:
                _add(rs.on_buffer, p.lhs.side, rule)
            elif p.trigger is Trigger.V:
                _add(rs.on_value, p.lhs, rule)
                if isinstance(p.rhs, EntityRef):
                    _add(rs.on_value, p.rhs, rule)
            elif not rs.on_other or rs.on_other[-1] is not rule:
                rs.on_other.append(rule)
        for a in rule.actions:
            if a.kind is not ActionKind.FIELD_ASSIGN:
                continue
            lay = need(a.target, rule)
            if isinstance(a.value, EntityRef):
                need(a.value, rule)
            elif isinstance(a.value, int) and a.value > lay.max_value:
                raise WidthOverflow(
                    f"rule {rule.id}: {a.value} does not fit {a.target} "
                    f"({lay.max_value.bit_length()} bits)", rule.id)
    return rs


# ------------------------------------------------------------- statistics

def condition_type(rule: Rule) -> str:
    """C1 (hardware signal: B/O), C2 (firmware access: W/R) or C3 (internal: V)."""
    trig = rule.triggers
    if trig & {Trigger.B, Trigger.O}:
        return "C1"
    if trig & {Trigger.W, Trigger.R}:
        return "C2"
    return "C3"


def action_type(rule: Rule) -> str:
    kinds = {a.kind for a in rule.actions}
    if ActionKind.DMA_SET in kinds:
        return "A3"
    if ActionKind.IRQ_SET in kinds:
        return "A2"
    return "A1"


def rule_stats(regmap: RegisterMap, rules: list[Rule]) -> dict[str, int]:
    stats: Counter[str] = Counter()
    stats["rules"] = len(rules)
    stats["fields"] = len(regmap.entities)
    stats["irq_sources"] = len(regmap.irq_sources)
    stats["dma_sources"] = len(regmap.dma_sources)
    for key in ("C1", "C2", "C3", "A1", "A2", "A3"):
        stats[key] = 0
    for rule in rules:
        stats[condition_type(rule)] += 1
        stats[action_type(rule)] += 1
        for t in sorted(rule.triggers, key=lambda t: t.value):
            stats[f"trigger_{t.value}"] += 1
    return dict(stats)
