from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import rules_from, uart_rules, uart_text
from periphsim.errors import DuplicateEntity, RuleSyntaxError, UnknownEntity, WidthOverflow
from periphsim.ruledsl import (
    ALWAYS,
    WILDCARD,
    Action,
    ActionKind,
    EntityKind,
    EntityRef,
    FieldDef,
    Op,
    Predicate,
    RegisterMap,
    RequestState,
    Rule,
    Trigger,
    action_type,
    condition_type,
    parse_entity,
    parse_rule,
    parse_rule_file,
    resolve_rules,
    rule_stats,
    serialize_rule,
    serialize_rule_file,
)

RDRF = parse_entity("S1[RDRF]")
RXWATER = parse_entity("RWFIFO[RXWATER]")


def test_parse_b_rule():
    rule = parse_rule("B #D[R] >= RWFIFO[RXWATER] -> S1[RDRF] := 1")
    rx_occ = EntityRef("D", "R", EntityKind.RX_OCCUPANCY)
    assert rule.predicates == (Predicate(Trigger.B, rx_occ, Op.GE, RXWATER),)
    assert rule.actions == (Action(ActionKind.FIELD_ASSIGN, RDRF, 1),)


def test_parse_mirror_rule_without_space_before_arrow():
    rule = parse_rule("W C2[TIE] == *-> C2[TIE] = *")
    tie = parse_entity("C2[TIE]")
    assert rule.predicates == (Predicate(Trigger.W, tie, Op.ANY, WILDCARD),)
    assert rule.actions == (Action(ActionKind.FIELD_ASSIGN, tie, WILDCARD),)


def test_ready_is_pending():
    rule = parse_rule("V S1[RDRF] == 1 & V C2[RIE] == 1 & V C5[RDMAS] == 0 -> IRQ[RDRF] := Ready")
    assert rule.actions == (Action(ActionKind.IRQ_SET, "RDRF", RequestState.PENDING),)
    assert len(rule.predicates) == 3


def test_double_equals_action_is_assignment():
    rule = parse_rule("O * -> RCFIFO[RXCOUNT] == #D[R]")
    assert rule.predicates[0].lhs == ALWAYS
    assert rule.actions[0].kind is ActionKind.FIELD_ASSIGN
    assert rule.actions[0].value == EntityRef("D", "R", EntityKind.RX_OCCUPANCY)


def test_conjunction_serializes_with_ampersand():
    text = "V S1[RDRF] == 1 & V C2[RIE] == 1 & V C5[RDMAS] == 0 -> IRQ[RDRF] := Pending"
    assert serialize_rule(parse_rule(text)) == text


@pytest.mark.parametrize("bad, why", [
    ("B S1[RDRF] == 1 -> S1[TC] := 1", "B condition"),
    ("W D[R] == * -> S1[TC] := 1", "not D\\[R\\]"),
    ("R D[T] == * -> S1[TC] := 1", "not D\\[T\\]"),
    ("V #D[R] == 1 -> S1[TC] := 1", "V condition"),
    ("V * -> S1[TC] := 1", "V condition"),
    ("B #D[R] > 0 & W C2[TIE] == * -> S1[TC] := 1", "at most one"),
    ("V S1[TC] == 1", "no '->'"),
    ("S1[TC] == 1 -> S1[TC] := 0", "no trigger"),
    ("V S1[TC] > * -> S1[TC] := 0", "only compares"),
])
def test_syntax_errors_carry_line(bad, why):
    with pytest.raises(RuleSyntaxError, match=why) as exc:
        parse_rule(bad, lineno=7)
    assert exc.value.line == 7


def test_uart_file_parses():
    regmap, rules = parse_rule_file(uart_text())
    assert len(rules) == 24
    assert len(regmap.entities) == 25
    assert ("RDRF", 31) in regmap.irq_sources
    assert regmap.dma_completion_irq(0) == 0
    assert regmap.dma_completion_irq(1) == 1
    assert [r.id for r in rules] == list(range(1, 25))


def test_uart_round_trip_per_rule():
    _, rules = parse_rule_file(uart_text())
    for rule in rules:
        again = parse_rule(serialize_rule(rule), rule.id)
        assert again == rule
        assert serialize_rule(again) == serialize_rule(rule)


def test_uart_round_trip_file():
    regmap, rules = parse_rule_file(uart_text())
    regmap2, rules2 = parse_rule_file(serialize_rule_file(regmap, rules))
    assert regmap2 == regmap
    assert rules2 == rules


def test_empty_rules_section():
    regmap, rules = parse_rule_file("Field Name Address Bits\nS1[TC] 0x10 6\nRules\n")
    assert rules == []
    assert regmap.entities[0].bits == (6, 6)


def test_comments_and_reset_column():
    text = ("Field Name Address Bits\n"
            "CR[EN] 0x100 0 RW reset=1   // enable\n"
            "CR[MODE] 0x100 1-3\n"
            "Rules\n"
            "W CR[EN] == * -> CR[MODE] := 7 // comment\n")
    regmap, rules = parse_rule_file(text)
    assert regmap.find(parse_entity("CR[EN]")) == FieldDef(parse_entity("CR[EN]"), 0x100, (0, 0), "RW", 1)
    assert rules[0].source == "W CR[EN] == * -> CR[MODE] := 7"


def test_overlapping_fields_rejected():
    with pytest.raises(DuplicateEntity):
        parse_rule_file("Field Name Address Bits\nA[X] 0x0 0-3\nA[Y] 0x0 3-4\n")


def test_resolve_layout():
    rs = uart_rules()
    lay = rs.layout[RDRF]
    assert (lay.address, lay.mask, lay.shift) == (0x4006A004, 0x20, 5)
    dt = rs.layout[parse_entity("D[T]")]
    assert (dt.address, dt.mask, dt.shift) == (0x4006A007, 0xFFFFFFFF, 0)


def test_resolve_unknown_entity():
    regmap, _ = parse_rule_file(uart_text())
    with pytest.raises(UnknownEntity):
        resolve_rules(regmap, [parse_rule("V S9[NOPE] == 1 -> S1[TC] := 1")])


def test_resolve_constant_too_wide():
    regmap, _ = parse_rule_file(uart_text())
    with pytest.raises(WidthOverflow):
        resolve_rules(regmap, [parse_rule("V S1[TC] == 1 -> S1[RDRF] := 2")])


def test_stats_tally_to_rule_count():
    regmap, rules = parse_rule_file(uart_text())
    stats = rule_stats(regmap, rules)
    assert stats["C1"] + stats["C2"] + stats["C3"] == stats["rules"] == 24
    assert stats["A1"] + stats["A2"] + stats["A3"] == 24
    assert (stats["C1"], stats["C2"], stats["C3"]) == (6, 4, 14)
    assert (stats["A1"], stats["A2"], stats["A3"]) == (13, 7, 4)


def test_condition_and_action_types():
    assert condition_type(parse_rule("B #D[T] > 0 -> S1[TDRE] := 0")) == "C1"
    assert condition_type(parse_rule("R D[R] == * -> S1[OR] := 0")) == "C2"
    assert condition_type(parse_rule("V S1[OR] == 1 -> IRQ[OR] := Ready")) == "C3"
    assert action_type(parse_rule("V S1[OR] == 1 -> IRQ[OR] := Ready")) == "A2"
    assert action_type(parse_rule("V S1[OR] == 1 -> DMA[OR] := Ready, IRQ[OR] := Ready")) == "A3"


def test_trigger_index_partition():
    rs = uart_rules()
    indexed: dict[int, set[str]] = {r.id: set() for r in rs.rules}
    for addr, rules in rs.on_write.items():
        for r in rules:
            indexed[r.id].add("W")
    for addr, rules in rs.on_read.items():
        for r in rules:
            indexed[r.id].add("R")
    for side, rules in rs.on_buffer.items():
        for r in rules:
            indexed[r.id].add("B")
    for entity, rules in rs.on_value.items():
        for r in rules:
            indexed[r.id].add("V")
    for r in rs.on_other:
        indexed[r.id].add("O")
    for rule in rs.rules:
        assert indexed[rule.id] == {t.value for t in rule.triggers}


# -- property: round trip over generated rule files

_FIELDS = [parse_entity(t) for t in ("A[X]", "A[Y]", "B[Z]", "C[W]")]
_REGMAP_TEXT = ("Field Name Address Bits\n"
                "A[X] 0x40000000 0\nA[Y] 0x40000000 1-4\nB[Z] 0x40000004 2\nC[W] 0x40000008 *\n"
                "D[R] 0x4000000c *\nD[T] 0x4000000c *\n"
                "Interrupt Source IRQ Number\nSRC 5\n"
                "DMA Source IRQ Number\nChannel 0 transfer complete 0\n"
                "Rules\n")
_OCC = [EntityRef("D", "R", EntityKind.RX_OCCUPANCY), EntityRef("D", "T", EntityKind.TX_OCCUPANCY)]

fields = st.sampled_from(_FIELDS)
small = st.integers(0, 1)
ops = st.sampled_from([Op.EQ, Op.GE, Op.LE, Op.GT, Op.LT])


@st.composite
def predicates(draw, trigger):
    if trigger is Trigger.B:
        return Predicate(trigger, draw(st.sampled_from(_OCC)), draw(ops), draw(st.one_of(small, fields)))
    if trigger in (Trigger.W, Trigger.R):
        if draw(st.booleans()):
            return Predicate(trigger, draw(fields), Op.ANY, WILDCARD)
        return Predicate(trigger, draw(fields), draw(ops), draw(small))
    if trigger is Trigger.O and draw(st.booleans()):
        return Predicate(trigger, ALWAYS, Op.ANY, WILDCARD)
    return Predicate(trigger, draw(fields), draw(ops), draw(st.one_of(small, fields)))


actions = st.one_of(
    st.builds(lambda f, v: Action(ActionKind.FIELD_ASSIGN, f, v), fields, st.one_of(small, fields, st.sampled_from(_OCC))),
    st.builds(lambda s: Action(ActionKind.IRQ_SET, "SRC", s), st.sampled_from(list(RequestState))),
    st.builds(lambda s: Action(ActionKind.DMA_SET, "SRC", s), st.sampled_from(list(RequestState))),
)


@st.composite
def rules(draw, rule_id):
    head = draw(st.sampled_from(list(Trigger)))
    preds = [draw(predicates(head))]
    preds += draw(st.lists(st.sampled_from([Trigger.V, Trigger.O]).flatmap(predicates), max_size=2))
    acts = draw(st.lists(actions, min_size=1, max_size=3))
    return Rule(rule_id, tuple(preds), tuple(acts))


@st.composite
def rule_files(draw):
    n = draw(st.integers(0, 6))
    return [draw(rules(i + 1)) for i in range(n)]


@settings(max_examples=150, deadline=None)
@given(rule_files())
def test_round_trip_generated(generated):
    text = _REGMAP_TEXT + "".join(serialize_rule(r) + "\n" for r in generated)
    regmap, parsed = parse_rule_file(text)
    assert parsed == generated
    regmap2, parsed2 = parse_rule_file(serialize_rule_file(regmap, parsed))
    assert (regmap2, parsed2) == (regmap, parsed)
    for r in parsed:
        assert serialize_rule(parse_rule(serialize_rule(r), r.id)) == serialize_rule(r)


@settings(max_examples=100, deadline=None)
@given(rule_files())
def test_index_partition_generated(generated):
    text = _REGMAP_TEXT + "".join(serialize_rule(r) + "\n" for r in generated)
    rs = rules_from(text)
    for rule in rs.rules:
        trig = rule.triggers
        assert (rule in rs.on_other) == (Trigger.O in trig)
        in_buffer = any(rule in v for v in rs.on_buffer.values())
        assert in_buffer == (Trigger.B in trig)
        assert any(rule in v for v in rs.on_write.values()) == (Trigger.W in trig)
        assert any(rule in v for v in rs.on_read.values()) == (Trigger.R in trig)
        assert any(rule in v for v in rs.on_value.values()) == (Trigger.V in trig)


def test_missing_dma_section_is_legal():
    regmap, _ = parse_rule_file("Field Name Address Bits\nA[X] 0x0 0\nInterrupt Source IRQ Number\nX 3\n")
    assert regmap.dma_sources == [] and regmap.irq_number("X") == 3


def test_register_map_defaults():
    assert RegisterMap().dma_completion_irq(4) == 4
