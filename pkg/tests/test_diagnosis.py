from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import S1, run_fixture, uart_machine
from periphsim.diagnosis import diagnose, locate_divergence, suspect_rules
from periphsim.engine import EffectLog, Firing
from periphsim.ruledsl import parse_entity
from periphsim.script import Trace, TraceEvent, parse_script, run
from periphsim.state import FieldChange

RDRF = parse_entity("S1[RDRF]")


def _trace(*pairs: str) -> Trace:
    return Trace([TraceEvent(sym, ctx) for ctx, sym in (p.split(":", 1) for p in pairs)])


def test_equal_traces():
    t = _trace("init:a", "main:b", "irq:c")
    assert locate_divergence(t, t) is None


def test_init_reported_first():
    emu = _trace("init:a", "main:x", "irq:c")
    ref = _trace("init:z", "main:b", "irq:c")
    assert locate_divergence(emu, ref).context == "init"


def test_missing_handler_after_rule_deletion():
    ref = run_fixture("uart.cfg", "echo.script").trace
    emu = run_fixture("uart_noirq.cfg", "echo.script")
    div = locate_divergence(emu.trace, ref, emu.machine.history)
    assert (div.context, div.index) == ("irq", 0)
    assert div.emu_symbol is None and div.ref_symbol.endswith("#enter")
    assert div.last_read.address == S1  # the TDRE poll
    assert div.last_read.context == "init"


def test_suspects_in_receive_scenario():
    result = run_fixture("uart.cfg", "rx_irq.script")
    suspects = suspect_rules(result.machine.effects, RDRF)
    assert [f.rule_id for f in suspects] == [4, 3]  # clear on read, then set on feed
    assert [c.new for f in suspects for c in f.changes if c.entity == RDRF] == [0, 1]
    assert suspects[0].context == "irq" and suspects[1].context == "main"


def test_untouched_entity():
    result = run_fixture("uart.cfg", "rx_irq.script")
    assert suspect_rules(result.machine.effects, parse_entity("S2[LBKDIF]")) == []


def test_repeated_firing_listed_twice():
    result = run_fixture("uart_noirq.cfg", "echo.script")
    assert [f.rule_id for f in suspect_rules(result.machine.effects, RDRF)] == [3, 3]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 5), st.booleans()), max_size=30))
def test_reverse_chronology_and_completeness(firings):
    log = EffectLog()
    for seq, (rid, touches) in enumerate(firings):
        entity = RDRF if touches else parse_entity("S1[TC]")
        log.append(Firing(rid, [FieldChange(entity, 0, 1)], seq=seq * 3))
    got = suspect_rules(log, RDRF)
    seqs = [f.seq for f in got]
    assert seqs == sorted(seqs, reverse=True) and len(set(seqs)) == len(seqs)
    assert len(got) == sum(1 for _, t in firings if t)


def test_report_text():
    ref = run_fixture("uart.cfg", "echo.script").trace
    emu = run_fixture("uart_noirq.cfg", "echo.script")
    lines = diagnose(emu, ref).text().splitlines()
    assert lines[0] == "DIVERGE irq@0  last-read 0x4006a004"
    ids = [int(line.split()[1]) for line in lines[1:]]
    assert ids[:2] == [3, 3]
    assert all(line.startswith("SUSPECT ") for line in lines[1:])


def test_expect_narrows_entities():
    # The status read expects RDRF and TDRE; only TDRE's bit is wrong.
    text = "@init\nwrite 0x4006a015 1\n@main\nfeed uart0 41\nread 0x4006a004 expect 0xa0\nlabel done\n"
    result = run(uart_machine(), parse_script(text, "s"))
    assert result.mismatches[0].actual == 0x20
    ref = Trace(result.trace.events[:-1] + [TraceEvent("s:other#0", "main")])
    report = diagnose(result, ref)
    assert (report.divergence.context, report.divergence.index) == ("main", 2)
    assert report.entities == [parse_entity("S1[TDRE]")]
    assert report.suspects == []


def test_without_expect_all_fields_at_read_site():
    text = "@init\nwrite 0x4006a015 1\n@main\nfeed uart0 41\nread 0x4006a004\nlabel done\n"
    result = run(uart_machine(), parse_script(text, "s"))
    ref = Trace(result.trace.events[:-1] + [TraceEvent("s:other#0", "main")])
    report = diagnose(result, ref)
    assert RDRF in report.entities and len(report.entities) == 5
    assert [f.rule_id for f in report.suspects] == [3]


def test_no_divergence_report_is_empty():
    result = run_fixture("uart.cfg", "rx_irq.script")
    assert diagnose(result, result.trace).text() == ""
