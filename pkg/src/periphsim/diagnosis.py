"""Locate where an emulated run first departs from a reference trace.

Without a symbolic solver, a divergence from a known-good trace is the signal
that the model produced a wrong value. From there we report the nearest
preceding peripheral read and every rule firing that changed the fields
behind that read, most recent first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import EffectLog, Firing
from .machine import AccessRecord
from .ruledsl import EntityRef
from .script import CONTEXTS, Diagnostic, RunResult, Trace, TraceEvent


@dataclass(frozen=True)
class Divergence:
    context: str
    index: int
    last_read: AccessRecord | None
    emu_symbol: str | None
    ref_symbol: str | None


def _by_context(trace: Trace) -> dict[str, list[TraceEvent]]:
    parts: dict[str, list[TraceEvent]] = {ctx: [] for ctx in CONTEXTS}
    for ev in trace:
        parts[ev.context].append(ev)
    return parts


def _last_read(history: list[AccessRecord], mark: int) -> AccessRecord | None:
    for rec in reversed(history[:mark]):
        if rec.direction == "R" and rec.target not in ("nvic", "mem"):
            return rec
    return None


def locate_divergence(emu: Trace, ref: Trace, history: list[AccessRecord] | None = None) -> Divergence | None:
    """First per-context position (init, then main, then irq) where the traces differ.

    The last read is taken from ``history`` up to the emulated event at that
    position, or up to the end of the run when the emulated trace ran out.
    """
    history = history or []
    e, r = _by_context(emu), _by_context(ref)
    for ctx in CONTEXTS:
        es, rs = e[ctx], r[ctx]
        for k in range(max(len(es), len(rs))):
            emu_ev = es[k] if k < len(es) else None
            ref_ev = rs[k] if k < len(rs) else None
            if emu_ev is not None and ref_ev is not None and emu_ev.step_id == ref_ev.step_id:
                continue
            mark = emu_ev.history_mark if emu_ev is not None else len(history)
            return Divergence(ctx, k, _last_read(history, mark),
                              emu_ev.step_id if emu_ev else None, ref_ev.step_id if ref_ev else None)
    return None


def suspect_rules(effects: EffectLog, entity: EntityRef) -> list[Firing]:
    """Rule firings that changed ``entity``, most recent first (raw firmware stores excluded)."""
    hits = [f for f in effects if f.rule_id is not None and f.touches(entity)]
    return sorted(hits, key=lambda f: f.seq, reverse=True)


@dataclass
class DiagnosisReport:
    divergence: Divergence | None
    entities: list[EntityRef] = field(default_factory=list)
    suspects: list[Firing] = field(default_factory=list)

    def text(self) -> str:
        d = self.divergence
        if d is None:
            return ""
        where = "none" if d.last_read is None else f"{d.last_read.address:#010x}"
        lines = [f"DIVERGE {d.context}@{d.index}  last-read {where}"]
        lines += [f"SUSPECT {f.rule_id} {f.source}" for f in self.suspects]
        return "".join(line + "\n" for line in lines)


def _mismatch_at(diagnostics: list[Diagnostic], index: int) -> Diagnostic | None:
    for d in diagnostics:
        if d.kind == "mismatch" and d.history_index == index:
            return d
    return None


def diagnose(result: RunResult, ref: Trace) -> DiagnosisReport:
    """Divergence, the fields behind the last read, and the rules that touched them.

    If that read carried an ``expect`` that failed, only fields whose bits
    differ between expected and actual are kept.
    """
    m = result.machine
    div = locate_divergence(result.trace, ref, m.history)
    if div is None or div.last_read is None:
        return DiagnosisReport(div)
    periph = m.peripheral(div.last_read.target)
    layouts = [lay for lay in periph.rules.layout.values()
               if lay.address == div.last_read.address and lay.entity.kind.name == "FIELD"]
    miss = _mismatch_at(result.diagnostics, div.last_read.index)
    if miss is not None and miss.expected is not None:
        wrong = miss.expected ^ miss.actual
        narrowed = [lay for lay in layouts if lay.mask & wrong]
        layouts = narrowed or layouts
    entities = sorted(lay.entity for lay in layouts)
    wanted = set(entities)
    hits = [f for f in m.effects
            if f.rule_id is not None and f.peripheral == periph.name
            and any(c.entity in wanted for c in f.changes)]
    hits.sort(key=lambda f: f.seq, reverse=True)
    return DiagnosisReport(div, entities, hits)
