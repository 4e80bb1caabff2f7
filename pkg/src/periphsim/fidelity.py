"""Trace fidelity: per-context weighted edit distance and the normalized score.

The distance kernel is compiled (``periphsim._editdist``) when the
extension is built and falls back to ``_editdist_py`` otherwise. Set
``PERIPHSIM_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from array import array
from dataclasses import dataclass
from typing import Hashable, Sequence

from . import _editdist_py
from .script import CONTEXTS, Trace

if os.environ.get("PERIPHSIM_PURE_PYTHON"):
    _kernel = _editdist_py.weighted_edit_distance_codes
    BACKEND = "python"
else:
    try:
        from ._editdist import weighted_edit_distance_codes as _kernel

        BACKEND = "cython"
    except ImportError:
        _kernel = _editdist_py.weighted_edit_distance_codes
        BACKEND = "python"


def _encode(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple[array, array]:
    codes: dict[Hashable, int] = {}
    ca = array("q", (codes.setdefault(s, len(codes)) for s in a))
    cb = array("q", (codes.setdefault(s, len(codes)) for s in b))
    return ca, cb


def weighted_edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Minimum cost of editing ``a`` into ``b``.

    Substitutions cost 2. An insertion or deletion costs 1 if the symbol
    repeats its predecessor in its own sequence, 2 otherwise, so stretching
    or shrinking a polling loop is cheap compared with missing code.
    Not symmetric.
    """
    ca, cb = _encode(a, b)
    return int(_kernel(ca, cb))


def partition_trace(trace: Trace) -> dict[str, list[str]]:
    parts: dict[str, list[str]] = {ctx: [] for ctx in CONTEXTS}
    for ev in trace:
        parts[ev.context].append(ev.step_id)
    return parts


def _parts(trace_or_parts) -> dict[str, list]:
    if isinstance(trace_or_parts, Trace):
        return partition_trace(trace_or_parts)
    return {ctx: list(trace_or_parts.get(ctx, ())) for ctx in CONTEXTS}


def context_distances(emu, ref) -> dict[str, int]:
    e, r = _parts(emu), _parts(ref)
    return {ctx: weighted_edit_distance(e[ctx], r[ctx]) for ctx in CONTEXTS}


def score_from_distances(d_emu: int, d_base: int) -> float:
    if d_base == 0:
        return 1.0 if d_emu == 0 else 0.0
    return 1.0 - min(d_emu / d_base, 1.0)


@dataclass(frozen=True)
class FidelityReport:
    emu: dict[str, int]
    base: dict[str, int] | None
    score: float | None

    @property
    def d_emu(self) -> int:
        return sum(self.emu.values())

    @property
    def d_base(self) -> int | None:
        return None if self.base is None else sum(self.base.values())

    def line(self) -> str:
        score = "-" if self.score is None else f"{self.score:.6f}"
        return f"{self.emu['init']} {self.emu['main']} {self.emu['irq']} {score}"


def fidelity_report(emu, ref, baseline=None) -> FidelityReport:
    d_emu = context_distances(emu, ref)
    if baseline is None:
        return FidelityReport(d_emu, None, None)
    d_base = context_distances(baseline, ref)
    return FidelityReport(d_emu, d_base, score_from_distances(sum(d_emu.values()), sum(d_base.values())))


def fidelity_score(emu, ref, baseline) -> float:
    """``1 - min(D_emu / D_base, 1)`` with D summed over init, main and irq."""
    return fidelity_report(emu, ref, baseline).score
