"""Command-line entry point.

Exit status: 0 on success, 1 when violations or a divergence were found
(or a run aborted on a rule cycle), 2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .compliance import check_machine, parse_guards
from .diagnosis import diagnose
from .errors import PeriphSimError
from .fidelity import fidelity_report
from .machine import load_machine
from .ruledsl import parse_rule_file, resolve_rules, rule_stats
from .script import RunResult, Trace, parse_script, run

EXIT_OK, EXIT_FOUND, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _run(cfg: str, script_path: str, null_model: bool = False) -> RunResult:
    machine = load_machine(cfg, null_model=null_model)
    path = Path(script_path)
    script = parse_script(path.read_text("utf-8"), name=path.stem)
    return run(machine, script)


def _report_diagnostics(result: RunResult) -> None:
    for d in result.diagnostics:
        print(d.line(), file=sys.stderr)


def cmd_run(args) -> int:
    result = _run(args.config, args.script, args.null_model)
    m = result.machine
    if args.trace:
        Path(args.trace).write_text(result.trace.export(), "utf-8")
    if args.history:
        Path(args.history).write_text(m.history_text(), "utf-8")
    if args.effects:
        Path(args.effects).write_text(m.effects.export(), "utf-8")
    if not (args.trace or args.history or args.effects):
        sys.stdout.write(result.trace.export())
    _report_diagnostics(result)
    return EXIT_FOUND if result.error is not None else EXIT_OK


def cmd_fidelity(args) -> int:
    emu = Trace.from_text(Path(args.emu).read_text("utf-8"))
    ref = Trace.from_text(Path(args.ref).read_text("utf-8"))
    base = Trace.from_text(Path(args.base).read_text("utf-8")) if args.base else None
    print(fidelity_report(emu, ref, base).line())
    return EXIT_OK


def cmd_comply(args) -> int:
    result = _run(args.config, args.script)
    guards = None
    if args.guards:
        guards = parse_guards(Path(args.guards).read_text("utf-8"), result.machine)
    report = check_machine(result.machine, guards)
    for w in report.warnings:
        print(w, file=sys.stderr)
    sys.stdout.write(report.text())
    return EXIT_FOUND if report.violations else EXIT_OK


def cmd_diagnose(args) -> int:
    result = _run(args.config, args.script)
    ref = Trace.from_text(Path(args.ref).read_text("utf-8"))
    report = diagnose(result, ref)
    sys.stdout.write(report.text())
    return EXIT_FOUND if report.divergence is not None else EXIT_OK


def cmd_lint(args) -> int:
    regmap, rules = parse_rule_file(Path(args.rules).read_text("utf-8"))
    resolved = resolve_rules(regmap, rules)
    stats = rule_stats(regmap, rules)
    print(f"rules {stats['rules']}")
    print(f"fields {stats['fields']}")
    print(f"irq-sources {stats['irq_sources']}")
    print(f"dma-sources {stats['dma_sources']}")
    for key in ("C1", "C2", "C3", "A1", "A2", "A3"):
        print(f"{key} {stats[key]}")
    for name in resolved.irq_names:
        irq = regmap.irq_number(name)
        print(f"irq {name} {'?' if irq is None else irq}")
    for name, number in regmap.dma_sources:
        print(f"dma {name.replace(' ', '_')} {number}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="periphsim", description="Rule-driven MCU peripheral emulation.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="execute a script and write trace/history/effects")
    p.add_argument("config")
    p.add_argument("script")
    p.add_argument("--trace")
    p.add_argument("--history")
    p.add_argument("--effects")
    p.add_argument("--null-model", action="store_true", help="reads return 0, no interrupts or DMA")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fidelity", help="per-context distances and fidelity score")
    p.add_argument("emu")
    p.add_argument("ref")
    p.add_argument("base", nargs="?")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("comply", help="run a script and check R1/R2")
    p.add_argument("config")
    p.add_argument("script")
    p.add_argument("--guards", help="guard override file")
    p.set_defaults(func=cmd_comply)

    p = sub.add_parser("diagnose", help="run a script and locate divergence from a reference trace")
    p.add_argument("config")
    p.add_argument("script")
    p.add_argument("ref")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("lint", help="parse a rule file and print statistics")
    p.add_argument("rules")
    p.set_defaults(func=cmd_lint)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PeriphSimError, OSError, ValueError, KeyError) as exc:
        print(f"periphsim: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
