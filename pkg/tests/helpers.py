"""Shared builders for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from periphsim.machine import Machine, load_machine, load_rules
from periphsim.ruledsl import ResolvedRuleSet, parse_rule_file, resolve_rules
from periphsim.script import RunResult, parse_script, run

FIXTURES = Path(__file__).parent / "fixtures"
UART_BASE = 0x4006A000

C2 = 0x4006A003
S1 = 0x4006A004
D = 0x4006A007
C5 = 0x4006A00B
RWFIFO = 0x4006A015
ISER0 = 0xE000E100
RAM = 0x20000000


def uart_text() -> str:
    from importlib import resources

    return resources.files("periphsim.data").joinpath("uart_k64f.rules").read_text("utf-8")


def uart_rules() -> ResolvedRuleSet:
    return load_rules("builtin:uart_k64f.rules")


def rules_from(text: str) -> ResolvedRuleSet:
    return resolve_rules(*parse_rule_file(text))


def uart_machine(**config) -> Machine:
    m = Machine()
    for k, v in config.items():
        setattr(m.config, k, v)
    m.add_peripheral("uart0", uart_rules(), UART_BASE, 0x1000)
    return m


def run_fixture(cfg: str, script: str, null_model: bool = False) -> RunResult:
    machine = load_machine(FIXTURES / cfg, null_model=null_model)
    path = FIXTURES / script
    return run(machine, parse_script(path.read_text("utf-8"), name=path.stem))


def receive_setup(m: Machine, rdmas: int = 0, iser: int = 1 << 31) -> None:
    m.mmio_write(RWFIFO, 1, "init")
    m.mmio_write(C5, rdmas << 5, "init")
    m.mmio_write(C2, 0x20, "init")
    m.mmio_write(ISER0, iser, "init")


def _conservation_holds(m: Machine) -> bool:
    uart = m.peripheral("uart0")
    fed = uart.state.bytes_fed["rx"]
    return fed == m.rx_read["uart0"] + m.rx_dma["uart0"] + uart.state.occupancy("rx")


def random_schedule(seed: int, steps: int = 60) -> list[bool]:
    """Drive a DMA-capable UART with a random mix of feeds, reads, ticks and
    channel re-arms; returns the conservation check after every action."""
    rnd = random.Random(seed)
    m = uart_machine(buffer_capacity=64)
    ch = m.add_dma_channel(0, "uart0.RDRF", "rx2mem", RAM, rnd.randint(1, 4))
    receive_setup(m, rdmas=rnd.randint(0, 1), iser=(1 << 31) | 1)
    checks = []
    for _ in range(steps):
        action = rnd.choice(["feed", "read", "tick", "rearm", "status"])
        if action == "feed":
            room = m.config.buffer_capacity - m.peripheral("uart0").state.occupancy("rx")
            m.feed("uart0", bytes(rnd.randrange(256) for _ in range(min(room, rnd.randint(1, 3)))))
        elif action == "read":
            m.mmio_read(D)
        elif action == "tick":
            m.step()
        elif action == "rearm":
            ch.count, ch.enabled = rnd.randint(1, 4), True
        else:
            m.mmio_read(S1)
        checks.append(_conservation_holds(m))
    return checks
