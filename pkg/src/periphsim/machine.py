"""MMIO bus, reduced NVIC, generic DMA engine and the global tick.

The NVIC is modeled as the eight set-enable words ISER0..ISER7 at
0xE000E100..0xE000E11C plus an internal pending set. There are no
priorities and no nesting: ``step`` hands back the lowest-numbered IRQ that
is both pending and enabled.
"""

from __future__ import annotations

import itertools
import logging
import shlex
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .engine import (
    DEFAULT_CHAIN_LIMIT,
    BufferChanged,
    EffectLog,
    Event,
    FirmwareRead,
    FirmwareWrite,
    Tick,
    dispatch,
)
from .errors import ChainLimitExceeded, ConfigError, Overflow, UnmappedAddress
from .ruledsl import RequestState, ResolvedRuleSet, parse_rule_file, resolve_rules
from .state import DEFAULT_CAPACITY, PeripheralState

log = logging.getLogger(__name__)

NVIC_ISER_BASE = 0xE000E100
NVIC_ISER_WORDS = 8
NVIC_ISER_END = NVIC_ISER_BASE + 4 * NVIC_ISER_WORDS
DEFAULT_MEMORY_BASE = 0x20000000
DEFAULT_MEMORY_SIZE = 0x10000


@dataclass
class MachineConfig:
    chain_limit: int = DEFAULT_CHAIN_LIMIT
    buffer_capacity: int = DEFAULT_CAPACITY
    max_steps_per_wait: int = 1000
    tx_drain: int = 1
    memory_base: int = DEFAULT_MEMORY_BASE
    memory_size: int = DEFAULT_MEMORY_SIZE


@dataclass
class Peripheral:
    name: str
    base: int
    size: int
    rules: ResolvedRuleSet
    state: PeripheralState
    rx_address: int | None = None
    tx_address: int | None = None

    def contains(self, address: int) -> bool:
        return self.base <= address < self.base + self.size


@dataclass
class DmaChannel:
    channel: int
    peripheral: str
    source: str
    direction: str  # "rx2mem" or "mem2tx"
    address: int
    count: int
    enabled: bool = True
    moved: int = 0


@dataclass(frozen=True)
class DmaTransfer:
    channel: int
    source: str
    nbytes: int
    completed: bool


@dataclass(frozen=True)
class AccessRecord:
    index: int
    seq: int
    context: str
    direction: str  # "R" or "W"
    address: int
    value: int
    target: str  # peripheral name, "nvic" or "mem"
    segment: int = 0

    def line(self) -> str:
        return f"{self.index}|{self.context}|{self.direction}|{self.address:#010x}|{self.value:#x}"


class Machine:
    """Peripherals behind one MMIO bus, plus NVIC, DMA and a flat RAM.

    With ``null_model=True`` every peripheral read returns 0 and no rule,
    interrupt or DMA request is ever processed; this is the baseline the
    fidelity score normalizes against.
    """

    def __init__(self, config: MachineConfig | None = None, null_model: bool = False):
        self.config = config or MachineConfig()
        self.null_model = null_model
        self.peripherals: list[Peripheral] = []
        self.dma_channels: dict[int, DmaChannel] = {}
        self.iser = 0
        self.pending: set[int] = set()
        self.memory = bytearray(self.config.memory_size)
        self.history: list[AccessRecord] = []
        self.effects = EffectLog()
        self.dispatched: list[tuple[int, int]] = []  # (seq, irq)
        self.transmitted: dict[str, bytearray] = {}
        self.rx_read: dict[str, int] = {}
        self.rx_dma: dict[str, int] = {}
        self.warnings: list[str] = []
        self.segment = 0
        self._clock = itertools.count()
        self._warned: set[str] = set()

    # -- setup

    def add_peripheral(self, name: str, rules: ResolvedRuleSet, base: int, size: int) -> Peripheral:
        if any(p.name == name for p in self.peripherals):
            raise ConfigError(f"duplicate peripheral {name!r}")
        new = range(base, base + size)
        for p in self.peripherals:
            if new.start < p.base + p.size and p.base < new.stop:
                raise ConfigError(f"{name} overlaps {p.name}")
        if new.start < NVIC_ISER_END and NVIC_ISER_BASE < new.stop:
            raise ConfigError(f"{name} overlaps the NVIC")
        mem_end = self.config.memory_base + self.config.memory_size
        if new.start < mem_end and self.config.memory_base < new.stop:
            raise ConfigError(f"{name} overlaps RAM")
        for lay in rules.layout.values():
            if not base <= lay.address < base + size:
                raise ConfigError(f"{name}: {lay.entity} at {lay.address:#x} outside {base:#x}+{size:#x}")
        state = PeripheralState.from_rules(rules, capacity=self.config.buffer_capacity)
        periph = Peripheral(name, base, size, rules, state,
                            rules.address_of("rx"), rules.address_of("tx"))
        self.peripherals.append(periph)
        self.transmitted[name] = bytearray()
        self.rx_read[name] = 0
        self.rx_dma[name] = 0
        return periph

    def add_dma_channel(self, channel: int, source: str, direction: str, address: int, count: int) -> DmaChannel:
        if direction not in ("rx2mem", "mem2tx"):
            raise ConfigError(f"DMA direction must be rx2mem or mem2tx, not {direction!r}")
        periph_name, _, src = source.rpartition(".")
        candidates = [p for p in self.peripherals
                      if (not periph_name or p.name == periph_name) and src in p.state.dma]
        if not candidates:
            raise ConfigError(f"no peripheral has DMA source {source!r}")
        if len(candidates) > 1:
            raise ConfigError(f"DMA source {source!r} is ambiguous; qualify it as periph.{src}")
        if not self._in_memory(address):
            raise ConfigError(f"DMA address {address:#x} is outside RAM")
        ch = DmaChannel(channel, candidates[0].name, src, direction, address, count)
        self.dma_channels[channel] = ch
        return ch

    def peripheral(self, name: str) -> Peripheral:
        for p in self.peripherals:
            if p.name == name:
                return p
        raise KeyError(name)

    def _in_memory(self, address: int) -> bool:
        return self.config.memory_base <= address < self.config.memory_base + self.config.memory_size

    def _find(self, address: int) -> Peripheral:
        for p in self.peripherals:
            if p.contains(address):
                return p
        raise UnmappedAddress(address)

    def _warn(self, msg: str, once: bool = False) -> None:
        if once:
            if msg in self._warned:
                return
            self._warned.add(msg)
        log.warning(msg)
        self.warnings.append(msg)

    def _dispatch(self, periph: Peripheral, event: Event) -> EffectLog:
        try:
            out = dispatch(periph.state, periph.rules, event, self.config.chain_limit,
                           self._clock.__next__, periph.name)
        except ChainLimitExceeded as exc:
            self.effects.extend(exc.log)
            raise
        self.effects.extend(out)
        for w in out.warnings:
            self.warnings.append(w)
        return out

    def _record(self, seq: int, context: str, direction: str, address: int, value: int, target: str) -> None:
        self.history.append(AccessRecord(len(self.history), seq, context, direction,
                                         address, value, target, self.segment))

    # -- bus

    def mmio_read(self, address: int, context: str = "main") -> int:
        seq = next(self._clock)
        if NVIC_ISER_BASE <= address < NVIC_ISER_END:
            word = (address - NVIC_ISER_BASE) // 4
            value = (self.iser >> (32 * word)) & 0xFFFFFFFF
            target = "nvic"
        elif self._in_memory(address):
            value = self.memory[address - self.config.memory_base]
            target = "mem"
        else:
            periph = self._find(address)
            target = periph.name
            if self.null_model:
                value = 0
            else:
                value = self._peripheral_read(periph, address, context)
        self._record(seq, context, "R", address, value, target)
        return value

    def _peripheral_read(self, periph: Peripheral, address: int, context: str) -> int:
        self._dispatch(periph, Tick(context))
        if address == periph.rx_address:
            before = periph.state.occupancy("rx")
            value = periph.state.take("rx")
            if periph.state.occupancy("rx") != before:
                self.rx_read[periph.name] += 1
                self._dispatch(periph, BufferChanged("rx", context))
            else:
                self._warn(f"{periph.name}: read of empty receive buffer at {address:#x}")
        else:
            value = periph.state.register(address)
        self._dispatch(periph, FirmwareRead(address, value, context))
        return value

    def mmio_write(self, address: int, value: int, context: str = "main") -> None:
        seq = next(self._clock)
        if NVIC_ISER_BASE <= address < NVIC_ISER_END:
            word = (address - NVIC_ISER_BASE) // 4
            self.iser |= (value & 0xFFFFFFFF) << (32 * word)
            target = "nvic"
        elif self._in_memory(address):
            self.memory[address - self.config.memory_base] = value & 0xFF
            target = "mem"
        else:
            periph = self._find(address)
            target = periph.name
            if not self.null_model:
                self._peripheral_write(periph, address, value, context)
        self._record(seq, context, "W", address, value, target)

    def _peripheral_write(self, periph: Peripheral, address: int, value: int, context: str) -> None:
        if address == periph.tx_address:
            try:
                periph.state.feed("tx", bytes([value & 0xFF]))
            except Overflow as exc:
                self._warn(f"{periph.name}: {exc}")
            else:
                self._dispatch(periph, BufferChanged("tx", context))
        self._dispatch(periph, FirmwareWrite(address, value, context))

    def feed(self, name: str, data: bytes, context: str = "main") -> int:
        """External input: bytes arriving on a peripheral's receive line."""
        periph = self.peripheral(name)
        if self.null_model or not data:
            return periph.state.occupancy("rx")
        occ = periph.state.feed("rx", data)
        self._dispatch(periph, BufferChanged("rx", context))
        return occ

    # -- time

    def iser_bit(self, irq: int) -> bool:
        return bool(self.iser >> irq & 1)

    def step(self, context: str = "main", deliver: bool = True) -> int | None:
        """Advance one tick; returns the IRQ to run next, if any.

        Order: drain transmit buffers and run O rules, move DMA data, promote
        pending sources whose ISER bit is set, then pick the lowest pending IRQ.
        """
        if self.null_model:
            return None
        for periph in self.peripherals:
            for _ in range(self.config.tx_drain):
                if not periph.state.tx:
                    break
                self.transmitted[periph.name].append(periph.state.take("tx"))
                self._dispatch(periph, BufferChanged("tx", context))
            self._dispatch(periph, Tick(context))
        self.dma_step(context)
        self._promote()
        if not deliver:
            return None
        ready = [n for n in self.pending if self.iser_bit(n)]
        if not ready:
            return None
        irq = min(ready)
        self.pending.discard(irq)
        self.dispatched.append((next(self._clock), irq))
        return irq

    def _promote(self) -> None:
        for periph in self.peripherals:
            for src, st in periph.state.irq.items():
                if st is not RequestState.PENDING:
                    continue
                irq = periph.rules.regmap.irq_number(src)
                if irq is None:
                    self._warn(f"{periph.name}: interrupt source {src} has no IRQ number", once=True)
                    continue
                if self.iser_bit(irq):
                    self.pending.add(irq)
                    periph.state.irq[src] = RequestState.ENABLE

    def dma_step(self, context: str = "main") -> list[DmaTransfer]:
        done: list[DmaTransfer] = []
        if self.null_model:
            return done
        for periph in self.peripherals:
            for src, st in list(periph.state.dma.items()):
                if st is not RequestState.PENDING:
                    continue
                ch = next((c for c in self.dma_channels.values()
                           if c.peripheral == periph.name and c.source == src), None)
                if ch is None:
                    self._warn(f"UnconfiguredChannel: {periph.name}.{src} has no DMA channel", once=True)
                    continue
                periph.state.dma[src] = RequestState.ENABLE
                if not ch.enabled or ch.count <= 0:
                    self._warn(f"DMA channel {ch.channel} disabled; {periph.name}.{src} request dropped")
                    continue
                done.append(self._transfer(periph, ch, context))
        return done

    def _transfer(self, periph: Peripheral, ch: DmaChannel, context: str) -> DmaTransfer:
        state = periph.state
        offset = ch.address - self.config.memory_base + ch.moved
        if ch.direction == "rx2mem":
            n = min(ch.count, state.occupancy("rx"), len(self.memory) - offset)
            for i in range(n):
                self.memory[offset + i] = state.take("rx")
            self.rx_dma[periph.name] += n
            side = "rx"
        else:
            n = min(ch.count, state.capacity - state.occupancy("tx"), len(self.memory) - offset)
            state.feed("tx", bytes(self.memory[offset:offset + n]))
            side = "tx"
        ch.moved += n
        ch.count -= n
        if n:
            self._dispatch(periph, BufferChanged(side, context))
        completed = ch.count == 0
        if completed:
            ch.enabled = False
            self.pending.add(periph.rules.regmap.dma_completion_irq(ch.channel))
        return DmaTransfer(ch.channel, ch.source, n, completed)

    # -- export

    def history_text(self) -> str:
        return "".join(r.line() + "\n" for r in self.history)


def _int(text: str, what: str, lineno: int) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad {what} {text!r}") from None


def load_rules(path: str | Path) -> ResolvedRuleSet:
    """Read and resolve a rule file; ``builtin:NAME`` loads a packaged file."""
    path = str(path)
    if path.startswith("builtin:"):
        text = resources.files("periphsim.data").joinpath(path[len("builtin:"):]).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return resolve_rules(*parse_rule_file(text))


def load_machine(path: str | Path, null_model: bool = False) -> Machine:
    """Build a machine from a config file.

    Lines (``#`` comments)::

        periph <name> <ruleFile> <baseAddr> <size>
        dma <channel> <source> <rx2mem|mem2tx> <address> <count>
        capacity <n>
        chainlimit <n>
        maxsteps <n>
        txdrain <n>
        memory <base> <size>
    """
    path = Path(path)
    config = MachineConfig()
    periphs: list[tuple[int, list[str]]] = []
    dmas: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(path.read_text("utf-8").splitlines(), start=1):
        words = shlex.split(raw.replace("=", " "), comments=True)
        if not words:
            continue
        key, args = words[0].lower(), words[1:]
        if key == "periph":
            if len(args) != 4:
                raise ConfigError(f"line {lineno}: periph <name> <ruleFile> <base> <size>")
            periphs.append((lineno, args))
        elif key == "dma":
            if len(args) != 5:
                raise ConfigError(f"line {lineno}: dma <channel> <source> <dir> <address> <count>")
            dmas.append((lineno, args))
        elif key in ("capacity", "chainlimit", "maxsteps", "txdrain") and len(args) == 1:
            value = _int(args[0], key, lineno)
            attr = {"capacity": "buffer_capacity", "chainlimit": "chain_limit",
                    "maxsteps": "max_steps_per_wait", "txdrain": "tx_drain"}[key]
            setattr(config, attr, value)
        elif key == "memory" and len(args) == 2:
            config.memory_base = _int(args[0], "memory base", lineno)
            config.memory_size = _int(args[1], "memory size", lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown directive {raw.strip()!r}")

    machine = Machine(config, null_model=null_model)
    for lineno, (name, rule_file, base, size) in periphs:
        rule_path = rule_file if rule_file.startswith("builtin:") else path.parent / rule_file
        machine.add_peripheral(name, load_rules(rule_path),
                               _int(base, "base address", lineno), _int(size, "size", lineno))
    for lineno, (channel, source, direction, address, count) in dmas:
        machine.add_dma_channel(_int(channel, "channel", lineno), source, direction,
                                _int(address, "address", lineno), _int(count, "count", lineno))
    return machine
