"""Concrete state of one peripheral: registers, data buffers, request lines."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import AccessViolation, Overflow, WidthOverflow
from .ruledsl import EntityKind, EntityRef, FieldLayout, RequestState, ResolvedRuleSet

DEFAULT_CAPACITY = 16


@dataclass(frozen=True)
class FieldChange:
    entity: EntityRef
    old: int
    new: int

    @property
    def changed(self) -> bool:
        return self.old != self.new


@dataclass
class PeripheralState:
    """Mutable state owned by a single machine.

    Register cells are keyed by address and hold ``register_width`` bits.
    The two data buffers are byte FIFOs bounded by ``capacity``.
    """

    layout: dict[EntityRef, FieldLayout] = field(repr=False, compare=False)
    width: int = 32
    capacity: int = DEFAULT_CAPACITY
    registers: dict[int, int] = field(default_factory=dict)
    rx: deque = field(default_factory=deque)
    tx: deque = field(default_factory=deque)
    irq: dict[str, RequestState] = field(default_factory=dict)
    dma: dict[str, RequestState] = field(default_factory=dict)
    reset_values: dict[int, int] = field(default_factory=dict)
    underflows: int = 0
    overflows: int = 0
    bytes_fed: dict[str, int] = field(default_factory=lambda: {"rx": 0, "tx": 0})
    bytes_taken: dict[str, int] = field(default_factory=lambda: {"rx": 0, "tx": 0})

    @classmethod
    def from_rules(cls, rules: ResolvedRuleSet, capacity: int = DEFAULT_CAPACITY) -> PeripheralState:
        regmap = rules.regmap
        resets: dict[int, int] = {}
        for fd in regmap.entities:
            if fd.entity.kind is not EntityKind.FIELD:
                continue
            resets.setdefault(fd.address, 0)
            if fd.reset is not None:
                lay = rules.layout[fd.entity]
                resets[fd.address] |= (fd.reset << lay.shift) & lay.mask
        state = cls(
            layout=rules.layout,
            width=regmap.register_width,
            capacity=capacity,
            reset_values=resets,
        )
        state.reset(rules)
        return state

    def reset(self, rules: ResolvedRuleSet | None = None) -> None:
        self.registers = dict(self.reset_values)
        self.rx.clear()
        self.tx.clear()
        if rules is not None:
            self.irq = dict.fromkeys(rules.irq_names, RequestState.ENABLE)
            self.dma = dict.fromkeys(rules.dma_names, RequestState.ENABLE)
        else:
            self.irq = dict.fromkeys(self.irq, RequestState.ENABLE)
            self.dma = dict.fromkeys(self.dma, RequestState.ENABLE)
        self.underflows = self.overflows = 0
        self.bytes_fed = {"rx": 0, "tx": 0}
        self.bytes_taken = {"rx": 0, "tx": 0}

    # -- fields

    def register(self, address: int) -> int:
        return self.registers.get(address, 0)

    def read_field(self, entity: EntityRef) -> int:
        kind = entity.kind
        if kind is EntityKind.RX_OCCUPANCY:
            return len(self.rx)
        if kind is EntityKind.TX_OCCUPANCY:
            return len(self.tx)
        if kind is EntityKind.RX_BUFFER:
            return self.rx[0] if self.rx else 0
        if kind is EntityKind.TX_BUFFER:
            return self.tx[-1] if self.tx else 0
        lay = self.layout[entity]
        return (self.registers.get(lay.address, 0) & lay.mask) >> lay.shift

    def write_field(self, entity: EntityRef, value: int, firmware: bool = False) -> bool:
        """Masked write of one field; returns True iff the field value changed.

        Firmware writes to an RO field raise AccessViolation; engine writes
        pass through.
        """
        lay = self.layout[entity]
        if value < 0 or value > lay.max_value:
            raise WidthOverflow(f"{value} does not fit {entity}")
        if firmware and lay.access == "RO":
            raise AccessViolation(f"firmware write to read-only {entity}")
        old_reg = self.registers.get(lay.address, 0)
        new_reg = (old_reg & ~lay.mask) | ((value << lay.shift) & lay.mask)
        self.registers[lay.address] = new_reg
        return (old_reg & lay.mask) != (new_reg & lay.mask)

    def store(self, address: int, value: int, fields: list[FieldLayout]) -> tuple[list[FieldChange], list[EntityRef]]:
        """Raw firmware store of a whole register.

        Bits of read-only fields keep their old value, and in a register with
        described fields the undescribed (reserved) bits stay zero, so the
        returned field changes account for every stored bit. A register with
        no described fields is plain storage. Returns the per-field changes
        (including unchanged fields) and the RO fields the firmware tried to
        modify.
        """
        value &= (1 << self.width) - 1
        if fields:
            declared = 0
            for lay in fields:
                declared |= lay.mask
            value &= declared
        old_reg = self.registers.get(address, 0)
        keep = 0
        violations = []
        for lay in fields:
            if lay.access == "RO":
                keep |= lay.mask
                if (old_reg ^ value) & lay.mask:
                    violations.append(lay.entity)
        new_reg = (value & ~keep) | (old_reg & keep)
        self.registers[address] = new_reg
        changes = [
            FieldChange(lay.entity, (old_reg & lay.mask) >> lay.shift, (new_reg & lay.mask) >> lay.shift)
            for lay in fields
        ]
        return changes, violations

    # -- buffers

    def _queue(self, side: str) -> deque:
        if side == "rx":
            return self.rx
        if side == "tx":
            return self.tx
        raise ValueError(f"buffer side must be 'rx' or 'tx', not {side!r}")

    def occupancy(self, side: str) -> int:
        return len(self._queue(side))

    def feed(self, side: str, data: bytes) -> int:
        queue = self._queue(side)
        if len(queue) + len(data) > self.capacity:
            self.overflows += 1
            raise Overflow(
                f"{side} buffer overflow: {len(queue)} + {len(data)} > {self.capacity}")
        queue.extend(b & 0xFF for b in data)
        self.bytes_fed[side] += len(data)
        return len(queue)

    def take(self, side: str) -> int:
        """Pop the FIFO head; an empty buffer yields 0 and counts an underflow."""
        queue = self._queue(side)
        if not queue:
            self.underflows += 1
            return 0
        self.bytes_taken[side] += 1
        return queue.popleft()

    # -- export

    def snapshot(self) -> str:
        lines = [f"{addr:#010x}={self.registers[addr]:#x}" for addr in sorted(self.registers)]
        lines.append("rx=" + bytes(self.rx).hex())
        lines.append("tx=" + bytes(self.tx).hex())
        return "\n".join(lines) + "\n"
