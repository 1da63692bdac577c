"""Memory-mapped GPIO block: per-pin direction, output latch, input sample.

    0x00  DIR  bit=1 drives the pad from the output latch
    0x04  OUT  output latch; takes effect only while the pin is an output
    0x08  IN   input sample for input pins, driven level for outputs

Reserved bits above the pin count read zero and ignore writes. Output-pin
level changes emit pad events named gpio0..gpioN-1.
"""

from __future__ import annotations

REG_DIR = 0x00
REG_OUT = 0x04
REG_IN = 0x08


class Gpio:
    def __init__(self, recorder=None, pin_count: int = 26, clock=None):
        self.recorder = recorder
        self.pin_count = pin_count
        self.clock = clock          # exposes .cycle for MMIO-driven edges
        self.mask = (1 << pin_count) - 1
        self.direction = 0
        self.out_latch = 0
        self.in_sample = 0
        self.on_input_change = None

    def reset(self) -> None:
        self.direction = 0
        self.out_latch = 0
        self.in_sample = 0

    def _driven(self) -> int:
        return self.out_latch & self.direction

    def _emit_changes(self, before: int, after: int) -> None:
        changed = before ^ after
        if not changed or self.recorder is None:
            return
        cycle = self.clock.cycle if self.clock is not None else 0
        for pin in range(self.pin_count):
            if changed & (1 << pin):
                self.recorder.emit(cycle, f"gpio{pin}",
                                   (after >> pin) & 1)

    def bus_access(self, offset: int, we: bool, be: int, wdata: int):
        if we:
            before = self._driven()
            if offset == REG_DIR:
                self.direction = wdata & self.mask
            elif offset == REG_OUT:
                self.out_latch = wdata & self.mask
            elif offset == REG_IN:
                pass                 # read-only
            else:
                return 0, True
            self._emit_changes(before, self._driven())
            return 0, False
        if offset == REG_DIR:
            return self.direction, False
        if offset == REG_OUT:
            return self.out_latch, False
        if offset == REG_IN:
            value = (self.in_sample & ~self.direction) | self._driven()
            return value & self.mask, False
        return 0, True

    def set_input(self, pin: int, level: int) -> None:
        """Host-side pad stimulus; raises for pins outside the block."""
        if not 0 <= pin < self.pin_count:
            raise ValueError(f"gpio pin {pin} out of range "
                             f"(0..{self.pin_count - 1})")
        if level:
            self.in_sample |= 1 << pin
        else:
            self.in_sample &= ~(1 << pin)
