"""SoC assembly and the deterministic clock loop.

build() wires the timed core, OBI crossbar, two SRAM banks and the
peripheral set described by a SocConfig, and computes the pad report.
The clock loop ordering is fixed: within a cycle, peripherals tick first,
then the core's portion of the current instruction; an instruction's
architectural effects commit on its final cycle. External actors never
touch the simulation directly; they submit commands through a queue that
is drained between instructions (so a pause lands within one cycle
boundary of the current instruction finishing).
"""

from __future__ import annotations

import queue
from dataclasses import dataclass, replace

from .fabric import AddressRule, ObiFabric, OverlapError
from .isa.core import CrocCore, StepReport
from .isa.decode import InstrKind
from .memory import RangeError, SramBank, dump_words, load_blob
from .periph.gpio import Gpio
from .periph.neopixel import NeoPixel
from .periph.pins import PinRecorder
from .periph.timer import MachineTimer
from .periph.uart import Uart


class ConfigError(Exception):
    """SocConfig violates an invariant (overlaps, pad arithmetic, sizes)."""


class OutsideUserWindow(Exception):
    """User device rule does not fit inside the user address window."""


MLEM_TOTAL_PADS = 48
MLEM_CROC_PADS = 12
MLEM_USER_PADS = 36
MLEM_GPIO_COUNT = 26

# Reference figures for the fabricated demonstrator chip; the emulator
# does not model physical behavior, these exist for documentation output.
SILICON_REFERENCE = {
    "area_mm2": 5,
    "complexity_kge": 350,
    "global_density_pct": 56,
    "fmax_mhz": 80,
    "logic_levels": 58,
    "core_voltage_v": 1.2,
}


@dataclass
class SocConfig:
    clk_hz: int = 20_000_000
    sram0_base: int = 0x1000_0000
    sram0_size: int = 0x1_0000
    sram1_base: int = 0x1001_0000
    sram1_size: int = 0x1_0000
    uart_base: int | None = 0x0300_1000
    gpio_base: int | None = 0x0300_2000
    timer_base: int | None = 0x0300_3000
    neopixel_base: int | None = 0x0300_5000
    user_window_base: int = 0x2000_0000
    user_window_size: int = 0x1000_0000
    reset_pc: int | None = None          # defaults to sram0_base
    enable_c_ext: bool = True
    ebreak_halts: bool = True
    arbitration: str = "priority"
    total_pads: int = MLEM_TOTAL_PADS
    croc_domain_pads: int = MLEM_CROC_PADS
    user_pads: int = MLEM_USER_PADS
    gpio_count: int = MLEM_GPIO_COUNT
    profile: str = "custom"

    def validate(self) -> None:
        if self.croc_domain_pads + self.user_pads != self.total_pads:
            raise ConfigError(
                f"pad arithmetic violated: {self.croc_domain_pads} + "
                f"{self.user_pads} != {self.total_pads}")
        if self.profile == "mlem":
            actual = (self.total_pads, self.croc_domain_pads, self.user_pads,
                      self.gpio_count)
            expected = (MLEM_TOTAL_PADS, MLEM_CROC_PADS, MLEM_USER_PADS,
                        MLEM_GPIO_COUNT)
            if actual != expected:
                raise ConfigError(
                    f"mlem profile pins are fixed at "
                    f"total/croc/user/gpio={expected}, got {actual}")
        signal_pads = self.gpio_count \
            + (2 if self.uart_base is not None else 0) \
            + (1 if self.neopixel_base is not None else 0)
        if signal_pads > self.user_pads:
            raise ConfigError(
                f"{signal_pads} user-domain signals exceed "
                f"{self.user_pads} user pads")
        if self.gpio_count > 32:
            raise ConfigError("gpio_count is limited to 32 (register width)")
        for name in ("sram0_size", "sram1_size"):
            if getattr(self, name) <= 0 or getattr(self, name) % 4:
                raise ConfigError(f"{name} must be a positive word multiple")
        if self.clk_hz <= 0:
            raise ConfigError("clk_hz must be positive")
        if self.arbitration not in ("priority", "round_robin"):
            raise ConfigError(f"unknown arbitration: {self.arbitration}")


def mlem_config(**overrides) -> SocConfig:
    """The MLEM board profile: 48 pads, 12 Croc-domain, 36 user, 26 GPIOs."""
    return replace(SocConfig(profile="mlem"), **overrides)


PROFILES = {"mlem": mlem_config}


@dataclass(frozen=True)
class PadReport:
    total: int
    croc_domain: int
    user: int
    gpio: int


STOP_CYCLE_LIMIT = "cycle_limit"
STOP_BREAKPOINT = "breakpoint"
STOP_HALT = "halt"
STOP_DOUBLE_FAULT = "double_fault"
STOP_PAUSED = "paused"


@dataclass
class RunResult:
    cycles: int
    instret: int
    stop_reason: str
    final_pc: int
    diagnostic: str | None = None


# fabric port ids
MGR_DATA = 0
MGR_INSTR = 1
MGR_USER = 2

_SUB_SRAM0 = 0
_SUB_SRAM1 = 1
_SUB_UART = 2
_SUB_GPIO = 3
_SUB_TIMER = 4
_SUB_NEO = 5
_SUB_USER_FIRST = 8

PERIPH_WINDOW = 0x1000
NEO_WINDOW = 0x1000


class Soc:
    """One assembled virtual board; use build() rather than constructing."""

    def __init__(self, config: SocConfig):
        config.validate()
        self.config = config
        self.cycle = 0
        self.instret = 0
        self.pinrec = PinRecorder(config.clk_hz)
        self.fabric = ObiFabric(["data", "instr", "user"],
                                arbitration=config.arbitration)
        self.sram0 = SramBank("sram0", config.sram0_base, config.sram0_size)
        self.sram1 = SramBank("sram1", config.sram1_base, config.sram1_size)
        self.banks = [self.sram0, self.sram1]
        try:
            self.fabric.attach(AddressRule(config.sram0_base,
                                           config.sram0_size, _SUB_SRAM0,
                                           "sram0"), self.sram0)
            self.fabric.attach(AddressRule(config.sram1_base,
                                           config.sram1_size, _SUB_SRAM1,
                                           "sram1"), self.sram1)
            self.uart = None
            if config.uart_base is not None:
                self.uart = Uart(self.pinrec)
                self.fabric.attach(AddressRule(config.uart_base,
                                               PERIPH_WINDOW, _SUB_UART,
                                               "uart"), self.uart)
            self.gpio = None
            if config.gpio_base is not None:
                self.gpio = Gpio(self.pinrec, config.gpio_count, clock=self)
                self.fabric.attach(AddressRule(config.gpio_base,
                                               PERIPH_WINDOW, _SUB_GPIO,
                                               "gpio"), self.gpio)
            self.timer = None
            if config.timer_base is not None:
                self.timer = MachineTimer()
                self.fabric.attach(AddressRule(config.timer_base,
                                               PERIPH_WINDOW, _SUB_TIMER,
                                               "timer"), self.timer)
            self.neopixel = None
            if config.neopixel_base is not None:
                self.neopixel = NeoPixel(self.pinrec, clock=self)
                self.fabric.attach(AddressRule(config.neopixel_base,
                                               NEO_WINDOW, _SUB_NEO,
                                               "neopixel"), self.neopixel)
        except OverlapError as e:
            raise ConfigError(str(e)) from None

        self.reset_pc = config.reset_pc if config.reset_pc is not None \
            else config.sram0_base
        self.core = CrocCore(self.fabric, instr_manager=MGR_INSTR,
                             data_manager=MGR_DATA, reset_pc=self.reset_pc,
                             c_ext=config.enable_c_ext,
                             ebreak_halts=config.ebreak_halts)
        self.pad_report = PadReport(total=config.total_pads,
                                    croc_domain=config.croc_domain_pads,
                                    user=config.user_pads,
                                    gpio=config.gpio_count)

        self.breakpoints: set[int] = set()
        self.command_queue: queue.SimpleQueue = queue.SimpleQueue()
        self.trace_sink = None               # callable(StepReport)
        self.class_counts: dict[InstrKind, int] = {}
        self.stats_hook = None               # callable(cycles, instret)
        self._stats_period = 100_000
        self._next_stats_cycle = self._stats_period
        self._stimulus: list[tuple[int, object]] = []
        self._stim_index = 0
        self._user_irq_sources: list = []
        self._user_sub_next = _SUB_USER_FIRST
        self._deadline: int | None = None
        self._pause_requested = False

    @property
    def stats_period(self) -> int:
        return self._stats_period

    @stats_period.setter
    def stats_period(self, value: int) -> None:
        self._stats_period = value
        self._next_stats_cycle = self.cycle + value

    # -- construction-time wiring -----------------------------------------

    def attach_user_device(self, base: int, size: int, name: str,
                           device) -> None:
        """Map a loosely-coupled device into the user window.

        The device exposes bus_access(); if it has a truthy irq_line
        attribute at any cycle it asserts the external interrupt line.
        """
        window_end = self.config.user_window_base \
            + self.config.user_window_size
        if not (self.config.user_window_base <= base
                and base + size <= window_end):
            raise OutsideUserWindow(
                f"0x{base:08x}/+0x{size:x} not within user window "
                f"0x{self.config.user_window_base:08x}..0x{window_end:08x}")
        self.fabric.attach(AddressRule(base, size, self._user_sub_next, name),
                           device)
        self._user_sub_next += 1
        if hasattr(device, "irq_line"):
            self._user_irq_sources.append(device)

    def schedule_stimulus(self, at_cycle: int, action) -> None:
        """Queue a host action applied deterministically at a cycle boundary."""
        self._stimulus.append((at_cycle, action))
        self._stimulus.sort(key=lambda item: item[0])

    # -- state control ------------------------------------------------------

    def reset(self, cold: bool = False) -> None:
        """Warm reset preserves SRAM; cold reset zeroes it."""
        self.core.reset_pc = self.reset_pc
        self.core.reset()
        self.cycle = 0
        self.instret = 0
        self.fabric.cycle = 0
        if self.uart is not None:
            hook = self.uart.on_tx_byte
            self.uart.reset()
            self.uart.on_tx_byte = hook
        if self.gpio is not None:
            self.gpio.reset()
        if self.timer is not None:
            self.timer.reset()
        if self.neopixel is not None:
            hook = self.neopixel.on_frame
            self.neopixel.reset()
            self.neopixel.on_frame = hook
        self.pinrec.clear()
        if self.uart is not None:
            self.pinrec.prime("uart_tx", 1)
        self.class_counts.clear()
        self._next_stats_cycle = self.stats_period
        self._stim_index = 0
        if cold:
            for bank in self.banks:
                bank.clear()

    def load_bytes(self, base: int, blob: bytes) -> None:
        load_blob(self.banks, base, blob)

    def read_bytes(self, base: int, length: int) -> bytes:
        out = bytearray()
        addr = base
        remaining = length
        while remaining:
            for bank in self.banks:
                if bank.contains(addr):
                    off = addr - bank.base
                    run = min(remaining, bank.size - off)
                    out += bank.data[off:off + run]
                    addr += run
                    remaining -= run
                    break
            else:
                raise RangeError(addr)
        return bytes(out)

    def dump_words(self, addr: int, count: int) -> list[int]:
        return dump_words(self.banks, addr, count)

    # -- clock loop ----------------------------------------------------------

    def consume(self, n: int) -> None:
        """Advance n cycles: peripherals tick, interrupt lines update."""
        core_state = self.core.state
        for _ in range(n):
            cycle = self.cycle
            if self.timer is not None:
                self.timer.tick()
                core_state.irq_timer = self.timer.irq_line
            if self.uart is not None:
                self.uart.tick(cycle)
            if self.neopixel is not None:
                self.neopixel.tick(cycle)
            if self._user_irq_sources:
                core_state.irq_external = any(
                    bool(dev.irq_line) for dev in self._user_irq_sources)
            self.cycle = cycle + 1
        self.fabric.cycle = self.cycle

    def wfi_should_break(self) -> bool:
        if self._deadline is not None and self.cycle >= self._deadline:
            return True
        if self._pause_requested or not self.command_queue.empty():
            return True
        return self._stim_index < len(self._stimulus) \
            and self._stimulus[self._stim_index][0] <= self.cycle

    def _apply_due_stimulus(self) -> None:
        while self._stim_index < len(self._stimulus) \
                and self._stimulus[self._stim_index][0] <= self.cycle:
            self._stimulus[self._stim_index][1](self)
            self._stim_index += 1

    def _drain_commands(self) -> None:
        while not self.command_queue.empty():
            try:
                command = self.command_queue.get_nowait()
            except queue.Empty:
                return
            command(self)

    def request_pause(self) -> None:
        """Ask the loop to stop at the next instruction boundary."""
        self._pause_requested = True

    def step_instruction(self) -> StepReport:
        report = self.core.step(self)
        retired = report.retired
        if retired is not None:
            self.instret += 1
            kind = retired.instr.kind
            self.class_counts[kind] = self.class_counts.get(kind, 0) + 1
            if self.trace_sink is not None:
                self.trace_sink(report)
        return report

    def step(self, n: int = 1) -> list[StepReport]:
        """Step n instructions outside run(); breakpoints are not checked."""
        reports = []
        for _ in range(n):
            self._drain_commands()
            self._apply_due_stimulus()
            if self.core.state.halted:
                break
            reports.append(self.step_instruction())
        return reports

    def run(self, max_cycles: int | None = None) -> RunResult:
        """Advance the clock loop until a stop condition lands.

        Deterministic given identical image, config and scripted stimulus.
        When resuming at an address with a breakpoint, the breakpoint does
        not re-fire before the first instruction executes.
        """
        start_cycle = self.cycle
        start_instret = self.instret
        self._deadline = None if max_cycles is None \
            else self.cycle + max_cycles
        # a pause requested before the loop starts must stick, so the
        # flag is consumed only when honored, never cleared on entry
        first = True
        reason = STOP_CYCLE_LIMIT
        while True:
            self._drain_commands()
            self._apply_due_stimulus()
            if self._pause_requested:
                self._pause_requested = False
                reason = STOP_PAUSED
                break
            state = self.core.state
            if state.halted:
                reason = STOP_DOUBLE_FAULT if self.core.fault_diagnostic \
                    else STOP_HALT
                break
            if self._deadline is not None and self.cycle >= self._deadline:
                reason = STOP_CYCLE_LIMIT
                break
            # the first iteration runs past a breakpoint at the current pc
            # so a stopped run can be resumed
            if not first and state.pc in self.breakpoints:
                reason = STOP_BREAKPOINT
                break
            self.step_instruction()
            first = False
            if self.stats_hook is not None \
                    and self.cycle >= self._next_stats_cycle:
                self.stats_hook(self.cycle, self.instret)
                self._next_stats_cycle = self.cycle + self.stats_period
        self._deadline = None
        return RunResult(cycles=self.cycle - start_cycle,
                         instret=self.instret - start_instret,
                         stop_reason=reason,
                         final_pc=self.core.state.pc,
                         diagnostic=self.core.fault_diagnostic)


def build(config: SocConfig) -> Soc:
    """Assemble a Soc from a validated config; raises ConfigError."""
    return Soc(config)


def parse_config_text(text: str, base: SocConfig | None = None) -> SocConfig:
    """Parse the key/value board description format.

    Lines are `key = value`; `#` starts a comment. A `profile` key selects
    a named preset before other keys override individual fields. Integer
    values accept 0x prefixes; booleans are true/false.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        entries.append((lineno, key.strip(), value.strip()))

    config = base if base is not None else SocConfig()
    for lineno, key, value in entries:
        if key == "profile":
            maker = PROFILES.get(value)
            if maker is None:
                raise ConfigError(f"line {lineno}: unknown profile {value!r}")
            config = maker()
    for lineno, key, value in entries:
        if key == "profile":
            continue
        if not hasattr(config, key):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        current = getattr(config, key)
        parsed: object
        if value.lower() == "none":
            parsed = None
        elif isinstance(current, bool):
            if value.lower() not in ("true", "false", "1", "0"):
                raise ConfigError(f"line {lineno}: bad boolean {value!r}")
            parsed = value.lower() in ("true", "1")
        elif isinstance(current, str):
            parsed = value
        else:
            try:
                parsed = int(value, 0)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: bad integer {value!r}") from None
        setattr(config, key, parsed)
    return config
