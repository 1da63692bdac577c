"""Timed two-stage-style core: the cycle-accounting wrapper around the
architectural model.

The cycle cost of an instruction is a fixed decision table plus bus wait
states actually observed:

    ALU / CSR / FENCE / MUL          1
    branch not taken                 1
    branch taken, JAL, JALR, MRET    2
    load, store                      2
    DIV / REM                        37
    ECALL / EBREAK / trap entry      1
    WFI                              stalls until an enabled interrupt
                                     is pending (or the run budget ends)

A data access that crosses a word boundary is split into two bus
transactions and charged one extra cycle; it never traps. With zero-wait
SRAM and no competing managers there are no further wait states, which is
what lets straight-line ALU code retire one instruction per cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .decode import DecodedInstr, IllegalInstruction, InstrKind, \
    decode, decode_compressed
from .functional import (ArchState, BusError, DoubleFault, Retirement, Trap,
                         exec_functional, pending_interrupt, raise_trap)
from .functional import (CAUSE_FETCH_FAULT, CAUSE_FETCH_MISALIGNED,
                         CAUSE_ILLEGAL, MASK32)

DIV_CYCLES = 37

_BASE_CYCLES = {
    InstrKind.ALU: 1,
    InstrKind.CSR: 1,
    InstrKind.FENCE: 1,
    InstrKind.MUL: 1,
    InstrKind.LOAD: 2,
    InstrKind.STORE: 2,
    InstrKind.JAL: 2,
    InstrKind.JALR: 2,
    InstrKind.DIV: DIV_CYCLES,
    InstrKind.SYSTEM: 1,
}


def timing_cycles(d: DecodedInstr, taken: bool = False,
                  wait_states: int = 0) -> int:
    """Cycle cost of one instruction: decision table + observed waits."""
    if d.kind is InstrKind.BRANCH:
        return (2 if taken else 1) + wait_states
    if d.op == "mret":
        return 2 + wait_states
    return _BASE_CYCLES[d.kind] + wait_states


@dataclass(slots=True)
class StepReport:
    """Outcome of one timed step: what retired and what it cost."""

    cycles_consumed: int
    retired: Retirement | None = None
    trap_taken: int | None = None
    bus_accesses: list = field(default_factory=list)
    start_cycle: int = 0
    stalled: bool = False    # WFI gave up on the run budget; nothing retired


class _FabricDataPort:
    """Byte-addressed port that turns loads/stores into word transactions.

    Accesses contained in one word use byte enables; word-crossing ones
    are split into two transactions. Error responses raise BusError with
    the instruction's effective address.
    """

    __slots__ = ("fabric", "manager", "stamp", "txns")

    def __init__(self, fabric, manager: int, stamp: int, txns: list):
        self.fabric = fabric
        self.manager = manager
        self.stamp = stamp
        self.txns = txns

    def _access(self, word_addr, we, be, wdata, ea):
        txn = self.fabric.access(self.manager, word_addr, we=we, be=be,
                                 wdata=wdata, cycle=self.stamp)
        self.stamp += 1
        self.txns.append(txn)
        if txn.err:
            raise BusError(ea, we)
        return txn.rdata

    def read(self, addr: int, width: int) -> int:
        off = addr & 3
        base = addr & ~3 & MASK32
        if off + width <= 4:
            word = self._access(base, False, ((1 << width) - 1) << off, 0,
                                addr)
            return (word >> (8 * off)) & ((1 << (8 * width)) - 1)
        lo_n = 4 - off
        hi_n = width - lo_n
        lo = self._access(base, False, (((1 << lo_n) - 1) << off) & 0xF, 0,
                          addr) >> (8 * off)
        hi = self._access((base + 4) & MASK32, False, (1 << hi_n) - 1, 0,
                          addr)
        return (lo | (hi << (8 * lo_n))) & ((1 << (8 * width)) - 1)

    def write(self, addr: int, width: int, value: int) -> None:
        off = addr & 3
        base = addr & ~3 & MASK32
        if off + width <= 4:
            self._access(base, True, ((1 << width) - 1) << off,
                         (value << (8 * off)) & MASK32, addr)
            return
        lo_n = 4 - off
        hi_n = width - lo_n
        self._access(base, True, (((1 << lo_n) - 1) << off) & 0xF,
                     (value << (8 * off)) & MASK32, addr)
        self._access((base + 4) & MASK32, True, (1 << hi_n) - 1,
                     value >> (8 * lo_n), addr)


def _split_penalty(state: ArchState, d: DecodedInstr) -> int:
    if d.kind is InstrKind.LOAD or d.kind is InstrKind.STORE:
        ea = (state.regs[d.rs1] + d.imm) & MASK32
        if (ea & 3) + d.width > 4:
            return 1
    return 0


def _branch_taken(state: ArchState, d: DecodedInstr) -> bool:
    kind = d.kind
    if kind is InstrKind.JAL or kind is InstrKind.JALR:
        return True
    if kind is not InstrKind.BRANCH:
        return False
    a, b = state.regs[d.rs1], state.regs[d.rs2]
    op = d.op
    if op == "beq":
        return a == b
    if op == "bne":
        return a != b
    sa = a - 0x100000000 if a & 0x80000000 else a
    sb = b - 0x100000000 if b & 0x80000000 else b
    if op == "blt":
        return sa < sb
    if op == "bge":
        return sa >= sb
    if op == "bltu":
        return a < b
    return a >= b


class CrocCore:
    """CVE2-style timed core bound to the OBI fabric.

    step() executes one instruction (or dispatches one interrupt) against
    a clock object providing `cycle`, `consume(n)` and `wfi_should_break()`.
    Peripheral ticks happen inside consume(), before the instruction's
    effects commit: decide the cycle cost first, burn the cycles, then
    retire.
    """

    def __init__(self, fabric, instr_manager: int, data_manager: int,
                 reset_pc: int = 0x1000_0000, c_ext: bool = True,
                 ebreak_halts: bool = True):
        self.fabric = fabric
        self.instr_manager = instr_manager
        self.data_manager = data_manager
        self.reset_pc = reset_pc
        self.ebreak_halts = ebreak_halts
        self.state = ArchState(reset_pc, c_ext=c_ext)
        self.fault_diagnostic: str | None = None

    def reset(self) -> None:
        self.state.reset(self.reset_pc)
        self.fault_diagnostic = None

    def _fetch(self, txns: list, cycle: int) -> DecodedInstr:
        state = self.state
        pc = state.pc
        # control transfers police alignment; this catches bad reset PCs
        if pc & (0b01 if state.c_ext else 0b11):
            raise Trap(CAUSE_FETCH_MISALIGNED, pc)
        word_base = pc & ~3 & MASK32
        t1 = self.fabric.access(self.instr_manager, word_base, cycle=cycle)
        txns.append(t1)
        if t1.err:
            raise Trap(CAUSE_FETCH_FAULT, pc)
        low = (t1.rdata >> 16) if pc & 2 else (t1.rdata & 0xFFFF)
        if state.c_ext and low & 0b11 != 0b11:
            try:
                return decode_compressed(low)
            except IllegalInstruction as e:
                raise Trap(CAUSE_ILLEGAL, e.word) from None
        if pc & 2:
            t2 = self.fabric.access(self.instr_manager,
                                    (word_base + 4) & MASK32, cycle=cycle)
            txns.append(t2)
            if t2.err:
                raise Trap(CAUSE_FETCH_FAULT, pc)
            word = low | ((t2.rdata & 0xFFFF) << 16)
        else:
            word = t1.rdata
        try:
            return decode(word)
        except IllegalInstruction as e:
            raise Trap(CAUSE_ILLEGAL, e.word) from None

    def _enter_trap(self, cause: int, tval: int, epc: int) -> None:
        try:
            raise_trap(self.state, cause, tval, epc)
        except DoubleFault as df:
            self.state.halted = True
            self.fault_diagnostic = str(df)

    def step(self, clock) -> StepReport:
        """Execute one instruction; the core must not be halted."""
        state = self.state
        assert not state.halted, "step on a halted core"
        start = clock.cycle
        txns: list = []

        cause = pending_interrupt(state)
        if cause is not None:
            clock.consume(1)
            state.csr.mcycle = (state.csr.mcycle + 1) & 0xFFFFFFFFFFFFFFFF
            self._enter_trap(cause, 0, state.pc)
            return StepReport(cycles_consumed=1, trap_taken=cause,
                              bus_accesses=txns, start_cycle=start)

        pc = state.pc
        try:
            d = self._fetch(txns, start)
        except Trap as t:
            clock.consume(1)
            state.csr.mcycle = (state.csr.mcycle + 1) & 0xFFFFFFFFFFFFFFFF
            self._enter_trap(t.cause, t.tval, pc)
            return StepReport(cycles_consumed=1, trap_taken=t.cause,
                              bus_accesses=txns, start_cycle=start)

        if d.op == "wfi":
            return self._step_wfi(clock, d, txns, start)

        if d.op == "ebreak" and self.ebreak_halts:
            clock.consume(1)
            state.csr.mcycle = (state.csr.mcycle + 1) & 0xFFFFFFFFFFFFFFFF
            state.halted = True
            return StepReport(cycles_consumed=1, trap_taken=None,
                              bus_accesses=txns, start_cycle=start)

        k = timing_cycles(d, taken=_branch_taken(state, d),
                          wait_states=_split_penalty(state, d))
        clock.consume(k)
        port = _FabricDataPort(self.fabric, self.data_manager, start + 1,
                               txns)
        trap_taken = None
        retired = None
        try:
            retired = exec_functional(state, d, port)
            state.csr.minstret = (state.csr.minstret + 1) \
                & 0xFFFFFFFFFFFFFFFF
        except Trap as t:
            trap_taken = t.cause
            self._enter_trap(t.cause, t.tval, pc)
        state.csr.mcycle = (state.csr.mcycle + k) & 0xFFFFFFFFFFFFFFFF
        return StepReport(cycles_consumed=k, retired=retired,
                          trap_taken=trap_taken, bus_accesses=txns,
                          start_cycle=start)

    def _step_wfi(self, clock, d: DecodedInstr, txns: list,
                  start: int) -> StepReport:
        state = self.state
        k = 0
        while not (state.mip() & state.csr.mie):
            if clock.wfi_should_break():
                if k == 0:
                    clock.consume(1)
                    k = 1
                state.csr.mcycle = (state.csr.mcycle + k) \
                    & 0xFFFFFFFFFFFFFFFF
                return StepReport(cycles_consumed=k, bus_accesses=txns,
                                  start_cycle=start, stalled=True)
            clock.consume(1)
            k += 1
        clock.consume(1)
        k += 1
        retired = exec_functional(state, d, None)  # wfi touches no memory
        state.csr.minstret = (state.csr.minstret + 1) & 0xFFFFFFFFFFFFFFFF
        state.csr.mcycle = (state.csr.mcycle + k) & 0xFFFFFFFFFFFFFFFF
        return StepReport(cycles_consumed=k, retired=retired,
                          bus_accesses=txns, start_cycle=start)
