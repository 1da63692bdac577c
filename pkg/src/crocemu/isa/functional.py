"""Untimed architectural model: machine state, CSRs, traps, execution.

exec_functional() applies one decoded instruction's architectural effects
through a byte-addressed data port with no cycle accounting. The timed core
reuses these semantics; FunctionalCore wraps them into the golden model the
differential suite compares against.
"""

from __future__ import annotations

from dataclasses import dataclass

from .decode import DecodedInstr, IllegalInstruction, InstrKind, \
    NotCompressed, decode, decode_compressed

MASK32 = 0xFFFFFFFF

# Trap causes (mcause values)
CAUSE_FETCH_MISALIGNED = 0
CAUSE_FETCH_FAULT = 1
CAUSE_ILLEGAL = 2
CAUSE_BREAKPOINT = 3
CAUSE_LOAD_MISALIGNED = 4
CAUSE_LOAD_FAULT = 5
CAUSE_STORE_MISALIGNED = 6
CAUSE_STORE_FAULT = 7
CAUSE_ECALL_M = 11
IRQ_TIMER = 0x80000007
IRQ_EXTERNAL = 0x8000000B

MSTATUS_MIE = 1 << 3
MSTATUS_MPIE = 1 << 7
MSTATUS_MPP = 0b11 << 11     # hardwired: machine mode only
MIP_MTIP = 1 << 7
MIP_MEIP = 1 << 11


class MisalignedAccess(Exception):
    def __init__(self, addr: int):
        super().__init__(f"misaligned access at 0x{addr:08x}")
        self.addr = addr


class BusError(Exception):
    def __init__(self, addr: int, we: bool = False):
        super().__init__(f"bus error at 0x{addr:08x} ({'W' if we else 'R'})")
        self.addr = addr
        self.we = we


class Trap(Exception):
    """Internal signal: unwinds execution into the trap-entry path."""

    def __init__(self, cause: int, tval: int = 0):
        super().__init__(f"trap cause={cause} tval=0x{tval & MASK32:08x}")
        self.cause = cause
        self.tval = tval & MASK32


class DoubleFault(Exception):
    """Trap raised while mtvec is still 0: halt and surface the bug."""

    def __init__(self, cause: int, tval: int, epc: int):
        super().__init__(
            f"double fault: trap cause={cause} tval=0x{tval:08x} "
            f"at pc=0x{epc:08x} with mtvec=0")
        self.cause = cause
        self.tval = tval
        self.epc = epc


# CSR addresses
CSR_MSTATUS = 0x300
CSR_MIE = 0x304
CSR_MTVEC = 0x305
CSR_MSCRATCH = 0x340
CSR_MEPC = 0x341
CSR_MCAUSE = 0x342
CSR_MTVAL = 0x343
CSR_MIP = 0x344
CSR_MCYCLE = 0xB00
CSR_MINSTRET = 0xB02
CSR_MCYCLEH = 0xB80
CSR_MINSTRETH = 0xB82
CSR_CYCLE = 0xC00
CSR_TIME = 0xC01
CSR_INSTRET = 0xC02
CSR_CYCLEH = 0xC80
CSR_TIMEH = 0xC81
CSR_INSTRETH = 0xC82


class CsrFile:
    """Machine-mode CSR subset; mcycle/minstret are live 64-bit counters."""

    __slots__ = ("mstatus", "mtvec", "mepc", "mcause", "mtval", "mie",
                 "mscratch", "mcycle", "minstret")

    def __init__(self):
        self.reset()

    def reset(self):
        self.mstatus = 0
        self.mtvec = 0
        self.mepc = 0
        self.mcause = 0
        self.mtval = 0
        self.mie = 0
        self.mscratch = 0
        self.mcycle = 0
        self.minstret = 0


class ArchState:
    """Architectural core state: PC, x-registers, CSRs, interrupt lines."""

    __slots__ = ("pc", "regs", "csr", "halted", "irq_timer", "irq_external",
                 "c_ext")

    def __init__(self, reset_pc: int = 0, c_ext: bool = True):
        self.pc = reset_pc & MASK32
        self.regs = [0] * 32
        self.csr = CsrFile()
        self.halted = False
        self.irq_timer = False
        self.irq_external = False
        self.c_ext = c_ext

    def write_reg(self, index: int, value: int) -> None:
        # x0 writes are discarded, keeping regs[0] == 0 at all times
        if index:
            self.regs[index] = value & MASK32

    def mip(self) -> int:
        return (MIP_MTIP if self.irq_timer else 0) \
            | (MIP_MEIP if self.irq_external else 0)

    def reset(self, reset_pc: int) -> None:
        self.pc = reset_pc & MASK32
        self.regs = [0] * 32
        self.csr.reset()
        self.halted = False
        self.irq_timer = False
        self.irq_external = False


def csr_read(state: ArchState, addr: int) -> int:
    csr = state.csr
    if addr == CSR_MSTATUS:
        return csr.mstatus | MSTATUS_MPP
    if addr == CSR_MIE:
        return csr.mie
    if addr == CSR_MTVEC:
        return csr.mtvec
    if addr == CSR_MSCRATCH:
        return csr.mscratch
    if addr == CSR_MEPC:
        return csr.mepc
    if addr == CSR_MCAUSE:
        return csr.mcause
    if addr == CSR_MTVAL:
        return csr.mtval
    if addr == CSR_MIP:
        return state.mip()
    if addr in (CSR_MCYCLE, CSR_CYCLE, CSR_TIME):
        return csr.mcycle & MASK32
    if addr in (CSR_MCYCLEH, CSR_CYCLEH, CSR_TIMEH):
        return (csr.mcycle >> 32) & MASK32
    if addr in (CSR_MINSTRET, CSR_INSTRET):
        return csr.minstret & MASK32
    if addr in (CSR_MINSTRETH, CSR_INSTRETH):
        return (csr.minstret >> 32) & MASK32
    raise IllegalInstruction(addr, "unimplemented CSR")


def csr_write(state: ArchState, addr: int, value: int) -> None:
    if (addr >> 10) & 0b11 == 0b11:
        raise IllegalInstruction(addr, "write to read-only CSR")
    csr = state.csr
    value &= MASK32
    if addr == CSR_MSTATUS:
        csr.mstatus = value & (MSTATUS_MIE | MSTATUS_MPIE)
    elif addr == CSR_MIE:
        csr.mie = value & (MIP_MTIP | MIP_MEIP)
    elif addr == CSR_MTVEC:
        csr.mtvec = value & ~0b11  # direct mode only
    elif addr == CSR_MSCRATCH:
        csr.mscratch = value
    elif addr == CSR_MEPC:
        csr.mepc = value & (~0b01 if state.c_ext else ~0b11) & MASK32
    elif addr == CSR_MCAUSE:
        csr.mcause = value
    elif addr == CSR_MTVAL:
        csr.mtval = value
    elif addr == CSR_MIP:
        pass  # pending bits mirror the interrupt lines; writes ignored
    elif addr == CSR_MCYCLE:
        csr.mcycle = (csr.mcycle & ~MASK32) | value
    elif addr == CSR_MCYCLEH:
        csr.mcycle = (csr.mcycle & MASK32) | (value << 32)
    elif addr == CSR_MINSTRET:
        csr.minstret = (csr.minstret & ~MASK32) | value
    elif addr == CSR_MINSTRETH:
        csr.minstret = (csr.minstret & MASK32) | (value << 32)
    else:
        raise IllegalInstruction(addr, "unimplemented CSR")


def csr_op(state: ArchState, addr: int, op: str, rs1_index: int) -> int:
    """Apply one Zicsr operation; returns the old CSR value (for rd).

    rs1_index is the rs1 register number, or the 5-bit zimm for the
    immediate forms. CSRRS/CSRRC with rs1=x0 (zimm=0) never write, so they
    are legal on read-only CSRs.
    """
    immediate = op.endswith("i")
    src = rs1_index if immediate else state.regs[rs1_index]
    write_intent = op in ("csrrw", "csrrwi") or rs1_index != 0
    old = csr_read(state, addr)
    if write_intent:
        if op in ("csrrw", "csrrwi"):
            new = src
        elif op in ("csrrs", "csrrsi"):
            new = old | src
        else:
            new = old & ~src
        csr_write(state, addr, new)
    return old


def raise_trap(state: ArchState, cause: int, tval: int, epc: int) -> None:
    """Enter the machine trap handler per the privileged architecture.

    A trap with mtvec still at its reset value of 0 escalates to
    DoubleFault so broken firmware halts loudly instead of looping at 0.
    """
    csr = state.csr
    if csr.mtvec == 0:
        raise DoubleFault(cause, tval & MASK32, epc & MASK32)
    csr.mepc = epc & MASK32 & (~0b01 if state.c_ext else ~0b11) & MASK32
    csr.mcause = cause & MASK32
    csr.mtval = tval & MASK32
    if csr.mstatus & MSTATUS_MIE:
        csr.mstatus |= MSTATUS_MPIE
    else:
        csr.mstatus &= ~MSTATUS_MPIE & MASK32
    csr.mstatus &= ~MSTATUS_MIE & MASK32
    state.pc = csr.mtvec & ~0b11 & MASK32


def pending_interrupt(state: ArchState):
    """Cause code of the highest-priority enabled pending interrupt."""
    if not state.csr.mstatus & MSTATUS_MIE:
        return None
    pending = state.mip() & state.csr.mie
    if pending & MIP_MEIP:
        return IRQ_EXTERNAL
    if pending & MIP_MTIP:
        return IRQ_TIMER
    return None


@dataclass(slots=True)
class Retirement:
    """Architectural outcome of one instruction."""

    pc: int
    next_pc: int
    instr: DecodedInstr
    rd: int | None = None          # destination register when one was written
    rd_value: int = 0
    taken: bool = False            # control transfer actually redirected


def _signed(value: int) -> int:
    return value - 0x100000000 if value & 0x80000000 else value


def _div_trunc(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def exec_functional(state: ArchState, d: DecodedInstr, port) -> Retirement:
    """Execute one instruction's architectural semantics.

    No cycle accounting. Bus and alignment failures surface as Trap;
    the caller owns trap entry (raise_trap) and retirement counting.
    """
    pc = state.pc
    regs = state.regs
    op = d.op
    kind = d.kind
    next_pc = (pc + d.size) & MASK32
    rd_value = 0
    rd = None
    taken = False
    align_mask = 0b01 if state.c_ext else 0b11

    if kind is InstrKind.ALU:
        a = regs[d.rs1]
        if op == "lui":
            rd_value = d.imm & MASK32
        elif op == "auipc":
            rd_value = (pc + d.imm) & MASK32
        elif op == "addi":
            rd_value = (a + d.imm) & MASK32
        elif op == "xori":
            rd_value = (a ^ d.imm) & MASK32
        elif op == "ori":
            rd_value = (a | d.imm) & MASK32
        elif op == "andi":
            rd_value = (a & d.imm) & MASK32
        elif op == "slti":
            rd_value = 1 if _signed(a) < d.imm else 0
        elif op == "sltiu":
            rd_value = 1 if a < (d.imm & MASK32) else 0
        elif op == "slli":
            rd_value = (a << d.imm) & MASK32
        elif op == "srli":
            rd_value = a >> d.imm
        elif op == "srai":
            rd_value = (_signed(a) >> d.imm) & MASK32
        else:
            b = regs[d.rs2]
            if op == "add":
                rd_value = (a + b) & MASK32
            elif op == "sub":
                rd_value = (a - b) & MASK32
            elif op == "sll":
                rd_value = (a << (b & 31)) & MASK32
            elif op == "srl":
                rd_value = a >> (b & 31)
            elif op == "sra":
                rd_value = (_signed(a) >> (b & 31)) & MASK32
            elif op == "slt":
                rd_value = 1 if _signed(a) < _signed(b) else 0
            elif op == "sltu":
                rd_value = 1 if a < b else 0
            elif op == "xor":
                rd_value = a ^ b
            elif op == "or":
                rd_value = a | b
            else:  # and
                rd_value = a & b
        rd = d.rd

    elif kind is InstrKind.LOAD:
        addr = (regs[d.rs1] + d.imm) & MASK32
        try:
            value = port.read(addr, d.width)
        except BusError as e:
            raise Trap(CAUSE_LOAD_FAULT, e.addr) from None
        except MisalignedAccess as e:
            raise Trap(CAUSE_LOAD_MISALIGNED, e.addr) from None
        if d.signed and value & (1 << (8 * d.width - 1)):
            value |= MASK32 << (8 * d.width)
        rd_value = value & MASK32
        rd = d.rd

    elif kind is InstrKind.STORE:
        addr = (regs[d.rs1] + d.imm) & MASK32
        try:
            port.write(addr, d.width, regs[d.rs2] & ((1 << (8 * d.width)) - 1))
        except BusError as e:
            raise Trap(CAUSE_STORE_FAULT, e.addr) from None
        except MisalignedAccess as e:
            raise Trap(CAUSE_STORE_MISALIGNED, e.addr) from None

    elif kind is InstrKind.BRANCH:
        a, b = regs[d.rs1], regs[d.rs2]
        if op == "beq":
            taken = a == b
        elif op == "bne":
            taken = a != b
        elif op == "blt":
            taken = _signed(a) < _signed(b)
        elif op == "bge":
            taken = _signed(a) >= _signed(b)
        elif op == "bltu":
            taken = a < b
        else:  # bgeu
            taken = a >= b
        if taken:
            target = (pc + d.imm) & MASK32
            if target & align_mask:
                raise Trap(CAUSE_FETCH_MISALIGNED, target)
            next_pc = target

    elif kind is InstrKind.JAL:
        target = (pc + d.imm) & MASK32
        if target & align_mask:
            raise Trap(CAUSE_FETCH_MISALIGNED, target)
        rd_value = (pc + d.size) & MASK32
        rd = d.rd
        next_pc = target
        taken = True

    elif kind is InstrKind.JALR:
        target = (regs[d.rs1] + d.imm) & MASK32 & ~1
        if target & align_mask:
            raise Trap(CAUSE_FETCH_MISALIGNED, target)
        rd_value = (pc + d.size) & MASK32
        rd = d.rd
        next_pc = target
        taken = True

    elif kind is InstrKind.MUL:
        a, b = regs[d.rs1], regs[d.rs2]
        if op == "mul":
            rd_value = (a * b) & MASK32
        elif op == "mulh":
            rd_value = ((_signed(a) * _signed(b)) >> 32) & MASK32
        elif op == "mulhsu":
            rd_value = ((_signed(a) * b) >> 32) & MASK32
        else:  # mulhu
            rd_value = ((a * b) >> 32) & MASK32
        rd = d.rd

    elif kind is InstrKind.DIV:
        a, b = regs[d.rs1], regs[d.rs2]
        sa, sb = _signed(a), _signed(b)
        if op == "div":
            rd_value = MASK32 if b == 0 else _div_trunc(sa, sb) & MASK32
        elif op == "divu":
            rd_value = MASK32 if b == 0 else a // b
        elif op == "rem":
            rd_value = a if b == 0 else (sa - _div_trunc(sa, sb) * sb) & MASK32
        else:  # remu
            rd_value = a if b == 0 else a % b
        rd = d.rd

    elif kind is InstrKind.CSR:
        try:
            rd_value = csr_op(state, d.imm, op, d.rs1)
        except IllegalInstruction:
            raise Trap(CAUSE_ILLEGAL, d.expansion) from None
        rd = d.rd

    elif kind is InstrKind.SYSTEM:
        if op == "ecall":
            raise Trap(CAUSE_ECALL_M, 0)
        if op == "ebreak":
            raise Trap(CAUSE_BREAKPOINT, pc)
        if op == "mret":
            csr = state.csr
            next_pc = csr.mepc
            if csr.mstatus & MSTATUS_MPIE:
                csr.mstatus |= MSTATUS_MIE
            else:
                csr.mstatus &= ~MSTATUS_MIE & MASK32
            csr.mstatus |= MSTATUS_MPIE
            taken = True
        # wfi: architecturally a nop here; the timed core owns the stall

    # FENCE: nothing to order in a single-hart in-order model

    if rd is not None:
        state.write_reg(rd, rd_value)
        rd_value = state.regs[rd]  # report the post-write value (x0 -> 0)
    state.pc = next_pc
    return Retirement(pc=pc, next_pc=next_pc, instr=d, rd=rd,
                      rd_value=rd_value, taken=taken)


class BytePort:
    """Byte-addressed data port over a flat buffer; the golden model's view.

    Misaligned accesses are handled natively (byte-wise), matching the
    timed core's split-transaction behavior. Out-of-range touches raise
    BusError on the first offending byte.
    """

    def __init__(self, base: int, buf: bytearray):
        self.base = base
        self.buf = buf

    def _check(self, addr: int, width: int, we: bool) -> int:
        off = (addr - self.base) & MASK32
        if off + width > len(self.buf):
            first_bad = addr if off >= len(self.buf) \
                else self.base + len(self.buf)
            raise BusError(first_bad & MASK32, we)
        return off

    def read(self, addr: int, width: int) -> int:
        off = self._check(addr, width, False)
        return int.from_bytes(self.buf[off:off + width], "little")

    def write(self, addr: int, width: int, value: int) -> None:
        off = self._check(addr, width, True)
        self.buf[off:off + width] = value.to_bytes(width, "little")


class FunctionalCore:
    """Golden-model interpreter: fetch/decode/execute with no timing.

    Fetches straight from a BytePort-backed image, counts minstret, and
    performs the same trap entry as the timed core. Used for differential
    testing; mcycle is never advanced here.
    """

    def __init__(self, image_base: int, image: bytearray, reset_pc: int,
                 c_ext: bool = True):
        self.state = ArchState(reset_pc, c_ext=c_ext)
        self.port = BytePort(image_base, image)

    def _fetch(self) -> DecodedInstr:
        pc = self.state.pc
        half = self.port.read(pc, 2)
        if self.state.c_ext:
            try:
                return decode_compressed(half)
            except NotCompressed:
                pass
        word = half | (self.port.read((pc + 2) & MASK32, 2) << 16)
        return decode(word)

    def step(self) -> Retirement | None:
        state = self.state
        cause = pending_interrupt(state)
        if cause is not None:
            raise_trap(state, cause, 0, state.pc)
            return None
        pc = state.pc
        try:
            try:
                d = self._fetch()
            except BusError as e:
                raise Trap(CAUSE_FETCH_FAULT, e.addr) from None
            except IllegalInstruction as e:
                raise Trap(CAUSE_ILLEGAL, e.word) from None
            ret = exec_functional(state, d, self.port)
        except Trap as t:
            raise_trap(state, t.cause, t.tval, pc)
            return None
        state.csr.minstret = (state.csr.minstret + 1) & 0xFFFFFFFFFFFFFFFF
        return ret

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()
