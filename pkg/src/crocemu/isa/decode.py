"""RV32IMC + Zicsr instruction decoding.

decode() turns a 32-bit word into a canonical DecodedInstr; decode_compressed()
expands a 16-bit encoding to its 32-bit equivalent and decodes that, so every
consumer downstream sees one instruction form regardless of fetch width.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import lru_cache


class IllegalInstruction(Exception):
    """Undecodable encoding; the core raises trap cause 2 for these."""

    def __init__(self, word: int, reason: str = "illegal encoding"):
        super().__init__(f"{reason}: 0x{word & 0xFFFFFFFF:08x}")
        self.word = word & 0xFFFFFFFF


class NotCompressed(Exception):
    """Low two bits are 0b11: caller must fetch a full 32-bit word."""


class InstrKind(enum.Enum):
    ALU = "alu"
    LOAD = "load"
    STORE = "store"
    BRANCH = "branch"
    JAL = "jal"
    JALR = "jalr"
    MUL = "mul"
    DIV = "div"
    CSR = "csr"
    SYSTEM = "system"
    FENCE = "fence"


@dataclass(frozen=True, slots=True)
class DecodedInstr:
    kind: InstrKind
    op: str                  # canonical mnemonic, e.g. "addi", "lw", "mret"
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0             # sign-extended; CSR address for CSR ops
    width: int = 0           # memory ops: 1, 2 or 4 bytes
    signed: bool = False     # loads: sign-extend the loaded value
    was_compressed: bool = False
    size: int = 4            # bytes of fetch consumed
    raw: int = 0             # encoding as fetched (16-bit for compressed)
    expansion: int = 0       # 32-bit equivalent encoding

    @property
    def writes_rd(self) -> bool:
        return self.kind in _WRITES_RD


_WRITES_RD = {
    InstrKind.ALU,
    InstrKind.LOAD,
    InstrKind.JAL,
    InstrKind.JALR,
    InstrKind.MUL,
    InstrKind.DIV,
    InstrKind.CSR,
}


def _sext(value: int, bits: int) -> int:
    if value & (1 << (bits - 1)):
        return value - (1 << bits)
    return value


def _imm_i(w: int) -> int:
    return _sext(w >> 20, 12)


def _imm_s(w: int) -> int:
    return _sext(((w >> 25) << 5) | ((w >> 7) & 0x1F), 12)


def _imm_b(w: int) -> int:
    imm = (((w >> 31) & 1) << 12) | (((w >> 7) & 1) << 11) \
        | (((w >> 25) & 0x3F) << 5) | (((w >> 8) & 0xF) << 1)
    return _sext(imm, 13)


def _imm_u(w: int) -> int:
    return _sext(w & 0xFFFFF000, 32)


def _imm_j(w: int) -> int:
    imm = (((w >> 31) & 1) << 20) | (((w >> 12) & 0xFF) << 12) \
        | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3FF) << 1)
    return _sext(imm, 21)


_LOADS = {0: ("lb", 1, True), 1: ("lh", 2, True), 2: ("lw", 4, True),
          4: ("lbu", 1, False), 5: ("lhu", 2, False)}
_STORES = {0: ("sb", 1), 1: ("sh", 2), 2: ("sw", 4)}
_BRANCHES = {0: "beq", 1: "bne", 4: "blt", 5: "bge", 6: "bltu", 7: "bgeu"}
_OP_IMM = {0: "addi", 2: "slti", 3: "sltiu", 4: "xori", 6: "ori", 7: "andi"}
_OP_BASE = {0: "add", 1: "sll", 2: "slt", 3: "sltu", 4: "xor", 5: "srl",
            6: "or", 7: "and"}
_OP_MULDIV = {0: "mul", 1: "mulh", 2: "mulhsu", 3: "mulhu",
              4: "div", 5: "divu", 6: "rem", 7: "remu"}
_CSR_OPS = {1: "csrrw", 2: "csrrs", 3: "csrrc",
            5: "csrrwi", 6: "csrrsi", 7: "csrrci"}


@lru_cache(maxsize=65536)
def decode(word: int) -> DecodedInstr:
    """Decode a 32-bit instruction word.

    Raises IllegalInstruction for anything outside RV32IM_Zicsr (+FENCE
    and fence.i, which firmware startup code commonly emits).
    """
    w = word & 0xFFFFFFFF
    if w & 0b11 != 0b11:
        raise IllegalInstruction(w, "not a 32-bit encoding")
    if w == 0xFFFFFFFF:
        raise IllegalInstruction(w, "all-ones word")

    opcode = w & 0x7F
    rd = (w >> 7) & 0x1F
    funct3 = (w >> 12) & 0x7
    rs1 = (w >> 15) & 0x1F
    rs2 = (w >> 20) & 0x1F
    funct7 = w >> 25

    def instr(kind, op, **kw):
        return DecodedInstr(kind=kind, op=op, raw=w, expansion=w, **kw)

    if opcode == 0b0110111:
        return instr(InstrKind.ALU, "lui", rd=rd, imm=_imm_u(w))
    if opcode == 0b0010111:
        return instr(InstrKind.ALU, "auipc", rd=rd, imm=_imm_u(w))
    if opcode == 0b1101111:
        return instr(InstrKind.JAL, "jal", rd=rd, imm=_imm_j(w))
    if opcode == 0b1100111:
        if funct3 != 0:
            raise IllegalInstruction(w, "jalr funct3")
        return instr(InstrKind.JALR, "jalr", rd=rd, rs1=rs1, imm=_imm_i(w))
    if opcode == 0b1100011:
        if funct3 not in _BRANCHES:
            raise IllegalInstruction(w, "branch funct3")
        return instr(InstrKind.BRANCH, _BRANCHES[funct3],
                     rs1=rs1, rs2=rs2, imm=_imm_b(w))
    if opcode == 0b0000011:
        if funct3 not in _LOADS:
            raise IllegalInstruction(w, "load funct3")
        op, width, signed = _LOADS[funct3]
        return instr(InstrKind.LOAD, op, rd=rd, rs1=rs1, imm=_imm_i(w),
                     width=width, signed=signed)
    if opcode == 0b0100011:
        if funct3 not in _STORES:
            raise IllegalInstruction(w, "store funct3")
        op, width = _STORES[funct3]
        return instr(InstrKind.STORE, op, rs1=rs1, rs2=rs2, imm=_imm_s(w),
                     width=width)
    if opcode == 0b0010011:
        if funct3 == 1:
            if funct7 != 0:
                raise IllegalInstruction(w, "slli funct7")
            return instr(InstrKind.ALU, "slli", rd=rd, rs1=rs1, imm=rs2)
        if funct3 == 5:
            if funct7 == 0:
                return instr(InstrKind.ALU, "srli", rd=rd, rs1=rs1, imm=rs2)
            if funct7 == 0b0100000:
                return instr(InstrKind.ALU, "srai", rd=rd, rs1=rs1, imm=rs2)
            raise IllegalInstruction(w, "shift funct7")
        return instr(InstrKind.ALU, _OP_IMM[funct3], rd=rd, rs1=rs1,
                     imm=_imm_i(w))
    if opcode == 0b0110011:
        if funct7 == 0b0000001:
            op = _OP_MULDIV[funct3]
            kind = InstrKind.MUL if funct3 < 4 else InstrKind.DIV
            return instr(kind, op, rd=rd, rs1=rs1, rs2=rs2)
        if funct7 == 0:
            return instr(InstrKind.ALU, _OP_BASE[funct3], rd=rd, rs1=rs1,
                         rs2=rs2)
        if funct7 == 0b0100000:
            if funct3 == 0:
                return instr(InstrKind.ALU, "sub", rd=rd, rs1=rs1, rs2=rs2)
            if funct3 == 5:
                return instr(InstrKind.ALU, "sra", rd=rd, rs1=rs1, rs2=rs2)
        raise IllegalInstruction(w, "op funct7")
    if opcode == 0b0001111:
        if funct3 == 0:
            return instr(InstrKind.FENCE, "fence")
        if funct3 == 1:
            return instr(InstrKind.FENCE, "fence.i")
        raise IllegalInstruction(w, "misc-mem funct3")
    if opcode == 0b1110011:
        if funct3 == 0:
            if w == 0x00000073:
                return instr(InstrKind.SYSTEM, "ecall")
            if w == 0x00100073:
                return instr(InstrKind.SYSTEM, "ebreak")
            if w == 0x30200073:
                return instr(InstrKind.SYSTEM, "mret")
            if w == 0x10500073:
                return instr(InstrKind.SYSTEM, "wfi")
            raise IllegalInstruction(w, "system funct3=0")
        if funct3 in _CSR_OPS:
            # rs1 carries the 5-bit zimm for the immediate forms.
            return instr(InstrKind.CSR, _CSR_OPS[funct3], rd=rd, rs1=rs1,
                         imm=w >> 20)
        raise IllegalInstruction(w, "system funct3")
    raise IllegalInstruction(w, "unknown opcode")


# 32-bit word builders used to expand compressed encodings.

def _enc_r(opcode, funct3, funct7, rd, rs1, rs2):
    return opcode | (rd << 7) | (funct3 << 12) | (rs1 << 15) | (rs2 << 20) \
        | (funct7 << 25)


def _enc_i(opcode, funct3, rd, rs1, imm):
    return opcode | (rd << 7) | (funct3 << 12) | (rs1 << 15) \
        | ((imm & 0xFFF) << 20)


def _enc_s(opcode, funct3, rs1, rs2, imm):
    return opcode | ((imm & 0x1F) << 7) | (funct3 << 12) | (rs1 << 15) \
        | (rs2 << 20) | (((imm >> 5) & 0x7F) << 25)


def _enc_b(opcode, funct3, rs1, rs2, imm):
    return opcode | (((imm >> 11) & 1) << 7) | (((imm >> 1) & 0xF) << 8) \
        | (funct3 << 12) | (rs1 << 15) | (rs2 << 20) \
        | (((imm >> 5) & 0x3F) << 25) | (((imm >> 12) & 1) << 31)


def _enc_u(opcode, rd, imm):
    return opcode | (rd << 7) | (imm & 0xFFFFF000)


def _enc_j(opcode, rd, imm):
    return opcode | (rd << 7) | (((imm >> 12) & 0xFF) << 12) \
        | (((imm >> 11) & 1) << 20) | (((imm >> 1) & 0x3FF) << 21) \
        | (((imm >> 20) & 1) << 31)


def _field(h: int, hi: int, lo: int) -> int:
    return (h >> lo) & ((1 << (hi - lo + 1)) - 1)


def expand_compressed(half: int) -> int:
    """Return the 32-bit expansion of a 16-bit encoding.

    Raises NotCompressed when the low two bits mark a 32-bit instruction,
    IllegalInstruction for reserved compressed encodings (including the
    all-zero halfword and the FP slots, absent here without F/D).
    """
    h = half & 0xFFFF
    quadrant = h & 0b11
    if quadrant == 0b11:
        raise NotCompressed
    funct3 = h >> 13

    if quadrant == 0b00:
        if funct3 == 0b000:
            # c.addi4spn: nzuimm == 0 covers the defined-illegal zero halfword
            imm = (_field(h, 12, 11) << 4) | (_field(h, 10, 7) << 6) \
                | (_field(h, 6, 6) << 2) | (_field(h, 5, 5) << 3)
            if imm == 0:
                raise IllegalInstruction(h, "c.addi4spn nzuimm=0")
            return _enc_i(0b0010011, 0, 8 + _field(h, 4, 2), 2, imm)
        if funct3 == 0b010:
            imm = (_field(h, 12, 10) << 3) | (_field(h, 6, 6) << 2) \
                | (_field(h, 5, 5) << 6)
            return _enc_i(0b0000011, 2, 8 + _field(h, 4, 2),
                          8 + _field(h, 9, 7), imm)
        if funct3 == 0b110:
            imm = (_field(h, 12, 10) << 3) | (_field(h, 6, 6) << 2) \
                | (_field(h, 5, 5) << 6)
            return _enc_s(0b0100011, 2, 8 + _field(h, 9, 7),
                          8 + _field(h, 4, 2), imm)
        raise IllegalInstruction(h, "compressed quadrant 0")

    if quadrant == 0b01:
        if funct3 == 0b000:
            imm = _sext((_field(h, 12, 12) << 5) | _field(h, 6, 2), 6)
            r = _field(h, 11, 7)
            return _enc_i(0b0010011, 0, r, r, imm)
        if funct3 in (0b001, 0b101):
            imm = _sext((_field(h, 12, 12) << 11) | (_field(h, 11, 11) << 4)
                        | (_field(h, 10, 9) << 8) | (_field(h, 8, 8) << 10)
                        | (_field(h, 7, 7) << 6) | (_field(h, 6, 6) << 7)
                        | (_field(h, 5, 3) << 1) | (_field(h, 2, 2) << 5), 12)
            return _enc_j(0b1101111, 1 if funct3 == 0b001 else 0, imm)
        if funct3 == 0b010:
            imm = _sext((_field(h, 12, 12) << 5) | _field(h, 6, 2), 6)
            return _enc_i(0b0010011, 0, _field(h, 11, 7), 0, imm)
        if funct3 == 0b011:
            r = _field(h, 11, 7)
            if r == 2:
                imm = _sext((_field(h, 12, 12) << 9) | (_field(h, 6, 6) << 4)
                            | (_field(h, 5, 5) << 6) | (_field(h, 4, 3) << 7)
                            | (_field(h, 2, 2) << 5), 10)
                if imm == 0:
                    raise IllegalInstruction(h, "c.addi16sp imm=0")
                return _enc_i(0b0010011, 0, 2, 2, imm)
            imm = _sext((_field(h, 12, 12) << 17) | (_field(h, 6, 2) << 12),
                        18)
            if imm == 0:
                raise IllegalInstruction(h, "c.lui imm=0")
            return _enc_u(0b0110111, r, imm)
        if funct3 == 0b100:
            funct2 = _field(h, 11, 10)
            r = 8 + _field(h, 9, 7)
            if funct2 == 0b00 or funct2 == 0b01:
                if _field(h, 12, 12):
                    raise IllegalInstruction(h, "compressed shamt[5]=1")
                shamt = _field(h, 6, 2)
                funct7 = 0 if funct2 == 0 else 0b0100000
                return _enc_i(0b0010011, 5, r, r, (funct7 << 5) | shamt)
            if funct2 == 0b10:
                imm = _sext((_field(h, 12, 12) << 5) | _field(h, 6, 2), 6)
                return _enc_i(0b0010011, 7, r, r, imm)
            if _field(h, 12, 12):
                raise IllegalInstruction(h, "reserved quadrant 1 funct6")
            rs2 = 8 + _field(h, 4, 2)
            sub = _field(h, 6, 5)
            if sub == 0b00:
                return _enc_r(0b0110011, 0, 0b0100000, r, r, rs2)
            if sub == 0b01:
                return _enc_r(0b0110011, 4, 0, r, r, rs2)
            if sub == 0b10:
                return _enc_r(0b0110011, 6, 0, r, r, rs2)
            return _enc_r(0b0110011, 7, 0, r, r, rs2)
        if funct3 == 0b110 or funct3 == 0b111:
            imm = _sext((_field(h, 12, 12) << 8) | (_field(h, 11, 10) << 3)
                        | (_field(h, 6, 5) << 6) | (_field(h, 4, 3) << 1)
                        | (_field(h, 2, 2) << 5), 9)
            return _enc_b(0b1100011, 0 if funct3 == 0b110 else 1,
                          8 + _field(h, 9, 7), 0, imm)
        raise IllegalInstruction(h, "compressed quadrant 1")

    # quadrant 0b10
    if funct3 == 0b000:
        if _field(h, 12, 12):
            raise IllegalInstruction(h, "compressed shamt[5]=1")
        r = _field(h, 11, 7)
        return _enc_i(0b0010011, 1, r, r, _field(h, 6, 2))
    if funct3 == 0b010:
        r = _field(h, 11, 7)
        if r == 0:
            raise IllegalInstruction(h, "c.lwsp rd=0")
        imm = (_field(h, 12, 12) << 5) | (_field(h, 6, 4) << 2) \
            | (_field(h, 3, 2) << 6)
        return _enc_i(0b0000011, 2, r, 2, imm)
    if funct3 == 0b100:
        r = _field(h, 11, 7)
        rs2 = _field(h, 6, 2)
        if not _field(h, 12, 12):
            if rs2 == 0:
                if r == 0:
                    raise IllegalInstruction(h, "c.jr rs1=0")
                return _enc_i(0b1100111, 0, 0, r, 0)
            return _enc_r(0b0110011, 0, 0, r, 0, rs2)
        if rs2 == 0:
            if r == 0:
                return 0x00100073  # c.ebreak
            return _enc_i(0b1100111, 0, 1, r, 0)
        return _enc_r(0b0110011, 0, 0, r, r, rs2)
    if funct3 == 0b110:
        imm = (_field(h, 12, 9) << 2) | (_field(h, 8, 7) << 6)
        return _enc_s(0b0100011, 2, 2, _field(h, 6, 2), imm)
    raise IllegalInstruction(h, "compressed quadrant 2")


@lru_cache(maxsize=65536)
def decode_compressed(half: int) -> DecodedInstr:
    """Decode a 16-bit encoding via its 32-bit expansion."""
    word = expand_compressed(half)
    base = decode(word)
    return replace(base, was_compressed=True, size=2, raw=half & 0xFFFF)
