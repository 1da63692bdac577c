"""Minimal RV32IMC instruction encoders for building test firmware.

Each function returns an encoding as an int (32-bit, or 16-bit for the C_*
forms). `assemble` flattens a mixed list into little-endian bytes.
"""


def _r(op, f3, f7, rd, rs1, rs2):
    return op | (rd << 7) | (f3 << 12) | (rs1 << 15) | (rs2 << 20) | (f7 << 25)


def _i(op, f3, rd, rs1, imm):
    return op | (rd << 7) | (f3 << 12) | (rs1 << 15) | ((imm & 0xFFF) << 20)


def _s(op, f3, rs1, rs2, imm):
    return op | ((imm & 0x1F) << 7) | (f3 << 12) | (rs1 << 15) | (rs2 << 20) \
        | (((imm >> 5) & 0x7F) << 25)


def _b(op, f3, rs1, rs2, imm):
    return op | (((imm >> 11) & 1) << 7) | (((imm >> 1) & 0xF) << 8) \
        | (f3 << 12) | (rs1 << 15) | (rs2 << 20) \
        | (((imm >> 5) & 0x3F) << 25) | (((imm >> 12) & 1) << 31)


def _u(op, rd, imm):
    return op | (rd << 7) | (imm & 0xFFFFF000)


def _j(op, rd, imm):
    return op | (rd << 7) | (((imm >> 12) & 0xFF) << 12) \
        | (((imm >> 11) & 1) << 20) | (((imm >> 1) & 0x3FF) << 21) \
        | (((imm >> 20) & 1) << 31)


def ADD(rd, rs1, rs2):
    return _r(0x33, 0, 0x00, rd, rs1, rs2)


def SUB(rd, rs1, rs2):
    return _r(0x33, 0, 0x20, rd, rs1, rs2)


def SLL(rd, rs1, rs2):
    return _r(0x33, 1, 0x00, rd, rs1, rs2)


def SLT(rd, rs1, rs2):
    return _r(0x33, 2, 0x00, rd, rs1, rs2)


def SLTU(rd, rs1, rs2):
    return _r(0x33, 3, 0x00, rd, rs1, rs2)


def XOR(rd, rs1, rs2):
    return _r(0x33, 4, 0x00, rd, rs1, rs2)


def SRL(rd, rs1, rs2):
    return _r(0x33, 5, 0x00, rd, rs1, rs2)


def SRA(rd, rs1, rs2):
    return _r(0x33, 5, 0x20, rd, rs1, rs2)


def OR(rd, rs1, rs2):
    return _r(0x33, 6, 0x00, rd, rs1, rs2)


def AND(rd, rs1, rs2):
    return _r(0x33, 7, 0x00, rd, rs1, rs2)


def MUL(rd, rs1, rs2):
    return _r(0x33, 0, 0x01, rd, rs1, rs2)


def MULH(rd, rs1, rs2):
    return _r(0x33, 1, 0x01, rd, rs1, rs2)


def MULHSU(rd, rs1, rs2):
    return _r(0x33, 2, 0x01, rd, rs1, rs2)


def MULHU(rd, rs1, rs2):
    return _r(0x33, 3, 0x01, rd, rs1, rs2)


def DIV(rd, rs1, rs2):
    return _r(0x33, 4, 0x01, rd, rs1, rs2)


def DIVU(rd, rs1, rs2):
    return _r(0x33, 5, 0x01, rd, rs1, rs2)


def REM(rd, rs1, rs2):
    return _r(0x33, 6, 0x01, rd, rs1, rs2)


def REMU(rd, rs1, rs2):
    return _r(0x33, 7, 0x01, rd, rs1, rs2)


def ADDI(rd, rs1, imm):
    return _i(0x13, 0, rd, rs1, imm)


def SLTI(rd, rs1, imm):
    return _i(0x13, 2, rd, rs1, imm)


def SLTIU(rd, rs1, imm):
    return _i(0x13, 3, rd, rs1, imm)


def XORI(rd, rs1, imm):
    return _i(0x13, 4, rd, rs1, imm)


def ORI(rd, rs1, imm):
    return _i(0x13, 6, rd, rs1, imm)


def ANDI(rd, rs1, imm):
    return _i(0x13, 7, rd, rs1, imm)


def SLLI(rd, rs1, shamt):
    return _i(0x13, 1, rd, rs1, shamt)


def SRLI(rd, rs1, shamt):
    return _i(0x13, 5, rd, rs1, shamt)


def SRAI(rd, rs1, shamt):
    return _i(0x13, 5, rd, rs1, 0x400 | shamt)


def LB(rd, rs1, imm):
    return _i(0x03, 0, rd, rs1, imm)


def LH(rd, rs1, imm):
    return _i(0x03, 1, rd, rs1, imm)


def LW(rd, rs1, imm):
    return _i(0x03, 2, rd, rs1, imm)


def LBU(rd, rs1, imm):
    return _i(0x03, 4, rd, rs1, imm)


def LHU(rd, rs1, imm):
    return _i(0x03, 5, rd, rs1, imm)


def SB(rs2, rs1, imm):
    return _s(0x23, 0, rs1, rs2, imm)


def SH(rs2, rs1, imm):
    return _s(0x23, 1, rs1, rs2, imm)


def SW(rs2, rs1, imm):
    return _s(0x23, 2, rs1, rs2, imm)


def BEQ(rs1, rs2, imm):
    return _b(0x63, 0, rs1, rs2, imm)


def BNE(rs1, rs2, imm):
    return _b(0x63, 1, rs1, rs2, imm)


def BLT(rs1, rs2, imm):
    return _b(0x63, 4, rs1, rs2, imm)


def BGE(rs1, rs2, imm):
    return _b(0x63, 5, rs1, rs2, imm)


def BLTU(rs1, rs2, imm):
    return _b(0x63, 6, rs1, rs2, imm)


def BGEU(rs1, rs2, imm):
    return _b(0x63, 7, rs1, rs2, imm)


def LUI(rd, imm):
    return _u(0x37, rd, imm)


def AUIPC(rd, imm):
    return _u(0x17, rd, imm)


def JAL(rd, imm):
    return _j(0x6F, rd, imm)


def JALR(rd, rs1, imm):
    return _i(0x67, 0, rd, rs1, imm)


def CSRRW(rd, csr, rs1):
    return _i(0x73, 1, rd, rs1, csr)


def CSRRS(rd, csr, rs1):
    return _i(0x73, 2, rd, rs1, csr)


def CSRRC(rd, csr, rs1):
    return _i(0x73, 3, rd, rs1, csr)


def CSRRWI(rd, csr, zimm):
    return _i(0x73, 5, rd, zimm, csr)


def CSRRSI(rd, csr, zimm):
    return _i(0x73, 6, rd, zimm, csr)


def CSRRCI(rd, csr, zimm):
    return _i(0x73, 7, rd, zimm, csr)


ECALL = 0x00000073
EBREAK = 0x00100073
MRET = 0x30200073
WFI = 0x10500073
FENCE = 0x0000000F
FENCE_I = 0x0000100F
NOP = 0x00000013


def LI(rd, value):
    """lui+addi pair (or single addi) loading a full 32-bit constant."""
    value &= 0xFFFFFFFF
    lo = value & 0xFFF
    if lo >= 0x800:
        lo -= 0x1000
    hi = (value - lo) & 0xFFFFFFFF
    if hi == 0:
        return [ADDI(rd, 0, lo)]
    if lo == 0:
        return [LUI(rd, hi)]
    return [LUI(rd, hi), ADDI(rd, rd, lo)]


# Compressed encoders. rp arguments take the full register number (8..15).

def _rp(r):
    assert 8 <= r <= 15
    return r - 8


def C_NOP():
    return 0x0001


def C_ADDI(rd, imm):
    return 0x0001 | (((imm >> 5) & 1) << 12) | (rd << 7) | ((imm & 0x1F) << 2)


def C_LI(rd, imm):
    return 0x4001 | (((imm >> 5) & 1) << 12) | (rd << 7) | ((imm & 0x1F) << 2)


def C_LUI(rd, imm17_12):
    # imm17_12: value of imm[17:12], nonzero
    return 0x6001 | (((imm17_12 >> 5) & 1) << 12) | (rd << 7) \
        | ((imm17_12 & 0x1F) << 2)


def C_ADDI16SP(imm):
    return 0x6101 | (((imm >> 9) & 1) << 12) | (((imm >> 4) & 1) << 6) \
        | (((imm >> 6) & 1) << 5) | (((imm >> 7) & 3) << 3) \
        | (((imm >> 5) & 1) << 2)


def C_ADDI4SPN(rdp, imm):
    return 0x0000 | (((imm >> 4) & 3) << 11) | (((imm >> 6) & 0xF) << 7) \
        | (((imm >> 2) & 1) << 6) | (((imm >> 3) & 1) << 5) | (_rp(rdp) << 2)


def C_MV(rd, rs2):
    return 0x8002 | (rd << 7) | (rs2 << 2)


def C_ADD(rd, rs2):
    return 0x9002 | (rd << 7) | (rs2 << 2)


def C_SUB(rdp, rs2p):
    return 0x8C01 | (_rp(rdp) << 7) | (_rp(rs2p) << 2)


def C_XOR(rdp, rs2p):
    return 0x8C21 | (_rp(rdp) << 7) | (_rp(rs2p) << 2)


def C_OR(rdp, rs2p):
    return 0x8C41 | (_rp(rdp) << 7) | (_rp(rs2p) << 2)


def C_AND(rdp, rs2p):
    return 0x8C61 | (_rp(rdp) << 7) | (_rp(rs2p) << 2)


def C_ANDI(rdp, imm):
    return 0x8801 | (((imm >> 5) & 1) << 12) | (_rp(rdp) << 7) \
        | ((imm & 0x1F) << 2)


def C_SLLI(rd, shamt):
    return 0x0002 | (rd << 7) | ((shamt & 0x1F) << 2)


def C_SRLI(rdp, shamt):
    return 0x8001 | (_rp(rdp) << 7) | ((shamt & 0x1F) << 2)


def C_SRAI(rdp, shamt):
    return 0x8401 | (_rp(rdp) << 7) | ((shamt & 0x1F) << 2)


def C_LW(rdp, rs1p, imm):
    return 0x4000 | (((imm >> 3) & 7) << 10) | (_rp(rs1p) << 7) \
        | (((imm >> 2) & 1) << 6) | (((imm >> 6) & 1) << 5) | (_rp(rdp) << 2)


def C_SW(rs2p, rs1p, imm):
    return 0xC000 | (((imm >> 3) & 7) << 10) | (_rp(rs1p) << 7) \
        | (((imm >> 2) & 1) << 6) | (((imm >> 6) & 1) << 5) | (_rp(rs2p) << 2)


def C_LWSP(rd, imm):
    return 0x4002 | (((imm >> 5) & 1) << 12) | (rd << 7) \
        | (((imm >> 2) & 7) << 4) | (((imm >> 6) & 3) << 2)


def C_SWSP(rs2, imm):
    return 0xC002 | (((imm >> 2) & 0xF) << 9) | (((imm >> 6) & 3) << 7) \
        | (rs2 << 2)


def C_J(imm):
    return 0xA001 | _cj(imm)


def C_JAL(imm):
    return 0x2001 | _cj(imm)


def _cj(imm):
    return (((imm >> 11) & 1) << 12) | (((imm >> 4) & 1) << 11) \
        | (((imm >> 8) & 3) << 9) | (((imm >> 10) & 1) << 8) \
        | (((imm >> 6) & 1) << 7) | (((imm >> 7) & 1) << 6) \
        | (((imm >> 1) & 7) << 3) | (((imm >> 5) & 1) << 2)


def C_BEQZ(rs1p, imm):
    return 0xC001 | _cb(rs1p, imm)


def C_BNEZ(rs1p, imm):
    return 0xE001 | _cb(rs1p, imm)


def _cb(rs1p, imm):
    return (((imm >> 8) & 1) << 12) | (((imm >> 3) & 3) << 10) \
        | (_rp(rs1p) << 7) | (((imm >> 6) & 3) << 5) \
        | (((imm >> 1) & 3) << 3) | (((imm >> 5) & 1) << 2)


def C_JR(rs1):
    return 0x8002 | (rs1 << 7)


def C_JALR(rs1):
    return 0x9002 | (rs1 << 7)


C_EBREAK = 0x9002


def assemble(items) -> bytes:
    """Flatten ints (16- or 32-bit encodings) and nested lists to bytes."""
    out = bytearray()
    stack = list(items)[::-1]
    while stack:
        item = stack.pop()
        if isinstance(item, (list, tuple)):
            stack.extend(reversed(item))
        elif item <= 0xFFFF and item & 0b11 != 0b11:
            out += item.to_bytes(2, "little")
        else:
            out += item.to_bytes(4, "little")
    return bytes(out)
