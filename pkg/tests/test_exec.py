import random

import pytest

from crocemu.isa import decode
from crocemu.isa.functional import (ArchState, BytePort, DoubleFault,
                                    FunctionalCore, Trap, csr_op,
                                    exec_functional, pending_interrupt,
                                    raise_trap)
from crocemu.isa.functional import CAUSE_ILLEGAL, MSTATUS_MIE

import rvasm


def run_one(word, regs=None, pc=0x1000_0000, mem=None, base=0x2000_0000):
    state = ArchState(pc)
    for i, v in (regs or {}).items():
        state.regs[i] = v & 0xFFFFFFFF
    port = BytePort(base, mem if mem is not None else bytearray(64))
    ret = exec_functional(state, decode(word), port)
    return state, ret


def test_add():
    state, ret = run_one(rvasm.ADD(5, 1, 2), {1: 2, 2: 3})
    assert state.regs[5] == 5
    assert ret.next_pc == 0x1000_0004


def test_div_by_zero_yields_all_ones_without_trap():
    state, _ = run_one(rvasm.DIV(3, 1, 2), {1: 1234, 2: 0})
    assert state.regs[3] == 0xFFFF_FFFF


def test_divide_overflow():
    state, _ = run_one(rvasm.DIV(3, 1, 2), {1: 0x8000_0000, 2: 0xFFFF_FFFF})
    assert state.regs[3] == 0x8000_0000
    state, _ = run_one(rvasm.REM(3, 1, 2), {1: 0x8000_0000, 2: 0xFFFF_FFFF})
    assert state.regs[3] == 0


def test_rem_by_zero_returns_dividend():
    state, _ = run_one(rvasm.REM(3, 1, 2), {1: 77, 2: 0})
    assert state.regs[3] == 77
    state, _ = run_one(rvasm.REMU(3, 1, 2), {1: 0xFFFF_FF00, 2: 0})
    assert state.regs[3] == 0xFFFF_FF00


def test_srai_sign_extends():
    state, _ = run_one(rvasm.SRAI(2, 1, 4), {1: 0x8000_0000})
    assert state.regs[2] == 0xF800_0000


def test_x0_write_discarded():
    state, ret = run_one(rvasm.ADDI(0, 0, 123))
    assert state.regs[0] == 0
    assert ret.rd == 0 and ret.rd_value == 0


def test_signed_compare():
    state, _ = run_one(rvasm.SLT(3, 1, 2), {1: 0xFFFF_FFFF, 2: 1})
    assert state.regs[3] == 1  # -1 < 1
    state, _ = run_one(rvasm.SLTU(3, 1, 2), {1: 0xFFFF_FFFF, 2: 1})
    assert state.regs[3] == 0


def test_mulh_variants():
    a, b = 0x8000_0000, 0xFFFF_FFFF
    state, _ = run_one(rvasm.MULH(3, 1, 2), {1: a, 2: b})
    assert state.regs[3] == ((-(1 << 31) * -1) >> 32) & 0xFFFFFFFF
    state, _ = run_one(rvasm.MULHU(3, 1, 2), {1: a, 2: b})
    assert state.regs[3] == ((a * b) >> 32) & 0xFFFFFFFF
    state, _ = run_one(rvasm.MULHSU(3, 1, 2), {1: a, 2: b})
    assert state.regs[3] == ((-(1 << 31) * b) >> 32) & 0xFFFFFFFF


def test_load_store_roundtrip_all_widths():
    mem = bytearray(64)
    base = 0x2000_0000
    run_one(rvasm.SW(2, 1, 8), {1: base, 2: 0xDEAD_BEEF}, mem=mem)
    state, _ = run_one(rvasm.LW(3, 1, 8), {1: base}, mem=mem)
    assert state.regs[3] == 0xDEAD_BEEF
    state, _ = run_one(rvasm.LB(3, 1, 11), {1: base}, mem=mem)
    assert state.regs[3] == 0xFFFF_FFDE  # sign-extended
    state, _ = run_one(rvasm.LBU(3, 1, 11), {1: base}, mem=mem)
    assert state.regs[3] == 0xDE
    state, _ = run_one(rvasm.LHU(3, 1, 10), {1: base}, mem=mem)
    assert state.regs[3] == 0xDEAD
    state, _ = run_one(rvasm.LH(3, 1, 10), {1: base}, mem=mem)
    assert state.regs[3] == 0xFFFF_DEAD


def test_misaligned_load_handled_bytewise():
    mem = bytearray(b"\x11\x22\x33\x44\x55\x66\x77\x88")
    state, _ = run_one(rvasm.LW(3, 1, 1), {1: 0x2000_0000}, mem=mem)
    assert state.regs[3] == 0x55443322


def test_load_out_of_range_traps_cause_5():
    with pytest.raises(Trap) as e:
        run_one(rvasm.LW(3, 1, 0), {1: 0x3000_0000})
    assert e.value.cause == 5
    assert e.value.tval == 0x3000_0000


def test_store_out_of_range_traps_cause_7():
    with pytest.raises(Trap) as e:
        run_one(rvasm.SW(2, 1, 0), {1: 0x3000_0000, 2: 1})
    assert e.value.cause == 7


def test_branch_taken_and_not():
    state, ret = run_one(rvasm.BEQ(1, 2, 16), {1: 5, 2: 5})
    assert ret.taken and state.pc == 0x1000_0010
    state, ret = run_one(rvasm.BNE(1, 2, 16), {1: 5, 2: 5})
    assert not ret.taken and state.pc == 0x1000_0004


def test_branch_to_misaligned_target_traps_when_no_c():
    state = ArchState(0x1000_0000, c_ext=False)
    state.regs[1] = state.regs[2] = 9
    with pytest.raises(Trap) as e:
        exec_functional(state, decode(rvasm.BEQ(1, 2, 2)),
                        BytePort(0, bytearray()))
    assert e.value.cause == 0 and e.value.tval == 0x1000_0002


def test_jalr_clears_bit0():
    state, ret = run_one(rvasm.JALR(1, 2, 1), {2: 0x1000_0100})
    assert state.pc == 0x1000_0100  # (0x10000100 + 1) & ~1
    assert state.regs[1] == 0x1000_0004


def test_jal_links_and_jumps():
    state, ret = run_one(rvasm.JAL(1, -16))
    assert state.pc == 0x0FFF_FFF0
    assert state.regs[1] == 0x1000_0004


def test_ecall_traps():
    with pytest.raises(Trap) as e:
        run_one(rvasm.ECALL)
    assert e.value.cause == 11


def test_trap_entry_sequence():
    state = ArchState(0x1000_0010)
    state.csr.mtvec = 0x1000_0100
    state.csr.mstatus = MSTATUS_MIE
    raise_trap(state, CAUSE_ILLEGAL, 0xBAD, epc=0x1000_0010)
    assert state.pc == 0x1000_0100
    assert state.csr.mepc == 0x1000_0010
    assert state.csr.mcause == 2
    assert state.csr.mtval == 0xBAD
    assert not state.csr.mstatus & MSTATUS_MIE  # interrupts now off
    # MRET restores MIE and returns to mepc
    ret = exec_functional(state, decode(rvasm.MRET), BytePort(0, bytearray()))
    assert state.pc == 0x1000_0010
    assert state.csr.mstatus & MSTATUS_MIE


def test_trap_with_mtvec_zero_is_double_fault():
    state = ArchState(0x1000_0000)
    with pytest.raises(DoubleFault):
        raise_trap(state, CAUSE_ILLEGAL, 0, epc=0x1000_0000)


def test_timer_interrupt_cause_encoding():
    state = ArchState(0x1000_0000)
    state.csr.mstatus = MSTATUS_MIE
    state.csr.mie = 1 << 7
    state.irq_timer = True
    assert pending_interrupt(state) == 0x8000_0007


def test_external_interrupt_cause_and_priority():
    state = ArchState(0x1000_0000)
    state.csr.mstatus = MSTATUS_MIE
    state.csr.mie = (1 << 7) | (1 << 11)
    state.irq_timer = True
    state.irq_external = True
    assert pending_interrupt(state) == 0x8000_000B


def test_interrupt_masked_without_mie():
    state = ArchState(0x1000_0000)
    state.csr.mie = 1 << 7
    state.irq_timer = True
    assert pending_interrupt(state) is None


def test_csrrs_x0_is_pure_read():
    state = ArchState(0)
    state.csr.mscratch = 0x55
    old = csr_op(state, 0x340, "csrrs", 0)
    assert old == 0x55 and state.csr.mscratch == 0x55
    # and it does not trap on a read-only CSR
    assert csr_op(state, 0xC00, "csrrs", 0) == 0


def test_write_to_read_only_cycle_shadow_is_illegal():
    state = ArchState(0)
    with pytest.raises(Trap) as e:
        exec_functional(state, decode(rvasm.CSRRW(1, 0xC00, 2)),
                        BytePort(0, bytearray()))
    assert e.value.cause == 2


def test_mcycle_reads_live_counter():
    state = ArchState(0)
    state.csr.mcycle = 100
    assert csr_op(state, 0xB00, "csrrs", 0) == 100
    assert csr_op(state, 0xC00, "csrrs", 0) == 100  # cycle shadow


def test_unimplemented_csr_is_illegal():
    state = ArchState(0)
    with pytest.raises(Trap):
        exec_functional(state, decode(rvasm.CSRRS(1, 0xF11, 0)),
                        BytePort(0, bytearray()))


def test_csr_swap():
    state = ArchState(0)
    state.regs[2] = 0xAA
    state.csr.mscratch = 0x55
    exec_functional(state, decode(rvasm.CSRRW(1, 0x340, 2)),
                    BytePort(0, bytearray()))
    assert state.regs[1] == 0x55
    assert state.csr.mscratch == 0xAA


def test_functional_core_runs_a_loop():
    # sum 1..10 with a backward branch, then park on a wfi
    prog = rvasm.assemble([
        rvasm.ADDI(1, 0, 10),      # x1 = 10
        rvasm.ADDI(2, 0, 0),       # x2 = 0
        rvasm.ADD(2, 2, 1),        # loop: x2 += x1
        rvasm.ADDI(1, 1, -1),      # x1 -= 1
        rvasm.BNE(1, 0, -8),       # until x1 == 0
        rvasm.WFI,
    ])
    image = bytearray(256)
    image[:len(prog)] = prog
    core = FunctionalCore(0x1000_0000, image, 0x1000_0000)
    core.run(2 + 3 * 10 + 1)
    assert core.state.regs[2] == 55
    assert core.state.csr.minstret == 33


def test_minstret_not_counted_on_trap():
    image = bytearray(16)  # all-zero words: illegal instruction
    core = FunctionalCore(0x1000_0000, image, 0x1000_0000)
    core.state.csr.mtvec = 0x1000_0008
    core.step()
    assert core.state.csr.minstret == 0
    assert core.state.csr.mcause == 2
    assert core.state.pc == 0x1000_0008


def test_compressed_fetch_mixes_with_full_width():
    prog = rvasm.assemble([
        rvasm.C_LI(10, 21),        # a0 = 21
        rvasm.ADDI(10, 10, 1),     # a0 = 22
        rvasm.C_ADDI(10, -2),      # a0 = 20
        rvasm.WFI,
    ])
    image = bytearray(64)
    image[:len(prog)] = prog
    core = FunctionalCore(0x1000_0000, image, 0x1000_0000)
    core.run(3)
    assert core.state.regs[10] == 20
    assert core.state.pc == 0x1000_0008


def test_random_alu_against_python_ints():
    rng = random.Random(42)
    for _ in range(3000):
        a, b = rng.getrandbits(32), rng.getrandbits(32)
        state, _ = run_one(rvasm.ADD(3, 1, 2), {1: a, 2: b})
        assert state.regs[3] == (a + b) & 0xFFFFFFFF
        state, _ = run_one(rvasm.SUB(3, 1, 2), {1: a, 2: b})
        assert state.regs[3] == (a - b) & 0xFFFFFFFF
        state, _ = run_one(rvasm.MUL(3, 1, 2), {1: a, 2: b})
        assert state.regs[3] == (a * b) & 0xFFFFFFFF
