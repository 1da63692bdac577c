"""Hand-assembled firmware images shared across integration tests."""

import rvasm
from rvasm import assemble

UART = 0x0300_1000
GPIO = 0x0300_2000
TIMER = 0x0300_3000
NEO = 0x0300_5000
SRAM0 = 0x1000_0000
SRAM1 = 0x1001_0000


def pad_to(items, byte_offset):
    """Pad an instruction list with NOPs up to a byte offset."""
    size = len(assemble(items))
    assert size <= byte_offset and (byte_offset - size) % 4 == 0
    return items + [rvasm.NOP] * ((byte_offset - size) // 4)


def alu_block(n=10_000, terminator=True):
    """Unrolled ALU-only block: n one-cycle instructions."""
    body = []
    for i in range(n):
        body.append(rvasm.ADDI((i % 7) + 1, (i % 7) + 1, (i * 13) % 100))
    if terminator:
        body.append(rvasm.EBREAK)
    return assemble(body)


def uart_hello(text=b"HI", div=4):
    """Write bytes to the UART TX FIFO, drain, then halt."""
    items = [
        rvasm.LI(1, UART),
        rvasm.ADDI(2, 0, div),
        rvasm.SW(2, 1, 0x10),                    # BAUDDIV
    ]
    for b in text:
        items += [rvasm.ADDI(3, 0, b), rvasm.SW(3, 1, 0x00)]  # TXDATA
    items += [
        # drain: wait for TX_EMPTY (bit0) so all bytes serialize
        rvasm.LW(4, 1, 0x08),                    # STATUS
        rvasm.ANDI(4, 4, 1),
        rvasm.BEQ(4, 0, -8),
        # and for TX_BUSY (bit6) to clear
        rvasm.LW(4, 1, 0x08),
        rvasm.ANDI(4, 4, 0x40),
        rvasm.BNE(4, 0, -8),
        rvasm.EBREAK,
    ]
    return assemble(items)


def echo_demo():
    """Demo firmware: configure UART, echo one RX byte, blink a GPIO,
    push the echoed byte to the NeoPixel, then halt.

    Stimulus-dependent data flows into register values, so any change in
    injected bytes changes the instruction trace.
    """
    items = [
        rvasm.LI(1, UART),
        rvasm.LI(2, GPIO),
        rvasm.LI(3, NEO),
        rvasm.LI(4, SRAM1),
        rvasm.ADDI(5, 0, 4),
        rvasm.SW(5, 1, 0x10),                    # BAUDDIV = 4
        # gpio3 as output, high
        rvasm.ADDI(5, 0, 1 << 3),
        rvasm.SW(5, 2, 0x00),                    # DIR
        rvasm.SW(5, 2, 0x04),                    # OUT
        # wait for an RX byte
        rvasm.LW(6, 1, 0x08),                    # STATUS
        rvasm.ANDI(6, 6, 4),                     # RX_AVAIL
        rvasm.BEQ(6, 0, -8),
        rvasm.LW(7, 1, 0x04),                    # RXDATA
        rvasm.SW(7, 4, 0),                       # stash to SRAM1
        rvasm.SW(7, 1, 0x00),                    # echo to TX
        # gpio3 low again
        rvasm.SW(0, 2, 0x04),
        # one-LED frame carrying the byte in the green channel
        rvasm.ADDI(8, 0, 1),
        rvasm.SW(8, 3, 0x08),                    # LED_COUNT
        rvasm.SLLI(9, 7, 8),                     # byte -> G of 0xRRGGBB
        rvasm.SW(9, 3, 0x100),                   # FB[0]
        rvasm.ADDI(10, 0, 1),
        rvasm.SW(10, 3, 0x00),                   # CTRL.start
        # wait for busy to clear
        rvasm.LW(11, 3, 0x04),
        rvasm.ANDI(11, 11, 1),
        rvasm.BNE(11, 0, -8),
        # drain the UART shifter
        rvasm.LW(11, 1, 0x08),
        rvasm.ANDI(11, 11, 0x40),                # TX_BUSY
        rvasm.BNE(11, 0, -8),
        rvasm.EBREAK,
    ]
    return assemble(items)


def interrupt_demo(handler_offset=0x100):
    """Enable the external interrupt, wfi, record mcause in the handler."""
    main = [
        rvasm.LI(1, SRAM0 + handler_offset),
        rvasm.CSRRW(0, 0x305, 1),                # mtvec
        rvasm.LI(2, 1 << 11),                    # MEIE
        rvasm.CSRRW(0, 0x304, 2),                # mie
        rvasm.CSRRSI(0, 0x300, 8),               # mstatus.MIE
        rvasm.WFI,
        rvasm.JAL(0, 0),                         # park if no interrupt
    ]
    handler = [
        rvasm.CSRRS(5, 0x342, 0),                # mcause
        rvasm.LI(6, SRAM1),
        rvasm.SW(5, 6, 0),
        rvasm.EBREAK,
    ]
    return assemble(pad_to(main, handler_offset) + handler)


def timer_interrupt_demo(compare=200, handler_offset=0x100):
    """Program mtimecmp, wfi until the timer line fires, record mcause."""
    main = [
        rvasm.LI(1, SRAM0 + handler_offset),
        rvasm.CSRRW(0, 0x305, 1),                # mtvec
        rvasm.LI(2, TIMER),
        rvasm.LI(3, compare),
        rvasm.SW(0, 2, 0x0C),                    # MTIMECMP_HI = 0
        rvasm.SW(3, 2, 0x08),                    # MTIMECMP_LO
        rvasm.LI(4, 1 << 7),                     # MTIE
        rvasm.CSRRW(0, 0x304, 4),                # mie
        rvasm.CSRRSI(0, 0x300, 8),               # mstatus.MIE
        rvasm.WFI,
        rvasm.JAL(0, 0),
    ]
    handler = [
        rvasm.CSRRS(5, 0x342, 0),
        rvasm.LI(6, SRAM1),
        rvasm.SW(5, 6, 0),
        rvasm.EBREAK,
    ]
    return assemble(pad_to(main, handler_offset) + handler)
