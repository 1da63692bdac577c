"""Memory-mapped UART: 8N1 framing, 8-deep FIFOs, programmable divisor.

Register map (32-bit registers, byte offsets):

    0x00  TXDATA   write: enqueue byte (low 8 bits)
    0x04  RXDATA   read: dequeue byte; 0 + sticky underflow flag when empty
    0x08  STATUS   read-only flags, see STATUS_* bits
    0x0C  CTRL     bit0: clear sticky error flags
    0x10  BAUDDIV  cycles per bit, clamped to a minimum of 4

The serializer drives the TX pad one start bit (low), eight data bits
LSB-first, one stop bit (high), each lasting BAUDDIV cycles. The receiver
samples the RX pad mid-bit. Host-side injection bypasses the pad straight
into the RX FIFO.
"""

from __future__ import annotations

import bisect

REG_TXDATA = 0x00
REG_RXDATA = 0x04
REG_STATUS = 0x08
REG_CTRL = 0x0C
REG_BAUDDIV = 0x10

STATUS_TX_EMPTY = 1 << 0
STATUS_TX_FULL = 1 << 1
STATUS_RX_AVAIL = 1 << 2
STATUS_RX_OVERFLOW = 1 << 3    # sticky
STATUS_RX_UNDERFLOW = 1 << 4   # sticky
STATUS_FRAME_ERROR = 1 << 5    # sticky
STATUS_TX_BUSY = 1 << 6

FIFO_DEPTH = 8
MIN_DIV = 4
DEFAULT_DIV = 174              # 20 MHz / 115200 baud, rounded


class FramingError(Exception):
    def __init__(self, event_index: int):
        super().__init__(f"bad stop bit near event {event_index}")
        self.event_index = event_index


class Uart:
    def __init__(self, recorder=None, tx_pin: str = "uart_tx",
                 rx_pin: str = "uart_rx", baud_div: int = DEFAULT_DIV):
        self.recorder = recorder
        self.tx_pin = tx_pin
        self.rx_pin = rx_pin
        if recorder is not None:
            recorder.prime(tx_pin, 1)   # line idles high
        self.baud_div = max(MIN_DIV, baud_div)
        self.tx_fifo: list[int] = []
        self.rx_fifo: list[int] = []
        self.rx_overflow = False
        self.rx_underflow = False
        self.frame_error = False
        self.on_tx_byte = None          # callable(byte): host-visible TX tap
        # TX serializer
        self._tx_bits: list[int] = []
        self._tx_index = 0
        self._tx_count = 0
        # RX sampler
        self.rx_level = 1
        self._rx_state = 0              # 0 idle, 1 receiving
        self._rx_count = 0
        self._rx_bit = 0
        self._rx_byte = 0

    def reset(self) -> None:
        self.__init__(self.recorder, self.tx_pin, self.rx_pin)

    # -- bus interface ----------------------------------------------------

    def status(self) -> int:
        flags = 0
        if not self.tx_fifo:
            flags |= STATUS_TX_EMPTY
        if len(self.tx_fifo) >= FIFO_DEPTH:
            flags |= STATUS_TX_FULL
        if self.rx_fifo:
            flags |= STATUS_RX_AVAIL
        if self.rx_overflow:
            flags |= STATUS_RX_OVERFLOW
        if self.rx_underflow:
            flags |= STATUS_RX_UNDERFLOW
        if self.frame_error:
            flags |= STATUS_FRAME_ERROR
        if self._tx_bits or self.tx_fifo:
            flags |= STATUS_TX_BUSY
        return flags

    def bus_access(self, offset: int, we: bool, be: int, wdata: int):
        if we:
            if offset == REG_TXDATA:
                if len(self.tx_fifo) < FIFO_DEPTH:
                    self.tx_fifo.append(wdata & 0xFF)
                # full FIFO absorbs the write; TX_FULL warns firmware
                return 0, False
            if offset == REG_CTRL:
                if wdata & 1:
                    self.rx_overflow = False
                    self.rx_underflow = False
                    self.frame_error = False
                return 0, False
            if offset == REG_BAUDDIV:
                self.baud_div = max(MIN_DIV, wdata & 0xFFFF)
                return 0, False
            if offset in (REG_RXDATA, REG_STATUS):
                return 0, False          # writes ignored
            return 0, True
        if offset == REG_RXDATA:
            if self.rx_fifo:
                return self.rx_fifo.pop(0), False
            self.rx_underflow = True
            return 0, False
        if offset == REG_STATUS:
            return self.status(), False
        if offset == REG_BAUDDIV:
            return self.baud_div, False
        if offset in (REG_TXDATA, REG_CTRL):
            return 0, False
        return 0, True

    # -- host side ---------------------------------------------------------

    def inject_rx_byte(self, byte: int) -> None:
        """Deliver a byte as if a complete frame arrived on the RX pad."""
        if len(self.rx_fifo) >= FIFO_DEPTH:
            self.rx_overflow = True
            return
        self.rx_fifo.append(byte & 0xFF)

    def set_rx_pin(self, level: int) -> None:
        self.rx_level = 1 if level else 0

    # -- clocked behavior --------------------------------------------------

    def tick(self, cycle: int) -> None:
        if self._tx_bits:
            self._tx_count -= 1
            if self._tx_count <= 0:
                self._tx_index += 1
                if self._tx_index >= len(self._tx_bits):
                    self._tx_bits = []
                    if self.recorder is not None:
                        self.recorder.emit(cycle, self.tx_pin, 1)
                else:
                    self._tx_count = self.baud_div
                    if self.recorder is not None:
                        self.recorder.emit(cycle, self.tx_pin,
                                           self._tx_bits[self._tx_index])
        if not self._tx_bits and self.tx_fifo:
            byte = self.tx_fifo.pop(0)
            bits = [0] + [(byte >> i) & 1 for i in range(8)] + [1]
            self._tx_bits = bits
            self._tx_index = 0
            self._tx_count = self.baud_div
            if self.recorder is not None:
                self.recorder.emit(cycle, self.tx_pin, bits[0])
            if self.on_tx_byte is not None:
                self.on_tx_byte(byte)

        if self._rx_state == 0:
            if self.rx_level == 0:
                self._rx_state = 1
                self._rx_count = self.baud_div // 2
                self._rx_bit = -1
                self._rx_byte = 0
        else:
            self._rx_count -= 1
            if self._rx_count <= 0:
                level = self.rx_level
                if self._rx_bit == -1:
                    if level:            # glitch, not a real start bit
                        self._rx_state = 0
                    else:
                        self._rx_bit = 0
                        self._rx_count = self.baud_div
                elif self._rx_bit < 8:
                    self._rx_byte |= level << self._rx_bit
                    self._rx_bit += 1
                    self._rx_count = self.baud_div
                else:
                    if level:
                        self.inject_rx_byte(self._rx_byte)
                    else:
                        self.frame_error = True
                    self._rx_state = 0


def uart_decode_oracle(events, div: int) -> list[int]:
    """Independent 8N1 decoder over TX pad events (mid-bit sampling).

    The line level before the first event is inferred (a first falling
    edge implies an idle-high line). A frame that would have to sample
    past the end of a trace left at a low level raises FramingError.
    """
    if not events:
        return []
    cycles = [e.cycle for e in events]
    levels = [e.level for e in events]
    initial = 1 - levels[0]

    def level_at(cycle):
        i = bisect.bisect_right(cycles, cycle) - 1
        return (initial, -1) if i < 0 else (levels[i], i)

    out = []
    scan = cycles[0]
    last_cycle = cycles[-1]
    final_level = levels[-1]
    while True:
        # find the next falling edge at or after scan
        start = None
        i = bisect.bisect_left(cycles, scan)
        while i < len(cycles):
            if levels[i] == 0:
                start = cycles[i]
                break
            i += 1
        if start is None:
            return out
        byte = 0
        for bit in range(10):            # start, 8 data, stop
            sample = start + div // 2 + bit * div
            if sample > last_cycle and final_level == 0:
                raise FramingError(len(cycles) - 1)
            level, idx = level_at(sample)
            if bit == 0:
                if level != 0:
                    raise FramingError(idx)
            elif bit <= 8:
                byte |= level << (bit - 1)
            else:
                if level != 1:
                    raise FramingError(idx)
        out.append(byte)
        scan = start + 10 * div
