"""WS2812-class single-wire LED strip controller.

Colors are 24-bit RGB words in the frame buffer; the wire carries them
G, R, B, most-significant bit first. Every bit is a high pulse of T0H
(bit 0) or T1H (bit 1) cycles followed by low for the rest of TBIT; the
frame ends with a low reset gap of TRESET cycles, after which busy clears.

    0x00  CTRL       bit0 start, bit1 clear sticky error
    0x04  STATUS     bit0 busy, bit1 error (sticky)
    0x08  LED_COUNT  0..64
    0x0C  T0H   0x10  T1H   0x14  TBIT   0x18  TRESET   (cycles)
    0x100 + 4*i      frame buffer, up to 64 colors

Configuration writes while busy are rejected and latch the error bit.
Defaults encode 0.35/0.70/1.25 us bits and a 50 us reset at 20 MHz.
"""

from __future__ import annotations

REG_CTRL = 0x00
REG_STATUS = 0x04
REG_LED_COUNT = 0x08
REG_T0H = 0x0C
REG_T1H = 0x10
REG_TBIT = 0x14
REG_TRESET = 0x18
FB_BASE = 0x100

STATUS_BUSY = 1 << 0
STATUS_ERR = 1 << 1

MAX_LEDS = 64

DEFAULT_T0H = 7
DEFAULT_T1H = 14
DEFAULT_TBIT = 25
DEFAULT_TRESET = 1000


class AmbiguousPulse(Exception):
    def __init__(self, index: int, width: int):
        super().__init__(f"pulse {index} width {width} cycles matches "
                         "neither bit time")
        self.index = index
        self.width = width


class PartialByte(Exception):
    def __init__(self, frame_index: int, bits: int):
        super().__init__(f"frame {frame_index} carries {bits} bits, not a "
                         "whole number of colors")
        self.frame_index = frame_index
        self.bits = bits


class NeoPixel:
    def __init__(self, recorder=None, pin: str = "neo", clock=None):
        self.recorder = recorder
        self.pin = pin
        self.clock = clock
        self.t0h = DEFAULT_T0H
        self.t1h = DEFAULT_T1H
        self.tbit = DEFAULT_TBIT
        self.treset = DEFAULT_TRESET
        self.led_count = 0
        self.framebuf = [0] * MAX_LEDS
        self.busy = False
        self.error = False
        self.on_frame = None        # callable(list of colors) at frame end
        self._edges: list[tuple[int, int]] = []
        self._edge_index = 0
        self._done_cycle = 0
        self._active_frame: list[int] = []

    def reset(self) -> None:
        self.__init__(self.recorder, self.pin, self.clock)

    def _start(self) -> None:
        if self.busy:
            self.error = True
            return
        if not (0 < self.t0h < self.tbit and 0 < self.t1h < self.tbit
                and self.t0h != self.t1h and self.treset > 0):
            self.error = True
            return
        start = (self.clock.cycle if self.clock is not None else 0) + 1
        edges = []
        at = start
        for led in range(self.led_count):
            color = self.framebuf[led]
            grb = ((color >> 8) & 0xFF) << 16 | ((color >> 16) & 0xFF) << 8 \
                | (color & 0xFF)
            for bit in range(23, -1, -1):
                high = self.t1h if (grb >> bit) & 1 else self.t0h
                edges.append((at, 1))
                edges.append((at + high, 0))
                at += self.tbit
        self._edges = edges
        self._edge_index = 0
        self._done_cycle = at + self.treset
        self._active_frame = list(self.framebuf[:self.led_count])
        self.busy = True

    def bus_access(self, offset: int, we: bool, be: int, wdata: int):
        if we:
            if offset == REG_CTRL:
                if wdata & 0b10:
                    self.error = False
                if wdata & 0b01:
                    self._start()
                return 0, False
            if self.busy:
                # frame buffer and timing are locked during emission
                self.error = True
                return 0, False
            if offset == REG_LED_COUNT:
                if wdata > MAX_LEDS:
                    self.error = True
                else:
                    self.led_count = wdata
            elif offset == REG_T0H:
                self.t0h = wdata
            elif offset == REG_T1H:
                self.t1h = wdata
            elif offset == REG_TBIT:
                self.tbit = wdata
            elif offset == REG_TRESET:
                self.treset = wdata
            elif FB_BASE <= offset < FB_BASE + 4 * MAX_LEDS \
                    and offset % 4 == 0:
                self.framebuf[(offset - FB_BASE) // 4] = wdata & 0xFFFFFF
            else:
                return 0, True
            return 0, False
        if offset == REG_CTRL:
            return 0, False
        if offset == REG_STATUS:
            return (STATUS_BUSY if self.busy else 0) \
                | (STATUS_ERR if self.error else 0), False
        if offset == REG_LED_COUNT:
            return self.led_count, False
        if offset == REG_T0H:
            return self.t0h, False
        if offset == REG_T1H:
            return self.t1h, False
        if offset == REG_TBIT:
            return self.tbit, False
        if offset == REG_TRESET:
            return self.treset, False
        if FB_BASE <= offset < FB_BASE + 4 * MAX_LEDS and offset % 4 == 0:
            return self.framebuf[(offset - FB_BASE) // 4], False
        return 0, True

    def tick(self, cycle: int) -> None:
        if not self.busy:
            return
        while self._edge_index < len(self._edges) \
                and self._edges[self._edge_index][0] == cycle:
            _, level = self._edges[self._edge_index]
            if self.recorder is not None:
                self.recorder.emit(cycle, self.pin, level)
            self._edge_index += 1
        if cycle >= self._done_cycle:
            self.busy = False
            frame = self._active_frame
            self._active_frame = []
            self._edges = []
            if self.on_frame is not None:
                self.on_frame(frame)


def neopixel_decode_oracle(events, t0h: int = DEFAULT_T0H,
                           t1h: int = DEFAULT_T1H, tbit: int = DEFAULT_TBIT,
                           treset: int = DEFAULT_TRESET) -> list[list[int]]:
    """Independent decoder: pulses classified by the nearer bit time.

    Returns one list of 24-bit RGB colors per frame; frames split at low
    gaps of at least treset/2. Pulses equidistant from both nominal
    widths, or more than 25% away from the nearer one, raise
    AmbiguousPulse; frames with a non-multiple of 24 bits raise PartialByte.
    """
    pulses = []          # (start_cycle, width)
    rise = None
    for e in events:
        if e.level == 1:
            rise = e.cycle
        elif rise is not None:
            pulses.append((rise, e.cycle - rise))
            rise = None
    if rise is not None:
        # trace ends mid-pulse; treat as a pulse of unknowable width
        raise AmbiguousPulse(len(pulses), -1)

    frames: list[list[int]] = []
    bits: list[int] = []

    def close_frame():
        if not bits:
            return
        if len(bits) % 24:
            raise PartialByte(len(frames), len(bits))
        # recompose G,R,B wire order back into RGB words
        colors = []
        for i in range(0, len(bits), 24):
            grb = 0
            for b in bits[i:i + 24]:
                grb = (grb << 1) | b
            g = (grb >> 16) & 0xFF
            r = (grb >> 8) & 0xFF
            bl = grb & 0xFF
            colors.append((r << 16) | (g << 8) | bl)
        frames.append(colors)
        bits.clear()

    for index, (start, width) in enumerate(pulses):
        d0 = abs(width - t0h)
        d1 = abs(width - t1h)
        if d0 == d1:
            raise AmbiguousPulse(index, width)
        nominal = t0h if d0 < d1 else t1h
        if abs(width - nominal) * 4 > nominal:
            raise AmbiguousPulse(index, width)
        bits.append(0 if nominal == t0h else 1)
        if index + 1 < len(pulses):
            gap = pulses[index + 1][0] - (start + width)
            if gap * 2 >= treset:
                close_frame()
    close_frame()
    return frames
