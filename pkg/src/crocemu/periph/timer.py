"""Machine timer: free-running 64-bit mtime plus mtimecmp match register.

    0x00  MTIME_LO      0x04  MTIME_HI
    0x08  MTIMECMP_LO   0x0C  MTIMECMP_HI

The interrupt line level is (mtime >= mtimecmp) at every cycle; both
registers reset to zero, so the line is high out of reset until firmware
programs a compare value.
"""

from __future__ import annotations

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

REG_MTIME_LO = 0x00
REG_MTIME_HI = 0x04
REG_MTIMECMP_LO = 0x08
REG_MTIMECMP_HI = 0x0C


class MachineTimer:
    def __init__(self):
        self.mtime = 0
        self.mtimecmp = 0

    def reset(self) -> None:
        self.mtime = 0
        self.mtimecmp = 0

    @property
    def irq_line(self) -> bool:
        return self.mtime >= self.mtimecmp

    def tick(self) -> bool:
        self.mtime = (self.mtime + 1) & MASK64
        return self.irq_line

    def bus_access(self, offset: int, we: bool, be: int, wdata: int):
        if we:
            wdata &= MASK32
            if offset == REG_MTIME_LO:
                self.mtime = (self.mtime & ~MASK32) | wdata
            elif offset == REG_MTIME_HI:
                self.mtime = (self.mtime & MASK32) | (wdata << 32)
            elif offset == REG_MTIMECMP_LO:
                self.mtimecmp = (self.mtimecmp & ~MASK32) | wdata
            elif offset == REG_MTIMECMP_HI:
                self.mtimecmp = (self.mtimecmp & MASK32) | (wdata << 32)
            else:
                return 0, True
            return 0, False
        if offset == REG_MTIME_LO:
            return self.mtime & MASK32, False
        if offset == REG_MTIME_HI:
            return (self.mtime >> 32) & MASK32, False
        if offset == REG_MTIMECMP_LO:
            return self.mtimecmp & MASK32, False
        if offset == REG_MTIMECMP_HI:
            return (self.mtimecmp >> 32) & MASK32, False
        return 0, True
