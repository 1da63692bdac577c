"""Tightly-coupled SRAM banks and firmware image placement."""

from __future__ import annotations


class RangeError(Exception):
    """Bytes fall outside mapped SRAM; reports the first offending address."""

    def __init__(self, addr: int, detail: str = ""):
        msg = f"address 0x{addr & 0xFFFFFFFF:08x} outside mapped SRAM"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.addr = addr & 0xFFFFFFFF


class SramBank:
    """One zero-wait SRAM bank, word-accessed with byte enables."""

    def __init__(self, name: str, base: int, size: int):
        if size % 4 != 0:
            raise ValueError(f"bank {name}: size must be a multiple of 4")
        self.name = name
        self.base = base & 0xFFFFFFFF
        self.data = bytearray(size)

    @property
    def size(self) -> int:
        return len(self.data)

    def bus_access(self, offset: int, we: bool, be: int, wdata: int):
        """Word access at a word-aligned offset (the core splits misaligned).

        Returns (rdata, err). Out-of-range access answers err defensively
        even though the fabric's address decode should prevent it.
        """
        if offset < 0 or offset + 4 > len(self.data) or offset & 0b11:
            return 0, True
        if not we:
            return int.from_bytes(self.data[offset:offset + 4], "little"), \
                False
        if be == 0xF:
            self.data[offset:offset + 4] = wdata.to_bytes(4, "little")
        else:
            for lane in range(4):
                if be & (1 << lane):
                    self.data[offset + lane] = (wdata >> (8 * lane)) & 0xFF
        return 0, False

    def contains(self, addr: int) -> bool:
        return self.base <= addr < self.base + len(self.data)

    def clear(self) -> None:
        self.data[:] = bytes(len(self.data))


def load_blob(banks, base: int, blob: bytes) -> None:
    """Copy raw bytes into SRAM at base, spanning banks where contiguous.

    Every byte of [base, base+len) must land in some bank; the first
    address that does not raises RangeError. Zero-length blobs are a no-op.
    """
    addr = base & 0xFFFFFFFF
    remaining = memoryview(bytes(blob))
    while remaining.nbytes:
        for bank in banks:
            if bank.contains(addr):
                offset = addr - bank.base
                run = min(remaining.nbytes, bank.size - offset)
                bank.data[offset:offset + run] = remaining[:run]
                remaining = remaining[run:]
                addr = (addr + run) & 0xFFFFFFFF
                break
        else:
            raise RangeError(addr, "image does not fit SRAM")


def dump_words(banks, addr: int, count: int) -> list[int]:
    """Read back words for inspection; unmapped words raise RangeError."""
    words = []
    for i in range(count):
        a = (addr + 4 * i) & 0xFFFFFFFF
        for bank in banks:
            if bank.contains(a) and bank.contains(a + 3):
                off = a - bank.base
                words.append(int.from_bytes(bank.data[off:off + 4], "little"))
                break
        else:
            raise RangeError(a)
    return words
