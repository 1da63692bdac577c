"""Firmware image parsing (ELF32 / raw binary) and placement into SRAM.

Only PT_LOAD segments matter for static bare-metal firmware; symbols,
sections and relocations are ignored. Segments load at their physical
address, zero-filled from file size up to memory size.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .memory import RangeError

EM_RISCV = 243
PT_LOAD = 1

_EHDR = struct.Struct("<16sHHIIIIIHHHHHH")
_PHDR = struct.Struct("<IIIIIIII")


class LoaderError(Exception):
    pass


class NotElf(LoaderError):
    pass


class WrongClass(LoaderError):
    pass


class WrongMachine(LoaderError):
    pass


class MalformedHeader(LoaderError):
    def __init__(self, offset: int, detail: str):
        super().__init__(f"malformed ELF at offset 0x{offset:x}: {detail}")
        self.offset = offset


@dataclass(frozen=True)
class FirmwareImage:
    segments: tuple          # ((load_address, bytes), ...)
    entry: int

    def __post_init__(self):
        spans = sorted((addr, addr + len(blob))
                       for addr, blob in self.segments)
        for (_, end_a), (start_b, _) in zip(spans, spans[1:]):
            if start_b < end_a:
                raise ValueError("overlapping firmware segments")


def parse_elf(data: bytes) -> FirmwareImage:
    if len(data) < 16 or data[:4] != b"\x7fELF":
        raise NotElf("missing ELF magic")
    ei_class, ei_data = data[4], data[5]
    if ei_class != 1:
        raise WrongClass(f"need ELFCLASS32, got class {ei_class}")
    if ei_data != 1:
        raise WrongClass(f"need little-endian data, got encoding {ei_data}")
    if len(data) < _EHDR.size:
        raise MalformedHeader(len(data), "truncated file header")
    (_, _, machine, _, entry, phoff, _, _, _, phentsize, phnum,
     _, _, _) = _EHDR.unpack_from(data, 0)
    if machine != EM_RISCV:
        raise WrongMachine(f"machine {machine} is not RISC-V ({EM_RISCV})")
    if phnum == 0:
        return FirmwareImage(segments=(), entry=entry)
    if phentsize != _PHDR.size:
        raise MalformedHeader(0x2A, f"phentsize {phentsize} != {_PHDR.size}")
    if phoff + phnum * _PHDR.size > len(data):
        raise MalformedHeader(phoff, "program headers past end of file")

    segments = []
    for i in range(phnum):
        off = phoff + i * _PHDR.size
        (p_type, p_offset, _vaddr, p_paddr, p_filesz, p_memsz, _flags,
         _align) = _PHDR.unpack_from(data, off)
        if p_type != PT_LOAD or p_memsz == 0:
            continue
        if p_filesz > p_memsz:
            raise MalformedHeader(off, "filesz exceeds memsz")
        if p_offset + p_filesz > len(data):
            raise MalformedHeader(off, "segment data past end of file")
        blob = data[p_offset:p_offset + p_filesz] \
            + bytes(p_memsz - p_filesz)
        segments.append((p_paddr, blob))
    try:
        return FirmwareImage(segments=tuple(segments), entry=entry)
    except ValueError as e:
        raise MalformedHeader(phoff, str(e)) from None


def raw_image(addr: int, data: bytes) -> FirmwareImage:
    """Wrap a flat binary as an image entered at its load address."""
    return FirmwareImage(segments=((addr, bytes(data)),), entry=addr)


def load(soc, image: FirmwareImage, override_entry: int | None = None) -> None:
    """Place an image into SRAM and point the reset PC at its entry.

    All segments are bounds-checked against the mapped SRAM banks before
    any byte is written, so a failing load leaves memory untouched.
    Loading an empty image changes nothing.
    """
    if not image.segments:
        return
    for addr, blob in image.segments:
        _check_coverage(soc.banks, addr, len(blob))
    for addr, blob in image.segments:
        soc.load_bytes(addr, blob)
    entry = override_entry if override_entry is not None else image.entry
    soc.reset_pc = entry
    soc.core.reset_pc = entry
    soc.core.state.pc = entry & 0xFFFFFFFF


def _check_coverage(banks, base: int, length: int) -> None:
    addr = base
    remaining = length
    while remaining:
        for bank in banks:
            if bank.contains(addr):
                run = min(remaining, bank.size - (addr - bank.base))
                addr += run
                remaining -= run
                break
        else:
            raise RangeError(addr, f"segment at 0x{base:08x}")
