"""Instruction trace lines, pin CSV export, run statistics, FNV-1a digest.

Trace line grammar (one line per retirement):

    C<cycle> PC=0x<8-hex> I=0x<8-hex> <mnemonic>[ x<rd>=0x<8-hex>]

The I field shows the encoding as fetched; compressed encodings appear
zero-extended to 8 hex digits. The register clause is present exactly when
the instruction architecturally writes a destination register (x0 included,
showing the post-write value 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .isa.core import StepReport

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class EmptyWindow(Exception):
    """Statistics requested over a zero-cycle window."""


@dataclass(frozen=True)
class RunStats:
    cycles: int
    instret: int
    ipc: float
    class_counts: dict


def stats(cycles: int, instret: int, class_counts=None) -> RunStats:
    """Summarize a completed run window (caller excludes warm-up)."""
    if cycles <= 0:
        raise EmptyWindow("stats over a zero-cycle window")
    return RunStats(cycles=cycles, instret=instret, ipc=instret / cycles,
                    class_counts=dict(class_counts or {}))


def emit_trace_line(report: StepReport) -> str:
    ret = report.retired
    assert ret is not None, "only retirements are traced"
    d = ret.instr
    line = (f"C{report.start_cycle} PC=0x{ret.pc:08x} I=0x{d.raw:08x} "
            f"{d.op}")
    if ret.rd is not None:
        line += f" x{ret.rd}=0x{ret.rd_value:08x}"
    return line


_TRACE_RE = re.compile(
    r"^C(?P<cycle>\d+) PC=0x(?P<pc>[0-9a-f]{8}) I=0x(?P<raw>[0-9a-f]{8}) "
    r"(?P<op>[a-z][a-z0-9.]*)( x(?P<rd>\d+)=0x(?P<rdv>[0-9a-f]{8}))?$")


def parse_trace_line(line: str) -> dict:
    """Inverse of emit_trace_line; raises ValueError on bad grammar."""
    m = _TRACE_RE.match(line)
    if m is None:
        raise ValueError(f"unparseable trace line: {line!r}")
    out = {"cycle": int(m["cycle"]), "pc": int(m["pc"], 16),
           "raw": int(m["raw"], 16), "op": m["op"], "rd": None,
           "rd_value": None}
    if m["rd"] is not None:
        out["rd"] = int(m["rd"])
        out["rd_value"] = int(m["rdv"], 16)
    return out


PIN_CSV_HEADER = "time_ns,cycle,pin,level"


def emit_pin_csv(events) -> list[str]:
    lines = [PIN_CSV_HEADER]
    lines += [f"{e.time_ns},{e.cycle},{e.pin},{e.level}" for e in events]
    return lines


def fnv1a64(data: bytes, digest: int = FNV64_OFFSET_BASIS) -> int:
    """64-bit FNV-1a over the exact bytes; chainable via digest."""
    for byte in data:
        digest = ((digest ^ byte) * FNV64_PRIME) & _MASK64
    return digest


class TraceHasher:
    """Streams trace text into a stable FNV-1a 64-bit digest."""

    def __init__(self):
        self.digest = FNV64_OFFSET_BASIS

    def add_line(self, line: str) -> None:
        self.digest = fnv1a64(line.encode() + b"\n", self.digest)

    def hexdigest(self) -> str:
        return f"{self.digest:016x}"
