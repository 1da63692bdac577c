"""Timestamped digital pad events."""

from __future__ import annotations

from dataclasses import dataclass

NS_PER_S = 1_000_000_000


@dataclass(frozen=True, slots=True)
class PinEvent:
    cycle: int
    time_ns: int
    pin: str
    level: int


class PinRecorder:
    """Collects pad edges; per pin, events are strictly increasing in time
    and alternate level (same-level emissions are coalesced away).

    Pads are treated as low at reset; pins that idle high (UART TX) prime
    their level without generating an event.
    """

    def __init__(self, clk_hz: int):
        self.clk_hz = clk_hz
        self.events: list[PinEvent] = []
        self.sink = None                      # optional callable(PinEvent)
        self._level: dict[str, int] = {}
        self._last_cycle: dict[str, int] = {}

    def prime(self, pin: str, level: int) -> None:
        self._level[pin] = level

    def level(self, pin: str) -> int:
        return self._level.get(pin, 0)

    def emit(self, cycle: int, pin: str, level: int) -> None:
        level = 1 if level else 0
        if self._level.get(pin, 0) == level:
            return
        last = self._last_cycle.get(pin)
        if last is not None and cycle <= last:
            raise ValueError(
                f"pin {pin}: event at cycle {cycle} not after {last}")
        event = PinEvent(cycle=cycle,
                         time_ns=cycle * NS_PER_S // self.clk_hz,
                         pin=pin, level=level)
        self._level[pin] = level
        self._last_cycle[pin] = cycle
        self.events.append(event)
        if self.sink is not None:
            self.sink(event)

    def clear(self) -> None:
        self.events.clear()
        self._level.clear()
        self._last_cycle.clear()
