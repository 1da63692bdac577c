"""Versioned control protocol for steering a live simulation.

Requests are objects {id, method, params}; each gets exactly one response
{id, result} or {id, error: {code, message}}. Events carry no id. Error
codes: 1 bad-method, 2 bad-params, 3 sim-busy (the simulation is running,
or the session lacks control), 4 range.

The SimHost owns the simulation thread: exactly one thread executes the
clock loop at a time. Sessions never touch the Soc directly; running
simulations accept only pause. Event fan-out is buffered per session with
a drop policy that sheds pin floods but never drops a halted event.

32-bit addresses and register values cross the wire as 0x-prefixed hex
strings (clients may sit in 53-bit numeric environments); small counts
travel as plain JSON numbers.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading

from .loader import LoaderError, load, parse_elf, raw_image
from .memory import RangeError
from .soc import Soc
from .trace import stats as run_stats
from .trace import EmptyWindow

PROTOCOL_VERSION = "croc-ctl/1"

ERR_BAD_METHOD = 1
ERR_BAD_PARAMS = 2
ERR_SIM_BUSY = 3
ERR_RANGE = 4

READ_MEM_LIMIT = 4096
PIN_BUFFER_LIMIT = 65536

CHANNELS = ("pins", "uart", "neopixel", "stats")


class ProtocolError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _hex32(value: int) -> str:
    return f"0x{value & 0xFFFFFFFF:08x}"


def _parse_addr(value) -> int:
    if isinstance(value, int):
        return value & 0xFFFFFFFF
    if isinstance(value, str):
        try:
            return int(value, 16 if value.lower().startswith("0x") else 0) \
                & 0xFFFFFFFF
        except ValueError:
            pass
    raise ProtocolError(ERR_BAD_PARAMS, f"bad address {value!r}")


class EventBuffer:
    """Per-session bounded event queue with the slow-consumer policy."""

    def __init__(self, pin_limit: int = PIN_BUFFER_LIMIT):
        self.pin_limit = pin_limit
        self._items: list[dict] = []
        self._pin_count = 0
        self._overflowed = False
        self._cond = threading.Condition()
        self.on_push = None        # transport wake-up hook (thread-safe)

    def push(self, event: dict) -> None:
        with self._cond:
            if event.get("event") == "pin":
                if self._pin_count >= self.pin_limit:
                    if not self._overflowed:
                        self._overflowed = True
                        self._items.append({"event": "overflow",
                                            "channel": "pins"})
                        self._cond.notify_all()
                        self._notify()
                    return
                self._pin_count += 1
            self._items.append(event)
            self._cond.notify_all()
        self._notify()

    def _notify(self):
        if self.on_push is not None:
            self.on_push()

    def drain(self) -> list[dict]:
        with self._cond:
            items, self._items = self._items, []
            self._pin_count = 0
            self._overflowed = False
            return items

    def wait_for_event(self, name: str, timeout: float = 10.0):
        """Drain until an event with the given name arrives (REPL helper)."""
        collected = []
        end = None
        with self._cond:
            while True:
                while self._items:
                    item = self._items.pop(0)
                    if item.get("event") == "pin":
                        self._pin_count -= 1
                    collected.append(item)
                    if item.get("event") == name:
                        end = item
                        break
                if end is not None:
                    return end, collected
                if not self._cond.wait(timeout):
                    return None, collected


class ControlSession:
    """One protocol session; the first session is the controller."""

    def __init__(self, host: "SimHost"):
        self.host = host
        self.subscriptions: set[str] = set()
        self.buffer = EventBuffer()
        self.controller = False

    def hello(self) -> dict:
        return {"event": "hello", "version": PROTOCOL_VERSION,
                "role": "controller" if self.controller else "observer"}

    def close(self) -> None:
        self.host.remove_session(self)

    def deliver(self, channel: str, event: dict) -> None:
        if channel is None or channel in self.subscriptions:
            self.buffer.push(event)

    def handle_request(self, msg: dict) -> dict:
        msg_id = msg.get("id")
        try:
            if not isinstance(msg, dict) or "method" not in msg:
                raise ProtocolError(ERR_BAD_PARAMS, "request needs a method")
            method = msg["method"]
            params = msg.get("params") or {}
            if not isinstance(params, dict):
                raise ProtocolError(ERR_BAD_PARAMS, "params must be an object")
            handler = getattr(self, f"_method_{method}", None)
            if handler is None or not isinstance(method, str):
                raise ProtocolError(ERR_BAD_METHOD,
                                    f"unknown method {method!r}")
            result = handler(params)
            return {"id": msg_id, "result": result}
        except ProtocolError as e:
            return {"id": msg_id,
                    "error": {"code": e.code, "message": e.message}}
        except Exception as e:  # keep the one-response-per-request invariant
            return {"id": msg_id,
                    "error": {"code": ERR_BAD_PARAMS,
                              "message": f"internal: {e!r}"}}

    # -- helpers -----------------------------------------------------------

    def _require_control(self):
        if not self.controller:
            raise ProtocolError(ERR_SIM_BUSY,
                                "session is an observer, not the controller")

    def _require_paused(self):
        if self.host.running:
            raise ProtocolError(ERR_SIM_BUSY, "simulation is running")

    # -- methods -----------------------------------------------------------

    def _method_load(self, params):
        self._require_control()
        self._require_paused()
        soc = self.host.soc
        try:
            if "elf_b64" in params:
                image = parse_elf(base64.b64decode(params["elf_b64"]))
            elif "bin_b64" in params:
                addr = _parse_addr(params.get("addr"))
                image = raw_image(addr, base64.b64decode(params["bin_b64"]))
            else:
                raise ProtocolError(ERR_BAD_PARAMS,
                                    "need elf_b64 or bin_b64+addr")
        except (binascii.Error, ValueError) as e:
            raise ProtocolError(ERR_BAD_PARAMS, f"bad base64: {e}") from None
        except LoaderError as e:
            raise ProtocolError(ERR_BAD_PARAMS, str(e)) from None
        try:
            load(soc, image)
        except RangeError as e:
            raise ProtocolError(ERR_RANGE, str(e)) from None
        return {"entry": _hex32(soc.core.state.pc),
                "segments": len(image.segments)}

    def _method_reset(self, params):
        self._require_control()
        self._require_paused()
        self.host.soc.reset(cold=bool(params.get("cold", False)))
        return {"pc": _hex32(self.host.soc.core.state.pc)}

    def _method_run(self, params):
        self._require_control()
        max_cycles = params.get("max_cycles")
        if max_cycles is not None and (not isinstance(max_cycles, int)
                                       or max_cycles < 0):
            raise ProtocolError(ERR_BAD_PARAMS, "max_cycles must be >= 0")
        self.host.start_run(max_cycles)
        return {"running": True}

    def _method_pause(self, params):
        self._require_control()
        self.host.pause()
        soc = self.host.soc
        return {"pc": _hex32(soc.core.state.pc), "cycles": soc.cycle}

    def _method_step(self, params):
        self._require_control()
        self._require_paused()
        n = params.get("n", 1)
        if not isinstance(n, int) or isinstance(n, bool) \
                or not 1 <= n <= 1_000_000:
            raise ProtocolError(ERR_BAD_PARAMS, "n must be 1..1000000")
        soc = self.host.soc
        self.host.step(n)
        return {"pc": _hex32(soc.core.state.pc), "cycles": soc.cycle}

    def _method_set_breakpoint(self, params):
        self._require_control()
        self.host.soc.breakpoints.add(_parse_addr(params.get("addr")))
        return {}

    def _method_clear_breakpoint(self, params):
        self._require_control()
        self.host.soc.breakpoints.discard(_parse_addr(params.get("addr")))
        return {}

    def _method_read_regs(self, params):
        self._require_paused()
        state = self.host.soc.core.state
        return {"pc": _hex32(state.pc),
                "regs": [_hex32(r) for r in state.regs]}

    def _method_read_mem(self, params):
        self._require_paused()
        addr = _parse_addr(params.get("addr"))
        length = params.get("len")
        if not isinstance(length, int) or not 0 <= length <= READ_MEM_LIMIT:
            raise ProtocolError(ERR_RANGE,
                                f"len must be 0..{READ_MEM_LIMIT}")
        try:
            data = self.host.soc.read_bytes(addr, length)
        except RangeError as e:
            raise ProtocolError(ERR_RANGE, str(e)) from None
        return {"addr": _hex32(addr), "data": data.hex()}

    def _method_write_mem(self, params):
        self._require_control()
        self._require_paused()
        addr = _parse_addr(params.get("addr"))
        try:
            blob = bytes.fromhex(params.get("bytes", ""))
        except (TypeError, ValueError):
            raise ProtocolError(ERR_BAD_PARAMS, "bytes must be hex") from None
        try:
            self.host.soc.load_bytes(addr, blob)
        except RangeError as e:
            raise ProtocolError(ERR_RANGE, str(e)) from None
        return {"written": len(blob)}

    def _method_gpio_input(self, params):
        self._require_control()
        pin = params.get("pin")
        level = params.get("level")
        if not isinstance(pin, int) or level not in (0, 1):
            raise ProtocolError(ERR_BAD_PARAMS, "need pin int and level 0|1")
        soc = self.host.soc
        if soc.gpio is None or not 0 <= pin < soc.gpio.pin_count:
            raise ProtocolError(ERR_RANGE, f"no gpio pin {pin}")
        self.host.submit(lambda s: s.gpio.set_input(pin, level))
        return {}

    def _method_uart_rx(self, params):
        self._require_control()
        try:
            blob = bytes.fromhex(params.get("bytes", ""))
        except (TypeError, ValueError):
            raise ProtocolError(ERR_BAD_PARAMS, "bytes must be hex") from None
        soc = self.host.soc
        if soc.uart is None:
            raise ProtocolError(ERR_RANGE, "no uart on this board")
        def inject(s):
            for b in blob:
                s.uart.inject_rx_byte(b)
        self.host.submit(inject)
        return {"queued": len(blob)}

    def _method_subscribe(self, params):
        channels = params.get("channels")
        if not isinstance(channels, list) \
                or any(c not in CHANNELS for c in channels):
            raise ProtocolError(ERR_BAD_PARAMS,
                                f"channels must be from {CHANNELS}")
        self.subscriptions.update(channels)
        return {"channels": sorted(self.subscriptions)}


class SimHost:
    """Owns the Soc and the single thread allowed to advance it."""

    def __init__(self, soc: Soc):
        self.soc = soc
        self._lock = threading.RLock()
        self._thread: threading.Thread | None = None
        self._running = False
        self.sessions: list[ControlSession] = []
        self._attach_taps()

    # -- session management --------------------------------------------------

    def open_session(self) -> ControlSession:
        with self._lock:
            session = ControlSession(self)
            session.controller = not any(s.controller for s in self.sessions)
            self.sessions.append(session)
            return session

    def remove_session(self, session: ControlSession) -> None:
        with self._lock:
            if session in self.sessions:
                self.sessions.remove(session)
            if session.controller and self.sessions:
                self.sessions[0].controller = True

    def publish(self, channel, event: dict) -> None:
        for session in list(self.sessions):
            session.deliver(channel, event)

    # -- event taps ------------------------------------------------------------

    def _attach_taps(self) -> None:
        soc = self.soc
        soc.pinrec.sink = lambda e: self.publish(
            "pins", {"event": "pin", "cycle": e.cycle, "time_ns": e.time_ns,
                     "pin": e.pin, "level": e.level})
        if soc.uart is not None:
            soc.uart.on_tx_byte = lambda b: self.publish(
                "uart", {"event": "uart_tx", "byte": b})
        if soc.neopixel is not None:
            soc.neopixel.on_frame = lambda colors: self.publish(
                "neopixel", {"event": "neopixel_frame",
                             "colors": [f"{c:06X}" for c in colors]})
        soc.stats_hook = self._publish_stats

    def _publish_stats(self, cycles: int, instret: int) -> None:
        try:
            s = run_stats(cycles, instret)
            ipc = round(s.ipc, 6)
        except EmptyWindow:
            ipc = 0.0
        self.publish("stats", {"event": "stats", "cycles": cycles,
                               "instret": instret, "ipc": ipc})

    # -- run control ---------------------------------------------------------

    @property
    def running(self) -> bool:
        return self._running

    def start_run(self, max_cycles=None) -> None:
        with self._lock:
            if self._running:
                raise ProtocolError(ERR_SIM_BUSY, "already running")
            self._running = True
            self._thread = threading.Thread(
                target=self._run_worker, args=(max_cycles,), daemon=True)
            self._thread.start()

    def _run_worker(self, max_cycles) -> None:
        result = self.soc.run(max_cycles)
        self._running = False
        self.publish(None, {"event": "halted", "reason": result.stop_reason,
                            "pc": _hex32(result.final_pc)})

    def pause(self) -> None:
        thread = self._thread
        if self._running:
            self.soc.request_pause()
        if thread is not None:
            thread.join(timeout=30)
            if thread.is_alive():
                raise ProtocolError(ERR_SIM_BUSY, "pause timed out")

    def step(self, n: int) -> None:
        with self._lock:
            if self._running:
                raise ProtocolError(ERR_SIM_BUSY, "simulation is running")
            self.soc.step(n)

    def submit(self, command) -> None:
        """Apply a host action: queued at a cycle boundary while running,
        immediately otherwise."""
        with self._lock:
            if self._running:
                self.soc.command_queue.put(command)
            else:
                command(self.soc)

    def shutdown(self) -> None:
        try:
            self.pause()
        except ProtocolError:
            pass


def encode_message(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


def decode_message(text: str) -> dict:
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(ERR_BAD_PARAMS, f"bad json: {e}") from None
    if not isinstance(msg, dict):
        raise ProtocolError(ERR_BAD_PARAMS, "message must be an object")
    return msg
