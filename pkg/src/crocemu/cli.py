"""Command-line entry point: batch runs, debug REPL, protocol server.

Exit codes: 0 success, 1 usage/config error, 2 firmware load failure,
3 run ended in a double fault.

The REPL shares the control-protocol dispatcher with the socket service:
every command is translated into exactly one protocol request, so batch,
interactive and remote behavior cannot diverge.
"""

from __future__ import annotations

import argparse
import os
import re
import shlex
import sys
import threading

from .control import SimHost
from .loader import LoaderError, load, parse_elf, raw_image
from .memory import RangeError
from .soc import (ConfigError, SocConfig, build, parse_config_text,
                  PROFILES, STOP_DOUBLE_FAULT)
from .trace import EmptyWindow, emit_pin_csv, emit_trace_line, stats

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LOAD = 2
EXIT_DOUBLE_FAULT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _firmware_flags(sub):
    sub.add_argument("--elf", metavar="FILE", help="ELF32 firmware image")
    sub.add_argument("--bin", metavar="FILE@HEXADDR", dest="bin_at",
                     help="raw binary placed at an address")
    sub.add_argument("--profile", choices=sorted(PROFILES),
                     help="board preset")
    sub.add_argument("--config", metavar="FILE",
                     help="board description file")
    sub.add_argument("--clk-hz", type=int, metavar="H",
                     help="clock frequency for timestamps")
    sub.add_argument("--cycles", type=int, metavar="N",
                     help="cycle budget (default: run until halt)")
    sub.add_argument("--trace", metavar="FILE",
                     help="write instruction trace")
    sub.add_argument("--pins-csv", metavar="FILE", help="write pad events")
    sub.add_argument("--uart", choices=["stdio"],
                     help="stdio: TX to stdout, stdin to RX")
    sub.add_argument("--stim", metavar="FILE", help="scripted stimulus file")


def make_parser() -> _Parser:
    parser = _Parser(prog="crocemu",
                     description="Virtual dev board for the Croc RISC-V "
                                 "platform")
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="batch-run firmware")
    _firmware_flags(run)
    debug = commands.add_parser("debug", help="interactive debug REPL")
    _firmware_flags(debug)
    serve = commands.add_parser("serve", help="host the control protocol")
    _firmware_flags(serve)
    serve.add_argument("--port", type=int, required=True)
    serve.add_argument("--bind", default="127.0.0.1")
    serve.add_argument("--ui-dir", metavar="DIR",
                       help="serve the board UI from this directory")
    return parser


def _build_soc(args):
    config = SocConfig()
    if args.profile:
        config = PROFILES[args.profile]()
    if args.config:
        with open(args.config) as f:
            config = parse_config_text(f.read(), base=config)
    if args.clk_hz:
        config.clk_hz = args.clk_hz
    return build(config)


def _load_firmware(soc, args, required=True):
    if args.elf and args.bin_at:
        raise _UsageError("--elf and --bin are mutually exclusive")
    if args.elf:
        with open(args.elf, "rb") as f:
            load(soc, parse_elf(f.read()))
    elif args.bin_at:
        m = re.fullmatch(r"(.+)@(0[xX][0-9a-fA-F]+|\d+)", args.bin_at)
        if m is None:
            raise _UsageError("--bin expects FILE@HEXADDR")
        with open(m.group(1), "rb") as f:
            load(soc, raw_image(int(m.group(2), 0), f.read()))
    elif required:
        raise _UsageError("firmware required: pass --elf or --bin")


STIM_RE = re.compile(
    r"at\s+(?P<cycle>\d+)\s+(?:gpio\s+(?P<pin>\d+)\s+(?P<level>[01])"
    r"|uart\s+(?P<hex>[0-9a-fA-F]+))$")


def parse_stimulus(text: str):
    """Parse `at <cycle> gpio <pin> <lvl>` / `at <cycle> uart <hexbytes>`."""
    actions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = STIM_RE.fullmatch(line)
        if m is None:
            raise _UsageError(f"stimulus line {lineno}: cannot parse {raw!r}")
        cycle = int(m["cycle"])
        if m["pin"] is not None:
            pin, level = int(m["pin"]), int(m["level"])
            actions.append((cycle,
                            lambda s, p=pin, lv=level:
                            s.gpio.set_input(p, lv)))
        else:
            blob = bytes.fromhex(m["hex"])
            def inject(s, b=blob):
                for byte in b:
                    s.uart.inject_rx_byte(byte)
            actions.append((cycle, inject))
    return actions


def _wire_outputs(soc, args, trace_lines, stdout):
    if args.trace:
        soc.trace_sink = lambda r: trace_lines.append(emit_trace_line(r))
    if args.uart == "stdio" and soc.uart is not None:
        def tx(byte):
            stdout.write(bytes([byte]).decode("latin-1"))
            stdout.flush()
        soc.uart.on_tx_byte = tx
    if args.stim:
        with open(args.stim) as f:
            for cycle, action in parse_stimulus(f.read()):
                soc.schedule_stimulus(cycle, action)


def _write_outputs(soc, args, trace_lines):
    if args.trace:
        with open(args.trace, "w") as f:
            f.write("\n".join(trace_lines))
            if trace_lines:
                f.write("\n")
    if args.pins_csv:
        with open(args.pins_csv, "w") as f:
            f.write("\n".join(emit_pin_csv(soc.pinrec.events)) + "\n")


def _stdin_injector(soc):
    """Background thread: stdin bytes become UART RX injections.

    Reads through os.read: a daemon thread parked in the buffered reader
    would hold its lock across interpreter shutdown and abort the process.
    """
    fd = sys.stdin.fileno()

    def reader():
        while True:
            try:
                data = os.read(fd, 1)
            except (OSError, ValueError):
                return
            if not data:
                return
            soc.command_queue.put(
                lambda s, b=data[0]: s.uart.inject_rx_byte(b))
    thread = threading.Thread(target=reader, daemon=True)
    thread.start()


def cmd_run(args, stdout, stderr) -> int:
    soc = _build_soc(args)
    try:
        _load_firmware(soc, args)
    except (OSError, LoaderError, RangeError) as e:
        print(f"load failed: {e}", file=stderr)
        return EXIT_LOAD
    trace_lines: list = []
    _wire_outputs(soc, args, trace_lines, stdout)
    if args.uart == "stdio" and soc.uart is not None \
            and not sys.stdin.isatty():
        _stdin_injector(soc)
    result = soc.run(args.cycles)
    _write_outputs(soc, args, trace_lines)
    try:
        s = stats(result.cycles, result.instret, soc.class_counts)
        ipc = f"{s.ipc:.3f}"
    except EmptyWindow:
        ipc = "n/a"
    print(f"[crocemu] stop={result.stop_reason} pc=0x{result.final_pc:08x} "
          f"cycles={result.cycles} instret={result.instret} ipc={ipc}",
          file=stderr)
    if result.stop_reason == STOP_DOUBLE_FAULT:
        print(f"[crocemu] {result.diagnostic}", file=stderr)
        return EXIT_DOUBLE_FAULT
    return EXIT_OK


REPL_HELP = """commands:
  s [n]          step n instructions (default 1)
  c              continue until breakpoint or halt (Ctrl-C pauses)
  b <addr>       set breakpoint        d <addr>   delete breakpoint
  r              show registers
  x/<n>w <addr>  dump n memory words
  hex <addr> <n> dump n bytes, one word per line
  gpio <pin> <0|1>   drive a GPIO input pad
  tx "<text>"    inject UART RX bytes
  q              quit"""

_XCMD = re.compile(r"x/(\d+)w$")


def repl_eval(session, line: str) -> tuple[str, bool]:
    """Evaluate one REPL command via the shared protocol dispatcher.

    Returns (output text, keep_running).
    """
    try:
        parts = shlex.split(line)
    except ValueError as e:
        return f"parse error: {e}", True
    if not parts:
        return "", True
    cmd, *rest = parts

    def call(method, **params):
        response = session.handle_request(
            {"id": 0, "method": method, "params": params})
        if "error" in response:
            return None, f"error {response['error']['code']}: " \
                         f"{response['error']['message']}"
        return response["result"], None

    if cmd == "q":
        return "", False
    if cmd == "s":
        n = int(rest[0]) if rest else 1
        result, err = call("step", n=n)
        return err or f"pc={result['pc']} cycles={result['cycles']}", True
    if cmd == "c":
        _, err = call("run")
        if err:
            return err, True
        try:
            event, _ = session.buffer.wait_for_event("halted",
                                                     timeout=86400.0)
        except KeyboardInterrupt:
            call("pause")
            event, _ = session.buffer.wait_for_event("halted", timeout=10)
        if event is None:
            return "still running?", True
        return f"stopped: {event['reason']} pc={event['pc']}", True
    if cmd == "b" and rest:
        _, err = call("set_breakpoint", addr=rest[0])
        return err or f"breakpoint at {rest[0]}", True
    if cmd == "d" and rest:
        _, err = call("clear_breakpoint", addr=rest[0])
        return err or f"cleared {rest[0]}", True
    if cmd == "r":
        result, err = call("read_regs")
        if err:
            return err, True
        lines = [f"pc={result['pc']}"]
        regs = result["regs"]
        for row in range(8):
            cells = [f"x{4 * row + i:<2}={regs[4 * row + i]}"
                     for i in range(4)]
            lines.append("  ".join(cells))
        return "\n".join(lines), True
    m = _XCMD.fullmatch(cmd)
    if m and rest:
        count = int(m.group(1))
        result, err = call("read_mem", addr=rest[0], len=4 * count)
        if err:
            return err, True
        data = bytes.fromhex(result["data"])
        words = [int.from_bytes(data[i:i + 4], "little")
                 for i in range(0, len(data), 4)]
        base = int(result["addr"], 16)
        out = []
        for i, w in enumerate(words):
            out.append(f"0x{base + 4 * i:08x}: 0x{w:08x}")
        return "\n".join(out), True
    if cmd == "hex" and len(rest) == 2:
        result, err = call("read_mem", addr=rest[0], len=int(rest[1], 0))
        if err:
            return err, True
        data = bytes.fromhex(result["data"])
        base = int(result["addr"], 16)
        out = []
        for offset in range(0, len(data), 4):
            row = " ".join(f"{b:02x}" for b in data[offset:offset + 4])
            out.append(f"{base + offset:08x}: {row}")
        return "\n".join(out), True
    if cmd == "gpio" and len(rest) == 2:
        _, err = call("gpio_input", pin=int(rest[0]), level=int(rest[1]))
        return err or "ok", True
    if cmd == "tx" and rest:
        _, err = call("uart_rx", bytes=rest[0].encode("latin-1").hex())
        return err or f"queued {len(rest[0])} bytes", True
    return REPL_HELP, True


def cmd_debug(args, stdout, stderr) -> int:
    soc = _build_soc(args)
    try:
        _load_firmware(soc, args, required=False)
    except (OSError, LoaderError, RangeError) as e:
        print(f"load failed: {e}", file=stderr)
        return EXIT_LOAD
    trace_lines: list = []
    _wire_outputs(soc, args, trace_lines, stdout)

    def sink(report):
        line = emit_trace_line(report)
        print(line, file=stdout)       # retirements print live in the REPL
        if args.trace:
            trace_lines.append(line)

    soc.trace_sink = sink
    host = SimHost(soc)
    session = host.open_session()
    print(f"crocemu debug: {session.hello()['version']}; ? for help",
          file=stdout)
    keep = True
    while keep:
        try:
            line = input("(croc) ")
        except EOFError:
            break
        except KeyboardInterrupt:
            print("", file=stdout)
            continue
        output, keep = repl_eval(session, line)
        if output:
            print(output, file=stdout)
    host.shutdown()
    _write_outputs(soc, args, trace_lines)
    return EXIT_OK


def cmd_serve(args, stdout, stderr) -> int:
    from .server import serve_forever
    soc = _build_soc(args)
    try:
        _load_firmware(soc, args, required=False)
    except (OSError, LoaderError, RangeError) as e:
        print(f"load failed: {e}", file=stderr)
        return EXIT_LOAD
    host = SimHost(soc)
    print(f"[crocemu] serving croc-ctl/1 on ws://{args.bind}:{args.port}/",
          file=stderr)
    serve_forever(host, args.port, bind=args.bind, ui_dir=args.ui_dir)
    return EXIT_OK


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return cmd_run(args, sys.stdout, sys.stderr)
        if args.command == "debug":
            return cmd_debug(args, sys.stdout, sys.stderr)
        return cmd_serve(args, sys.stdout, sys.stderr)
    except (_UsageError, ConfigError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
