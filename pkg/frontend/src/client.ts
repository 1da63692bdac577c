// Control client: one socket, one request in flight, user intents queued.
//
// The transport is injected so tests can drive the client with a fake
// socket; the browser wiring passes a WebSocket factory.

import {
  Channel,
  PROTOCOL_VERSION,
  Request,
  isEvent,
  parseServerMessage,
  validateEvent,
  validateRequest,
} from "./protocol.js";
import { BoardViewModel } from "./viewmodel.js";

export interface WireSocket {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((data: string) => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => WireSocket;

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class ControlClient {
  readonly vm = new BoardViewModel();
  onchange: (() => void) | null = null;
  onsend: ((request: Request) => void) | null = null;

  private factory: SocketFactory;
  private scheduler: (fn: () => void, ms: number) => void;
  private socket: WireSocket | null = null;
  private url = "";
  private nextId = 1;
  private inflight: Request | null = null;
  private queue: Request[] = [];
  private attempts = 0;
  private closed = false;
  private channels: Channel[] = ["pins", "uart", "neopixel", "stats"];

  constructor(factory: SocketFactory,
              scheduler?: (fn: () => void, ms: number) => void) {
    this.factory = factory;
    this.scheduler = scheduler ?? ((fn, ms) => setTimeout(fn, ms));
  }

  connect(url: string): void {
    this.url = url;
    this.closed = false;
    this.open();
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  private open(): void {
    this.vm.connection = "connecting";
    this.notify();
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.vm.connection = "connected";
      this.vm.banner = null;
      // a fresh session: re-subscribe and drop stale correlation
      this.inflight = null;
      this.request("subscribe", { channels: this.channels });
      this.notify();
    };
    socket.onmessage = (data) => this.receive(data);
    socket.onclose = () => {
      this.vm.connection = "disconnected";
      this.inflight = null;
      if (!this.closed) {
        const delay = Math.min(
          BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_MAX_MS);
        this.attempts += 1;
        this.vm.banner = `disconnected, retrying in ${delay} ms`;
        this.scheduler(() => {
          if (!this.closed) this.open();
        }, delay);
      }
      this.notify();
    };
  }

  // -- user intents (each becomes exactly one protocol request) -------------

  request(method: string, params: Record<string, unknown> = {}): void {
    const request: Request = { id: this.nextId++, method, params };
    if (!validateRequest(request)) {
      this.vm.lastError = `refusing to send malformed ${method} request`;
      this.notify();
      return;
    }
    this.queue.push(request);
    this.pump();
  }

  toggleGpio(pin: number): void {
    const level = this.vm.gpioSwitches[pin] === 1 ? 0 : 1;
    this.request("gpio_input", { pin, level });
  }

  terminalInput(text: string): void {
    let hex = "";
    for (const ch of text) {
      hex += (ch.codePointAt(0)! & 0xff).toString(16).padStart(2, "0");
    }
    this.request("uart_rx", { bytes: hex });
  }

  runControl(action: "run" | "pause" | "step" | "reset"): void {
    if (action === "step") this.request("step", { n: 1 });
    else this.request(action, {});
  }

  setBreakpoint(addr: string): void {
    this.request("set_breakpoint", { addr });
  }

  clearBreakpoint(addr: string): void {
    this.request("clear_breakpoint", { addr });
  }

  loadElf(base64: string): void {
    this.request("load", { elf_b64: base64 });
  }

  // -- plumbing --------------------------------------------------------------

  private pump(): void {
    if (this.inflight !== null || this.queue.length === 0) return;
    if (this.vm.connection !== "connected" || this.socket === null) return;
    const request = this.queue.shift()!;
    this.inflight = request;
    this.onsend?.(request);
    this.socket.send(JSON.stringify(request));
  }

  private receive(data: string): void {
    const msg = parseServerMessage(data);
    if (msg === null) return;
    if (isEvent(msg)) {
      if (!validateEvent(msg)) return;
      this.vm.applyEvent(msg);
      if (msg.event === "hello" &&
          msg.version !== PROTOCOL_VERSION) {
        this.vm.banner = `protocol mismatch: server speaks ${msg.version}`;
      }
      this.notify();
      return;
    }
    const pending = this.inflight;
    if (pending !== null && msg.id === pending.id) {
      this.inflight = null;
      if ("result" in msg) this.vm.applyResponse(pending, msg);
      else this.vm.applyError(pending, msg.error.code, msg.error.message);
      this.notify();
      this.pump();
    }
  }

  private notify(): void {
    this.onchange?.();
  }
}
