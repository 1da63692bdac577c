// Board view model: every field derives from protocol traffic alone.

import { Event, OkResponse, Request } from "./protocol.js";

export const GPIO_COUNT = 26;
export const MAX_LEDS = 64;

export interface Stats {
  cycles: number;
  instret: number;
  ipc: number;
}

export type Connection = "connecting" | "connected" | "disconnected";

export class BoardViewModel {
  connection: Connection = "disconnected";
  version: string | null = null;
  role: string | null = null;
  running = false;
  pc: string | null = null;
  regs: string[] = [];
  cycles = 0;
  stats: Stats | null = null;
  haltReason: string | null = null;
  gpioLamps: number[] = new Array(GPIO_COUNT).fill(0);
  gpioSwitches: number[] = new Array(GPIO_COUNT).fill(0);
  uartScrollback = "";
  neopixels: string[] = [];
  breakpoints: string[] = [];
  banner: string | null = null;
  lastError: string | null = null;
  loadedEntry: string | null = null;

  applyEvent(event: Event): void {
    switch (event.event) {
      case "hello":
        this.version = event.version as string;
        this.role = event.role as string;
        this.banner = null;
        break;
      case "pin": {
        const name = event.pin as string;
        const m = /^gpio(\d+)$/.exec(name);
        if (m !== null) {
          const pin = Number(m[1]);
          if (pin < GPIO_COUNT) this.gpioLamps[pin] = event.level as number;
        }
        break;
      }
      case "uart_tx":
        this.uartScrollback += String.fromCharCode(event.byte as number);
        break;
      case "neopixel_frame":
        // colors arrive as RRGGBB hex, displayable directly
        this.neopixels = (event.colors as string[]).slice(0, MAX_LEDS);
        break;
      case "halted":
        this.running = false;
        this.haltReason = event.reason as string;
        this.pc = event.pc as string;
        break;
      case "stats":
        this.stats = {
          cycles: event.cycles as number,
          instret: event.instret as number,
          ipc: event.ipc as number,
        };
        break;
      case "overflow":
        this.banner = `event overflow on channel ${event.channel as string}`;
        break;
      default:
        break;
    }
  }

  applyResponse(request: Request, response: OkResponse): void {
    const result = response.result;
    switch (request.method) {
      case "load":
        this.loadedEntry = result.entry as string;
        this.pc = result.entry as string;
        break;
      case "reset":
        this.pc = result.pc as string;
        this.cycles = 0;
        this.haltReason = null;
        this.uartScrollback = "";
        break;
      case "run":
        this.running = true;
        this.haltReason = null;
        break;
      case "pause":
      case "step":
        this.running = false;
        this.pc = result.pc as string;
        this.cycles = result.cycles as number;
        break;
      case "read_regs":
        this.pc = result.pc as string;
        this.regs = result.regs as string[];
        break;
      case "set_breakpoint": {
        const addr = request.params.addr as string;
        if (!this.breakpoints.includes(addr)) this.breakpoints.push(addr);
        break;
      }
      case "clear_breakpoint":
        this.breakpoints = this.breakpoints.filter(
          (a) => a !== (request.params.addr as string));
        break;
      case "gpio_input":
        this.gpioSwitches[request.params.pin as number] =
          request.params.level as number;
        break;
      default:
        break;
    }
  }

  applyError(request: Request, code: number, message: string): void {
    this.lastError = `${request.method}: error ${code}: ${message}`;
  }
}
