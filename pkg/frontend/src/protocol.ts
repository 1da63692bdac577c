// croc-ctl/1 message types and structural validation.
//
// The UI must only ever emit documented methods with well-formed params;
// validateRequest is used both at runtime (refuse to send garbage) and by
// the replay test that checks protocol conformance.

export const PROTOCOL_VERSION = "croc-ctl/1";

export const CHANNELS = ["pins", "uart", "neopixel", "stats"] as const;
export type Channel = (typeof CHANNELS)[number];

export interface Request {
  id: number;
  method: string;
  params: Record<string, unknown>;
}

export interface OkResponse {
  id: number;
  result: Record<string, unknown>;
}

export interface ErrResponse {
  id: number | null;
  error: { code: number; message: string };
}

export type Response = OkResponse | ErrResponse;

export interface Event {
  event: string;
  [key: string]: unknown;
}

export type ServerMessage = Response | Event;

function isHexAddr(v: unknown): boolean {
  return typeof v === "string" && /^0x[0-9a-fA-F]{1,8}$/.test(v);
}

function isHexBytes(v: unknown): boolean {
  return typeof v === "string" && /^([0-9a-fA-F]{2})*$/.test(v);
}

function isUint(v: unknown): boolean {
  return typeof v === "number" && Number.isInteger(v) && v >= 0;
}

type Validator = (p: Record<string, unknown>) => boolean;

const METHOD_SCHEMAS: Record<string, Validator> = {
  load: (p) =>
    typeof p.elf_b64 === "string" ||
    (typeof p.bin_b64 === "string" && isHexAddr(p.addr)),
  reset: (p) => p.cold === undefined || typeof p.cold === "boolean",
  run: (p) => p.max_cycles === undefined || isUint(p.max_cycles),
  pause: () => true,
  step: (p) => isUint(p.n) && (p.n as number) >= 1,
  set_breakpoint: (p) => isHexAddr(p.addr),
  clear_breakpoint: (p) => isHexAddr(p.addr),
  read_regs: () => true,
  read_mem: (p) => isHexAddr(p.addr) && isUint(p.len) &&
    (p.len as number) <= 4096,
  write_mem: (p) => isHexAddr(p.addr) && isHexBytes(p.bytes),
  gpio_input: (p) => isUint(p.pin) && (p.level === 0 || p.level === 1),
  uart_rx: (p) => isHexBytes(p.bytes),
  subscribe: (p) =>
    Array.isArray(p.channels) &&
    p.channels.every((c) => (CHANNELS as readonly string[]).includes(c)),
};

export function validateRequest(msg: unknown): msg is Request {
  if (typeof msg !== "object" || msg === null) return false;
  const m = msg as Record<string, unknown>;
  if (!isUint(m.id)) return false;
  if (typeof m.method !== "string") return false;
  const schema = METHOD_SCHEMAS[m.method];
  if (schema === undefined) return false;
  const params = m.params ?? {};
  if (typeof params !== "object" || Array.isArray(params)) return false;
  return schema(params as Record<string, unknown>);
}

const EVENT_SCHEMAS: Record<string, Validator> = {
  hello: (e) => typeof e.version === "string" && typeof e.role === "string",
  pin: (e) => typeof e.pin === "string" && (e.level === 0 || e.level === 1) &&
    isUint(e.cycle) && isUint(e.time_ns),
  uart_tx: (e) => isUint(e.byte) && (e.byte as number) < 256,
  neopixel_frame: (e) =>
    Array.isArray(e.colors) &&
    e.colors.every((c) => typeof c === "string" &&
      /^[0-9a-fA-F]{6}$/.test(c)),
  halted: (e) => typeof e.reason === "string" && isHexAddr(e.pc),
  stats: (e) => isUint(e.cycles) && isUint(e.instret) &&
    typeof e.ipc === "number",
  overflow: (e) => typeof e.channel === "string",
};

export function isEvent(msg: ServerMessage): msg is Event {
  return typeof (msg as Event).event === "string";
}

export function validateEvent(msg: unknown): msg is Event {
  if (typeof msg !== "object" || msg === null) return false;
  const e = msg as Record<string, unknown>;
  if (typeof e.event !== "string") return false;
  const schema = EVENT_SCHEMAS[e.event];
  return schema !== undefined && schema(e);
}

export function parseServerMessage(text: string): ServerMessage | null {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  return msg as ServerMessage;
}
