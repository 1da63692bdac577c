import { ControlClient, WireSocket } from "./client.js";
import { mountBoard } from "./ui.js";

function browserSocket(url: string): WireSocket {
  const ws = new WebSocket(url);
  const wire: WireSocket = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
  };
  ws.onopen = () => wire.onopen?.();
  ws.onmessage = (e) => wire.onmessage?.(String(e.data));
  ws.onclose = () => wire.onclose?.();
  return wire;
}

const client = new ControlClient(browserSocket);
mountBoard(document.getElementById("board")!, client);
client.connect(`ws://${location.host}/`);
