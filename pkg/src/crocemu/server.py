"""WebSocket transport for the control protocol plus static UI hosting.

One process serves both: websocket upgrades speak the croc-ctl/1 protocol
as JSON text frames; plain GET requests are answered from --ui-dir so the
board UI can be loaded from the same port.
"""

from __future__ import annotations

import asyncio
import mimetypes
from http import HTTPStatus
from pathlib import Path

from websockets.asyncio.server import serve
from websockets.datastructures import Headers
from websockets.http11 import Response

from .control import ProtocolError, SimHost, decode_message, encode_message


def _static_response(ui_dir: Path, request_path: str) -> Response:
    path = request_path.split("?", 1)[0]
    if path.endswith("/"):
        path += "index.html"
    candidate = (ui_dir / path.lstrip("/")).resolve()
    try:
        ok = candidate.is_relative_to(ui_dir.resolve())
    except AttributeError:                      # pragma: no cover
        ok = str(candidate).startswith(str(ui_dir.resolve()))
    if not ok or not candidate.is_file():
        return Response(HTTPStatus.NOT_FOUND, "Not Found", Headers(),
                        b"not found\n")
    ctype = mimetypes.guess_type(candidate.name)[0] \
        or "application/octet-stream"
    body = candidate.read_bytes()
    headers = Headers()
    headers["Content-Type"] = ctype
    headers["Content-Length"] = str(len(body))
    return Response(HTTPStatus.OK, "OK", headers, body)


async def _pump_events(websocket, session, wake: asyncio.Event):
    while True:
        await wake.wait()
        wake.clear()
        for event in session.buffer.drain():
            await websocket.send(encode_message(event))


async def _client_handler(websocket, host: SimHost):
    session = host.open_session()
    loop = asyncio.get_running_loop()
    wake = asyncio.Event()
    session.buffer.on_push = lambda: loop.call_soon_threadsafe(wake.set)
    pump = asyncio.create_task(_pump_events(websocket, session, wake))
    try:
        await websocket.send(encode_message(session.hello()))
        async for text in websocket:
            try:
                msg = decode_message(text)
            except ProtocolError as e:
                await websocket.send(encode_message(
                    {"id": None,
                     "error": {"code": e.code, "message": e.message}}))
                continue
            # handle_request may block (pause joins the sim thread)
            response = await loop.run_in_executor(
                None, session.handle_request, msg)
            await websocket.send(encode_message(response))
    finally:
        pump.cancel()
        session.buffer.on_push = None
        session.close()


async def _serve_async(host: SimHost, bind: str, port: int,
                       ui_dir: str | None, ready=None):
    def process_request(connection, request):
        if request.headers.get("Upgrade", "").lower() == "websocket":
            return None
        if ui_dir is None:
            return Response(HTTPStatus.NOT_FOUND, "Not Found", Headers(),
                            b"no ui directory configured\n")
        return _static_response(Path(ui_dir), request.path)

    async with serve(lambda ws: _client_handler(ws, host), bind, port,
                     process_request=process_request) as server:
        if ready is not None:
            ready(server)
        await asyncio.get_running_loop().create_future()  # run forever


def serve_forever(host: SimHost, port: int, bind: str = "127.0.0.1",
                  ui_dir: str | None = None) -> None:
    """Blocking entry point used by the CLI serve subcommand."""
    try:
        asyncio.run(_serve_async(host, bind, port, ui_dir))
    except KeyboardInterrupt:
        pass
    finally:
        host.shutdown()
