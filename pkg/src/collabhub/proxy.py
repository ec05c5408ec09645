"""Dynamic routing layer: a mutable route table plus a forwarding server.

Routing is longest-prefix over whole path segments, so a route for
``/notebook/c1`` never captures ``/notebook/c12``.  Forwarding is a raw
TCP splice after the request head is parsed and rewritten, which makes
WebSocket upgrades pass through for free.
"""

from __future__ import annotations

import asyncio
import threading
import time
from dataclasses import dataclass

from . import errors

NOT_FOUND_BODY = b'{"error": "no_route"}'
BAD_GATEWAY_BODY = b'{"error": "bad_gateway"}'
MAX_HEAD_BYTES = 64 * 1024


def normalize_prefix(prefix: str) -> str:
    if not prefix or not prefix.startswith("/") or ".." in prefix.split("/"):
        raise errors.InvalidPrefix(prefix)
    if "//" in prefix:
        raise errors.InvalidPrefix(prefix)
    normalized = prefix.rstrip("/") or "/"
    return normalized


@dataclass(frozen=True)
class RouteEntry:
    prefix: str
    upstream: str
    created_at: float


class RouteTable:
    """Prefix -> upstream map, safe for many readers and atomic writes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._routes: dict[str, RouteEntry] = {}

    def add_route(self, prefix: str, upstream: str) -> None:
        prefix = normalize_prefix(prefix)
        with self._lock:
            self._routes[prefix] = RouteEntry(prefix, upstream, time.time())

    def remove_route(self, prefix: str) -> None:
        try:
            prefix = normalize_prefix(prefix)
        except errors.InvalidPrefix:
            return
        with self._lock:
            self._routes.pop(prefix, None)

    def resolve(self, path: str) -> str | None:
        """Longest segment-boundary prefix match; None means no route."""
        path = path.split("?", 1)[0]
        with self._lock:
            best = None
            for prefix, entry in self._routes.items():
                if path == prefix or path.startswith(prefix.rstrip("/") + "/"):
                    if best is None or len(prefix) > len(best.prefix):
                        best = entry
            return best.upstream if best else None

    def entries(self) -> list[RouteEntry]:
        with self._lock:
            return sorted(self._routes.values(), key=lambda e: e.prefix)


def _simple_response(status: int, reason: str, body: bytes) -> bytes:
    return (
        f"HTTP/1.1 {status} {reason}\r\n"
        f"Content-Type: application/json\r\n"
        f"Content-Length: {len(body)}\r\n"
        f"Connection: close\r\n\r\n"
    ).encode() + body


class ProxyServer:
    """Forwards browser traffic to whatever upstream the table names."""

    def __init__(self, routes: RouteTable, host: str = "127.0.0.1", port: int = 8001):
        self.routes = routes
        self.host = host
        self.port = port
        self._server: asyncio.AbstractServer | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()

    async def _pipe(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            while True:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                writer.write(chunk)
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            try:
                writer.close()
            except Exception:
                pass

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer = writer.get_extra_info("peername")
        client_ip = peer[0] if peer else "unknown"
        try:
            head = await reader.readuntil(b"\r\n\r\n")
        except (asyncio.IncompleteReadError, asyncio.LimitOverrunError):
            writer.close()
            return
        try:
            request_line, _, header_block = head.partition(b"\r\n")
            parts = request_line.decode("latin-1").split(" ")
            path = parts[1] if len(parts) >= 2 else "/"
        except Exception:
            writer.close()
            return

        upstream = self.routes.resolve(path)
        if upstream is None:
            writer.write(_simple_response(404, "Not Found", NOT_FOUND_BODY))
            await writer.drain()
            writer.close()
            return

        host, _, port = upstream.rpartition(":")
        try:
            up_reader, up_writer = await asyncio.open_connection(host, int(port))
        except OSError:
            writer.write(_simple_response(502, "Bad Gateway", BAD_GATEWAY_BODY))
            await writer.drain()
            writer.close()
            return

        # Append X-Forwarded-For, keep the path untouched.
        headers = header_block.rstrip(b"\r\n")
        forwarded = b""
        filtered = []
        for line in headers.split(b"\r\n"):
            if line.lower().startswith(b"x-forwarded-for:"):
                forwarded = line.split(b":", 1)[1].strip() + b", "
            else:
                filtered.append(line)
        filtered.append(b"X-Forwarded-For: " + forwarded + client_ip.encode())
        new_head = request_line + b"\r\n" + b"\r\n".join(filtered) + b"\r\n\r\n"
        up_writer.write(new_head)
        await up_writer.drain()

        # Bidirectional splice until either side closes; this carries plain
        # HTTP bodies and upgraded WebSocket streams alike.
        await asyncio.gather(
            self._pipe(reader, up_writer),
            self._pipe(up_reader, writer),
        )

    async def _serve(self) -> None:
        self._server = await asyncio.start_server(
            self._handle, self.host, self.port, limit=MAX_HEAD_BYTES
        )
        if self.port == 0:
            self.port = self._server.sockets[0].getsockname()[1]
        self._started.set()
        async with self._server:
            await self._server.serve_forever()

    def start_background(self) -> None:
        def run():
            self._loop = asyncio.new_event_loop()
            asyncio.set_event_loop(self._loop)
            try:
                self._loop.run_until_complete(self._serve())
            except asyncio.CancelledError:
                pass

        self._thread = threading.Thread(target=run, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=5):
            raise RuntimeError("proxy failed to start")

    def stop_background(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(lambda: [t.cancel() for t in asyncio.all_tasks(self._loop)])
        if self._thread is not None:
            self._thread.join(timeout=5)
