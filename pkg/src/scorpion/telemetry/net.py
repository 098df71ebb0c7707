"""UDP telemetry out, TCP commands in.

Telemetry is fire-and-forget datagrams; send failures back off
exponentially (in ticks) so a dead route cannot stall the sim loop.
Commands arrive on a single TCP connection; a newer connection replaces
the old one, and malformed bytes are skipped by the stream decoder
without dropping the link.
"""

from __future__ import annotations

import logging
import selectors
import socket
import threading

from .wire import FrameDecoder, ProtocolError

log = logging.getLogger(__name__)


class UdpTelemetryPublisher:
    def __init__(self, host: str = "127.0.0.1", port: int = 14550):
        self.addr = (host, port)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._skip = 0
        self._backoff = 1
        self.sent = 0
        self.dropped = 0

    def publish(self, data: bytes) -> bool:
        """Send one frame; returns False while backing off or on error."""
        if self._skip > 0:
            self._skip -= 1
            self.dropped += 1
            return False
        try:
            self._sock.sendto(data, self.addr)
        except OSError as e:
            self._skip = self._backoff
            self._backoff = min(self._backoff * 2, 256)
            self.dropped += 1
            log.warning("telemetry send failed (%s); pausing %d ticks",
                        e, self._skip)
            return False
        self.sent += 1
        self._backoff = 1
        return True

    def close(self) -> None:
        self._sock.close()


class TcpCommandServer:
    """Single-client command intake; frames go to on_frame(type, payload)."""

    def __init__(self, on_frame, host: str = "127.0.0.1", port: int = 14551):
        self._on_frame = on_frame
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self._listener.setblocking(False)
        self.port = self._listener.getsockname()[1]
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.frames_ok = 0
        self.command_errors = 0
        self.stream_errors = 0

    def start(self) -> None:
        self._thread = threading.Thread(target=self._serve, daemon=True,
                                        name="cmd-server")
        self._thread.start()

    def _serve(self) -> None:
        sel = selectors.DefaultSelector()
        sel.register(self._listener, selectors.EVENT_READ)
        client: socket.socket | None = None
        decoder = FrameDecoder()
        while not self._stop.is_set():
            for key, _ in sel.select(timeout=0.05):
                if key.fileobj is self._listener:
                    conn, peer = self._listener.accept()
                    if client is not None:
                        log.info("replacing command client with %s", peer)
                        sel.unregister(client)
                        client.close()
                        self.stream_errors += decoder.errors
                    client = conn
                    decoder = FrameDecoder()
                    conn.setblocking(False)
                    sel.register(conn, selectors.EVENT_READ)
                    continue
                conn = key.fileobj
                try:
                    data = conn.recv(4096)
                except (BlockingIOError, InterruptedError):
                    continue
                except OSError:
                    data = b""
                if not data:
                    sel.unregister(conn)
                    conn.close()
                    if conn is client:
                        client = None
                        self.stream_errors += decoder.errors
                    continue
                for ftype, payload in decoder.feed(data):
                    try:
                        self._on_frame(ftype, payload)
                        self.frames_ok += 1
                    except ProtocolError as e:
                        self.command_errors += 1
                        log.warning("rejected command frame: %s", e)
        sel.close()
        if client is not None:
            client.close()
            self.stream_errors += decoder.errors
        self._listener.close()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
