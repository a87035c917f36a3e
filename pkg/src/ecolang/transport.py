"""TCP plumbing: newline-framed ECOLANG messages over plain sockets.

Each :class:`Connection` owns a reader thread that decodes incoming lines into
a queue, so the application sees one ordered stream of frames per socket.
Sends are serialised per connection so whole lines never interleave.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable, TextIO

from .codec import Decoded, FrameTooLarge, StreamDecoder, print_message
from .messages import Message

log = logging.getLogger(__name__)

DEFAULT_PORT = 6000
MAX_BUFFER = 1 << 20


class ConnectionClosed(Exception):
    pass


@dataclass(frozen=True)
class Endpoint:
    host_name: str
    host_addr: str
    server_port: int

    def __post_init__(self) -> None:
        if not 0 <= self.server_port <= 65535:
            raise ValueError(f"port {self.server_port} out of range")

    @classmethod
    def local(cls, port: int) -> "Endpoint":
        return cls("localhost", "127.0.0.1", port)


class Transcript:
    """Log of every frame on a connection: ``<dir> <seconds> <line>``.

    ``>`` marks frames sent, ``<`` frames received; seconds come from a
    monotonic clock relative to the transcript's creation.
    """

    def __init__(self, stream: TextIO | None = None, clock: Callable[[], float] = time.monotonic):
        self.stream = stream
        self.clock = clock
        self.start = clock()
        self.lines: list[str] = []
        self._lock = threading.Lock()

    def record(self, direction: str, line: str) -> None:
        entry = f"{direction} {self.clock() - self.start:.6f} {line}"
        with self._lock:
            self.lines.append(entry)
            if self.stream is not None:
                self.stream.write(entry + "\n")
                self.stream.flush()

    def frames(self, direction: str | None = None) -> list[str]:
        """Recorded lines without the timestamp column."""
        out = []
        for entry in list(self.lines):
            d, _t, line = entry.split(" ", 2)
            if direction is None or d == direction:
                out.append(f"{d} {line}" if direction is None else line)
        return out


@dataclass(frozen=True)
class Frame:
    line: str
    decoded: Decoded


_CLOSED = object()


class Connection:
    """One TCP connection carrying one ECOLANG session."""

    def __init__(
        self,
        sock: socket.socket,
        transcript: Transcript | None = None,
        max_buffer: int = MAX_BUFFER,
        label: str = "",
    ):
        self.sock = sock
        self.transcript = transcript
        self.label = label or _describe(sock)
        self.peer: Endpoint | None = None
        self.bytes_in = 0
        self.bytes_out = 0
        self.closed = False
        self._decoder = StreamDecoder(max_buffer)
        self._send_lock = threading.Lock()
        self._frames: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, name=f"reader {self.label}", daemon=True)
        self._reader.start()

    def __repr__(self) -> str:
        return f"<Connection {self.label}{' closed' if self.closed else ''}>"

    # -- sending ----------------------------------------------------------

    def send(self, msg: Message) -> None:
        self.send_line(print_message(msg))

    def send_line(self, line: str) -> None:
        data = (line + "\n").encode("utf-8")
        with self._send_lock:
            if self.closed:
                raise ConnectionClosed(self.label)
            # record first: a reply can be read before sendall returns
            if self.transcript is not None:
                self.transcript.record(">", line)
            try:
                self.sock.sendall(data)
            except OSError as exc:
                self._shutdown()
                raise ConnectionClosed(f"{self.label}: {exc}") from exc
            self.bytes_out += len(data)

    # -- receiving --------------------------------------------------------

    def _read_loop(self) -> None:
        try:
            while True:
                try:
                    data = self.sock.recv(65536)
                except OSError:
                    break
                if not data:
                    if self._decoder.pending:
                        log.info("%s: discarding %d bytes of partial frame", self.label, len(self._decoder.pending))
                    break
                self.bytes_in += len(data)
                try:
                    pairs = self._decoder.feed(data)
                except FrameTooLarge as exc:
                    log.warning("%s: %s; closing", self.label, exc)
                    break
                for raw, decoded in pairs:
                    line = raw.decode("utf-8", "replace")
                    if self.transcript is not None:
                        self.transcript.record("<", line)
                    self._frames.put(Frame(line, decoded))
        finally:
            self._shutdown()
            self._frames.put(_CLOSED)

    def receive_frame(self, timeout: float | None = None) -> Frame:
        """Next frame in arrival order.

        Raises TimeoutError when nothing arrives in time and ConnectionClosed
        once the peer is gone and every earlier frame has been delivered.
        """
        try:
            item = self._frames.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError(f"{self.label}: nothing received within {timeout}s") from None
        if item is _CLOSED:
            self._frames.put(_CLOSED)
            raise ConnectionClosed(self.label)
        return item

    def receive(self, timeout: float | None = None) -> Decoded:
        return self.receive_frame(timeout).decoded

    def __iter__(self):
        while True:
            try:
                yield self.receive_frame()
            except ConnectionClosed:
                return

    # -- teardown ---------------------------------------------------------

    def _shutdown(self) -> None:
        if self.closed:
            return
        self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

    def close(self) -> None:
        with self._send_lock:
            self._shutdown()

    def wait_closed(self, timeout: float | None = None) -> bool:
        self._reader.join(timeout)
        return not self._reader.is_alive()


def _describe(sock: socket.socket) -> str:
    try:
        host, port = sock.getpeername()[:2]
        return f"{host}:{port}"
    except OSError:
        return "?"


class Listener:
    """Accepts connections on a port; each one is handed to ``on_connection``.

    Without a callback, new connections queue up for :meth:`accept`. Binding
    happens in the constructor so a busy port fails immediately.
    """

    def __init__(
        self,
        port: int,
        on_connection: Callable[[Connection], None] | None = None,
        host: str = "0.0.0.0",
        transcript: Transcript | None = None,
        max_buffer: int = MAX_BUFFER,
    ):
        self.on_connection = on_connection
        self.transcript = transcript
        self.max_buffer = max_buffer
        self._pending: queue.Queue[Connection] = queue.Queue()
        self.connections: list[Connection] = []
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self.sock.bind((host, port))
            self.sock.listen()
        except OSError:
            self.sock.close()
            raise
        self.port = self.sock.getsockname()[1]
        self._closing = False
        self._thread = threading.Thread(target=self._accept_loop, name=f"listener :{self.port}", daemon=True)
        self._thread.start()

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                client, _addr = self.sock.accept()
            except OSError:
                break
            client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = Connection(client, self.transcript, self.max_buffer)
            self.connections.append(conn)
            if self.on_connection is None:
                self._pending.put(conn)
            else:
                threading.Thread(
                    target=self.on_connection, args=(conn,), name=f"handler {conn.label}", daemon=True
                ).start()

    def accept(self, timeout: float | None = None) -> Connection:
        try:
            return self._pending.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("no connection") from None

    def close(self) -> None:
        self._closing = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
        self._thread.join(2)

    def __enter__(self) -> "Listener":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def listen(endpoint: Endpoint | int, on_connection=None, **kwargs) -> Listener:
    port = endpoint.server_port if isinstance(endpoint, Endpoint) else endpoint
    return Listener(port, on_connection, **kwargs)


def dial(
    endpoint: Endpoint,
    timeout: float = 5.0,
    transcript: Transcript | None = None,
    max_buffer: int = MAX_BUFFER,
) -> Connection:
    """Open a TCP connection; sends nothing. Raises OSError / TimeoutError."""
    sock = socket.create_connection((endpoint.host_addr, endpoint.server_port), timeout=timeout)
    sock.settimeout(None)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    conn = Connection(sock, transcript, max_buffer)
    conn.peer = endpoint
    return conn
