"""Blocking agent-side client for one ECOLANG session."""

from __future__ import annotations

import logging
import socket
import time
from collections import deque
from dataclasses import dataclass, field

from .. import messages as m
from ..codec import ParseError
from ..messages import Content, Message
from ..protocol import (
    Event,
    Incoming,
    Matched,
    Phase,
    ProtocolViolation,
    Role,
    Session,
    Spontaneous,
)
from ..transport import Connection, ConnectionClosed, Endpoint, Transcript, dial

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 5.0


class HandshakeError(Exception):
    pass


@dataclass
class Received:
    """One incoming message and what the session made of it."""

    message: Message
    event: Event
    at: float


@dataclass
class Exchange:
    """A request and every answer correlated to it."""

    request: Message
    answers: list[Message] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    sent_at: float = 0.0
    latency: float | None = None  # seconds to the first answer
    complete: bool = False


class AgentClient:
    """Agent end of a session: dials, performs the handshake, sends and correlates.

    Incoming messages that are not consumed by :meth:`request` (spontaneous
    events, stray answers) stay in :attr:`backlog` for :meth:`wait_for`.
    A disconnect from the simulator is accepted automatically.
    """

    def __init__(
        self,
        endpoint: Endpoint,
        name: str = "agent",
        simulator: str = "EcoDynamo",
        timeout: float = DEFAULT_TIMEOUT,
        transcript: Transcript | None = None,
    ):
        self.endpoint = endpoint
        self.name = name
        self.timeout = timeout
        self.transcript = transcript if transcript is not None else Transcript()
        self.session = Session(Role.AGENT, name, peer_name=simulator, answer_timeout=timeout)
        self.conn: Connection | None = None
        self.backlog: deque[Message] = deque()
        self.received: list[Received] = []
        self.parse_errors: list[tuple[str, ParseError]] = []
        self.exchanges: dict[int, Exchange] = {}

    # -- lifecycle ----------------------------------------------------------

    def open(self) -> None:
        """Dial the simulator (no messages exchanged)."""
        self.conn = dial(self.endpoint, self.timeout, self.transcript)

    def handshake(self) -> Exchange:
        """Send connect and wait for accept; raises HandshakeError unless ok."""
        if self.conn is None:
            self.open()
        host_addr, port = self.conn.sock.getsockname()[:2]
        host_name = socket.gethostname() or "localhost"
        if not m.is_atom(host_name):
            host_name = "localhost"
        ex = self.request(m.Connect(host_name, host_addr, port))
        if not ex.answers or ex.answers[0].content.result is not m.ActionResult.OK:
            raise HandshakeError(f"connect rejected: {ex.answers[0].content if ex.answers else 'no answer'}")
        return ex

    def __enter__(self) -> "AgentClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def registered(self) -> bool:
        return self.session.registered

    def disconnect(self) -> Exchange | None:
        """Orderly goodbye if still registered."""
        if not self.session.registered:
            return None
        return self.request(m.Disconnect())

    def close(self) -> None:
        if self.conn is not None:
            self.conn.close()

    # -- sending ------------------------------------------------------------

    def send(self, content: Content) -> Message:
        msg = self.session.build(content)
        self.session.on_send(msg)
        if msg.id in self.session.pending:
            self.exchanges[msg.id] = Exchange(msg, sent_at=time.monotonic())
        self.conn.send(msg)
        return msg

    def send_line(self, line: str) -> None:
        """Write a line verbatim; the session is not consulted."""
        self.conn.send_line(line)

    # -- receiving ----------------------------------------------------------

    def _pull(self, deadline: float) -> Received:
        """Read and classify the next message; parse errors are recorded and skipped."""
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("no message in time")
            frame = self.conn.receive_frame(remaining)
            if frame.decoded is None:
                continue
            if isinstance(frame.decoded, ParseError):
                self.parse_errors.append((frame.line, frame.decoded))
                log.warning("unparsable frame: %s", frame.decoded)
                continue
            msg = frame.decoded
            event = self.session.on_receive(msg)
            rec = Received(msg, event, time.monotonic())
            self.received.append(rec)
            if isinstance(event, Matched):
                ex = self.exchanges.get(event.request_id)
                if ex is not None:
                    if ex.latency is None:
                        ex.latency = rec.at - ex.sent_at
                    ex.answers.append(msg)
                    ex.complete = event.final
            elif isinstance(event, Incoming) and isinstance(msg.content, m.Disconnect):
                self._accept_disconnect(msg)
            elif isinstance(event, ProtocolViolation):
                log.warning("%s: %s", msg.keyword, event.reason)
                aid = m.action_id_of(msg.content)
                if aid in self.exchanges:
                    self.exchanges[aid].violations.append(f"{msg.keyword}: {event.reason}")
            return rec

    def _accept_disconnect(self, msg: Message) -> None:
        reply = self.session.build(m.Accept(msg.id, m.ActionResult.OK))
        self.session.on_send(reply)
        try:
            self.conn.send(reply)
        except ConnectionClosed:
            pass

    def next_message(self, timeout: float | None = None) -> Received:
        """Next incoming message in arrival order, bypassing the backlog."""
        return self._pull(time.monotonic() + (self.timeout if timeout is None else timeout))

    def request(self, content: Content, timeout: float | None = None) -> Exchange:
        """Send ``content`` and collect its answers (through the end marker if chunked).

        For contents that expect no answer the exchange completes at once.
        """
        msg = self.send(content)
        ex = self.exchanges.get(msg.id)
        if ex is None:
            return Exchange(msg, complete=True)
        deadline = ex.sent_at + (self.timeout if timeout is None else timeout)
        while not ex.complete:
            try:
                rec = self._pull(deadline)
            except (TimeoutError, ConnectionClosed) as exc:
                ex.violations.append(f"{type(exc).__name__}: {exc}")
                break
            matched = isinstance(rec.event, Matched) and rec.event.request_id == msg.id
            if not matched and not isinstance(rec.event, ProtocolViolation):
                self.backlog.append(rec.message)
        return ex

    def next_answer(self, timeout: float | None = None) -> Received:
        """Next message that is not a spontaneous event; events go to the backlog."""
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while True:
            rec = self._pull(deadline)
            if isinstance(rec.event, Spontaneous):
                self.backlog.append(rec.message)
                continue
            return rec

    def wait_for(self, keyword: str, timeout: float | None = None) -> Message:
        """First message with ``keyword``, from the backlog or the wire."""
        for msg in list(self.backlog):
            if msg.keyword == keyword:
                self.backlog.remove(msg)
                return msg
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while True:
            rec = self._pull(deadline)
            if rec.message.keyword == keyword:
                return rec.message
            if not isinstance(rec.event, Matched):
                self.backlog.append(rec.message)

    @property
    def closed(self) -> bool:
        return self.session.phase is Phase.CLOSED or self.conn is None or self.conn.closed
