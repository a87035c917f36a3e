"""TCP front end for :class:`Simulator`."""

from __future__ import annotations

import logging
import threading
import time

from ..codec import ParseError
from ..protocol import ProtocolError
from ..transport import Connection, ConnectionClosed, Endpoint, Listener, Transcript
from .simulator import Peer, Simulator, StubConfig

log = logging.getLogger(__name__)


class StubServer:
    """Listens on ``port`` and runs one simulator for every connection.

    ``port=0`` picks a free port; read it back from :attr:`port`.
    """

    def __init__(
        self,
        port: int = 0,
        config: StubConfig | None = None,
        host: str = "127.0.0.1",
        transcript: Transcript | None = None,
    ):
        self.simulator = Simulator(config)
        self.transcript = transcript
        self._conns: dict[Peer, Connection] = {}
        self._stop = threading.Event()
        self.listener = Listener(port, self._serve, host=host, transcript=transcript)
        self.port = self.listener.port
        self._ticker = threading.Thread(target=self._tick_loop, name="simstub tick", daemon=True)
        self._ticker.start()

    def __enter__(self) -> "StubServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _tick_loop(self) -> None:
        interval = self.simulator.config.tick_interval
        while not self._stop.wait(interval):
            try:
                self.simulator.tick()
            except Exception:  # keep the clock alive whatever one tick does
                log.exception("tick failed")

    def _serve(self, conn: Connection) -> None:
        peer = self.simulator.new_peer(conn.send)
        self._conns[peer] = conn
        try:
            for frame in conn:
                if isinstance(frame.decoded, ParseError):
                    log.warning("%s: unparsable frame dropped: %s", conn.label, frame.decoded)
                    continue
                try:
                    self.simulator.handle(peer, frame.decoded)
                except (ConnectionClosed, ProtocolError) as exc:
                    log.info("%s: %s", conn.label, exc)
                rec = peer.session.peer
                if conn.peer is None and rec is not None:
                    conn.peer = Endpoint(rec.host_name, rec.host_addr, rec.server_port)
                if peer.session.phase.value == "closed":
                    break
        finally:
            self.simulator.detach(peer)
            self._conns.pop(peer, None)
            conn.close()

    def shutdown(self, grace: float = 2.0) -> None:
        """Ask every registered agent to disconnect, then wait up to ``grace`` seconds."""
        targets = self.simulator.begin_shutdown()
        deadline = time.monotonic() + grace
        for peer in targets:
            conn = self._conns.get(peer)
            if conn is not None:
                conn.wait_closed(max(0.0, deadline - time.monotonic()))

    def close(self) -> None:
        self._stop.set()
        self.listener.close()
        for conn in list(self._conns.values()):
            conn.close()
        self._ticker.join(2)
