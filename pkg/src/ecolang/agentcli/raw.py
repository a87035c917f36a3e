"""Send one line verbatim and collect whatever comes back."""

from __future__ import annotations

import time

from ..transport import ConnectionClosed, Endpoint, Transcript, dial


def send_raw(
    endpoint: Endpoint,
    lines: str | list[str],
    window: float = 1.0,
    transcript: Transcript | None = None,
) -> list[str]:
    """Write each line (plus newline) and return every frame received within ``window`` seconds.

    No handshake is performed; the lines go out exactly as given.
    """
    if isinstance(lines, str):
        lines = [lines]
    conn = dial(endpoint, timeout=max(window, 1.0), transcript=transcript)
    received: list[str] = []
    try:
        for line in lines:
            conn.send_line(line)
        deadline = time.monotonic() + window
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                received.append(conn.receive_frame(remaining).line)
            except (TimeoutError, ConnectionClosed):
                break
    finally:
        conn.close()
    return received
