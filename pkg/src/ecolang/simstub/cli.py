"""``simstub``: run the mock simulator on a TCP port."""

from __future__ import annotations

import argparse
import logging
import signal
import sys
import threading
from pathlib import Path

from ..transport import DEFAULT_PORT, Transcript
from .model import bundled_models_dir
from .server import StubServer
from .simulator import StubConfig


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simstub", description="Mock ECOLANG simulator with a toy model.")
    p.add_argument("--port", type=int, default=DEFAULT_PORT, help="TCP port (0 picks a free one)")
    p.add_argument("--host", default="127.0.0.1", help="address to bind")
    p.add_argument("--models", type=Path, default=bundled_models_dir(), help="directory of *.model files")
    p.add_argument("--output-dir", type=Path, default=Path.cwd(), help="where output files and saves go")
    p.add_argument("--growth", type=float, default=1e-6, help="shell length gained per simulated second")
    p.add_argument("--tick", type=float, default=0.02, help="wall seconds per simulated step while running")
    p.add_argument("--log-file", type=Path, help="write a frame transcript here")
    p.add_argument("--name", default="EcoDynamo", help="sender name on outgoing messages")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    config = StubConfig(
        models_dir=args.models,
        output_dir=args.output_dir,
        name=args.name,
        growth=args.growth,
        tick_interval=args.tick,
    )
    log_stream = args.log_file.open("a", encoding="utf-8") if args.log_file else None
    transcript = Transcript(log_stream) if log_stream else None
    try:
        server = StubServer(args.port, config, host=args.host, transcript=transcript)
    except OSError as exc:
        print(f"simstub: cannot listen on {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    print(f"simstub listening on {args.host}:{server.port}", flush=True)
    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    done.wait()
    server.shutdown()
    server.close()
    if log_stream:
        log_stream.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
