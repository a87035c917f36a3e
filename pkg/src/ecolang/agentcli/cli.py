"""``agent``: command-line ECOLANG agent.

Subcommands::

    agent connect                 handshake, list known agents, disconnect
    agent script FILE             run an expect-style script
    agent conformance             drive the whole answer table
    agent raw LINE...             send lines verbatim, print replies

Exit status is 0 only when every expectation holds.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import messages as m
from ..codec import print_content
from ..transport import DEFAULT_PORT, Endpoint, Transcript
from .client import DEFAULT_TIMEOUT, AgentClient, HandshakeError
from .conformance import conformance
from .raw import send_raw
from .script import ScriptError, parse_script, run_script


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--host", default="127.0.0.1", help="simulator address")
    common.add_argument("--port", type=int, default=DEFAULT_PORT)
    common.add_argument("--name", default="agent", help="this agent's name (sender field)")
    common.add_argument("--simulator", default="EcoDynamo", help="receiver name for outgoing messages")
    common.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds to wait for an answer")
    common.add_argument("--transcript", type=Path, help="append the frame transcript to this file")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="agent", description="Scriptable ECOLANG agent.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("connect", parents=[common], help="handshake and list known agents")
    sp = sub.add_parser("script", parents=[common], help="run a script file ('-' for stdin)")
    sp.add_argument("file")
    cp = sub.add_parser("conformance", parents=[common], help="exercise every answer-table row")
    cp.add_argument("--records", action="store_true", help="print JSON lines instead of the table")
    rp = sub.add_parser("raw", parents=[common], help="send lines verbatim")
    rp.add_argument("lines", nargs="+")
    rp.add_argument("--window", type=float, default=1.0, help="seconds to collect replies")
    return p


def _cmd_connect(args, endpoint: Endpoint, transcript: Transcript) -> int:
    with AgentClient(endpoint, args.name, args.simulator, args.timeout, transcript) as client:
        try:
            client.handshake()
        except (OSError, HandshakeError) as exc:
            print(f"agent: {exc}", file=sys.stderr)
            return 1
        ex = client.request(m.AskAgents())
        for answer in ex.answers:
            print(print_content(answer.content))
        client.disconnect()
        return 0 if ex.answers and not ex.violations else 1


def _cmd_script(args, endpoint: Endpoint, transcript: Transcript) -> int:
    text = sys.stdin.read() if args.file == "-" else Path(args.file).read_text(encoding="utf-8")
    try:
        script = parse_script(text)
    except ScriptError as exc:
        print(f"agent: {args.file}: {exc}", file=sys.stderr)
        return 2
    result = run_script(endpoint, script, args.name, args.simulator, args.timeout, transcript)
    print(result.report())
    return 0 if result.ok else 1


def _cmd_conformance(args, endpoint: Endpoint, transcript: Transcript) -> int:
    report = conformance(endpoint, args.name, args.simulator, args.timeout, transcript)
    print("\n".join(report.records()) if args.records else report.table())
    return 0 if report.ok else 1


def _cmd_raw(args, endpoint: Endpoint, transcript: Transcript) -> int:
    try:
        replies = send_raw(endpoint, args.lines, args.window, transcript)
    except OSError as exc:
        print(f"agent: {exc}", file=sys.stderr)
        return 1
    for line in replies:
        print(line)
    if not replies:
        print(f"(no reply within {args.window}s)", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.ERROR)
    endpoint = Endpoint(args.host, args.host, args.port)
    stream = args.transcript.open("a", encoding="utf-8") if args.transcript else None
    transcript = Transcript(stream)
    commands = {
        "connect": _cmd_connect,
        "script": _cmd_script,
        "conformance": _cmd_conformance,
        "raw": _cmd_raw,
    }
    try:
        return commands[args.command](args, endpoint, transcript)
    finally:
        if stream:
            stream.close()


if __name__ == "__main__":
    raise SystemExit(main())
