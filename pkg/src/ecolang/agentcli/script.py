"""Expect-style scripts for driving a simulator.

One directive per line; ``#`` starts a comment. Message payloads use the wire
syntax of the content (the part inside ``message (id sender receiver ...)``)::

    send agents
    expect known_agents
    send seed (r1 now oyster (0.5 0.1) (density 12))
    expect seed_result result=ok action_id=$id
    assert len(agents) >= 1        # checks the last answer or event
    wait end_step                  # skips ahead to an event
    sleep 100                      # milliseconds

``handshake off`` as the first directive skips the automatic connect.
``$id`` stands for the id of the last message this script sent.
"""

from __future__ import annotations

import enum
import math
import operator
import re
import shlex
import time
from dataclasses import dataclass, field
from typing import Any

from .. import messages as m
from ..codec import ParseError, parse_content, print_message
from ..protocol import Matched, ProtocolError, ProtocolViolation
from ..transport import ConnectionClosed, Endpoint, Transcript
from .client import DEFAULT_TIMEOUT, AgentClient, HandshakeError


class ScriptError(ValueError):
    """A script that cannot be parsed."""

    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno


@dataclass(frozen=True)
class Directive:
    op: str  # send | expect | wait | sleep | assert
    lineno: int
    text: str
    content: m.Content | None = None
    keyword: str | None = None
    matchers: tuple[tuple[str, str], ...] = ()
    millis: int = 0
    check: tuple[str, str, str] | None = None  # path, operator, value


@dataclass
class Script:
    directives: list[Directive]
    handshake: bool = True


_OPS = {
    "==": None,
    "!=": None,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _known_keyword(lineno: int, keyword: str) -> str:
    if keyword not in m.BY_KEYWORD:
        raise ScriptError(lineno, f"unknown message keyword {keyword!r}")
    return keyword


def parse_script(text: str) -> Script:
    directives: list[Directive] = []
    handshake = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        op, _, rest = line.partition(" ")
        rest = rest.strip()
        if op == "handshake":
            if rest != "off" or directives:
                raise ScriptError(lineno, "only 'handshake off', before any other directive")
            handshake = False
        elif op == "send":
            try:
                content = parse_content(rest)
            except ParseError as exc:
                raise ScriptError(lineno, f"bad message: {exc}") from None
            directives.append(Directive("send", lineno, line, content=content))
        elif op == "expect":
            words = shlex.split(rest)
            if not words:
                raise ScriptError(lineno, "expect needs a keyword")
            pairs = []
            for w in words[1:]:
                name, eq, value = w.partition("=")
                if not eq or not name:
                    raise ScriptError(lineno, f"matcher {w!r} is not field=value")
                pairs.append((name, value))
            directives.append(
                Directive("expect", lineno, line, keyword=_known_keyword(lineno, words[0]), matchers=tuple(pairs))
            )
        elif op == "wait":
            directives.append(Directive("wait", lineno, line, keyword=_known_keyword(lineno, rest)))
        elif op == "sleep":
            if not rest.isdigit():
                raise ScriptError(lineno, "sleep takes milliseconds")
            directives.append(Directive("sleep", lineno, line, millis=int(rest)))
        elif op == "assert":
            words = rest.split()
            if len(words) != 3 or words[1] not in _OPS:
                raise ScriptError(lineno, "assert <field> <op> <value>")
            directives.append(Directive("assert", lineno, line, check=(words[0], words[1], words[2])))
        else:
            raise ScriptError(lineno, f"unknown directive {op!r}")
    return Script(directives, handshake)


# -- field access -----------------------------------------------------------

_LEN = re.compile(r"len\((.+)\)$")


def resolve(obj: Any, path: str) -> Any:
    """``a.b.0.c`` or ``len(a.b)`` against a message content."""
    lm = _LEN.match(path)
    if lm:
        return len(resolve(obj, lm.group(1)))
    for part in path.split("."):
        if part.isdigit():
            obj = obj[int(part)]
        else:
            obj = getattr(obj, part)
    return obj


def matches(actual: Any, expected: str) -> bool:
    if isinstance(actual, enum.Enum):
        return actual.value == expected
    if actual is None:
        return expected in ("none", "None")
    if isinstance(actual, bool):
        return str(actual).lower() == expected.lower()
    try:
        if isinstance(actual, int):
            return actual == int(expected)
        if isinstance(actual, float):
            return math.isclose(actual, float(expected), rel_tol=1e-9, abs_tol=1e-12)
    except ValueError:
        return False
    return str(actual) == expected


def _compare(actual: Any, op: str, expected: str) -> bool:
    if op == "==":
        return matches(actual, expected)
    if op == "!=":
        return not matches(actual, expected)
    try:
        return _OPS[op](float(actual), float(expected))
    except (TypeError, ValueError):
        return False


# -- running -----------------------------------------------------------------


@dataclass
class ScriptResult:
    ok: bool
    failures: list[str] = field(default_factory=list)
    transcript: Transcript | None = None

    def report(self) -> str:
        return "PASS" if self.ok else "FAIL\n" + "\n".join(self.failures)


def _describe(msg: m.Message | None) -> str:
    return print_message(msg) if msg is not None else "(nothing)"


def execute(client: AgentClient, script: Script) -> list[str]:
    """Run directives on an open client; returns failures (empty = pass). Stops at the first."""
    last: m.Content | None = None
    last_id = 0
    for d in script.directives:
        where = f"line {d.lineno}: {d.text}"
        try:
            if d.op == "send":
                last_id = client.send(d.content).id
            elif d.op == "sleep":
                time.sleep(d.millis / 1000)
            elif d.op == "wait":
                last = client.wait_for(d.keyword).content
            elif d.op == "expect":
                rec = client.next_answer()
                got = rec.message
                problems = []
                if got.keyword != d.keyword:
                    problems.append(f"keyword {got.keyword!r} != {d.keyword!r}")
                if isinstance(rec.event, ProtocolViolation):
                    problems.append(f"correlation: {rec.event.reason}")
                elif isinstance(got.content, m.Content) and m.action_id_of(got.content) is not None:
                    if not isinstance(rec.event, Matched):
                        problems.append("answer not correlated to a request")
                for name, value in d.matchers:
                    value = value.replace("$id", str(last_id))
                    try:
                        actual = resolve(got.content, name)
                    except (AttributeError, IndexError, TypeError):
                        problems.append(f"{name}: no such field")
                        continue
                    if not matches(actual, value):
                        problems.append(f"{name}: {actual!r} != {value!r}")
                if problems:
                    return [
                        f"{where}\n  expected: {d.keyword} "
                        + " ".join(f"{k}={v}" for k, v in d.matchers)
                        + f"\n  received: {_describe(got)}\n  "
                        + "\n  ".join(problems)
                    ]
                last = got.content
            elif d.op == "assert":
                path, op, value = d.check
                value = value.replace("$id", str(last_id))
                if last is None:
                    return [f"{where}\n  nothing received yet"]
                try:
                    actual = resolve(last, path)
                except (AttributeError, IndexError, TypeError):
                    return [f"{where}\n  {path}: no such field in {last.keyword}"]
                if not _compare(actual, op, value):
                    return [f"{where}\n  {path} = {actual!r}"]
        except TimeoutError:
            return [f"{where}\n  timed out after {client.timeout}s"]
        except ConnectionClosed:
            return [f"{where}\n  connection closed"]
        except ProtocolError as exc:
            return [f"{where}\n  not allowed now: {exc}"]
    return []


def run_script(
    endpoint: Endpoint,
    script: Script | str,
    name: str = "agent",
    simulator: str = "EcoDynamo",
    timeout: float = DEFAULT_TIMEOUT,
    transcript: Transcript | None = None,
) -> ScriptResult:
    if isinstance(script, str):
        script = parse_script(script)
    transcript = transcript if transcript is not None else Transcript()
    client = AgentClient(endpoint, name, simulator, timeout, transcript)
    try:
        client.open()
        if script.handshake:
            client.handshake()
        failures = execute(client, script)
        if client.registered:
            client.disconnect()
    except (OSError, HandshakeError) as exc:
        failures = [f"{type(exc).__name__}: {exc}"]
    finally:
        client.close()
        if client.conn is not None:
            client.conn.wait_closed(1.0)
    return ScriptResult(not failures, failures, transcript)
