"""Text wire format for ECOLANG messages.

One message per line::

    message (1 Agent1 EcoDynamo connect host1 192.168.0.7 6000)\\n

The grammar is written once below as small syntax objects that know how to
both parse and emit their piece, so the printer and the parser cannot drift
apart.
"""

from __future__ import annotations

import math
import re
from dataclasses import fields
from enum import Enum
from typing import Any, NamedTuple, Union

from . import messages as m

__all__ = [
    "ParseError",
    "Token",
    "tokenize",
    "parse_message",
    "parse_content",
    "print_message",
    "print_content",
    "format_real",
    "encode_frame",
    "decode_frame",
    "decode_stream",
    "StreamDecoder",
    "FrameTooLarge",
]

LPAREN = "("
RPAREN = ")"
_WS = " \t\r\n"

_INT_RE = re.compile(r"-?[0-9]+\Z")
_REAL_RE = re.compile(r"-?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][-+]?[0-9]+)?\Z")


class ParseError(ValueError):
    """Grammar violation at ``byte_offset`` of the parsed text."""

    def __init__(self, byte_offset: int, expected: str, found: str):
        self.byte_offset = byte_offset
        self.expected = expected
        self.found = found
        super().__init__(f"at byte {byte_offset}: expected {expected}, found {found}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ParseError) and (
            (self.byte_offset, self.expected, self.found)
            == (other.byte_offset, other.expected, other.found)
        )

    __hash__ = ValueError.__hash__


class Token(NamedTuple):
    text: str
    offset: int  # byte offset into the encoded input

    @property
    def is_atom(self) -> bool:
        return self.text not in (LPAREN, RPAREN)


def tokenize(text: str | bytes) -> list[Token]:
    """Split into parenthesis and atom tokens.

    Raises ParseError for undecodable bytes and for control characters other
    than tab, CR and LF.
    """
    if isinstance(text, (bytes, bytearray)):
        raw = bytes(text)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(exc.start, "UTF-8 text", f"byte 0x{raw[exc.start]:02x}") from None
    tokens: list[Token] = []
    pos = 0
    atom_start = -1
    atom_pos = 0
    for i, ch in enumerate(text):
        if ch in _WS or ch == LPAREN or ch == RPAREN:
            if atom_start >= 0:
                tokens.append(Token(text[atom_start:i], atom_pos))
                atom_start = -1
            if ch == LPAREN or ch == RPAREN:
                tokens.append(Token(ch, pos))
        elif ord(ch) < 0x20:
            raise ParseError(pos, "printable character", f"control character 0x{ord(ch):02x}")
        elif atom_start < 0:
            atom_start = i
            atom_pos = pos
        pos += 1 if ord(ch) < 0x80 else len(ch.encode("utf-8", "surrogatepass"))
    if atom_start >= 0:
        tokens.append(Token(text[atom_start:], atom_pos))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token], end: int):
        self.tokens = tokens
        self.i = 0
        self.end = end

    def peek(self, ahead: int = 0) -> Token | None:
        j = self.i + ahead
        return self.tokens[j] if j < len(self.tokens) else None

    def error(self, expected: str) -> ParseError:
        tok = self.peek()
        if tok is None:
            return ParseError(self.end, expected, "end of input")
        return ParseError(tok.offset, expected, repr(tok.text))

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("more input")
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.peek()
        if tok is None or tok.text != text:
            raise self.error(repr(text))
        self.i += 1

    def atom(self, what: str) -> Token:
        tok = self.peek()
        if tok is None or not tok.is_atom:
            raise self.error(what)
        self.i += 1
        return tok

    def at_close(self) -> bool:
        tok = self.peek()
        return tok is None or tok.text == RPAREN


# --------------------------------------------------------------------------
# Syntax building blocks. Each has parse(cursor) -> value and emit(value, out).
# --------------------------------------------------------------------------


def format_real(value: float) -> str:
    """Shortest text that parses back to the same float; integral values drop '.0'."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


class _Int:
    def __init__(self, what: str = "integer", lo: int | None = None, hi: int | None = None):
        self.what = what
        self.lo = lo
        self.hi = hi

    def parse(self, cur: _Cursor) -> int:
        tok = cur.atom(self.what)
        try:
            if not _INT_RE.match(tok.text):
                raise ValueError
            value = int(tok.text)  # ValueError past the int-string digit limit too
            if (self.lo is not None and value < self.lo) or (self.hi is not None and value > self.hi):
                raise ValueError
        except ValueError:
            cur.i -= 1
            raise cur.error(self.what) from None
        return value

    def emit(self, value: int, out: list[str]) -> None:
        out.append(str(value))


class _Real:
    def parse(self, cur: _Cursor) -> float:
        tok = cur.atom("real")
        if _REAL_RE.match(tok.text):
            value = float(tok.text)
            if math.isfinite(value):
                return value
        cur.i -= 1
        raise cur.error("finite real")

    def emit(self, value: float, out: list[str]) -> None:
        out.append(format_real(value))


class _Name:
    """A bare [string] atom."""

    def __init__(self, what: str = "name"):
        self.what = what

    def parse(self, cur: _Cursor) -> str:
        return cur.atom(self.what).text

    def emit(self, value: str, out: list[str]) -> None:
        out.append(value)


class _Token:
    """One word out of a closed token set."""

    def __init__(self, enum: type[Enum]):
        self.enum = enum
        self.what = " | ".join(e.value for e in enum)

    def parse(self, cur: _Cursor) -> Enum:
        tok = cur.atom(self.what)
        try:
            return self.enum(tok.text)
        except ValueError:
            cur.i -= 1
            raise cur.error(self.what) from None

    def emit(self, value: Enum, out: list[str]) -> None:
        out.append(value.value)


class _Paren:
    """``( inner )`` around a single value."""

    def __init__(self, inner: Any):
        self.inner = inner

    def parse(self, cur: _Cursor) -> Any:
        cur.expect(LPAREN)
        value = self.inner.parse(cur)
        cur.expect(RPAREN)
        return value

    def emit(self, value: Any, out: list[str]) -> None:
        out.append(LPAREN)
        self.inner.emit(value, out)
        out.append(RPAREN)


class _Many:
    """Repeated items up to (not including) the enclosing ')'."""

    def __init__(self, item: Any, min_count: int = 1):
        self.item = item
        self.min_count = min_count

    def parse(self, cur: _Cursor) -> tuple:
        items = []
        while not cur.at_close():
            items.append(self.item.parse(cur))
        if len(items) < self.min_count:
            raise cur.error("at least one item")
        return tuple(items)

    def emit(self, value: tuple, out: list[str]) -> None:
        for item in value:
            self.item.emit(item, out)


class _Struct:
    """Literal words and field syntaxes in order, building ``cls``."""

    def __init__(self, cls: type, *parts: Any):
        self.cls = cls
        self.parts = parts
        self.names = [f.name for f in fields(cls)]
        n_fields = sum(not isinstance(p, str) for p in parts)
        assert n_fields == len(self.names), cls

    def parse(self, cur: _Cursor) -> Any:
        values = []
        for part in self.parts:
            if isinstance(part, str):
                cur.expect(part)
            else:
                values.append(part.parse(cur))
        return self.cls(*values)

    def emit(self, value: Any, out: list[str]) -> None:
        names = iter(self.names)
        for part in self.parts:
            if isinstance(part, str):
                out.append(part)
            else:
                part.emit(getattr(value, next(names)), out)


class _Choice:
    """Picks a struct by the atom found ``ahead`` tokens in."""

    def __init__(self, what: str, table: dict[str, _Struct], ahead: int = 0):
        self.what = what
        self.table = table
        self.ahead = ahead
        self.by_cls = {s.cls: s for s in table.values()}

    def parse(self, cur: _Cursor) -> Any:
        tok = cur.peek(self.ahead)
        syntax = self.table.get(tok.text) if tok is not None else None
        if syntax is None:
            if tok is not None and self.ahead:
                cur.i += self.ahead
            raise cur.error(self.what)
        return syntax.parse(cur)

    def emit(self, value: Any, out: list[str]) -> None:
        self.by_cls[type(value)].emit(value, out)


class _TimeSyntax:
    seconds = _Int("now or seconds since 1970", lo=0)

    def parse(self, cur: _Cursor) -> m.Time:
        tok = cur.peek()
        if tok is not None and tok.text == "now":
            cur.i += 1
            return m.NOW
        return m.Epoch(self.seconds.parse(cur))

    def emit(self, value: m.Time, out: list[str]) -> None:
        out.append("now" if isinstance(value, m.Now) else str(value.seconds))


class _DomainSyntax:
    """``all`` or ``(r1 r2 ...)``."""

    names = _Paren(_Many(_Name("region name")))

    def parse(self, cur: _Cursor) -> m.Domain:
        tok = cur.peek()
        if tok is not None and tok.text == "all":
            cur.i += 1
            return m.ALL
        if tok is None or tok.text != LPAREN:
            raise cur.error("all or (region names)")
        return m.Domain(self.names.parse(cur))

    def emit(self, value: m.Domain, out: list[str]) -> None:
        if value.regions is None:
            out.append("all")
        else:
            self.names.emit(value.regions, out)


_DOMAIN = _DomainSyntax()


CELL = _Int("cell index ≥ 0", lo=0)


class _BoxesSyntax:
    """``(subdomain <DOMAIN>)`` or ``(cell cell ...)``."""

    cells = _Many(CELL)

    def parse(self, cur: _Cursor) -> m.Boxes:
        cur.expect(LPAREN)
        tok = cur.peek()
        if tok is not None and tok.text == "subdomain":
            cur.i += 1
            value: m.Boxes = _DOMAIN.parse(cur)
        else:
            value = m.Cells(self.cells.parse(cur))
        cur.expect(RPAREN)
        return value

    def emit(self, value: m.Boxes, out: list[str]) -> None:
        out.append(LPAREN)
        if isinstance(value, m.Domain):
            out.append("subdomain")
            _DOMAIN.emit(value, out)
        else:
            self.cells.emit(value.cells, out)
        out.append(RPAREN)


_BOXES = _BoxesSyntax()
INT = _Int()
COUNT = _Int("count ≥ 0", lo=0)
PORT = _Int("server port 1-65535", lo=1, hi=65535)
REAL = _Real()
NAME = _Name()
ACTION_ID = _Int("action id ≥ 1", lo=1)
RESULT = _Token(m.ActionResult)
PNAME = _Paren(_Name("name"))  # <CLASS_NAME>, <VAR_NAME>, ... ::= ([string])

_POINT = _Struct(m.Point, LPAREN, "point", INT, INT, RPAREN)


class _NonNegReal(_Real):
    def parse(self, cur: _Cursor) -> float:
        value = super().parse(cur)
        if value < 0:
            cur.i -= 1
            raise cur.error("nonnegative real")
        return value


_RADIUS = _NonNegReal()

_SIMPLE_REGION = _Choice(
    "point | rect | square | circle | arc",
    {
        "point": _POINT,
        "rect": _Struct(m.Rect, LPAREN, "rect", _POINT, _POINT, RPAREN),
        "square": _Struct(m.Square, LPAREN, "square", _POINT, _POINT, _POINT, _POINT, RPAREN),
        "circle": _Struct(m.Circle, LPAREN, "circle", _POINT, _RADIUS, RPAREN),
        "arc": _Struct(m.Arc, LPAREN, "arc", _POINT, _RADIUS, _RADIUS, REAL, REAL, RPAREN),
    },
    ahead=1,
)

_WATER = _Struct(
    m.Water,
    _Token(m.Tide),
    _Token(m.QualScale),
    LPAREN,
    _Token(m.SedimentType),
    _Token(m.QualScale),
    RPAREN,
)


class _RegionSyntax:
    """Concrete body when the next word is land/subtidal/intertidal, else a name list."""

    area = _Many(_SIMPLE_REGION)
    names = _Many(_Name("region name"))

    def parse(self, cur: _Cursor) -> m.RegionBody:
        tok = cur.peek()
        if tok is not None and tok.text == "land":
            cur.i += 1
            return m.Concrete(m.Land(), self.area.parse(cur))
        if tok is not None and tok.text in ("subtidal", "intertidal"):
            water = _WATER.parse(cur)
            return m.Concrete(water, self.area.parse(cur))
        return m.Composite(self.names.parse(cur))

    def emit(self, value: m.RegionBody, out: list[str]) -> None:
        if isinstance(value, m.Composite):
            self.names.emit(value.names, out)
            return
        if isinstance(value.region_type, m.Land):
            out.append("land")
        else:
            _WATER.emit(value.region_type, out)
        self.area.emit(value.area, out)


class _OptionalRegion(_RegionSyntax):
    def parse(self, cur: _Cursor) -> m.RegionBody | None:
        return None if cur.at_close() else super().parse(cur)

    def emit(self, value: m.RegionBody | None, out: list[str]) -> None:
        if value is not None:
            super().emit(value, out)


_REGION = _RegionSyntax()

_CELL_VALUE = _Struct(m.CellValue, LPAREN, CELL, REAL, RPAREN)
_PARAM_VALUE = _Struct(m.ParamValue, LPAREN, PNAME, REAL, RPAREN)
_AGENT = _Struct(
    m.AgentRecord, LPAREN, NAME, NAME, NAME, PORT, _Token(m.Connected), RPAREN
)
_BIVALVE = _Struct(m.Bivalve, _Token(m.BType), LPAREN, "length", REAL, RPAREN)
_BIVALVE_SEED = _Struct(m.BivalveSeed, _Token(m.BType), LPAREN, REAL, REAL, RPAREN)
_LOGGER_ENTRY = _Struct(
    m.LoggerEntry,
    LPAREN,
    PNAME,
    _Token(m.FuncType),
    PNAME,
    PNAME,
    CELL,
    REAL,
    RPAREN,
)
_TIME = _TimeSyntax()


def _outcome(cls: type) -> _Struct:
    return _Struct(cls, cls.keyword, LPAREN, ACTION_ID, RESULT, RPAREN)


def _answer(cls: type, *body: Any) -> _Struct:
    """``keyword (<ACTION_ID> body...)``."""
    return _Struct(cls, cls.keyword, LPAREN, ACTION_ID, *body, RPAREN)


def _bare(cls: type) -> _Struct:
    return _Struct(cls, cls.keyword)


_TIMES = (INT, INT, INT)

_SPECIAL: list[_Struct] = [
    _Struct(m.Connect, "connect", _Name("host name"), _Name("host address"), PORT),
    _answer(m.KnownAgents, _Many(_AGENT, 0)),
    _Struct(m.Define, "define", LPAREN, NAME, _REGION, RPAREN),
    _Struct(m.Delete, "delete", _Many(NAME)),
    _Struct(m.GetRegion, "get_region", NAME),
    _answer(m.RegionNames, _Many(NAME, 0)),
    _answer(m.RegionResult, NAME, _OptionalRegion()),
    _answer(m.Dimensions, COUNT, COUNT, COUNT, _Token(m.ModType)),
    _answer(m.Morphology, _Many(_CELL_VALUE, 0)),
    _answer(
        m.BenthicSpecies, _Many(_Struct(m.SpeciesBoxes, LPAREN, PNAME, _BOXES, RPAREN), 0)
    ),
    _Struct(m.Seed, "seed", LPAREN, NAME, _TIME, _BIVALVE_SEED, LPAREN, "density", REAL, RPAREN, RPAREN),
    _Struct(m.Inspect, "inspect", LPAREN, NAME, _TIME, RPAREN),
    _Struct(m.Harvest, "harvest", LPAREN, NAME, _TIME, _BIVALVE, RPAREN),
    _Struct(m.OpenModel, "open_model", NAME),
    _Struct(m.Step, "step", _Int("step count ≥ 0", lo=0)),
    _Struct(m.SelectClasses, "select_classes", _Many(PNAME)),
    _Struct(m.GetVariables, "get_variables", PNAME),
    _Struct(m.GetVariableValue, "get_variable_value", PNAME, PNAME, _BOXES),
    _Struct(
        m.SetVariableValue,
        "set_variable_value",
        PNAME,
        _Many(_Struct(m.VarAssignment, LPAREN, PNAME, _BOXES, REAL, RPAREN)),
    ),
    _Struct(m.GetParameters, "get_parameters", PNAME),
    _Struct(m.SetParameters, "set_parameters", PNAME, _Many(_PARAM_VALUE)),
    _Struct(m.SetTimeSpec, "set_time_spec", *_TIMES),
    _Struct(m.Subdomain, "subdomain", _DOMAIN),
    _Struct(m.OutputFile, "output_file", PNAME),
    _Struct(
        m.SelectVariables,
        "select_variables",
        _Token(m.OutputType),
        _Paren(_Many(PNAME)),
        _BOXES,
    ),
    _Struct(m.UnselectVariables, "unselect_variables", _Token(m.OutputType), _Many(PNAME)),
    _Struct(m.Log, "log", _Token(m.LogType), _Paren(_Many(_Int("log step ≥ 0", lo=0)))),
    _Struct(m.SetOutputTime, "set_output_time", *_TIMES),
    _answer(m.InspectResult, _Many(_BIVALVE, 0)),
    _answer(m.HarvestResult, RESULT, REAL),
    _answer(m.ModelName, NAME),
    _answer(m.ClassesAvailable, _Many(PNAME, 0)),
    _answer(m.ClassesSelected, _Many(PNAME, 0)),
    _answer(m.Variables, _Many(PNAME, 0)),
    _answer(m.VariableValue, _Many(_CELL_VALUE, 0)),
    _answer(m.ParametersValues, _Many(_PARAM_VALUE, 0)),
    _answer(m.TimeSpec, *_TIMES),
    _answer(m.VariablesAvailable, _Many(PNAME, 0)),
    _answer(m.OutputTime, *_TIMES),
    _answer(m.TraceResult, _Token(m.TraceStatus)),
    _Struct(m.Register, "register", LPAREN, _Int("register index ≥ 0", lo=0), INT, PNAME, _Many(_CELL_VALUE, 0), RPAREN),
    _Struct(m.Logger, "logger", LPAREN, INT, _Many(_LOGGER_ENTRY, 0), RPAREN),
]


def _build_content_table() -> dict[str, _Struct]:
    table = {s.cls.keyword: s for s in _SPECIAL}
    for cls in m.VARIANTS:
        if cls.keyword in table:
            continue
        if issubclass(cls, m.Outcome):
            table[cls.keyword] = _outcome(cls)
        elif not fields(cls):
            table[cls.keyword] = _bare(cls)
        else:  # pragma: no cover - guards the table against new variants
            raise AssertionError(f"no syntax for {cls.__name__}")
    return table


_CONTENT = _Choice("message keyword", _build_content_table())
_ENVELOPE = _Struct(
    m.Message,
    "message",
    LPAREN,
    _Int("message id ≥ 1", lo=1),
    _Name("sender"),
    _Name("receiver"),
    _CONTENT,
    RPAREN,
)


def _byte_len(text: str | bytes) -> int:
    return len(text) if isinstance(text, (bytes, bytearray)) else len(text.encode("utf-8", "surrogatepass"))


def _parse_whole(syntax: Any, text: str | bytes) -> Any:
    tokens = tokenize(text)
    cur = _Cursor(tokens, _byte_len(text))
    value = syntax.parse(cur)
    if cur.peek() is not None:
        raise cur.error("end of message")
    return value


def parse_message(text: str | bytes) -> m.Message:
    """Parse one message; raises ParseError at the first deviation from the grammar."""
    msg = _parse_whole(_ENVELOPE, text)
    problems = m.validate(msg)
    if problems:  # cross-field rules the grammar walk cannot see
        raise ParseError(0, "valid message", problems[0])
    return msg


def parse_content(text: str | bytes) -> m.Content:
    """Parse a bare content form such as ``model_dimensions`` or ``step 3``."""
    return _parse_whole(_CONTENT, text)


def _join(tokens: list[str]) -> str:
    out: list[str] = []
    prev = None
    for tok in tokens:
        if prev is not None and prev != LPAREN and tok != RPAREN:
            out.append(" ")
        out.append(tok)
        prev = tok
    return "".join(out)


def print_content(content: m.Content) -> str:
    out: list[str] = []
    _CONTENT.emit(content, out)
    return _join(out)


def print_message(msg: m.Message) -> str:
    """Canonical single-line text of a valid message (no trailing newline)."""
    problems = m.validate(msg)
    if problems:
        raise ValueError("invalid message: " + "; ".join(problems))
    out: list[str] = []
    _ENVELOPE.emit(msg, out)
    return _join(out)


def encode_frame(msg: m.Message) -> bytes:
    return (print_message(msg) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# Framing
# --------------------------------------------------------------------------

Decoded = Union[m.Message, ParseError]


def decode_frame(frame: bytes) -> Decoded | None:
    """Parse one line without its newline; None for a blank line."""
    if frame.endswith(b"\r"):
        frame = frame[:-1]
    if not frame.strip(b" \t"):
        return None
    try:
        return parse_message(frame)
    except ParseError as exc:
        return exc


def decode_stream(buffer: bytes | bytearray) -> tuple[list[Decoded], bytes]:
    """Parse every complete line in ``buffer``; return results and the unterminated tail."""
    data = bytes(buffer)
    *frames, tail = data.split(b"\n")
    results = []
    for frame in frames:
        decoded = decode_frame(frame)
        if decoded is not None:
            results.append(decoded)
    return results, tail


class FrameTooLarge(Exception):
    pass


class StreamDecoder:
    """Incremental line decoder for one connection.

    ``feed`` returns ``(line, decoded)`` pairs so callers can log the raw text.
    """

    def __init__(self, max_buffer: int = 1 << 20):
        self.max_buffer = max_buffer
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[tuple[bytes, Decoded]]:
        self._buf += data
        out = []
        if b"\n" in data:
            *frames, tail = bytes(self._buf).split(b"\n")
            self._buf = bytearray(tail)
            for frame in frames:
                decoded = decode_frame(frame)
                if decoded is not None:
                    out.append((frame.rstrip(b"\r"), decoded))
        if len(self._buf) > self.max_buffer:
            raise FrameTooLarge(f"no newline within {self.max_buffer} bytes")
        return out

    @property
    def pending(self) -> bytes:
        return bytes(self._buf)
