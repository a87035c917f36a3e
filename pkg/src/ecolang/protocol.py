"""Session layer: id sequencing, answer correlation, chunking and the connection FSM."""

from __future__ import annotations

import enum
import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from . import messages as m
from .messages import Content, Message, MessageKind

log = logging.getLogger(__name__)

MORPHOLOGY_CHUNK = 750
SPECIES_CHUNK = 150
DEFAULT_ANSWER_TIMEOUT = 10.0


class ProtocolError(Exception):
    """A local send that the session state does not allow."""


class UnknownKind(KeyError):
    pass


# --------------------------------------------------------------------------
# Answer table
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    request: type[Content]
    answer: type[Content] | None  # None: the message is never answered

    @property
    def row_id(self) -> str:
        answer = self.answer.keyword if self.answer else "--"
        return f"[{self.request.kind.value}] {self.request.keyword} -> {answer}"


def _rows() -> tuple[TableRow, ...]:
    pairs: list[tuple[type[Content], type[Content] | None]] = [
        (m.Connect, m.Accept),
        (m.Disconnect, m.Accept),
        (m.AskAgents, m.KnownAgents),
        (m.Define, m.DefineResult),
        (m.Delete, m.DeleteResult),
        (m.GetRegionNames, m.RegionNames),
        (m.GetRegion, m.RegionResult),
        (m.ModelDimensions, m.Dimensions),
        (m.ModelMorphology, m.Morphology),
        (m.ModelMorphology, m.MorphologyEnd),
        (m.ModelSpecies, m.BenthicSpecies),
        (m.ModelSpecies, m.BenthicSpeciesEnd),
        (m.Seed, m.SeedResult),
        (m.Inspect, m.InspectResult),
        (m.Harvest, m.HarvestResult),
        (m.OpenModel, m.OpenResult),
        (m.CloseModel, m.CloseResult),
        (m.GetModelName, m.ModelName),
        (m.SaveConfiguration, m.SaveResult),
        (m.Initialise, m.ExecResult),
        (m.Run, m.ExecResult),
        (m.Stop, m.ExecResult),
        (m.Pause, m.ExecResult),
        (m.Step, m.ExecResult),
        (m.GetAvailableClasses, m.ClassesAvailable),
        (m.GetSelectedClasses, m.ClassesSelected),
        (m.SelectClasses, m.ClassesSelected),
        (m.GetVariables, m.Variables),
        (m.GetVariableValue, m.VariableValue),
        (m.SetVariableValue, m.VariableSetResult),
        (m.GetParameters, m.ParametersValues),
        (m.SetParameters, m.ParametersSetResult),
        (m.GetTimeSpec, m.TimeSpec),
        (m.SetTimeSpec, m.TimeSpec),
        (m.Subdomain, m.SubdomainResult),
        (m.OutputFile, m.OutputFileResult),
        (m.GetAvailableVariables, m.VariablesAvailable),
        (m.SelectVariables, m.SelectVariablesResult),
        (m.UnselectVariables, m.UnselectVariablesResult),
        (m.Log, m.LogResult),
        (m.GetOutputTime, m.OutputTime),
        (m.SetOutputTime, m.OutputTime),
        (m.Trace, m.TraceResult),
        (m.Register, None),
        (m.Logger, None),
        (m.EndSimulation, None),
        (m.EndStep, None),
        (m.Running, None),
        (m.Stopped, None),
        (m.Paused, None),
    ]
    return tuple(TableRow(req, ans) for req, ans in pairs)


#: The communications-protocol table, row for row.
ANSWER_TABLE: tuple[TableRow, ...] = _rows()

_ANSWERS_BY_CLASS: dict[type[Content], frozenset[type[Content]]] = {}
for _row in ANSWER_TABLE:
    _ANSWERS_BY_CLASS[_row.request] = _ANSWERS_BY_CLASS.get(_row.request, frozenset()) | (
        frozenset({_row.answer}) if _row.answer else frozenset()
    )

REQUEST_CLASSES = frozenset(c for c, answers in _ANSWERS_BY_CLASS.items() if answers)
ANSWER_CLASSES = frozenset(r.answer for r in ANSWER_TABLE if r.answer is not None)

#: Chunk answer -> terminating answer.
MULTIPART = {m.Morphology: m.MorphologyEnd, m.BenthicSpecies: m.BenthicSpeciesEnd}
_END_MARKERS = {m.MorphologyEnd: m.ModelMorphology, m.BenthicSpeciesEnd: m.ModelSpecies}


def expected_answers(kind: MessageKind | str) -> frozenset[MessageKind]:
    """Answer tags the table allows for a request tag (empty for spontaneous rows)."""
    kind = MessageKind(kind)
    rows = [r for r in ANSWER_TABLE if r.request.kind == kind]
    if not rows:
        raise UnknownKind(kind.value)
    return frozenset(r.answer.kind for r in rows if r.answer is not None)


def answer_classes(request: type[Content] | Content) -> frozenset[type[Content]]:
    """Exact answer variants for one request variant."""
    cls = request if isinstance(request, type) else type(request)
    try:
        return _ANSWERS_BY_CLASS[cls]
    except KeyError:
        raise UnknownKind(cls.keyword) from None


def expects_answer(content: Content | type[Content]) -> bool:
    cls = content if isinstance(content, type) else type(content)
    return cls in REQUEST_CLASSES


# --------------------------------------------------------------------------
# Chunking
# --------------------------------------------------------------------------


def _chunks(items: Sequence, size: int) -> list[tuple]:
    return [tuple(items[i : i + size]) for i in range(0, len(items), size)]


def chunk_morphology(
    action_id: int,
    cells: Iterable[m.CellValue | tuple[int, float]],
    limit: int = MORPHOLOGY_CHUNK,
) -> list[Content]:
    pairs = [c if isinstance(c, m.CellValue) else m.CellValue(int(c[0]), float(c[1])) for c in cells]
    out: list[Content] = [m.Morphology(action_id, chunk) for chunk in _chunks(pairs, limit)]
    out.append(m.MorphologyEnd())
    return out


def chunk_species(
    action_id: int,
    entries: Iterable[m.SpeciesBoxes | tuple[str, m.Boxes]],
    limit: int = SPECIES_CHUNK,
) -> list[Content]:
    items = [e if isinstance(e, m.SpeciesBoxes) else m.SpeciesBoxes(*e) for e in entries]
    out: list[Content] = [m.BenthicSpecies(action_id, chunk) for chunk in _chunks(items, limit)]
    out.append(m.BenthicSpeciesEnd())
    return out


# --------------------------------------------------------------------------
# Agents table
# --------------------------------------------------------------------------


class AgentsTable:
    """Known agents by name; safe to share between connection handlers."""

    def __init__(self) -> None:
        self._records: dict[str, m.AgentRecord] = {}
        self._lock = threading.Lock()

    def upsert(self, record: m.AgentRecord) -> None:
        with self._lock:
            self._records[record.agent_name] = record

    def set_connected(self, name: str, connected: bool) -> None:
        flag = m.Connected.CONNECTED if connected else m.Connected.DISCONNECTED
        with self._lock:
            rec = self._records.get(name)
            if rec is not None:
                self._records[name] = m.AgentRecord(
                    rec.agent_name, rec.host_name, rec.host_addr, rec.server_port, flag
                )

    def get(self, name: str) -> m.AgentRecord | None:
        with self._lock:
            return self._records.get(name)

    def records(self) -> list[m.AgentRecord]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: r.agent_name)

    def __len__(self) -> int:
        return len(self._records)


def agents_snapshot(table: AgentsTable, action_id: int) -> m.KnownAgents:
    return m.KnownAgents(action_id, tuple(table.records()))


# --------------------------------------------------------------------------
# Sessions
# --------------------------------------------------------------------------


class Role(enum.Enum):
    AGENT = "agent"
    SIMULATOR = "simulator"


class Phase(enum.Enum):
    IDLE = "idle"
    CONNECT_PENDING = "connect_pending"
    REGISTERED = "registered"
    DISCONNECT_PENDING = "disconnect_pending"
    CLOSING = "closing"  # disconnect received, accept not yet sent
    CLOSED = "closed"


@dataclass(frozen=True)
class Matched:
    request_id: int
    request: type[Content]
    final: bool = True


@dataclass(frozen=True)
class Spontaneous:
    pass


@dataclass(frozen=True)
class ProtocolViolation:
    reason: str


@dataclass(frozen=True)
class Incoming:
    """A request from the peer that this side must answer."""

    message: Message


Correlation = Union[Matched, Spontaneous, ProtocolViolation]
Event = Union[Matched, Spontaneous, ProtocolViolation, Incoming]


@dataclass
class Pending:
    request_id: int
    request: type[Content]
    deadline: float

    @property
    def kind(self) -> MessageKind:
        return self.request.kind


class Session:
    """Protocol state for one connection, seen from one side.

    The agent side dials and opens with ``connect``; the simulator side waits
    for it. Not thread-safe on its own: the owning connection serialises use.
    """

    def __init__(
        self,
        role: Role,
        name: str,
        peer_name: str | None = None,
        answer_timeout: float = DEFAULT_ANSWER_TIMEOUT,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.role = role
        self.name = name
        self.peer_name = peer_name
        self.answer_timeout = answer_timeout
        self.clock = clock
        self.phase = Phase.IDLE
        self.phase_request_id: int | None = None
        self.next_send_id = 1
        self.last_sent_id = 0
        self.pending: dict[int, Pending] = {}
        self.resolved: set[int] = set()
        self.peer: m.AgentRecord | None = None

    def __repr__(self) -> str:
        return f"<Session {self.role.value} {self.name}->{self.peer_name} {self.phase.value}>"

    @property
    def registered(self) -> bool:
        return self.phase is Phase.REGISTERED

    def next_id(self) -> int:
        if self.phase is Phase.CLOSED:
            raise ProtocolError("session closed")
        value = self.next_send_id
        self.next_send_id += 1
        return value

    def build(self, content: Content, receiver: str | None = None) -> Message:
        receiver = receiver or self.peer_name
        if receiver is None:
            raise ProtocolError("receiver unknown")
        return Message(self.next_id(), self.name, receiver, content)

    # -- sending ----------------------------------------------------------

    def on_send(self, msg: Message) -> None:
        """Check ``msg`` against the session state and record its effects.

        Raises ProtocolError (and changes nothing) when the send is not allowed.
        """
        content = msg.content
        phase = self.phase
        if phase is Phase.CLOSED:
            raise ProtocolError("session closed")
        if msg.id != self.last_sent_id + 1:
            raise ProtocolError(f"id {msg.id} breaks sequence after {self.last_sent_id}")
        if self.role is Role.AGENT:
            if phase is Phase.IDLE and not isinstance(content, m.Connect):
                raise ProtocolError("first message must be connect")
            if phase is Phase.CONNECT_PENDING:
                raise ProtocolError("waiting for accept")
        elif phase in (Phase.IDLE, Phase.CONNECT_PENDING):
            if not (phase is Phase.CONNECT_PENDING and self._answers_phase_request(content)):
                raise ProtocolError("peer not registered")
        if phase is Phase.CLOSING and not self._answers_phase_request(content):
            raise ProtocolError("only the accept for disconnect may be sent")
        if phase is Phase.DISCONNECT_PENDING and expects_answer(content):
            raise ProtocolError("disconnecting")
        if isinstance(content, (m.ModelMorphology, m.ModelSpecies)) and any(
            p.request is type(content) for p in self.pending.values()
        ):
            raise ProtocolError(f"{content.keyword} already outstanding")

        self.last_sent_id = msg.id
        self.next_send_id = max(self.next_send_id, msg.id + 1)
        if expects_answer(content):
            self.pending[msg.id] = Pending(msg.id, type(content), self.clock() + self.answer_timeout)
        if isinstance(content, m.Connect):
            self._enter(Phase.CONNECT_PENDING, msg.id)
        elif isinstance(content, m.Disconnect):
            self._enter(Phase.DISCONNECT_PENDING, msg.id)
        elif self._answers_phase_request(content):
            if phase is Phase.CLOSING:
                self._enter(Phase.CLOSED)
            elif content.result is m.ActionResult.OK:
                self._enter(Phase.REGISTERED)
            else:
                self._enter(Phase.IDLE)

    def _answers_phase_request(self, content: Content) -> bool:
        return isinstance(content, m.Accept) and content.action_id == self.phase_request_id

    def _enter(self, phase: Phase, request_id: int | None = None) -> None:
        log.debug("%s: %s -> %s", self.name, self.phase.value, phase.value)
        self.phase = phase
        self.phase_request_id = request_id

    # -- receiving --------------------------------------------------------

    def on_receive(self, msg: Message) -> Event:
        content = msg.content
        if self.peer_name is None:
            self.peer_name = msg.sender
        if self.phase is Phase.CLOSED:
            return ProtocolViolation("session closed")
        if type(content) in ANSWER_CLASSES or m.is_spontaneous(content.kind):
            event = self.correlate(msg)
            if isinstance(event, Matched) and event.final and self.role is Role.AGENT:
                if event.request is m.Connect and self.phase is Phase.CONNECT_PENDING:
                    ok = content.result is m.ActionResult.OK
                    self._enter(Phase.REGISTERED if ok else Phase.IDLE)
            if isinstance(event, Matched) and event.request is m.Disconnect:
                self._enter(Phase.CLOSED)
            return event
        if isinstance(content, m.Disconnect) and self.phase in (
            Phase.REGISTERED,
            Phase.DISCONNECT_PENDING,
        ):
            self.pending.clear()
            self._enter(Phase.CLOSING, msg.id)
            return Incoming(msg)
        if self.role is Role.SIMULATOR and self.phase is Phase.IDLE:
            if isinstance(content, m.Connect):
                self._enter(Phase.CONNECT_PENDING, msg.id)
                return Incoming(msg)
            return ProtocolViolation(f"{content.keyword} before connect")
        if self.phase is not Phase.REGISTERED:
            return ProtocolViolation(f"{content.keyword} while {self.phase.value}")
        return Incoming(msg)

    def correlate(self, msg: Message) -> Correlation:
        """Match an incoming answer to the request it answers."""
        content = msg.content
        cls = type(content)
        if m.is_spontaneous(content.kind):
            return Spontaneous()
        if cls in _END_MARKERS:
            request_cls = _END_MARKERS[cls]
            ids = [i for i, p in self.pending.items() if p.request is request_cls]
            if not ids:
                return ProtocolViolation(f"{content.keyword} without pending {request_cls.keyword}")
            return self._resolve(ids[0], final=True)
        action_id = m.action_id_of(content)
        if cls not in ANSWER_CLASSES or action_id is None:
            return ProtocolViolation(f"{content.keyword} is not an answer")
        pending = self.pending.get(action_id)
        if pending is None:
            if action_id in self.resolved:
                return ProtocolViolation(f"duplicate answer to {action_id}")
            return ProtocolViolation(f"no pending request {action_id}")
        if pending.deadline < self.clock():
            del self.pending[action_id]
            self.resolved.add(action_id)
            return ProtocolViolation("timeout")
        if cls not in answer_classes(pending.request):
            return ProtocolViolation(
                f"{content.keyword} does not answer {pending.request.keyword} {action_id}"
            )
        if cls in MULTIPART:
            pending.deadline = self.clock() + self.answer_timeout
            return Matched(action_id, pending.request, final=False)
        return self._resolve(action_id, final=True)

    def _resolve(self, request_id: int, final: bool) -> Matched:
        pending = self.pending.pop(request_id)
        self.resolved.add(request_id)
        return Matched(request_id, pending.request, final)

    def expire(self, now: float | None = None) -> list[ProtocolViolation]:
        """Drop requests whose answer is overdue."""
        now = self.clock() if now is None else now
        late = [i for i, p in self.pending.items() if p.deadline < now]
        for i in late:
            del self.pending[i]
            self.resolved.add(i)
        return [ProtocolViolation("timeout") for _ in late]

    def abort(self) -> None:
        """Socket lost: no further exchange is possible."""
        self.pending.clear()
        self._enter(Phase.CLOSED)
