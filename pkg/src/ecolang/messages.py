"""Typed model of every ECOLANG message.

A :class:`Message` is an envelope (id, sender, receiver) around exactly one
content variant. Each variant is a frozen dataclass carrying the wire keyword
that introduces it and the reference tag ("1.1" ... "4.27") it is filed under.
Several variants share one tag (``run``/``stop``/... are all "3.8"); the tag is
what the answer table keys on, the class is what application code matches on.

Nothing here knows about the textual encoding; see :mod:`ecolang.codec`.
"""

from __future__ import annotations

import math
import types
import typing
from dataclasses import dataclass, fields, is_dataclass
from enum import Enum
from typing import ClassVar, Union

# --------------------------------------------------------------------------
# Closed token sets
# --------------------------------------------------------------------------


class ActionResult(str, Enum):
    OK = "ok"
    FAILED = "failed"


class Connected(str, Enum):
    CONNECTED = "connected"
    DISCONNECTED = "disconnected"


class Tide(str, Enum):
    SUBTIDAL = "subtidal"
    INTERTIDAL = "intertidal"


class QualScale(str, Enum):
    EXCELLENT = "excellent"
    GOOD = "good"
    POOR = "poor"


class SedimentType(str, Enum):
    SANDY = "sandy"
    SAND_MUDDY = "sand_muddy"
    MUDDY = "muddy"


class BType(str, Enum):
    SCALLOP = "scallop"
    KELP = "kelp"
    OYSTER = "oyster"
    MUSSEL = "mussel"
    CLAM = "clam"


class ModType(str, Enum):
    D0 = "0D"
    D1H = "1DH"
    D1V = "1DV"
    D2H = "2DH"
    D2V = "2DV"
    D3 = "3D"


class OutputType(str, Enum):
    FILE = "file"
    GRAPH = "graph"
    TABLE = "table"
    REMOTE = "remote"


class LogType(str, Enum):
    XML = "xml"
    XLS = "xls"
    TXT = "txt"
    REMOTE = "remote"


class FuncType(str, Enum):
    INQUIRY = "Inquiry"
    UPDATE = "Update"


class TraceStatus(str, Enum):
    ON = "on"
    OFF = "off"


_TAGS = (
    "1.1 1.2 1.3 1.4 1.5 "
    "2.1 2.2 2.3 2.4 2.5 2.6 2.7 2.8 2.9 2.10 2.11 2.12 2.13 2.14 2.15 2.16 "
    + " ".join(f"3.{i}" for i in range(1, 28))
    + " "
    + " ".join(f"4.{i}" for i in range(1, 28))
).split()

#: One member per bracketed reference number, e.g. ``MessageKind("3.8")``.
MessageKind = Enum(  # type: ignore[misc]
    "MessageKind",
    [("K" + tag.replace(".", "_"), tag) for tag in _TAGS],
    type=str,
)
MessageKind.__str__ = lambda self: self.value  # type: ignore[method-assign]

SPONTANEOUS_KINDS = frozenset(MessageKind(t) for t in ("4.25", "4.26", "4.27"))

#: Atoms that start a concrete region body; they cannot name a region inside
#: a composite definition without making the wire text ambiguous.
RESERVED_REGION_WORDS = frozenset({"land", "subtidal", "intertidal"})

# --------------------------------------------------------------------------
# Sub-structures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Point:
    x: int
    y: int


@dataclass(frozen=True)
class Rect:
    p1: Point
    p2: Point


@dataclass(frozen=True)
class Square:
    """Any four vertices; geometric validity is the simulator's business."""

    p1: Point
    p2: Point
    p3: Point
    p4: Point


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float


@dataclass(frozen=True)
class Arc:
    """Annular sector: radius in [r1, r2], angle in [a1, a2] degrees CCW from +x."""

    center: Point
    r1: float
    r2: float
    a1: float
    a2: float


SimpleRegion = Union[Point, Rect, Square, Circle, Arc]


@dataclass(frozen=True)
class Land:
    pass


@dataclass(frozen=True)
class Water:
    tide: Tide
    water_quality: QualScale
    sediment_type: SedimentType
    sediment_quality: QualScale


RegionType = Union[Land, Water]


@dataclass(frozen=True)
class Concrete:
    region_type: RegionType
    area: tuple[SimpleRegion, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("area",)


@dataclass(frozen=True)
class Composite:
    names: tuple[str, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("names",)

    def _check(self) -> list[str]:
        return [f"region name {n!r} is reserved" for n in self.names if n in RESERVED_REGION_WORDS]


RegionBody = Union[Concrete, Composite]


@dataclass(frozen=True)
class Bivalve:
    btype: BType
    length: float


@dataclass(frozen=True)
class BivalveSeed:
    btype: BType
    v1: float
    v2: float


@dataclass(frozen=True)
class Now:
    pass


@dataclass(frozen=True)
class Epoch:
    seconds: int


Time = Union[Now, Epoch]
NOW = Now()


@dataclass(frozen=True)
class Domain:
    """``regions=None`` is the whole model (``all``)."""

    regions: tuple[str, ...] | None = None

    def _check(self) -> list[str]:
        if self.regions is not None and not self.regions:
            return ["regions must not be empty"]
        return []


@dataclass(frozen=True)
class Cells:
    cells: tuple[int, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("cells",)


Boxes = Union[Domain, Cells]
ALL = Domain()


@dataclass(frozen=True)
class AgentRecord:
    agent_name: str
    host_name: str
    host_addr: str
    server_port: int
    connected: Connected


@dataclass(frozen=True)
class LoggerEntry:
    class_name: str
    func_type: FuncType
    data_class: str
    var_name: str
    cell: int
    value: float


@dataclass(frozen=True)
class CellValue:
    cell: int
    value: float


@dataclass(frozen=True)
class ParamValue:
    param_name: str
    value: float


@dataclass(frozen=True)
class VarAssignment:
    var_name: str
    boxes: Boxes
    value: float


@dataclass(frozen=True)
class SpeciesBoxes:
    species_name: str
    boxes: Boxes


# --------------------------------------------------------------------------
# Content variants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Content:
    keyword: ClassVar[str]
    kind: ClassVar[MessageKind]


@dataclass(frozen=True)
class Outcome(Content):
    """Shape shared by every ``keyword (<ACTION_ID> <ACTION_RESULT>)`` answer."""

    action_id: int
    result: ActionResult


def _variant(keyword: str, tag: str):
    def wrap(cls):
        cls.keyword = keyword
        cls.kind = MessageKind(tag)
        return dataclass(frozen=True)(cls)

    return wrap


# connection


@_variant("connect", "1.1")
class Connect(Content):
    host_name: str
    host_addr: str
    server_port: int


@_variant("disconnect", "1.2")
class Disconnect(Content):
    pass


@_variant("accept", "1.3")
class Accept(Outcome):
    pass


@_variant("agents", "1.4")
class AskAgents(Content):
    pass


@_variant("known_agents", "1.5")
class KnownAgents(Content):
    action_id: int
    agents: tuple[AgentRecord, ...]


# definitions


@_variant("define", "2.1")
class Define(Content):
    reg_name: str
    body: RegionBody


@_variant("delete", "2.2")
class Delete(Content):
    names: tuple[str, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("names",)


@_variant("define_result", "2.3")
class DefineResult(Outcome):
    pass


@_variant("delete_result", "2.4")
class DeleteResult(Outcome):
    pass


@_variant("get_region_names", "2.5")
class GetRegionNames(Content):
    pass


@_variant("get_region", "2.6")
class GetRegion(Content):
    reg_name: str


@_variant("region_names", "2.7")
class RegionNames(Content):
    action_id: int
    names: tuple[str, ...]


@_variant("region", "2.8")
class RegionResult(Content):
    """``body=None`` answers a request for a region that does not exist."""

    action_id: int
    reg_name: str
    body: RegionBody | None


@_variant("model_dimensions", "2.9")
class ModelDimensions(Content):
    pass


@_variant("model_morphology", "2.10")
class ModelMorphology(Content):
    pass


@_variant("model_species", "2.11")
class ModelSpecies(Content):
    pass


@_variant("dimensions", "2.12")
class Dimensions(Content):
    action_id: int
    lines: int
    columns: int
    layers: int
    mod_type: ModType


@_variant("morphology", "2.13")
class Morphology(Content):
    action_id: int
    cells: tuple[CellValue, ...]


@_variant("morphology_end", "2.14")
class MorphologyEnd(Content):
    pass


@_variant("benthic_species", "2.15")
class BenthicSpecies(Content):
    action_id: int
    species: tuple[SpeciesBoxes, ...]


@_variant("benthic_species_end", "2.16")
class BenthicSpeciesEnd(Content):
    pass


# actions


@_variant("seed", "3.1")
class Seed(Content):
    reg_name: str
    time: Time
    bivalve: BivalveSeed
    density: float


@_variant("inspect", "3.2")
class Inspect(Content):
    reg_name: str
    time: Time


@_variant("harvest", "3.3")
class Harvest(Content):
    reg_name: str
    time: Time
    bivalve: Bivalve


@_variant("open_model", "3.4")
class OpenModel(Content):
    model_name: str


@_variant("close_model", "3.5")
class CloseModel(Content):
    pass


@_variant("model_name", "3.6")
class GetModelName(Content):
    pass


@_variant("save_configuration", "3.7")
class SaveConfiguration(Content):
    pass


@_variant("initialise", "3.8")
class Initialise(Content):
    pass


@_variant("run", "3.8")
class Run(Content):
    pass


@_variant("stop", "3.8")
class Stop(Content):
    pass


@_variant("pause", "3.8")
class Pause(Content):
    pass


@_variant("step", "3.9")
class Step(Content):
    count: int


@_variant("get_available_classes", "3.10")
class GetAvailableClasses(Content):
    pass


@_variant("get_selected_classes", "3.10")
class GetSelectedClasses(Content):
    pass


@_variant("select_classes", "3.11")
class SelectClasses(Content):
    names: tuple[str, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("names",)


@_variant("get_variables", "3.12")
class GetVariables(Content):
    class_name: str


@_variant("get_variable_value", "3.13")
class GetVariableValue(Content):
    class_name: str
    var_name: str
    boxes: Boxes


@_variant("set_variable_value", "3.14")
class SetVariableValue(Content):
    class_name: str
    assignments: tuple[VarAssignment, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("assignments",)


@_variant("get_parameters", "3.15")
class GetParameters(Content):
    class_name: str


@_variant("set_parameters", "3.16")
class SetParameters(Content):
    class_name: str
    values: tuple[ParamValue, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("values",)


@_variant("get_time_spec", "3.17")
class GetTimeSpec(Content):
    pass


@_variant("set_time_spec", "3.18")
class SetTimeSpec(Content):
    step: int
    start: int
    finish: int


@_variant("subdomain", "3.19")
class Subdomain(Content):
    domain: Domain


@_variant("output_file", "3.20")
class OutputFile(Content):
    file_name: str


@_variant("get_available_variables", "3.21")
class GetAvailableVariables(Content):
    pass


@_variant("select_variables", "3.22")
class SelectVariables(Content):
    output_type: OutputType
    var_names: tuple[str, ...]
    boxes: Boxes

    _nonempty: ClassVar[tuple[str, ...]] = ("var_names",)


@_variant("unselect_variables", "3.23")
class UnselectVariables(Content):
    output_type: OutputType
    var_names: tuple[str, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("var_names",)


@_variant("log", "3.24")
class Log(Content):
    log_type: LogType
    log_steps: tuple[int, ...]

    _nonempty: ClassVar[tuple[str, ...]] = ("log_steps",)


@_variant("get_output_time", "3.25")
class GetOutputTime(Content):
    pass


@_variant("set_output_time", "3.26")
class SetOutputTime(Content):
    step: int
    start: int
    finish: int


@_variant("trace", "3.27")
class Trace(Content):
    pass


# perceptions


@_variant("seed_result", "4.1")
class SeedResult(Outcome):
    pass


@_variant("inspect_result", "4.2")
class InspectResult(Content):
    action_id: int
    bivalves: tuple[Bivalve, ...]


@_variant("harvest_result", "4.3")
class HarvestResult(Content):
    action_id: int
    result: ActionResult
    weight: float

    def _check(self) -> list[str]:
        if self.result is ActionResult.FAILED and self.weight != 0:
            return ["weight must be 0 when result is failed"]
        return []


@_variant("open_result", "4.4")
class OpenResult(Outcome):
    pass


@_variant("close_result", "4.5")
class CloseResult(Outcome):
    pass


@_variant("model", "4.6")
class ModelName(Content):
    action_id: int
    name: str


@_variant("save_result", "4.7")
class SaveResult(Outcome):
    pass


@_variant("exec_result", "4.8")
class ExecResult(Outcome):
    pass


@_variant("classes_available", "4.9")
class ClassesAvailable(Content):
    action_id: int
    names: tuple[str, ...]


@_variant("classes_selected", "4.10")
class ClassesSelected(Content):
    action_id: int
    names: tuple[str, ...]


@_variant("variables", "4.11")
class Variables(Content):
    action_id: int
    names: tuple[str, ...]


@_variant("variable_value", "4.12")
class VariableValue(Content):
    action_id: int
    values: tuple[CellValue, ...]


@_variant("variable_set_result", "4.13")
class VariableSetResult(Outcome):
    pass


@_variant("parameters_values", "4.14")
class ParametersValues(Content):
    action_id: int
    values: tuple[ParamValue, ...]


@_variant("parameters_set_result", "4.15")
class ParametersSetResult(Outcome):
    pass


@_variant("time_spec", "4.16")
class TimeSpec(Content):
    action_id: int
    step: int
    start: int
    finish: int


@_variant("subdomain_result", "4.17")
class SubdomainResult(Outcome):
    pass


@_variant("output_file_result", "4.18")
class OutputFileResult(Outcome):
    pass


@_variant("variables_available", "4.19")
class VariablesAvailable(Content):
    action_id: int
    names: tuple[str, ...]


@_variant("select_variables_result", "4.20")
class SelectVariablesResult(Outcome):
    pass


@_variant("unselect_variables_result", "4.21")
class UnselectVariablesResult(Outcome):
    pass


@_variant("log_result", "4.22")
class LogResult(Outcome):
    pass


@_variant("output_time", "4.23")
class OutputTime(Content):
    action_id: int
    step: int
    start: int
    finish: int


@_variant("trace_result", "4.24")
class TraceResult(Content):
    action_id: int
    status: TraceStatus


@_variant("register", "4.25")
class Register(Content):
    reg_index: int
    reg_time: int
    var_name: str
    values: tuple[CellValue, ...]


@_variant("logger", "4.26")
class Logger(Content):
    step: int
    entries: tuple[LoggerEntry, ...]


@_variant("end_simulation", "4.27")
class EndSimulation(Content):
    pass


@_variant("end_step", "4.27")
class EndStep(Content):
    pass


@_variant("running", "4.27")
class Running(Content):
    pass


@_variant("stopped", "4.27")
class Stopped(Content):
    pass


@_variant("paused", "4.27")
class Paused(Content):
    pass


def _all_variants() -> tuple[type[Content], ...]:
    found = []
    stack = [Content]
    while stack:
        cls = stack.pop()
        for sub in cls.__subclasses__():
            stack.append(sub)
            if "keyword" in sub.__dict__:
                found.append(sub)
    return tuple(sorted(found, key=lambda c: (_TAGS.index(c.kind.value), c.keyword)))


#: Every content variant, in reference-tag order.
VARIANTS: tuple[type[Content], ...] = _all_variants()
BY_KEYWORD: dict[str, type[Content]] = {cls.keyword: cls for cls in VARIANTS}


@dataclass(frozen=True)
class Message:
    id: int
    sender: str
    receiver: str
    content: Content

    @property
    def kind(self) -> MessageKind:
        return self.content.kind

    @property
    def keyword(self) -> str:
        return self.content.keyword


def kind_of(msg: Message | Content) -> MessageKind:
    """Reference tag of a message (or bare content)."""
    content = msg.content if isinstance(msg, Message) else msg
    return content.kind


def is_spontaneous(kind: MessageKind | str) -> bool:
    """True for simulator events that never get an answer (register, logger, end_*)."""
    return MessageKind(kind) in SPONTANEOUS_KINDS


def action_id_of(content: Content) -> int | None:
    return getattr(content, "action_id", None)


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

_FORBIDDEN_ATOM_CHARS = frozenset(" \t\r\n()")

_POSITIVE = frozenset({"id", "action_id"})
_NONNEGATIVE = frozenset(
    {"seconds", "cell", "cells", "reg_index", "lines", "columns", "layers", "count", "log_steps"}
)
_NONNEGATIVE_REAL = frozenset({"radius", "r1", "r2"})


def is_atom(text: object) -> bool:
    """Whether a string can travel as a single bare token."""
    return (
        isinstance(text, str)
        and bool(text)
        and not any(ch in _FORBIDDEN_ATOM_CHARS or ord(ch) < 0x20 for ch in text)
    )


_hints_cache: dict[type, dict[str, object]] = {}


def _hints(cls: type) -> dict[str, object]:
    if cls not in _hints_cache:
        _hints_cache[cls] = typing.get_type_hints(cls)
    return _hints_cache[cls]


def _type_ok(value: object, tp: object) -> bool:
    origin = typing.get_origin(tp)
    if origin in (Union, types.UnionType):
        return any(_type_ok(value, arg) for arg in typing.get_args(tp))
    if origin is tuple:
        (item_tp, _ellipsis) = typing.get_args(tp)
        return isinstance(value, tuple) and all(_type_ok(v, item_tp) for v in value)
    if tp is type(None):
        return value is None
    if tp is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if tp is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(tp, type):
        return isinstance(value, tp)
    return True


def _walk(obj: object, out: list[str]) -> None:
    hints = _hints(type(obj))
    nonempty = getattr(obj, "_nonempty", ())
    for f in fields(obj):  # type: ignore[arg-type]
        name = f.name
        value = getattr(obj, name)
        tp = hints[name]
        if not _type_ok(value, tp):
            out.append(f"{name} has wrong type {type(value).__name__}")
            continue
        items = value if isinstance(value, tuple) else (value,)
        if name in nonempty and not value:
            out.append(f"{name} must not be empty")
        if name == "server_port" and not 1 <= value <= 65535:
            out.append("server_port out of range")
        for item in items:
            if isinstance(item, float) and not math.isfinite(item):
                out.append(f"{name} must be finite")
            elif isinstance(item, str) and not is_atom(item):
                out.append(f"{name} {item!r} is not a valid token")
            elif isinstance(item, int) and not isinstance(item, bool):
                if name in _POSITIVE and item < 1:
                    out.append(f"{name} must be ≥ 1")
                elif name in _NONNEGATIVE and item < 0:
                    out.append(f"{name} must be ≥ 0")
            if name in _NONNEGATIVE_REAL and isinstance(item, (int, float)) and item < 0:
                out.append(f"{name} must be ≥ 0")
            if is_dataclass(item):
                _walk(item, out)
    check = getattr(obj, "_check", None)
    if check is not None:
        out.extend(check())


def validate(msg: Message) -> list[str]:
    """Every invariant violation in ``msg``, in field order; empty means valid."""
    out: list[str] = []
    if not isinstance(msg.content, Content) or "keyword" not in type(msg.content).__dict__:
        out.append("content is not a message variant")
        return out
    _walk(msg, out)
    return out
