"""Mock EcoDynamo: answers every request of the protocol table against a toy model.

The :class:`Simulator` is transport-agnostic. Each connected participant is a
:class:`Peer` (a protocol session plus a send callable). All state changes go
through :meth:`Simulator.dispatch` and :meth:`Simulator.tick`, serialised by
one lock; spontaneous events are queued and fanned out to every registered
peer by :meth:`Simulator.flush`.

The dynamics are deliberately trivial: stock grows linearly in length and
model variables never change on their own.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .. import messages as m
from ..messages import ActionResult, Content, Message
from ..protocol import (
    MORPHOLOGY_CHUNK,
    SPECIES_CHUNK,
    AgentsTable,
    Incoming,
    Phase,
    ProtocolError,
    ProtocolViolation,
    Role,
    Session,
    agents_snapshot,
    chunk_morphology,
    chunk_species,
)
from .model import ModelFormatError, ToyModel, bundled_models_dir, dump_model, load_model, model_path
from .regions import RegionError, RegionStore

log = logging.getLogger(__name__)

OK = ActionResult.OK
FAILED = ActionResult.FAILED


def _result(ok: bool) -> ActionResult:
    return OK if ok else FAILED


@dataclass
class StubConfig:
    models_dir: Path = field(default_factory=bundled_models_dir)
    output_dir: Path = field(default_factory=Path.cwd)
    name: str = "EcoDynamo"
    growth: float = 1e-6  # shell length gained per simulated second
    seed_length_factor: float = 10.0  # initial length = factor * (v1 + v2)
    morphology_chunk: int = MORPHOLOGY_CHUNK
    species_chunk: int = SPECIES_CHUNK
    tick_interval: float = 0.02  # wall seconds per step while running
    answer_timeout: float = 10.0


@dataclass
class StockEntry:
    region: str
    btype: m.BType
    v1: float
    v2: float
    density: float
    length: float
    seeded_at: m.Time

    @property
    def unit_weight(self) -> float:
        return self.v1 + self.v2


class Peer:
    """A participant connected to the simulator."""

    def __init__(self, session: Session, send: Callable[[Message], None]):
        self.session = session
        self.send = send

    def __repr__(self) -> str:
        return f"<Peer {self.session.peer_name} {self.session.phase.value}>"


class Simulator:
    def __init__(self, config: StubConfig | None = None):
        self.config = config or StubConfig()
        self.lock = threading.RLock()
        self.agents = AgentsTable()
        self.peers: list[Peer] = []  # registered, in registration order
        self.regions = RegionStore()
        self.model: ToyModel | None = None
        self._events: list[Content] = []
        self._reset_model_state()
        self._handlers: dict[type, Callable[[Peer, Message], list[Content]]] = {
            m.Connect: self._connect,
            m.Disconnect: self._disconnect,
            m.AskAgents: lambda p, r: [agents_snapshot(self.agents, r.id)],
            m.Define: self._define,
            m.Delete: self._delete,
            m.GetRegionNames: lambda p, r: [m.RegionNames(r.id, tuple(self.regions.names()))],
            m.GetRegion: self._get_region,
            m.ModelDimensions: self._dimensions,
            m.ModelMorphology: self._morphology,
            m.ModelSpecies: self._species,
            m.Seed: self._seed,
            m.Inspect: self._inspect,
            m.Harvest: self._harvest,
            m.OpenModel: self._open_model,
            m.CloseModel: self._close_model,
            m.GetModelName: self._model_name,
            m.SaveConfiguration: self._save_configuration,
            m.Initialise: self._initialise,
            m.Run: self._run,
            m.Stop: self._stop,
            m.Pause: self._pause,
            m.Step: self._step,
            m.GetAvailableClasses: self._available_classes,
            m.GetSelectedClasses: lambda p, r: [m.ClassesSelected(r.id, tuple(self.selected_classes))],
            m.SelectClasses: self._select_classes,
            m.GetVariables: self._get_variables,
            m.GetVariableValue: self._get_variable_value,
            m.SetVariableValue: self._set_variable_value,
            m.GetParameters: self._get_parameters,
            m.SetParameters: self._set_parameters,
            m.GetTimeSpec: lambda p, r: [m.TimeSpec(r.id, *self._time_spec())],
            m.SetTimeSpec: self._set_time_spec,
            m.Subdomain: self._subdomain,
            m.OutputFile: self._output_file,
            m.GetAvailableVariables: self._available_variables,
            m.SelectVariables: self._select_variables,
            m.UnselectVariables: self._unselect_variables,
            m.Log: self._log,
            m.GetOutputTime: lambda p, r: [m.OutputTime(r.id, *self._output_time())],
            m.SetOutputTime: self._set_output_time,
            m.Trace: self._trace,
        }

    def _reset_model_state(self) -> None:
        self.stock: list[StockEntry] = []
        self.run_state = "stopped"
        self.current_time = self.model.time_spec[1] if self.model else 0
        self.step_number = 0
        self.reg_index = 0
        self.ended = False
        self.selected_classes: list[str] = []
        self.selected_vars: dict[tuple[m.OutputType, str], m.Boxes] = {}
        self.subdomain: m.Domain = m.ALL
        self.output_file: str | None = None
        self.log_config: tuple[m.LogType, tuple[int, ...]] | None = None
        self.output_time_spec: tuple[int, int, int] | None = None
        self.trace = False

    # -- peers --------------------------------------------------------------

    def new_peer(self, send: Callable[[Message], None]) -> Peer:
        session = Session(Role.SIMULATOR, self.config.name, answer_timeout=self.config.answer_timeout)
        return Peer(session, send)

    def detach(self, peer: Peer) -> None:
        """The peer's connection is gone (orderly or not)."""
        with self.lock:
            if peer in self.peers:
                self.peers.remove(peer)
            self._mark_disconnected(peer)
            peer.session.abort()

    def _mark_disconnected(self, peer: Peer) -> None:
        # only a peer whose connect was accepted owns its table row
        if peer.session.peer is not None:
            self.agents.set_connected(peer.session.peer.agent_name, False)

    # -- entry points -----------------------------------------------------

    def dispatch(self, peer: Peer, request: Message) -> list[Message]:
        """Reply messages for one incoming message (possibly none).

        The caller sends the replies in order, then calls :meth:`flush`.
        """
        with self.lock:
            event = peer.session.on_receive(request)
            if isinstance(event, ProtocolViolation):
                log.warning("%s: dropped %s from %s: %s", self.config.name, request.keyword, request.sender, event.reason)
                return []
            if not isinstance(event, Incoming):
                if peer.session.phase is Phase.CLOSED:
                    self._retire(peer)
                return []
            handler = self._handlers.get(type(request.content))
            if handler is None:
                log.warning("no handler for %s; ignored", request.keyword)
                return []
            replies = []
            for content in handler(peer, request):
                msg = peer.session.build(content, request.sender)
                peer.session.on_send(msg)
                replies.append(msg)
            if peer.session.registered and peer not in self.peers:
                self._register(peer)
            elif peer.session.phase is Phase.CLOSED:
                self._retire(peer)
            return replies

    def handle(self, peer: Peer, request: Message) -> None:
        """dispatch + send + flush, for transports that deliver one message at a time."""
        with self.lock:
            for reply in self.dispatch(peer, request):
                peer.send(reply)
            self.flush()

    def flush(self) -> None:
        """Send queued spontaneous events to every registered peer."""
        with self.lock:
            events, self._events = self._events, []
            for content in events:
                for peer in list(self.peers):
                    if not peer.session.registered:
                        continue
                    msg = peer.session.build(content)
                    peer.session.on_send(msg)
                    try:
                        peer.send(msg)
                    except Exception as exc:  # a dead socket must not stall the others
                        log.info("event to %s failed: %s", peer, exc)
                        self.detach(peer)

    def _register(self, peer: Peer) -> None:
        self.peers.append(peer)
        self.agents.upsert(peer.session.peer)

    def _retire(self, peer: Peer) -> None:
        if peer in self.peers:
            self.peers.remove(peer)
        self._mark_disconnected(peer)

    def begin_shutdown(self) -> list[Peer]:
        """Send disconnect to every registered peer; returns the peers to wait for."""
        with self.lock:
            targets = [p for p in self.peers if p.session.registered]
            for peer in targets:
                msg = peer.session.build(m.Disconnect())
                peer.session.on_send(msg)
                try:
                    peer.send(msg)
                except Exception as exc:
                    log.info("disconnect to %s failed: %s", peer, exc)
            return targets

    # -- connection ---------------------------------------------------------

    def _connect(self, peer: Peer, req: Message) -> list[Content]:
        c: m.Connect = req.content
        if peer.session.phase is not Phase.CONNECT_PENDING:
            return [m.Accept(req.id, FAILED)]
        clash = any(p.session.peer_name == req.sender for p in self.peers if p is not peer)
        if clash:
            log.warning("agent name %s already registered", req.sender)
            return [m.Accept(req.id, FAILED)]
        peer.session.peer = m.AgentRecord(req.sender, c.host_name, c.host_addr, c.server_port, m.Connected.CONNECTED)
        return [m.Accept(req.id, OK)]

    def _disconnect(self, peer: Peer, req: Message) -> list[Content]:
        return [m.Accept(req.id, OK)]

    # -- regions ------------------------------------------------------------

    def _define(self, peer: Peer, req: Message) -> list[Content]:
        c: m.Define = req.content
        try:
            self.regions.define(c.reg_name, c.body)
            ok = True
        except RegionError as exc:
            log.info("define %s failed: %s", c.reg_name, exc)
            ok = False
        return [m.DefineResult(req.id, _result(ok))]

    def _delete(self, peer: Peer, req: Message) -> list[Content]:
        try:
            self.regions.delete(req.content.names)
            ok = True
        except RegionError as exc:
            log.info("delete failed: %s", exc)
            ok = False
        return [m.DeleteResult(req.id, _result(ok))]

    def _get_region(self, peer: Peer, req: Message) -> list[Content]:
        name = req.content.reg_name
        return [m.RegionResult(req.id, name, self.regions.get(name))]

    def region_cells(self, name: str) -> set[int]:
        """Cells of a named region on the open model's grid; RegionError if unresolvable."""
        if self.model is None:
            raise RegionError("no model open")
        return self.regions.cells(name, self.model.lines, self.model.columns)

    def resolve_boxes(self, boxes: m.Boxes) -> list[int]:
        """Sorted cell indices for ``boxes``; RegionError if any part is unknown."""
        mdl = self.model
        if mdl is None:
            raise RegionError("no model open")
        if isinstance(boxes, m.Cells):
            bad = [c for c in boxes.cells if c >= mdl.n_cells]
            if bad:
                raise RegionError(f"cell {bad[0]} out of range")
            return sorted(set(boxes.cells))
        domain = boxes if boxes.regions is not None else self.subdomain
        if domain.regions is None:
            return list(range(mdl.n_cells))
        cells: set[int] = set()
        for name in domain.regions:
            cells |= self.region_cells(name)
        return sorted(cells)

    # -- model description --------------------------------------------------

    def _dimensions(self, peer: Peer, req: Message) -> list[Content]:
        mdl = self.model
        if mdl is None:
            log.warning("model_dimensions with no model open: answering zeros")
            return [m.Dimensions(req.id, 0, 0, 0, m.ModType.D0)]
        return [m.Dimensions(req.id, mdl.lines, mdl.columns, mdl.layers, mdl.mod_type)]

    def _morphology(self, peer: Peer, req: Message) -> list[Content]:
        cells = self.model.morphology() if self.model else []
        return chunk_morphology(req.id, cells, self.config.morphology_chunk)

    def _species(self, peer: Peer, req: Message) -> list[Content]:
        entries = list(self.model.species.items()) if self.model else []
        return chunk_species(req.id, entries, self.config.species_chunk)

    # -- stock ----------------------------------------------------------------

    def _seed(self, peer: Peer, req: Message) -> list[Content]:
        c: m.Seed = req.content
        s = c.bivalve
        ok = (
            self.model is not None
            and c.reg_name in self.regions
            and c.density >= 0
            and s.v1 >= 0
            and s.v2 >= 0
            and s.v1 + s.v2 > 0
        )
        if ok:
            length = self.config.seed_length_factor * (s.v1 + s.v2)
            self.stock.append(StockEntry(c.reg_name, s.btype, s.v1, s.v2, c.density, length, c.time))
        return [m.SeedResult(req.id, _result(ok))]

    def _inspect(self, peer: Peer, req: Message) -> list[Content]:
        name = req.content.reg_name
        found = tuple(m.Bivalve(e.btype, e.length) for e in self.stock if e.region == name)
        return [m.InspectResult(req.id, found)]

    def harvest_weight(self, entries: list[StockEntry], area: int) -> float:
        return sum(e.density * area * e.unit_weight for e in entries)

    def _harvest(self, peer: Peer, req: Message) -> list[Content]:
        c: m.Harvest = req.content
        if self.model is None or c.reg_name not in self.regions or c.bivalve.length < 0:
            return [m.HarvestResult(req.id, FAILED, 0.0)]
        try:
            area = len(self.region_cells(c.reg_name))
        except RegionError:
            return [m.HarvestResult(req.id, FAILED, 0.0)]
        taken = [
            e
            for e in self.stock
            if e.region == c.reg_name and e.btype is c.bivalve.btype and e.length >= c.bivalve.length
        ]
        self.stock = [e for e in self.stock if not any(e is t for t in taken)]
        return [m.HarvestResult(req.id, OK, float(self.harvest_weight(taken, area)))]

    # -- model selection --------------------------------------------------------

    def open_model(self, name: str) -> bool:
        path = model_path(self.config.models_dir, name)
        if path is None:
            log.info("no model named %s in %s", name, self.config.models_dir)
            return False
        try:
            mdl = load_model(path)
        except (OSError, ModelFormatError) as exc:
            log.warning("cannot load %s: %s", path, exc)
            return False
        self.model = mdl
        self._reset_model_state()
        return True

    def _open_model(self, peer: Peer, req: Message) -> list[Content]:
        return [m.OpenResult(req.id, _result(self.open_model(req.content.model_name)))]

    def _close_model(self, peer: Peer, req: Message) -> list[Content]:
        ok = self.model is not None
        self.model = None
        self._reset_model_state()
        return [m.CloseResult(req.id, _result(ok))]

    def _model_name(self, peer: Peer, req: Message) -> list[Content]:
        return [m.ModelName(req.id, self.model.name if self.model else "none")]

    def _save_configuration(self, peer: Peer, req: Message) -> list[Content]:
        if self.model is None:
            return [m.SaveResult(req.id, FAILED)]
        target = Path(self.config.output_dir) / f"{self.model.name}.saved.model"
        try:
            target.write_text(dump_model(self.model), encoding="utf-8")
        except OSError as exc:
            log.warning("save_configuration: %s", exc)
            return [m.SaveResult(req.id, FAILED)]
        return [m.SaveResult(req.id, OK)]

    # -- execution ------------------------------------------------------------

    def _time_spec(self) -> tuple[int, int, int]:
        return self.model.time_spec if self.model else (0, 0, 0)

    def _output_time(self) -> tuple[int, int, int]:
        if self.output_time_spec is not None:
            return self.output_time_spec
        return self._time_spec()

    def _initialise(self, peer: Peer, req: Message) -> list[Content]:
        if self.model is None or self.run_state == "running":
            return [m.ExecResult(req.id, FAILED)]
        self.run_state = "stopped"
        self.current_time = self.model.time_spec[1]
        self.step_number = 0
        self.reg_index = 0
        self.ended = False
        return [m.ExecResult(req.id, OK)]

    def _finished(self) -> bool:
        return self.model is not None and self.current_time >= self.model.time_spec[2]

    def _run(self, peer: Peer, req: Message) -> list[Content]:
        if self.model is None or self.run_state == "running" or self._finished():
            return [m.ExecResult(req.id, FAILED)]
        self.run_state = "running"
        self._events.append(m.Running())
        return [m.ExecResult(req.id, OK)]

    def _stop(self, peer: Peer, req: Message) -> list[Content]:
        if self.run_state == "stopped":
            return [m.ExecResult(req.id, FAILED)]
        self.run_state = "stopped"
        self._events.append(m.Stopped())
        return [m.ExecResult(req.id, OK)]

    def _pause(self, peer: Peer, req: Message) -> list[Content]:
        if self.run_state != "running":
            return [m.ExecResult(req.id, FAILED)]
        self.run_state = "paused"
        self._events.append(m.Paused())
        return [m.ExecResult(req.id, OK)]

    def _step(self, peer: Peer, req: Message) -> list[Content]:
        n = req.content.count
        if self.model is None or self.run_state == "running" or n < 1 or self._finished():
            return [m.ExecResult(req.id, FAILED)]
        for _ in range(n):
            if self.advance():
                break
        self._events.append(m.EndStep())
        if self.ended:
            self._events.append(m.EndSimulation())
        return [m.ExecResult(req.id, OK)]

    def tick(self) -> None:
        """One wall-clock tick of the run loop."""
        with self.lock:
            if self.run_state == "running" and self.advance():
                self.run_state = "stopped"
                self._events.append(m.EndSimulation())
            self.flush()

    def advance(self) -> bool:
        """Advance the model clock by one step and queue the step's events.

        Returns True when this step reached the finish time.
        """
        mdl = self.model
        if mdl is None:
            return False
        step, _start, finish = mdl.time_spec
        self.current_time = min(self.current_time + step, finish) if step > 0 else finish
        self.step_number += 1
        grow = self.config.growth * step
        for e in self.stock:
            e.length += grow
        self._emit_registers()
        if self.trace:
            self._events.append(m.Logger(self.step_number, tuple(self._logger_entries())))
        if self.current_time >= finish and not self.ended:
            self.ended = True
            return True
        return False

    def _emit_registers(self) -> None:
        if not self.selected_vars or self.model is None:
            return
        o_step, o_start, o_finish = self._output_time()
        t = self.current_time
        if not o_start <= t <= o_finish or (o_step > 0 and (t - o_start) % o_step):
            return
        for (otype, var), boxes in self.selected_vars.items():
            mc = self.model.find_variable(var, self.selected_classes)
            if mc is None:
                continue
            try:
                cells = self.resolve_boxes(boxes)
            except RegionError:
                continue
            values = mc.variables[var]
            pairs = tuple(m.CellValue(c, values[c]) for c in cells)
            self._events.append(m.Register(self.reg_index, t, var, pairs))
            self.reg_index += 1
            if otype is m.OutputType.FILE and self.output_file:
                self._write_rows(t, var, pairs)

    def _write_rows(self, t: int, var: str, pairs: tuple[m.CellValue, ...]) -> None:
        path = Path(self.config.output_dir) / self.output_file
        try:
            with path.open("a", encoding="utf-8") as fh:
                for cv in pairs:
                    fh.write(f"{t} {var} {cv.cell} {cv.value!r}\n")
        except OSError as exc:
            log.warning("output file %s: %s", path, exc)

    def _logger_entries(self) -> list[m.LoggerEntry]:
        mdl = self.model
        out = []
        try:
            cell = self.resolve_boxes(m.ALL)[0]
        except (RegionError, IndexError):
            return out
        for cname in self.selected_classes or list(mdl.classes):
            for vname, values in mdl.classes[cname].variables.items():
                out.append(m.LoggerEntry(cname, m.FuncType.INQUIRY, cname, vname, cell, values[cell]))
        return out

    # -- classes, variables, parameters -------------------------------------

    def _available(self) -> list[str]:
        return list(self.model.classes) if self.model else []

    def _available_classes(self, peer: Peer, req: Message) -> list[Content]:
        return [m.ClassesAvailable(req.id, tuple(self._available()))]

    def _select_classes(self, peer: Peer, req: Message) -> list[Content]:
        names = list(dict.fromkeys(req.content.names))
        if all(n in self._available() for n in names):
            self.selected_classes = names
        else:
            log.info("select_classes: unknown class in %s; selection unchanged", names)
        return [m.ClassesSelected(req.id, tuple(self.selected_classes))]

    def _class(self, name: str):
        return self.model.classes.get(name) if self.model else None

    def _get_variables(self, peer: Peer, req: Message) -> list[Content]:
        mc = self._class(req.content.class_name)
        return [m.Variables(req.id, tuple(mc.variables) if mc else ())]

    def _get_variable_value(self, peer: Peer, req: Message) -> list[Content]:
        c: m.GetVariableValue = req.content
        mc = self._class(c.class_name)
        if mc is None or c.var_name not in mc.variables:
            return [m.VariableValue(req.id, ())]
        try:
            cells = self.resolve_boxes(c.boxes)
        except RegionError as exc:
            log.info("get_variable_value: %s", exc)
            return [m.VariableValue(req.id, ())]
        values = mc.variables[c.var_name]
        return [m.VariableValue(req.id, tuple(m.CellValue(i, values[i]) for i in cells))]

    def _set_variable_value(self, peer: Peer, req: Message) -> list[Content]:
        c: m.SetVariableValue = req.content
        mc = self._class(c.class_name)
        plan = []
        try:
            if mc is None:
                raise RegionError(f"unknown class {c.class_name}")
            for a in c.assignments:
                if a.var_name not in mc.variables:
                    raise RegionError(f"unknown variable {a.var_name}")
                plan.append((a.var_name, self.resolve_boxes(a.boxes), a.value))
        except RegionError as exc:
            log.info("set_variable_value: %s", exc)
            return [m.VariableSetResult(req.id, FAILED)]
        for var, cells, value in plan:
            values = mc.variables[var]
            for i in cells:
                values[i] = value
        return [m.VariableSetResult(req.id, OK)]

    def _get_parameters(self, peer: Peer, req: Message) -> list[Content]:
        mc = self._class(req.content.class_name)
        pairs = tuple(m.ParamValue(k, v) for k, v in mc.parameters.items()) if mc else ()
        return [m.ParametersValues(req.id, pairs)]

    def _set_parameters(self, peer: Peer, req: Message) -> list[Content]:
        c: m.SetParameters = req.content
        mc = self._class(c.class_name)
        if mc is None or any(pv.param_name not in mc.parameters for pv in c.values):
            return [m.ParametersSetResult(req.id, FAILED)]
        for pv in c.values:
            mc.parameters[pv.param_name] = float(pv.value)
        return [m.ParametersSetResult(req.id, OK)]

    # -- time -------------------------------------------------------------------

    def _set_time_spec(self, peer: Peer, req: Message) -> list[Content]:
        c: m.SetTimeSpec = req.content
        if self.model is not None and self.run_state != "running" and c.step > 0 and c.start <= c.finish:
            self.model.time_spec = (c.step, c.start, c.finish)
            self.current_time = c.start
            self.ended = False
        else:
            log.info("set_time_spec %s %s %s rejected", c.step, c.start, c.finish)
        return [m.TimeSpec(req.id, *self._time_spec())]

    def _set_output_time(self, peer: Peer, req: Message) -> list[Content]:
        c: m.SetOutputTime = req.content
        if self.model is not None and c.step > 0 and c.start <= c.finish:
            self.output_time_spec = (c.step, c.start, c.finish)
        else:
            log.info("set_output_time %s %s %s rejected", c.step, c.start, c.finish)
        return [m.OutputTime(req.id, *self._output_time())]

    # -- output -----------------------------------------------------------------

    def _subdomain(self, peer: Peer, req: Message) -> list[Content]:
        domain: m.Domain = req.content.domain
        ok = self.model is not None and (
            domain.regions is None or all(n in self.regions for n in domain.regions)
        )
        if ok:
            self.subdomain = domain
        return [m.SubdomainResult(req.id, _result(ok))]

    def _output_file(self, peer: Peer, req: Message) -> list[Content]:
        name = req.content.file_name
        ok = self.model is not None and "/" not in name and "\\" not in name and not name.startswith(".")
        if ok:
            self.output_file = name
        return [m.OutputFileResult(req.id, _result(ok))]

    def _available_variables(self, peer: Peer, req: Message) -> list[Content]:
        names: dict[str, None] = {}
        if self.model is not None:
            for cname in self.selected_classes or list(self.model.classes):
                names.update(dict.fromkeys(self.model.classes[cname].variables))
        return [m.VariablesAvailable(req.id, tuple(names))]

    def _select_variables(self, peer: Peer, req: Message) -> list[Content]:
        c: m.SelectVariables = req.content
        ok = self.model is not None and all(
            self.model.find_variable(v, self.selected_classes) is not None for v in c.var_names
        )
        if ok:
            try:
                self.resolve_boxes(c.boxes)
            except RegionError:
                ok = False
        if ok:
            for v in c.var_names:
                self.selected_vars[(c.output_type, v)] = c.boxes
        return [m.SelectVariablesResult(req.id, _result(ok))]

    def _unselect_variables(self, peer: Peer, req: Message) -> list[Content]:
        c: m.UnselectVariables = req.content
        keys = [(c.output_type, v) for v in c.var_names]
        ok = all(k in self.selected_vars for k in keys)
        if ok:
            for k in keys:
                del self.selected_vars[k]
        return [m.UnselectVariablesResult(req.id, _result(ok))]

    def _log(self, peer: Peer, req: Message) -> list[Content]:
        ok = self.model is not None
        if ok:
            self.log_config = (req.content.log_type, req.content.log_steps)
        return [m.LogResult(req.id, _result(ok))]

    def _trace(self, peer: Peer, req: Message) -> list[Content]:
        self.trace = not self.trace
        return [m.TraceResult(req.id, m.TraceStatus.ON if self.trace else m.TraceStatus.OFF)]


__all__ = ["Simulator", "StubConfig", "Peer", "StockEntry", "ProtocolError"]
