"""Drive a simulator through every row of the answer table and grade the replies.

A request row passes when every exchange for that request received only
allowed answer kinds, each carrying the request's id as action_id, and at
least one exchange produced the row's answer kind. A spontaneous row passes
when at least one such event was observed during the run.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .. import messages as m
from ..messages import BType, OutputType, Point
from ..protocol import (
    ANSWER_TABLE,
    MORPHOLOGY_CHUNK,
    SPECIES_CHUNK,
    ProtocolError,
    TableRow,
    answer_classes,
)
from ..transport import ConnectionClosed, Endpoint, Transcript
from .client import DEFAULT_TIMEOUT, AgentClient, Exchange, HandshakeError

MODEL = "bay"


@dataclass
class RowResult:
    row: TableRow
    passed: bool = False
    answers: list[str] = field(default_factory=list)
    latency_ms: float | None = None
    detail: str = ""

    @property
    def row_id(self) -> str:
        return self.row.row_id


@dataclass
class ConformanceReport:
    rows: list[RowResult]
    aborted: str | None = None
    elapsed: float = 0.0

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.rows)

    @property
    def failed(self) -> int:
        return len(self.rows) - self.passed

    @property
    def ok(self) -> bool:
        return self.aborted is None and self.failed == 0

    def table(self) -> str:
        lines = [f"{'row':<58} {'result':<6} {'ms':>8}  answers"]
        for r in self.rows:
            ms = f"{r.latency_ms:.1f}" if r.latency_ms is not None else "-"
            answers = " ".join(dict.fromkeys(r.answers))
            lines.append(f"{r.row_id:<58} {'pass' if r.passed else 'FAIL':<6} {ms:>8}  {answers}")
            if r.detail and not r.passed:
                lines.append(f"    {r.detail}")
        lines.append(f"{self.passed}/{len(self.rows)} rows passed in {self.elapsed:.2f}s")
        if self.aborted:
            lines.append(f"aborted: {self.aborted}")
        return "\n".join(lines)

    def records(self) -> list[str]:
        """One JSON object per line: every row, then a summary."""
        out = [
            json.dumps(
                {
                    "row": r.row_id,
                    "request": r.row.request.keyword,
                    "answers": r.answers,
                    "result": "pass" if r.passed else "fail",
                    "latency_ms": None if r.latency_ms is None else round(r.latency_ms, 3),
                    "detail": r.detail,
                }
            )
            for r in self.rows
        ]
        summary = {"summary": True, "passed": self.passed, "failed": self.failed, "aborted": self.aborted}
        out.append(json.dumps(summary))
        return out


def _rect(x0: int, y0: int, x1: int, y1: int) -> m.Concrete:
    return m.Concrete(m.Land(), (m.Rect(Point(x0, y0), Point(x1, y1)),))


@dataclass(frozen=True)
class Await:
    """Plan step: block until an event with this keyword arrives."""

    keyword: str


def _plan() -> list[m.Content | Await]:
    """Requests in session order, after the handshake and before disconnect."""
    water = m.Water(m.Tide.SUBTIDAL, m.QualScale.GOOD, m.SedimentType.SANDY, m.QualScale.GOOD)
    few = m.Cells((0, 1, 2))
    return [
        m.AskAgents(),
        m.OpenModel(MODEL),
        m.GetModelName(),
        m.ModelDimensions(),
        m.ModelMorphology(),
        m.ModelSpecies(),
        m.Define("r1", _rect(0, 0, 3, 3)),
        m.Define("r3", m.Concrete(water, (m.Circle(Point(20, 20), 2.5),))),
        m.Define("r2", m.Composite(("r1", "r3"))),
        m.GetRegionNames(),
        m.GetRegion("r2"),
        m.Seed("r1", m.NOW, m.BivalveSeed(BType.OYSTER, 0.5, 0.1), 12.0),
        m.Inspect("r1", m.NOW),
        m.Harvest("r1", m.NOW, m.Bivalve(BType.OYSTER, 0.0)),
        m.GetAvailableClasses(),
        m.SelectClasses(("Phytoplankton",)),
        m.GetSelectedClasses(),
        m.GetVariables("Phytoplankton"),
        m.GetVariableValue("Phytoplankton", "chlorophyll", few),
        m.SetVariableValue("Phytoplankton", (m.VarAssignment("chlorophyll", few, 2.0),)),
        m.GetParameters("Phytoplankton"),
        m.SetParameters("Phytoplankton", (m.ParamValue("max_growth", 0.9),)),
        m.GetTimeSpec(),
        m.SetTimeSpec(3600, 0, 86400),
        m.Subdomain(m.ALL),
        m.OutputFile("conformance_output.txt"),
        m.GetAvailableVariables(),
        m.SelectVariables(OutputType.REMOTE, ("chlorophyll",), few),
        m.Log(m.LogType.TXT, (1,)),
        m.GetOutputTime(),
        m.SetOutputTime(3600, 0, 86400),
        m.Trace(),
        m.Initialise(),
        m.Step(1),
        m.Run(),
        m.Pause(),
        m.Run(),
        m.Stop(),
        m.Initialise(),
        m.Run(),
        Await(m.EndSimulation.keyword),
        m.Trace(),
        m.UnselectVariables(OutputType.REMOTE, ("chlorophyll",)),
        m.Delete(("r2", "r1", "r3")),
        m.SaveConfiguration(),
        m.CloseModel(),
    ]


def _chunk_problem(ex: Exchange) -> str | None:
    sizes = []
    for a in ex.answers:
        if isinstance(a.content, m.Morphology):
            sizes.append((len(a.content.cells), MORPHOLOGY_CHUNK))
        elif isinstance(a.content, m.BenthicSpecies):
            sizes.append((len(a.content.species), SPECIES_CHUNK))
    for n, limit in sizes:
        if n > limit:
            return f"chunk of {n} exceeds {limit}"
        if n == 0:
            return "empty chunk"
    return None


def _grade_exchange(ex: Exchange) -> str | None:
    """Why this exchange breaks the table, or None."""
    allowed = answer_classes(type(ex.request.content))
    if ex.violations:
        return "; ".join(ex.violations)
    if not ex.complete:
        return "incomplete"
    for a in ex.answers:
        if type(a.content) not in allowed:
            return f"{a.keyword} does not answer {ex.request.keyword}"
        aid = m.action_id_of(a.content)
        if aid is not None and aid != ex.request.id:
            return f"{a.keyword} action_id {aid} != request id {ex.request.id}"
    return _chunk_problem(ex)


def grade(rows: tuple[TableRow, ...], exchanges: list[Exchange], events: list[m.Message]) -> list[RowResult]:
    results = []
    for row in rows:
        res = RowResult(row)
        if row.answer is None:
            seen = [e for e in events if type(e.content) is row.request]
            res.answers = [e.keyword for e in seen]
            res.passed = bool(seen)
            res.detail = "" if seen else "never observed"
            results.append(res)
            continue
        mine = [ex for ex in exchanges if type(ex.request.content) is row.request]
        if not mine:
            res.detail = "never sent"
            results.append(res)
            continue
        problems = [p for p in (_grade_exchange(ex) for ex in mine) if p]
        res.answers = [a.keyword for ex in mine for a in ex.answers]
        latencies = [ex.latency for ex in mine if ex.latency is not None]
        res.latency_ms = 1000 * min(latencies) if latencies else None
        produced = any(type(a.content) is row.answer for ex in mine for a in ex.answers)
        if problems:
            res.detail = problems[0]
        elif not produced:
            res.detail = f"no {row.answer.keyword} received"
        res.passed = not problems and produced
        results.append(res)
    return results


def conformance(
    endpoint: Endpoint,
    name: str = "conformance",
    simulator: str = "EcoDynamo",
    timeout: float = DEFAULT_TIMEOUT,
    transcript: Transcript | None = None,
    run_timeout: float = 20.0,
) -> ConformanceReport:
    """Run the full table against ``endpoint``."""
    started = time.monotonic()
    client = AgentClient(endpoint, name, simulator, timeout, transcript)
    exchanges: list[Exchange] = []
    aborted = None
    try:
        client.open()
        exchanges.append(client.handshake())
        for step in _plan():
            if isinstance(step, Await):
                client.wait_for(step.keyword, run_timeout)
            else:
                exchanges.append(client.request(step))
        exchanges.append(client.request(m.Disconnect()))
    except (OSError, HandshakeError, TimeoutError, ConnectionClosed, ProtocolError) as exc:
        aborted = f"{type(exc).__name__}: {exc}"
    finally:
        client.close()
        if client.conn is not None:
            client.conn.wait_closed(1.0)
    events = [r.message for r in client.received if m.is_spontaneous(r.message.content.kind)]
    rows = grade(ANSWER_TABLE, exchanges, events)
    return ConformanceReport(rows, aborted, time.monotonic() - started)
