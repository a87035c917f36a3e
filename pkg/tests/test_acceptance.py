"""End-to-end acceptance criteria, each at its stated scale and tolerance.

Every test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import math
import random
import re
import threading
import time
from collections import defaultdict

import pytest

from ecolang import messages as m
from ecolang.agentcli import AgentClient, conformance, send_raw
from ecolang.codec import ParseError, parse_message, print_message
from ecolang.protocol import Role, Session, chunk_species
from ecolang.simstub import Simulator, StubConfig, StubServer, cells_in_region
from ecolang.simstub.model import bundled_models_dir
from ecolang.transport import Endpoint, Transcript

from .conftest import ACCEPTANCE_LINES
from .generators import message, random_shape
from .oracles import brute_cells, harvest_weight


class Criterion:
    """Context manager that records one PASS/FAIL line for criterion ``n``."""

    def __init__(self, n, title):
        self.n, self.title, self.detail = n, title, ""

    def __enter__(self):
        self.started = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.started
        verdict = "PASS" if exc_type is None else "FAIL"
        line = f"{verdict} criterion {self.n} {self.title}: {self.detail} ({elapsed:.2f}s)"
        if exc_type is not None:
            line += f" [{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}]"
        print(line, flush=True)
        ACCEPTANCE_LINES.append(line)
        return False


@pytest.fixture
def stub(tmp_path):
    with StubServer(0, StubConfig(output_dir=tmp_path, tick_interval=0.005)) as server:
        yield server


# -- 1 -------------------------------------------------------------------------


def test_round_trip_every_variant():
    with Criterion(1, "round trip") as c:
        per_variant = 100
        started = time.monotonic()
        bad = []
        for variant in m.VARIANTS:
            rng = random.Random(f"accept-{variant.keyword}")
            for _ in range(per_variant):
                msg = message(rng, variant)
                if parse_message(print_message(msg)) != msg:
                    bad.append(msg)
        elapsed = time.monotonic() - started
        c.detail = f"{len(m.VARIANTS)} variants x {per_variant}, {len(bad)} mismatches"
        assert len(m.VARIANTS) == 83
        assert not bad, bad[:3]
        assert elapsed < 10


# -- 2 -------------------------------------------------------------------------


def _fuzz_inputs(rng, n):
    """Uniform random bytes, plus byte-level mutations of valid frames."""
    for i in range(n):
        if i % 2:
            yield rng.randbytes(rng.randint(0, 1024))
        else:
            data = bytearray(print_message(message(rng)).encode()[:1024])
            for _ in range(rng.randint(1, 4)):
                if not data:
                    break
                p = rng.randrange(len(data))
                op = rng.random()
                if op < 0.4:
                    data[p] = rng.randrange(256)
                elif op < 0.7:
                    del data[p]
                else:
                    data.insert(p, rng.choice(b"() \t\"\\x09az-.1\xff"))
            yield bytes(data[:1024])


def test_fuzz_parser():
    with Criterion(2, "fuzz robustness") as c:
        n = 100_000
        rng = random.Random(0xEC0)
        counts = {"message": 0, "error": 0}
        started = time.monotonic()
        for data in _fuzz_inputs(rng, n):
            assert len(data) <= 1024
            try:
                result = parse_message(data)
            except ParseError:
                counts["error"] += 1
                continue
            assert isinstance(result, m.Message)
            counts["message"] += 1
        elapsed = time.monotonic() - started
        c.detail = f"{n} inputs, {counts['message']} messages, {counts['error']} parse errors, 0 crashes"
        assert sum(counts.values()) == n
        assert elapsed < 60


# -- 3 -------------------------------------------------------------------------


def test_conformance_full_table(tmp_path):
    with Criterion(3, "table conformance") as c:
        started = time.monotonic()
        with StubServer(0, StubConfig(output_dir=tmp_path)) as server:
            report = conformance(Endpoint.local(server.port))
        elapsed = time.monotonic() - started
        c.detail = f"{report.passed}/{len(report.rows)} rows"
        assert report.aborted is None, report.aborted
        assert report.ok, report.table()
        assert elapsed < 30


# -- 4 -------------------------------------------------------------------------


def _connected_agent(sim):
    inbox = []
    peer = sim.new_peer(inbox.append)
    session = Session(Role.AGENT, "chunks", peer_name=sim.config.name)

    def ask(content):
        msg = session.build(content)
        session.on_send(msg)
        mark = len(inbox)
        sim.handle(peer, msg)
        got = inbox[mark:]
        for g in got:
            session.on_receive(g)
        return [g.content for g in got]

    assert ask(m.Connect("h", "127.0.0.1", 7000)) == [m.Accept(1, m.ActionResult.OK)]
    return ask


def test_chunking(tmp_path):
    with Criterion(4, "chunking") as c:
        sim = Simulator(StubConfig(output_dir=tmp_path))
        ask = _connected_agent(sim)
        assert ask(m.OpenModel("bay"))[0].result is m.ActionResult.OK
        answers = ask(m.ModelMorphology())
        morph_sizes = [len(a.cells) for a in answers[:-1]]
        assert morph_sizes == [750, 750, 100]
        assert answers[-1] == m.MorphologyEnd()
        assert [cv for a in answers[:-1] for cv in a.cells] == sim.model.morphology()

        # 400 synthetic species through a model file, then straight through the chunker
        models = tmp_path / "models"
        models.mkdir()
        base = (bundled_models_dir() / "lagoon.model").read_text().replace("name lagoon", "name many")
        body = "".join(ln for ln in base.splitlines(True) if not ln.startswith("species"))
        rng = random.Random(400)
        source = []
        lines = []
        for i in range(400):
            cells = tuple(sorted(rng.sample(range(12), rng.randint(1, 4))))
            boxes = m.ALL if i % 7 == 0 else m.Cells(cells)
            source.append(m.SpeciesBoxes(f"sp{i:03d}", boxes))
            lines.append(f"species sp{i:03d} " + ("all" if boxes is m.ALL else " ".join(map(str, cells))))
        (models / "many.model").write_text(body + "\n".join(lines) + "\n")
        sim = Simulator(StubConfig(models_dir=models, output_dir=tmp_path))
        ask = _connected_agent(sim)
        assert ask(m.OpenModel("many"))[0].result is m.ActionResult.OK
        answers = ask(m.ModelSpecies())
        received = [s for a in answers[:-1] for s in a.species]
        species_sizes = [len(a.species) for a in answers[:-1]]
        assert species_sizes == [150, 150, 100]
        assert answers[-1] == m.BenthicSpeciesEnd()
        assert received == source

        direct = chunk_species(9, source)
        assert [len(a.species) for a in direct[:-1]] == [150, 150, 100]
        assert [s for a in direct[:-1] for s in a.species] == source
        c.detail = f"morphology {morph_sizes} + end, species {species_sizes} + end, reassembly exact"


# -- 5 -------------------------------------------------------------------------

_HEAD = re.compile(r"^message \((\d+) (\S+) ")


def test_id_discipline(tmp_path):
    with Criterion(5, "id discipline") as c:
        transcript = Transcript()
        with StubServer(0, StubConfig(output_dir=tmp_path)) as server:
            report = conformance(Endpoint.local(server.port), transcript=transcript)
        assert report.ok, report.table()
        ids = defaultdict(list)
        for frame in transcript.frames(None):
            _direction, line = frame.split(" ", 1)
            head = _HEAD.match(line)
            assert head, line
            ids[head.group(2)].append(int(head.group(1)))
        assert set(ids) == {"conformance", "EcoDynamo"}
        for sender, seq in ids.items():
            assert seq == list(range(1, len(seq) + 1)), sender
        c.detail = ", ".join(f"{s} 1..{len(q)}" for s, q in sorted(ids.items()))


# -- 6 -------------------------------------------------------------------------


def test_lifecycle(stub):
    with Criterion(6, "lifecycle") as c:
        ep = Endpoint.local(stub.port)

        # (a) no connect first: silence, never registered
        replies = send_raw(ep, "message (1 intruder EcoDynamo agents)", window=0.3)
        assert replies == []

        # (b) two agents connect and see each other
        logs = {name: Transcript() for name in ("alpha", "beta")}
        clients = {name: AgentClient(ep, name=name, transcript=logs[name]) for name in logs}
        for client in clients.values():
            client.handshake()
            assert client.registered
        snap = clients["beta"].request(m.AskAgents()).answers[0].content
        assert [(r.agent_name, r.connected) for r in snap.agents] == [
            ("alpha", m.Connected.CONNECTED),
            ("beta", m.Connected.CONNECTED),
        ]
        assert "intruder" not in {r.agent_name for r in snap.agents}

        # (c) shutdown reaches every registered agent; both are listening meanwhile
        listeners = [threading.Thread(target=cl.wait_for, args=("disconnect", 5)) for cl in clients.values()]
        for t in listeners:
            t.start()
        stub.shutdown(grace=5)
        for t in listeners:
            t.join()
        for name, client in clients.items():
            frames = logs[name].frames(None)
            disc = [f for f in frames if f.startswith("< ") and f.endswith(f"EcoDynamo {name} disconnect)")]
            assert len(disc) == 1, frames
            did = int(_HEAD.match(disc[0][2:]).group(1))
            assert any(f.endswith(f"accept ({did} ok))") for f in frames if f.startswith("> "))
            client.close()
        c.detail = "(a) no reply, (b) 2 registered, (c) disconnect seen by 2/2"


# -- 7 -------------------------------------------------------------------------


def test_geometry_oracle():
    with Criterion(7, "geometry oracle") as c:
        rng = random.Random(7_500)
        kinds = defaultdict(int)
        mismatches = 0
        for _ in range(500):
            lines, columns = rng.randint(1, 32), rng.randint(1, 32)
            shapes = tuple(random_shape(rng, lines, columns) for _ in range(rng.choice((1, 1, 1, 2, 3))))
            for s in shapes:
                kinds[type(s).__name__] += 1
            got = cells_in_region(m.Concrete(m.Land(), shapes), lines, columns)
            if got != brute_cells(shapes, lines, columns):
                mismatches += 1
        c.detail = f"500 regions ({dict(sorted(kinds.items()))}), {mismatches} mismatches"
        assert set(kinds) == {"Point", "Rect", "Square", "Circle", "Arc"}
        assert mismatches == 0


# -- 8 -------------------------------------------------------------------------


class StockOracle:
    """Tracks seeded stock from the rules alone: length starts at 10 * (v1 + v2)
    and grows by growth * step on every simulated step."""

    def __init__(self, growth, step):
        self.growth, self.step = growth, step
        self.entries = []  # [region, btype, v1, v2, density, length]

    def seed(self, region, btype, v1, v2, density):
        self.entries.append([region, btype, v1, v2, density, 10.0 * (v1 + v2)])

    def advance(self, n):
        for e in self.entries:
            e[5] += n * self.growth * self.step

    def harvest(self, region, btype, length, area):
        taken = [e for e in self.entries if e[0] == region and e[1] is btype and e[5] >= length]
        self.entries = [e for e in self.entries if e not in taken]
        return harvest_weight([(e[4], e[2], e[3]) for e in taken], area)

    def remaining(self, region):
        return sorted((e[1].value, e[5]) for e in self.entries if e[0] == region)


def _safe_threshold(rng, lengths):
    """A harvest length at least 1e-3 away from every current length."""
    top = max(lengths, default=20.0) + 2
    while True:
        t = rng.uniform(0, top)
        if all(abs(t - x) > 1e-3 for x in lengths):
            return t


def test_stock_conservation(tmp_path):
    with Criterion(8, "stock conservation") as c:
        worst = 0.0
        harvests = 0
        nonempty = 0
        inspects = 0
        for seq in range(100):
            rng = random.Random(seq)
            growth = 1e-3  # visible growth within a few steps
            sim = Simulator(StubConfig(output_dir=tmp_path, growth=growth))
            ask = _connected_agent(sim)
            assert ask(m.OpenModel("bay"))[0].result is m.ActionResult.OK
            oracle = StockOracle(growth, step=3600)  # bay.model time_spec step
            regions = {}
            for r in range(rng.randint(1, 3)):
                name = f"plot{r}"
                shapes = tuple(random_shape(rng, 40, 40) for _ in range(rng.randint(1, 2)))
                body = m.Concrete(m.Land(), shapes)
                assert ask(m.Define(name, body))[0].result is m.ActionResult.OK
                regions[name] = len(brute_cells(shapes, 40, 40))
            for _ in range(rng.randint(5, 25)):
                op = rng.random()
                region = rng.choice(list(regions))
                btype = rng.choice(list(m.BType))
                if op < 0.5:
                    v1, v2 = round(rng.uniform(0, 1), 3), round(rng.uniform(0.001, 1), 3)
                    density = round(rng.uniform(0, 50), 2)
                    seed = m.Seed(region, m.NOW, m.BivalveSeed(btype, v1, v2), density)
                    wire = parse_message(print_message(m.Message(1, "x", "y", seed))).content
                    assert ask(wire)[0].result is m.ActionResult.OK
                    oracle.seed(region, btype, v1, v2, density)
                elif op < 0.65:
                    n = rng.randint(1, 3)
                    assert ask(m.Step(n))[0].result is m.ActionResult.OK
                    oracle.advance(n)
                else:
                    present = [e[1] for e in oracle.entries if e[0] == region]
                    if present and rng.random() < 0.8:
                        btype = rng.choice(present)
                    lengths = [e[5] for e in oracle.entries]
                    threshold = _safe_threshold(rng, lengths)
                    reply = ask(m.Harvest(region, m.NOW, m.Bivalve(btype, threshold)))[0]
                    expected = oracle.harvest(region, btype, threshold, regions[region])
                    assert reply.result is m.ActionResult.OK
                    nonempty += expected > 0
                    if expected == 0:
                        assert reply.weight == 0
                    else:
                        err = abs(reply.weight - expected) / abs(expected)
                        worst = max(worst, err)
                        assert err <= 1e-9, (reply.weight, expected)
                    harvests += 1
                    got = sorted((b.btype.value, b.length) for b in ask(m.Inspect(region, m.NOW))[0].bivalves)
                    want = oracle.remaining(region)
                    assert [g[0] for g in got] == [w[0] for w in want]
                    assert all(math.isclose(g[1], w[1], rel_tol=1e-9) for g, w in zip(got, want))
                    inspects += 1
        assert nonempty >= harvests // 3
        c.detail = f"100 sequences, {harvests} harvests ({nonempty} non-empty), max rel err {worst:.1e}, {inspects} inspects exact"
