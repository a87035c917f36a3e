import json

import pytest

from ecolang import messages as m
from ecolang.agentcli import AgentClient, conformance, parse_script, run_script, send_raw
from ecolang.agentcli.cli import main
from ecolang.agentcli.script import ScriptError, matches, resolve
from ecolang.protocol import ANSWER_TABLE
from ecolang.simstub import StubConfig, StubServer
from ecolang.transport import Endpoint, Transcript

from .test_transport import free_closed_port


@pytest.fixture
def stub(tmp_path):
    with StubServer(0, StubConfig(output_dir=tmp_path, tick_interval=0.005)) as server:
        yield server


def endpoint(server):
    return Endpoint.local(server.port)


# -- script parsing --------------------------------------------------------------


def test_parse_script_directives():
    script = parse_script(
        """
        # comment
        send agents
        expect known_agents
        assert len(agents) >= 1
        wait end_step   # trailing comment
        sleep 10
        """
    )
    assert [d.op for d in script.directives] == ["send", "expect", "assert", "wait", "sleep"]
    assert script.directives[0].content == m.AskAgents()
    assert script.handshake


def test_handshake_off():
    assert not parse_script("handshake off\nsend disconnect").handshake


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("send bogus", 1),
        ("send agents\nexpect nonsense", 2),
        ("expect", 1),
        ("expect accept result", 1),
        ("sleep soon", 1),
        ("assert x ~ 1", 1),
        ("frobnicate", 1),
        ("send agents\nhandshake off", 2),
    ],
)
def test_script_errors(text, lineno):
    with pytest.raises(ScriptError) as err:
        parse_script(text)
    assert err.value.lineno == lineno


def test_resolve_and_matches():
    content = m.KnownAgents(3, (m.AgentRecord("A", "h", "1.2.3.4", 7, m.Connected.CONNECTED),))
    assert resolve(content, "agents.0.agent_name") == "A"
    assert resolve(content, "len(agents)") == 1
    assert matches(resolve(content, "agents.0.connected"), "connected")
    assert matches(0.1 + 0.2, "0.3")
    assert not matches(3, "three")


# -- running scripts ----------------------------------------------------------------


def test_agents_script_passes(stub):
    result = run_script(endpoint(stub), "send agents\nexpect known_agents\nassert len(agents) == 1")
    assert result.ok, result.failures


def test_seed_script_with_id_placeholder(stub):
    script = """
    send open_model bay
    expect open_result result=ok
    send define (r1 land (rect (point 0 0) (point 3 3)))
    expect define_result result=ok
    send seed (r1 now oyster (0.5 0.1) (density 12))
    expect seed_result result=ok action_id=$id
    send harvest (r1 now oyster (length 5))
    expect harvest_result result=ok weight=115.2
    """
    result = run_script(endpoint(stub), script)
    assert result.ok, result.failures


def test_wrong_kind_fails_with_diff(stub):
    result = run_script(endpoint(stub), "send agents\nexpect region_names")
    assert not result.ok
    [failure] = result.failures
    assert "line 2" in failure
    assert "expected: region_names" in failure
    assert "received: message (2 EcoDynamo agent known_agents" in failure


def test_wait_for_events(stub):
    script = """
    send open_model lagoon
    expect open_result result=ok
    send run
    expect exec_result result=ok
    wait end_simulation
    """
    assert run_script(endpoint(stub), script).ok


def test_script_against_closed_port():
    result = run_script(Endpoint.local(free_closed_port()), "send agents")
    assert not result.ok
    assert "Error" in result.failures[0]


def _frames(transcript):
    return transcript.frames(None)


def test_script_transcripts_are_deterministic(tmp_path):
    script = """
    send open_model lagoon
    expect open_result
    send model_morphology
    expect morphology
    expect morphology_end
    send get_region_names
    expect region_names
    """
    runs = []
    for i in range(2):
        with StubServer(0, StubConfig(output_dir=tmp_path)) as server:
            result = run_script(endpoint(server), script)
            assert result.ok, result.failures
            runs.append(_frames(result.transcript))
    # the connect payload carries the ephemeral local port
    runs = [[f for f in r if " connect " not in f] for r in runs]
    assert runs[0] == runs[1]


# -- client ------------------------------------------------------------------------


def test_client_records_latency(stub):
    with AgentClient(endpoint(stub), name="lat") as client:
        client.handshake()
        ex = client.request(m.GetRegionNames())
        assert ex.complete and ex.latency is not None and ex.latency >= 0
        client.disconnect()


def test_duplicate_agent_name_handshake_fails(stub):
    from ecolang.agentcli import HandshakeError

    with AgentClient(endpoint(stub), name="twin") as first:
        first.handshake()
        with AgentClient(endpoint(stub), name="twin") as second:
            with pytest.raises(HandshakeError):
                second.handshake()
        first.disconnect()


# -- conformance --------------------------------------------------------------------


def test_conformance_all_rows_pass(stub):
    report = conformance(endpoint(stub))
    assert report.aborted is None
    assert {r.row_id for r in report.rows} == {r.row_id for r in ANSWER_TABLE}
    assert report.ok, report.table()


def test_conformance_detects_oversized_chunks(tmp_path):
    with StubServer(0, StubConfig(output_dir=tmp_path, morphology_chunk=751, tick_interval=0.005)) as server:
        report = conformance(endpoint(server))
    failed = [r for r in report.rows if not r.passed]
    # both rows answered by model_morphology share the offending exchange
    assert {r.row.request.keyword for r in failed} == {"model_morphology"}
    assert "751" in failed[0].detail


def test_conformance_against_closed_port():
    report = conformance(Endpoint.local(free_closed_port()))
    assert report.aborted is not None
    assert not report.ok


def test_conformance_records_are_json(stub):
    report = conformance(endpoint(stub))
    lines = report.records()
    rows = [json.loads(line) for line in lines]
    assert len(rows) == len(ANSWER_TABLE) + 1
    assert rows[-1]["passed"] == len(ANSWER_TABLE)


# -- raw ------------------------------------------------------------------------------


def test_raw_without_connect_gets_nothing(stub):
    assert send_raw(endpoint(stub), "message (1 x EcoDynamo model_dimensions)", window=0.3) == []


def test_raw_connect_then_request(stub):
    replies = send_raw(
        endpoint(stub),
        ["message (1 x EcoDynamo connect h 127.0.0.1 7000)", "message (2 x EcoDynamo model_dimensions)"],
        window=0.5,
    )
    assert replies == [
        "message (1 EcoDynamo x accept (1 ok))",
        "message (2 EcoDynamo x dimensions (2 0 0 0 0D))",
    ]


def test_raw_garbage_is_ignored(stub):
    replies = send_raw(
        endpoint(stub), ["hello there", "message (1 x EcoDynamo connect h 127.0.0.1 7000)"], window=0.5
    )
    assert replies == ["message (1 EcoDynamo x accept (1 ok))"]


# -- command line ------------------------------------------------------------------


def test_cli_connect(stub, capsys):
    assert main(["connect", "--port", str(stub.port)]) == 0
    assert "known_agents" in capsys.readouterr().out


def test_cli_script_pass_and_fail(stub, tmp_path, capsys):
    good = tmp_path / "good.ecs"
    good.write_text("send agents\nexpect known_agents\n")
    bad = tmp_path / "bad.ecs"
    bad.write_text("send agents\nexpect region_names\n")
    broken = tmp_path / "broken.ecs"
    broken.write_text("send bogus\n")
    port = ["--port", str(stub.port)]
    assert main(["script", str(good), *port]) == 0
    assert main(["script", str(bad), *port, "--name", "other"]) == 1
    assert main(["script", str(broken), *port]) == 2
    assert "line 1" in capsys.readouterr().err


def test_cli_conformance(stub, capsys):
    assert main(["conformance", "--port", str(stub.port)]) == 0
    out = capsys.readouterr().out
    assert "50/50" in out or "50 passed" in out


def test_cli_refused(capsys):
    assert main(["connect", "--port", str(free_closed_port())]) == 1


def test_cli_transcript_file(stub, tmp_path):
    log = tmp_path / "t.log"
    assert main(["connect", "--port", str(stub.port), "--transcript", str(log)]) == 0
    first = log.read_text().splitlines()[0]
    assert first.startswith("> ") and " connect " in first
