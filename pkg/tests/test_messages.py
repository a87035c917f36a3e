import random

import pytest

from ecolang import messages as m
from ecolang.messages import MessageKind

from .generators import message


def _msg(content, id=1):
    return m.Message(id, "A", "B", content)


def test_every_reference_tag_has_a_variant():
    tags = {cls.kind for cls in m.VARIANTS}
    assert tags == set(MessageKind)
    assert len(MessageKind) == 75


def test_keywords_are_unique():
    assert len(m.BY_KEYWORD) == len(m.VARIANTS)


@pytest.mark.parametrize(
    "content, tag",
    [
        (m.Connect("h", "1.2.3.4", 6000), "1.1"),
        (m.MorphologyEnd(), "2.14"),
        (m.Run(), "3.8"),
        (m.Initialise(), "3.8"),
        (m.Step(1), "3.9"),
        (m.Register(0, 0, "v", ()), "4.25"),
    ],
)
def test_kind_of(content, tag):
    assert m.kind_of(content) == MessageKind(tag)
    assert m.kind_of(_msg(content)).value == tag


def test_shared_tag_variants_stay_distinct():
    assert m.Run() != m.Stop()
    assert m.Run.kind == m.Stop.kind == m.Pause.kind == m.Initialise.kind


@pytest.mark.parametrize("tag, expected", [("4.25", True), ("4.26", True), ("4.27", True), ("1.1", False), ("4.1", False)])
def test_is_spontaneous(tag, expected):
    assert m.is_spontaneous(tag) is expected


def test_valid_connect_has_no_violations():
    assert m.validate(_msg(m.Connect("h", "1.2.3.4", 6000))) == []


def test_id_zero_is_reported():
    assert m.validate(_msg(m.Connect("h", "1.2.3.4", 6000), id=0)) == ["id must be ≥ 1"]


def test_port_out_of_range_inside_known_agents():
    rec = m.AgentRecord("a", "h", "1.2.3.4", 70000, m.Connected.CONNECTED)
    assert m.validate(_msg(m.KnownAgents(1, (rec,)))) == ["server_port out of range"]


@pytest.mark.parametrize(
    "content, fragment",
    [
        (m.Delete(()), "names must not be empty"),
        (m.Define("r", m.Concrete(m.Land(), (m.Circle(m.Point(0, 0), -1.0),))), "radius must be ≥ 0"),
        (m.Define("r", m.Composite(("land",))), "reserved"),
        (m.GetRegion("two words"), "not a valid token"),
        (m.GetRegion("a(b"), "not a valid token"),
        (m.GetRegion(""), "not a valid token"),
        (m.Seed("r", m.NOW, m.BivalveSeed(m.BType.OYSTER, float("nan"), 0.0), 1.0), "finite"),
        (m.HarvestResult(1, m.ActionResult.FAILED, 2.0), "weight must be 0"),
        (m.Step(-1), "count must be ≥ 0"),
        (m.Inspect("r", m.Epoch(-5)), "seconds must be ≥ 0"),
        (m.Dimensions(1, 1, 1, 1, "2DH"), "wrong type"),
        (m.GetVariableValue("c", "v", m.Domain(())), "regions must not be empty"),
    ],
)
def test_violations(content, fragment):
    problems = m.validate(_msg(content))
    assert any(fragment in p for p in problems), problems


def test_validation_order_follows_fields():
    rec = m.AgentRecord("a b", "h", "x", 0, m.Connected.CONNECTED)
    problems = m.validate(m.Message(0, "A", "B", m.KnownAgents(0, (rec,))))
    assert problems == [
        "id must be ≥ 1",
        "action_id must be ≥ 1",
        "agent_name 'a b' is not a valid token",
        "server_port out of range",
    ]


def test_closed_token_sets():
    with pytest.raises(ValueError):
        m.BType("shrimp")
    with pytest.raises(ValueError):
        m.ModType("2dh")
    assert m.FuncType("Inquiry") is m.FuncType.INQUIRY


def test_action_id_of():
    assert m.action_id_of(m.Accept(4, m.ActionResult.OK)) == 4
    assert m.action_id_of(m.MorphologyEnd()) is None


def test_generated_messages_are_valid():
    rng = random.Random(3)
    for cls in m.VARIANTS:
        for _ in range(20):
            msg = message(rng, cls)
            assert m.validate(msg) == [], (cls.keyword, msg)


def test_messages_are_immutable():
    msg = _msg(m.Run())
    with pytest.raises(AttributeError):
        msg.id = 2
