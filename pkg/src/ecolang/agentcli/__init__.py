"""Scriptable ECOLANG agent and conformance harness."""

from .client import AgentClient, Exchange, HandshakeError
from .conformance import ConformanceReport, RowResult, conformance
from .raw import send_raw
from .script import Script, ScriptError, ScriptResult, parse_script, run_script

__all__ = [
    "AgentClient",
    "ConformanceReport",
    "Exchange",
    "HandshakeError",
    "RowResult",
    "Script",
    "ScriptError",
    "ScriptResult",
    "conformance",
    "parse_script",
    "run_script",
    "send_raw",
]
