"""ECOLANG: an S-expression agent communication language for ecological simulators.

Submodules: ``messages`` (typed message model), ``codec`` (parse/print and
framing), ``protocol`` (sessions, answer table, chunking), ``transport`` (TCP),
``simstub`` (mock simulator) and ``agentcli`` (scriptable client).
"""

__version__ = "0.1.0"
