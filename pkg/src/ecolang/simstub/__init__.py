"""Mock simulator that speaks ECOLANG over TCP."""

from .model import ToyModel, load_model, parse_model
from .regions import RegionError, RegionStore, cells_in_region
from .server import StubServer
from .simulator import Peer, Simulator, StubConfig

__all__ = [
    "Peer",
    "RegionError",
    "RegionStore",
    "Simulator",
    "StubConfig",
    "StubServer",
    "ToyModel",
    "cells_in_region",
    "load_model",
    "parse_model",
]
