"""Slot-level simulator of mobile integrated access and backhaul networks."""

from .frame import FramePattern, compute_usage, get_pattern
from .metrics import MetricsBundle, export
from .simcore import SimConfig, Simulator, load_config, parse_config, run

__all__ = [
    "FramePattern",
    "MetricsBundle",
    "SimConfig",
    "Simulator",
    "compute_usage",
    "export",
    "get_pattern",
    "load_config",
    "parse_config",
    "run",
]
