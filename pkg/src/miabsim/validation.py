"""Built-in self-checks behind ``--validate``.

Each suite returns a list of :class:`Check` results. The channel suite
compares the vectorised path-loss code with a scalar reference written
directly from the standard's table using only :mod:`math`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

from . import radio
from .channel import Scenario, los_probability_array, path_loss_array
from .frame import OperationMode, check_self_interference, compute_usage, get_pattern
from .mobility import EntityKind, GridMobility, MobileState, kmh
from .scenario import build_layout, random_lane_track

SUITES = ("frame", "channel", "mobility", "olla")


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    value: object
    limit: object

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"suite={self.suite} check={self.name} result={status} value={self.value} limit={self.limit}"


# -- frame --------------------------------------------------------------------

def _pct(*xs):
    return tuple(Fraction(x, 100) for x in xs)


EXPECTED_USAGE = {
    "no_silence": {r: _pct(50, 50, 100) for r in ("donor_access", "backhaul", "miab_access")},
    "with_silence": {"donor_access": _pct(40, 30, 70), "backhaul": _pct(30, 30, 60), "miab_access": _pct(40, 30, 70)},
    "macro_only": {"donor_access": _pct(50, 50, 100)},
}


def frame_suite() -> List[Check]:
    out = []
    for name, rows in EXPECTED_USAGE.items():
        usage = compute_usage(get_pattern(name))
        for role, want in rows.items():
            u = usage[role]
            got = (u.dl_fraction, u.ul_fraction, u.total_fraction)
            out.append(Check("frame", f"usage.{name}.{role}", got == want,
                             ",".join(str(x) for x in got), ",".join(str(x) for x in want)))
    for name in ("no_silence", "with_silence"):
        n_cd = sum(m is OperationMode.C_D for m in check_self_interference(get_pattern(name)))
        out.append(Check("frame", f"mode_cd_slots.{name}", n_cd == 0, n_cd, 0))
    return out


# -- channel ------------------------------------------------------------------

def _ref_bp(h_bs, h_ut, fc):
    return 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc * 1e9 / 3e8


def _ref_path_loss(sc, los, d2d, h_bs, h_ut, fc):
    d3 = math.sqrt(d2d ** 2 + (h_bs - h_ut) ** 2)
    lg = math.log10
    if sc == Scenario.INH:
        a = 32.4 + 17.3 * lg(d3) + 20.0 * lg(fc)
        return a if los else max(a, 17.30 + 38.3 * lg(d3) + 24.9 * lg(fc))
    dbp = _ref_bp(h_bs, h_ut, fc)
    if sc == Scenario.UMA:
        near = 28.0 + 22.0 * lg(d3) + 20.0 * lg(fc)
        far = 28.0 + 40.0 * lg(d3) + 20.0 * lg(fc) - 9.0 * lg(dbp ** 2 + (h_bs - h_ut) ** 2)
        a = near if d2d <= dbp else far
        return a if los else max(a, 13.54 + 39.08 * lg(d3) + 20.0 * lg(fc) - 0.6 * (h_ut - 1.5))
    near = 32.4 + 21.0 * lg(d3) + 20.0 * lg(fc)
    far = 32.4 + 40.0 * lg(d3) + 20.0 * lg(fc) - 9.5 * lg(dbp ** 2 + (h_bs - h_ut) ** 2)
    a = near if d2d <= dbp else far
    return a if los else max(a, 22.4 + 35.3 * lg(d3) + 21.3 * lg(fc) - 0.3 * (h_ut - 1.5))


def _ref_p_los(sc, d, h_ut):
    if sc == Scenario.INH:
        if d <= 1.2:
            return 1.0
        return math.exp(-(d - 1.2) / 4.7) if d < 6.5 else 0.32 * math.exp(-(d - 6.5) / 32.6)
    if d <= 18.0:
        return 1.0
    if sc == Scenario.UMI:
        return 18.0 / d + math.exp(-d / 36.0) * (1.0 - 18.0 / d)
    c = 0.0 if h_ut <= 13.0 else ((h_ut - 13.0) / 10.0) ** 1.5
    return (18.0 / d + math.exp(-d / 63.0) * (1.0 - 18.0 / d)) * (1.0 + c * 1.25 * (d / 100.0) ** 3 * math.exp(-d / 150.0))


def channel_suite(n: int = 1000, seed: int = 0, fc: float = 28.0) -> List[Check]:
    rng = np.random.default_rng(seed)
    out = []
    worst_pl = 0.0
    worst_p = 0.0
    for sc in Scenario:
        if sc == Scenario.INH:
            h_bs, h_ut = np.full(n, 3.0), rng.uniform(1.0, 2.5, n)
            d2d = rng.uniform(1.0, 100.0, n)
        else:
            h_bs = np.full(n, 25.0 if sc == Scenario.UMA else 10.0)
            h_ut = rng.uniform(1.5, 8.0, n)
            d2d = 10.0 ** rng.uniform(1.0, math.log10(5000.0), n)
        d3d = np.hypot(d2d, h_bs - h_ut)
        for los in (True, False):
            got = path_loss_array(int(sc), los, d2d, d3d, h_bs, h_ut, fc, clamp=False)
            ref = np.array([_ref_path_loss(sc, los, *g, fc) for g in zip(d2d, h_bs, h_ut)])
            worst_pl = max(worst_pl, float(np.max(np.abs(got - ref))))
        got = los_probability_array(int(sc), d2d, h_ut)
        ref = np.array([_ref_p_los(sc, d, h) for d, h in zip(d2d, h_ut)])
        worst_p = max(worst_p, float(np.max(np.abs(got - ref))))
    out.append(Check("channel", "path_loss_max_abs_diff_db", worst_pl <= 1e-9, f"{worst_pl:.3e}", 1e-9))
    out.append(Check("channel", "los_probability_max_abs_diff", worst_p <= 1e-12, f"{worst_p:.3e}", 1e-12))
    return out


# -- mobility -----------------------------------------------------------------

def turn_events(n_buses: int = 60, steps: int = 5000, dt: float = 2.0, seed: int = 11):
    """Intersection events from a fleet of buses on the not-limited grid."""
    lay = build_layout("not_limited")
    rng = np.random.default_rng(seed)
    states = [MobileState.from_track(EntityKind.BUS, random_lane_track(lay, rng), kmh(40)) for _ in range(n_buses)]
    rngs = [np.random.default_rng([seed, i]) for i in range(n_buses)]
    m = GridMobility(lay, states, rngs)
    m.record_events = True
    for _ in range(steps):
        m.step(dt)
    return [e for e in m.events if e.all_exits]


def mobility_suite() -> List[Check]:
    ev = turn_events()
    out = [Check("mobility", "events", len(ev) >= 10_000, len(ev), 10_000)]
    for k, p in (("straight", 0.6), ("left", 0.2), ("right", 0.2)):
        f = sum(e.maneuver == k for e in ev) / max(len(ev), 1)
        out.append(Check("mobility", f"freq.{k}", abs(f - p) <= 0.03, round(f, 4), f"{p}+-0.03"))
    return out


# -- olla ---------------------------------------------------------------------

def olla_suite() -> List[Check]:
    bler = radio.synthetic_olla_bler(n_tx=100_000, mean_sinr_db=12.0, jitter_db=2.0, seed=0)
    return [Check("olla", "long_run_bler", 0.07 <= bler <= 0.11, round(bler, 5), "[0.07, 0.11]")]


RUNNERS: Dict[str, Callable[[], List[Check]]] = {
    "frame": frame_suite,
    "channel": channel_suite,
    "mobility": mobility_suite,
    "olla": olla_suite,
}


def run_suite(name: str) -> List[Check]:
    if name not in RUNNERS:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return RUNNERS[name]()
