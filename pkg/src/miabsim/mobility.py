"""Grid mobility for buses and pedestrians.

Every entity moves along an axis-aligned track. Buses keep to a lane of
the right-hand carriageway and decide their manoeuvre when they enter an
intersection; the turn itself happens when the bus reaches the outermost
lane of its new direction. Pedestrians walk the middle of the sidewalks
and decide at block corners; they only cross streets at intersections.

Turn probabilities are renormalised over the exits that exist (outer
streets have no exit outward). A U-turn only happens at a dead end.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from .scenario import (
    OUTER_LANE_OFFSET,
    SIDEWALK_OFFSET,
    SPEEDS_KMH,
    Bus,
    GridLayout,
    Track,
    lane_cross,
)

SLOT_DURATION = 0.25e-3  # seconds

TURN_PROBS = {"straight": 0.6, "left": 0.2, "right": 0.2}
MANEUVERS = ("straight", "left", "right")


class EntityKind(enum.Enum):
    BUS = "bus"
    PEDESTRIAN = "pedestrian"


class TopologyError(RuntimeError):
    pass


def kmh(v: float) -> float:
    return v / 3.6


@dataclass
class MobileState:
    kind: EntityKind
    axis: int
    cross: float
    s: float
    h: int
    speed: float  # m/s
    # pending manoeuvre (set on intersection entry, executed at turn_at)
    turn_at: Optional[float] = None
    new_axis: int = 0
    new_cross: float = 0.0
    new_h: int = 1
    new_s: float = 0.0
    crossing: bool = False  # pedestrian on a crosswalk
    next_event: Optional[float] = None  # along-axis coordinate of next decision

    @property
    def position(self) -> np.ndarray:
        return np.array([self.s, self.cross]) if self.axis == 0 else np.array([self.cross, self.s])

    @property
    def heading(self) -> np.ndarray:
        v = np.zeros(2)
        v[self.axis] = self.h
        return v

    @classmethod
    def from_track(cls, kind: EntityKind, track: Track, speed: float) -> "MobileState":
        return cls(kind, track.axis, track.cross, track.s, track.h, speed)


@dataclass
class TurnEvent:
    entity: int
    kind: EntityKind
    maneuver: str  # "straight" | "left" | "right" | "uturn"
    all_exits: bool  # every manoeuvre was available


def sample_maneuver(rng: np.random.Generator, allowed=MANEUVERS) -> str:
    """Draw straight/left/right with 0.6/0.2/0.2 renormalised over ``allowed``."""
    allowed = [m for m in MANEUVERS if m in allowed]
    if not allowed:
        return "uturn"
    p = np.array([TURN_PROBS[m] for m in allowed])
    u = rng.uniform() * p.sum()
    return allowed[int(np.searchsorted(np.cumsum(p), u, side="right").clip(0, len(allowed) - 1))]


def _rotate(axis: int, h: int, left: bool):
    """New (axis, h) after a 90 degree turn."""
    v = [0, 0]
    v[axis] = h
    vx, vy = v
    nx, ny = (-vy, vx) if left else (vy, -vx)
    return (0, nx) if nx != 0 else (1, ny)


def _nearest_street(layout: GridLayout, c: float) -> float:
    k = round(c / layout.pitch)
    return k * layout.pitch


def _street_exists(layout: GridLayout, c: float) -> bool:
    k = c / layout.pitch
    return abs(k - round(k)) < 1e-9 and 0 <= round(k) <= layout.n


class GridMobility:
    """Advances a set of :class:`MobileState` on a grid layout."""

    def __init__(self, layout: GridLayout, states: List[MobileState], rngs: List[np.random.Generator]):
        if len(states) != len(rngs):
            raise ValueError("one random stream per entity")
        self.layout = layout
        self.states = states
        self.rngs = rngs
        self.events: List[TurnEvent] = []
        self.record_events = False
        for st in states:
            self._check_on_graph(st)
            st.next_event = self._next_decision(st)

    # -- geometry helpers -------------------------------------------------

    def _check_on_graph(self, st: MobileState):
        lay = self.layout
        street = _nearest_street(lay, st.cross)
        off = abs(st.cross - street)
        if st.kind is EntityKind.BUS:
            ok = off <= 0.5 * lay.street_width + 1e-6 and 0 <= street <= lay.n * lay.pitch
        else:
            ok = abs(off - SIDEWALK_OFFSET) < 1e-6 or st.crossing
        if not ok:
            raise TopologyError(f"{st.kind.value} at cross={st.cross:.3f} is off the road graph")

    def _next_decision(self, st: MobileState) -> Optional[float]:
        """Along-axis coordinate of the next decision point strictly ahead."""
        lay = self.layout
        half = 0.5 * lay.street_width if st.kind is EntityKind.BUS else SIDEWALK_OFFSET
        best = None
        for x in lay.street_centers:
            p = x - st.h * half
            if (p - st.s) * st.h > 1e-9:
                if best is None or (p - best) * st.h < 0:
                    best = p
        return best

    # -- decisions --------------------------------------------------------

    def _bus_decide(self, i: int, st: MobileState):
        lay = self.layout
        X = st.s + st.h * 0.5 * lay.street_width  # intersection centre on this axis
        Y = _nearest_street(lay, st.cross)
        exits = []
        if _street_exists(lay, X + st.h * lay.pitch):
            exits.append("straight")
        for name in ("left", "right"):
            ax, h2 = _rotate(st.axis, st.h, name == "left")
            if _street_exists(lay, Y + h2 * lay.pitch):
                exits.append(name)
        m = sample_maneuver(self.rngs[i], exits)
        if self.record_events:
            self.events.append(TurnEvent(i, st.kind, m, len(exits) == 3))
        if m == "straight":
            st.next_event = self._next_after(st, X)
            return
        if m == "uturn":
            st.turn_at = X
            st.new_axis, st.new_h = st.axis, -st.h
            st.new_cross = lane_cross(Y, st.axis, -st.h, OUTER_LANE_OFFSET)
            st.new_s = X
        else:
            ax, h2 = _rotate(st.axis, st.h, m == "left")
            st.new_axis, st.new_h = ax, h2
            st.new_cross = lane_cross(X, ax, h2, OUTER_LANE_OFFSET)
            st.turn_at = st.new_cross
            st.new_s = st.cross
        st.next_event = None

    def _ped_decide(self, i: int, st: MobileState):
        lay = self.layout
        X = st.s + st.h * SIDEWALK_OFFSET  # street about to be reached
        Y = _nearest_street(lay, st.cross)
        sigma = 1 if st.cross > Y else -1  # side of street Y the sidewalk is on
        corner_s = st.s
        exits = {}
        # straight: cross street X
        if lay.block_exists(X + st.h * 0.5 * lay.pitch, Y + sigma * 0.5 * lay.pitch):
            exits["straight"] = (st.axis, st.h, st.cross, True)
        for name in ("left", "right"):
            ax, h2 = _rotate(st.axis, st.h, name == "left")
            if h2 == sigma:
                exits[name] = (ax, h2, corner_s, False)  # walk along the same block
            elif lay.block_exists(corner_s - st.h * (0.5 * lay.pitch - SIDEWALK_OFFSET), Y - sigma * 0.5 * lay.pitch):
                exits[name] = (ax, h2, corner_s, True)  # cross street Y
        m = sample_maneuver(self.rngs[i], list(exits))
        if self.record_events:
            self.events.append(TurnEvent(i, st.kind, m, len(exits) == 3))
        if m == "uturn":
            st.h = -st.h
            st.next_event = self._next_decision(st)
            return
        ax, h2, cross, crossing = exits[m]
        if ax != st.axis:
            st.axis, st.h, st.s, st.cross = ax, h2, st.cross, cross
        st.crossing = crossing
        if crossing:
            st.next_event = st.s + st.h * 2 * SIDEWALK_OFFSET
        else:
            st.next_event = self._next_decision(st)

    def _next_after(self, st: MobileState, X: float) -> Optional[float]:
        half = 0.5 * self.layout.street_width
        nxt = X + st.h * self.layout.pitch
        if not _street_exists(self.layout, nxt):
            return None
        return nxt - st.h * half

    # -- motion -----------------------------------------------------------

    def _advance(self, i: int, dist: float):
        st = self.states[i]
        guard = 0
        while dist > 0.0:
            guard += 1
            if guard > 10000:
                raise TopologyError("mobility event loop did not converge")
            if st.turn_at is not None:
                target, is_turn = st.turn_at, True
            elif st.next_event is not None:
                target, is_turn = st.next_event, False
            else:
                st.s += st.h * dist
                return
            gap = (target - st.s) * st.h
            if gap > dist:
                st.s += st.h * dist
                return
            gap = max(gap, 0.0)
            st.s = target
            dist -= gap
            if is_turn:
                st.axis, st.h, st.cross, st.s = st.new_axis, st.new_h, st.new_cross, st.new_s
                st.turn_at = None
                st.next_event = self._next_decision(st)
            elif st.kind is EntityKind.BUS:
                self._bus_decide(i, st)
            elif st.crossing:
                st.crossing = False
                st.next_event = self._next_decision(st)
            else:
                self._ped_decide(i, st)

    def step(self, dt: float):
        """Move every entity by ``speed * dt``."""
        for i, st in enumerate(self.states):
            d = st.speed * dt
            ev = st.turn_at if st.turn_at is not None else st.next_event
            if ev is not None and (ev - st.s) * st.h <= d:
                self._advance(i, d)
            else:
                st.s += st.h * d

    def positions(self) -> np.ndarray:
        out = np.empty((len(self.states), 2))
        for i, st in enumerate(self.states):
            if st.axis == 0:
                out[i] = (st.s, st.cross)
            else:
                out[i] = (st.cross, st.s)
        return out

    def headings(self) -> np.ndarray:
        out = np.zeros((len(self.states), 2))
        for i, st in enumerate(self.states):
            out[i, st.axis] = st.h
        return out


def step(state: MobileState, dt: float, rng: np.random.Generator, layout: GridLayout) -> MobileState:
    """Advance one entity by ``dt`` seconds and return the new state."""
    st = replace(state)
    model = GridMobility.__new__(GridMobility)
    model.layout = layout
    model.states = [st]
    model.rngs = [rng]
    model.events = []
    model.record_events = False
    model._check_on_graph(st)
    if st.next_event is None and st.turn_at is None:
        st.next_event = model._next_decision(st)
    model._advance(0, st.speed * dt)
    return st


def sync_riders(bus: Bus, du_offset, mt_offset, seat_xy) -> dict:
    """World positions of the DU, MT and passengers for the current bus pose."""
    pts = bus.to_world(np.vstack([du_offset, mt_offset, seat_xy]))
    return {"du": pts[0], "mt": pts[1], "passengers": pts[2:]}


def speeds_for(regime: str):
    sp = SPEEDS_KMH[regime]
    return kmh(sp["bus"]), kmh(sp["pedestrian"])
