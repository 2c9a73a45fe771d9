"""Madrid-grid geometry, node types and initial placement.

Coordinates are metres. Street centre lines sit at multiples of the grid
pitch (block + 2 sidewalks + street = 140 m), blocks are centred between
them. Streets run all around the outer blocks as well, so the single-block
layout still has a street ring for the buses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

BLOCK_SIZE = 120.0
SIDEWALK_WIDTH = 3.0
STREET_WIDTH = 14.0
LANES_PER_STREET = 4
LANE_WIDTH = STREET_WIDTH / LANES_PER_STREET
PITCH = BLOCK_SIZE + 2 * SIDEWALK_WIDTH + STREET_WIDTH

# lane centres, measured from the street centre line
LANE_OFFSETS = (0.5 * LANE_WIDTH, 1.5 * LANE_WIDTH)
OUTER_LANE_OFFSET = LANE_OFFSETS[-1]
# pedestrians walk on the middle of the sidewalk
SIDEWALK_OFFSET = 0.5 * STREET_WIDTH + 0.5 * SIDEWALK_WIDTH

BUS_LENGTH = 12.0
BUS_WIDTH = 2.55
BUS_HEIGHT = 3.0
SEAT_ROWS = 6
SEAT_COLUMNS = 2

REGIMES = ("not_limited", "limited")
DEPLOYMENTS = ("only_macros", "macros_picos", "miab")


class NodeKind(enum.Enum):
    MACRO = "macro"
    PICO = "pico"
    MIAB_DU = "miab_du"
    MIAB_MT = "miab_mt"
    PEDESTRIAN = "pedestrian"
    PASSENGER = "passenger"

    @property
    def is_cell(self) -> bool:
        return self in (NodeKind.MACRO, NodeKind.PICO, NodeKind.MIAB_DU)

    @property
    def is_ue(self) -> bool:
        return self in (NodeKind.PEDESTRIAN, NodeKind.PASSENGER)

    @property
    def is_fixed_gnb(self) -> bool:
        return self in (NodeKind.MACRO, NodeKind.PICO)


class ArrayType(enum.Enum):
    URA8X8 = "URA8x8"
    ULA64 = "ULA64"
    SINGLE = "SingleOmni"

    @property
    def n_elements(self) -> int:
        return 1 if self is ArrayType.SINGLE else 64


class ElementPattern(enum.Enum):
    TGPP3D = "3gpp3d"
    OMNI = "omni"


@dataclass(frozen=True)
class AntennaConfig:
    array_type: ArrayType
    element_pattern: ElementPattern
    max_element_gain: float  # dBi
    tilt: float = 0.0  # mechanical downtilt, degrees

    @property
    def array_gain_db(self) -> float:
        return 10.0 * math.log10(self.array_type.n_elements)


@dataclass(frozen=True)
class NodeProfile:
    height: float
    tx_power_dbm: float
    antenna: AntennaConfig


URA_3GPP = dict(array_type=ArrayType.URA8X8, element_pattern=ElementPattern.TGPP3D, max_element_gain=8.0)

# Entity characteristics. Pico values are not given in the source table;
# they mirror the mIAB-DU radio at street-furniture height.
PROFILES: Dict[NodeKind, NodeProfile] = {
    NodeKind.MACRO: NodeProfile(25.0, 35.0, AntennaConfig(tilt=12.0, **URA_3GPP)),
    NodeKind.MIAB_DU: NodeProfile(2.5, 24.0, AntennaConfig(tilt=4.0, **URA_3GPP)),
    NodeKind.MIAB_MT: NodeProfile(3.5, 24.0, AntennaConfig(ArrayType.ULA64, ElementPattern.OMNI, 0.0, 0.0)),
    NodeKind.PEDESTRIAN: NodeProfile(1.5, 24.0, AntennaConfig(ArrayType.SINGLE, ElementPattern.OMNI, 0.0, 0.0)),
    NodeKind.PASSENGER: NodeProfile(1.8, 24.0, AntennaConfig(ArrayType.SINGLE, ElementPattern.OMNI, 0.0, 0.0)),
    NodeKind.PICO: NodeProfile(10.0, 24.0, AntennaConfig(tilt=4.0, **URA_3GPP)),
}

# speeds in km/h per regime
SPEEDS_KMH = {
    "not_limited": {"bus": 40.0, "pedestrian": 3.0},
    "limited": {"bus": 20.0, "pedestrian": 3.0},
}


@dataclass
class NetworkNode:
    id: int
    kind: NodeKind
    position: np.ndarray  # (3,) metres; z is the antenna height
    tx_power_dbm: float
    antenna: AntennaConfig
    azimuth: float = 0.0  # boresight bearing, degrees from +x, counter-clockwise
    bus_id: Optional[int] = None

    @property
    def height(self) -> float:
        return float(self.position[2])


def make_node(node_id, kind, xy, azimuth=0.0, bus_id=None, height=None) -> NetworkNode:
    prof = PROFILES[kind]
    h = prof.height if height is None else height
    pos = np.array([xy[0], xy[1], h], dtype=float)
    return NetworkNode(node_id, kind, pos, prof.tx_power_dbm, prof.antenna, azimuth, bus_id)


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, x, y, tol=1e-9) -> bool:
        return self.xmin - tol <= x <= self.xmax + tol and self.ymin - tol <= y <= self.ymax + tol

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))


@dataclass(frozen=True)
class GridLayout:
    regime: str
    n: int  # blocks per side

    block_size: float = BLOCK_SIZE
    sidewalk_width: float = SIDEWALK_WIDTH
    street_width: float = STREET_WIDTH
    lanes: int = LANES_PER_STREET

    @property
    def pitch(self) -> float:
        return self.block_size + 2 * self.sidewalk_width + self.street_width

    @property
    def street_centers(self) -> np.ndarray:
        """Centre-line coordinate of every street (same set for x and y)."""
        return np.arange(self.n + 1) * self.pitch

    @property
    def block_centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.pitch

    @property
    def blocks(self) -> List[Rect]:
        h = 0.5 * self.block_size
        return [Rect(cx - h, cy - h, cx + h, cy + h) for cy in self.block_centers for cx in self.block_centers]

    @property
    def bounds(self) -> Rect:
        lo = -0.5 * self.street_width
        hi = self.n * self.pitch + 0.5 * self.street_width
        return Rect(lo, lo, hi, hi)

    @property
    def center(self) -> Tuple[float, float]:
        c = 0.5 * self.n * self.pitch
        return (c, c)

    def sidewalk_rings(self) -> List[Tuple[Rect, Rect]]:
        """(outer, inner) rectangles of each sidewalk ring."""
        out = []
        for b in self.blocks:
            w = self.sidewalk_width
            out.append((Rect(b.xmin - w, b.ymin - w, b.xmax + w, b.ymax + w), b))
        return out

    def in_sidewalk(self, x, y, tol=1e-6) -> bool:
        for outer, inner in self.sidewalk_rings():
            if outer.contains(x, y, tol) and not (
                inner.xmin + tol < x < inner.xmax - tol and inner.ymin + tol < y < inner.ymax - tol
            ):
                return True
        return False

    def in_street(self, x, y, tol=1e-6) -> bool:
        if not self.bounds.contains(x, y, tol):
            return False
        h = 0.5 * self.street_width + tol
        sc = self.street_centers
        return bool(np.any(np.abs(sc - x) <= h) or np.any(np.abs(sc - y) <= h))

    def in_intersection(self, x, y, tol=1e-6) -> bool:
        h = 0.5 * self.street_width + tol
        sc = self.street_centers
        return bool(np.any(np.abs(sc - x) <= h) and np.any(np.abs(sc - y) <= h))

    def in_lane(self, x, y, heading_axis: int, tol=1e-6) -> bool:
        """Inside a 4-lane carriageway running along ``heading_axis``."""
        if not self.bounds.contains(x, y, tol):
            return False
        cross = y if heading_axis == 0 else x
        return bool(np.any(np.abs(self.street_centers - cross) <= 0.5 * self.street_width + tol))

    def in_crosswalk(self, x, y, tol=1e-6) -> bool:
        """In a street, on the extension of a sidewalk band across it."""
        if not self.in_street(x, y, tol):
            return False
        for outer, _ in self.sidewalk_rings():
            for a, lo, hi in ((x, outer.xmin, outer.xmax), (y, outer.ymin, outer.ymax)):
                w = self.sidewalk_width + tol
                if lo - tol <= a <= lo + w or hi - w <= a <= hi + tol:
                    return True
        return False

    def in_walkable(self, x, y, tol=1e-6) -> bool:
        return self.in_sidewalk(x, y, tol) or self.in_intersection(x, y, tol) or self.in_crosswalk(x, y, tol)

    def block_exists(self, cx, cy) -> bool:
        """Whether a block is centred (within 1 m) at ``(cx, cy)``."""
        for c in (cx, cy):
            k = (c - 0.5 * self.pitch) / self.pitch
            kr = round(k)
            if abs(k - kr) * self.pitch > 1.0 or not (0 <= kr < self.n):
                return False
        return True


def build_layout(regime: str) -> GridLayout:
    if regime == "not_limited":
        return GridLayout(regime, 3)
    if regime == "limited":
        return GridLayout(regime, 1)
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


@dataclass(frozen=True)
class PlacementConfig:
    """Where the fixed gNBs go. Distances in metres, angles in degrees."""

    macro_radius: float = 50.0  # triangle circumradius inside the central block
    macro_angles: Tuple[float, ...] = (90.0, 210.0, 330.0)
    limited_macro_offset: Tuple[float, float] = (0.0, 0.0)  # from the block centre
    limited_macro_azimuth: Optional[float] = None  # None: face the block centre (or +y when on it)
    pico_radius_not_limited: float = 190.0
    pico_radius_limited: float = 80.0
    pico_start_angle: float = 0.0


def place_base_stations(layout: GridLayout, deployment: str, placement: PlacementConfig = PlacementConfig(),
                        first_id: int = 0) -> List[NetworkNode]:
    if deployment not in DEPLOYMENTS:
        raise ValueError(f"unknown deployment {deployment!r}; expected one of {DEPLOYMENTS}")
    cx, cy = layout.center
    nodes = []
    nid = first_id
    if layout.regime == "not_limited":
        for ang in placement.macro_angles:
            a = math.radians(ang)
            xy = (cx + placement.macro_radius * math.cos(a), cy + placement.macro_radius * math.sin(a))
            nodes.append(make_node(nid, NodeKind.MACRO, xy, azimuth=ang))
            nid += 1
    else:
        ox, oy = placement.limited_macro_offset
        az = placement.limited_macro_azimuth
        if az is None:
            az = math.degrees(math.atan2(-oy, -ox)) if (ox or oy) else 90.0
        nodes.append(make_node(nid, NodeKind.MACRO, (cx + ox, cy + oy), azimuth=az))
        nid += 1
    if deployment == "macros_picos":
        r = placement.pico_radius_not_limited if layout.regime == "not_limited" else placement.pico_radius_limited
        for k in range(6):
            a = math.radians(placement.pico_start_angle + 60.0 * k)
            xy = (cx + r * math.cos(a), cy + r * math.sin(a))
            # picos face the layout centre
            az = math.degrees(math.atan2(cy - xy[1], cx - xy[0]))
            nodes.append(make_node(nid, NodeKind.PICO, xy, azimuth=az))
            nid += 1
    return nodes


def seat_offsets() -> np.ndarray:
    """Body-frame (x forward, y left) centres of the seat grid, shape (12, 2)."""
    xs = np.linspace(-BUS_LENGTH / 2 + 2.25, BUS_LENGTH / 2 - 1.25, SEAT_ROWS)
    ys = np.array([-0.65, 0.65])
    return np.array([(x, y) for x in xs for y in ys])


# back of the bus: DU inside under the roof, MT on the roof above it
DU_OFFSET = np.array([-BUS_LENGTH / 2 + 0.5, 0.0])
MT_OFFSET = np.array([-BUS_LENGTH / 2 + 0.5, 0.0])


@dataclass
class Bus:
    id: int
    center: np.ndarray  # (2,)
    heading: np.ndarray  # (2,) axis-aligned unit vector
    seats: np.ndarray  # (n_passengers,) indices into seat_offsets()
    du_node: int = -1
    mt_node: int = -1
    passenger_nodes: List[int] = field(default_factory=list)

    length: float = BUS_LENGTH
    width: float = BUS_WIDTH
    height: float = BUS_HEIGHT

    def to_world(self, body_xy: np.ndarray) -> np.ndarray:
        """Rigid transform from body frame (x forward, y left) to world xy."""
        hx, hy = self.heading
        body_xy = np.atleast_2d(body_xy)
        wx = self.center[0] + body_xy[:, 0] * hx - body_xy[:, 1] * hy
        wy = self.center[1] + body_xy[:, 0] * hy + body_xy[:, 1] * hx
        return np.column_stack([wx, wy])

    def box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned 3D box (lo, hi); buses only ever point along an axis."""
        hx, hy = np.abs(self.heading)
        half = np.array([0.5 * (self.length * hx + self.width * hy), 0.5 * (self.length * hy + self.width * hx)])
        lo = np.array([self.center[0] - half[0], self.center[1] - half[1], 0.0])
        hi = np.array([self.center[0] + half[0], self.center[1] + half[1], self.height])
        return lo, hi


@dataclass(frozen=True)
class PopulationCounts:
    buses: int = 6
    passengers: int = 36
    pedestrians: int = 36
    passengers_per_bus: int = 6

    def check(self):
        if min(self.buses, self.passengers, self.pedestrians, self.passengers_per_bus) < 0:
            raise ValueError("counts must be non-negative")
        if self.buses * self.passengers_per_bus != self.passengers:
            raise ValueError(
                f"{self.buses} buses x {self.passengers_per_bus} passengers per bus != {self.passengers} passengers"
            )
        if self.passengers_per_bus > SEAT_ROWS * SEAT_COLUMNS:
            raise ValueError("more passengers per bus than seats")


@dataclass
class Track:
    """Position on an axis-aligned track (bus lane or sidewalk line).

    ``axis`` 0 moves along x, 1 along y; ``cross`` is the fixed other
    coordinate; ``s`` the coordinate along the axis; ``h`` is +1/-1.
    """

    axis: int
    cross: float
    s: float
    h: int

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.s, self.cross]) if self.axis == 0 else np.array([self.cross, self.s])

    @property
    def heading(self) -> np.ndarray:
        v = np.zeros(2)
        v[self.axis] = self.h
        return v


def lane_cross(street_center: float, axis: int, h: int, offset: float) -> float:
    """Cross coordinate of a lane for right-hand traffic."""
    side = -h if axis == 0 else h
    return street_center + side * offset


def random_lane_track(layout: GridLayout, rng: np.random.Generator) -> Track:
    """Uniform position on a lane, away from intersections."""
    streets = layout.street_centers
    seg = layout.pitch - layout.street_width  # lane length between two intersections
    axis = int(rng.integers(2))
    street = float(streets[rng.integers(len(streets))])
    between = int(rng.integers(layout.n))
    s = streets[between] + 0.5 * layout.street_width + rng.uniform(0.0, seg)
    h = 1 if rng.uniform() < 0.5 else -1
    offset = LANE_OFFSETS[int(rng.integers(len(LANE_OFFSETS)))]
    return Track(axis, lane_cross(street, axis, h, offset), float(s), h)


def sidewalk_lines(layout: GridLayout) -> List[Tuple[int, float, float, float]]:
    """Walkable straight sidewalk pieces as (axis, cross, s_lo, s_hi)."""
    out = []
    half = 0.5 * layout.block_size + 0.5 * layout.sidewalk_width
    for bc_cross in layout.block_centers:
        for bc_along in layout.block_centers:
            for side in (-1.0, 1.0):
                for axis in (0, 1):
                    out.append((axis, bc_cross + side * half, bc_along - half, bc_along + half))
    return out


def random_sidewalk_track(layout: GridLayout, rng: np.random.Generator) -> Track:
    lines = sidewalk_lines(layout)
    axis, cross, lo, hi = lines[int(rng.integers(len(lines)))]
    s = rng.uniform(lo, hi)
    h = 1 if rng.uniform() < 0.5 else -1
    return Track(axis, float(cross), float(s), h)


@dataclass
class Population:
    buses: List[Bus]
    bus_tracks: List[Track]
    pedestrian_tracks: List[Track]
    passenger_bus: np.ndarray  # (n_passengers,) bus index per passenger
    passenger_seat: np.ndarray  # (n_passengers,) seat index


def spawn_population(layout: GridLayout, seed, counts: PopulationCounts = PopulationCounts()) -> Population:
    """Random buses on lanes, pedestrians on sidewalks, passengers in seats."""
    counts.check()
    ss = np.random.SeedSequence(seed, spawn_key=(0x5CE7E,))
    bus_rng, ped_rng, seat_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    bus_tracks = [random_lane_track(layout, bus_rng) for _ in range(counts.buses)]
    ped_tracks = [random_sidewalk_track(layout, ped_rng) for _ in range(counts.pedestrians)]
    n_seats = SEAT_ROWS * SEAT_COLUMNS
    buses = []
    p_bus, p_seat = [], []
    for b, tr in enumerate(bus_tracks):
        seats = np.sort(seat_rng.choice(n_seats, size=counts.passengers_per_bus, replace=False))
        buses.append(Bus(b, tr.xy.copy(), tr.heading.copy(), seats))
        p_bus.extend([b] * len(seats))
        p_seat.extend(seats.tolist())
    return Population(buses, bus_tracks, ped_tracks, np.array(p_bus, dtype=int), np.array(p_seat, dtype=int))


@dataclass
class Scene:
    """All nodes of one run plus the bus bodies they ride in."""

    layout: GridLayout
    deployment: str
    nodes: List[NetworkNode]
    buses: List[Bus]
    population: Population

    def ids(self, kind: NodeKind) -> List[int]:
        return [n.id for n in self.nodes if n.kind is kind]

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes])


def build_scene(regime: str, deployment: str, seed, counts: PopulationCounts = PopulationCounts(),
                placement: PlacementConfig = PlacementConfig()) -> Scene:
    """Layout, gNBs, buses (with mIAB nodes when deployed) and UEs.

    Node ids are dense: gNBs first, then mIAB DU/MT pairs, pedestrians and
    passengers. The random population depends only on the layout and the
    seed, so all deployments of a regime share it.
    """
    layout = build_layout(regime)
    nodes = place_base_stations(layout, deployment, placement)
    pop = spawn_population(layout, seed, counts)
    seats = seat_offsets()
    nid = len(nodes)
    if deployment == "miab":
        for bus in pop.buses:
            du_xy, mt_xy = bus.to_world(np.vstack([DU_OFFSET, MT_OFFSET]))
            az = math.degrees(math.atan2(bus.heading[1], bus.heading[0]))
            nodes.append(make_node(nid, NodeKind.MIAB_DU, du_xy, azimuth=az, bus_id=bus.id))
            bus.du_node = nid
            nodes.append(make_node(nid + 1, NodeKind.MIAB_MT, mt_xy, azimuth=az, bus_id=bus.id))
            bus.mt_node = nid + 1
            nid += 2
    for tr in pop.pedestrian_tracks:
        nodes.append(make_node(nid, NodeKind.PEDESTRIAN, tr.xy))
        nid += 1
    for b, seat in zip(pop.passenger_bus, pop.passenger_seat):
        bus = pop.buses[b]
        xy = bus.to_world(seats[seat])[0]
        nodes.append(make_node(nid, NodeKind.PASSENGER, xy, bus_id=int(b)))
        bus.passenger_nodes.append(nid)
        nid += 1
    return Scene(layout, deployment, nodes, pop.buses, pop)


def scene_csv_rows(scene: Scene, positions: Optional[np.ndarray] = None) -> List[str]:
    pos = scene.positions if positions is None else positions
    rows = ["id,kind,x,y,z"]
    for n, p in zip(scene.nodes, pos):
        rows.append(f"{n.id},{n.kind.value},{p[0]:.3f},{p[1]:.3f},{p[2]:.3f}")
    return rows
