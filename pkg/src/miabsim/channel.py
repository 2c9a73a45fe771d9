"""Large-scale channel: link classification, 3GPP TR 38.901 path loss and
LOS probability, correlated shadowing, bus penetration, antenna gains and a
block-fading perturbation.

All vectorised functions take numpy arrays and broadcast; distances are in
metres, frequencies in GHz, losses in dB.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .scenario import ArrayType, Bus, ElementPattern, NetworkNode, NodeKind

C_LIGHT = 3.0e8
DEFAULT_FC_GHZ = 28.0
PENETRATION_DB = 20.0
H_E = 1.0  # effective environment height for the breakpoint distance


class Scenario(enum.IntEnum):
    UMA = 0
    UMI = 1
    INH = 2

    @property
    def label(self) -> str:
        return {0: "UMa", 1: "UMi", 2: "InH"}[int(self)]


# (LOS, NLOS) shadow-fading standard deviation, dB
SHADOW_SIGMA = {
    Scenario.UMA: (4.0, 6.0),
    Scenario.UMI: (4.0, 7.82),
    Scenario.INH: (3.0, 8.03),
}
# (LOS, NLOS) shadowing decorrelation distance, m
SHADOW_DCORR = {
    Scenario.UMA: (37.0, 50.0),
    Scenario.UMI: (10.0, 13.0),
    Scenario.INH: (10.0, 6.0),
}
# LOS-state decorrelation distance, m
LOS_DCORR = {Scenario.UMA: 50.0, Scenario.UMI: 50.0, Scenario.INH: 10.0}
# formula validity: minimum 2D distance (UMa/UMi) or 3D distance (InH)
MIN_DISTANCE = {Scenario.UMA: 10.0, Scenario.UMI: 10.0, Scenario.INH: 1.0}
MAX_DISTANCE = {Scenario.UMA: 5000.0, Scenario.UMI: 5000.0, Scenario.INH: 150.0}

_SIGMA_TABLE = np.array([SHADOW_SIGMA[s] for s in Scenario])
_SH_DCORR_TABLE = np.array([SHADOW_DCORR[s] for s in Scenario])
_LOS_DCORR_TABLE = np.array([LOS_DCORR[s] for s in Scenario])


@dataclass(frozen=True)
class LinkClass:
    scenario: Scenario
    forced_nlos: bool = False
    penetration_count: int = 0

    @property
    def penetration_db(self) -> float:
        return PENETRATION_DB * self.penetration_count


@dataclass(frozen=True)
class LinkState:
    link_class: LinkClass
    los: bool
    path_loss_db: float
    shadowing_db: float
    penetration_db: float
    tx_gain_db: float
    rx_gain_db: float
    fading_db: float = 0.0

    @property
    def total_loss_db(self) -> float:
        return (self.path_loss_db + self.shadowing_db + self.penetration_db
                - self.tx_gain_db - self.rx_gain_db + self.fading_db)


# ---------------------------------------------------------------------------
# path loss and LOS probability
# ---------------------------------------------------------------------------

def breakpoint_distance(h_bs, h_ut, fc_ghz):
    return 4.0 * (h_bs - H_E) * (h_ut - H_E) * fc_ghz * 1e9 / C_LIGHT


def _pl_uma_los(d2d, d3d, h_bs, h_ut, fc):
    dbp = breakpoint_distance(h_bs, h_ut, fc)
    pl1 = 28.0 + 22.0 * np.log10(d3d) + 20.0 * np.log10(fc)
    pl2 = (28.0 + 40.0 * np.log10(d3d) + 20.0 * np.log10(fc)
           - 9.0 * np.log10(dbp ** 2 + (h_bs - h_ut) ** 2))
    return np.where(d2d <= dbp, pl1, pl2)


def _pl_uma_nlos(d2d, d3d, h_bs, h_ut, fc):
    nlos = 13.54 + 39.08 * np.log10(d3d) + 20.0 * np.log10(fc) - 0.6 * (h_ut - 1.5)
    return np.maximum(_pl_uma_los(d2d, d3d, h_bs, h_ut, fc), nlos)


def _pl_umi_los(d2d, d3d, h_bs, h_ut, fc):
    dbp = breakpoint_distance(h_bs, h_ut, fc)
    pl1 = 32.4 + 21.0 * np.log10(d3d) + 20.0 * np.log10(fc)
    pl2 = (32.4 + 40.0 * np.log10(d3d) + 20.0 * np.log10(fc)
           - 9.5 * np.log10(dbp ** 2 + (h_bs - h_ut) ** 2))
    return np.where(d2d <= dbp, pl1, pl2)


def _pl_umi_nlos(d2d, d3d, h_bs, h_ut, fc):
    nlos = 35.3 * np.log10(d3d) + 22.4 + 21.3 * np.log10(fc) - 0.3 * (h_ut - 1.5)
    return np.maximum(_pl_umi_los(d2d, d3d, h_bs, h_ut, fc), nlos)


def _pl_inh_los(d2d, d3d, h_bs, h_ut, fc):
    return 32.4 + 17.3 * np.log10(d3d) + 20.0 * np.log10(fc)


def _pl_inh_nlos(d2d, d3d, h_bs, h_ut, fc):
    nlos = 38.3 * np.log10(d3d) + 17.30 + 24.9 * np.log10(fc)
    return np.maximum(_pl_inh_los(d2d, d3d, h_bs, h_ut, fc), nlos)


_PL = {
    (Scenario.UMA, True): _pl_uma_los,
    (Scenario.UMA, False): _pl_uma_nlos,
    (Scenario.UMI, True): _pl_umi_los,
    (Scenario.UMI, False): _pl_umi_nlos,
    (Scenario.INH, True): _pl_inh_los,
    (Scenario.INH, False): _pl_inh_nlos,
}


class ClampCounter:
    """Counts distances pulled back into the formula validity range."""

    def __init__(self):
        self.count = 0


CLAMPS = ClampCounter()


def clamp_distances(scenario, d2d, d3d, h_bs, h_ut, counter: Optional[ClampCounter] = CLAMPS):
    """Clamp (d2d, d3d) into the validity range of each scenario's formula."""
    scenario = np.asarray(scenario)
    d2d = np.asarray(d2d, dtype=float)
    d3d = np.asarray(d3d, dtype=float)
    dh = np.asarray(h_bs, dtype=float) - np.asarray(h_ut, dtype=float)
    lo = np.choose(scenario, [MIN_DISTANCE[s] for s in Scenario])
    hi = np.choose(scenario, [MAX_DISTANCE[s] for s in Scenario])
    inh = scenario == Scenario.INH
    # UMa/UMi formulas are bounded on d2D, InH on d3D
    bad2 = ~inh & ((d2d < lo) | (d2d > hi))
    new2 = np.where(bad2, np.clip(d2d, lo, hi), d2d)
    new3 = np.where(bad2, np.hypot(new2, dh), d3d)
    bad3 = inh & ((d3d < lo) | (d3d > hi))
    new3 = np.where(bad3, np.clip(d3d, lo, hi), new3)
    if counter is not None:
        counter.count += int(np.count_nonzero(bad2 | bad3))
    return new2, new3


def path_loss_array(scenario, los, d2d, d3d, h_bs, h_ut, fc_ghz=DEFAULT_FC_GHZ, clamp=True,
                    counter: Optional[ClampCounter] = CLAMPS):
    """Vectorised Table 7.4.1-1 path loss for mixed scenarios and LOS states."""
    scenario, los, d2d, d3d, h_bs, h_ut = np.broadcast_arrays(
        np.asarray(scenario), np.asarray(los, dtype=bool), np.asarray(d2d, float),
        np.asarray(d3d, float), np.asarray(h_bs, float), np.asarray(h_ut, float))
    if clamp:
        d2d, d3d = clamp_distances(scenario, d2d, d3d, h_bs, h_ut, counter)
    out = np.empty(d3d.shape)
    for (sc, is_los), fn in _PL.items():
        m = (scenario == sc) & (los == is_los)
        if np.any(m):
            out[m] = fn(d2d[m], d3d[m], h_bs[m], h_ut[m], fc_ghz)
    return out


def path_loss(link: LinkClass, los: bool, d3d: float, h_bs: float, h_ut: float,
              fc_ghz: float = DEFAULT_FC_GHZ) -> float:
    """Path loss of one link; the 2D distance follows from the heights."""
    d2d = math.sqrt(max(d3d ** 2 - (h_bs - h_ut) ** 2, 0.0))
    return float(path_loss_array(int(link.scenario), los and not link.forced_nlos, d2d, d3d, h_bs, h_ut, fc_ghz))


def los_probability_array(scenario, d2d, h_ut):
    scenario, d2d, h_ut = np.broadcast_arrays(np.asarray(scenario), np.asarray(d2d, float), np.asarray(h_ut, float))
    p = np.ones(d2d.shape)
    d = np.maximum(d2d, 1e-9)

    m = (scenario == Scenario.UMA) & (d2d > 18.0)
    if np.any(m):
        dm, hm = d[m], h_ut[m]
        c = np.where(hm <= 13.0, 0.0, ((np.clip(hm, 13.0, 23.0) - 13.0) / 10.0) ** 1.5)
        base = 18.0 / dm + np.exp(-dm / 63.0) * (1.0 - 18.0 / dm)
        p[m] = base * (1.0 + c * 1.25 * (dm / 100.0) ** 3 * np.exp(-dm / 150.0))

    m = (scenario == Scenario.UMI) & (d2d > 18.0)
    if np.any(m):
        dm = d[m]
        p[m] = 18.0 / dm + np.exp(-dm / 36.0) * (1.0 - 18.0 / dm)

    # indoor mixed office
    m = (scenario == Scenario.INH) & (d2d > 1.2) & (d2d < 6.5)
    p[m] = np.exp(-(d[m] - 1.2) / 4.7)
    m = (scenario == Scenario.INH) & (d2d >= 6.5)
    p[m] = np.exp(-(d[m] - 6.5) / 32.6) * 0.32
    return p


def los_probability(scenario: Scenario, d2d: float, h_ut: float = 1.5) -> float:
    return float(los_probability_array(int(scenario), d2d, h_ut))


def los_state(link: LinkClass, rng: np.random.Generator, d2d: float, h_ut: float = 1.5) -> bool:
    """Bernoulli LOS draw; links through a bus body are never LOS."""
    if link.forced_nlos:
        return False
    return bool(rng.uniform() < los_probability(link.scenario, d2d, h_ut))


def shadow_sigma(scenario, los):
    return _SIGMA_TABLE[np.asarray(scenario), np.where(np.asarray(los), 0, 1)]


def shadowing(scenario: Scenario, los: bool, rng: np.random.Generator, previous: Optional[float] = None,
              displacement: float = 0.0) -> float:
    """Log-normal shadowing in dB, optionally correlated with a previous value.

    ``previous`` is the last value for the same link and ``displacement``
    how far the link end points moved relative to each other since then.
    """
    sigma = float(shadow_sigma(int(scenario), los))
    if previous is None:
        return sigma * rng.standard_normal()
    dc = SHADOW_DCORR[Scenario(scenario)][0 if los else 1]
    rho = math.exp(-displacement / dc)
    return rho * previous + sigma * math.sqrt(1.0 - rho * rho) * rng.standard_normal()


# ---------------------------------------------------------------------------
# antennas
# ---------------------------------------------------------------------------

HPBW_DEG = 65.0
SLA_V_DB = 30.0
A_MAX_DB = 30.0


def element_attenuation(zenith_deg, azimuth_deg):
    """3GPP 3D element pattern relative to boresight (<= 0 dB).

    ``zenith_deg`` is measured from the local z axis (90 = boresight
    elevation), ``azimuth_deg`` from the boresight.
    """
    a_v = -np.minimum(12.0 * ((np.asarray(zenith_deg) - 90.0) / HPBW_DEG) ** 2, SLA_V_DB)
    a_h = -np.minimum(12.0 * (np.asarray(azimuth_deg) / HPBW_DEG) ** 2, A_MAX_DB)
    return -np.minimum(-(a_v + a_h), A_MAX_DB)


def local_angles(direction, azimuth_deg, tilt_deg):
    """Zenith/azimuth (degrees) of ``direction`` in a frame rotated by the
    boresight bearing and mechanical downtilt."""
    d = np.asarray(direction, dtype=float)
    a = np.radians(azimuth_deg)
    b = np.radians(tilt_deg)
    ca, sa = np.cos(a), np.sin(a)
    x1 = d[..., 0] * ca + d[..., 1] * sa
    y1 = -d[..., 0] * sa + d[..., 1] * ca
    z1 = d[..., 2]
    cb, sb = np.cos(b), np.sin(b)
    x2 = x1 * cb - z1 * sb
    z2 = x1 * sb + z1 * cb
    norm = np.sqrt(x2 ** 2 + y1 ** 2 + z2 ** 2)
    norm = np.where(norm > 0, norm, 1.0)
    zen = np.degrees(np.arccos(np.clip(z2 / norm, -1.0, 1.0)))
    az = np.degrees(np.arctan2(y1, x2))
    return zen, az


def antenna_gain(node: NetworkNode, direction_to_peer, serving: bool) -> float:
    """Gain (dBi) of ``node`` toward ``direction_to_peer``.

    With ``serving`` the beam is steered at the peer and the full array
    gain is added; otherwise only the element pattern applies.
    """
    ant = node.antenna
    g = ant.max_element_gain
    if ant.element_pattern is ElementPattern.TGPP3D:
        zen, az = local_angles(direction_to_peer, node.azimuth, ant.tilt)
        g += float(element_attenuation(zen, az))
    if serving:
        g += ant.array_gain_db
    return g


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

_KIND_CODE = {k: i for i, k in enumerate(NodeKind)}


def _classify_kinds(kind_a: NodeKind, kind_b: NodeKind, same_bus: bool) -> Scenario:
    kinds = {kind_a, kind_b}
    if NodeKind.MACRO in kinds:
        return Scenario.UMA
    if NodeKind.PICO in kinds or NodeKind.MIAB_MT in kinds:
        return Scenario.UMI
    inside = {NodeKind.MIAB_DU, NodeKind.PASSENGER}
    if same_bus and kinds <= inside:
        return Scenario.INH
    return Scenario.UMI


def _scenario_lookup() -> np.ndarray:
    n = len(NodeKind)
    tab = np.zeros((n, n, 2), dtype=np.int8)
    for a in NodeKind:
        for b in NodeKind:
            for same in (0, 1):
                tab[_KIND_CODE[a], _KIND_CODE[b], same] = int(_classify_kinds(a, b, bool(same)))
    return tab


_SCENARIO_TABLE = _scenario_lookup()


def bus_boxes(buses: Sequence[Bus]):
    if not buses:
        return np.zeros((0, 3)), np.zeros((0, 3))
    lo, hi = zip(*(b.box() for b in buses))
    return np.array(lo), np.array(hi)


def _inside(points, lo, hi, tol=1e-9):
    """(P, B) mask of points strictly inside boxes."""
    p = points[:, None, :]
    return np.all((p > lo[None] + tol) & (p < hi[None] - tol), axis=2)


def _segment_hits_box(a, b, lo, hi):
    """(M, B) mask: segment a->b intersects box (slab test)."""
    d = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo[None] - a[:, None, :]) * inv[:, None, :]
        t2 = (hi[None] - a[:, None, :]) * inv[:, None, :]
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # parallel axes: inside the slab -> [-inf, inf], outside -> empty
    par = (d == 0)[:, None, :]
    inslab = (a[:, None, :] >= lo[None]) & (a[:, None, :] <= hi[None])
    tmin = np.where(par, np.where(inslab, -np.inf, np.inf), tmin)
    tmax = np.where(par, np.where(inslab, np.inf, -np.inf), tmax)
    enter = np.max(tmin, axis=2)
    leave = np.min(tmax, axis=2)
    return (enter <= leave) & (leave >= 0.0) & (enter <= 1.0)


def penetration_counts(pa, pb, lo, hi):
    """Bus bodies crossed by each segment, capped at 2.

    A body counts once when exactly one end point is inside it, or when the
    segment passes through it with both end points outside. Two end points
    inside the same body do not cross it.
    """
    if len(lo) == 0:
        return np.zeros(len(pa), dtype=np.int8)
    ina = _inside(pa, lo, hi)
    inb = _inside(pb, lo, hi)
    through = _segment_hits_box(pa, pb, lo, hi) & ~ina & ~inb
    crossings = (ina ^ inb) | through
    return np.minimum(crossings.sum(axis=1), 2).astype(np.int8)


def classify(a: NetworkNode, b: NetworkNode, buses: Sequence[Bus] = ()) -> LinkClass:
    if a.id == b.id:
        raise ValueError("classify needs two distinct nodes")
    same_bus = a.bus_id is not None and a.bus_id == b.bus_id
    sc = Scenario(int(_SCENARIO_TABLE[_KIND_CODE[a.kind], _KIND_CODE[b.kind], int(same_bus)]))
    lo, hi = bus_boxes(buses)
    pen = int(penetration_counts(a.position[None], b.position[None], lo, hi)[0])
    return LinkClass(sc, forced_nlos=pen > 0, penetration_count=pen)


# ---------------------------------------------------------------------------
# fading
# ---------------------------------------------------------------------------

RICIAN_K_DB = 9.0


def block_fading_db(los, rng: np.random.Generator):
    """Loss perturbation -10 log10 |h|^2: Rician (K = 9 dB) for LOS,
    Rayleigh for NLOS. Unit mean power in both cases."""
    los = np.asarray(los, dtype=bool)
    k = 10.0 ** (RICIAN_K_DB / 10.0)
    g = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / math.sqrt(2.0)
    h = np.where(los, math.sqrt(k / (k + 1.0)) + g / math.sqrt(k + 1.0), g)
    return -10.0 * np.log10(np.maximum(np.abs(h) ** 2, 1e-12))


# ---------------------------------------------------------------------------
# per-run channel state
# ---------------------------------------------------------------------------

@dataclass
class ChannelConfig:
    fc_ghz: float = DEFAULT_FC_GHZ
    fading: bool = True
    fading_block_slots: int = 40  # 10 ms
    update_distance: float = 0.5  # m
    max_refresh_slots: int = 100


class ChannelState:
    """Pairwise large-scale state for every node pair of a scene.

    Loss matrices are symmetric; element gains are not (they depend on
    each end's orientation). Per-pair LOS and shadowing evolve as
    correlated Gaussian processes over the relative displacement of the
    pair, so a link stays consistent while its end points move little.
    """

    def __init__(self, nodes: Sequence[NetworkNode], config: ChannelConfig, rng: np.random.Generator):
        self.cfg = config
        self.rng = rng
        n = len(nodes)
        self.n = n
        self.kind_code = np.array([_KIND_CODE[nd.kind] for nd in nodes], dtype=np.int8)
        self.bus_of = np.array([-1 if nd.bus_id is None else nd.bus_id for nd in nodes])
        self.tilt = np.array([nd.antenna.tilt for nd in nodes])
        self.gmax = np.array([nd.antenna.max_element_gain for nd in nodes])
        self.is_3gpp = np.array([nd.antenna.element_pattern is ElementPattern.TGPP3D for nd in nodes])
        self.array_gain = np.array([nd.antenna.array_gain_db for nd in nodes])
        self.tx_power = np.array([nd.tx_power_dbm for nd in nodes])
        same = (self.bus_of[:, None] == self.bus_of[None, :]) & (self.bus_of[:, None] >= 0)
        self.scenario = _SCENARIO_TABLE[self.kind_code[:, None], self.kind_code[None, :], same.astype(int)]
        self.iu = np.triu_indices(n, 1)
        shape = (n, n)
        self.pen = np.zeros(shape, dtype=np.int8)
        self.los = np.zeros(shape, dtype=bool)
        self.pl = np.zeros(shape)
        self.sh = np.zeros(shape)
        self.fade = np.zeros(shape)
        self.elem = np.zeros(shape)  # elem[i, j]: element gain of i toward j
        self.d2d = np.zeros(shape)
        self.d3d = np.zeros(shape)
        self.z_los = np.zeros(shape)
        self.z_sh = np.zeros(shape)
        self.rel0 = np.zeros(shape + (3,))
        self.last = np.full(shape, -10 ** 9, dtype=np.int64)
        self.clamps = ClampCounter()
        self.refreshes = 0
        self.version = 0
        self._fade_block = None

    # -- refresh ----------------------------------------------------------

    def refresh(self, slot: int, positions: np.ndarray, azimuth: np.ndarray, buses: Sequence[Bus],
                force: bool = False) -> bool:
        """Recompute pairs that moved more than the update distance or whose
        state is older than ``max_refresh_slots``. Returns True if anything
        changed."""
        i, j = self.iu
        rel = positions[i] - positions[j]
        disp = np.linalg.norm(rel - self.rel0[i, j], axis=1)
        first = self.last[i, j] < -10 ** 8
        due = first | (disp > self.cfg.update_distance) | (slot - self.last[i, j] >= self.cfg.max_refresh_slots)
        if force:
            due[:] = True
        changed = False
        if np.any(due):
            self._update_pairs(slot, positions, azimuth, buses, i[due], j[due], rel[due], disp[due], first[due])
            changed = True
        if self.cfg.fading:
            block = slot // self.cfg.fading_block_slots
            if block != self._fade_block:
                self._fade_block = block
                f = block_fading_db(self.los[i, j], self.rng)
                self.fade[i, j] = f
                self.fade[j, i] = f
                changed = True
        if changed:
            self.version += 1
        return changed

    def _update_pairs(self, slot, pos, azimuth, buses, i, j, rel, disp, first):
        self.refreshes += 1
        rng = self.rng
        sc = self.scenario[i, j].astype(int)
        lo, hi = bus_boxes(buses)
        pen = penetration_counts(pos[i], pos[j], lo, hi)
        d2d = np.hypot(rel[:, 0], rel[:, 1])
        d3d = np.linalg.norm(rel, axis=1)
        h_bs = np.maximum(pos[i, 2], pos[j, 2])
        h_ut = np.minimum(pos[i, 2], pos[j, 2])

        # LOS: Gaussian process thresholded at the LOS probability
        rho = np.where(first, 0.0, np.exp(-disp / _LOS_DCORR_TABLE[sc]))
        z = rho * self.z_los[i, j] + np.sqrt(1.0 - rho ** 2) * rng.standard_normal(len(i))
        p = los_probability_array(sc, d2d, h_ut)
        los = (ndtr(z) < p) & (pen == 0)

        col = np.where(los, 0, 1)
        rho_sh = np.where(first, 0.0, np.exp(-disp / _SH_DCORR_TABLE[sc, col]))
        zs = rho_sh * self.z_sh[i, j] + np.sqrt(1.0 - rho_sh ** 2) * rng.standard_normal(len(i))
        sh = _SIGMA_TABLE[sc, col] * zs
        pl = path_loss_array(sc, los, d2d, d3d, h_bs, h_ut, self.cfg.fc_ghz, counter=self.clamps)

        # element gains in both directions
        g_ij = self._element_gain(i, rel * -1.0, azimuth)
        g_ji = self._element_gain(j, rel, azimuth)

        for a, b in ((i, j), (j, i)):
            self.pen[a, b] = pen
            self.los[a, b] = los
            self.pl[a, b] = pl
            self.sh[a, b] = sh
            self.z_los[a, b] = z
            self.z_sh[a, b] = zs
            self.d2d[a, b] = d2d
            self.d3d[a, b] = d3d
            self.last[a, b] = slot
        self.rel0[i, j] = rel
        self.rel0[j, i] = -rel
        self.elem[i, j] = g_ij
        self.elem[j, i] = g_ji

    def _element_gain(self, node_idx, direction, azimuth):
        g = self.gmax[node_idx].copy()
        m = self.is_3gpp[node_idx]
        if np.any(m):
            zen, az = local_angles(direction[m], azimuth[node_idx[m]], self.tilt[node_idx[m]])
            g[m] += element_attenuation(zen, az)
        return g

    # -- derived matrices ---------------------------------------------------

    def coupling_loss(self) -> np.ndarray:
        """Path loss + shadowing + penetration + fading, no antenna gains."""
        L = self.pl + self.sh + PENETRATION_DB * self.pen + self.fade
        np.fill_diagonal(L, np.inf)
        return L

    def large_scale_loss(self) -> np.ndarray:
        """Like :meth:`coupling_loss` without the fading term."""
        L = self.pl + self.sh + PENETRATION_DB * self.pen
        np.fill_diagonal(L, np.inf)
        return L

    def link_state(self, a: int, b: int, serving: bool = False) -> LinkState:
        sc = Scenario(int(self.scenario[a, b]))
        pen = int(self.pen[a, b])
        lc = LinkClass(sc, forced_nlos=pen > 0, penetration_count=pen)
        tx = self.elem[a, b] + (self.array_gain[a] if serving else 0.0)
        rx = self.elem[b, a] + (self.array_gain[b] if serving else 0.0)
        return LinkState(lc, bool(self.los[a, b]), float(self.pl[a, b]), float(self.sh[a, b]),
                         PENETRATION_DB * pen, float(tx), float(rx), float(self.fade[a, b]))

    def dump_rows(self, slot: int, ids: Optional[Sequence[int]] = None) -> List[str]:
        i, j = self.iu
        rows = []
        for a, b in zip(i.tolist(), j.tolist()):
            st = self.link_state(a, b)
            na, nb = (a, b) if ids is None else (ids[a], ids[b])
            rows.append(
                f"{slot},{na},{nb},{st.link_class.scenario.label},{int(st.los)},{st.path_loss_db:.4f},"
                f"{st.shadowing_db:.4f},{st.penetration_db:.1f},{st.total_loss_db:.4f}"
            )
        return rows


CHANNEL_CSV_HEADER = "slot,node_a,node_b,class,los,pl_db,sh_db,pen_db,total_db"
