"""Slot-driven system-level engine.

Each slot runs: mobility, (throttled) channel refresh, attachment refresh,
CBR traffic, per-cell round-robin scheduling under the frame pattern,
SINR evaluation over the realised transmitter set, threshold decoding with
OLLA, and two-hop forwarding through the mIAB nodes.

Traffic bookkeeping uses cumulative bit counters per flow. A flow's bits
``[0, gen)`` have been generated, ``[0, c1)`` have crossed the first hop
and ``[0, c2)`` have reached their destination. Single-hop flows keep
``c1 == c2``. Because every flow emits a packet on the same slots, packet
``k`` of any flow covers bits ``[k * 3072, (k + 1) * 3072)`` and was
created at slot ``4 * k``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import radio
from .channel import ChannelConfig, ChannelState
from .frame import FramePattern, InvalidPatternError, SlotDirection, get_pattern, load_pattern
from .metrics import CATEGORIES, MetricsBundle
from .mobility import SLOT_DURATION, EntityKind, GridMobility, MobileState, speeds_for
from .scenario import (
    DEPLOYMENTS,
    DU_OFFSET,
    MT_OFFSET,
    REGIMES,
    NodeKind,
    PlacementConfig,
    PopulationCounts,
    Scene,
    build_scene,
    seat_offsets,
)

PACKET_BITS = 3072
PACKET_INTERVAL = 4  # slots
SLOT_MS = SLOT_DURATION * 1e3
MIAB_PATTERNS = ("no_silence", "with_silence")
FIXED_PATTERNS = ("macro_only",)


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    regime: str = "not_limited"
    deployment: str = "miab"
    frame_pattern: str = "with_silence"  # built-in name or path to a pattern file
    duration_ms: float = 2000.0
    seed: int = 0
    fading: bool = True
    ul_flows: bool = True
    hysteresis_db: float = 3.0
    attach_interval: int = 100  # slots
    refresh_interval: int = 10  # slots between channel update checks
    # Scheduler calibration. "need" stops each grant at its queue, which keeps
    # idle RBs from adding interference; "spread" hands leftovers to whoever is
    # backlogged. "riders" gives an MT one round-robin share per backlogged
    # passenger; "citizen" gives it a single share.
    rb_fill: str = "need"
    backhaul_share: str = "riders"
    mcs_table: Optional[str] = None
    fc_ghz: float = 28.0
    counts: PopulationCounts = field(default_factory=PopulationCounts)
    placement: PlacementConfig = field(default_factory=PlacementConfig)

    @property
    def n_slots(self) -> int:
        return int(round(self.duration_ms / SLOT_MS))

    def pattern(self) -> FramePattern:
        try:
            return get_pattern(self.frame_pattern)
        except KeyError:
            p = Path(self.frame_pattern)
            if p.is_file():
                try:
                    return load_pattern(p)
                except InvalidPatternError as e:
                    raise ConfigError(f"{p}: {e}") from None
            raise ConfigError(f"unknown frame pattern {self.frame_pattern!r}") from None

    def validate(self) -> "SimConfig":
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.deployment not in DEPLOYMENTS:
            raise ConfigError(f"deployment must be one of {DEPLOYMENTS}, got {self.deployment!r}")
        if self.duration_ms <= 0 or self.n_slots < 1:
            raise ConfigError("duration_ms must cover at least one slot")
        if self.rb_fill not in ("spread", "need"):
            raise ConfigError(f"rb_fill must be 'spread' or 'need', got {self.rb_fill!r}")
        if self.backhaul_share not in ("citizen", "riders"):
            raise ConfigError(f"backhaul_share must be 'citizen' or 'riders', got {self.backhaul_share!r}")
        if self.attach_interval < 1 or self.refresh_interval < 1:
            raise ConfigError("intervals must be positive")
        try:
            self.counts.check()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        pat = self.pattern()
        if self.deployment == "miab":
            if not pat.has_miab_rows:
                raise ConfigError(f"deployment miab needs a three-row pattern, {self.frame_pattern!r} has one row")
            for t, (a, b) in enumerate(zip(pat.donor_access, pat.backhaul)):
                # the donor cannot send and receive in the same slot
                if a.is_active and b.is_active and a.is_dl != b.is_dl:
                    raise ConfigError(f"slot {t}: donor access {a.value} and backhaul {b.value} conflict")
        elif pat.has_miab_rows:
            raise ConfigError(f"pattern {self.frame_pattern!r} has mIAB rows but deployment is {self.deployment}")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["counts"] = dataclasses.asdict(self.counts)
        d["placement"] = dataclasses.asdict(self.placement)
        return d


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _coerce(value: str, current):
    if isinstance(current, bool):
        try:
            return _BOOL[value.lower()]
        except KeyError:
            raise ConfigError(f"not a boolean: {value!r}") from None
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    if isinstance(current, tuple):
        return tuple(float(x) for x in value.replace(",", " ").split())
    if current is None:
        for conv in (int, float):
            try:
                return conv(value)
            except ValueError:
                pass
        return None if value.lower() == "none" else value
    return value


def parse_config(text: str, base: Optional[SimConfig] = None) -> SimConfig:
    """Parse ``key = value`` lines. Nested fields use a dotted prefix, for
    example ``placement.pico_radius_limited = 60``."""
    cfg = dataclasses.replace(base) if base is not None else SimConfig()
    counts = dataclasses.asdict(cfg.counts)
    placement = dataclasses.asdict(cfg.placement)
    top = {f.name for f in dataclasses.fields(SimConfig)} - {"counts", "placement"}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("counts."):
            sub = key[7:]
            if sub not in counts:
                raise ConfigError(f"line {n}: unknown key {key!r}")
            counts[sub] = int(value)
        elif key.startswith("placement."):
            sub = key[10:]
            if sub not in placement:
                raise ConfigError(f"line {n}: unknown key {key!r}")
            placement[sub] = _coerce(value, placement[sub])
        elif key in top:
            try:
                setattr(cfg, key, _coerce(value, getattr(cfg, key)))
            except ValueError as e:
                raise ConfigError(f"line {n}: {e}") from None
        else:
            raise ConfigError(f"line {n}: unknown key {key!r}")
    placement = {k: tuple(v) if isinstance(v, list) else v for k, v in placement.items()}
    cfg.counts = PopulationCounts(**counts)
    cfg.placement = PlacementConfig(**placement)
    return cfg


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# small building blocks
# ---------------------------------------------------------------------------

@dataclass
class PacketRecord:
    id: int
    flow: int
    size: int
    created_slot: int
    delivered_slot: Optional[int] = None
    hops: int = 0


def generate_traffic(slot: int, flows: Sequence[int], first_id: int = 0) -> List[PacketRecord]:
    """One packet per flow every ``PACKET_INTERVAL`` slots from slot 0."""
    if slot % PACKET_INTERVAL:
        return []
    return [PacketRecord(first_id + i, f, PACKET_BITS, slot) for i, f in enumerate(flows)]


def split_rbs(needs: Sequence[int], n_rb: int = radio.N_RB, spread: bool = True,
              weights: Optional[Sequence[int]] = None) -> List[int]:
    """Round-robin RB split with water-filling.

    ``needs`` is already in round-robin order. RBs are shared in proportion
    to ``weights`` (equal by default); a citizen that needs fewer keeps only
    what it needs and the rest is re-shared. Rounding remainders go one RB
    at a time to the earliest citizens in the order. With ``spread``, RBs
    nobody needs are finally spread over all citizens, so a backlogged
    cell always uses the whole carrier.
    """
    n = len(needs)
    alloc = [0] * n
    if n == 0:
        return alloc
    w = [1] * n if weights is None else [max(int(x), 1) for x in weights]

    def shares(remaining, members):
        tot = sum(w[i] for i in members)
        out = [remaining * w[i] // tot for i in members]
        for k in range(remaining - sum(out)):
            out[k] += 1
        return out

    remaining = n_rb
    active = [i for i in range(n) if needs[i] > 0]
    while remaining > 0 and active:
        given = 0
        still = []
        for i, share in zip(active, shares(remaining, active)):
            g = min(needs[i] - alloc[i], share)
            alloc[i] += g
            given += g
            if alloc[i] < needs[i]:
                still.append(i)
        remaining -= given
        active = still
        if given == 0:
            break
    if spread and remaining > 0:
        for i, share in zip(range(n), shares(remaining, list(range(n)))):
            alloc[i] += share
    return alloc


@dataclass
class Citizen:
    """A scheduling candidate of one cell in one slot."""

    tx: int
    rx: int
    queue: int  # bits
    category: str  # "access" | "backhaul"
    action: str  # bookkeeping to apply on success
    ref: int  # UE index (access) or bus index (backhaul)
    weight: int = 1  # round-robin shares this citizen receives


@dataclass
class Allocation:
    citizen: Citizen
    rb_lo: int
    rb_hi: int
    mcs: int
    tb_bits: int

    @property
    def n_rb(self) -> int:
        return self.rb_hi - self.rb_lo


def schedule_cell(citizens: List[Citizen], need_rb: Sequence[int], start: int) -> List[Tuple[Citizen, int, int]]:
    """Contiguous RB blocks for backlogged citizens, round-robin from ``start``."""
    if not citizens:
        return []
    n = len(citizens)
    order = [(start + k) % n for k in range(n)]
    alloc = split_rbs([need_rb[i] for i in order])
    out = []
    lo = 0
    for i, a in zip(order, alloc):
        if a > 0:
            out.append((citizens[i], lo, lo + a))
            lo += a
    return out


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

@dataclass
class TxRecord:
    slot: int
    tx: int
    rx: int
    category: str
    direction: str  # "DL" | "UL"
    n_rb: int
    mcs: int
    sinr_db: float
    ok: bool


class Simulator:
    """One run of one configuration.

    ``trace`` keeps a :class:`TxRecord` per transmission (tests use it to
    check frame compliance). ``on_refresh(sim, slot)`` is called after
    every channel refresh that changed something.
    """

    def __init__(self, config: SimConfig, trace: bool = False,
                 on_refresh: Optional[Callable[["Simulator", int], None]] = None):
        self.cfg = config.validate()
        self.pattern = config.pattern()
        self.table = radio.McsTable.load(config.mcs_table)
        self.trace = trace
        self._spread = config.rb_fill == "spread"
        self._per_rider = config.backhaul_share == "riders"
        self.tx_log: List[TxRecord] = []
        self.on_refresh = on_refresh
        self.scene: Scene = build_scene(config.regime, config.deployment, config.seed, config.counts,
                                        config.placement)
        self._setup_nodes()
        self._setup_mobility()
        self._setup_channel()
        self._setup_flows()
        self.slot = 0

    # -- setup ------------------------------------------------------------

    def _setup_nodes(self):
        nodes = self.scene.nodes
        self.N = len(nodes)
        self.kind = [n.kind for n in nodes]
        ids = self.scene.ids
        self.macros = ids(NodeKind.MACRO)
        self.picos = ids(NodeKind.PICO)
        self.fixed = self.macros + self.picos
        self.dus = ids(NodeKind.MIAB_DU)
        self.mts = ids(NodeKind.MIAB_MT)
        self.cells = self.fixed + self.dus
        self.ues = ids(NodeKind.PEDESTRIAN) + ids(NodeKind.PASSENGER)
        self.ue_index = {u: i for i, u in enumerate(self.ues)}
        self.pos = self.scene.positions.copy()
        self.azimuth = np.array([n.azimuth for n in nodes])
        self.p_re_dbm = radio.per_re_power_dbm(np.array([n.tx_power_dbm for n in nodes]))
        self.p_re_mw = radio.mw(self.p_re_dbm)
        self.noise_mw = float(radio.mw(radio.NOISE_PER_RE_DBM))
        self.du_bus = {b.du_node: k for k, b in enumerate(self.scene.buses) if b.du_node >= 0}
        self.seats = seat_offsets()

    def _setup_mobility(self):
        pop = self.scene.population
        v_bus, v_ped = speeds_for(self.cfg.regime)
        states = [MobileState.from_track(EntityKind.BUS, t, v_bus) for t in pop.bus_tracks]
        states += [MobileState.from_track(EntityKind.PEDESTRIAN, t, v_ped) for t in pop.pedestrian_tracks]
        ss = np.random.SeedSequence(self.cfg.seed, spawn_key=(1,))
        rngs = [np.random.default_rng(s) for s in ss.spawn(len(states))]
        self.mobility = GridMobility(self.scene.layout, states, rngs)
        self.n_buses = len(pop.bus_tracks)
        self.ped_nodes = np.array(self.scene.ids(NodeKind.PEDESTRIAN), dtype=int)
        self._bus_body = []
        for bus in self.scene.buses:
            ids, offs = [], []
            if bus.du_node >= 0:
                ids += [bus.du_node, bus.mt_node]
                offs += [DU_OFFSET, MT_OFFSET]
            ids += bus.passenger_nodes
            offs += [self.seats[s] for s in bus.seats]
            self._bus_body.append((np.array(ids, dtype=int), np.array(offs).reshape(-1, 2)))

    def _sync_positions(self):
        xy = self.mobility.positions()
        hd = self.mobility.headings()
        for k, bus in enumerate(self.scene.buses):
            bus.center = xy[k]
            bus.heading = hd[k]
            ids, offs = self._bus_body[k]
            if len(ids):
                self.pos[ids, :2] = bus.to_world(offs)
            if bus.du_node >= 0:
                az = math.degrees(math.atan2(hd[k, 1], hd[k, 0]))
                self.azimuth[bus.du_node] = az
                self.azimuth[bus.mt_node] = az
        self.pos[self.ped_nodes, :2] = xy[self.n_buses:]

    def _setup_channel(self):
        ccfg = ChannelConfig(fc_ghz=self.cfg.fc_ghz, fading=self.cfg.fading)
        rng = np.random.default_rng(np.random.SeedSequence(self.cfg.seed, spawn_key=(2,)))
        self.channel = ChannelState(self.scene.nodes, ccfg, rng)
        self.arr = self.channel.array_gain
        n = self.N
        self.serving = np.full(n, -1, dtype=int)  # serving cell (UEs) or donor (MTs)
        self.est = np.full((n, n), np.nan)  # last realised SINR per (tx, rx)
        self.olla = np.zeros((n, n))
        self.handovers = 0
        self._cand_ue = np.array(self.cells, dtype=int)
        self._cand_mt = np.array(self.macros, dtype=int)

    def _update_links(self):
        ch = self.channel
        base = ch.elem + ch.elem.T - ch.coupling_loss()
        self.g_int = np.where(np.isfinite(base), 10.0 ** (base / 10.0), 0.0)
        self.s_db = self.p_re_dbm[:, None] + base + self.arr[:, None] + self.arr[None, :]

    def _setup_flows(self):
        U = len(self.ues)
        self.U = U
        self.n_flows = 2 * U if self.cfg.ul_flows else U
        self.gen = 0
        self.c1 = np.zeros(self.n_flows, dtype=np.int64)
        self.c2 = np.zeros(self.n_flows, dtype=np.int64)
        n_pk = -(-self.cfg.n_slots // PACKET_INTERVAL)
        self.deliver_slot = np.full((U, n_pk), -1, dtype=np.int32)
        self.hop1_slot = np.full((U, n_pk), -1, dtype=np.int32)
        self.active_slots = np.zeros(U, dtype=np.int64)
        self.rr = {c: 0 for c in self.cells}
        self.mcs_hist = {c: np.zeros(len(self.table), dtype=np.int64) for c in CATEGORIES}
        self.tx_count = {c: 0 for c in CATEGORIES}
        self.err_count = {c: 0 for c in CATEGORIES}
        self.cell_ues: Dict[int, np.ndarray] = {c: np.zeros(0, dtype=int) for c in self.cells}
        self.mt_donor = {}

    # -- topology ------------------------------------------------------------

    def rsrp_matrix(self) -> np.ndarray:
        ch = self.channel
        return (self.p_re_dbm[:, None] + ch.elem + ch.elem.T + self.arr[:, None] + self.arr[None, :]
                - ch.large_scale_loss())

    def _refresh_attachment(self):
        R = self.rsrp_matrix()
        ues = np.array(self.ues, dtype=int)
        old = self.serving.copy()
        if len(ues) and len(self._cand_ue):
            rows = R[self._cand_ue][:, ues].T
            cur = old[ues]
            cur_idx = np.full(len(ues), -1)
            for k, c in enumerate(self._cand_ue):
                cur_idx[cur == c] = k
            pick = radio.attach_array(rows, cur_idx, self.cfg.hysteresis_db)
            self.serving[ues] = np.where(pick >= 0, self._cand_ue[np.maximum(pick, 0)], -1)
        if self.mts:
            mts = np.array(self.mts, dtype=int)
            rows = R[self._cand_mt][:, mts].T
            cur = old[mts]
            cur_idx = np.full(len(mts), -1)
            for k, c in enumerate(self._cand_mt):
                cur_idx[cur == c] = k
            pick = radio.attach_array(rows, cur_idx, self.cfg.hysteresis_db)
            self.serving[mts] = self._cand_mt[pick]
        changed = (old != self.serving) & (old >= 0)
        self.handovers += int(np.count_nonzero(changed))
        # bits held by a relay the UE has left go back to their first hop
        for u in ues[changed[ues]]:
            if self.kind[old[u]] is NodeKind.MIAB_DU:
                i = self.ue_index[u]
                self.c1[i] = self.c2[i]
                if self.cfg.ul_flows:
                    self.c1[self.U + i] = self.c2[self.U + i]
        srv = self.serving[ues]
        self.cell_ues = {c: np.flatnonzero(srv == c) for c in self.cells}
        for k, bus in enumerate(self.scene.buses):
            if bus.mt_node >= 0:
                self.mt_donor[k] = int(self.serving[bus.mt_node])

    # -- per-slot phases ------------------------------------------------------

    def _mcs_for(self, tx: int, rx: int) -> int:
        e = self.est[tx, rx]
        if e != e:  # no measurement yet: noise-limited estimate
            e = self.s_db[tx, rx] - radio.NOISE_PER_RE_DBM
        return int(radio.select_mcs_array(e + self.olla[tx, rx], self.table))

    def _citizens(self, slot: int) -> Tuple[Dict[int, List[Citizen]], Dict[int, str]]:
        pat = self.pattern
        P = self.gen
        U = self.U
        dl_first = P - self.c1[:U]
        dl_relay = self.c1[:U] - self.c2[:U]
        if self.cfg.ul_flows:
            ul_first = P - self.c1[U:]
            ul_relay = self.c1[U:] - self.c2[U:]
        out: Dict[int, List[Citizen]] = {}
        dirs: Dict[int, str] = {}
        da = pat.direction("donor_access", slot)
        if pat.has_miab_rows:
            bh = pat.direction("backhaul", slot)
            ma = pat.direction("miab_access", slot)
        else:
            bh = ma = SlotDirection.SILENT
        ues = self.ues
        for c in self.fixed:
            cits: List[Citizen] = []
            d = None
            if da.is_active:
                d = "DL" if da.is_dl else "UL"
                for i in self.cell_ues[c]:
                    if d == "DL":
                        q = int(dl_first[i])
                        if q > 0:
                            cits.append(Citizen(c, ues[i], q, "access", "dl_direct", int(i)))
                    elif self.cfg.ul_flows:
                        q = int(ul_first[i])
                        if q > 0:
                            cits.append(Citizen(ues[i], c, q, "access", "ul_direct", int(i)))
            if bh.is_active and self.kind[c] is NodeKind.MACRO:
                dbh = "DL" if bh.is_dl else "UL"
                if d is None or d == dbh:
                    d = dbh
                    for k, donor in self.mt_donor.items():
                        if donor != c:
                            continue
                        mt = self.scene.buses[k].mt_node
                        riders = self.cell_ues[self.scene.buses[k].du_node]
                        per = dl_first[riders] if dbh == "DL" else (ul_relay[riders] if self.cfg.ul_flows else None)
                        if per is None:
                            continue
                        q = int(per.sum())
                        if q > 0:
                            wt = int(np.count_nonzero(per)) if self._per_rider else 1
                            if dbh == "DL":
                                cits.append(Citizen(c, mt, q, "backhaul", "dl_backhaul", k, wt))
                            else:
                                cits.append(Citizen(mt, c, q, "backhaul", "ul_backhaul", k, wt))
            if cits:
                out[c] = cits
                dirs[c] = d
        if ma.is_active:
            d = "DL" if ma.is_dl else "UL"
            for du in self.dus:
                cits = []
                for i in self.cell_ues[du]:
                    if d == "DL":
                        q = int(dl_relay[i])
                        if q > 0:
                            cits.append(Citizen(du, ues[i], q, "access", "dl_relay", int(i)))
                    elif self.cfg.ul_flows:
                        q = int(ul_first[i])
                        if q > 0:
                            cits.append(Citizen(ues[i], du, q, "access", "ul_relay", int(i)))
                if cits:
                    out[du] = cits
                    dirs[du] = d
        return out, dirs

    def _schedule(self, slot: int):
        """Allocate RBs in every cell; returns (citizens, directions, mcs, lo, hi)."""
        cits, dirs = self._citizens(slot)
        flat: List[Citizen] = [ct for cl in cits.values() for ct in cl]
        if not flat:
            return None
        tx = np.fromiter((ct.tx for ct in flat), dtype=int, count=len(flat))
        rx = np.fromiter((ct.rx for ct in flat), dtype=int, count=len(flat))
        q = np.fromiter((ct.queue for ct in flat), dtype=np.int64, count=len(flat))
        est = self.est[tx, rx]
        est = np.where(np.isnan(est), self.s_db[tx, rx] - radio.NOISE_PER_RE_DBM, est)
        mcs = radio.select_mcs_array(est + self.olla[tx, rx], self.table)
        per_rb = np.floor(radio.RE_PER_RB * self.table.spectral_efficiency[mcs]).astype(np.int64)
        need = np.maximum(1, -(-q // per_rb))
        sel, d_out, lo_out, hi_out = [], [], [], []
        k0 = 0
        for c, cl in cits.items():
            n = len(cl)
            start = self.rr[c] % n
            self.rr[c] += 1
            order = [(start + k) % n for k in range(n)]
            alloc = split_rbs([int(need[k0 + i]) for i in order], spread=self._spread,
                              weights=[cl[i].weight for i in order])
            lo = 0
            for i, a in zip(order, alloc):
                if a > 0:
                    sel.append(k0 + i)
                    d_out.append(dirs[c])
                    lo_out.append(lo)
                    hi_out.append(lo + a)
                    lo += a
            k0 += n
        sel = np.array(sel, dtype=int)
        return ([flat[i] for i in sel], d_out, mcs[sel], np.array(lo_out), np.array(hi_out))

    def _transmit(self, slot: int, sched):
        if sched is None:
            return
        cits, dirs, mcs, lo, hi = sched
        n = len(cits)
        tx = np.fromiter((ct.tx for ct in cits), dtype=int, count=n)
        rx = np.fromiter((ct.rx for ct in cits), dtype=int, count=n)
        rb = np.arange(radio.N_RB)
        mask = (rb[None, :] >= lo[:, None]) & (rb[None, :] < hi[:, None])  # (n, N_RB)
        p = self.p_re_mw[tx]
        C = self.g_int[np.ix_(tx, rx)]  # C[a, b]: coupling of transmitter a into receiver b
        # interference per RB at each receiver, from every allocation of this slot
        I_rb = (mask * p[:, None]).T @ C  # (N_RB, n)
        n_rb = hi - lo
        i_mw = np.einsum("bk,kb->b", mask, I_rb) / n_rb - p * np.diag(C)
        i_mw = np.maximum(i_mw, 0.0)
        sinr_db = self.s_db[tx, rx] - 10.0 * np.log10(i_mw + self.noise_mw)
        ok = radio.decode_ok(sinr_db, mcs, self.table)
        self.est[tx, rx] = sinr_db
        self.olla[tx, rx] = radio.olla_update_array(self.olla[tx, rx], ok)
        se = self.table.spectral_efficiency
        tb = np.floor(n_rb * radio.RE_PER_RB * se[mcs]).astype(np.int64)
        for k, ct in enumerate(cits):
            cat = ct.category
            self.mcs_hist[cat][mcs[k]] += 1
            self.tx_count[cat] += 1
            if not ok[k]:
                self.err_count[cat] += 1
            elif tb[k] > 0:
                self._deliver(slot, ct, int(min(tb[k], ct.queue)))
            if self.trace:
                self.tx_log.append(TxRecord(slot, ct.tx, ct.rx, cat, dirs[k], int(n_rb[k]), int(mcs[k]),
                                            float(sinr_db[k]), bool(ok[k])))

    def _deliver(self, slot: int, ct: Citizen, bits: int):
        U = self.U
        act = ct.action
        if act == "dl_direct":
            i = ct.ref
            old = self.c2[i]
            self.c1[i] += bits
            self.c2[i] += bits
            self._mark(self.hop1_slot, i, self.c1[i] - bits, self.c1[i], slot)
            self._mark(self.deliver_slot, i, old, self.c2[i], slot)
        elif act == "dl_relay":
            i = ct.ref
            old = self.c2[i]
            self.c2[i] += bits
            self._mark(self.deliver_slot, i, old, self.c2[i], slot)
        elif act == "ul_direct":
            f = U + ct.ref
            self.c1[f] += bits
            self.c2[f] += bits
        elif act == "ul_relay":
            self.c1[U + ct.ref] += bits
        elif act == "dl_backhaul":
            riders = self.cell_ues[self.scene.buses[ct.ref].du_node]
            for i, b in self._fifo(riders, self.gen - self.c1[riders], self.c1[riders], bits):
                self.c1[i] += b
                self._mark(self.hop1_slot, i, self.c1[i] - b, self.c1[i], slot)
        elif act == "ul_backhaul":
            riders = self.cell_ues[self.scene.buses[ct.ref].du_node]
            f = U + riders
            for j, b in self._fifo(f, self.c1[f] - self.c2[f], self.c2[f], bits):
                self.c2[j] += b

    @staticmethod
    def _fifo(flows: np.ndarray, queue: np.ndarray, head: np.ndarray, bits: int):
        """Serve ``bits`` across flows oldest packet first (ties by flow id).

        ``head`` is the cumulative position of each flow's queue front.
        """
        out = []
        q = queue.astype(np.int64).copy()
        h = head.astype(np.int64).copy()
        while bits > 0:
            live = np.flatnonzero(q > 0)
            if not len(live):
                break
            pk = h[live] // PACKET_BITS
            kmin = pk.min()
            for j in live[pk == kmin]:
                if bits <= 0:
                    break
                room = min(int(q[j]), (kmin + 1) * PACKET_BITS - int(h[j]), bits)
                out.append((int(flows[j]), room))
                q[j] -= room
                h[j] += room
                bits -= room
        return out

    @staticmethod
    def _mark(arr: np.ndarray, i: int, old: int, new: int, slot: int):
        """Stamp packets completed when a counter moves from ``old`` to ``new``."""
        k0 = int(old) // PACKET_BITS
        k1 = int(new) // PACKET_BITS
        if k1 > k0:
            arr[i, k0:min(k1, arr.shape[1])] = slot

    def step(self):
        t = self.slot
        self.mobility.step(SLOT_DURATION)
        if t % self.cfg.refresh_interval == 0:
            self._sync_positions()
            if self.channel.refresh(t, self.pos, self.azimuth, self.scene.buses):
                self._update_links()
                if self.on_refresh is not None:
                    self.on_refresh(self, t)
        if t % self.cfg.attach_interval == 0:
            self._refresh_attachment()
        if t % PACKET_INTERVAL == 0:
            self.gen += PACKET_BITS
        self.active_slots += (self.gen - self.c2[:self.U]) > 0
        self._transmit(t, self._schedule(t))
        self.slot += 1

    def run(self) -> MetricsBundle:
        while self.slot < self.cfg.n_slots:
            self.step()
        return self.metrics()

    # -- results ------------------------------------------------------------

    def metrics(self) -> MetricsBundle:
        U = self.U
        created = np.arange(self.deliver_slot.shape[1]) * PACKET_INTERVAL
        lat = []
        for i in range(U):
            d = self.deliver_slot[i]
            m = d >= 0
            lat.append((d[m] - created[m]).astype(np.int64))
        cls = np.array([self.kind[u].value for u in self.ues])
        gen = np.full(U, self.gen, dtype=np.int64)
        ul_gen = gen.copy() if self.cfg.ul_flows else np.zeros(0, dtype=np.int64)
        ul_del = self.c2[U:].copy() if self.cfg.ul_flows else np.zeros(0, dtype=np.int64)
        counters = {
            "handovers": self.handovers,
            "distance_clamps": self.channel.clamps.count,
            "channel_refreshes": self.channel.refreshes,
        }
        return MetricsBundle(
            config=self.cfg.to_dict(), seed=self.cfg.seed, n_slots=self.slot, slot_ms=SLOT_MS,
            ue_ids=np.array(self.ues), ue_class=cls, generated_bits=gen, delivered_bits=self.c2[:U].copy(),
            active_slots=self.active_slots.copy(), packet_latency_slots=lat,
            mcs_hist={k: v.copy() for k, v in self.mcs_hist.items()},
            tx_count=dict(self.tx_count), error_count=dict(self.err_count),
            ul_generated_bits=ul_gen, ul_delivered_bits=ul_del, counters=counters,
        )


def run(config: SimConfig) -> MetricsBundle:
    return Simulator(config).run()
