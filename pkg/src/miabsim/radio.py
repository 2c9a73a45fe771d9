"""Link-level abstraction: RSRP, cell attachment, SINR, MCS selection with
outer-loop link adaptation (OLLA) and transport-block sizing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

N_RB = 66
SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_SLOT = 14
RE_PER_RB = SUBCARRIERS_PER_RB * SYMBOLS_PER_SLOT
N_SUBCARRIERS = N_RB * SUBCARRIERS_PER_RB
SUBCARRIER_SPACING_HZ = 60e3
NOISE_DENSITY_DBM_HZ = -174.0
NOISE_FIGURE_DB = 9.0

OLLA_STEP_DOWN = 1.0
OLLA_STEP_UP = 0.1
OLLA_MIN = -15.0
OLLA_MAX = 5.0


def mw(dbm):
    return 10.0 ** (np.asarray(dbm) / 10.0)


def dbm(mw_value):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(mw_value)


def noise_dbm(n_subcarriers: int = 1) -> float:
    """Thermal noise plus noise figure over ``n_subcarriers`` 60 kHz subcarriers."""
    return NOISE_DENSITY_DBM_HZ + 10.0 * math.log10(n_subcarriers * SUBCARRIER_SPACING_HZ) + NOISE_FIGURE_DB


NOISE_PER_RE_DBM = noise_dbm(1)


def per_re_power_dbm(tx_power_dbm):
    """Total power spread evenly over every subcarrier of the carrier."""
    return np.asarray(tx_power_dbm) - 10.0 * math.log10(N_SUBCARRIERS)


# ---------------------------------------------------------------------------
# MCS table
# ---------------------------------------------------------------------------

class InvalidTableError(ValueError):
    pass


@dataclass(frozen=True)
class McsTable:
    min_sinr_db: np.ndarray
    spectral_efficiency: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.min_sinr_db, dtype=float)
        se = np.asarray(self.spectral_efficiency, dtype=float)
        if th.ndim != 1 or th.shape != se.shape or len(th) == 0:
            raise InvalidTableError("thresholds and efficiencies must be equal-length 1-D arrays")
        if np.any(np.diff(th) <= 0):
            raise InvalidTableError("min_sinr_db must be strictly increasing")
        if np.any(np.diff(se) <= 0):
            raise InvalidTableError("spectral_efficiency must be strictly increasing")
        object.__setattr__(self, "min_sinr_db", th)
        object.__setattr__(self, "spectral_efficiency", se)

    def __len__(self):
        return len(self.min_sinr_db)

    @classmethod
    def parse(cls, text: str) -> "McsTable":
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise InvalidTableError(f"bad MCS row {line!r}")
            rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
        rows.sort()
        idx = [r[0] for r in rows]
        if idx != list(range(len(rows))):
            raise InvalidTableError("MCS indices must be 0..n-1 without gaps")
        return cls(np.array([r[1] for r in rows]), np.array([r[2] for r in rows]))

    @classmethod
    def load(cls, path=None) -> "McsTable":
        if path is None:
            text = resources.files("miabsim").joinpath("data/mcs_table.csv").read_text()
        else:
            text = Path(path).read_text()
        return cls.parse(text)


_DEFAULT_TABLE: Optional[McsTable] = None


def default_table() -> McsTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = McsTable.load()
    return _DEFAULT_TABLE


# ---------------------------------------------------------------------------
# OLLA and MCS selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OllaState:
    offset_db: float = 0.0


def olla_update(state: OllaState, decode_ok: bool, step_up: float = OLLA_STEP_UP,
                step_down: float = OLLA_STEP_DOWN) -> OllaState:
    off = state.offset_db + (step_up if decode_ok else -step_down)
    return OllaState(min(max(off, OLLA_MIN), OLLA_MAX))


def olla_update_array(offsets: np.ndarray, ok: np.ndarray) -> np.ndarray:
    return np.clip(offsets + np.where(ok, OLLA_STEP_UP, -OLLA_STEP_DOWN), OLLA_MIN, OLLA_MAX)


def select_mcs(estimated_sinr_db, olla: OllaState, table: Optional[McsTable] = None) -> int:
    """Highest index whose threshold is at or below the adjusted SINR;
    index 0 when none qualifies."""
    table = table or default_table()
    return int(select_mcs_array(estimated_sinr_db + olla.offset_db, table))


def select_mcs_array(adjusted_sinr_db, table: McsTable):
    idx = np.searchsorted(table.min_sinr_db, adjusted_sinr_db, side="right") - 1
    return np.maximum(idx, 0)


def synthetic_olla_bler(n_tx: int = 200_000, mean_sinr_db: float = 12.0, jitter_db: float = 2.0,
                        seed: int = 0, table: Optional[McsTable] = None) -> float:
    """Long-run error fraction of OLLA on a stationary link whose SINR is
    Gaussian jitter around ``mean_sinr_db``.

    Link adaptation uses the previous realised SINR, as in the simulator.
    """
    table = table or default_table()
    rng = np.random.default_rng(seed)
    sinr_db = mean_sinr_db + jitter_db * rng.standard_normal(n_tx + 1)
    off = 0.0
    errors = 0
    for k in range(1, n_tx + 1):
        mcs = int(select_mcs_array(sinr_db[k - 1] + off, table))
        ok = sinr_db[k] >= table.min_sinr_db[mcs]
        errors += not ok
        off = min(max(off + (OLLA_STEP_UP if ok else -OLLA_STEP_DOWN), OLLA_MIN), OLLA_MAX)
    return errors / n_tx


def transport_block_bits(n_rb: int, mcs: int, table: Optional[McsTable] = None) -> int:
    if n_rb < 1:
        raise ValueError("n_rb must be >= 1")
    table = table or default_table()
    return int(math.floor(n_rb * RE_PER_RB * table.spectral_efficiency[mcs]))


def decode_ok(realized_sinr_db, mcs, table: McsTable):
    """Threshold decoding rule: success iff the realised SINR reaches the
    threshold of the chosen MCS."""
    return np.asarray(realized_sinr_db) >= table.min_sinr_db[np.asarray(mcs)]


# ---------------------------------------------------------------------------
# RSRP, attachment, SINR
# ---------------------------------------------------------------------------

def rsrp(tx_power_dbm: float, tx_gain_db: float, rx_gain_db: float, loss_db: float) -> float:
    """Per-resource-element received reference power in dBm."""
    return float(per_re_power_dbm(tx_power_dbm)) + tx_gain_db + rx_gain_db - loss_db


def attach(candidates: Sequence[Hashable], rsrp_map: Mapping[Hashable, float], hysteresis_db: float = 3.0,
           current: Optional[Hashable] = None):
    """Strongest candidate, keeping ``current`` unless beaten by more than
    the hysteresis. Returns ``None`` for an empty candidate set."""
    cands = [c for c in candidates if c in rsrp_map]
    if not cands:
        return None
    best = max(cands, key=lambda c: rsrp_map[c])
    if current is not None and current in cands and current != best:
        if rsrp_map[best] <= rsrp_map[current] + hysteresis_db:
            return current
    return best


def attach_array(rsrp_rows: np.ndarray, current: np.ndarray, hysteresis_db: float) -> np.ndarray:
    """Vectorised :func:`attach` over rows of an (n_devices, n_candidates)
    RSRP matrix; ``-inf`` marks excluded candidates, -1 means unattached."""
    best = np.argmax(rsrp_rows, axis=1)
    best_val = rsrp_rows[np.arange(len(best)), best]
    out = np.where(np.isfinite(best_val), best, -1)
    has = current >= 0
    cur_val = np.where(has, rsrp_rows[np.arange(len(best)), np.maximum(current, 0)], -np.inf)
    keep = has & np.isfinite(cur_val) & (best_val <= cur_val + hysteresis_db)
    return np.where(keep, current, out)


@dataclass(frozen=True)
class SinrSample:
    signal_dbm: float
    interference_mw_sum: float
    noise_dbm: float
    sinr_db: float


def sinr(signal_dbm: float, interference_dbm: Sequence[float] = (), n_rb: int = 1) -> SinrSample:
    """SINR over ``n_rb`` resource blocks.

    ``signal_dbm`` and each entry of ``interference_dbm`` are received
    powers integrated over the same RB set.
    """
    n_dbm = noise_dbm(n_rb * SUBCARRIERS_PER_RB)
    i_mw = float(np.sum(mw(np.asarray(interference_dbm, dtype=float)))) if len(interference_dbm) else 0.0
    total = mw(n_dbm) + i_mw
    return SinrSample(signal_dbm, i_mw, n_dbm, float(signal_dbm - 10.0 * np.log10(total)))
