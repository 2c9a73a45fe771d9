"""Result container, empirical CDFs and CSV export."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

CLASSES = ("pedestrian", "passenger")
CATEGORIES = ("access", "backhaul")
HEADLINE_THROUGHPUT_BPS = 3.2e6
EXPORT_FILES = ("throughput_cdf.csv", "latency_cdf.csv", "totals.csv", "mcs_hist.csv", "summary.txt")


def cdf(values, grid) -> List[Tuple[float, float]]:
    """Empirical CDF F(x) = #{v <= x} / n evaluated at each grid point."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("cdf of an empty sample")
    g = np.asarray(grid, dtype=float).ravel()
    f = np.searchsorted(v, g, side="right") / v.size
    return list(zip(g.tolist(), f.tolist()))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _p(values, q) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan")
    return float(np.percentile(v, q))


@dataclass
class MetricsBundle:
    """Everything a run reports. Per-UE arrays share the order of ``ue_ids``."""

    config: dict
    seed: int
    n_slots: int
    slot_ms: float
    ue_ids: np.ndarray
    ue_class: np.ndarray  # "pedestrian" | "passenger"
    generated_bits: np.ndarray  # DL, per UE
    delivered_bits: np.ndarray  # DL, per UE
    active_slots: np.ndarray  # slots with DL backlog, per UE
    packet_latency_slots: List[np.ndarray]  # delivered DL packets, per UE
    mcs_hist: Dict[str, np.ndarray]
    tx_count: Dict[str, int]
    error_count: Dict[str, int]
    ul_generated_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ul_delivered_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    counters: Dict[str, int] = field(default_factory=dict)

    # -- derived -----------------------------------------------------------

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def duration_ms(self) -> float:
        return self.n_slots * self.slot_ms

    def mask(self, cls: str) -> np.ndarray:
        if cls not in CLASSES:
            raise KeyError(cls)
        return self.ue_class == cls

    @property
    def throughput_bps(self) -> np.ndarray:
        """Delivered DL bits over the time each UE had data waiting."""
        t = self.active_slots * self.slot_ms * 1e-3
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, self.delivered_bits / np.where(t > 0, t, 1.0), 0.0)

    def latency_ms(self, cls: str) -> np.ndarray:
        m = self.mask(cls)
        parts = [lat for lat, keep in zip(self.packet_latency_slots, m) if keep]
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts) * self.slot_ms

    def ue_p90_latency_ms(self) -> np.ndarray:
        """Per-UE 90th percentile DL latency; inf for a UE with no delivery."""
        return np.array([np.percentile(l, 90) * self.slot_ms if len(l) else np.inf
                         for l in self.packet_latency_slots])

    def generated(self, cls: str) -> int:
        return int(self.generated_bits[self.mask(cls)].sum())

    def delivered(self, cls: str) -> int:
        return int(self.delivered_bits[self.mask(cls)].sum())

    def delivered_fraction(self, cls: str) -> float:
        g = self.generated(cls)
        return self.delivered(cls) / g if g else 0.0

    def median_throughput(self, cls: str) -> float:
        return float(np.median(self.throughput_bps[self.mask(cls)]))

    def fraction_above(self, cls: str, threshold: float = HEADLINE_THROUGHPUT_BPS) -> float:
        return float(np.mean(self.throughput_bps[self.mask(cls)] > threshold))

    def p90_latency_ms(self, cls: str) -> float:
        return _p(self.latency_ms(cls), 90)

    def bler(self, category: str) -> float:
        n = self.tx_count.get(category, 0)
        return self.error_count.get(category, 0) / n if n else float("nan")

    def totals(self) -> Dict[str, int]:
        out = {}
        for cls in CLASSES:
            m = self.mask(cls)
            out[f"generated_{cls}_bits"] = int(self.generated_bits[m].sum())
            out[f"delivered_{cls}_bits"] = int(self.delivered_bits[m].sum())
            if len(self.ul_generated_bits):
                out[f"ul_generated_{cls}_bits"] = int(self.ul_generated_bits[m].sum())
                out[f"ul_delivered_{cls}_bits"] = int(self.ul_delivered_bits[m].sum())
        for cat in CATEGORIES:
            out[f"{cat}_transmissions"] = int(self.tx_count.get(cat, 0))
            out[f"{cat}_errors"] = int(self.error_count.get(cat, 0))
        return out

    def summary(self) -> Dict[str, float]:
        s: Dict[str, float] = {"seed": self.seed, "slots": self.n_slots}
        for cls in CLASSES:
            s[f"{cls}_median_throughput_bps"] = self.median_throughput(cls)
            s[f"{cls}_fraction_above_3.2Mbps"] = self.fraction_above(cls)
            s[f"{cls}_p90_latency_ms"] = self.p90_latency_ms(cls)
            s[f"{cls}_delivered_fraction"] = self.delivered_fraction(cls)
        for cat in CATEGORIES:
            s[f"{cat}_bler"] = self.bler(cat)
        s.update({k: v for k, v in sorted(self.counters.items())})
        return s


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x != x:
        return "nan"
    if x in (float("inf"), float("-inf")):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write(path: Path, lines: Iterable[str]):
    try:
        with open(path, "w", newline="\n") as f:
            for line in lines:
                f.write(line + "\n")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def export(bundle: MetricsBundle, out_dir) -> List[Path]:
    """Write the five result files; output is a pure function of the bundle."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {out}: {e}") from e
    head = f"# config_hash = {bundle.config_hash}"
    paths = [out / name for name in EXPORT_FILES]

    rows = [head, "class,throughput_bps,cdf"]
    tp = bundle.throughput_bps
    for cls in CLASSES:
        v = tp[bundle.mask(cls)]
        if v.size:
            for x, f in cdf(v, np.unique(v)):
                rows.append(f"{cls},{_fmt(x)},{_fmt(f)}")
    _write(paths[0], rows)

    rows = [head, "class,latency_ms,cdf"]
    for cls in CLASSES:
        v = bundle.latency_ms(cls)
        if v.size:
            for x, f in cdf(v, np.unique(v)):
                rows.append(f"{cls},{_fmt(x)},{_fmt(f)}")
    _write(paths[1], rows)

    _write(paths[2], [head, "key,value"] + [f"{k},{v}" for k, v in bundle.totals().items()])

    n_mcs = len(next(iter(bundle.mcs_hist.values())))
    rows = [head, "mcs," + ",".join(CATEGORIES)]
    for i in range(n_mcs):
        rows.append(f"{i}," + ",".join(str(int(bundle.mcs_hist[c][i])) for c in CATEGORIES))
    _write(paths[3], rows)

    _write(paths[4], [head] + [f"{k} = {_fmt(v)}" for k, v in bundle.summary().items()])
    return paths
