"""Command-line front end: experiment batches, scene/channel dumps and the
built-in validation suites.

Exit codes: 0 on success, 1 when a validation check fails, 2 on a bad
plan, config or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import validation
from .channel import CHANNEL_CSV_HEADER
from .metrics import CLASSES, MetricsBundle, export
from .scenario import DEPLOYMENTS, REGIMES, scene_csv_rows
from .simcore import ConfigError, SimConfig, Simulator, load_config

DEFAULT_PATTERNS = {"only_macros": ("macro_only",), "macros_picos": ("macro_only",),
                    "miab": ("no_silence", "with_silence")}
DESK_MS = 2000.0
FULL_MS = 8000.0
DEFAULT_SEEDS = 10


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Arm:
    regime: str
    deployment: str
    frame_pattern: str

    @property
    def label(self) -> str:
        return f"{self.regime}/{self.deployment}-{Path(self.frame_pattern).stem}"


@dataclass
class ExperimentPlan:
    arms: List[Arm]
    seeds: Tuple[int, ...]
    duration_ms: float
    out: Path
    base: SimConfig = field(default_factory=SimConfig)
    dump_scene: bool = False
    dump_channel: bool = False

    def validate(self) -> "ExperimentPlan":
        if not self.arms:
            raise PlanError("plan has no arms")
        if not self.seeds:
            raise PlanError("plan has no seeds")
        for arm in self.arms:
            if arm.regime not in REGIMES:
                raise PlanError(f"{arm.label}: unknown regime")
            if arm.deployment not in DEPLOYMENTS:
                raise PlanError(f"{arm.label}: unknown deployment")
            builtin = {p for ps in DEFAULT_PATTERNS.values() for p in ps}
            if arm.frame_pattern in builtin and arm.frame_pattern not in DEFAULT_PATTERNS[arm.deployment]:
                raise PlanError(f"{arm.label}: pattern {arm.frame_pattern} is not valid for {arm.deployment}")
            try:
                self.config(arm, self.seeds[0]).validate()
            except ConfigError as e:
                raise PlanError(f"{arm.label}: {e}") from None
        return self

    def config(self, arm: Arm, seed: int) -> SimConfig:
        return dataclasses.replace(self.base, regime=arm.regime, deployment=arm.deployment,
                                   frame_pattern=arm.frame_pattern, seed=seed, duration_ms=self.duration_ms)

    def run_dir(self, arm: Arm, seed: int) -> Path:
        return self.out / arm.regime / f"{arm.deployment}-{Path(arm.frame_pattern).stem}" / f"seed-{seed}"

    def jobs(self):
        return [(arm, s) for arm in self.arms for s in self.seeds]


def default_arms(regimes: Iterable[str] = REGIMES, deployments: Iterable[str] = DEPLOYMENTS,
                 pattern: Optional[str] = None) -> List[Arm]:
    arms = []
    for r in regimes:
        for d in deployments:
            for p in ((pattern,) if pattern else DEFAULT_PATTERNS[d]):
                arms.append(Arm(r, d, p))
    return arms


def _run_one(plan: ExperimentPlan, arm: Arm, seed: int) -> MetricsBundle:
    cfg = plan.config(arm, seed)
    d = plan.run_dir(arm, seed)
    d.mkdir(parents=True, exist_ok=True)
    sim_kw = {}
    if plan.dump_channel:
        fh = open(d / "channel.csv", "w", newline="\n")
        fh.write(CHANNEL_CSV_HEADER + "\n")

        def dump(sim, slot):
            ids = [n.id for n in sim.scene.nodes]
            for row in sim.channel.dump_rows(slot, ids):
                fh.write(row + "\n")

        sim_kw["on_refresh"] = dump
    try:
        sim = Simulator(cfg, **sim_kw)
        if plan.dump_scene:
            (d / "scene.csv").write_text("\n".join(scene_csv_rows(sim.scene)) + "\n")
        bundle = sim.run()
    finally:
        if plan.dump_channel:
            fh.close()
    export(bundle, d)
    return bundle


def _job(args):
    return _run_one(*args)


def run_experiment(plan: ExperimentPlan, workers: Optional[int] = None) -> Dict[Arm, List[MetricsBundle]]:
    """Run every (arm, seed) job, write per-run outputs and comparison.csv."""
    plan.validate()
    jobs = plan.jobs()
    workers = workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            bundles = list(ex.map(_job, [(plan, a, s) for a, s in jobs]))
    else:
        bundles = [_run_one(plan, a, s) for a, s in jobs]
    results: Dict[Arm, List[MetricsBundle]] = {a: [] for a in plan.arms}
    for (arm, _), b in zip(jobs, bundles):
        results[arm].append(b)
    write_comparison(results, plan.out / "comparison.csv")
    return results


# ---------------------------------------------------------------------------
# comparison table
# ---------------------------------------------------------------------------

COMPARISON_HEADER = ("regime,deployment,frame_pattern,seed,class,median_throughput_bps,"
                     "fraction_above_3.2Mbps,p90_latency_ms,delivered_fraction")


def _stats(tp: np.ndarray, lat: np.ndarray, gen: int, dlv: int) -> List[float]:
    return [
        float(np.median(tp)) if tp.size else float("nan"),
        float(np.mean(tp > 3.2e6)) if tp.size else float("nan"),
        float(np.percentile(lat, 90)) if lat.size else float("nan"),
        dlv / gen if gen else 0.0,
    ]


def comparison_rows(results: Dict[Arm, List[MetricsBundle]]) -> List[str]:
    rows = [COMPARISON_HEADER]
    for arm, bundles in results.items():
        head = f"{arm.regime},{arm.deployment},{Path(arm.frame_pattern).stem}"
        for cls in CLASSES:
            pooled_tp, pooled_lat, g, d = [], [], 0, 0
            for b in bundles:
                tp = b.throughput_bps[b.mask(cls)]
                lat = b.latency_ms(cls)
                gen, dlv = b.generated(cls), b.delivered(cls)
                rows.append(f"{head},{b.seed},{cls}," + ",".join(repr(x) for x in _stats(tp, lat, gen, dlv)))
                pooled_tp.append(tp)
                pooled_lat.append(lat)
                g += gen
                d += dlv
            st = _stats(np.concatenate(pooled_tp), np.concatenate(pooled_lat), g, d)
            rows.append(f"{head},pooled,{cls}," + ",".join(repr(x) for x in st))
    return rows


def write_comparison(results, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(comparison_rows(results)) + "\n")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="miabsim", description="Slot-level simulator of mobile IAB networks.")
    p.add_argument("--config", type=Path, help="key = value run file used as the base configuration")
    p.add_argument("--regime", choices=REGIMES)
    p.add_argument("--deployment", choices=DEPLOYMENTS)
    p.add_argument("--pattern", help="frame pattern name or pattern file")
    p.add_argument("--seeds", type=int, default=None, help=f"number of seeds per arm (default {DEFAULT_SEEDS})")
    p.add_argument("--duration-ms", type=float, default=None, help=f"run length (default {DESK_MS:g})")
    p.add_argument("--full", action="store_true", help=f"use the full {FULL_MS:g} ms duration")
    p.add_argument("--dump-scene", action="store_true", help="write scene.csv next to each run")
    p.add_argument("--dump-channel", action="store_true", help="write channel.csv at every channel refresh")
    p.add_argument("--validate", action="append", metavar="SUITE",
                   help="run a validation suite (frame, channel, mobility, olla or all); repeatable")
    p.add_argument("--out", type=Path, default=Path("results"), help="output root directory")
    p.add_argument("--workers", type=int, default=None, help="parallel processes (default: CPU count)")
    return p


def plan_from_args(args) -> ExperimentPlan:
    base = load_config(args.config) if args.config else SimConfig()
    from_file = args.config is not None
    regimes = [args.regime] if args.regime else ([base.regime] if from_file else list(REGIMES))
    deployments = [args.deployment] if args.deployment else ([base.deployment] if from_file else list(DEPLOYMENTS))
    pattern = args.pattern or (base.frame_pattern if from_file and not args.deployment else None)
    if args.full and args.duration_ms is not None:
        raise PlanError("--full and --duration-ms are mutually exclusive")
    duration = FULL_MS if args.full else (args.duration_ms or (base.duration_ms if from_file else DESK_MS))
    n_seeds = args.seeds if args.seeds is not None else (1 if from_file else DEFAULT_SEEDS)
    if n_seeds < 1:
        raise PlanError("--seeds must be at least 1")
    first = base.seed if from_file else 0
    return ExperimentPlan(default_arms(regimes, deployments, pattern), tuple(range(first, first + n_seeds)),
                          duration, args.out, base, args.dump_scene, args.dump_channel)


def run_validation(suites: Sequence[str], stream=None) -> int:
    stream = stream or sys.stdout
    names: List[str] = []
    for s in suites:
        names.extend(validation.SUITES if s == "all" else [s])
    worst = 0
    for name in names:
        try:
            checks = validation.run_suite(name)
        except KeyError as e:
            print(f"error: {e.args[0]}", file=sys.stderr)
            return 2
        for c in checks:
            print(c.line(), file=stream)
            if not c.passed:
                worst = 1
    return worst


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.validate:
        return run_validation(args.validate)
    try:
        plan = plan_from_args(args).validate()
    except (PlanError, ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        results = run_experiment(plan, args.workers)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for arm, bundles in results.items():
        for cls in CLASSES:
            med = np.median([b.median_throughput(cls) for b in bundles]) / 1e6
            frac = np.mean([b.delivered_fraction(cls) for b in bundles])
            print(f"{arm.label:40s} {cls:10s} median {med:6.2f} Mbit/s  delivered {frac:5.3f}")
    print(f"wrote {plan.out / 'comparison.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
