"""Comparing deployments the way the command line does: a plan of arms
and seeds, one output directory per run and a comparison table.

The desk plan is ``miabsim --out results`` (8 arms, 10 seeds, 2000 ms).
Here a trimmed plan (one regime, two seeds, 300 ms) runs in well under a minute.
"""
import tempfile
from pathlib import Path

from miabsim.cli import ExperimentPlan, default_arms, run_experiment

out = Path(tempfile.mkdtemp()) / "results"
plan = ExperimentPlan(default_arms(regimes=["not_limited"]), seeds=(0, 1), duration_ms=300.0, out=out)
for arm in plan.arms:
    print(arm.label, "->", plan.run_dir(arm, 0).relative_to(out))

results = run_experiment(plan, workers=1)

print(f"{'arm':40s} {'class':10s} {'delivered':>9s} {'median Mbit/s':>13s}")
for arm, bundles in results.items():
    for cls in ("passenger", "pedestrian"):
        dl = sum(b.delivered(cls) for b in bundles) / sum(b.generated(cls) for b in bundles)
        med = sum(b.median_throughput(cls) for b in bundles) / len(bundles) / 1e6
        print(f"{arm.label:40s} {cls:10s} {dl:9.3f} {med:13.2f}")

# comparison.csv holds one row per arm, seed and class plus a pooled row.
rows = (out / "comparison.csv").read_text().splitlines()
print(rows[0])
print(rows[3])
