"""Grid geometry, base-station placement and the grid mobility model."""
import numpy as np

from miabsim.mobility import EntityKind, GridMobility, MobileState, kmh
from miabsim.scenario import NodeKind, build_layout, build_scene, random_lane_track, scene_csv_rows
from miabsim.validation import turn_events

# Both regimes share the same street geometry. The limited one is a single block.
for regime in ("not_limited", "limited"):
    for dep in ("only_macros", "macros_picos", "miab"):
        sc = build_scene(regime, dep, seed=1)
        kinds = {k.value: len(sc.ids(k)) for k in NodeKind if sc.ids(k)}
        print(f"{regime:12s} {dep:13s} {kinds}")

# scene.csv rows are what --dump-scene writes.
sc = build_scene("limited", "miab", seed=1)
print("\n".join(scene_csv_rows(sc)[:6]))

# One bus driving for two minutes on the larger grid. It turns at
# intersections with probabilities 0.6 / 0.2 / 0.2 (straight / left / right).
# On the single block every corner has one exit, so every turn is forced.
lay = build_layout("not_limited")
rng = np.random.default_rng(3)
bus = MobileState.from_track(EntityKind.BUS, random_lane_track(lay, rng), kmh(40))
m = GridMobility(lay, [bus], [np.random.default_rng(4)])
m.record_events = True
path = []
for _ in range(1200):
    m.step(0.1)
    path.append(m.states[0].position)
path = np.array(path)
print("bus extent x", path[:, 0].min().round(1), path[:, 0].max().round(1),
      "y", path[:, 1].min().round(1), path[:, 1].max().round(1))
print("manoeuvres:", [e.maneuver for e in m.events])

# Over many intersection events the frequencies settle on the targets.
ev = turn_events()
for k in ("straight", "left", "right"):
    print(k, round(sum(e.maneuver == k for e in ev) / len(ev), 3))
