"""Large-scale channel: link classes, path loss, LOS probability,
shadowing, antenna gains and block fading."""
import numpy as np

from miabsim.channel import (LinkClass, Scenario, antenna_gain, block_fading_db, classify,
                             element_attenuation, los_probability, path_loss, shadowing)
from miabsim.scenario import NodeKind, build_scene

# Every pair of nodes maps to a 38.901 scenario. Links that cross a bus
# body pick up penetration loss and are forced NLOS.
sc = build_scene("not_limited", "miab", seed=2)
byid = {n.id: n for n in sc.nodes}
macro = byid[sc.ids(NodeKind.MACRO)[0]]
bus = sc.buses[0]
du, mt, pax = byid[bus.du_node], byid[bus.mt_node], byid[bus.passenger_nodes[0]]
ped = byid[sc.ids(NodeKind.PEDESTRIAN)[0]]
for name, (a, b) in {"macro-MT": (macro, mt), "DU-own passenger": (du, pax),
                     "macro-passenger": (macro, pax), "macro-pedestrian": (macro, ped)}.items():
    lc = classify(a, b, sc.buses)
    print(f"{name:18s} {lc.scenario.name:4s} forced_nlos={lc.forced_nlos} penetration={lc.penetration_db} dB")

# Path loss at 28 GHz against distance for a street-level receiver.
print("d3d(m)  UMa-LOS  UMa-NLOS  UMi-LOS  UMi-NLOS  P_LOS(UMa)")
for d in (20, 50, 100, 200, 400, 800):
    row = [path_loss(LinkClass(s), los, d, h, 1.5) for s, h in ((Scenario.UMA, 25.0), (Scenario.UMI, 10.0))
           for los in (True, False)]
    print(f"{d:6d}  " + "  ".join(f"{x:7.1f}" for x in row) + f"  {los_probability(Scenario.UMA, d):.3f}")

# Shadowing is correlated along the path: a short move keeps most of it.
rng = np.random.default_rng(0)
first = np.array([shadowing(Scenario.UMA, True, rng) for _ in range(4000)])
for move in (5.0, 37.0, 500.0):
    later = np.array([shadowing(Scenario.UMA, True, rng, s, move) for s in first])
    print(f"shadowing correlation after {move:5.0f} m: {np.corrcoef(first, later)[0, 1]:.2f}")

# Element pattern of the 65 degree HPBW element, off boresight in azimuth.
for az in (0, 32.5, 65, 90):
    print(f"azimuth {az:5.1f} deg: {float(element_attenuation(90.0, az)) + 0.0:6.2f} dB")

# A serving beam adds the array gain on top of the element gain.
to_mt = (mt.position - macro.position) / np.linalg.norm(mt.position - macro.position)
print("macro gain toward MT, serving:", round(antenna_gain(macro, to_mt, True), 2),
      "dBi  not serving:", round(antenna_gain(macro, to_mt, False), 2), "dBi")

# Block fading has unit mean power: LOS links fade less than NLOS ones.
f = block_fading_db(np.array([True] * 20000 + [False] * 20000), rng)
print("fading std LOS", f[:20000].std().round(2), "dB  NLOS", f[20000:].std().round(2), "dB")
