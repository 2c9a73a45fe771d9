"""Radio layer: power and noise per resource element, SINR, MCS choice
with outer-loop link adaptation, and cell attachment."""
import numpy as np

from miabsim import radio
from miabsim.radio import OllaState, olla_update, select_mcs, transport_block_bits

# A 35 dBm macro spreads its power over 792 subcarriers.
print("macro power per RE:", round(float(radio.per_re_power_dbm(35.0)), 2), "dBm")
print("noise per RB:", round(radio.noise_dbm(12), 2), "dBm")

# RSRP with 26 dBi of total antenna gain over 110 dB of loss, then SINR
# against two interferers on the same RBs.
p = radio.rsrp(35.0, 26.06, 0.0, 110.0)
s = radio.sinr(p, [p - 8.0, p - 12.0])
print(f"rsrp {p:.1f} dBm  sinr {s.sinr_db:.2f} dB")

# MCS table: thresholds 1 dB apart, spectral efficiency rising with index.
t = radio.default_table()
for sinr_db in (-10, 0, 10, 20, 30):
    m = select_mcs(sinr_db, OllaState())
    print(f"sinr {sinr_db:4d} dB -> mcs {m:2d}  TB over 66 RBs {transport_block_bits(66, m, t):6d} bits")

# OLLA: -1 dB on an error, +0.1 dB on a success. Ten successes undo one
# error, so the loop settles near 1 error in 11 transmissions.
st = OllaState()
trace = []
for ok in [True] * 5 + [False] + [True] * 12:
    st = olla_update(st, ok)
    trace.append(round(st.offset_db, 1) + 0.0)
print("offset trace:", trace)
for jitter in (1.0, 2.0, 4.0):
    print(f"jitter {jitter} dB: long-run BLER {radio.synthetic_olla_bler(50_000, 12.0, jitter):.4f}")

# Attachment keeps the current cell until another beats it by more than 3 dB.
rsrp_map = {"macro-0": -80.0, "macro-1": -78.5, "bus-3": -77.5}
print("best is 2.5 dB stronger, keep:", radio.attach(rsrp_map, rsrp_map, 3.0, current="macro-0"))
rsrp_map["bus-3"] = -76.0
print("best is 4 dB stronger, switch:", radio.attach(rsrp_map, rsrp_map, 3.0, current="macro-0"))
print("first attachment takes the strongest:", radio.attach(rsrp_map, rsrp_map, 3.0))
