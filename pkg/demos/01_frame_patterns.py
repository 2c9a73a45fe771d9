"""TDD frame patterns: usage per link role, self-interference modes and
which cross-link cases each slot leaves open."""
from miabsim.frame import (avoided_cases, check_self_interference, compute_usage, format_pattern,
                           get_pattern, parse_pattern)

# The three built-in patterns. Each row is one link role, each column a slot.
for name in ("no_silence", "with_silence", "macro_only"):
    print(f"--- {name}")
    print(format_pattern(get_pattern(name)))

# Usage is computed with exact fractions, so 3/10 stays 3/10.
for name in ("no_silence", "with_silence"):
    for role, u in compute_usage(get_pattern(name)).items():
        print(f"{name:12s} {role:13s} DL {u.dl_fraction}  UL {u.ul_fraction}  total {u.total_fraction}")

# A bus node cannot receive backhaul while its DU transmits to passengers.
# The mode per slot shows A (both receive), B (both transmit) or silence.
print([m.value for m in check_self_interference(get_pattern("with_silence"))])

# Cross-link cases: in no_silence the donor and the bus DU run opposite
# directions, which opens cases 01-04. Silence removes them.
for name in ("no_silence", "with_silence"):
    open_cases = sorted({c.value for sc in avoided_cases(get_pattern(name)) for c in sc.possible})
    print(name, "open cases:", open_cases or "none")

# Custom patterns use the same text format as the built-ins.
mine = parse_pattern("DL,DL,UL\nDL,UL,UL\nUL,DL,DL\n", name="mine")
print("custom mine:", [m.value for m in check_self_interference(mine)])
