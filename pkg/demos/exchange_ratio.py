"""
Estimating how much two pairs overlap
=====================================

Three routes to the exchange ratio E/A: from the packets themselves, from the
far-delay ratio of direct to accidental four-fold rates, and by inverting the
four-photon visibility formula.  The last one assumes a specific mixture
model, so for a pair of fixed, partially overlapping packets it disagrees
with the first two except at the extremes.
"""

import math

import numpy as np

from noonsim import delay_scan, delay_scans, ea_from_baseline_ratio, ea_from_v4, preset, v4_from_ea
from noonsim.experiment import ea_from_packets, four_fold_from_pairs, patterns_of
from noonsim.fit import visibility_model_free
from noonsim.source import DEFAULT_SIGMA, Scenario, pair_scenario

circuit = preset("noon4")
delays = np.concatenate([np.linspace(-2000, 2000, 21), [-2e4, 2e4]])
two = delay_scans(pair_scenario(), circuit, patterns_of("ABCD", 2), delays)
accidental = four_fold_from_pairs(two, "ABCD")
v2 = visibility_model_free(two["AB"])

print(" sep/fs   packets  baseline  visibility-formula   V4")
for sep in (0.0, 100.0, 200.0, 400.0, 1e4):
    sc = Scenario("custom", (0.0, sep), DEFAULT_SIGMA, 0.1)
    direct = delay_scan(sc, circuit, "ABCD", delays)
    v4 = visibility_model_free(direct)
    print(
        f"{sep:7.0f}  {ea_from_packets(*sc.packets()).value:8.4f}"
        f"  {ea_from_baseline_ratio(direct.baseline(), accidental.baseline()).value:8.4f}"
        f"  {ea_from_v4(v4, v2).raw:18.4f}  {v4:6.4f}"
    )

# the measured pair: V2 = 0.89 and V4 = 0.90
est = ea_from_v4(0.90, 0.89)
print(f"\nE/A from V4=0.90, V2=0.89: {est.value:.4f}")
print(f"V4 predicted for E/A=0.92, V2=0.89: {v4_from_ea(0.89, 0.92):.4f}")
print("overlap needed for E/A=0.92:", round(0.92 ** 0.25, 4),
      "-> separation", round(DEFAULT_SIGMA * math.sqrt(-8 * math.log(0.92 ** 0.25)), 1), "fs")
