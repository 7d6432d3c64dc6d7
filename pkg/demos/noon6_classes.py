"""
Coincidence classes of the six-photon projector
===============================================

The 15 two-fold and 15 four-fold detector pairings fall into three classes
each.  Grouping is done on simulated rates, then each class visibility is
printed.
"""

import numpy as np

from noonsim import delay_scans, preset, scenario_build, visibility_model_free
from noonsim.cli import list_patterns
from noonsim.experiment import patterns_of
from noonsim.source import pair_scenario

circuit = preset("noon6")
delays = np.linspace(-2000, 2000, 21)
catalog = list_patterns(circuit)

two = delay_scans(pair_scenario(), circuit, patterns_of("ABCDEF", 2), delays)
four = delay_scans(scenario_build("four_x_one"), circuit, patterns_of("ABCDEF", 4), delays)

for key, scans in (("2-fold", two), ("4-fold", four)):
    print(key)
    for group in catalog[key]:
        v = visibility_model_free(scans[group[0]])
        kind = "dip" if v > 0 else "bump"
        print(f"  {kind:4} {abs(v):.4f}  {' '.join(group)}")
