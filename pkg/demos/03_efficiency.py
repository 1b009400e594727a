"""
How much is lost by designing for the worst case?
=================================================

The minimax design is compared with the design that would be optimal if the
free variance ``d`` were known.  Efficiency is the ratio of the two criterion
values (1 is best), plotted against ``rho = d / (1 + d)``.
"""

import numpy as np

from rcrdesign import CASES, PopulationSetup, TaggedCovariance, efficiency, efficiency_curve, family_design
from rcrdesign import closed_form_minimax_weight, locally_optimal_weight

rho = np.array([0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99])

for cid in ("SL", "Q1", "Q2"):
    print(f"\n{cid}: {CASES[cid].description}")
    print("rho   " + "  ".join(f"{r:6.2f}" for r in rho))
    for n in (10, 50, 500):
        eff = efficiency_curve(cid, n, rho)
        print(f"n={n:<4d}" + "  ".join(f"{e:6.4f}" for e in eff))

###############################################################################
# The same number by hand for one point: straight line, n = 10, d = 1.

n, d = 10, 1.0
cov = TaggedCovariance((0.0, d))
setup = PopulationSetup(n)
w_loc = locally_optimal_weight("linear", cov, setup)
w_max = closed_form_minimax_weight("SL", n)
print(f"\nlocally optimal w = {w_loc:.5f}, minimax w = {w_max:.5f}")
print("efficiency:", efficiency(family_design("linear", w_max), "linear", cov, setup))
