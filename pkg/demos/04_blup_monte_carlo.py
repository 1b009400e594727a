"""
Checking the BLUP mean squared error by simulation
==================================================

Straight line, two observations per individual at x = 0 and x = 1, unit
variances.  The empirical MSE matrix of the stacked predictions is compared
with the closed form, entry by entry, in units of Monte Carlo standard error.
"""

import numpy as np

from rcrdesign import BasisSpec, SimulationPlan, blup, check_mse, design_matrix, validate_design

F = design_matrix(validate_design([0, 1], [0.5, 0.5]), BasisSpec.linear(), m=2)
print("design matrix\n", F)

###############################################################################
# A single data set: predictions are pulled from each individual's own
# least-squares line towards the population estimate.

rng = np.random.default_rng(0)
Y = rng.normal(size=(4, 2)) + F @ [1.0, 2.0]
res = blup(F, [1.0, 1.0], Y)
print("individual LS fits\n", res.individual_ls)
print("BLUPs\n", res.individual)
print("population estimate", res.population, "= mean of BLUPs", res.individual.mean(axis=0))

###############################################################################
# Many replicates.

for n in (1, 3):
    plan = SimulationPlan(F, D=[1.0, 1.0], beta=[1.0, 2.0], sigma2=1.0, n=n, replicates=10**5, seed=42)
    chk = check_mse(plan)
    print(f"\nn={n}: largest |empirical - theory| = {chk.max_abs_deviation:.4f} "
          f"(s.e. {chk.stderr_at_max:.4f}); worst entry at {chk.max_z:.2f} s.e. -> "
          f"{'pass' if chk.passed else 'fail'}")
    print(np.round(chk.empirical.mse, 3))
