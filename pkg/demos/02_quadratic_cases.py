"""
Quadratic regression: five limiting cases
=========================================

For the quadratic model on ``[-1, 1]`` the designs have weights
``w, 1 - 2w, w`` at ``-1, 0, 1``.  Which variances are negligible and which
are unbounded changes the minimax weight.
"""

import numpy as np

from rcrdesign import CASES, closed_form_minimax_weight, grid_oracle

quadratic = [c for c in CASES.values() if c.model == "quadratic"]

###############################################################################
# Variance pattern of each case (zero = negligible, inf = unbounded).

for c in quadratic:
    print(f"{c.id}: d = ({c.covariance})  {c.description}")

###############################################################################
# Closed-form weights next to a brute-force grid scan of the limiting
# criterion.  Cases Q2 and Q3 share the same optimum.

print(f"{'n':>5}" + "".join(f"{c.id:>12}" for c in quadratic))
for n in (2, 5, 10, 50, 500):
    print(f"{n:5d}" + "".join(f"{closed_form_minimax_weight(c, n):12.6f}" for c in quadratic))

n = 10
for c in quadratic:
    w_grid = grid_oracle(c.criterion(n), c.bounds, 10**5)
    print(f"{c.id} n={n}: closed form {closed_form_minimax_weight(c, n):.7f}, grid {w_grid:.7f}")

###############################################################################
# Direction of change in n: the endpoint weight grows with n except in Q4,
# where both the intercept and the quadratic coefficient are unbounded.

ns = np.arange(2, 501)
for c in quadratic:
    w = np.array([closed_form_minimax_weight(c, k) for k in ns])
    trend = "increasing" if np.all(np.diff(w) > 0) else "decreasing" if np.all(np.diff(w) < 0) else "mixed"
    print(f"{c.id}: {trend}, {w[0]:.4f} -> {w[-1]:.4f}")
