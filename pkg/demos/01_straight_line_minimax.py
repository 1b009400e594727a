"""
Minimax design for the straight-line model
==========================================

Each of ``n`` individuals is observed ``m`` times on ``[0, 1]`` and follows
its own line ``beta_i1 + beta_i2 x``.  The intercept variance is taken to be
negligible and the slope variance unknown, so the design is chosen against
the worst case, an infinite slope variance.

Optimal designs put weight ``1 - w`` at 0 and ``w`` at 1.
"""

import numpy as np

from rcrdesign import (
    CASES,
    PopulationSetup,
    closed_form_minimax_weight,
    fixed_effects_imse,
    imse_limit,
    minimize_weight_1d,
)

case = CASES["SL"]
print(case.description)

###############################################################################
# The closed-form weight and a direct numerical minimization of the limiting
# criterion agree.

for n in (2, 10, 100, 500):
    w_closed = closed_form_minimax_weight(case, n)
    w_numeric = minimize_weight_1d(case.criterion(n), case.bounds)
    print(f"n={n:4d}  w*={w_closed:.9f}  numeric={w_numeric:.9f}")

###############################################################################
# The criterion splits into the population part (estimating the mean line)
# and the prediction part (recovering each individual's line).  With one
# individual only the first is left; it is the fixed-effects criterion and is
# minimized by the balanced design.

n = 10
setup = PopulationSetup(n)
for w in (0.5, closed_form_minimax_weight(case, n), 0.9):
    rep = imse_limit(case.design(w), case.basis, None, case.covariance, setup)
    print(f"w={w:.4f}  total={rep.value:8.4f}  population={rep.population_term:7.4f}  "
          f"prediction={rep.prediction_term:7.4f}")
print("fixed-effects IMSE of the balanced design:", fixed_effects_imse(case.design(0.5), case.basis))

###############################################################################
# As the number of individuals grows, more weight moves to x = 1, where the
# slope is best determined.

ns = np.arange(2, 501)
w_star = np.array([closed_form_minimax_weight(case, k) for k in ns])
print(f"w* rises from {w_star[0]:.4f} (n=2) to {w_star[-1]:.4f} (n=500)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.plot(ns, w_star)
    plt.xlabel("number of individuals n")
    plt.ylabel("minimax-optimal weight at x = 1")
    plt.savefig("straight_line_weights.png", dpi=100)
except ImportError:
    pass
