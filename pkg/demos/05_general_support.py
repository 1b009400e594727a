"""
Weights on an arbitrary candidate support
=========================================

Beyond the two families, weights on any finite candidate set can be
optimized with a conditional-gradient method on the simplex.
"""

import numpy as np

from rcrdesign import (
    CASES,
    BasisSpec,
    PopulationSetup,
    TaggedCovariance,
    closed_form_minimax_weight,
    optimal_design_on_support,
)

###############################################################################
# Quadratic case Q1 on five candidate points: the interior points +-0.5 end up
# with no weight, recovering the three-point design.

c = CASES["Q1"]
n = 4
d = optimal_design_on_support(np.linspace(-1, 1, 5), c.basis, c.covariance, PopulationSetup(n), tol=1e-12)
print("Q1 on 5 points:", d)
print("closed form w* =", closed_form_minimax_weight("Q1", n))

###############################################################################
# A cubic model on [0, 2] with known variances and 21 candidate points.

basis = BasisSpec(4, (0.0, 2.0))
cov = TaggedCovariance((0.5, 1.0, 1.0, 2.0))
d = optimal_design_on_support(np.linspace(0, 2, 21), basis, cov, PopulationSetup(n=20, m=8))
print("cubic, 21 candidates:")
for x, w in d:
    if w > 0:
        print(f"  x={x:.1f}  w={w:.4f}")
