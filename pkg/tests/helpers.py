import numpy as np

from rcrdesign import validate_design

# filled by test_acceptance, printed by conftest
ACCEPTANCE_LINES = []


def random_design(rng, basis, k=None, min_k=None):
    """Well-separated random design with at least ``p`` positive weights."""
    a, b = basis.region
    lo = basis.p if min_k is None else min_k
    k = int(rng.integers(lo, lo + 4)) if k is None else k
    pts = a + (b - a) * rng.choice(np.linspace(0, 1, 41), size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    return validate_design(pts, w / w.sum())
