"""Regression bases, approximate designs and the matrices built from them.

The building blocks for everything else in the package:

* :class:`BasisSpec` -- monomial regression functions ``f(x) = (1, x, ..., x**(p-1))``
  on a closed interval.
* :class:`Design` -- an approximate design, i.e. support points carrying
  nonnegative weights that sum to one.
* :class:`WeightMeasure` -- the measure the integrated criteria average over.
* :func:`information_matrix` and :func:`v_matrix` -- ``sum_j w_j f(x_j) f(x_j)^T``
  and ``int f f^T dnu``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

WEIGHT_SUM_ATOL = 1e-12
REGION_ATOL = 1e-12
MIN_SEPARATION = 1e-12
# drift up to this is silently rescaled by validate_design
WEIGHT_SUM_RESCALE = 1e-9


class DesignError(ValueError):
    """Raised for malformed designs, measures or out-of-region points."""


@dataclass(frozen=True)
class BasisSpec:
    """Monomial basis of ``p`` functions on the interval ``[a, b]``."""

    p: int
    region: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise DesignError(f"basis size p must be a positive integer, got {self.p!r}")
        a, b = (float(v) for v in self.region)
        if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
            raise DesignError(f"region must be a finite interval [a, b] with a < b, got {self.region!r}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "region", (a, b))

    @classmethod
    def linear(cls, region=(0.0, 1.0)) -> "BasisSpec":
        return cls(2, region)

    @classmethod
    def quadratic(cls, region=(-1.0, 1.0)) -> "BasisSpec":
        return cls(3, region)

    @property
    def degree(self) -> int:
        return self.p - 1

    def contains(self, x) -> np.ndarray:
        a, b = self.region
        x = np.asarray(x, dtype=float)
        return (x >= a - REGION_ATOL) & (x <= b + REGION_ATOL)

    def check_points(self, x) -> None:
        x = np.asarray(x, dtype=float)
        bad = ~self.contains(x)
        if np.any(bad):
            raise DesignError(
                f"point(s) {x[bad].tolist()} outside region [{self.region[0]}, {self.region[1]}]"
            )


def evaluate_basis(basis: BasisSpec, x) -> np.ndarray:
    """Evaluate the regression functions at ``x``.

    Scalar ``x`` gives a length-``p`` vector; an array of shape ``(k,)`` gives
    the ``(k, p)`` Vandermonde matrix whose rows are ``f(x_j)``.
    """
    xa = np.asarray(x, dtype=float)
    basis.check_points(xa)
    powers = np.arange(basis.p)
    if xa.ndim == 0:
        return xa ** powers
    return xa[..., None] ** powers


@dataclass(frozen=True)
class Design:
    """Approximate design: distinct support points with weights summing to one.

    Use :func:`validate_design` to build one from raw lists; the constructor
    only checks the invariants.
    """

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.array(self.support, dtype=float).ravel()
        w = np.array(self.weights, dtype=float).ravel()
        if s.size == 0:
            raise DesignError("design needs at least one support point")
        if s.shape != w.shape:
            raise DesignError("support and weights must have the same length")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(w))):
            raise DesignError("support and weights must be finite")
        if np.any(w < 0):
            raise DesignError(f"negative weight in {w.tolist()}")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_ATOL:
            raise DesignError(f"weights sum to {w.sum()!r}, not 1")
        if s.size > 1 and np.min(np.diff(np.sort(s))) < MIN_SEPARATION:
            raise DesignError("support points must be pairwise distinct")
        s.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.support.size

    def n_positive(self, threshold: float = 0.0) -> int:
        return int(np.count_nonzero(self.weights > threshold))

    def __iter__(self):
        return iter(zip(self.support.tolist(), self.weights.tolist()))

    def __str__(self):
        return ",".join(f"{x:.9g}:{w:.9g}" for x, w in self)


def validate_design(support: Sequence[float], weights: Sequence[float]) -> Design:
    """Canonicalize raw support/weight lists into a :class:`Design`.

    Points are sorted ascending and duplicates (closer than ``1e-12``) are
    merged by summing their weights.  A weight sum within ``1e-9`` of one is
    rescaled; anything further off is rejected.

    Examples
    --------
    >>> d = validate_design([1, 0], [0.7, 0.3])
    >>> d.support.tolist(), d.weights.tolist()
    ([0.0, 1.0], [0.3, 0.7])
    """
    s = np.asarray(support, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if s.size == 0:
        raise DesignError("empty support")
    if s.shape != w.shape:
        raise DesignError(f"{s.size} support points but {w.size} weights")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(w))):
        raise DesignError("support and weights must be finite")
    if np.any(w < 0):
        raise DesignError(f"negative weight in {w.tolist()}")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_RESCALE:
        raise DesignError(f"weights sum to {total!r}; expected 1")

    order = np.argsort(s, kind="stable")
    s, w = s[order], w[order]
    merged_s, merged_w = [s[0]], [w[0]]
    for x, wt in zip(s[1:], w[1:]):
        if x - merged_s[-1] < MIN_SEPARATION:
            merged_w[-1] += wt
        else:
            merged_s.append(x)
            merged_w.append(wt)
    w = np.array(merged_w)
    return Design(np.array(merged_s), w / w.sum())


@dataclass(frozen=True)
class WeightMeasure:
    """Probability measure used to integrate squared prediction errors.

    ``kind`` is ``"uniform"`` (mass 1 spread evenly over ``interval``) or
    ``"discrete"`` (``points`` carrying ``masses``).
    """

    kind: str = "uniform"
    interval: tuple[float, float] | None = None
    points: np.ndarray | None = field(default=None, compare=False)
    masses: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "uniform":
            if self.interval is None:
                raise DesignError("uniform measure needs an interval")
            a, b = (float(v) for v in self.interval)
            if not a < b:
                raise DesignError(f"bad interval {self.interval!r}")
            object.__setattr__(self, "interval", (a, b))
        elif self.kind == "discrete":
            pts = np.asarray(self.points, dtype=float).ravel()
            ms = np.asarray(self.masses, dtype=float).ravel()
            if pts.size == 0 or pts.shape != ms.shape:
                raise DesignError("discrete measure needs matching, nonempty points and masses")
            if np.any(ms < 0):
                raise DesignError("negative mass in discrete measure")
            if abs(ms.sum() - 1.0) > WEIGHT_SUM_ATOL:
                raise DesignError(f"masses sum to {ms.sum()!r}, not 1")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "masses", ms)
        else:
            raise DesignError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def uniform(cls, a: float, b: float) -> "WeightMeasure":
        return cls("uniform", (a, b))

    @classmethod
    def discrete(cls, points, masses) -> "WeightMeasure":
        return cls("discrete", None, points, masses)

    @classmethod
    def on_region(cls, basis: BasisSpec) -> "WeightMeasure":
        """Uniform probability measure on the basis region."""
        return cls.uniform(*basis.region)


def monomial_moments(a: float, b: float, kmax: int) -> np.ndarray:
    """Moments ``int x**k dx / (b - a)`` over ``[a, b]`` for ``k = 0..kmax``."""
    k = np.arange(kmax + 1)
    return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))


def information_matrix(design: Design, basis: BasisSpec) -> np.ndarray:
    """Standardized information matrix ``M = sum_j w_j f(x_j) f(x_j)^T``."""
    F = evaluate_basis(basis, design.support)
    M = (F * design.weights[:, None]).T @ F
    return 0.5 * (M + M.T)


def v_matrix(basis: BasisSpec, measure: WeightMeasure | None = None) -> np.ndarray:
    """Second-moment matrix ``int f(x) f(x)^T nu(dx)`` of the basis.

    Uniform measures use exact monomial moments, so entry ``(s, t)`` is the
    ``s + t``-th moment.  Defaults to the uniform measure on the basis region.
    """
    if measure is None:
        measure = WeightMeasure.on_region(basis)
    if measure.kind == "uniform":
        a, b = measure.interval
        basis.check_points([a, b])
        mom = monomial_moments(a, b, 2 * basis.p - 2)
        idx = np.add.outer(np.arange(basis.p), np.arange(basis.p))
        return mom[idx]
    F = evaluate_basis(basis, measure.points)
    V = (F * measure.masses[:, None]).T @ F
    return 0.5 * (V + V.T)


@dataclass(frozen=True)
class PopulationSetup:
    """``n`` individuals with ``m`` observations each."""

    n: int
    m: int = 1

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DesignError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
