"""Minimax and locally optimal designs for straight-line and quadratic RCR.

The optimal designs live in one-parameter families:

* straight line on ``[0, 1]``: weight ``1 - w`` at 0 and ``w`` at 1;
* quadratic on ``[-1, 1]``: weights ``w, 1 - 2w, w`` at ``-1, 0, 1``.

A minimax case fixes some variances at zero and sends the rest to infinity
(see :data:`CASES`).  Closed-form optimal weights are available for every case
and are checked against numerical minimization of :func:`~rcrdesign.criteria.imse_limit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .covariance import INF, ZERO, TaggedCovariance
from .criteria import imse_limit, limit_terms
from .model import (
    BasisSpec,
    Design,
    PopulationSetup,
    WeightMeasure,
    evaluate_basis,
    v_matrix,
    validate_design,
)

GOLDEN = (math.sqrt(5) - 1) / 2
BRACKET_EPS = 1e-9


class SolverError(RuntimeError):
    """Numerical optimization failed (non-finite values, no convergence, ...)."""


@dataclass(frozen=True)
class DesignFamilyBound:
    """Open interval of admissible weights ``w``."""

    lower: float
    upper: float

    def __contains__(self, w) -> bool:
        return self.lower < w < self.upper


MODELS = {
    "linear": (BasisSpec.linear(), (0.0, 1.0), DesignFamilyBound(0.0, 1.0)),
    "quadratic": (BasisSpec.quadratic(), (-1.0, 0.0, 1.0), DesignFamilyBound(0.0, 0.5)),
}


def _model(model: str):
    try:
        return MODELS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(MODELS)}") from None


def family_bounds(model: str) -> DesignFamilyBound:
    return _model(model)[2]


def family_weights(model: str, w) -> np.ndarray:
    """Weights on the family support for (an array of) ``w``; shape ``(..., k)``."""
    w = np.asarray(w, dtype=float)
    if model == "linear":
        return np.stack([1 - w, w], axis=-1)
    if model == "quadratic":
        return np.stack([w, 1 - 2 * w, w], axis=-1)
    _model(model)


def family_design(model: str, w: float) -> Design:
    """The family member with weight ``w``, e.g. ``{0: 1-w, 1: w}`` for ``"linear"``."""
    basis, support, bounds = _model(model)
    if not bounds.lower <= w <= bounds.upper:
        raise ValueError(f"w={w} outside [{bounds.lower}, {bounds.upper}] for the {model} family")
    return Design(np.array(support), family_weights(model, w))


def family_criterion(
    model: str,
    cov: TaggedCovariance,
    setup: PopulationSetup,
    measure: WeightMeasure | None = None,
) -> Callable:
    """``w -> imse_limit(family_design(model, w), ...).value``, vectorized over ``w``.

    Singular designs evaluate to ``inf`` instead of raising.
    """
    basis, support, _ = _model(model)
    F = evaluate_basis(basis, np.array(support))
    V = v_matrix(basis, measure)
    outer = F[:, :, None] * F[:, None, :]

    def criterion(w):
        W = family_weights(model, w)
        M = np.tensordot(W, outer, axes=(-1, 0))
        pop, pred = limit_terms(M, V, cov, setup, strict=False)
        out = pop + pred
        return float(out) if np.ndim(out) == 0 else out

    return criterion


@dataclass(frozen=True)
class MinimaxCase:
    """A limiting variance pattern together with its design family."""

    id: str
    model: str
    tags: tuple[float, ...]
    description: str

    @property
    def covariance(self) -> TaggedCovariance:
        return TaggedCovariance(self.tags)

    @property
    def basis(self) -> BasisSpec:
        return _model(self.model)[0]

    @property
    def bounds(self) -> DesignFamilyBound:
        return _model(self.model)[2]

    def design(self, w: float) -> Design:
        return family_design(self.model, w)

    def criterion(self, n: int, m: int = 1, measure: WeightMeasure | None = None) -> Callable:
        return family_criterion(self.model, self.covariance, PopulationSetup(n, m), measure)

    def at_variance(self, d: float) -> TaggedCovariance:
        """The case with every infinite variance replaced by the finite ``d``."""
        return self.covariance.replace(infinite=d)


CASES = {
    c.id: c
    for c in (
        MinimaxCase("SL", "linear", (ZERO, INF), "straight line, intercept variance -> 0, slope variance -> inf"),
        MinimaxCase("Q1", "quadratic", (ZERO, ZERO, INF), "quadratic, d1, d2 -> 0, d3 -> inf"),
        MinimaxCase("Q2", "quadratic", (ZERO, INF, ZERO), "quadratic, d1, d3 -> 0, d2 -> inf"),
        MinimaxCase("Q3", "quadratic", (INF, INF, ZERO), "quadratic, d3 -> 0, d1, d2 -> inf"),
        MinimaxCase("Q4", "quadratic", (INF, ZERO, INF), "quadratic, d2 -> 0, d1, d3 -> inf"),
        MinimaxCase("Q5", "quadratic", (ZERO, INF, INF), "quadratic, d1 -> 0, d2, d3 -> inf"),
    )
}


def get_case(case) -> MinimaxCase:
    if isinstance(case, MinimaxCase):
        return case
    try:
        return CASES[str(case).upper()]
    except KeyError:
        raise ValueError(f"unknown case {case!r}; expected one of {', '.join(CASES)}") from None


def closed_form_minimax_weight(case, n) -> float:
    """Minimax-optimal family weight for ``n >= 2`` individuals.

    >>> closed_form_minimax_weight("Q5", 4)
    0.3333333333333333
    """
    c = get_case(case)
    if int(n) != n or n < 2:
        raise ValueError(f"closed-form minimax weights need an integer n >= 2, got {n!r}")
    n = float(n)
    if c.id == "SL":
        return (n - math.sqrt(n)) / (n - 1)
    if c.id == "Q1":
        return (3 * n + 5 - 2 * math.sqrt(6 * n + 10)) / (6 * (n - 1))
    if c.id in ("Q2", "Q3"):
        return (5 * n + 3 - 2 * math.sqrt(10 * n + 6)) / (10 * (n - 1))
    if c.id == "Q4":
        return (-3 * n - 5 + 2 * math.sqrt(6 * n * n + 10 * n)) / (10 * (n - 1))
    return (n - math.sqrt(n)) / (2 * (n - 1))


def _bounds(bounds) -> DesignFamilyBound:
    if isinstance(bounds, DesignFamilyBound):
        return bounds
    if isinstance(bounds, str):
        return family_bounds(bounds)
    return DesignFamilyBound(*bounds)


def minimize_weight_1d(criterion: Callable[[float], float], bounds, tol: float = 1e-10) -> float:
    """Golden-section search for the minimizer of a unimodal function of ``w``.

    Searches ``[lower + 1e-9, upper - 1e-9]`` down to width ``tol`` and returns
    the midpoint of the final bracket, after checking that the criterion does
    not drop (beyond rounding) at ``w* +/- 10 tol``.
    """
    b = _bounds(bounds)
    lo, hi = b.lower + BRACKET_EPS, b.upper - BRACKET_EPS

    def f(w):
        v = float(criterion(w))
        if not math.isfinite(v):
            raise SolverError(f"criterion is not finite at w={w!r}")
        return v

    f(lo), f(hi)
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    w = 0.5 * (lo + hi)

    fw = f(w)
    slack = 64 * np.finfo(float).eps * max(abs(fw), 1.0)
    for probe in (w - 10 * tol, w + 10 * tol):
        if b.lower < probe < b.upper and f(probe) < fw - slack:
            raise SolverError(f"criterion is not unimodal near w={w!r}")
    return w


def _evaluate(criterion, xs: np.ndarray, chunk: int = 1 << 17) -> np.ndarray:
    try:
        parts = [np.asarray(criterion(xs[i:i + chunk]), dtype=float) for i in range(0, xs.size, chunk)]
        vals = np.concatenate(parts)
        if vals.shape == xs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(criterion(x)) for x in xs])


def grid_oracle(criterion: Callable, bounds, resolution: int = 10**6) -> float:
    """Brute-force argmin on a uniform grid of the open interval, refined once.

    ``resolution`` equally spaced interior points are scanned, then the two
    neighbouring grid cells of the winner are rescanned at ten times finer
    spacing.  Ties go to the smallest ``w``; a refinement point replaces the
    coarse winner only if it is strictly better.  Accuracy is about
    ``(upper - lower) / (20 * resolution)``.

    ``criterion`` may be vectorized (array in, array out); scalar-only
    callables are evaluated point by point.
    """
    if resolution < 1000:
        raise ValueError("grid_oracle needs resolution >= 1000")
    b = _bounds(bounds)
    h = (b.upper - b.lower) / (resolution + 1)
    xs = b.lower + h * np.arange(1, resolution + 1)
    vals = _evaluate(criterion, xs)
    i = int(np.argmin(vals))
    best, fbest = xs[i], vals[i]

    fine = best + (h / 10) * np.arange(-10, 11)
    fine = fine[(fine > b.lower) & (fine < b.upper)]
    fvals = _evaluate(criterion, fine)
    j = int(np.argmin(fvals))
    if fvals[j] < fbest:
        best = fine[j]
    return float(best)


def locally_optimal_weight(
    model: str,
    cov: TaggedCovariance,
    setup: PopulationSetup,
    measure: WeightMeasure | None = None,
    tol: float = 1e-10,
) -> float:
    """Family weight minimizing the criterion at known variances.

    Zero tags are allowed (they encode variances known to vanish); infinite
    ones are not, since that is a minimax problem.
    """
    if np.any(cov.infinite_mask):
        raise ValueError("locally optimal designs need finite (or zero) variances")
    return minimize_weight_1d(family_criterion(model, cov, setup, measure), family_bounds(model), tol)


def efficiency(
    candidate: Design,
    model: str,
    cov: TaggedCovariance,
    setup: PopulationSetup,
    measure: WeightMeasure | None = None,
) -> float:
    """``IMSE(locally optimal design) / IMSE(candidate)`` at the given variances."""
    basis = _model(model)[0]
    w_loc = locally_optimal_weight(model, cov, setup, measure)
    best = imse_limit(family_design(model, w_loc), basis, measure, cov, setup).value
    value = imse_limit(candidate, basis, measure, cov, setup).value
    # the golden-section optimum can sit a rounding error above a candidate
    # that is itself optimal
    return min(best / value, 1.0)


def rho_to_variance(rho):
    """Inverse of ``rho = d / (1 + d)``."""
    rho = np.asarray(rho, dtype=float)
    if np.any((rho <= 0) | (rho >= 1)):
        raise ValueError("rho must lie strictly between 0 and 1")
    return rho / (1 - rho)


def efficiency_curve(case, n: int, rho, m: int = 1, measure: WeightMeasure | None = None) -> np.ndarray:
    """Efficiency of the minimax design along a grid of rescaled variances.

    The variances the case sends to infinity are set to ``rho / (1 - rho)``.
    """
    c = get_case(case)
    candidate = c.design(closed_form_minimax_weight(c, n))
    setup = PopulationSetup(n, m)
    return np.array(
        [efficiency(candidate, c.model, c.at_variance(float(d)), setup, measure) for d in np.atleast_1d(rho_to_variance(rho))]
    )


class ImseWeightCriterion:
    """IMSE (with limits) as a function of the weights on a fixed support.

    Exposes :meth:`gradient` for :func:`optimize_weights_fixed_support`.
    """

    def __init__(self, support, basis: BasisSpec, measure, cov: TaggedCovariance, setup: PopulationSetup):
        self.support = np.asarray(support, dtype=float)
        self.basis = basis
        self.F = evaluate_basis(basis, self.support)
        self.V = v_matrix(basis, measure)
        self.cov = cov
        self.setup = setup
        self.S = np.flatnonzero(~cov.zero_mask)
        d = cov.values[self.S] * setup.m
        with np.errstate(divide="ignore"):
            self.delta = np.where(np.isinf(d), 0.0, 1.0 / d)

    def _M(self, w):
        return (self.F * np.asarray(w)[:, None]).T @ self.F

    def __call__(self, w) -> float:
        pop, pred = limit_terms(self._M(w), self.V, self.cov, self.setup, strict=False)
        return float(pop + pred)

    def gradient(self, w) -> np.ndarray:
        M = self._M(w)
        try:
            A = np.linalg.solve(M, self.F.T)
            g = -np.einsum("ij,ik,kj->j", A, self.V, A)
            if self.setup.n > 1 and self.S.size:
                S = self.S
                N = M[np.ix_(S, S)] + np.diag(self.delta)
                B = np.linalg.solve(N, self.F[:, S].T)
                g -= (self.setup.n - 1) * np.einsum("ij,ik,kj->j", B, self.V[np.ix_(S, S)], B)
        except np.linalg.LinAlgError:
            return np.full(len(w), np.nan)
        return g


def _relative_gradient(criterion, w, h=1e-7):
    """``<grad f, e_j - w>`` for every vertex ``e_j``."""
    if hasattr(criterion, "gradient"):
        g = np.asarray(criterion.gradient(w), dtype=float)
        return g - g @ w
    f0 = criterion(w)
    out = np.empty(len(w))
    for j in range(len(w)):
        step = -h * w
        step[j] += h
        out[j] = (criterion(w + step) - f0) / h
    return out


def optimize_weights_fixed_support(
    criterion: Callable,
    support,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    initial=None,
) -> Design:
    """Minimize a convex criterion over the weight simplex on a fixed support.

    Pairwise conditional-gradient (Frank-Wolfe) iterations: each step moves
    weight from the worst active support point to the best vertex, with an
    exact line search (root of the directional derivative).  Stops when the
    Frank-Wolfe duality gap is at most ``tol``.

    ``criterion`` maps a weight vector to a float.  If it has a ``gradient``
    method that is used; otherwise simplex-direction forward differences are
    used, which limits attainable accuracy to about ``1e-7``.
    """
    support = np.asarray(support, dtype=float)
    k = support.size
    w = np.full(k, 1.0 / k) if initial is None else np.asarray(initial, dtype=float).copy()
    if not math.isfinite(criterion(w)):
        raise SolverError("criterion is not finite at the starting weights")

    for _ in range(max_iter):
        r = _relative_gradient(criterion, w)
        if not np.all(np.isfinite(r)):
            raise SolverError("non-finite gradient")
        s = int(np.argmin(r))
        gap = -r[s]
        if gap <= tol:
            break
        active = np.flatnonzero(w > 0)
        a = int(active[np.argmax(r[active])])
        if a == s:
            break
        direction = np.zeros(k)
        direction[s], direction[a] = 1.0, -1.0
        gmax = w[a]

        def slope(g):
            rg = _relative_gradient(criterion, w + g * direction)
            return rg[s] - rg[a]

        end = slope(gmax)
        if not np.isfinite(end):
            gmax *= 1 - 1e-9
            end = slope(gmax)
        if not np.isfinite(end) or end <= 0:
            gamma = gmax
        else:
            gamma = brentq(slope, 0.0, gmax, xtol=1e-16, rtol=8.9e-16)
        w_a = w[a]
        w = w + gamma * direction
        if gamma >= w_a:
            w[a] = 0.0
        w = np.maximum(w, 0.0)
        w /= w.sum()
    else:
        raise SolverError(f"no convergence to gap {tol:g} within {max_iter} iterations")

    w[w < 1e-12] = 0.0
    w /= w.sum()
    return Design(support, w)


def optimal_design_on_support(
    support,
    basis: BasisSpec,
    cov: TaggedCovariance,
    setup: PopulationSetup,
    measure: WeightMeasure | None = None,
    tol: float = 1e-8,
) -> Design:
    """Convenience wrapper: IMSE-optimal weights (with limits) on ``support``."""
    d = validate_design(support, np.full(len(support), 1.0 / len(support)))
    crit = ImseWeightCriterion(d.support, basis, measure, cov, setup)
    return optimize_weights_fixed_support(crit, d.support, tol=tol)
