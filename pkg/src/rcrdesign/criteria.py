"""Prediction criteria for random coefficient regression.

For an approximate design with information matrix ``M`` and the weighting
matrix ``V = int f f^T dnu`` the integrated mean squared error of the
individual predictions is::

    IMSE(xi) = tr(M^-1 V) + (n - 1) tr((M + Delta^-1)^-1 V),   Delta = m D

(the common factor ``sigma^2 / m`` is dropped).  The first summand is the
population term and the second the prediction term.

Limits ``d_i -> 0`` and ``d_i -> inf`` are taken structurally.  With Z the
zero-tagged coefficients and S the rest, ``(M + Delta^-1)^-1`` tends to the
matrix that is zero on Z and ``(M_SS + diag(delta))^-1`` on S, where
``delta_i = 1 / (m d_i)`` for finite and ``0`` for infinite ``d_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import TaggedCovariance
from .model import BasisSpec, Design, PopulationSetup, WeightMeasure, information_matrix, v_matrix

RCOND_MIN = 1e-12


class SingularCriterion(ArithmeticError):
    """A matrix that has to be inverted is (numerically) singular."""

    def __init__(self, matrix: str, rcond: float):
        self.matrix = matrix
        self.rcond = rcond
        super().__init__(f"{matrix} is singular (reciprocal condition number {rcond:.3g} < {RCOND_MIN:g})")


@dataclass(frozen=True)
class CriterionReport:
    """Criterion value split into population and prediction terms.

    ``scaling`` records that values omit the ``sigma^2 / m`` factor.
    """

    value: float
    population_term: float
    prediction_term: float
    scaling: str = "sigma^2/m omitted"

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "population_term": self.population_term,
            "prediction_term": self.prediction_term,
        }


def adjusted_dispersion(cov: TaggedCovariance, m: int) -> TaggedCovariance:
    """``Delta = m D``; Zero and Infinite tags are fixed points."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be an integer >= 1, got {m!r}")
    return TaggedCovariance(tuple(v * m if v != 0 else 0.0 for v in cov.entries))


def _rcond(A: np.ndarray) -> np.ndarray:
    # A is symmetric here, so |eigenvalues| are its singular values
    s = np.abs(np.linalg.eigvalsh(A))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = s.min(axis=-1) / s.max(axis=-1)
    return np.nan_to_num(r, nan=0.0)


def _scaled_rcond(A: np.ndarray) -> np.ndarray:
    # Jacobi scaling: a large penalty on the diagonal is not ill-conditioning
    d = np.diagonal(A, axis1=-2, axis2=-1)
    bad = ~(d > 0)
    s = np.sqrt(np.where(bad, 1.0, d))
    r = _rcond(A / (s[..., :, None] * s[..., None, :]))
    return np.where(np.any(bad, axis=-1), 0.0, r)


def _trace_solve(A: np.ndarray, B: np.ndarray, ok: np.ndarray) -> np.ndarray:
    """``tr(A^-1 B)`` over a stack, ``inf`` where ``ok`` is False."""
    eye = np.eye(A.shape[-1])
    A_safe = np.where(ok[..., None, None], A, eye)
    X = np.linalg.solve(A_safe, np.broadcast_to(B, A_safe.shape))
    return np.where(ok, np.trace(X, axis1=-2, axis2=-1), np.inf)


def limit_terms(M, V, cov: TaggedCovariance, setup: PopulationSetup, *, strict: bool = True):
    """Population and prediction terms for a stack of information matrices.

    ``M`` has shape ``(..., p, p)``.  With ``strict`` a singular matrix raises
    :class:`SingularCriterion`; otherwise the affected entries become ``inf``.
    """
    M = np.asarray(M, dtype=float)
    V = np.asarray(V, dtype=float)
    p = M.shape[-1]
    if cov.p != p or V.shape != (p, p):
        raise ValueError(f"dimension mismatch: M is {p}x{p}, V is {V.shape}, covariance has {cov.p} entries")

    rc = _rcond(M)
    ok = rc > RCOND_MIN
    if strict and not np.all(ok):
        raise SingularCriterion("information matrix M", float(np.min(rc)))
    pop = _trace_solve(M, V, ok)

    S = np.flatnonzero(~cov.zero_mask)
    if setup.n == 1 or S.size == 0:
        return pop, np.where(ok, 0.0, np.inf)

    d = adjusted_dispersion(cov, setup.m).values[S]
    with np.errstate(divide="ignore"):
        delta = np.where(np.isinf(d), 0.0, 1.0 / d)
    N = M[..., S[:, None], S] + np.diag(delta)
    rcN = _scaled_rcond(N)
    okN = ok & (rcN > RCOND_MIN)
    if strict and not np.all(okN):
        raise SingularCriterion("prediction matrix M_SS + Delta_SS^-1", float(np.min(rcN)))
    pred = (setup.n - 1) * _trace_solve(N, V[np.ix_(S, S)], okN)
    return pop, pred


def imse_limit(
    design: Design,
    basis: BasisSpec,
    measure: WeightMeasure | None,
    cov: TaggedCovariance,
    setup: PopulationSetup,
) -> CriterionReport:
    """IMSE of the individual predictions, with Zero/Infinite variances as limits.

    With all entries finite this is exactly :func:`imse_pred`.
    """
    M = information_matrix(design, basis)
    V = v_matrix(basis, measure)
    pop, pred = limit_terms(M, V, cov, setup)
    return CriterionReport(float(pop + pred), float(pop), float(pred))


def imse_pred(
    design: Design,
    basis: BasisSpec,
    measure: WeightMeasure | None,
    cov: TaggedCovariance,
    setup: PopulationSetup,
) -> CriterionReport:
    """IMSE criterion for known, finite variances.

    Examples
    --------
    >>> from rcrdesign.model import validate_design
    >>> r = imse_pred(validate_design([0, 1], [0.5, 0.5]), BasisSpec.linear(), None,
    ...               TaggedCovariance((1.0, 1.0)), PopulationSetup(n=1, m=5))
    >>> round(r.value, 12), r.prediction_term
    (1.333333333333, 0.0)
    """
    if not cov.all_finite:
        raise ValueError(f"imse_pred needs finite variances, got {cov}; use imse_limit for limiting cases")
    return imse_limit(design, basis, measure, cov, setup)


def fixed_effects_imse(design: Design, basis: BasisSpec, measure: WeightMeasure | None = None) -> float:
    """``tr(M^-1 V)``, the IMSE of the fixed-effects model."""
    M = information_matrix(design, basis)
    rc = float(_rcond(M))
    if rc <= RCOND_MIN:
        raise SingularCriterion("information matrix M", rc)
    return float(np.trace(np.linalg.solve(M, v_matrix(basis, measure))))


@dataclass(frozen=True)
class MseMatrix:
    """``np x np`` MSE matrix of the stacked predictors, in units of ``sigma^2``."""

    matrix: np.ndarray
    n: int
    p: int

    def block(self, i: int, j: int) -> np.ndarray:
        p = self.p
        return self.matrix[i * p:(i + 1) * p, j * p:(j + 1) * p]


def _as_diag(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim == 2:
        if np.any(D != np.diag(np.diagonal(D))):
            raise ValueError("D must be diagonal")
        D = np.diagonal(D)
    if not np.all((D > 0) & np.isfinite(D)):
        raise ValueError(f"D must have positive finite diagonal, got {D.tolist()}")
    return D


def mse_matrix(F, D, n: int) -> MseMatrix:
    """MSE matrix of the BLUPs of all ``n`` individual coefficient vectors.

    ``(1/n) 11^T (x) (F^T F)^-1 + (I_n - (1/n) 11^T) (x) (F^T F + D^-1)^-1``

    ``D`` may be given as the diagonal vector or the diagonal matrix.
    """
    F = np.asarray(F, dtype=float)
    d = _as_diag(D)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    G = F.T @ F
    if F.shape[1] != d.size:
        raise ValueError(f"F has {F.shape[1]} columns but D has {d.size} entries")
    rc = float(_rcond(G))
    if rc <= RCOND_MIN:
        raise SingularCriterion("F^T F (design matrix not of full column rank)", rc)
    J = np.full((n, n), 1.0 / n)
    A = np.linalg.inv(G)
    B = np.linalg.inv(G + np.diag(1.0 / d))
    out = np.kron(J, A) + np.kron(np.eye(n) - J, B)
    return MseMatrix(0.5 * (out + out.T), int(n), d.size)
