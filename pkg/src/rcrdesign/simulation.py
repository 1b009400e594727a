"""BLUP of individual coefficients and Monte Carlo checks of its MSE matrix.

Observations follow ``Y_ij = f(x_j)^T beta_i + eps_ij`` with
``beta_i ~ N(beta, sigma^2 D)`` and ``eps_ij ~ N(0, sigma^2)``.  Gaussian draws
are a simulation convention only; the MSE formula needs first and second
moments alone.

Random numbers come from Philox streams keyed by the seed, one stream per
block of ``block_size`` replicates (the block index selects the counter).  A
block's draws therefore do not depend on which worker handles it, and block
sums are combined in index order, so results are bit-identical for any
``workers``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .criteria import RCOND_MIN, SingularCriterion, _rcond, mse_matrix
from .model import BasisSpec, Design, evaluate_basis

MIN_REPLICATES = 1000


def exact_replications(design: Design, m: int) -> np.ndarray:
    """Integer replication counts ``m_j`` summing to ``m``.

    Largest-remainder rounding of ``m * w_j``: floors first, then the leftover
    observations go to the largest fractional parts (ties to the smaller index).
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be an integer >= 1, got {m!r}")
    target = m * design.weights
    counts = np.floor(target + 1e-9).astype(int)
    short = m - counts.sum()
    if short > 0:
        frac = target - counts
        order = np.argsort(-frac, kind="stable")
        counts[order[:short]] += 1
    return counts


def design_matrix(design: Design, basis: BasisSpec, m: int) -> np.ndarray:
    """``m x p`` design matrix of the exact design nearest to ``design``."""
    counts = exact_replications(design, m)
    x = np.repeat(design.support, counts)
    return evaluate_basis(basis, x)


def _check_F(F: np.ndarray) -> np.ndarray:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    rc = float(_rcond(F.T @ F))
    if rc <= RCOND_MIN:
        raise SingularCriterion("F^T F (design matrix not of full column rank)", rc)
    return F


def _check_D(D, p: int) -> np.ndarray:
    d = np.asarray(D, dtype=float)
    if d.ndim == 2:
        d = np.diagonal(d)
    if d.shape != (p,) or not np.all(d > 0):
        raise ValueError(f"D must be {p} positive variances, got {np.asarray(D).tolist()}")
    return d


@dataclass(frozen=True)
class PredictionResult:
    """BLUPs ``individual`` (n x p), population estimate, and per-individual LS fits."""

    individual: np.ndarray
    population: np.ndarray
    individual_ls: np.ndarray


def _blup_stack(F, d, Y):
    # Y: (..., n, m) -> BLUPs (..., n, p), population (..., p), LS (..., n, p)
    G = F.T @ F
    P = np.linalg.solve(G, F.T)
    ls = Y @ P.T
    # centred on the first individual so identical rows give an exact mean
    ref = ls[..., :1, :]
    pop = ref[..., 0, :] + (ls - ref).mean(axis=-2)
    W = np.linalg.solve(G + np.diag(1.0 / d), G)
    ind = pop[..., None, :] + (ls - pop[..., None, :]) @ W.T
    return ind, pop, ls


def blup(F, D, Y) -> PredictionResult:
    """Best linear unbiased predictors of all individual coefficient vectors.

    ``beta_i = (F^T F + D^-1)^-1 (F^T F beta_i_ls + D^-1 beta_pop)``, computed in
    the equivalent shrinkage form ``beta_pop + (F^T F + D^-1)^-1 F^T F (beta_i_ls - beta_pop)``.

    Parameters
    ----------
    F : (m, p) array
        Design matrix shared by all individuals; full column rank.
    D : (p,) or diagonal (p, p) array
        Random-effect covariance divided by ``sigma^2``.
    Y : (n, m) array
        One row of observations per individual.
    """
    F = _check_F(F)
    d = _check_D(D, F.shape[1])
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[-1] != F.shape[0]:
        raise ValueError(f"Y rows have {Y.shape[-1]} observations, F has {F.shape[0]} rows")
    ind, pop, ls = _blup_stack(F, d, Y)
    return PredictionResult(ind, pop, ls)


@dataclass(frozen=True)
class SimulationPlan:
    """Everything needed to draw replicate data sets.

    ``D`` holds the diagonal of the random-effect covariance in units of
    ``sigma2``.
    """

    F: np.ndarray
    D: np.ndarray
    beta: np.ndarray
    sigma2: float = 1.0
    n: int = 1
    replicates: int = 1000
    seed: int = 0
    block_size: int = field(default=1024)

    def __post_init__(self):
        F = _check_F(self.F)
        p = F.shape[1]
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "D", _check_D(self.D, p))
        beta = np.asarray(self.beta, dtype=float).ravel()
        if beta.shape != (p,):
            raise ValueError(f"beta must have length {p}")
        object.__setattr__(self, "beta", beta)
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be an integer >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    @property
    def p(self) -> int:
        return self.F.shape[1]

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def n_blocks(self) -> int:
        return -(-self.replicates // self.block_size)


@dataclass(frozen=True)
class ReplicateBlock:
    start: int
    coefficients: np.ndarray  # (r, n, p) true beta_i
    observations: np.ndarray  # (r, n, m)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, block]))


def draw_block(plan: SimulationPlan, block: int) -> ReplicateBlock:
    start = block * plan.block_size
    r = min(plan.block_size, plan.replicates - start)
    if r <= 0:
        raise IndexError(f"block {block} out of range")
    rng = _block_rng(plan.seed, block)
    sd = np.sqrt(plan.sigma2 * plan.D)
    coef = plan.beta + sd * rng.standard_normal((r, plan.n, plan.p))
    eps = np.sqrt(plan.sigma2) * rng.standard_normal((r, plan.n, plan.m))
    return ReplicateBlock(start, coef, coef @ plan.F.T + eps)


def simulate(plan: SimulationPlan) -> Iterator[ReplicateBlock]:
    """Yield replicate data in blocks, in replicate order."""
    for b in range(plan.n_blocks):
        yield draw_block(plan, b)


def _pairwise_last(a: np.ndarray) -> np.ndarray:
    # numpy reduces a contiguous last axis pairwise
    return np.ascontiguousarray(a).sum(axis=-1)


def _block_moments(plan: SimulationPlan, b: int):
    blk = draw_block(plan, b)
    ind, _, _ = _blup_stack(plan.F, plan.D, blk.observations)
    err = (ind - blk.coefficients).reshape(len(ind), -1).T / np.sqrt(plan.sigma2)
    outer = err[:, None, :] * err[None, :, :]
    return _pairwise_last(outer), _pairwise_last(outer**2)


@dataclass(frozen=True)
class MonteCarloMSE:
    """Empirical MSE matrix (units of ``sigma^2``) with entrywise standard errors."""

    mse: np.ndarray
    stderr: np.ndarray
    replicates: int


def monte_carlo_mse(plan: SimulationPlan, workers: int = 1) -> MonteCarloMSE:
    """Average ``(B_hat - B)(B_hat - B)^T`` over all replicates."""
    blocks = range(plan.n_blocks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda b: _block_moments(plan, b), blocks))
    else:
        parts = [_block_moments(plan, b) for b in blocks]
    s1 = _pairwise_last(np.stack([q[0] for q in parts], axis=-1))
    s2 = _pairwise_last(np.stack([q[1] for q in parts], axis=-1))
    R = plan.replicates
    mean = s1 / R
    var = np.maximum(s2 - R * mean**2, 0.0) / max(R - 1, 1)
    return MonteCarloMSE(0.5 * (mean + mean.T), np.sqrt(var / R), R)


def empirical_mse(plan: SimulationPlan, workers: int = 1) -> np.ndarray:
    if plan.replicates < MIN_REPLICATES:
        raise ValueError(f"empirical_mse needs at least {MIN_REPLICATES} replicates, got {plan.replicates}")
    return monte_carlo_mse(plan, workers).mse


@dataclass(frozen=True)
class MseCheck:
    max_abs_deviation: float
    stderr_at_max: float
    max_z: float
    z_limit: float
    passed: bool
    empirical: MonteCarloMSE
    theoretical: np.ndarray


def check_mse(plan: SimulationPlan, z_limit: float = 4.0, workers: int = 1) -> MseCheck:
    """Compare the Monte Carlo MSE with the closed form entry by entry."""
    if plan.replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates, got {plan.replicates}")
    emp = monte_carlo_mse(plan, workers)
    theo = mse_matrix(plan.F, plan.D, plan.n).matrix
    dev = np.abs(emp.mse - theo)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(dev == 0, 0.0, dev / emp.stderr)
    i = np.unravel_index(np.argmax(dev), dev.shape)
    max_z = float(np.max(z))
    return MseCheck(float(dev[i]), float(emp.stderr[i]), max_z, z_limit, max_z <= z_limit, emp, theo)
