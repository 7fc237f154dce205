"""BLUP of individual parameters and Monte Carlo check of its MSE matrix."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rcrdesign.model import (
    Design,
    DesignError,
    RCRModel,
    RegressionBasis,
    SingularDesignError,
    mse_matrix,
    scale_mse,
    symmetrize,
)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Responses ``Y`` (``n x m``) observed at the rows of ``F`` (``m x p``)."""

    Y: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if Y.shape[1] != F.shape[0]:
            raise DesignError(f"Y has {Y.shape[1]} columns but F has {F.shape[0]} rows")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "F", F)


@dataclass(frozen=True, eq=False)
class PredictionResult:
    B_hat: np.ndarray
    beta_hat: np.ndarray
    beta_hat_ind: np.ndarray


def blup(obs: ObservationSet, D: Optional[np.ndarray] = None, *, D_inv: Optional[np.ndarray] = None) -> PredictionResult:
    """Best linear unbiased predictor of every individual's parameter vector.

    Each prediction is the matrix-weighted combination
    ``(F'F + D^-1)^-1 (F'F beta_ind_i + D^-1 beta_hat)`` of the individual
    least-squares estimate and the population estimate.  Pass ``D_inv``
    directly to use a singular precision such as zero (no shrinkage).
    """
    F, Y = obs.F, obs.Y
    p = F.shape[1]
    if np.linalg.matrix_rank(F) < p:
        raise SingularDesignError("design matrix F is rank deficient")
    if D_inv is None:
        if D is None:
            raise DesignError("blup needs D or D_inv")
        D_inv = np.linalg.inv(np.asarray(D, dtype=float))
    D_inv = symmetrize(D_inv)
    G = F.T @ F
    ind = np.linalg.solve(G, F.T @ Y.T).T
    pop = ind.mean(axis=0)
    B_hat = np.linalg.solve(G + D_inv, G @ ind.T + (D_inv @ pop)[:, None]).T
    return PredictionResult(B_hat=B_hat, beta_hat=pop, beta_hat_ind=ind)


def predict_response(result: PredictionResult, basis: RegressionBasis, x: float) -> np.ndarray:
    """Predicted response ``f(x)^T beta_hat_i`` of every individual."""
    return result.B_hat @ basis(x)


def exact_design_matrix(basis: RegressionBasis, design: Design) -> np.ndarray:
    """Rows ``f(x_j)^T`` replicated ``m_j`` times, ascending in ``x``."""
    if not design.is_exact:
        raise DesignError("simulation needs an exact design with integer replications")
    order = np.argsort(design.points, kind="stable")
    xs = np.repeat(design.points[order], design.counts[order])
    return basis.matrix(xs)


def _draw(children, start, stop, out):
    for r in range(start, stop):
        out[r] = np.random.Generator(np.random.Philox(children[r])).standard_normal(out.shape[1])


def draw_normals(seed: int, replicates: int, size: int, threads: int = 1) -> np.ndarray:
    """Standard normals, one independent Philox stream per replicate.

    Row ``r`` depends only on ``(seed, r)``, so the result is the same for
    any thread count.
    """
    children = np.random.SeedSequence(seed).spawn(replicates)
    out = np.empty((replicates, size))
    threads = max(1, min(int(threads), replicates))
    if threads == 1:
        _draw(children, 0, replicates, out)
        return out
    bounds = np.linspace(0, replicates, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        jobs = [pool.submit(_draw, children, a, b, out) for a, b in zip(bounds[:-1], bounds[1:])]
        for job in jobs:
            job.result()
    return out


def simulate_prediction_errors(
    model: RCRModel,
    design: Design,
    replicates: int,
    seed: int,
    *,
    beta: Optional[np.ndarray] = None,
    D_inv: Optional[np.ndarray] = None,
    threads: int = 1,
) -> np.ndarray:
    """Prediction errors ``beta_hat_i - beta_i``, shape ``(replicates, n, p)``.

    Individual parameters are Gaussian with mean ``beta`` and covariance
    ``sigma^2 D``; errors are Gaussian with variance ``sigma^2``.  ``D_inv``
    overrides the precision the predictor uses (e.g. zero).
    """
    if design.m != model.m:
        raise DesignError(f"design has {design.m} observations per individual, model expects m={model.m}")
    F = exact_design_matrix(model.basis, design)
    n, m, p = model.n, model.m, model.p
    sigma = np.sqrt(model.sigma2)
    beta = np.ones(p) if beta is None else np.asarray(beta, dtype=float)
    L = np.linalg.cholesky(model.D)
    Z = draw_normals(seed, replicates, n * p + n * m, threads)
    B = beta + sigma * Z[:, : n * p].reshape(replicates, n, p) @ L.T
    Y = B @ F.T + sigma * Z[:, n * p :].reshape(replicates, n, m)

    D_inv = np.linalg.inv(model.D) if D_inv is None else np.asarray(D_inv, dtype=float)
    G = F.T @ F
    ind = Y @ F @ np.linalg.inv(G)
    pop = ind.mean(axis=1, keepdims=True)
    A_inv = np.linalg.inv(G + D_inv)
    B_hat = (ind @ G + pop @ D_inv) @ A_inv
    return B_hat - B


@dataclass(frozen=True, eq=False)
class MonteCarloMSE:
    empirical: np.ndarray
    theoretical: np.ndarray
    standard_errors: np.ndarray
    max_abs_dev: float
    max_se_units: float
    replicates: int


def theoretical_mse(model: RCRModel, design: Design) -> np.ndarray:
    """Unstandardized MSE matrix ``sigma^2/m`` times the standardized one."""
    return scale_mse(mse_matrix(model, design), model.sigma2, model.m)


def simulate_mse(
    model: RCRModel,
    design: Design,
    replicates: int,
    seed: int,
    *,
    D_inv: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> MonteCarloMSE:
    if replicates < 100:
        raise DesignError("simulate_mse needs at least 100 replicates")
    if threads is None:
        threads = int(os.environ.get("RCRDESIGN_THREADS", "1") or 1)
    err = simulate_prediction_errors(model, design, replicates, seed, D_inv=D_inv, threads=threads)
    e = err.reshape(replicates, -1)
    k = e.shape[1]
    emp = np.empty((k, k))
    se = np.empty((k, k))
    # entrywise reductions use numpy's pairwise summation, independent of BLAS threading
    for a in range(k):
        for b in range(a, k):
            prod = e[:, a] * e[:, b]
            emp[a, b] = emp[b, a] = prod.mean()
            se[a, b] = se[b, a] = prod.std(ddof=1) / np.sqrt(replicates)
    if D_inv is None:
        theo = theoretical_mse(model, design)
    else:
        theo = _mse_with_precision(model, design, D_inv)
    dev = np.abs(emp - theo)
    return MonteCarloMSE(
        empirical=emp,
        theoretical=theo,
        standard_errors=se,
        max_abs_dev=float(dev.max()),
        max_se_units=float(np.max(dev / se)),
        replicates=replicates,
    )


def _mse_with_precision(model: RCRModel, design: Design, D_inv) -> np.ndarray:
    F = exact_design_matrix(model.basis, design)
    G = F.T @ F
    n = model.n
    J = np.full((n, n), 1.0 / n)
    mse = np.kron(J, np.linalg.inv(G)) + np.kron(np.eye(n) - J, np.linalg.inv(G + np.asarray(D_inv, dtype=float)))
    return model.sigma2 * symmetrize(mse)
