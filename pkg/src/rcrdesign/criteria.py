"""Design criteria for the prediction of individual parameters.

All criteria act on the standardized MSE matrix, whose ``n p`` eigenvalues are
the eigenvalues ``eta`` of ``M^-1`` (once each) and ``mu`` of
``(M + Delta^-1)^-1`` (``n - 1`` times each).  The Kiefer family and the
E-criterion are evaluated through those eigenvalues; the dense-matrix forms
(:func:`phi_q_dense`, :func:`g_trace_form`) are kept as cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from rcrdesign import kernels
from rcrdesign.model import (
    Design,
    DesignError,
    InfoContext,
    Interval,
    RCRModel,
    RegressionBasis,
    dense_mse,
    eigvalsh_sym,
    info_matrix,
    sym_power,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_GRID = 1001

KINDS = ("PhiQ", "D", "A", "E", "G")


@dataclass(frozen=True)
class CriterionSpec:
    """Which criterion to evaluate or optimize.

    ``A`` is ``PhiQ`` with ``q = 1``; ``D`` and ``E`` are the ``q -> 0`` and
    ``q -> inf`` limits and have their own kinds.  ``grid_points`` is used by
    ``G`` (and by the D-optimality check).
    """

    kind: str
    q: Optional[float] = None
    grid_points: int = DEFAULT_GRID

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DesignError(f"unknown criterion kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "PhiQ":
            if self.q is None or not (0.0 < self.q < math.inf):
                raise DesignError(f"PhiQ needs a finite q > 0, got {self.q!r}")
        elif self.kind == "A":
            object.__setattr__(self, "q", 1.0)
        elif self.q is not None:
            raise DesignError(f"criterion {self.kind} takes no q")
        if int(self.grid_points) != self.grid_points or self.grid_points < 2:
            raise DesignError("grid_points must be an integer >= 2")

    @classmethod
    def phi(cls, q: float) -> "CriterionSpec":
        return cls("PhiQ", q=q)

    @property
    def smooth(self) -> bool:
        return self.kind in ("PhiQ", "A", "D")

    @property
    def label(self) -> str:
        return f"PhiQ(q={self.q:g})" if self.kind == "PhiQ" else self.kind


@dataclass(frozen=True)
class CriterionValue:
    value: float
    attaining_x: Optional[float] = None
    parts: Optional[tuple[float, float]] = None


def _eigs(ctx: InfoContext) -> tuple[np.ndarray, np.ndarray]:
    ctx.require_nonsingular()
    return eigvalsh_sym(ctx.M), eigvalsh_sym(ctx.MplusDeltaInv)


def phi_q(ctx: InfoContext, n: int, q: float) -> CriterionValue:
    """Kiefer criterion ``((tr M^-q + (n-1) tr (M + Delta^-1)^-q) / (n p))^(1/q)``.

    ``parts`` holds the fixed-effects and Bayesian traces separately.
    """
    if not q > 0 or not math.isfinite(q):
        raise DesignError(f"q must be a finite positive number, got {q!r}")
    zeta, nu = _eigs(ctx)
    eta, mu = 1.0 / zeta, 1.0 / nu
    with np.errstate(over="ignore"):
        fixed = float(np.sum(eta**q))
        bayes = float((n - 1) * np.sum(mu**q))
    # scale by the largest eigenvalue so large q does not overflow
    top = max(eta.max(), mu.max())
    scaled = np.sum((eta / top) ** q) + (n - 1) * np.sum((mu / top) ** q)
    value = top * (scaled / (n * ctx.p)) ** (1.0 / q)
    return CriterionValue(float(value), parts=(fixed, bayes))


def phi_q_dense(ctx: InfoContext, n: int, q: float) -> float:
    """``((1/(n p)) tr MSE^q)^(1/q)`` from the dense MSE matrix."""
    mse = dense_mse(ctx, n)
    return float((np.trace(sym_power(mse, q)) / mse.shape[0]) ** (1.0 / q))


def d_criterion(ctx: InfoContext, n: int) -> CriterionValue:
    """Geometric-mean limit: ``(det M^-1 det((M + Delta^-1)^-1)^(n-1))^(1/(n p))``."""
    zeta, nu = _eigs(ctx)
    log_det = -np.sum(np.log(zeta)) - (n - 1) * np.sum(np.log(nu))
    return CriterionValue(float(np.exp(log_det / (n * ctx.p))))


def e_criterion(ctx: InfoContext) -> CriterionValue:
    """Largest eigenvalue of ``M^-1``; neither ``n`` nor ``Delta`` enter."""
    ctx.require_nonsingular()
    return CriterionValue(float(1.0 / eigvalsh_sym(ctx.M)[0]))


def sensitivity_matrix(ctx: InfoContext, n: int) -> np.ndarray:
    """``M^-1 + (n-1) (M + Delta^-1)^-1``."""
    return ctx.M_inv() + (n - 1) * ctx.bayes_inv()


def sensitivity_values(ctx: InfoContext, n: int, xs, basis: RegressionBasis) -> np.ndarray:
    S = sensitivity_matrix(ctx, n)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if basis.is_polynomial:
        return kernels.poly_quad_form(S, xs)
    F = basis.matrix(xs)
    return np.einsum("ip,pq,iq->i", F, S, F)


def sensitivity(ctx: InfoContext, n: int, x: float, basis: RegressionBasis) -> float:
    """``f(x)^T (M^-1 + (n-1)(M + Delta^-1)^-1) f(x)``."""
    f = basis(x)
    return float(f @ sensitivity_matrix(ctx, n) @ f)


def g_trace_form(ctx: InfoContext, n: int, x: float, basis: RegressionBasis) -> float:
    """``tr(MSE (I_n kron f(x) f(x)^T))`` from the dense MSE matrix."""
    f = basis(x)
    return float(np.trace(dense_mse(ctx, n) @ np.kron(np.eye(n), np.outer(f, f))))


def golden_max(func, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section search for a maximum of ``func`` on ``[a, b]``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


def max_sensitivity(
    ctx: InfoContext,
    n: int,
    basis: RegressionBasis,
    region: Interval,
    grid_points: int = DEFAULT_GRID,
    xtol: float = 1e-9,
) -> tuple[float, float]:
    """Maximum of the sensitivity function over ``region`` and where it is attained.

    The straight line gives a convex parabola, so only the two ends are
    evaluated.  Otherwise the grid maximum is polished by golden section
    inside the neighbouring cells.
    """
    if basis.is_line:
        ends = np.array([region.lo, region.hi])
        vals = sensitivity_values(ctx, n, ends, basis)
        i = int(np.argmax(vals))
        return float(vals[i]), float(ends[i])
    xs = region.grid(grid_points)
    vals = sensitivity_values(ctx, n, xs, basis)
    i = int(np.argmax(vals))
    best_x, best = float(xs[i]), float(vals[i])
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    S = sensitivity_matrix(ctx, n)

    def phi(x):
        f = basis(x)
        return float(f @ S @ f)

    x, v = golden_max(phi, a, b, xtol)
    if v > best:
        best_x, best = x, v
    return best, best_x


def g_criterion(
    ctx: InfoContext,
    n: int,
    basis: RegressionBasis,
    region: Interval,
    grid_points: int = DEFAULT_GRID,
) -> CriterionValue:
    if grid_points < 2:
        raise DesignError("grid_points must be >= 2")
    value, x = max_sensitivity(ctx, n, basis, region, grid_points)
    return CriterionValue(value, attaining_x=x)


class DOptimalityCheck(NamedTuple):
    max_violation: float
    equality_gap_at_support: float
    bound: float
    attaining_x: float
    support_values: tuple[float, ...]

    def certified(self, tol: float) -> bool:
        return self.max_violation <= tol and self.equality_gap_at_support <= tol


def d_optimality_bound(ctx: InfoContext, n: int) -> float:
    """``p + (n-1) tr((M + Delta^-1)^-1 M)``."""
    return float(ctx.p + (n - 1) * np.trace(ctx.bayes_inv() @ ctx.M))


def d_optimality_check(
    ctx: InfoContext,
    n: int,
    basis: RegressionBasis,
    region: Interval,
    grid_points: int = DEFAULT_GRID,
    design: Optional[Design] = None,
) -> DOptimalityCheck:
    """Compare the sensitivity function with the D-optimality bound.

    The design is D-optimal iff the sensitivity never exceeds the bound on
    the region and meets it at every support point of positive weight.
    ``design`` defaults to the one the context was built from.
    """
    design = design if design is not None else ctx.design
    if design is None:
        raise DesignError("d_optimality_check needs the design's support points")
    bound = d_optimality_bound(ctx, n)
    top, x_top = max_sensitivity(ctx, n, basis, region, grid_points)
    support = design.points[design.weights > 0]
    at_support = sensitivity_values(ctx, n, support, basis)
    gap = float(np.max(np.abs(at_support - bound)))
    return DOptimalityCheck(
        max_violation=float(top - bound),
        equality_gap_at_support=gap,
        bound=bound,
        attaining_x=x_top,
        support_values=tuple(float(v) for v in at_support),
    )


def evaluate(spec: CriterionSpec, model: RCRModel, design: Design) -> CriterionValue:
    """Evaluate ``spec`` for ``design`` under ``model``."""
    ctx = info_matrix(model, design)
    return evaluate_context(spec, ctx, model)


def evaluate_context(spec: CriterionSpec, ctx: InfoContext, model: RCRModel) -> CriterionValue:
    if spec.kind in ("PhiQ", "A"):
        return phi_q(ctx, model.n, spec.q)
    if spec.kind == "D":
        return d_criterion(ctx, model.n)
    if spec.kind == "E":
        return e_criterion(ctx)
    return g_criterion(ctx, model.n, model.basis, model.region, spec.grid_points)
