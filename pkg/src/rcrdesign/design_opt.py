"""Optimal approximate designs.

Two routes are provided.  For the straight line ``f(x) = (1, x)`` with a
diagonal random-effects covariance, any design is Loewner-dominated by a
design on the two ends of the region, and the G-optimal end weight is where
the sensitivity function takes equal values at both ends; those weights are
found by bisection (``[0, a]``) or are exactly 1/2 (``[-b, b]``).  For
everything else :func:`optimize_weights` works numerically on a fixed
candidate support.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from rcrdesign import kernels
from rcrdesign.criteria import (
    CriterionSpec,
    DOptimalityCheck,
    d_optimality_check,
    evaluate_context,
    g_criterion,
    max_sensitivity,
    sensitivity_values,
)
from rcrdesign.model import (
    Design,
    DesignError,
    InfoContext,
    Interval,
    RCRModel,
    RegressionBasis,
    info_from_weights,
    is_singular,
    sym_power,
    symmetrize,
)

log = logging.getLogger(__name__)

ZERO_A = "zero_a"
SYMMETRIC = "symmetric"


class NoInteriorSolution(Exception):
    """The equalization equation has no root in ``(0, 1)``.

    The G-optimal design then degenerates to a single point with a singular
    information matrix.
    """


class InfeasibleSupportError(DesignError):
    """No interior weight vector on the candidate support gives a non-singular ``M``."""


# ---------------------------------------------------------------------------
# Straight line: majorization and equalization
# ---------------------------------------------------------------------------


def _check_support(design: Design, region: Interval) -> None:
    try:
        design.check_region(region)
    except DesignError as exc:
        raise DesignError(f"majorization domain error: {exc}") from None


def majorize_to_endpoints_0a(design: Design, a: float) -> Design:
    """Two-point design on ``{0, a}`` with the same first moment as ``design``.

    Its information matrix dominates that of ``design`` for the straight line.
    """
    if not a > 0:
        raise DesignError("a must be positive")
    _check_support(design, Interval(0.0, a))
    w = float(np.clip(np.dot(design.points, design.weights) / a, 0.0, 1.0))
    return Design([0.0, a], [1.0 - w, w])


def majorize_to_endpoints_symmetric(design: Design, b: float) -> Design:
    """Two-point design on ``{-b, b}`` with the same first moment as ``design``."""
    if not b > 0:
        raise DesignError("b must be positive")
    _check_support(design, Interval(-b, b))
    w = float(np.clip(0.5 * (np.dot(design.points, design.weights) / b + 1.0), 0.0, 1.0))
    return Design([-b, b], [1.0 - w, w])


@dataclass(frozen=True)
class LineModelProblem:
    """Straight-line model with ``D = diag(d1, d2)`` on ``[0, a]`` or ``[-b, b]``.

    ``c1 = 1/(m d1)`` and ``c2 = 1/(m d2)`` are the diagonal entries of
    ``Delta^-1``; ``extent`` is ``a`` or ``b``.
    """

    region_kind: str
    extent: float
    c1: float
    c2: float
    n: int
    m: int = 1

    def __post_init__(self):
        if self.region_kind not in (ZERO_A, SYMMETRIC):
            raise DesignError(f"unknown region kind {self.region_kind!r}")
        for name in ("extent", "c1", "c2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DesignError(f"{name} must be finite and positive, got {v!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DesignError("n must be a positive integer")

    @classmethod
    def from_model(cls, model: RCRModel) -> "LineModelProblem":
        if not model.basis.is_line:
            raise DesignError("closed-form line solvers need the straight-line basis (1, x)")
        if not model.diagonal_D:
            raise DesignError("closed-form line solvers need a diagonal D")
        lo, hi = model.region.lo, model.region.hi
        if lo == 0.0:
            kind, extent = ZERO_A, hi
        elif lo == -hi:
            kind, extent = SYMMETRIC, hi
        else:
            raise DesignError(f"closed-form line solvers need [0, a] or [-b, b], got [{lo}, {hi}]")
        d1, d2 = np.diag(model.D)
        return cls(kind, extent, 1.0 / (model.m * d1), 1.0 / (model.m * d2), model.n, model.m)

    @property
    def region(self) -> Interval:
        if self.region_kind == ZERO_A:
            return Interval(0.0, self.extent)
        return Interval(-self.extent, self.extent)

    @property
    def delta_inv(self) -> np.ndarray:
        return np.diag([self.c1, self.c2])

    def design(self, w: float) -> Design:
        """Two-point design on the region's ends with weight ``w`` on the right end."""
        region = self.region
        return Design([region.lo, region.hi], [1.0 - w, w])

    def context(self, w: float) -> InfoContext:
        d = self.design(w)
        F = np.vander(d.points, 2, increasing=True)
        return InfoContext.from_matrices(info_from_weights(F, d.weights), self.delta_inv, design=d)

    def g_values(self, ws) -> np.ndarray:
        """G-criterion of the end-point designs for every weight in ``ws``."""
        region = self.region
        return kernels.line_two_point_g(
            region.lo, region.hi, region.lo, region.hi, self.delta_inv, self.n, np.asarray(ws, dtype=float)
        )

    def end_sensitivities(self, w: float) -> tuple[float, float]:
        region = self.region
        basis = RegressionBasis.polynomial(2)
        left, right = sensitivity_values(self.context(w), self.n, [region.lo, region.hi], basis)
        return float(left), float(right)


class GWeightSolution(NamedTuple):
    weight: float
    value: float
    residual: float
    equalization_gap: float


def equalization_residual_0a(w: float, a: float, c1: float, c2: float, n: int) -> float:
    """Left minus right side of the equalization equation on ``[0, a]``.

    Equals ``Phi(0, xi) - Phi(a, xi)`` for the design with weight ``w`` at ``a``.
    """
    a2 = a * a
    lhs = (2.0 * w - 1.0) / (w * (1.0 - w))
    rhs = (n - 1) * a2 * (1.0 + c1 - 2.0 * w) / ((1.0 + c1) * (a2 * w + c2) - a2 * w * w)
    return lhs - rhs


def equalization_residual_symmetric(w: float, b: float, c1: float, c2: float, n: int) -> float:
    b2 = b * b
    lhs = (2.0 * w - 1.0) / (w * (1.0 - w))
    rhs = (n - 1) * 4.0 * b2 * (1.0 - 2.0 * w) / ((1.0 + c1) * (b2 + c2) - b2 * (2.0 * w - 1.0) ** 2)
    return lhs - rhs


def _bisect(h, lo: float, hi: float, tol: float) -> float:
    flo = h(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = h(mid)
        if abs(fmid) <= tol or hi - lo <= 4 * np.finfo(float).eps:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_g_weight_0a(prob: LineModelProblem, eps: float = 1e-9, tol: float = 1e-12) -> GWeightSolution:
    """G-optimal weight at ``a`` for the straight line on ``[0, a]``.

    Bisection on the equalization equation, first on ``[0.5, 1 - eps]`` and
    then over a 1000-cell scan of ``(eps, 1 - eps)``.

    Raises
    ------
    NoInteriorSolution
        If no sign change is found.
    """
    if prob.region_kind != ZERO_A:
        raise DesignError("solve_g_weight_0a needs a [0, a] problem")

    def h(w):
        return equalization_residual_0a(w, prob.extent, prob.c1, prob.c2, prob.n)

    lo, hi = 0.5, 1.0 - eps
    if h(lo) == 0.0:
        w = lo
    elif (h(lo) < 0) != (h(hi) < 0):
        w = _bisect(h, lo, hi, tol)
    else:
        edges = np.linspace(eps, 1.0 - eps, 1001)
        signs = np.sign([h(e) for e in edges])
        cells = np.flatnonzero(signs[:-1] * signs[1:] <= 0)
        if cells.size == 0:
            raise NoInteriorSolution(f"no root of the equalization equation in (0, 1) for {prob}")
        w = _bisect(h, edges[cells[0]], edges[cells[0] + 1], tol)
    return _solution(prob, w, h(w))


def solve_g_weight_symmetric(prob: LineModelProblem) -> GWeightSolution:
    """The G-optimal weight on ``[-b, b]`` is 1/2 for any ``c1, c2, n``."""
    if prob.region_kind != SYMMETRIC:
        raise DesignError("solve_g_weight_symmetric needs a [-b, b] problem")
    w = 0.5
    residual = equalization_residual_symmetric(w, prob.extent, prob.c1, prob.c2, prob.n)
    if abs(residual) > 1e-12:
        raise ArithmeticError(f"equalization residual {residual!r} at w=0.5")
    return _solution(prob, w, residual)


def _solution(prob: LineModelProblem, w: float, residual: float) -> GWeightSolution:
    ctx = prob.context(w)
    value = g_criterion(ctx, prob.n, RegressionBasis.polynomial(2), prob.region).value
    left, right = prob.end_sensitivities(w)
    return GWeightSolution(float(w), value, float(residual), abs(left - right))


def solve_g_weight(prob: LineModelProblem) -> GWeightSolution:
    if prob.region_kind == ZERO_A:
        return solve_g_weight_0a(prob)
    return solve_g_weight_symmetric(prob)


class DGProbe(NamedTuple):
    weight: float
    design: Design
    g_value: float
    max_violation: float
    equality_gap: float
    certified: bool


def dg_equivalence_probe(model: RCRModel, grid_points: int = 1001, tol: float = 1e-6) -> DGProbe:
    """Check the D-optimality condition at the G-optimal line design.

    Propagates :class:`NoInteriorSolution` from the equalization solver.
    """
    prob = LineModelProblem.from_model(model)
    sol = solve_g_weight(prob)
    design = prob.design(sol.weight)
    ctx = InfoContext.from_matrices(prob.context(sol.weight).M, model.Delta_inv, design=design)
    check = d_optimality_check(ctx, model.n, model.basis, model.region, grid_points)
    return DGProbe(
        weight=sol.weight,
        design=design,
        g_value=sol.value,
        max_violation=check.max_violation,
        equality_gap=check.equality_gap_at_support,
        certified=check.certified(tol),
    )


# ---------------------------------------------------------------------------
# Generic weight optimization on a fixed support
# ---------------------------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum w = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class OptimizeReport:
    design: Design
    criterion_value: float
    iterations: int
    converged: bool
    certificate: Optional[float] = None
    check: Optional[DOptimalityCheck] = None
    grid_resolution: Optional[float] = None
    support_restricted: bool = False
    # D only: max over the candidates of sensitivity minus bound; the region-wide
    # violation in ``check`` can stay positive when the candidates miss the optimum
    candidate_violation: Optional[float] = None
    # E and G only: certified relative gap to the optimum over the support
    optimality_gap: Optional[float] = None


class _SmoothObjective:
    """Log of the Kiefer sum (PhiQ/A) or of the D-criterion, with its weight gradient."""

    def __init__(self, F: np.ndarray, delta_inv: np.ndarray, n: int, spec: CriterionSpec):
        self.F = F
        self.delta_inv = delta_inv
        self.n = n
        self.spec = spec

    def __call__(self, w: np.ndarray, need_grad: bool = False):
        M = info_from_weights(self.F, w)
        if is_singular(M):
            return (math.inf, None) if need_grad else math.inf
        A = M + self.delta_inv
        n, F = self.n, self.F
        if self.spec.kind == "D":
            value = -np.linalg.slogdet(M)[1] - (n - 1) * np.linalg.slogdet(A)[1]
            if not need_grad:
                return value
            S = symmetrize(np.linalg.inv(M)) + (n - 1) * symmetrize(np.linalg.inv(A))
            return value, -np.einsum("jp,pq,jq->j", F, S, F)
        q = self.spec.q
        total = np.trace(sym_power(M, -q)) + (n - 1) * np.trace(sym_power(A, -q))
        value = math.log(total)
        if not need_grad:
            return value
        S = sym_power(M, -q - 1) + (n - 1) * sym_power(A, -q - 1)
        return value, -q * np.einsum("jp,pq,jq->j", F, S, F) / total


def _projected_gradient(obj: _SmoothObjective, w0: np.ndarray, tol: float, max_iter: int):
    w = w0
    f, g = obj(w, need_grad=True)
    step = 1.0
    for it in range(1, max_iter + 1):
        while True:
            w_new = project_simplex(w - step * g)
            f_new = obj(w_new)
            d = w_new - w
            if f_new <= f + g @ d + (d @ d) / (2.0 * step):
                break
            step *= 0.5
            if step < 1e-30:
                return w, it, True
        decrease = f - f_new
        w = w_new
        if decrease < tol:
            return w, it, True
        f, g = obj(w, need_grad=True)
        step = min(step * 2.0, 1e6)
    return w, max_iter, False


def _simplex_grid(k: int, N: int) -> np.ndarray:
    """All weight vectors with entries in ``{0, 1/N, ..., 1}``, lexicographic order."""
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        i = np.arange(N + 1)
        return np.column_stack([N - i, i]) / N
    rows = []
    for bars in itertools.combinations(range(N + k - 1), k - 1):
        b = (-1,) + bars + (N + k - 1,)
        rows.append([b[s + 1] - b[s] - 1 for s in range(k)])
    return np.asarray(rows, dtype=float) / N


def _grid_steps(k: int, N_max: int, budget: int) -> int:
    N = N_max
    while N > 1 and math.comb(N + k - 1, k - 1) > budget:
        N = max(1, int(N * 0.8))
    return N


def _batch_nonsmooth(W, F, delta_inv, n, spec, eval_F):
    """E or G values for each row of ``W``; singular designs give ``inf``."""
    Ms = np.einsum("bk,kp,kq->bpq", W, F, F)
    eig = np.linalg.eigvalsh(Ms)
    singular = eig[:, 0] <= 1e-12 * np.maximum(eig[:, -1], 1.0)
    out = np.full(W.shape[0], math.inf)
    ok = ~singular
    if spec.kind == "E":
        out[ok] = 1.0 / eig[ok, 0]
        return out
    Mi = np.linalg.inv(Ms[ok])
    Ai = np.linalg.inv(Ms[ok] + delta_inv)
    S = Mi + (n - 1) * Ai
    out[ok] = np.einsum("gp,bpq,gq->bg", eval_F, S, eval_F).max(axis=1)
    return out


class _Cuts:
    """Affine minorants ``t >= a + b . w`` of a convex function on the weight simplex."""

    def __init__(self, k: int):
        self.k = k
        self.a: list[float] = []
        self.b: list[np.ndarray] = []

    def add(self, value: float, grad: np.ndarray, w: np.ndarray) -> None:
        self.a.append(float(value - grad @ w))
        self.b.append(np.asarray(grad, dtype=float))

    def solve(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, float]:
        """Minimize the cut model over the simplex intersected with ``lo <= w <= hi``."""
        k = self.k
        A_ub = np.column_stack([np.asarray(self.b), -np.ones(len(self.b))])
        b_ub = -np.asarray(self.a)
        A_eq = np.r_[np.ones(k), 0.0][None, :]
        bounds = [(float(l), float(h)) for l, h in zip(lo, hi)] + [(None, None)]
        res = linprog(
            np.r_[np.zeros(k), 1.0], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds,
            method="highs", options=_LP_OPTIONS,
        )
        if res.status != 0:
            raise ArithmeticError(f"cutting-plane LP failed: {res.message}")
        w = np.clip(res.x[:k], 0.0, None)
        return w / w.sum(), float(res.x[k])


_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class _NonsmoothOracle:
    """Value and cutting planes of E (as ``-lambda_min(M)``) or G at a weight vector.

    Both are convex in the weights: ``lambda_min(M)`` is a minimum of
    functions linear in ``w``, and each sensitivity value is a sum of matrix
    inverses of an affine function of ``w``.
    """

    def __init__(self, model: RCRModel, F: np.ndarray, spec: CriterionSpec):
        self.model, self.F, self.spec = model, F, spec
        if spec.kind == "G" and not model.basis.is_line:
            self.xs = model.region.grid(spec.grid_points)
        else:
            self.xs = np.array([model.region.lo, model.region.hi])

    def __call__(self, w: np.ndarray, cuts: Optional[_Cuts] = None) -> float:
        model, F = self.model, self.F
        M = info_from_weights(F, w)
        if is_singular(M):
            return math.inf
        if self.spec.kind == "E":
            lam, U = np.linalg.eigh(M)
            if cuts is not None:
                for i in np.flatnonzero(lam <= lam[0] * (1 + 1e-3) + 1e-14):
                    cuts.add(-lam[i], -((F @ U[:, i]) ** 2), w)
            return -float(lam[0])
        ctx = InfoContext.from_matrices(M, model.Delta_inv)
        Mi, Ai = ctx.M_inv(), ctx.bayes_inv()
        S = Mi + (model.n - 1) * Ai
        vals = sensitivity_values(ctx, model.n, self.xs, model.basis)
        top = int(np.argmax(vals))
        value, x_cut = float(vals[top]), [self.xs[top]]
        if not model.basis.is_line:
            value, x_star = max_sensitivity(ctx, model.n, model.basis, model.region, self.spec.grid_points)
            inner = (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
            x_cut = np.r_[self.xs[1:-1][inner], self.xs[[0, -1]], x_star]
        else:
            x_cut = self.xs
        if cuts is not None:
            G = model.basis.matrix(np.asarray(x_cut, dtype=float))
            P, Q = G @ Mi @ F.T, G @ Ai @ F.T
            phi = np.einsum("ip,pq,iq->i", G, S, G)
            for i in range(G.shape[0]):
                cuts.add(phi[i], -(P[i] ** 2) - (model.n - 1) * Q[i] ** 2, w)
        return value


def _nonsmooth(model, support, spec, F, resolution, refine_tol, max_iter, gap_tol):
    """Weight grid, then a trust-region cutting-plane method with a certified gap.

    Returns ``(w, iterations, converged, grid_step, gap)``; ``gap`` bounds the
    relative distance of the value at ``w`` from the optimum over the support.
    """
    k = support.size
    if spec.kind == "G" and not model.basis.is_line:
        eval_F = model.basis.matrix(model.region.grid(spec.grid_points))
        budget = max(2000, 20_000_000 // eval_F.shape[0])
    else:
        eval_F = model.basis.matrix([model.region.lo, model.region.hi])
        budget = 600_000
    N = _grid_steps(k, int(round(1.0 / resolution)), budget)
    if N != int(round(1.0 / resolution)):
        log.info("weight grid coarsened to 1/%d to bound the evaluation count", N)
    W = _simplex_grid(k, N)
    chunk = max(1, 5_000_000 // max(1, eval_F.shape[0] * model.p * model.p))
    vals = np.concatenate(
        [_batch_nonsmooth(W[s : s + chunk], F, model.Delta_inv, model.n, spec, eval_F) for s in range(0, len(W), chunk)]
    )
    best = int(np.argmin(vals))
    if not math.isfinite(vals[best]):
        raise InfeasibleSupportError(f"every grid weight vector on support {support.tolist()} is singular")

    oracle = _NonsmoothOracle(model, F, spec)
    cuts = _Cuts(k)
    w = W[best].copy()
    ub = oracle(w, cuts)
    # seed the model with the grid neighbours so the first LPs are bounded away from vertices
    for j in range(k):
        nb = w.copy()
        nb[j] += 1.0 / N
        nb /= nb.sum()
        oracle(nb, cuts)
    rho = 2.0 / N
    zeros, ones = np.zeros(k), np.ones(k)
    gap, converged, it = math.inf, False, 0
    for it in range(1, max_iter + 1):
        _, lb = cuts.solve(zeros, ones)
        gap = (ub - lb) / max(1.0, abs(ub))
        if gap <= gap_tol or rho < refine_tol:
            converged = True
            break
        trial, _ = cuts.solve(np.maximum(w - rho, 0.0), np.minimum(w + rho, 1.0))
        v = oracle(trial, cuts)
        if v < ub:
            step = np.max(np.abs(trial - w))
            w, ub = trial, v
            if step >= 0.5 * rho:
                rho = min(2.0 * rho, 1.0)
        else:
            rho *= 0.5
    gap = max(gap, 0.0)
    return w, it, converged, 1.0 / N, gap


def optimize_weights(
    model: RCRModel,
    support: Sequence[float],
    spec: CriterionSpec,
    *,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    resolution: float = 1e-3,
    refine_tol: float = 1e-6,
    gap_tol: float = 1e-9,
    max_cuts: int = 500,
) -> OptimizeReport:
    """Optimal weights for ``spec`` on a fixed candidate support.

    Smooth criteria (PhiQ, A, D) use projected gradient descent on the weight
    simplex, stopping once the objective decreases by less than ``tol``.
    E and G are convex but not differentiable in the weights.  They use a
    simplex weight grid (step ``resolution``, coarsened when the grid would be
    too large) and then a trust-region cutting-plane method.  The refinement
    stops once the certified relative optimality gap is at most ``gap_tol``
    or the trust region is narrower than ``refine_tol``.  For G with the
    straight line the candidates are replaced by the ends of the region,
    which dominate any other support.  D results carry the D-optimality
    check as certificate.
    """
    support = np.asarray(support, dtype=float).ravel()
    restricted = False
    if spec.kind == "G" and model.basis.is_line:
        ends = np.array([model.region.lo, model.region.hi])
        restricted = not np.array_equal(np.sort(support), ends)
        support = ends
    if support.size == 0 or np.unique(support).size != support.size:
        raise DesignError("support must be non-empty with distinct points")
    for x in support:
        if not model.region.contains(x):
            raise DesignError(f"support point {x} outside [{model.region.lo}, {model.region.hi}]")
    F = model.basis.matrix(support)
    uniform = np.full(support.size, 1.0 / support.size)
    if is_singular(info_from_weights(F, uniform)):
        raise InfeasibleSupportError(f"support {support.tolist()} cannot give a non-singular information matrix")

    resolution_used = gap = None
    if spec.smooth:
        obj = _SmoothObjective(F, model.Delta_inv, model.n, spec)
        w, iterations, converged = _projected_gradient(obj, uniform, tol, max_iter)
    else:
        w, iterations, converged, resolution_used, gap = _nonsmooth(
            model, support, spec, F, resolution, refine_tol, max_cuts, gap_tol
        )

    w = np.clip(w, 0.0, None)
    design = Design(support, w / w.sum())
    ctx = InfoContext.from_matrices(info_from_weights(F, design.weights), model.Delta_inv, design=design)
    value = evaluate_context(spec, ctx, model).value
    check = cand = None
    if spec.kind == "D":
        check = d_optimality_check(ctx, model.n, model.basis, model.region, spec.grid_points)
        cand = float(sensitivity_values(ctx, model.n, support, model.basis).max() - check.bound)
    return OptimizeReport(
        design=design,
        criterion_value=value,
        iterations=iterations,
        converged=converged,
        certificate=None if check is None else check.max_violation,
        check=check,
        grid_resolution=resolution_used,
        support_restricted=restricted,
        candidate_violation=cand,
        optimality_gap=gap,
    )


class DGSearch(NamedTuple):
    g_report: OptimizeReport
    d_report: OptimizeReport
    weight_distance: float
    equivalent: bool


def dg_search(model: RCRModel, support: Sequence[float], *, weight_tol: float = 1e-4, **options) -> DGSearch:
    """Compare numerically G- and D-optimal weights on the same candidates.

    Works for any basis and any ``D``; no closed form is used.  For the
    straight line the G optimizer moves to the region ends, and the D
    optimizer is then run on those ends as well.  ``equivalent`` means the two
    weight vectors agree within ``weight_tol``, which should exceed the
    resolution of the nonsmooth G search (``refine_tol``).  Extra keyword
    arguments go to :func:`optimize_weights`.
    """
    g = optimize_weights(model, support, CriterionSpec("G"), **options)
    d = optimize_weights(model, g.design.points, CriterionSpec("D"), **options)
    dist = float(np.max(np.abs(g.design.weights - d.design.weights)))
    return DGSearch(g, d, dist, dist <= weight_tol)
