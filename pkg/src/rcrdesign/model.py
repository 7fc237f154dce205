"""Random coefficients regression model, designs and information matrices.

The observation model is ``Y_ij = f(x_j)^T beta_i + eps_ij`` for ``n``
individuals observed at the same ``m`` settings.  Design criteria work on the
standardized mean squared error matrix of the stacked predictor, i.e. the MSE
with the constant ``sigma^2 / m`` factored out (see :func:`scale_mse`).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SYM_TOL = 1e-12
SINGULAR_RTOL = 1e-12


class DesignError(ValueError):
    """Invalid design or model input."""


class SingularDesignError(DesignError):
    """The information matrix of a design is singular."""


def symmetrize(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def eigvalsh_sym(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the symmetrized matrix."""
    return np.linalg.eigvalsh(symmetrize(A))


def spd_inv(A: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix through its eigen-decomposition."""
    return sym_power(A, -1.0)


def sym_power(A: np.ndarray, q: float) -> np.ndarray:
    """``A**q`` for a symmetric positive definite ``A`` via its eigen-decomposition."""
    vals, vecs = np.linalg.eigh(symmetrize(A))
    return symmetrize((vecs * vals**q) @ vecs.T)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise DesignError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: float = 1e-12) -> bool:
        slack = tol * max(1.0, abs(self.lo), abs(self.hi))
        return self.lo - slack <= x <= self.hi + slack

    def grid(self, num: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, num)


@dataclass(frozen=True, eq=False)
class RegressionBasis:
    """Vector of known regression functions ``f = (f_1, ..., f_p)``.

    Use :meth:`polynomial` for monomials ``(1, x, ..., x^(p-1))`` or
    :meth:`tabulated` for a user-supplied value table, which is interpolated
    piecewise linearly between its nodes.
    """

    p: int
    kind: str = "polynomial"
    nodes: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise DesignError(f"basis dimension must be a positive integer, got {self.p}")
        if self.kind == "polynomial":
            return
        if self.kind != "tabulated":
            raise DesignError(f"unknown basis kind {self.kind!r}")
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise DesignError("tabulated basis needs at least two strictly increasing nodes")
        if values.shape != (nodes.size, self.p):
            raise DesignError(f"table values must have shape ({nodes.size}, {self.p}), got {values.shape}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def polynomial(cls, p: int) -> "RegressionBasis":
        return cls(p=p)

    @classmethod
    def tabulated(cls, nodes: Sequence[float], values) -> "RegressionBasis":
        values = np.asarray(values, dtype=float)
        return cls(p=values.shape[1], kind="tabulated", nodes=np.asarray(nodes, dtype=float), values=values)

    @property
    def is_polynomial(self) -> bool:
        return self.kind == "polynomial"

    @property
    def is_line(self) -> bool:
        return self.kind == "polynomial" and self.p == 2

    def matrix(self, xs) -> np.ndarray:
        """Rows ``f(x)^T`` for every ``x`` in ``xs``; shape ``(len(xs), p)``."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if not np.all(np.isfinite(xs)):
            raise DesignError("basis evaluated at a non-finite point")
        if self.kind == "polynomial":
            return np.vander(xs, self.p, increasing=True)
        lo, hi = self.nodes[0], self.nodes[-1]
        if np.any(xs < lo) or np.any(xs > hi):
            raise DesignError(f"point outside tabulated range [{lo}, {hi}]")
        return np.column_stack([np.interp(xs, self.nodes, self.values[:, s]) for s in range(self.p)])

    def __call__(self, x: float) -> np.ndarray:
        return self.matrix([x])[0]


def eval_basis(basis: RegressionBasis, x: float) -> np.ndarray:
    return basis(x)


@dataclass(frozen=True, eq=False)
class Design:
    """Approximate design: distinct support points with weights summing to one.

    An exact design additionally stores integer replication counts; its
    weights are ``counts / sum(counts)``.  Duplicate points are merged with a
    warning.
    """

    points: np.ndarray
    weights: np.ndarray
    counts: Optional[np.ndarray] = None
    normalized: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.size == 0 or pts.shape != w.shape:
            raise DesignError("design needs matching, non-empty points and weights")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise DesignError("design contains non-finite values")
        if np.any(w < 0):
            raise DesignError("design weights must be nonnegative")
        counts = None if self.counts is None else np.asarray(self.counts).ravel()
        uniq, first, inverse = np.unique(pts, return_index=True, return_inverse=True)
        if uniq.size != pts.size:
            warnings.warn("duplicate design points merged by adding their weights", stacklevel=3)
            order = np.argsort(first)
            remap = np.empty_like(order)
            remap[order] = np.arange(order.size)
            slots = remap[inverse.ravel()]
            pts = uniq[order]
            w = np.bincount(slots, weights=w, minlength=pts.size)
            if counts is not None:
                counts = np.bincount(slots, weights=counts, minlength=pts.size).astype(counts.dtype)
        if abs(w.sum() - 1.0) > 1e-12:
            raise DesignError(f"design weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def approximate(cls, points, weights, normalize: bool = False) -> "Design":
        w = np.asarray(weights, dtype=float)
        if normalize:
            total = w.sum()
            if total <= 0:
                raise DesignError("cannot normalize weights with nonpositive sum")
            w = w / total
        return cls(points, w, normalized=normalize)

    @classmethod
    def exact(cls, points, counts) -> "Design":
        counts = np.asarray(counts)
        if counts.dtype.kind not in "iu":
            as_float = counts.astype(float)
            if np.any(as_float != np.round(as_float)):
                raise DesignError("replication counts must be integers")
            counts = as_float.astype(np.int64)
        if np.any(counts < 0) or counts.sum() == 0:
            raise DesignError("replication counts must be nonnegative with positive total")
        return cls(points, counts / counts.sum(), counts=counts)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def is_exact(self) -> bool:
        return self.counts is not None

    @property
    def m(self) -> int:
        if self.counts is None:
            raise DesignError("approximate design has no replication counts")
        return int(self.counts.sum())

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(x), float(w)) for x, w in zip(self.points, self.weights)]

    def check_region(self, region: Interval) -> None:
        bad = [x for x in self.points if not region.contains(x)]
        if bad:
            raise DesignError(f"design points {bad} lie outside [{region.lo}, {region.hi}]")

    def __repr__(self) -> str:
        body = ", ".join(f"({x:.6g}, {w:.6g})" for x, w in self.pairs())
        return f"Design{{{body}}}"


@dataclass(frozen=True, eq=False)
class RCRModel:
    basis: RegressionBasis
    n: int
    m: int
    D: np.ndarray
    sigma2: float = 1.0
    region: Interval = field(default_factory=lambda: Interval(0.0, 1.0))

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        p = self.basis.p
        if D.ndim == 1:
            D = np.diag(D)
        if D.shape != (p, p):
            raise DesignError(f"D must be {p}x{p}, got shape {D.shape}")
        if np.max(np.abs(D - D.T)) > SYM_TOL * max(1.0, np.max(np.abs(D))):
            raise DesignError("D is not symmetric")
        D = symmetrize(D)
        if eigvalsh_sym(D)[0] <= 0:
            raise DesignError("D must be positive definite")
        if int(self.n) != self.n or self.n < 1:
            raise DesignError("n must be a positive integer")
        if int(self.m) != self.m or self.m < p:
            raise DesignError(f"m must be an integer >= p={p}")
        if not self.sigma2 > 0:
            raise DesignError("sigma2 must be positive")
        if not isinstance(self.region, Interval):
            object.__setattr__(self, "region", Interval(*self.region))
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))

    @property
    def p(self) -> int:
        return self.basis.p

    @property
    def Delta(self) -> np.ndarray:
        return self.m * self.D

    @property
    def Delta_inv(self) -> np.ndarray:
        return symmetrize(np.linalg.inv(self.Delta))

    @property
    def diagonal_D(self) -> bool:
        return bool(np.all(self.D == np.diag(np.diag(self.D))))


@dataclass(frozen=True, eq=False)
class InfoContext:
    """Standardized information matrix ``M`` together with ``Delta^-1``.

    ``Delta_inv`` may be the zero matrix, which stands in for infinitely
    dispersed random effects.  Singularity of ``M`` is recorded, not raised;
    criteria raise when they need ``M^-1``.
    """

    M: np.ndarray
    Delta_inv: np.ndarray
    singular: bool
    design: Optional[Design] = None

    @classmethod
    def from_matrices(cls, M, Delta_inv, design: Optional[Design] = None) -> "InfoContext":
        M = symmetrize(M)
        Delta_inv = symmetrize(Delta_inv)
        if M.shape != Delta_inv.shape or M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DesignError("M and Delta_inv must be square matrices of equal size")
        return cls(M=M, Delta_inv=Delta_inv, singular=is_singular(M), design=design)

    @property
    def p(self) -> int:
        return self.M.shape[0]

    @property
    def Delta(self) -> np.ndarray:
        return symmetrize(np.linalg.inv(self.Delta_inv))

    @property
    def MplusDeltaInv(self) -> np.ndarray:
        return self.M + self.Delta_inv

    def require_nonsingular(self) -> None:
        if self.singular:
            what = repr(self.design) if self.design is not None else "given design"
            raise SingularDesignError(f"information matrix of {what} is singular")

    def M_inv(self) -> np.ndarray:
        self.require_nonsingular()
        return spd_inv(self.M)

    def bayes_inv(self) -> np.ndarray:
        """``(M + Delta^-1)^-1``."""
        return spd_inv(self.MplusDeltaInv)


def is_singular(M: np.ndarray) -> bool:
    vals = eigvalsh_sym(M)
    return bool(vals[0] <= SINGULAR_RTOL * max(vals[-1], 1.0))


def info_from_weights(F: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_j w_j f(x_j) f(x_j)^T`` with ``F`` holding the rows ``f(x_j)^T``."""
    return symmetrize((F * weights[:, None]).T @ F)


def info_matrix(model: RCRModel, design: Design) -> InfoContext:
    design.check_region(model.region)
    M = info_from_weights(model.basis.matrix(design.points), design.weights)
    return InfoContext.from_matrices(M, model.Delta_inv, design=design)


def dense_mse(ctx: InfoContext, n: int) -> np.ndarray:
    """Standardized ``np x np`` MSE matrix of the stacked predictor."""
    J = np.full((n, n), 1.0 / n)
    mse = np.kron(J, ctx.M_inv()) + np.kron(np.eye(n) - J, ctx.bayes_inv())
    return symmetrize(mse)


def mse_matrix(model: RCRModel, design: Design) -> np.ndarray:
    return dense_mse(info_matrix(model, design), model.n)


def scale_mse(standardized: np.ndarray, sigma2: float, m: int) -> np.ndarray:
    """Undo the standardization: multiply by ``sigma^2 / m``.

    With ``F^T F = m M`` the unstandardized MSE
    ``sigma^2 (J/n (F^T F)^-1 + (I - J/n) (F^T F + D^-1)^-1)`` is exactly
    ``sigma^2 / m`` times the standardized matrix.
    """
    return (sigma2 / m) * np.asarray(standardized)


@dataclass(frozen=True)
class MseEigenStructure:
    eta: np.ndarray
    mu: np.ndarray
    n: int

    def multiset(self) -> np.ndarray:
        """All ``n p`` eigenvalues of the MSE matrix, ascending."""
        return np.sort(np.concatenate([self.eta, np.repeat(self.mu, self.n - 1)]))


def eigenstructure(ctx: InfoContext, n: int) -> MseEigenStructure:
    ctx.require_nonsingular()
    eta = 1.0 / eigvalsh_sym(ctx.M)
    mu = 1.0 / eigvalsh_sym(ctx.MplusDeltaInv)
    return MseEigenStructure(eta=np.sort(eta)[::-1], mu=np.sort(mu)[::-1], n=n)


def mse_eigenstructure(model: RCRModel, design: Design) -> MseEigenStructure:
    return eigenstructure(info_matrix(model, design), model.n)


def loewner_leq(A, B, tol: float = 1e-10) -> bool:
    """True iff ``A <= B`` in Loewner order, i.e. ``B - A`` is PSD up to ``tol``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return bool(eigvalsh_sym(B - A)[0] >= -tol)
