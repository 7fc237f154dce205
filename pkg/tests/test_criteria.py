import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_instance, random_spd
from rcrdesign.criteria import (
    CriterionSpec,
    d_criterion,
    d_optimality_check,
    e_criterion,
    evaluate,
    g_criterion,
    g_trace_form,
    phi_q,
    phi_q_dense,
    sensitivity,
    sensitivity_values,
)
from rcrdesign.model import (
    Design,
    DesignError,
    InfoContext,
    Interval,
    RCRModel,
    RegressionBasis,
    SingularDesignError,
    dense_mse,
    info_matrix,
    loewner_leq,
)

LINE = RegressionBasis.polynomial(2)
UNIT = Interval(0.0, 1.0)


def ctx_of(M, delta_inv):
    return InfoContext.from_matrices(np.asarray(M, float), np.asarray(delta_inv, float))


# -- CriterionSpec ----------------------------------------------------------


def test_spec_validation():
    assert CriterionSpec("A").q == 1.0
    with pytest.raises(DesignError):
        CriterionSpec("PhiQ")
    with pytest.raises(DesignError):
        CriterionSpec("PhiQ", q=math.inf)
    with pytest.raises(DesignError):
        CriterionSpec("PhiQ", q=0.0)
    with pytest.raises(DesignError):
        CriterionSpec("E", q=2.0)
    with pytest.raises(DesignError):
        CriterionSpec("G", grid_points=1)
    assert CriterionSpec("G").grid_points == 1001


# -- PhiQ, D, A, E ----------------------------------------------------------


def test_phi_q_identity_single_individual():
    assert phi_q(ctx_of(np.eye(2), np.eye(2)), 1, 1.0).value == pytest.approx(1.0, abs=1e-15)


def test_phi_q_diagonal():
    # (1/4) (tr diag(1/2, 1) + tr diag(1/3, 1/2)) = (1/4) (3/2 + 5/6) = 7/12
    cv = phi_q(ctx_of(np.diag([2.0, 1.0]), np.eye(2)), 2, 1.0)
    assert cv.value == pytest.approx(7 / 12, rel=1e-14)
    assert cv.parts == pytest.approx((1.5, 5 / 6), rel=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_phi_q_matches_dense_trace(seed):
    model, design = random_instance(np.random.default_rng(seed), n=3)
    ctx = info_matrix(model, design)
    assert phi_q(ctx, 3, 2.0).value == pytest.approx(phi_q_dense(ctx, 3, 2.0), rel=1e-10)


def test_phi_q_rejects_bad_q_and_singular():
    with pytest.raises(DesignError):
        phi_q(ctx_of(np.eye(2), np.eye(2)), 2, -1.0)
    with pytest.raises(SingularDesignError):
        phi_q(ctx_of([[1, 0], [0, 0]], np.eye(2)), 2, 1.0)


def test_d_criterion_values():
    assert d_criterion(ctx_of(np.eye(3), np.eye(3)), 1).value == pytest.approx(1.0)
    # det M^-1 = 1/2, det (M + I)^-1 = 1/6
    expected = (0.5 / 6) ** 0.25
    assert d_criterion(ctx_of(np.diag([2.0, 1.0]), np.eye(2)), 2).value == pytest.approx(expected, rel=1e-14)


def test_e_criterion_values():
    assert e_criterion(ctx_of(np.eye(2), np.eye(2))).value == pytest.approx(1.0)
    # eigenvalues of [[1, .5], [.5, .5]] are (3 -+ sqrt5)/4
    got = e_criterion(ctx_of([[1, 0.5], [0.5, 0.5]], np.eye(2))).value
    assert got == pytest.approx(3 + math.sqrt(5), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_phi_q_consistency_ladder(seed, q):
    model, design = random_instance(np.random.default_rng(seed))
    ctx = info_matrix(model, design)
    cv = phi_q(ctx, model.n, q)
    assert cv.value == pytest.approx(phi_q_dense(ctx, model.n, q), rel=1e-8)
    # the two parts recombine into the criterion
    assert model.n * model.p * cv.value**q == pytest.approx(sum(cv.parts), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_e_criterion_is_top_of_dense_spectrum(seed):
    model, design = random_instance(np.random.default_rng(seed))
    ctx = info_matrix(model, design)
    top = np.linalg.eigvalsh(dense_mse(ctx, model.n))[-1]
    assert e_criterion(ctx).value == pytest.approx(top, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_e_criterion_ignores_n_and_D(seed):
    rng = np.random.default_rng(seed)
    model, design = random_instance(rng)
    ref = None
    for n in range(1, 6):
        for scale in (0.1, 1.0, 10.0):
            scaled = RCRModel(model.basis, n, model.m, scale * model.D, region=model.region)
            v = e_criterion(info_matrix(scaled, design)).value
            ref = v if ref is None else ref
            assert v == ref


def test_small_q_limit_is_d_criterion():
    ctx = ctx_of([[1, 0.2], [0.2, 0.6]], 0.5 * np.eye(2))
    assert phi_q(ctx, 3, 1e-4).value == pytest.approx(d_criterion(ctx, 3).value, rel=1e-3)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_limits_follow_their_asymptotic_laws(seed):
    # log PhiQ ~ log D + (q/2) Var(log lambda) near 0, and
    # PhiQ ~ lambda_max (r/(n p))^(1/q) for large q with r the multiplicity of lambda_max
    model, design = random_instance(np.random.default_rng(seed))
    ctx = info_matrix(model, design)
    lam = np.linalg.eigvalsh(dense_mse(ctx, model.n))
    q = 1e-4
    predicted = 0.5 * q * np.var(np.log(lam))
    observed = math.log(phi_q(ctx, model.n, q).value / d_criterion(ctx, model.n).value)
    assert observed == pytest.approx(predicted, rel=1e-3, abs=1e-10)
    if lam[-1] >= 1.5 * lam[-2]:
        ratio = phi_q(ctx, model.n, 200.0).value / e_criterion(ctx).value
        assert ratio == pytest.approx((1.0 / lam.size) ** (1 / 200), rel=1e-10)


# -- sensitivity and G -------------------------------------------------------


def test_sensitivity_values():
    assert sensitivity(ctx_of(np.eye(2), np.eye(2)), 1, 0.0, LINE) == pytest.approx(1.0)
    assert sensitivity(ctx_of(np.eye(2), np.eye(2)), 2, 0.0, LINE) == pytest.approx(1.5)


def test_g_trace_form_values():
    assert g_trace_form(ctx_of(np.eye(2), np.eye(2)), 1, 0.0, LINE) == pytest.approx(1.0)
    assert g_trace_form(ctx_of(np.eye(2), np.eye(2)), 3, 0.0, LINE) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), x=st.floats(-1, 1))
def test_sensitivity_equals_trace_form(seed, x):
    model, design = random_instance(np.random.default_rng(seed))
    ctx = info_matrix(model, design)
    assert sensitivity(ctx, model.n, x, model.basis) == pytest.approx(
        g_trace_form(ctx, model.n, x, model.basis), rel=1e-10, abs=1e-10
    )


def test_g_criterion_identity():
    cv = g_criterion(ctx_of(np.eye(2), np.eye(2)), 1, LINE, UNIT)
    assert cv.value == pytest.approx(2.0)
    assert cv.attaining_x == 1.0


def test_g_single_individual_is_fixed_effects_g():
    model = RCRModel(LINE, 1, 4, np.eye(2), region=UNIT)
    design = Design([0.0, 0.3, 1.0], [0.3, 0.3, 0.4])
    ctx = info_matrix(model, design)
    Minv = np.linalg.inv(ctx.M)
    xs = UNIT.grid(1001)
    F = LINE.matrix(xs)
    classical = np.max(np.einsum("ip,pq,iq->i", F, Minv, F))
    assert g_criterion(ctx, 1, LINE, UNIT).value == pytest.approx(classical, rel=1e-12)


def test_line_endpoints_match_grid():
    model = RCRModel(LINE, 2, 4, np.diag([0.25, 0.25]), region=UNIT)
    ctx = info_matrix(model, Design([0.0, 1.0], [0.5, 0.5]))
    grid_max = sensitivity_values(ctx, 2, UNIT.grid(1001), LINE).max()
    assert g_criterion(ctx, 2, LINE, UNIT).value == pytest.approx(grid_max, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_line_sensitivity_peaks_at_region_ends(seed):
    rng = np.random.default_rng(seed)
    model, design = random_instance(rng, p=2, region=Interval(0.0, 1.0))
    ctx = info_matrix(model, design)
    grid = sensitivity_values(ctx, model.n, UNIT.grid(1001), LINE)
    ends = max(sensitivity(ctx, model.n, 0.0, LINE), sensitivity(ctx, model.n, 1.0, LINE))
    assert grid.max() == pytest.approx(ends, abs=1e-10)


def test_g_on_tabulated_basis_refines_between_nodes():
    # f(x) = (1, x, x^2) tabulated coarsely; the maximum of a piecewise-linear
    # quadratic form need not sit on a grid point, so compare with a very fine grid
    nodes = np.linspace(-1, 1, 7)
    basis = RegressionBasis.tabulated(nodes, np.column_stack([np.ones(7), nodes, np.sin(3 * nodes)]))
    region = Interval(-1.0, 1.0)
    model = RCRModel(basis, 3, 5, np.diag([1.0, 0.5, 2.0]), region=region)
    design = Design([-1.0, -0.2, 0.4, 1.0], [0.3, 0.2, 0.2, 0.3])
    ctx = info_matrix(model, design)
    # piecewise-linear f puts kinks at the nodes, so the oracle grid includes them
    fine = sensitivity_values(ctx, 3, np.union1d(region.grid(400_001), nodes), basis).max()
    cv = g_criterion(ctx, 3, basis, region, grid_points=51)
    assert cv.value == pytest.approx(fine, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.01, 0.99))
def test_g_monotone_in_loewner_order(seed, alpha):
    # mixing a design with a point mass at its mean lowers M in Loewner order for the line
    rng = np.random.default_rng(seed)
    region = Interval(-1.0, 1.0)
    model, xi2 = random_instance(rng, p=2, region=region)
    mean = float(xi2.points @ xi2.weights)
    pts = np.r_[xi2.points, mean]
    w = np.r_[(1 - alpha) * xi2.weights, alpha]
    xi1 = Design(pts, w) if mean not in xi2.points else xi2
    c1, c2 = info_matrix(model, xi1), info_matrix(model, xi2)
    assert loewner_leq(c1.M, c2.M, tol=1e-12)
    g1 = g_criterion(c1, model.n, model.basis, region).value
    g2 = g_criterion(c2, model.n, model.basis, region).value
    assert g1 >= g2 - 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_g_monotone_for_comparable_quadratic_pairs(seed):
    rng = np.random.default_rng(seed)
    region = Interval(-1.0, 1.0)
    model, xi2 = random_instance(rng, p=3, region=region)
    x0 = float(rng.uniform(-1, 1))
    alpha = float(rng.uniform(0.05, 0.95))
    pts = np.r_[xi2.points, x0]
    xi1 = Design(pts, np.r_[(1 - alpha) * xi2.weights, alpha])
    c1, c2 = info_matrix(model, xi1), info_matrix(model, xi2)
    if not loewner_leq(c1.M, c2.M, tol=0.0):
        return
    g1 = g_criterion(c1, model.n, model.basis, region).value
    g2 = g_criterion(c2, model.n, model.basis, region).value
    assert g1 >= g2 - 1e-10


# -- D-optimality check -----------------------------------------------------


def test_d_check_single_individual_is_classical():
    model = RCRModel(LINE, 1, 4, np.eye(2), region=Interval(-1, 1))
    ctx = info_matrix(model, Design([-1.0, 1.0], [0.5, 0.5]))
    chk = d_optimality_check(ctx, 1, LINE, model.region)
    assert chk.bound == pytest.approx(2.0)
    assert chk.max_violation <= 1e-8
    assert chk.certified(1e-8)


@pytest.mark.parametrize("d1, d2, n", [(1.0, 1.0, 2), (0.1, 3.0, 5), (2.0, 0.05, 3)])
def test_d_check_balanced_symmetric_is_optimal(d1, d2, n):
    model = RCRModel(LINE, n, 4, np.diag([d1, d2]), region=Interval(-1, 1))
    ctx = info_matrix(model, Design([-1.0, 1.0], [0.5, 0.5]))
    chk = d_optimality_check(ctx, n, LINE, model.region)
    assert chk.max_violation <= 1e-8
    assert chk.equality_gap_at_support <= 1e-8


def test_d_check_unbalanced_violates():
    model = RCRModel(LINE, 2, 4, np.eye(2), region=Interval(-1, 1))
    ctx = info_matrix(model, Design([-1.0, 1.0], [0.9, 0.1]))
    chk = d_optimality_check(ctx, 2, LINE, model.region)
    assert chk.max_violation > 0.1
    assert not chk.certified(1e-6)


def test_d_check_bound_is_weighted_mean_of_sensitivity():
    # sum_j w_j Phi(x_j) = tr(S M) = p + (n-1) tr((M + Delta^-1)^-1 M)
    rng = np.random.default_rng(3)
    for _ in range(10):
        model, design = random_instance(rng)
        ctx = info_matrix(model, design)
        chk = d_optimality_check(ctx, model.n, model.basis, model.region)
        vals = sensitivity_values(ctx, model.n, design.points, model.basis)
        assert vals @ design.weights == pytest.approx(chk.bound, rel=1e-10)


def test_evaluate_dispatch():
    model = RCRModel(LINE, 2, 4, np.eye(2), region=Interval(-1, 1))
    design = Design([-1.0, 1.0], [0.5, 0.5])
    assert evaluate(CriterionSpec("E"), model, design).value == pytest.approx(1.0)
    assert evaluate(CriterionSpec("A"), model, design).value == pytest.approx(
        phi_q(info_matrix(model, design), 2, 1.0).value
    )
    assert evaluate(CriterionSpec("G"), model, design).attaining_x in (-1.0, 1.0)
    assert evaluate(CriterionSpec("D"), model, design).value > 0
