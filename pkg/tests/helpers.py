"""Random instance generators shared by the test modules."""
import numpy as np

from rcrdesign.model import Design, Interval, RCRModel, RegressionBasis


def random_spd(rng, p, scale=1.0):
    A = rng.normal(size=(p, p))
    return scale * (A @ A.T / p + 0.2 * np.eye(p))


def random_design(rng, region, k, p=None):
    xs = rng.uniform(region.lo, region.hi, size=k)
    w = rng.dirichlet(np.ones(k))
    return Design(xs, w)


MAX_COND = 1e3


def random_instance(rng, p=None, n=None, region=None):
    """Random model and numerically non-singular design; p in {2, 3}, n in 1..5.

    Designs with cond(M) above ``MAX_COND`` are redrawn.
    """
    p = int(rng.choice([2, 3])) if p is None else p
    n = int(rng.integers(1, 6)) if n is None else n
    region = Interval(-1.0, 1.0) if region is None else region
    m = int(rng.integers(p, 3 * p + 1))
    model = RCRModel(RegressionBasis.polynomial(p), n=n, m=m, D=random_spd(rng, p), region=region)
    while True:
        k = int(rng.integers(p, p + 4))
        design = random_design(rng, region, k)
        F = model.basis.matrix(design.points)
        if np.linalg.cond((F * design.weights[:, None]).T @ F) <= MAX_COND:
            return model, design


# (criterion, passed, detail) triples filled by the acceptance tests
ACCEPTANCE_LOG = []
