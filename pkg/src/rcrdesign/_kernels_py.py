"""Pure numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; selected at import when the
compiled module is unavailable or ``RCRDESIGN_PURE_PYTHON`` is set.
"""
import numpy as np

SINGULAR_RTOL = 1e-12


def poly_quad_form(S, xs):
    """``f(x)^T S f(x)`` for monomial ``f(x) = (1, x, ..., x^(p-1))``."""
    S = np.asarray(S, dtype=float)
    xs = np.asarray(xs, dtype=float)
    V = np.vander(xs, S.shape[0], increasing=True)
    return np.einsum("ip,pq,iq->i", V, S, V)


def line_two_point_g(x0, x1, lo, hi, delta_inv, n, ws):
    """G-criterion of straight-line designs ``{x0: 1-w, x1: w}`` for each ``w``.

    The sensitivity is a convex parabola in ``x``, so the maximum over
    ``[lo, hi]`` is taken at the ends.  Singular designs map to ``inf``.
    """
    ws = np.asarray(ws, dtype=float)
    di = np.asarray(delta_inv, dtype=float)
    m01 = (1.0 - ws) * x0 + ws * x1
    m11 = (1.0 - ws) * x0 * x0 + ws * x1 * x1
    det = m11 - m01 * m01
    tr = 1.0 + m11
    singular = det <= SINGULAR_RTOL * tr * tr
    det = np.where(singular, 1.0, det)

    a00 = 1.0 + di[0, 0]
    a01 = m01 + di[0, 1]
    a11 = m11 + di[1, 1]
    adet = np.where(singular, 1.0, a00 * a11 - a01 * a01)

    s00 = m11 / det + (n - 1) * a11 / adet
    s01 = -m01 / det - (n - 1) * a01 / adet
    s11 = 1.0 / det + (n - 1) * a00 / adet
    phi_lo = s00 + 2.0 * s01 * lo + s11 * lo * lo
    phi_hi = s00 + 2.0 * s01 * hi + s11 * hi * hi
    return np.where(singular, np.inf, np.maximum(phi_lo, phi_hi))
