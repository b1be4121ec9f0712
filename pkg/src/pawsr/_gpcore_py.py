"""Pure numpy evaluation kernels for the log-domain GP barrier solver.

Fallback used when the compiled extension is unavailable (or forced via
PAWSR_PURE_PYTHON=1). Same call signatures as pawsr._gpcore; the scratch
buffers are accepted and ignored.
"""

import numpy as np

BACKEND = "python"


def _lse(A, b, z):
    u = A @ z + b
    mx = u.max()
    w = np.exp(u - mx)
    s = w.sum()
    return mx + np.log(s), w / s


def barrier_value(t, A0, b0, Ac, bc, starts, logb, z):
    """phi_t(z) = t*lse0(z) - sum_i log(logb_i - lse_i(z)).

    Returns (value, feasible); (+inf, False) once any constraint block
    reaches its bound.
    """
    v0, _ = _lse(A0, b0, z)
    phi = t * v0
    for i in range(len(logb)):
        vi, _ = _lse(Ac[starts[i]:starts[i + 1]], bc[starts[i]:starts[i + 1]], z)
        gi = vi - logb[i]
        if gi >= 0.0:
            return np.inf, False
        phi -= np.log(-gi)
    return float(phi), True


def _lse_full(A, b, z):
    v, p = _lse(A, b, z)
    g = A.T @ p
    h = (A.T * p) @ A - np.outer(g, g)
    return v, g, h


def barrier_full(t, A0, b0, Ac, bc, starts, logb, z, grad, hess,
                 work=None, gbuf=None, hbuf=None):
    """Like barrier_value but also fills grad and hess in place."""
    grad[:] = 0.0
    hess[:] = 0.0
    v0, g0, h0 = _lse_full(A0, b0, z)
    phi = t * v0
    grad += t * g0
    hess += t * h0
    for i in range(len(logb)):
        vi, gi_vec, hi = _lse_full(Ac[starts[i]:starts[i + 1]],
                                   bc[starts[i]:starts[i + 1]], z)
        gi = vi - logb[i]
        if gi >= 0.0:
            return np.inf, False
        s = -gi
        phi -= np.log(s)
        grad += gi_vec / s
        hess += hi / s + np.outer(gi_vec, gi_vec) / (s * s)
    return float(phi), True
