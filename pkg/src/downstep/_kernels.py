"""Compiled tridiagonal kernels for the Crank-Nicolson step.

The system matrix is A = I + i (dt/2hbar) (H - E_ref) restricted to the
interior nodes. Its Hermitian part is the identity, so elimination without
pivoting is stable.

Values below TINY are flushed to zero inside the sweeps. The implicit step
spreads exponentially small tails across the whole grid, and subnormal
arithmetic on those tails is tens of times slower than normal arithmetic.
"""

import numba
import numpy as np

TINY = 1e-150


@numba.njit(cache=True)
def factor(diag, off):
    """LDL-type factors of a symmetric tridiagonal with constant off-diagonal.

    Returns (w, minv): multipliers and reciprocal pivots.
    """
    n = diag.shape[0]
    w = np.empty(n, dtype=np.complex128)
    minv = np.empty(n, dtype=np.complex128)
    w[0] = 0.0
    m = diag[0]
    minv[0] = 1.0 / m
    for i in range(1, n):
        w[i] = off / m
        m = diag[i] - w[i] * off
        minv[i] = 1.0 / m
    return w, minv


@numba.njit(cache=True)
def cn_steps(psi, diag, off, w, minv, phase, nsteps, y):
    """Advance psi (with fixed zero end nodes) by nsteps in place.

    Right-hand side is (2I - A) psi, solved against A, then multiplied by the
    energy-shift phase.
    """
    n = diag.shape[0]
    for _ in range(nsteps):
        prev = 0j
        yp = 0j
        for i in range(n):
            cur = psi[i + 1]
            r = (2.0 - diag[i]) * cur - off * (prev + psi[i + 2])
            prev = cur
            yp = r - w[i] * yp
            if abs(yp.real) < TINY and abs(yp.imag) < TINY:
                yp = 0j
            y[i] = yp
        nx = 0j
        for i in range(n - 1, -1, -1):
            nx = (y[i] - off * nx) * minv[i]
            if abs(nx.real) < TINY and abs(nx.imag) < TINY:
                nx = 0j
            psi[i + 1] = nx * phase
