"""Pure-numpy twins of the compiled kernels.

The compiled extension (`fairltr._kernels`) implements the same functions
with identical arithmetic; `fairltr._backend` picks whichever is
available.  Keep the element-wise operation order in sync with the .pyx
source: backend parity tests compare trajectories, not just statistics.
"""

from __future__ import annotations

import numpy as np

# pivot_loop status codes
OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

STALL_LIMIT = 64


def pivot_loop(T: np.ndarray, basis: np.ndarray, tol: float, max_iter: int):
    """Run simplex pivots in place on a minimization tableau.

    T has m constraint rows plus the objective row last; the last column
    is the rhs (objective cell holds minus the current objective value).
    Entering column: most negative reduced cost (Dantzig), switching to
    Bland's smallest-index rule after STALL_LIMIT non-improving pivots so
    degenerate cycling terminates.  Returns (status, iterations).
    """
    m = T.shape[0] - 1
    ncols = T.shape[1] - 1
    bland = False
    stall = 0
    last_obj = T[m, ncols]
    for it in range(max_iter):
        red = T[m, :ncols]
        if bland:
            neg = np.flatnonzero(red < -tol)
            if neg.size == 0:
                return OPTIMAL, it
            j = int(neg[0])
        else:
            j = int(np.argmin(red))
            if red[j] >= -tol:
                return OPTIMAL, it
        col = T[:m, j]
        mask = col > tol
        if not mask.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[mask] = T[:m, ncols][mask] / col[mask]
        i = int(np.argmin(ratios))  # first minimum on ties
        # pivot on (i, j)
        T[i, :] /= T[i, j]
        factors = T[:, j].copy()
        factors[i] = 0.0
        T -= np.outer(factors, T[i, :])
        T[:, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        obj = T[m, ncols]
        if obj > last_obj + tol:
            stall = 0
            last_obj = obj
        else:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
    return ITERATION_LIMIT, max_iter
