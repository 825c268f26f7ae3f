"""Dense two-phase simplex solver.

Solves   max/min c'x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0

with a full tableau, artificial variables for phase 1, and an
anti-cycling pivot rule (Dantzig switching to Bland on stall).  Sized for
the fair-ranking LPs of this package (hundreds of variables); the pivot
iteration itself runs through the selected backend kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend, _kernels_py
from .errors import SolverFailureError


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int


def solve(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    maximize: bool = False,
    tol: float = 1e-9,
    max_iter: int | None = None,
) -> SimplexResult:
    """Solve the LP; raises SolverFailureError if infeasible, unbounded,
    or out of iterations."""
    c = np.asarray(c, dtype=np.float64)
    nvars = c.size
    obj = -c if maximize else c.copy()

    rows = []
    rhs = []
    if A_eq is not None and len(A_eq) > 0:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=np.float64))
        for i in range(A_eq.shape[0]):
            rows.append(A_eq[i])
            rhs.append(float(np.asarray(b_eq, dtype=np.float64).ravel()[i]))
    n_eq = len(rows)
    n_ub = 0
    if A_ub is not None and len(A_ub) > 0:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=np.float64))
        n_ub = A_ub.shape[0]
        for i in range(n_ub):
            rows.append(A_ub[i])
            rhs.append(float(np.asarray(b_ub, dtype=np.float64).ravel()[i]))
    m = len(rows)
    if m == 0:
        raise SolverFailureError("no constraints given")

    # standard form: [A_eq 0; A_ub I] with slacks for the ub rows
    A = np.zeros((m, nvars + n_ub))
    b = np.zeros(m)
    for i, (row, val) in enumerate(zip(rows, rhs)):
        A[i, :nvars] = row
        b[i] = val
    for k in range(n_ub):
        A[n_eq + k, nvars + k] = 1.0
    # make rhs nonnegative (may flip a slack's sign)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0

    ncols = A.shape[1]
    # rows whose slack survived as a +1 unit column need no artificial
    basis = np.full(m, -1, dtype=np.int64)
    needs_artificial = []
    for i in range(m):
        if i >= n_eq:
            s = nvars + (i - n_eq)
            if A[i, s] == 1.0:
                basis[i] = s
                continue
        needs_artificial.append(i)

    n_art = len(needs_artificial)
    total = ncols + n_art
    if max_iter is None:
        max_iter = 200 * (m + total + 10)

    T = np.zeros((m + 1, total + 1))
    T[:m, :ncols] = A
    T[:m, total] = b
    for k, i in enumerate(needs_artificial):
        T[i, ncols + k] = 1.0
        basis[i] = ncols + k

    iterations = 0
    if n_art > 0:
        # phase 1: minimize the sum of artificials
        T[m, ncols:total] = 1.0
        for i in needs_artificial:
            T[m, :] -= T[i, :]
        status, it = _backend.pivot_loop(T, basis, tol, max_iter)
        iterations += it
        if status == _kernels_py.ITERATION_LIMIT:
            raise SolverFailureError("phase 1 exceeded the iteration cap")
        if status == _kernels_py.UNBOUNDED or T[m, total] < -1e-7:
            raise SolverFailureError("problem is infeasible")
        # drive artificials out of the basis; drop rows that cannot pivot
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= ncols:
                pivot_col = -1
                for j in range(ncols):
                    if abs(T[i, j]) > tol:
                        pivot_col = j
                        break
                if pivot_col < 0:
                    keep[i] = False  # redundant constraint
                    continue
                T[i, :] /= T[i, pivot_col]
                factors = T[:, pivot_col].copy()
                factors[i] = 0.0
                T -= np.outer(factors, T[i, :])
                T[:, pivot_col] = 0.0
                T[i, pivot_col] = 1.0
                basis[i] = pivot_col
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m][None, :]])
            basis = basis[keep]
            m = int(keep.sum())
        # strip artificial columns
        T = np.hstack([T[:, :ncols], T[:, total:]])

    # phase 2: original objective (slacks cost 0), priced out over the basis
    T[m, :] = 0.0
    T[m, :nvars] = obj
    for i in range(m):
        cb = T[m, basis[i]]
        if cb != 0.0:
            T[m, :] -= cb * T[i, :]
    status, it = _backend.pivot_loop(T, basis, tol, max_iter)
    iterations += it
    if status == _kernels_py.UNBOUNDED:
        raise SolverFailureError("objective is unbounded")
    if status == _kernels_py.ITERATION_LIMIT:
        raise SolverFailureError("phase 2 exceeded the iteration cap")

    x = np.zeros(ncols)
    for i in range(m):
        x[basis[i]] = T[i, ncols]
    solution = x[:nvars]
    fun = float(c @ solution)
    return SimplexResult(x=solution, fun=fun, iterations=iterations)
