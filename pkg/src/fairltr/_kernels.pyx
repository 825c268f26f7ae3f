# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the news-trial inner loop and the simplex pivot loop.

These mirror the pure-python implementations (fairltr.engine /
fairltr._kernels_py) operation for operation; both sides consume the same
pre-drawn uniform blocks so trajectories agree across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

DEF STALL_LIMIT = 64


def pivot_loop(double[:, ::1] T, long[::1] basis, double tol, long max_iter):
    """Simplex pivots in place on a minimization tableau; see the numpy
    twin in _kernels_py for the rule description."""
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t ncols = T.shape[1] - 1
    cdef bint bland = False
    cdef long stall = 0
    cdef double last_obj = T[m, ncols]
    cdef Py_ssize_t it, i, j, k, l, best_i
    cdef double best_red, ratio, best_ratio, piv, f, obj
    for it in range(max_iter):
        # entering column
        j = -1
        if bland:
            for k in range(ncols):
                if T[m, k] < -tol:
                    j = k
                    break
            if j < 0:
                return OPTIMAL, it
        else:
            best_red = T[m, 0]
            j = 0
            for k in range(1, ncols):
                if T[m, k] < best_red:
                    best_red = T[m, k]
                    j = k
            if best_red >= -tol:
                return OPTIMAL, it
        # ratio test (first minimum wins)
        best_i = -1
        best_ratio = 0.0
        for i in range(m):
            if T[i, j] > tol:
                ratio = T[i, ncols] / T[i, j]
                if best_i < 0 or ratio < best_ratio:
                    best_i = i
                    best_ratio = ratio
        if best_i < 0:
            return UNBOUNDED, it
        i = best_i
        # pivot
        piv = T[i, j]
        for l in range(ncols + 1):
            T[i, l] /= piv
        for k in range(m + 1):
            if k == i:
                continue
            f = T[k, j]
            if f != 0.0:
                for l in range(ncols + 1):
                    T[k, l] -= f * T[i, l]
            T[k, j] = 0.0
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


cdef inline bint _before(double* score, const double* tie, long a, long b) noexcept nogil:
    if score[a] > score[b]:
        return True
    if score[a] < score[b]:
        return False
    return tie[a] < tie[b]


cdef void _argsort_desc(double* score, const double* tie, long* order, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef long key
    for i in range(n):
        order[i] = i
    for i in range(1, n):
        key = order[i]
        j = i - 1
        while j >= 0 and _before(score, tie, key, order[j]):
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = key


def run_news_trial(
    double[::1] polar,
    long[::1] group,
    double[::1] prop,
    double[::1] gains,
    double[::1] true_rel,
    double[::1] true_merit,
    double[::1] gsize,
    int policy,          # 0 naive, 1 ips, 2 controller/exposure, 3 controller/impact
    double lam,
    double min_merit,
    double[::1] p_neg_t,
    double[::1] comp_u,
    double[::1] z,
    double[::1] open_u,
    double[:, ::1] rel_u,
    double[:, ::1] tie_u,
    double[:, ::1] exam_u,
    long[::1] checkpoints,
    double[:, ::1] out,  # rows: ndcg_cum unfE unfI maeN maeI expratio[m] impratio[m]
):
    cdef Py_ssize_t n = polar.shape[0]
    cdef Py_ssize_t m = true_merit.shape[0]
    cdef Py_ssize_t steps = p_neg_t.shape[0]
    cdef Py_ssize_t n_cp = checkpoints.shape[0]

    buf_d = np.zeros((6, n))
    cdef double[:, ::1] bufs = buf_d
    cdef double* ips = &bufs[0, 0]
    cdef double* naive = &bufs[1, 0]
    cdef double* scores = &bufs[2, 0]
    cdef double* est = &bufs[3, 0]
    cdef double* ideal_cum_1 = &bufs[4, 0]  # ideal_cum[k] at index k-1
    cdef double* tmp = &bufs[5, 0]

    buf_g = np.zeros((6, m))
    cdef double[:, ::1] gbuf = buf_g
    cdef double* exp_sums = &gbuf[0, 0]
    cdef double* imp_sums = &gbuf[1, 0]
    cdef double* merit = &gbuf[2, 0]
    cdef double* ratio = &gbuf[3, 0]
    cdef double* ge = &gbuf[4, 0]
    cdef double* gi = &gbuf[5, 0]

    buf_l = np.zeros((4, n), dtype=np.int64)
    cdef long[:, ::1] lbuf = buf_l
    cdef long* order = &lbuf[0, 0]
    cdef long* rank_of = &lbuf[1, 0]
    cdef long* r = &lbuf[2, 0]
    cdef long* clicks = &lbuf[3, 0]

    cdef Py_ssize_t t, d, g, i, j, cp_idx
    cdef long tau, K, c
    cdef double mean, rho, o, dd, pr, maxr, errg, acc
    cdef double ndcg_sum = 0.0, dcg, nd, unf_e, unf_i, norm, sn, si
    cdef bint e

    acc = 0.0
    for j in range(n):
        acc += gains[j]
        ideal_cum_1[j] = acc
    norm = 2.0 / (m * (m - 1)) if m > 1 else 0.0

    cp_idx = 0
    for t in range(steps):
        # --- user draw (see envs.news_request_from_draws) ---
        mean = -0.5 if comp_u[t] < p_neg_t[t] else 0.5
        rho = mean + 0.2 * z[t]
        if rho > 1.0:
            rho = 1.0
        elif rho < -1.0:
            rho = -1.0
        o = 0.05 + 0.5 * open_u[t]
        for d in range(n):
            dd = rho - polar[d]
            pr = exp(-(dd * dd) / (2.0 * o * o))
            r[d] = 1 if rel_u[t, d] < pr else 0

        # --- policy scores ---
        tau = <long> t
        if policy == 0:
            for d in range(n):
                scores[d] = naive[d]
        elif policy == 1:
            for d in range(n):
                scores[d] = ips[d]
        else:
            if tau == 0:
                for d in range(n):
                    scores[d] = ips[d]
            else:
                for d in range(n):
                    est[d] = ips[d] / tau
                for g in range(m):
                    ge[g] = 0.0
                for d in range(n):
                    ge[group[d]] += est[d]
                for g in range(m):
                    merit[g] = ge[g] / gsize[g]
                    if merit[g] < min_merit:
                        merit[g] = min_merit
                if policy == 2:
                    for g in range(m):
                        ratio[g] = (exp_sums[g] / tau) / merit[g]
                else:
                    for g in range(m):
                        ratio[g] = (imp_sums[g] / tau) / merit[g]
                maxr = ratio[0]
                for g in range(1, m):
                    if ratio[g] > maxr:
                        maxr = ratio[g]
                for g in range(m):
                    ge[g] = tau * (maxr - ratio[g])  # error term per group
                for d in range(n):
                    scores[d] = est[d] + lam * ge[group[d]]

        _argsort_desc(scores, &tie_u[t, 0], order, n)
        for j in range(n):
            rank_of[order[j]] = j

        # --- examination, clicks, estimator update ---
        K = 0
        for d in range(n):
            e = exam_u[t, d] < prop[rank_of[d]]
            c = 1 if (e and r[d]) else 0
            clicks[d] = c
            if c:
                ips[d] += 1.0 / prop[rank_of[d]]
                naive[d] += 1.0
            K += r[d]

        # --- ledger (shared by controller and evaluation) ---
        for g in range(m):
            ge[g] = 0.0
            gi[g] = 0.0
        for d in range(n):
            ge[group[d]] += prop[rank_of[d]]
            gi[group[d]] += <double> clicks[d]
        for g in range(m):
            exp_sums[g] += ge[g] / gsize[g]
            imp_sums[g] += gi[g] / gsize[g]

        # --- quality ---
        dcg = 0.0
        for j in range(n):
            if r[order[j]]:
                dcg += gains[j]
        nd = 1.0 if K == 0 else dcg / ideal_cum_1[K - 1]
        ndcg_sum += nd

        # --- checkpoint ---
        if cp_idx < n_cp and (t + 1) == checkpoints[cp_idx]:
            tau = <long> (t + 1)
            out[cp_idx, 0] = ndcg_sum / tau
            for g in range(m):
                ge[g] = (exp_sums[g] / tau) / true_merit[g]
                gi[g] = (imp_sums[g] / tau) / true_merit[g]
            unf_e = 0.0
            unf_i = 0.0
            for i in range(m):
                for j in range(i + 1, m):
                    unf_e += fabs(ge[i] - ge[j])
                    unf_i += fabs(gi[i] - gi[j])
            out[cp_idx, 1] = norm * unf_e
            out[cp_idx, 2] = norm * unf_i
            sn = 0.0
            si = 0.0
            for d in range(n):
                sn += fabs(naive[d] / tau - true_rel[d])
                si += fabs(ips[d] / tau - true_rel[d])
            out[cp_idx, 3] = sn / n
            out[cp_idx, 4] = si / n
            for g in range(m):
                out[cp_idx, 5 + g] = ge[g]
                out[cp_idx, 5 + m + g] = gi[g]
            cp_idx += 1
    return None
