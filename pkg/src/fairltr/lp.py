"""LP baseline: fairness-constrained ranking over doubly-stochastic matrices.

A stochastic ranking is an n x n matrix P with P[d, j] = probability of
showing item d at position j (rows and columns sum to 1).  The LP

  maximize   sum_d R(d) sum_j P[d,j] / log2(1+j)  -  lam * sum_ij xi_ij
  s.t.       row sums = column sums = 1,  P >= 0
             impact_ratio_diff(G_i, G_j | P) + D_{tau-1}(G_i, G_j) <= xi_ij
             xi >= 0                      (one slack per ordered pair)

softly penalizes increasing the running impact disparity, where the
expected per-step impact of a group under P is

  imp(G | P) = 1/|G| sum_{d in G} R(d) sum_j P[d,j] q(j)

with q the examination propensity per position.  The constraint adds this
step's expected ratio difference to the cumulative average disparity
D_{tau-1}; the two terms live on different time scales (one step vs the
running mean), which is the literal reading of the formulation and makes
the slack an optimistic one-step-ahead penalty.

After solving, the matrix is decomposed into a convex combination of
permutations (Birkhoff-von Neumann) and one permutation is sampled, which
realizes the matrix's utility and fairness in expectation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import simplex
from .core import ExposureModel, ItemCatalog, position_gains
from .errors import ContractError
from .fairness import FairnessLedger

DS_TOL = 1e-6


@dataclass
class RankingLp:
    """Assembled LP: n^2 matrix entries followed by m(m-1) pair slacks."""

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    n_items: int
    pairs: list

    @property
    def n_variables(self) -> int:
        return self.c.size


def build_ranking_lp(
    relevance: np.ndarray,
    ledger: FairnessLedger,
    merit: np.ndarray,
    lam: float,
    exposure: ExposureModel,
    catalog: ItemCatalog,
) -> RankingLp:
    if lam < 0:
        raise ContractError("lam must be nonnegative")
    merit = np.asarray(merit, dtype=np.float64)
    if (merit <= 0).any():
        raise ContractError("merits must be positive")
    rel = np.asarray(relevance, dtype=np.float64)
    n = catalog.n_items
    m = catalog.group_count
    q = exposure.propensity_by_rank
    gains = position_gains(n)

    pairs = [(i, j) for i in range(m) for j in range(m) if i != j]
    nvar = n * n + len(pairs)

    c = np.zeros(nvar)
    c[: n * n] = np.outer(rel, gains).ravel()
    c[n * n :] = -lam

    A_eq = np.zeros((2 * n, nvar))
    b_eq = np.ones(2 * n)
    for d in range(n):
        A_eq[d, d * n : (d + 1) * n] = 1.0  # row sums
    for j in range(n):
        A_eq[n + j, j : n * n : n] = 1.0  # column sums

    A_ub = np.zeros((len(pairs), nvar))
    b_ub = np.zeros(len(pairs))
    sizes = catalog.group_sizes
    for k, (gi, gj) in enumerate(pairs):
        for d in range(n):
            g = catalog.group_ids[d]
            if g == gi:
                coeff = rel[d] / (sizes[gi] * merit[gi])
            elif g == gj:
                coeff = -rel[d] / (sizes[gj] * merit[gj])
            else:
                continue
            A_ub[k, d * n : (d + 1) * n] = coeff * q
        A_ub[k, n * n + k] = -1.0
        d_prev = (
            ledger.disparity(merit, gi, gj, "impact") if ledger.step_count > 0 else 0.0
        )
        b_ub[k] = -d_prev
    return RankingLp(
        c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, n_items=n, pairs=pairs
    )


def solve_ranking_lp(lp: RankingLp):
    """Solve and return (P, xi); P is clipped of sub-1e-12 float dust."""
    res = simplex.solve(
        c=lp.c,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        A_ub=lp.A_ub if lp.A_ub.size else None,
        b_ub=lp.b_ub if lp.A_ub.size else None,
        maximize=True,
    )
    n = lp.n_items
    P = res.x[: n * n].reshape(n, n)
    xi = res.x[n * n :]
    P = np.where(np.abs(P) < 1e-12, 0.0, P)
    check_doubly_stochastic(P, tol=1e-7)
    return P, xi


def check_doubly_stochastic(P: np.ndarray, tol: float = DS_TOL) -> None:
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ContractError("matrix must be square")
    if (P < -tol).any() or (P > 1 + tol).any():
        raise ContractError("entries must lie in [0, 1]")
    if np.abs(P.sum(axis=1) - 1.0).max() > tol or np.abs(P.sum(axis=0) - 1.0).max() > tol:
        raise ContractError("row/column sums must equal 1")


def _perfect_matching(support: np.ndarray):
    """Kuhn's augmenting-path matching on the positive-support bipartite
    graph; returns col-per-row assignment or None."""
    n = support.shape[0]
    match_of_col = np.full(n, -1, dtype=np.int64)

    def try_assign(row, seen):
        for col in range(n):
            if support[row, col] and not seen[col]:
                seen[col] = True
                if match_of_col[col] < 0 or try_assign(match_of_col[col], seen):
                    match_of_col[col] = row
                    return True
        return False

    for row in range(n):
        if not try_assign(row, np.zeros(n, dtype=bool)):
            return None
    assignment = np.empty(n, dtype=np.int64)
    assignment[match_of_col] = np.arange(n)
    return assignment


def bvn_decompose(P: np.ndarray, tol: float = 1e-9):
    """Express a doubly-stochastic matrix as sum_k w_k * permutation_k.

    Repeatedly extracts a perfect matching on the positive support and
    subtracts the minimum matched entry; entries below tol are zeroed to
    keep the support honest under float subtraction.  At most (n-1)^2 + 1
    terms are produced.
    """
    check_doubly_stochastic(P)
    n = P.shape[0]
    residual = np.array(P, dtype=np.float64, copy=True)
    residual[residual < tol] = 0.0
    max_terms = (n - 1) ** 2 + 1
    terms = []
    while residual.max() > tol:
        if len(terms) >= max_terms:
            raise ContractError("decomposition exceeded its term bound")
        cols = _perfect_matching(residual > 0.0)
        if cols is None:
            raise ContractError("no perfect matching: matrix not doubly stochastic")
        weight = float(residual[np.arange(n), cols].min())
        order = np.empty_like(cols)
        order[cols] = np.arange(n)  # cols: item -> position; order: position -> item
        terms.append((weight, order))
        residual[np.arange(n), cols] -= weight
        residual[residual < tol] = 0.0
    return terms


def sample_ranking(decomposition, rng: np.random.Generator) -> np.ndarray:
    """Draw one ranking with probability proportional to its weight."""
    return ranking_from_decomposition(decomposition, rng.random())


def ranking_from_decomposition(decomposition, u: float) -> np.ndarray:
    weights = np.array([w for w, _ in decomposition])
    cum = np.cumsum(weights / weights.sum())
    idx = int(np.searchsorted(cum, u, side="right"))
    idx = min(idx, len(decomposition) - 1)
    return decomposition[idx][1]


def permutation_matrix(order: np.ndarray) -> np.ndarray:
    """Stochastic-ranking matrix of a deterministic ranking."""
    n = order.size
    M = np.zeros((n, n))
    M[order, np.arange(n)] = 1.0
    return M


def expected_positions(P: np.ndarray) -> np.ndarray:
    """Mean display position (1-based) per item under the stochastic ranking."""
    return P @ np.arange(1, P.shape[0] + 1, dtype=np.float64)
