import itertools

import numpy as np
import pytest

from fairltr.core import ItemCatalog, default_propensities, position_gains
from fairltr.errors import ContractError
from fairltr.fairness import FairnessLedger
from fairltr.lp import (
    build_ranking_lp,
    bvn_decompose,
    check_doubly_stochastic,
    expected_positions,
    permutation_matrix,
    ranking_from_decomposition,
    sample_ranking,
    solve_ranking_lp,
)


def _sinkhorn(rng, n, iters=500):
    """Random doubly-stochastic matrix by iterative row/column scaling."""
    M = rng.uniform(0.1, 1.0, size=(n, n))
    for _ in range(iters):
        M /= M.sum(axis=1, keepdims=True)
        M /= M.sum(axis=0, keepdims=True)
    return M


def _empty_ledger(catalog):
    return FairnessLedger.zeros(catalog)


def _brute_force_best_permutation(rel, gains):
    """Highest-utility deterministic ranking by exhaustive search."""
    n = rel.size
    best_val, best_perm = -np.inf, None
    for perm in itertools.permutations(range(n)):
        val = sum(rel[item] * gains[pos] for pos, item in enumerate(perm))
        if val > best_val:
            best_val, best_perm = val, perm
    return best_val, np.array(best_perm)


class TestBuildLp:
    def test_variable_count(self):
        cat = ItemCatalog(group_ids=np.array([0, 0, 1, 2]), group_count=3)
        lp = build_ranking_lp(
            np.full(4, 0.5), _empty_ledger(cat), np.ones(3), 0.1,
            default_propensities(4), cat,
        )
        assert lp.n_variables == 16 + 3 * 2  # n^2 + m(m-1) ordered pairs

    def test_single_item_forced(self):
        cat = ItemCatalog(group_ids=np.array([0]), group_count=1)
        lp = build_ranking_lp(
            np.array([0.3]), _empty_ledger(cat), np.ones(1), 0.0,
            default_propensities(1), cat,
        )
        P, _ = solve_ranking_lp(lp)
        assert P[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_lambda_zero_matches_descending_sort(self):
        # utility-only optimum concentrates on the descending-score ranking
        rng = np.random.default_rng(0)
        cat = ItemCatalog(group_ids=np.array([0, 0, 1, 1]), group_count=2)
        rel = np.array([0.9, 0.2, 0.5, 0.7])
        lp = build_ranking_lp(
            rel, _empty_ledger(cat), np.ones(2), 0.0, default_propensities(4), cat
        )
        P, _ = solve_ranking_lp(lp)
        gains = position_gains(4)
        achieved = float((P * np.outer(rel, gains)).sum())
        best_val, best_perm = _brute_force_best_permutation(rel, gains)
        assert achieved == pytest.approx(best_val, abs=1e-8)
        # the argsort-descending permutation realizes that optimum
        assert np.array_equal(best_perm, np.argsort(-rel))

    def test_two_items_better_on_top(self):
        cat = ItemCatalog(group_ids=np.array([0, 1]), group_count=2)
        rel = np.array([0.9, 0.1])
        lp = build_ranking_lp(
            rel, _empty_ledger(cat), np.ones(2), 0.0, default_propensities(2), cat
        )
        P, _ = solve_ranking_lp(lp)
        assert np.allclose(P, np.eye(2), atol=1e-8)

    def test_degenerate_ties_still_doubly_stochastic(self):
        cat = ItemCatalog(group_ids=np.array([0, 1]), group_count=2)
        lp = build_ranking_lp(
            np.array([0.5, 0.5]), _empty_ledger(cat), np.ones(2), 0.0,
            default_propensities(2), cat,
        )
        P, _ = solve_ranking_lp(lp)
        check_doubly_stochastic(P, tol=1e-8)
        # any doubly-stochastic matrix is optimal; the basic solution the
        # solver returns is a vertex, i.e. a permutation matrix
        assert np.isin(np.round(P, 8), (0.0, 1.0)).all()

    def test_large_penalty_prefers_fair_matrix(self):
        # one group hoarded impact: with a big lam the LP pushes the other
        # group up even though relevances are equal
        cat = ItemCatalog(group_ids=np.array([0, 0, 1, 1]), group_count=2)
        led = _empty_ledger(cat)
        led.exposure_sums[:] = [1.0, 0.2]
        led.impact_sums[:] = [0.9, 0.1]
        led.step_count = 10
        rel = np.array([0.5, 0.5, 0.5, 0.5])
        exposure = default_propensities(4)
        lp_fair = build_ranking_lp(rel, led, np.ones(2), 10.0, exposure, cat)
        P, xi = solve_ranking_lp(lp_fair)
        q = exposure.propensity_by_rank
        imp = np.array(
            [
                (rel[cat.members(g)] * (P[cat.members(g)] @ q)).mean()
                for g in range(2)
            ]
        )
        # group 1 (starved so far) gets at least as much expected impact
        assert imp[1] >= imp[0] - 1e-8


class TestBvn:
    def test_identity(self):
        terms = bvn_decompose(np.eye(4))
        assert len(terms) == 1
        w, order = terms[0]
        assert w == pytest.approx(1.0)
        assert np.array_equal(order, np.arange(4))

    def test_half_half(self):
        P = np.full((2, 2), 0.5)
        terms = bvn_decompose(P)
        assert len(terms) == 2
        assert sorted(w for w, _ in terms) == pytest.approx([0.5, 0.5])
        rebuilt = sum(w * permutation_matrix(o) for w, o in terms)
        assert np.allclose(rebuilt, P, atol=1e-9)

    def test_random_sinkhorn_matrices(self):
        rng = np.random.default_rng(77)
        for n in (3, 4, 6):
            P = _sinkhorn(rng, n)
            terms = bvn_decompose(P)
            weights = np.array([w for w, _ in terms])
            assert abs(weights.sum() - 1.0) <= 1e-6
            rebuilt = sum(w * permutation_matrix(o) for w, o in terms)
            assert np.abs(rebuilt - P).max() <= 1e-6
            assert len(terms) <= (n - 1) ** 2 + 1

    def test_rejects_non_doubly_stochastic(self):
        with pytest.raises(ContractError):
            bvn_decompose(np.array([[0.5, 0.4], [0.5, 0.6]]))
        with pytest.raises(ContractError):
            bvn_decompose(np.array([[1.0, 0.0]]))

    def test_rejects_negative_entries(self):
        with pytest.raises(ContractError):
            bvn_decompose(np.array([[1.2, -0.2], [-0.2, 1.2]]))


class TestSampling:
    def test_single_term_always(self):
        order = np.array([2, 0, 1])
        terms = [(1.0, order)]
        for seed in range(5):
            assert np.array_equal(sample_ranking(terms, np.random.default_rng(seed)), order)

    def test_two_term_frequencies(self):
        terms = [(0.5, np.array([0, 1])), (0.5, np.array([1, 0]))]
        rng = np.random.default_rng(4)
        draws = 10_000
        first = sum(
            np.array_equal(sample_ranking(terms, rng), terms[0][1]) for _ in range(draws)
        )
        # 3 sigma of binomial(draws, 0.5)
        assert abs(first - draws / 2) <= 3 * np.sqrt(draws * 0.25)

    def test_fixed_seed_deterministic(self):
        P = np.full((3, 3), 1 / 3)
        terms = bvn_decompose(P)
        a = sample_ranking(terms, np.random.default_rng(8))
        b = sample_ranking(terms, np.random.default_rng(8))
        assert np.array_equal(a, b)

    def test_expected_positions_match(self):
        rng = np.random.default_rng(10)
        P = _sinkhorn(rng, 4)
        terms = bvn_decompose(P)
        draws = 20_000
        pos_sum = np.zeros(4)
        for _ in range(draws):
            order = sample_ranking(terms, rng)
            inv = np.empty(4, dtype=int)
            inv[order] = np.arange(4)
            pos_sum += inv + 1
        mean_pos = pos_sum / draws
        assert np.abs(mean_pos - expected_positions(P)).max() < 0.06

    def test_u_buckets_cover_all_terms(self):
        terms = [(0.25, np.array([0, 1])), (0.75, np.array([1, 0]))]
        assert np.array_equal(ranking_from_decomposition(terms, 0.1), terms[0][1])
        assert np.array_equal(ranking_from_decomposition(terms, 0.9), terms[1][1])
