import numpy as np
import pytest

from fairltr.core import Feedback, ItemCatalog, argsort_with_keys, default_propensities
from fairltr.errors import ContractError
from fairltr.policies import (
    ClickCountPolicy,
    FairnessControlPolicy,
    LpRankingPolicy,
    PersonalizedRankingPolicy,
    make_policy,
)


def _setup(n=4, groups=(0, 0, 1, 1)):
    catalog = ItemCatalog(group_ids=np.array(groups), group_count=max(groups) + 1)
    exposure = default_propensities(n)
    return catalog, exposure


def _click(policy, order, clicks):
    clicks = np.asarray(clicks, dtype=np.int8)
    fb = Feedback(clicks=clicks, examination=np.ones_like(clicks))
    policy.observe(np.zeros(2), order, fb)


class TestClickCount:
    def test_click_increments_counter(self):
        catalog, exposure = _setup()
        policy = ClickCountPolicy(catalog, exposure, np.random.default_rng(0))
        _click(policy, np.arange(4), [0, 1, 0, 0])
        assert policy.estimator.naive_sums.tolist() == [0, 1, 0, 0]

    def test_initial_ranking_uniform_over_ties(self):
        catalog, exposure = _setup()
        firsts = set()
        for seed in range(40):
            policy = ClickCountPolicy(catalog, exposure, np.random.default_rng(seed))
            firsts.add(int(policy.rank()[0]))
        assert firsts == {0, 1, 2, 3}

    def test_ranks_by_counts(self):
        catalog, exposure = _setup()
        policy = ClickCountPolicy(catalog, exposure, np.random.default_rng(0))
        _click(policy, np.arange(4), [0, 1, 0, 1])
        _click(policy, np.arange(4), [0, 0, 0, 1])
        order = policy.rank()
        assert order[0] == 3
        assert order[1] == 1


class TestFairnessControl:
    def test_zero_error_matches_base_argsort(self):
        catalog, exposure = _setup()
        policy = FairnessControlPolicy(
            catalog, exposure, np.random.default_rng(0), mode="exposure", lam=0.01
        )
        # symmetric history: both groups identical, so err == 0
        _click(policy, np.array([0, 2, 1, 3]), [1, 0, 1, 0])
        _click(policy, np.array([2, 0, 3, 1]), [1, 0, 1, 0])
        keys = np.random.default_rng(5).random(4)
        base = policy.estimator.ips_sums / 2
        assert np.array_equal(
            policy.rank(tie_keys=keys), argsort_with_keys(base, keys)
        )

    def test_error_term_flips_ranking(self):
        # base scores 0.7 (group A) vs 0.6 (group B); err(B) = 20 at
        # lam = 0.01 lifts B to 0.8 and above A
        catalog, exposure = _setup(2, (0, 1))
        policy = FairnessControlPolicy(
            catalog, exposure, np.random.default_rng(0), mode="exposure", lam=0.01,
            base="static", static_scores=np.array([0.7, 0.6]),
            merit_override=np.array([1.0, 1.0]),
        )
        policy.ledger.step_count = 10
        policy.ledger.exposure_sums[:] = [12.0, 10.0]  # D(A,B) = 0.2 -> err(B)=2
        policy.estimator.step_count = 10
        keys = np.array([0.5, 0.5001])
        err = policy.ledger.error_term(np.ones(2), catalog, "exposure")
        assert err[0] == 0.0
        assert err[1] == pytest.approx(2.0)
        # scores: A = 0.7, B = 0.6 + 0.01*2 = 0.62 -> A still first
        assert policy.rank(tie_keys=keys).tolist() == [0, 1]
        policy.ledger.exposure_sums[:] = [30.0, 10.0]  # D = 2.0 -> err(B) = 20
        # now B scores 0.6 + 0.2 = 0.8 > 0.7
        assert policy.rank(tie_keys=keys).tolist() == [1, 0]

    def test_vanishing_lambda_matches_relevance_sort(self):
        # distinct base scores: an arbitrarily small positive lam cannot
        # flip the relevance ordering
        catalog, exposure = _setup()
        rng = np.random.default_rng(2)
        scores = np.array([0.41, 0.93, 0.12, 0.67])
        policy = FairnessControlPolicy(
            catalog, exposure, rng, mode="exposure", lam=1e-12,
            base="static", static_scores=scores,
        )
        policy.ledger.step_count = 30
        policy.ledger.exposure_sums[:] = [25.0, 5.0]
        policy.estimator.step_count = 30
        keys = rng.random(4)
        assert np.array_equal(
            policy.rank(tie_keys=keys), argsort_with_keys(scores, keys)
        )

    def test_lambda_zero_reduces_to_relevance_sort(self):
        catalog, exposure = _setup()
        rng = np.random.default_rng(1)
        policy = FairnessControlPolicy(
            catalog, exposure, rng, mode="impact", lam=0.0,
            base="static", static_scores=np.array([0.4, 0.9, 0.1, 0.6]),
        )
        policy.ledger.step_count = 50
        policy.ledger.impact_sums[:] = [40.0, 1.0]
        keys = rng.random(4)
        assert np.array_equal(
            policy.rank(tie_keys=keys),
            argsort_with_keys(np.array([0.4, 0.9, 0.1, 0.6]), keys),
        )

    def test_ledger_advances_once_per_observe(self):
        catalog, exposure = _setup()
        policy = FairnessControlPolicy(
            catalog, exposure, np.random.default_rng(0), mode="impact"
        )
        for t in range(3):
            _click(policy, np.arange(4), [1, 0, 0, 0])
        assert policy.ledger.step_count == 3

    def test_negative_lambda_rejected(self):
        catalog, exposure = _setup()
        with pytest.raises(ContractError):
            FairnessControlPolicy(
                catalog, exposure, np.random.default_rng(0), mode="exposure", lam=-0.1
            )


class TestPersonalized:
    def test_needs_features(self):
        catalog, exposure = _setup()
        policy = PersonalizedRankingPolicy(
            catalog, exposure, np.random.default_rng(0), feature_dim=2,
            hidden_dim=4, warmup=2, interval=2, epochs=1,
        )
        with pytest.raises(ContractError):
            policy.observe(None, np.arange(4), Feedback(
                clicks=np.zeros(4, dtype=np.int8), examination=np.zeros(4, dtype=np.int8)))

    def test_retrain_schedule(self, monkeypatch):
        catalog, exposure = _setup()
        policy = PersonalizedRankingPolicy(
            catalog, exposure, np.random.default_rng(0), feature_dim=2,
            hidden_dim=4, warmup=100, interval=10, epochs=1,
        )
        calls = []
        monkeypatch.setattr(
            "fairltr.policies.train", lambda *a, **k: calls.append(len(calls))
        )
        for t in range(1, 121):
            _click(policy, np.arange(4), [0, 0, 0, 0])
        # trains exactly at tau = 100, 110, 120 (not at 99 or 101)
        assert len(calls) == 3

    def test_global_fallback_before_warmup(self):
        catalog, exposure = _setup()
        policy = PersonalizedRankingPolicy(
            catalog, exposure, np.random.default_rng(0), feature_dim=2,
            hidden_dim=4, warmup=100, interval=10, epochs=1,
        )
        _click(policy, np.arange(4), [1, 0, 0, 0])
        keys = np.random.default_rng(3).random(4)
        assert np.array_equal(
            policy.rank(np.zeros(2), tie_keys=keys),
            argsort_with_keys(policy.estimator.ips_sums, keys),
        )


class TestLpPolicy:
    def test_runs_and_returns_permutation(self):
        catalog, exposure = _setup()
        policy = LpRankingPolicy(catalog, exposure, np.random.default_rng(0), lam=0.01)
        for t in range(3):
            order = policy.rank(sample_u=0.5)
            assert sorted(order.tolist()) == [0, 1, 2, 3]
            _click(policy, order, [1, 0, 0, 0])

    def test_lambda_zero_matches_relevance_argsort(self):
        catalog, exposure = _setup()
        policy = LpRankingPolicy(catalog, exposure, np.random.default_rng(0), lam=0.0)
        # seed distinct relevance estimates
        _click(policy, np.arange(4), [1, 1, 0, 0])
        _click(policy, np.arange(4), [1, 0, 1, 0])
        _click(policy, np.arange(4), [1, 0, 0, 0])
        est = policy.estimator.ips_estimate()
        assert len(set(est.tolist())) == 4
        order = policy.rank(sample_u=0.3)
        assert np.array_equal(order, np.argsort(-est))


class TestRegistry:
    def test_all_names_construct(self):
        catalog, exposure = _setup()
        for name in ("naive", "dultr-glob", "fairco-exp", "fairco-imp", "linprog"):
            policy = make_policy(name, catalog, exposure, np.random.default_rng(0))
            assert hasattr(policy, "rank")
        pers = make_policy(
            "dultr-pers", catalog, exposure, np.random.default_rng(0), feature_dim=2
        )
        assert pers.needs_features

    def test_unknown_name(self):
        catalog, exposure = _setup()
        with pytest.raises(ContractError):
            make_policy("bandit", catalog, exposure, np.random.default_rng(0))

    def test_policies_never_touch_true_relevance(self):
        # the policy interface receives features, rankings and clicks only;
        # no policy attribute or method ever sees a Request object
        catalog, exposure = _setup()
        for name in ("naive", "dultr-glob", "fairco-exp", "fairco-imp", "linprog"):
            policy = make_policy(name, catalog, exposure, np.random.default_rng(0))
            assert not policy.wants_true_relevance