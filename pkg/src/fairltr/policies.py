"""Ranking policies for the dynamic loop.

Every policy exposes

  rank(x, tie_keys=None) -> order        (permutation, best item first)
  observe(x, order, feedback) -> None    (digest the step's clicks)

and sees only the visible features x and the censored clicks: true
relevance never crosses this interface.  Tie keys may be injected by the
trial engine so the compiled and python paths consume identical
randomness; standalone callers omit them and the policy draws from its
own generator.

Policy registry (CLI names):
  naive       rank by raw click counters
  dultr-glob  rank by the IPS-debiased global relevance estimate
  dultr-pers  rank by a personalized regressor trained on the unbiased
              objective (global IPS ranking for the first 100 users)
  fairco-exp / fairco-imp
              proportional controller: relevance + lam * error term,
              error measured on exposure or impact disparity
  linprog     per-step fairness-constrained LP over stochastic rankings
"""

from __future__ import annotations

import numpy as np

from . import lp as lp_mod
from .core import ExposureModel, Feedback, ItemCatalog, argsort_with_keys, rank_of_items
from .errors import ContractError
from .estimators import GlobalEstimator, merit_estimate
from .fairness import FairnessLedger
from .regression import AdamState, InteractionLog, RelevanceRegressor, train

PERSONAL_WARMUP = 100
PERSONAL_INTERVAL = 10
PERSONAL_EPOCHS = 50
POLICY_NAMES = ("naive", "dultr-glob", "dultr-pers", "fairco-exp", "fairco-imp", "linprog")


class _BasePolicy:
    needs_features = False
    wants_true_relevance = False
    uses_sample_draw = False

    def __init__(self, catalog: ItemCatalog, exposure: ExposureModel, rng: np.random.Generator):
        self.catalog = catalog
        self.exposure = exposure
        self.rng = rng
        self.estimator = GlobalEstimator.zeros(catalog.n_items)

    def _tie_keys(self, tie_keys):
        return self.rng.random(self.catalog.n_items) if tie_keys is None else tie_keys

    def observe(self, x, order, feedback: Feedback) -> None:
        self.estimator.update(feedback, order, self.exposure)


class ClickCountPolicy(_BasePolicy):
    """Rank by the raw number of clicks collected so far."""

    def rank(self, x=None, tie_keys=None):
        return argsort_with_keys(self.estimator.naive_sums, self._tie_keys(tie_keys))


class IpsGlobalPolicy(_BasePolicy):
    """Rank by the running IPS-weighted click sums (same order as the
    debiased relevance estimate)."""

    def rank(self, x=None, tie_keys=None):
        return argsort_with_keys(self.estimator.ips_sums, self._tie_keys(tie_keys))


class _PersonalizedBase(_BasePolicy):
    """Shared machinery: interaction log plus periodically retrained net."""

    needs_features = True

    def __init__(
        self,
        catalog,
        exposure,
        rng,
        feature_dim: int,
        hidden_dim: int = 64,
        warmup: int = PERSONAL_WARMUP,
        interval: int = PERSONAL_INTERVAL,
        epochs: int = PERSONAL_EPOCHS,
        learning_rate: float = 1e-3,
    ):
        super().__init__(catalog, exposure, rng)
        self.model = RelevanceRegressor.initialize(feature_dim, hidden_dim, catalog.n_items, rng)
        self.optimizer = AdamState.for_model(self.model, learning_rate=learning_rate)
        self.log = InteractionLog()
        self.warmup = warmup
        self.interval = interval
        self.epochs = epochs

    def relevance_scores(self, x):
        if self.estimator.step_count < self.warmup:
            return self.estimator.ips_sums
        if x is None:
            raise ContractError("personalized policy needs user features")
        return self.model.predict(np.asarray(x, dtype=np.float64))

    def observe(self, x, order, feedback):
        if x is None:
            raise ContractError("personalized policy needs user features")
        super().observe(x, order, feedback)
        inv = rank_of_items(order)
        self.log.append(x, feedback.clicks, self.exposure.propensity_by_rank[inv])
        tau = self.estimator.step_count
        if tau >= self.warmup and tau % self.interval == 0:
            train(self.model, self.log, self.optimizer, self.epochs)


class PersonalizedRankingPolicy(_PersonalizedBase):
    """Rank by the regressor's predicted relevance (dultr-pers)."""

    def rank(self, x=None, tie_keys=None):
        return argsort_with_keys(self.relevance_scores(x), self._tie_keys(tie_keys))


class FairnessControlPolicy(_BasePolicy):
    """Proportional controller: argsort of relevance + lam * error term.

    The error term lifts items of groups whose amortized exposure (or
    impact) per unit of estimated merit trails the best-off group.  Base
    relevance comes from the global IPS estimate, a personalized model,
    or a fixed score vector ("static", used by diagnostics); merits
    refresh every step from the IPS estimator unless frozen via
    merit_override.
    """

    def __init__(
        self,
        catalog,
        exposure,
        rng,
        mode: str,
        lam: float = 0.01,
        min_merit: float = 0.01,
        base: str = "global",
        feature_dim: int | None = None,
        hidden_dim: int = 64,
        static_scores=None,
        merit_override=None,
        personal_kwargs=None,
    ):
        super().__init__(catalog, exposure, rng)
        # lam = 0 degenerates to the plain relevance sort; it stays allowed
        # so lambda sweeps can include their zero point
        if lam < 0:
            raise ContractError("lam must be nonnegative")
        if mode not in ("exposure", "impact"):
            raise ContractError(f"unknown fairness mode {mode!r}")
        self.mode = mode
        self.lam = lam
        self.min_merit = min_merit
        self.base = base
        self.ledger = FairnessLedger.zeros(catalog)
        self.merit_override = (
            None if merit_override is None else np.asarray(merit_override, dtype=np.float64)
        )
        self.static_scores = (
            None if static_scores is None else np.asarray(static_scores, dtype=np.float64)
        )
        self.personal = None
        if base == "model":
            if feature_dim is None:
                raise ContractError("base='model' needs feature_dim")
            self.needs_features = True
            self.personal = _PersonalizedBase(
                catalog, exposure, rng, feature_dim, hidden_dim, **(personal_kwargs or {})
            )
            # share one estimator so merit estimates see every interaction
            self.personal.estimator = self.estimator
        elif base == "static":
            if self.static_scores is None:
                raise ContractError("base='static' needs static_scores")
        elif base != "global":
            raise ContractError(f"unknown base {base!r}")

    def _base_scores(self, x):
        tau = self.estimator.step_count
        if self.base == "static":
            return self.static_scores
        if self.base == "model" and tau >= self.personal.warmup:
            if x is None:
                raise ContractError("personalized controller needs user features")
            return self.personal.model.predict(np.asarray(x, dtype=np.float64))
        # global IPS mean; also the model base's warmup fallback (the mean
        # keeps the relevance term on the same scale as lam * err)
        return self.estimator.ips_sums / tau if tau > 0 else self.estimator.ips_sums

    def _merits(self):
        if self.merit_override is not None:
            return self.merit_override
        tau = self.estimator.step_count
        estimate = self.estimator.ips_estimate() if tau > 0 else np.zeros(self.catalog.n_items)
        return merit_estimate(estimate, self.catalog, self.min_merit)

    def rank(self, x=None, tie_keys=None):
        scores = np.asarray(self._base_scores(x), dtype=np.float64)
        if self.ledger.step_count > 0:
            err = self.ledger.error_term(self._merits(), self.catalog, self.mode)
            scores = scores + self.lam * err
        return argsort_with_keys(scores, self._tie_keys(tie_keys))

    def observe(self, x, order, feedback):
        super().observe(x, order, feedback)
        self.ledger.accumulate(order, feedback, self.exposure, self.catalog)
        if self.personal is not None:
            inv = rank_of_items(order)
            self.personal.log.append(x, feedback.clicks, self.exposure.propensity_by_rank[inv])
            tau = self.estimator.step_count
            if tau >= self.personal.warmup and tau % self.personal.interval == 0:
                train(
                    self.personal.model,
                    self.personal.log,
                    self.personal.optimizer,
                    self.personal.epochs,
                )


class LpRankingPolicy(_BasePolicy):
    """Solve the fairness-constrained LP each step and sample a ranking
    from its Birkhoff-von-Neumann decomposition."""

    uses_sample_draw = True

    def __init__(self, catalog, exposure, rng, lam: float = 0.01, min_merit: float = 0.01):
        super().__init__(catalog, exposure, rng)
        if lam < 0:
            raise ContractError("lam must be nonnegative")
        self.lam = lam
        self.min_merit = min_merit
        self.ledger = FairnessLedger.zeros(catalog)

    def rank(self, x=None, tie_keys=None, sample_u=None):
        tau = self.estimator.step_count
        relevance = (
            self.estimator.ips_estimate() if tau > 0 else np.zeros(self.catalog.n_items)
        )
        merits = merit_estimate(relevance, self.catalog, self.min_merit)
        problem = lp_mod.build_ranking_lp(
            relevance, self.ledger, merits, self.lam, self.exposure, self.catalog
        )
        P, _ = lp_mod.solve_ranking_lp(problem)
        terms = lp_mod.bvn_decompose(P)
        u = self.rng.random() if sample_u is None else sample_u
        return lp_mod.ranking_from_decomposition(terms, u)

    def observe(self, x, order, feedback):
        super().observe(x, order, feedback)
        self.ledger.accumulate(order, feedback, self.exposure, self.catalog)


class OraclePolicy(_BasePolicy):
    """Diagnostic upper bound: ranks by the realized true relevance.

    Lives on the simulator side of the fence (it reads what policies must
    not); only used to sanity-check the evaluation pipeline.
    """

    wants_true_relevance = True

    def rank(self, x=None, tie_keys=None, true_relevance=None):
        if true_relevance is None:
            raise ContractError("oracle policy needs the true relevance")
        return argsort_with_keys(
            np.asarray(true_relevance, dtype=np.float64), self._tie_keys(tie_keys)
        )


def make_policy(
    name: str,
    catalog: ItemCatalog,
    exposure: ExposureModel,
    rng: np.random.Generator,
    lam: float = 0.01,
    min_merit: float = 0.01,
    feature_dim: int | None = None,
    personalized_base: bool = False,
    hidden_dim: int = 64,
    personal_kwargs=None,
):
    """Build a policy by its CLI name.

    personalized_base switches the controller's relevance model to the
    regressor (movie experiments); the global IPS estimate is the default
    (news experiments).
    """
    if name == "naive":
        return ClickCountPolicy(catalog, exposure, rng)
    if name == "dultr-glob":
        return IpsGlobalPolicy(catalog, exposure, rng)
    if name == "dultr-pers":
        if feature_dim is None:
            raise ContractError("dultr-pers needs feature_dim")
        return PersonalizedRankingPolicy(
            catalog, exposure, rng, feature_dim, hidden_dim, **(personal_kwargs or {})
        )
    if name in ("fairco-exp", "fairco-imp"):
        mode = "exposure" if name.endswith("exp") else "impact"
        if personalized_base:
            return FairnessControlPolicy(
                catalog, exposure, rng, mode, lam, min_merit,
                base="model", feature_dim=feature_dim, hidden_dim=hidden_dim,
                personal_kwargs=personal_kwargs,
            )
        return FairnessControlPolicy(catalog, exposure, rng, mode, lam, min_merit)
    if name == "linprog":
        return LpRankingPolicy(catalog, exposure, rng, lam, min_merit)
    if name == "oracle":
        return OraclePolicy(catalog, exposure, rng)
    raise ContractError(f"unknown policy {name!r}")
