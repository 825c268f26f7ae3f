"""Trial simulation loop and its pre-drawn randomness protocol.

Every trial draws all of its randomness up front from one seeded
generator in a fixed call order, so the compiled kernel and the python
loop walk bit-identical streams:

  news :  comp_u (T)  z (T)  open_u (T)  rel_u (T,n)  tie_u (T,n)
          exam_u (T,n)  [sample_u (T) when the policy samples rankings]
  movie:  user_u (T)  tie_u (T,n)  exam_u (T,n)  [sample_u (T)]

Per step: build the request, rank (tie keys injected from the block),
simulate examination/clicks, hand the feedback to the policy, accumulate
the evaluation ledger, and log metrics on checkpoints.  Evaluation
disparities use the environment's ground-truth merits; the policy's own
controller uses its estimated merits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import ItemCatalog, ndcg, position_gains, simulate_from_uniforms
from .envs import NewsEnvironment, movie_request_from_draws, news_request_from_draws
from .fairness import FairnessLedger, overall_disparity_from_ratios

KERNEL_POLICIES = {"naive": 0, "dultr-glob": 1, "fairco-exp": 2, "fairco-imp": 3}


@dataclass
class DrawBlocks:
    tie_u: np.ndarray
    exam_u: np.ndarray
    comp_u: np.ndarray | None = None
    z: np.ndarray | None = None
    open_u: np.ndarray | None = None
    rel_u: np.ndarray | None = None
    user_u: np.ndarray | None = None
    sample_u: np.ndarray | None = None


def draw_news_blocks(rng, n_steps: int, n_items: int, with_sampling: bool = False) -> DrawBlocks:
    comp_u = rng.random(n_steps)
    z = rng.standard_normal(n_steps)
    open_u = rng.random(n_steps)
    rel_u = rng.random((n_steps, n_items))
    tie_u = rng.random((n_steps, n_items))
    exam_u = rng.random((n_steps, n_items))
    sample_u = rng.random(n_steps) if with_sampling else None
    return DrawBlocks(tie_u=tie_u, exam_u=exam_u, comp_u=comp_u, z=z,
                      open_u=open_u, rel_u=rel_u, sample_u=sample_u)


def draw_movie_blocks(rng, n_steps: int, n_items: int, with_sampling: bool = False) -> DrawBlocks:
    user_u = rng.random(n_steps)
    tie_u = rng.random((n_steps, n_items))
    exam_u = rng.random((n_steps, n_items))
    sample_u = rng.random(n_steps) if with_sampling else None
    return DrawBlocks(tie_u=tie_u, exam_u=exam_u, user_u=user_u, sample_u=sample_u)


@dataclass
class TrialTrace:
    """Checkpointed evaluation metrics for one trial."""

    steps: np.ndarray
    ndcg_cum: np.ndarray
    unfair_exposure: np.ndarray
    unfair_impact: np.ndarray
    exp_ratio: np.ndarray  # (checkpoints, groups)
    imp_ratio: np.ndarray
    mae_naive: np.ndarray
    mae_ips: np.ndarray


def checkpoint_steps(n_steps: int, log_interval: int) -> np.ndarray:
    steps = list(range(log_interval, n_steps + 1, log_interval))
    if not steps or steps[-1] != n_steps:
        steps.append(n_steps)
    return np.asarray(steps, dtype=np.int64)


def _make_request(env, blocks, p_neg_t, trial_relevance, t):
    if isinstance(env, NewsEnvironment):
        return news_request_from_draws(
            env, p_neg_t[t], blocks.comp_u[t], blocks.z[t], blocks.open_u[t], blocks.rel_u[t]
        )
    return movie_request_from_draws(env, trial_relevance, blocks.user_u[t])


def run_trial_python(
    env,
    policy,
    exposure,
    blocks: DrawBlocks,
    log_interval: int,
    p_neg_t: np.ndarray | None = None,
    trial_relevance: np.ndarray | None = None,
) -> TrialTrace:
    """Reference (pure python) interaction loop for any policy."""
    catalog: ItemCatalog = env.catalog
    n_steps = blocks.tie_u.shape[0]
    true_merit = env.true_group_merit
    true_rel = env.true_item_relevance
    eval_ledger = FairnessLedger.zeros(catalog)
    checkpoints = checkpoint_steps(n_steps, log_interval)
    m = catalog.group_count
    trace = TrialTrace(
        steps=checkpoints,
        ndcg_cum=np.zeros(checkpoints.size),
        unfair_exposure=np.zeros(checkpoints.size),
        unfair_impact=np.zeros(checkpoints.size),
        exp_ratio=np.zeros((checkpoints.size, m)),
        imp_ratio=np.zeros((checkpoints.size, m)),
        mae_naive=np.full(checkpoints.size, np.nan),
        mae_ips=np.full(checkpoints.size, np.nan),
    )
    ndcg_sum = 0.0
    next_cp = 0
    for t in range(n_steps):
        request = _make_request(env, blocks, p_neg_t, trial_relevance, t)
        kwargs = {}
        if policy.uses_sample_draw and blocks.sample_u is not None:
            kwargs["sample_u"] = blocks.sample_u[t]
        if policy.wants_true_relevance:
            kwargs["true_relevance"] = request.true_relevance
        order = policy.rank(request.features, tie_keys=blocks.tie_u[t], **kwargs)
        feedback = simulate_from_uniforms(
            order, request.true_relevance, exposure.propensity_by_rank, blocks.exam_u[t]
        )
        policy.observe(request.features, order, feedback)
        eval_ledger.accumulate(order, feedback, exposure, catalog)
        ndcg_sum += ndcg(order, request.true_relevance)
        tau = t + 1
        if tau == checkpoints[next_cp]:
            trace.ndcg_cum[next_cp] = ndcg_sum / tau
            exp_r = eval_ledger.ratios(true_merit, "exposure")
            imp_r = eval_ledger.ratios(true_merit, "impact")
            trace.unfair_exposure[next_cp] = overall_disparity_from_ratios(exp_r)
            trace.unfair_impact[next_cp] = overall_disparity_from_ratios(imp_r)
            trace.exp_ratio[next_cp] = exp_r
            trace.imp_ratio[next_cp] = imp_r
            est = getattr(policy, "estimator", None)
            if est is not None and est.step_count > 0:
                trace.mae_naive[next_cp] = np.abs(est.naive_estimate() - true_rel).mean()
                trace.mae_ips[next_cp] = np.abs(est.ips_estimate() - true_rel).mean()
            next_cp += 1
    return trace


def run_news_trial_kernel(
    env: NewsEnvironment,
    policy_name: str,
    exposure,
    blocks: DrawBlocks,
    log_interval: int,
    p_neg_t: np.ndarray,
    lam: float,
    min_merit: float,
) -> TrialTrace:
    """Fused compiled loop for the global news policies."""
    kernel = _backend.news_trial_kernel
    catalog = env.catalog
    n = catalog.n_items
    m = catalog.group_count
    checkpoints = checkpoint_steps(blocks.tie_u.shape[0], log_interval)
    out = np.zeros((checkpoints.size, 5 + 2 * m))
    kernel(
        env.polarities,
        catalog.group_ids,
        exposure.propensity_by_rank,
        position_gains(n),
        env.true_item_relevance,
        env.true_group_merit,
        catalog.group_sizes.astype(np.float64),
        KERNEL_POLICIES[policy_name],
        float(lam),
        float(min_merit),
        np.asarray(p_neg_t, dtype=np.float64),
        blocks.comp_u,
        blocks.z,
        blocks.open_u,
        blocks.rel_u,
        blocks.tie_u,
        blocks.exam_u,
        checkpoints,
        out,
    )
    return TrialTrace(
        steps=checkpoints,
        ndcg_cum=out[:, 0].copy(),
        unfair_exposure=out[:, 1].copy(),
        unfair_impact=out[:, 2].copy(),
        mae_naive=out[:, 3].copy(),
        mae_ips=out[:, 4].copy(),
        exp_ratio=out[:, 5 : 5 + m].copy(),
        imp_ratio=out[:, 5 + m :].copy(),
    )


def can_use_kernel(env, policy_name: str) -> bool:
    return (
        _backend.news_trial_kernel is not None
        and isinstance(env, NewsEnvironment)
        and policy_name in KERNEL_POLICIES
    )
