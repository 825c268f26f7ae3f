"""Experiment orchestration: seeded multi-trial runs, sweeps, CSV output.

A trial is a pure function of (config, trial_seed): the environment is
built from default_rng([trial_seed, 0]), the interaction randomness from
default_rng([trial_seed, 1]), and policy internals (network init) from
default_rng([trial_seed, 2]).  Experiments run trials at seeds
seed+0 .. seed+n_trials-1, so output is independent of execution order
and of the worker count.

CSV schema (exact column order):
  experiment_id, sweep_value, trial, step, ndcg_cum, unfair_exposure,
  unfair_impact, exp_ratio_g{i}..., imp_ratio_g{i}...
Per-trial rows come first (sorted by trial, step), then per-checkpoint
aggregate rows with trial="mean" and trial="std" (population std).
Wall-clock time is tracked on rows but never serialized, keeping the file
byte-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace
from multiprocessing import get_context

import numpy as np

from .core import default_propensities
from .engine import (
    TrialTrace,
    can_use_kernel,
    draw_movie_blocks,
    draw_news_blocks,
    run_news_trial_kernel,
    run_trial_python,
)
from .envs import MovieEnvironment, build_news, load_movie_env
from .errors import ContractError, ExperimentError
from .policies import POLICY_NAMES, make_policy

SWEEP_PARAMS = ("lambda", "p_neg", "group_split", "block_users")


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "news"
    policy: str = "dultr-glob"
    n_items: int = 30
    group_split: int = 15
    p_neg: float = 0.5
    block_users: int = 0
    env_file: str | None = None
    lam: float = 0.01
    min_merit: float = 0.01
    n_users: int = 3000
    n_trials: int = 10
    seed: int = 0
    log_interval: int = 50
    workers: int = 1
    experiment_id: str | None = None
    sweep_param: str | None = None
    sweep_values: tuple = ()
    hidden_dim: int = 64
    personal_epochs: int = 50
    merit_samples: int = 100_000
    force_python_engine: bool = False

    def __post_init__(self):
        if self.env not in ("news", "movies"):
            raise ContractError(f"unknown env {self.env!r}")
        if self.policy not in POLICY_NAMES + ("oracle",):
            raise ContractError(f"unknown policy {self.policy!r}")
        if self.n_users < 1 or self.n_trials < 1 or self.log_interval < 1:
            raise ContractError("n_users, n_trials and log_interval must be >= 1")
        if self.lam < 0:
            raise ContractError("lambda must be nonnegative")

    def resolved_id(self) -> str:
        if self.experiment_id:
            return self.experiment_id
        return f"{self.env}-{self.policy}-lam{self.lam:g}"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        alias = {"lambda": "lam", "users": "n_users", "trials": "n_trials",
                 "items": "n_items"}
        kwargs = {}
        for key, value in doc.items():
            name = alias.get(key, key)
            if name not in known:
                raise ContractError(f"unknown config key {key!r}")
            if name == "sweep_values":
                value = tuple(value)
            kwargs[name] = value
        return cls(**kwargs)


@dataclass
class MetricsRow:
    trial: object  # trial index, or "mean"/"std" on aggregate rows
    step: int
    ndcg_cum: float
    unfair_exposure: float
    unfair_impact: float
    exp_ratio: tuple
    imp_ratio: tuple
    mae_naive: float = float("nan")
    mae_ips: float = float("nan")
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list  # per-trial MetricsRow, sorted by (trial, step)
    aggregates: list  # mean/std MetricsRow per checkpoint
    traces: list = field(default_factory=list)  # TrialTrace per trial

    def final_aggregate(self, which: str = "mean") -> MetricsRow:
        rows = [r for r in self.aggregates if r.trial == which]
        return rows[-1]


def _p_neg_schedule(config: ExperimentConfig) -> np.ndarray:
    """The rich-get-richer block schedule: block_users right-leaning users
    (p_neg=0), the same number left-leaning (p_neg=1), then the configured
    stationary mixture."""
    schedule = np.full(config.n_users, config.p_neg, dtype=np.float64)
    x = min(config.block_users, config.n_users)
    schedule[:x] = 0.0
    schedule[x : min(2 * x, config.n_users)] = 1.0
    return schedule


def run_trial_trace(
    config: ExperimentConfig, trial_seed: int, movie_env: MovieEnvironment | None = None
) -> TrialTrace:
    needs_sampling = config.policy == "linprog"
    if config.env == "news":
        env = build_news(
            config.n_items,
            config.group_split,
            np.random.default_rng([trial_seed, 0]),
            p_neg=config.p_neg,
            polarity_file=config.env_file,
            merit_samples=config.merit_samples,
        )
        exposure = default_propensities(env.n_items)
        p_neg_t = _p_neg_schedule(config)
        blocks = draw_news_blocks(
            np.random.default_rng([trial_seed, 1]), config.n_users, env.n_items,
            with_sampling=needs_sampling,
        )
        if not config.force_python_engine and can_use_kernel(env, config.policy):
            return run_news_trial_kernel(
                env, config.policy, exposure, blocks, config.log_interval,
                p_neg_t, config.lam, config.min_merit,
            )
        policy = make_policy(
            config.policy, env.catalog, exposure, np.random.default_rng([trial_seed, 2]),
            lam=config.lam, min_merit=config.min_merit, feature_dim=2,
            hidden_dim=config.hidden_dim,
            personal_kwargs={"epochs": config.personal_epochs},
        )
        return run_trial_python(
            env, policy, exposure, blocks, config.log_interval, p_neg_t=p_neg_t
        )

    env = movie_env
    if env is None:
        if not config.env_file:
            raise ContractError("movies env needs env_file or a prebuilt environment")
        env = load_movie_env(config.env_file)
    exposure = default_propensities(env.n_items)
    trial_rel = env.draw_trial_relevance(np.random.default_rng([trial_seed, 0]))
    blocks = draw_movie_blocks(
        np.random.default_rng([trial_seed, 1]), config.n_users, env.n_items,
        with_sampling=needs_sampling,
    )
    policy = make_policy(
        config.policy, env.catalog, exposure, np.random.default_rng([trial_seed, 2]),
        lam=config.lam, min_merit=config.min_merit,
        feature_dim=env.features.shape[1],
        personalized_base=config.policy.startswith("fairco"),
        hidden_dim=config.hidden_dim,
        personal_kwargs={"epochs": config.personal_epochs},
    )
    return run_trial_python(
        env, policy, exposure, blocks, config.log_interval, trial_relevance=trial_rel
    )


def _trace_to_rows(trace: TrialTrace, trial: int, wall_time: float) -> list:
    rows = []
    for k, step in enumerate(trace.steps):
        rows.append(
            MetricsRow(
                trial=trial,
                step=int(step),
                ndcg_cum=float(trace.ndcg_cum[k]),
                unfair_exposure=float(trace.unfair_exposure[k]),
                unfair_impact=float(trace.unfair_impact[k]),
                exp_ratio=tuple(float(v) for v in trace.exp_ratio[k]),
                imp_ratio=tuple(float(v) for v in trace.imp_ratio[k]),
                mae_naive=float(trace.mae_naive[k]),
                mae_ips=float(trace.mae_ips[k]),
                wall_time=wall_time,
            )
        )
    return rows


def run_trial(
    config: ExperimentConfig, trial_seed: int, movie_env: MovieEnvironment | None = None
) -> list:
    """One seeded trial; returns its checkpoint rows."""
    start = time.perf_counter()
    trace = run_trial_trace(config, trial_seed, movie_env)
    elapsed = time.perf_counter() - start
    return _trace_to_rows(trace, trial=trial_seed - config.seed, wall_time=elapsed)


def _trial_job(args):
    config, trial_seed, movie_env = args
    start = time.perf_counter()
    trace = run_trial_trace(config, trial_seed, movie_env)
    return trial_seed, trace, time.perf_counter() - start


def run_experiment(
    config: ExperimentConfig, movie_env: MovieEnvironment | None = None
) -> ExperimentResult:
    """Run n_trials seeded trials plus per-checkpoint mean/std aggregates."""
    if config.env == "movies" and movie_env is None and config.env_file:
        movie_env = load_movie_env(config.env_file)
    jobs = [(config, config.seed + i, movie_env) for i in range(config.n_trials)]
    rows: list = []
    traces: list = []
    outcomes: list = []
    try:
        if config.workers > 1:
            with get_context("fork").Pool(config.workers) as pool:
                outcomes = pool.map(_trial_job, jobs)
        else:
            for job in jobs:
                outcomes.append(_trial_job(job))
    except Exception as exc:  # abort, carrying whatever finished cleanly
        partial = []
        for trial_seed, trace, elapsed in outcomes:
            partial.extend(_trace_to_rows(trace, trial_seed - config.seed, elapsed))
        raise ExperimentError(f"trial failed: {exc}", partial_rows=partial) from exc
    outcomes.sort(key=lambda item: item[0])
    for trial_seed, trace, elapsed in outcomes:
        traces.append(trace)
        rows.extend(_trace_to_rows(trace, trial_seed - config.seed, elapsed))
    rows.sort(key=lambda r: (r.trial, r.step))

    aggregates = []
    steps = sorted({r.step for r in rows})
    by_step = {s: [r for r in rows if r.step == s] for s in steps}
    m = len(rows[0].exp_ratio)
    for step in steps:
        group = by_step[step]
        for which, fn in (("mean", np.mean), ("std", np.std)):
            aggregates.append(
                MetricsRow(
                    trial=which,
                    step=step,
                    ndcg_cum=float(fn([r.ndcg_cum for r in group])),
                    unfair_exposure=float(fn([r.unfair_exposure for r in group])),
                    unfair_impact=float(fn([r.unfair_impact for r in group])),
                    exp_ratio=tuple(
                        float(fn([r.exp_ratio[g] for r in group])) for g in range(m)
                    ),
                    imp_ratio=tuple(
                        float(fn([r.imp_ratio[g] for r in group])) for g in range(m)
                    ),
                    mae_naive=float(fn([r.mae_naive for r in group])),
                    mae_ips=float(fn([r.mae_ips for r in group])),
                )
            )
    return ExperimentResult(config=config, rows=rows, aggregates=aggregates, traces=traces)


def _apply_sweep_value(config: ExperimentConfig, value) -> ExperimentConfig:
    param = config.sweep_param
    # one stable id across the blocks; the swept value lives in its own column
    stable_id = config.experiment_id or f"{config.env}-{config.policy}"
    if param == "lambda":
        return replace(config, lam=float(value), experiment_id=stable_id)
    if param == "p_neg":
        return replace(config, p_neg=float(value), experiment_id=stable_id)
    if param == "group_split":
        return replace(config, group_split=int(value), experiment_id=stable_id)
    if param == "block_users":
        return replace(config, block_users=int(value), experiment_id=stable_id)
    raise ContractError(f"unknown sweep parameter {param!r}")


def run_sweep(
    config: ExperimentConfig, movie_env: MovieEnvironment | None = None
) -> list:
    """One experiment per swept value; returns [(value, ExperimentResult)]."""
    if not config.sweep_values:
        raise ContractError("sweep needs at least one value")
    results = []
    for value in config.sweep_values:
        sub = _apply_sweep_value(config, value)
        results.append((value, run_experiment(sub, movie_env)))
    return results


# --- CSV serialization ------------------------------------------------------


def csv_header(group_count: int) -> str:
    cols = ["experiment_id", "sweep_value", "trial", "step", "ndcg_cum",
            "unfair_exposure", "unfair_impact"]
    cols += [f"exp_ratio_g{g}" for g in range(group_count)]
    cols += [f"imp_ratio_g{g}" for g in range(group_count)]
    return ",".join(cols)


def _row_line(experiment_id: str, sweep_value, row: MetricsRow) -> str:
    sweep_text = "" if sweep_value is None else repr(sweep_value) if isinstance(
        sweep_value, float) else str(sweep_value)
    cells = [experiment_id, sweep_text, str(row.trial), str(row.step),
             repr(row.ndcg_cum), repr(row.unfair_exposure), repr(row.unfair_impact)]
    cells += [repr(v) for v in row.exp_ratio]
    cells += [repr(v) for v in row.imp_ratio]
    return ",".join(cells)


def experiment_csv(result: ExperimentResult, sweep_value=None) -> str:
    eid = result.config.resolved_id()
    m = len(result.rows[0].exp_ratio)
    lines = [csv_header(m)]
    for row in result.rows:
        lines.append(_row_line(eid, sweep_value, row))
    for row in result.aggregates:
        lines.append(_row_line(eid, sweep_value, row))
    return "\n".join(lines) + "\n"


def sweep_csv(results: list) -> str:
    first = results[0][1]
    m = len(first.rows[0].exp_ratio)
    lines = [csv_header(m)]
    for value, result in results:
        eid = result.config.resolved_id()
        for row in result.rows:
            lines.append(_row_line(eid, value, row))
        for row in result.aggregates:
            lines.append(_row_line(eid, value, row))
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
