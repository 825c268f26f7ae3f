"""Command-line interface.

  fairltr simulate --env news --policy fairco-imp --users 3000 --trials 100 \
      --lambda 0.01 --seed 0 --log-interval 50 --out run.csv
  fairltr sweep --param lambda --values 0,0.01,0.1 [simulate flags]
  fairltr prepare-movies --ratings ratings.csv --movies 100 --users 10000 \
      --dim 50 --out env.json

A JSON file mirroring the flag names can seed any command via --config;
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .envs import (
    build_movie_env,
    ingest_ratings,
    matrix_factorize,
    save_movie_env,
    select_subset,
)
from .errors import ExperimentError, FairltrError
from .runner import (
    ExperimentConfig,
    _row_line,
    csv_header,
    experiment_csv,
    run_experiment,
    run_sweep,
    sweep_csv,
    write_text,
)


def _add_simulate_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--env", choices=["news", "movies"], default="news")
    parser.add_argument(
        "--policy",
        choices=["naive", "dultr-glob", "dultr-pers", "fairco-exp", "fairco-imp", "linprog"],
        default="dultr-glob",
    )
    parser.add_argument("--users", type=int, default=3000)
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--lambda", dest="lam", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-interval", type=int, default=50)
    parser.add_argument("--out", required=True)
    parser.add_argument("--env-file", default=None,
                        help="movies: prepared env JSON; news: polarity file")
    parser.add_argument("--items", type=int, default=30)
    parser.add_argument("--block-users", type=int, default=0)
    parser.add_argument("--p-neg", type=float, default=0.5)
    parser.add_argument("--group-split", type=int, default=15)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--config", default=None, help="JSON file of flag values")


def _config_from_args(args, sweep: bool = False) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        alias = {"lambda": "lam", "users": "n_users", "trials": "n_trials",
                 "items": "n_items"}
        doc.update({alias.get(k, k): v for k, v in raw.items()})
    cli = {
        "env": args.env,
        "policy": args.policy,
        "n_users": args.users,
        "n_trials": args.trials,
        "lam": args.lam,
        "seed": args.seed,
        "log_interval": args.log_interval,
        "env_file": args.env_file,
        "n_items": args.items,
        "block_users": args.block_users,
        "p_neg": args.p_neg,
        "group_split": args.group_split,
        "workers": args.workers,
    }
    defaults = {
        "env": "news", "policy": "dultr-glob", "n_users": 3000, "n_trials": 10,
        "lam": 0.01, "seed": 0, "log_interval": 50, "env_file": None,
        "n_items": 30, "block_users": 0, "p_neg": 0.5, "group_split": 15,
        "workers": 1,
    }
    for key, value in cli.items():
        if key not in doc or value != defaults[key]:
            doc[key] = value
    if sweep:
        doc["sweep_param"] = args.param
        doc["sweep_values"] = [_parse_value(v) for v in args.values.split(",")]
    return ExperimentConfig.from_dict(doc)


def _parse_value(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    try:
        result = run_experiment(config)
    except ExperimentError as exc:
        sys.stderr.write(f"error: {exc}\n")
        if exc.partial_rows:
            path = f"{args.out}.partial"
            m = len(exc.partial_rows[0].exp_ratio)
            lines = [csv_header(m)]
            lines += [_row_line(config.resolved_id(), None, r) for r in exc.partial_rows]
            write_text(path, "\n".join(lines) + "\n")
            sys.stderr.write(f"partial rows written to {path}\n")
        return 1
    write_text(args.out, experiment_csv(result))
    return 0


def _cmd_sweep(args) -> int:
    config = _config_from_args(args, sweep=True)
    results = run_sweep(config)
    write_text(args.out, sweep_csv(results))
    return 0


def _cmd_prepare_movies(args) -> int:
    triples = ingest_ratings(args.ratings)
    subset = select_subset(triples, n_movies=args.movies, n_users=args.users,
                           candidate_pool=args.candidate_pool)
    model = matrix_factorize(
        subset, dim=args.dim, epochs=args.epochs, learning_rate=args.learning_rate,
        rng=np.random.default_rng(args.seed),
    )
    if args.groups_file:
        mapping = {}
        with open(args.groups_file, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    movie, group = line.split(",")
                    mapping[int(movie)] = int(group)
        groups = np.array([mapping[i] for i in model.item_ids])
    else:
        groups = np.arange(model.item_ids.size) % args.groups
    env = build_movie_env(model.user_factors, model.item_factors, groups)
    save_movie_env(env, args.out)
    print(f"wrote {args.out}: {env.n_users_pool} users x {env.n_items} movies, "
          f"{env.catalog.group_count} groups")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fairltr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment, write a CSV")
    _add_simulate_flags(sim)

    swp = sub.add_parser("sweep", help="run an experiment per swept value")
    swp.add_argument("--param", choices=["lambda", "p_neg", "group_split", "block_users"],
                     required=True)
    swp.add_argument("--values", required=True, help="comma-separated values")
    _add_simulate_flags(swp)

    prep = sub.add_parser("prepare-movies", help="build a movie environment JSON")
    prep.add_argument("--ratings", required=True)
    prep.add_argument("--movies", type=int, default=100)
    prep.add_argument("--users", type=int, default=10_000)
    prep.add_argument("--dim", type=int, default=50)
    prep.add_argument("--out", required=True)
    prep.add_argument("--candidate-pool", type=int, default=300)
    prep.add_argument("--groups", type=int, default=5)
    prep.add_argument("--groups-file", default=None,
                      help="movie_id,group_id CSV overriding round-robin groups")
    prep.add_argument("--epochs", type=int, default=60)
    prep.add_argument("--learning-rate", type=float, default=0.01)
    prep.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_prepare_movies(args)
    except FairltrError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
