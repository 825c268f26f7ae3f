"""Simulation environments: a synthetic two-group news stream and a
movie-preference environment built from a (real or synthetic) ratings
matrix.

News.  Each trial samples a catalog of articles with a polarity in
[-1, 1]; negative polarity is the "left" group, nonnegative the "right".
A user has a polarity drawn from a two-component normal mixture (means
-+0.5, sd 0.2, clipped to [-1, 1]; the negative component has weight
p_neg) and an openness o ~ U(0.05, 0.55).  The user finds article d
relevant with probability exp(-(rho_u - rho_d)^2 / (2 o^2)).  The ground
truth per-item relevance used by evaluation is the Monte-Carlo average of
that probability over 10^5 users, computed once at build time.

Movies.  A ratings matrix is completed by plain stochastic-gradient
matrix factorization (no bias terms); predicted ratings are squashed by a
sigmoid centered at b=3 with slope a=10 into relevance probabilities.
User factor rows double as the visible user features.  Each trial draws
one binary relevance matrix from those probabilities and then samples
users uniformly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ItemCatalog, Request
from .errors import ContractError, RatingsParseError, SelectionError, TrainingError

OPENNESS_LOW = 0.05
OPENNESS_HIGH = 0.55
POLARITY_SD = 0.2
MERIT_SAMPLES = 100_000


@dataclass(frozen=True)
class NewsEnvironment:
    catalog: ItemCatalog
    polarities: np.ndarray
    p_neg: float
    true_item_relevance: np.ndarray
    true_group_merit: np.ndarray

    @property
    def n_items(self) -> int:
        return self.catalog.n_items


def news_relevance_probability(user_polarity, openness, polarities):
    d = np.subtract.outer(np.atleast_1d(user_polarity), polarities)
    o = np.atleast_1d(openness)[:, None]
    return np.exp(-(d * d) / (2.0 * o * o))


def _user_draws(rng, count, p_neg):
    comp = rng.random(count)
    z = rng.standard_normal(count)
    mean = np.where(comp < p_neg, -0.5, 0.5)
    polarity = np.clip(mean + POLARITY_SD * z, -1.0, 1.0)
    openness = OPENNESS_LOW + (OPENNESS_HIGH - OPENNESS_LOW) * rng.random(count)
    return polarity, openness


def load_polarity_file(path) -> np.ndarray:
    """One polarity per line (plain text); values must lie in [-1, 1]."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            try:
                value = float(text)
            except ValueError as exc:
                raise RatingsParseError(f"bad polarity {text!r}", lineno) from exc
            if not -1.0 <= value <= 1.0:
                raise RatingsParseError(f"polarity {value} outside [-1, 1]", lineno)
            values.append(value)
    if not values:
        raise RatingsParseError("polarity file is empty")
    return np.asarray(values, dtype=np.float64)


def build_news(
    n_items: int,
    group_split: int,
    rng: np.random.Generator,
    p_neg: float = 0.5,
    polarity_file=None,
    merit_samples: int = MERIT_SAMPLES,
) -> NewsEnvironment:
    """Sample (or load) a news catalog and precompute its true merits.

    group_split items get negative polarities (the left group, id 0), the
    rest nonnegative (right, id 1).  With a polarity file the groups are
    derived from the signs instead.
    """
    if polarity_file is not None:
        polarities = load_polarity_file(polarity_file)
        n_items = polarities.size
    else:
        if not 1 <= group_split <= n_items - 1:
            raise ContractError("group_split must leave both groups non-empty")
        left = rng.uniform(-1.0, 0.0, group_split)
        right = rng.uniform(0.0, 1.0, n_items - group_split)
        polarities = np.concatenate([left, right])
    group_ids = (polarities >= 0).astype(np.int64)
    if group_ids.min() == group_ids.max():
        raise ContractError("polarities must span both groups")
    catalog = ItemCatalog(group_ids=group_ids, group_count=2, attributes=polarities)

    user_pol, user_open = _user_draws(rng, merit_samples, p_neg)
    probs = news_relevance_probability(user_pol, user_open, polarities)
    true_rel = probs.mean(axis=0)
    merit = np.bincount(group_ids, weights=true_rel, minlength=2) / catalog.group_sizes
    return NewsEnvironment(
        catalog=catalog,
        polarities=polarities,
        p_neg=p_neg,
        true_item_relevance=true_rel,
        true_group_merit=merit,
    )


def sample_news_request(
    env: NewsEnvironment, rng: np.random.Generator, p_neg: float | None = None
) -> Request:
    """Draw one user and their realized binary relevance vector."""
    p = env.p_neg if p_neg is None else p_neg
    if not 0.0 <= p <= 1.0:
        raise ContractError("p_neg must lie in [0, 1]")
    comp = rng.random()
    z = rng.standard_normal()
    open_u = rng.random()
    rel_u = rng.random(env.n_items)
    return news_request_from_draws(env, p, comp, z, open_u, rel_u)


def news_request_from_draws(env, p_neg, comp_u, z, open_u, rel_u) -> Request:
    """Deterministic request construction from pre-drawn randomness.

    The trial engine and the compiled kernel both use exactly this
    arithmetic, in this order, so trajectories agree across backends.
    """
    mean = -0.5 if comp_u < p_neg else 0.5
    polarity = min(1.0, max(-1.0, mean + POLARITY_SD * z))
    openness = OPENNESS_LOW + (OPENNESS_HIGH - OPENNESS_LOW) * open_u
    probs = np.exp(
        -((polarity - env.polarities) ** 2) / (2.0 * openness * openness)
    )
    relevance = (rel_u < probs).astype(np.int8)
    return Request(features=np.array([polarity, openness]), true_relevance=relevance)


# --- movie environment -----------------------------------------------------


@dataclass(frozen=True)
class MovieEnvironment:
    catalog: ItemCatalog
    probabilities: np.ndarray  # (n_users_pool, n_movies)
    features: np.ndarray  # (n_users_pool, D)

    @property
    def n_items(self) -> int:
        return self.catalog.n_items

    @property
    def n_users_pool(self) -> int:
        return self.probabilities.shape[0]

    @property
    def true_group_merit(self) -> np.ndarray:
        item_means = self.probabilities.mean(axis=0)
        return (
            np.bincount(self.catalog.group_ids, weights=item_means,
                        minlength=self.catalog.group_count)
            / self.catalog.group_sizes
        )

    @property
    def true_item_relevance(self) -> np.ndarray:
        return self.probabilities.mean(axis=0)

    def draw_trial_relevance(self, rng: np.random.Generator) -> np.ndarray:
        """One Bernoulli relevance matrix for a trial (drawn once per trial)."""
        return (rng.random(self.probabilities.shape) < self.probabilities).astype(np.int8)


def ingest_ratings(path):
    """Parse a (user_id, item_id, rating) CSV into three aligned arrays.

    A non-numeric first row is treated as a header and skipped; ratings
    must lie in [0.5, 5.0].
    """
    users, items, ratings = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) < 3:
                raise RatingsParseError("expected user,item,rating", lineno)
            try:
                u, i, r = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                if lineno == 1:
                    continue  # header row
                raise RatingsParseError(f"bad row {text!r}", lineno) from exc
            if not 0.5 <= r <= 5.0:
                raise RatingsParseError(f"rating {r} outside [0.5, 5.0]", lineno)
            users.append(u)
            items.append(i)
            ratings.append(r)
    if not users:
        warnings.warn(f"no ratings parsed from {path}", stacklevel=2)
    return (
        np.asarray(users, dtype=np.int64),
        np.asarray(items, dtype=np.int64),
        np.asarray(ratings, dtype=np.float64),
    )


def select_subset(triples, n_movies: int, n_users: int, candidate_pool: int = 300):
    """Three-stage deterministic selection of a dense desk-scale submatrix.

    1. the candidate_pool most-rated movies (ties: lower id first),
    2. among those, the n_movies with the highest rating standard
       deviation across users (ties: lower id),
    3. the n_users users with the most ratings of the chosen movies
       (ties: lower id).

    Returns the filtered triples restricted to the selection.
    """
    users, items, ratings = triples
    if users.size == 0:
        raise SelectionError("no ratings to select from")
    ids, counts = np.unique(items, return_counts=True)
    if ids.size < n_movies:
        raise SelectionError("not enough distinct movies")
    pool_order = np.lexsort((ids, -counts))
    pool = set(ids[pool_order[: min(candidate_pool, ids.size)]].tolist())

    stds = []
    for movie in sorted(pool):
        vals = ratings[items == movie]
        stds.append((-vals.std(), movie))
    stds.sort()
    chosen_movies = np.array(sorted(movie for _, movie in stds[:n_movies]))

    mask = np.isin(items, chosen_movies)
    u_ids, u_counts = np.unique(users[mask], return_counts=True)
    if u_ids.size < n_users:
        raise SelectionError("not enough distinct users")
    user_order = np.lexsort((u_ids, -u_counts))
    chosen_users = np.array(sorted(u_ids[user_order[:n_users]].tolist()))

    keep = mask & np.isin(users, chosen_users)
    return users[keep], items[keep], ratings[keep]


@dataclass(frozen=True)
class FactorModel:
    user_ids: np.ndarray
    item_ids: np.ndarray
    user_factors: np.ndarray
    item_factors: np.ndarray


def matrix_factorize(
    triples,
    dim: int,
    epochs: int = 60,
    learning_rate: float = 0.01,
    rng: np.random.Generator | None = None,
) -> FactorModel:
    """Plain SGD factorization of the observed entries, no bias terms.

    Minimizes sum over observed (u, i) of (r_ui - <U_u, V_i>)^2 with
    per-entry updates in a shuffled order each epoch.
    """
    if dim < 1:
        raise ContractError("dim must be >= 1")
    rng = rng or np.random.default_rng(0)
    users, items, ratings = triples
    user_ids = np.unique(users)
    item_ids = np.unique(items)
    u_index = {u: k for k, u in enumerate(user_ids)}
    i_index = {i: k for k, i in enumerate(item_ids)}
    U = rng.normal(0.0, 0.1, (user_ids.size, dim))
    V = rng.normal(0.0, 0.1, (item_ids.size, dim))
    rows = np.fromiter((u_index[u] for u in users), dtype=np.int64, count=users.size)
    cols = np.fromiter((i_index[i] for i in items), dtype=np.int64, count=items.size)
    for _ in range(epochs):
        for k in rng.permutation(ratings.size):
            u, i = rows[k], cols[k]
            err = ratings[k] - U[u] @ V[i]
            u_row = U[u].copy()
            U[u] += learning_rate * 2.0 * err * V[i]
            V[i] += learning_rate * 2.0 * err * u_row
        if not np.isfinite(U).all() or not np.isfinite(V).all():
            raise TrainingError("factorization diverged; lower the learning rate")
    return FactorModel(user_ids=user_ids, item_ids=item_ids, user_factors=U, item_factors=V)


def build_movie_env(
    user_factors: np.ndarray,
    item_factors: np.ndarray,
    group_ids: np.ndarray,
    a: float = 10.0,
    b: float = 3.0,
) -> MovieEnvironment:
    """Relevance probability = sigmoid(a * (predicted rating - b))."""
    U = np.asarray(user_factors, dtype=np.float64)
    V = np.asarray(item_factors, dtype=np.float64)
    if U.shape[1] != V.shape[1]:
        raise ContractError("factor dimensions do not match")
    scores = U @ V.T
    probabilities = 1.0 / (1.0 + np.exp(-a * (scores - b)))
    group_ids = np.asarray(group_ids, dtype=np.int64)
    catalog = ItemCatalog(group_ids=group_ids, group_count=int(group_ids.max()) + 1)
    return MovieEnvironment(catalog=catalog, probabilities=probabilities, features=U)


def synthetic_movie_env(
    n_users: int,
    n_movies: int,
    dim: int,
    n_groups: int,
    rng: np.random.Generator,
    a: float = 10.0,
    group_spread: float = 0.0,
) -> MovieEnvironment:
    """Desk-scale stand-in for the ratings pipeline: planted latent factors
    whose inner products play the role of centered predicted ratings.

    group_spread > 0 gives the groups systematically different popularity
    (score offsets spaced in [-spread, spread]), mirroring how real item
    groups differ in average relevance.
    """
    scale = dim ** -0.25
    U = rng.normal(0.0, scale, (n_users, dim))
    V = rng.normal(0.0, scale, (n_movies, dim))
    groups = np.arange(n_movies) % n_groups
    scores = U @ V.T
    if n_groups > 1 and group_spread:
        offsets = np.linspace(-group_spread, group_spread, n_groups)
        scores = scores + offsets[groups]
    probabilities = 1.0 / (1.0 + np.exp(-a * scores))
    catalog = ItemCatalog(group_ids=groups, group_count=n_groups)
    return MovieEnvironment(catalog=catalog, probabilities=probabilities, features=U)


def sample_movie_request(
    env: MovieEnvironment, rng: np.random.Generator, trial_relevance: np.ndarray
) -> Request:
    """Uniformly sample a user; relevance comes from the trial's fixed
    Bernoulli matrix, not a fresh draw."""
    return movie_request_from_draws(env, trial_relevance, rng.random())


def movie_request_from_draws(
    env: MovieEnvironment, trial_relevance: np.ndarray, user_u: float
) -> Request:
    if trial_relevance.shape != env.probabilities.shape:
        raise ContractError("trial relevance matrix has the wrong shape")
    user = min(int(user_u * env.n_users_pool), env.n_users_pool - 1)
    return Request(features=env.features[user], true_relevance=trial_relevance[user])


def save_movie_env(env: MovieEnvironment, path) -> None:
    doc = {
        "probabilities": env.probabilities.tolist(),
        "features": env.features.tolist(),
        "groups": env.catalog.group_ids.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_movie_env(path) -> MovieEnvironment:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    groups = np.asarray(doc["groups"], dtype=np.int64)
    catalog = ItemCatalog(group_ids=groups, group_count=int(groups.max()) + 1)
    return MovieEnvironment(
        catalog=catalog,
        probabilities=np.asarray(doc["probabilities"], dtype=np.float64),
        features=np.asarray(doc["features"], dtype=np.float64),
    )
