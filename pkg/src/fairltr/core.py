"""Domain types, the position-based click model, and ranking metrics.

The interaction model: a request carries a hidden binary relevance vector
r over the n items.  The system shows a ranking (a permutation of item
ids) and the user examines each display position independently with a
rank-dependent probability (the propensity).  A click happens exactly
when an item is both examined and relevant:

    click(d) = examined(d) AND r(d)

so an unclicked item is ambiguous: unexamined or irrelevant.  Ranking
quality is measured by DCG = sum_d r(d) / log2(1 + rank(d)) and its
normalized form NDCG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    EmptyCatalogError,
    InvalidCatalogError,
    InvalidScoreError,
    PropensityError,
)

# A ranking is a permutation array: order[j] = item shown at display
# position j+1.  Helpers below validate; hot paths trust their inputs.
Ranking = np.ndarray


@dataclass(frozen=True)
class ItemCatalog:
    """The ranked universe: item -> group plus environment attributes.

    Item ids are implicitly 0..n-1 (the array index).  `attributes` holds
    environment-specific per-item values (news: polarity; movies: unused).
    """

    group_ids: np.ndarray
    group_count: int
    attributes: np.ndarray | None = None

    def __post_init__(self):
        gids = np.asarray(self.group_ids, dtype=np.int64)
        object.__setattr__(self, "group_ids", gids)
        if gids.ndim != 1 or gids.size == 0:
            raise EmptyCatalogError("catalog needs at least one item")
        if self.group_count < 1:
            raise InvalidCatalogError("group_count must be >= 1")
        if gids.min() < 0 or gids.max() >= self.group_count:
            raise InvalidCatalogError("group id out of range")
        sizes = np.bincount(gids, minlength=self.group_count)
        if (sizes == 0).any():
            raise InvalidCatalogError("every group must be non-empty")
        object.__setattr__(self, "_group_sizes", sizes)

    @property
    def n_items(self) -> int:
        return self.group_ids.size

    @property
    def group_sizes(self) -> np.ndarray:
        return self._group_sizes

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.group_ids == group)


@dataclass(frozen=True)
class Request:
    """One user arrival: visible features plus hidden true relevance."""

    features: np.ndarray
    true_relevance: np.ndarray

    def __post_init__(self):
        rel = np.asarray(self.true_relevance)
        if not np.isin(rel, (0, 1)).all():
            raise ContractError("true_relevance must be binary")


@dataclass(frozen=True)
class ExposureModel:
    """Position -> examination probability map of the position-based model."""

    propensity_by_rank: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.propensity_by_rank, dtype=np.float64)
        object.__setattr__(self, "propensity_by_rank", p)
        if p.size == 0:
            raise EmptyCatalogError("empty propensity curve")
        if (p <= 0).any() or (p > 1).any():
            raise PropensityError("propensities must lie in (0, 1]")

    @property
    def n_items(self) -> int:
        return self.propensity_by_rank.size


@dataclass(frozen=True)
class Feedback:
    """Observed clicks plus the simulator-internal examination vector.

    Policies only ever see `clicks`; `examination` exists so tests can
    verify the censoring identity clicks = examination AND relevance.
    """

    clicks: np.ndarray
    examination: np.ndarray = field(repr=False)

    def __post_init__(self):
        if (np.asarray(self.clicks) > np.asarray(self.examination)).any():
            raise ContractError("click on an unexamined item")


def default_propensities(n: int) -> ExposureModel:
    """Examination curve 1/log2(rank+1): rank 1 -> 1.0, rank 3 -> 0.5."""
    if n < 1:
        raise EmptyCatalogError("need at least one item")
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return ExposureModel(1.0 / np.log2(ranks + 1.0))


def position_gains(n: int) -> np.ndarray:
    """DCG gain per display position j=1..n: 1/log2(1+j)."""
    return 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))


def rank_of_items(order: Ranking) -> np.ndarray:
    """Inverse permutation: rank_of[item] = 0-based display position."""
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return inv


def validate_ranking(order: Ranking) -> None:
    order = np.asarray(order)
    n = order.size
    if n == 0 or not np.array_equal(np.sort(order), np.arange(n)):
        raise ContractError("ranking must be a permutation of 0..n-1")


def simulate_interaction(
    order: Ranking,
    request: Request,
    exposure: ExposureModel,
    rng: np.random.Generator,
) -> Feedback:
    """Draw one user interaction under the position-based click model.

    Each item is examined independently with the propensity of its display
    rank; clicks are examination AND true relevance.
    """
    u = rng.random(order.size)
    return simulate_from_uniforms(order, request.true_relevance, exposure.propensity_by_rank, u)


def simulate_from_uniforms(
    order: Ranking,
    relevance: np.ndarray,
    propensities: np.ndarray,
    uniforms: np.ndarray,
) -> Feedback:
    """Deterministic core of simulate_interaction given pre-drawn U(0,1)s.

    uniforms[d] is compared against the propensity of item d's rank, so the
    consumption order is by item id (the trial engine and the compiled
    kernel rely on this exact convention).
    """
    inv = rank_of_items(order)
    examined = (uniforms < propensities[inv]).astype(np.int8)
    clicks = examined & np.asarray(relevance, dtype=np.int8)
    return Feedback(clicks=clicks, examination=examined)


def dcg(order: Ranking, relevance: np.ndarray) -> float:
    """sum_d relevance(d) / log2(1 + rank(d))."""
    rel = np.asarray(relevance, dtype=np.float64)
    if rel.size != order.size:
        raise ContractError("relevance/ranking length mismatch")
    return float(rel[order] @ position_gains(order.size))


def ideal_dcg(relevance: np.ndarray) -> float:
    rel = np.sort(np.asarray(relevance, dtype=np.float64))[::-1]
    return float(rel @ position_gains(rel.size))


def ndcg(order: Ranking, relevance: np.ndarray) -> float:
    """DCG normalized by the ideal ranking's DCG; 1.0 when nothing is relevant.

    A request with zero relevant items makes every ranking vacuously
    optimal, hence the 1.0 convention.
    """
    best = ideal_dcg(relevance)
    if best == 0.0:
        return 1.0
    return dcg(order, relevance) / best


def argsort_desc(scores: np.ndarray, rng: np.random.Generator) -> Ranking:
    """Sort items by descending score, breaking ties uniformly at random."""
    return argsort_with_keys(scores, rng.random(np.asarray(scores).size))


def argsort_with_keys(scores: np.ndarray, tie_keys: np.ndarray) -> Ranking:
    """Deterministic descending argsort with explicit tie-break keys.

    Equal scores are ordered by ascending tie key; distinct uniform keys
    make the tie-break uniform over permutations of the tied block.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if np.isnan(scores).any():
        raise InvalidScoreError("scores contain NaN")
    return np.lexsort((tie_keys, -scores))
