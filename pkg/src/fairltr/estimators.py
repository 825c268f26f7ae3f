"""Global relevance estimation from censored clicks.

Two running estimators are maintained side by side over the interaction
history:

  naive:  sum_t c_t(d) / tau              (the raw click fraction)
  ips:    sum_t c_t(d) / p_t(d) / tau     (inverse-propensity weighted)

where p_t(d) is the examination propensity of the rank item d held at
step t.  The naive counter under-counts items stuck at low ranks; the
IPS estimate is unbiased for the true average relevance as long as all
propensities are bounded away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExposureModel, Feedback, ItemCatalog, Ranking, rank_of_items
from .errors import EmptyHistoryError, InvalidCatalogError, PropensityError


@dataclass
class GlobalEstimator:
    """Running click sums (plain and IPS-weighted) over one trial."""

    ips_sums: np.ndarray
    naive_sums: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, n_items: int) -> "GlobalEstimator":
        return cls(
            ips_sums=np.zeros(n_items, dtype=np.float64),
            naive_sums=np.zeros(n_items, dtype=np.float64),
        )

    def update(self, feedback: Feedback, order: Ranking, exposure: ExposureModel) -> None:
        props = exposure.propensity_by_rank
        if (props <= 0).any():
            raise PropensityError("propensities must be strictly positive")
        inv = rank_of_items(order)
        clicks = feedback.clicks.astype(np.float64)
        self.ips_sums += clicks / props[inv]
        self.naive_sums += clicks
        self.step_count += 1

    def ips_estimate(self) -> np.ndarray:
        if self.step_count < 1:
            raise EmptyHistoryError("no interactions observed yet")
        return self.ips_sums / self.step_count

    def naive_estimate(self) -> np.ndarray:
        if self.step_count < 1:
            raise EmptyHistoryError("no interactions observed yet")
        return self.naive_sums / self.step_count


def merit_estimate(
    relevance: np.ndarray, catalog: ItemCatalog, min_merit: float = 0.01
) -> np.ndarray:
    """Per-group mean relevance, floored at min_merit.

    The floor keeps merit denominators positive before any feedback has
    been collected for a group.
    """
    if min_merit <= 0:
        raise ValueError("min_merit must be positive")
    sizes = catalog.group_sizes
    if (sizes == 0).any():
        raise InvalidCatalogError("empty group")
    sums = np.bincount(
        catalog.group_ids,
        weights=np.asarray(relevance, dtype=np.float64),
        minlength=catalog.group_count,
    )
    return np.maximum(min_merit, sums / sizes)
