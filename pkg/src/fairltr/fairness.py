"""Cumulative fairness accounting: exposure/impact ledger and disparities.

Per step t a group receives

  exposure  Exp_t(G) = mean over d in G of propensity(rank of d)
  impact    Imp_t(G) = mean over d in G of clicks(d)

The amortized disparity between two groups after tau steps is

  D_tau(G_i, G_j) = (avg sums of G_i)/merit(G_i) - (avg sums of G_j)/merit(G_j)

with the sums picked by mode ("exposure" or "impact").  The controller's
per-item error term raises items of underexposed groups:

  err(d in G) = tau * max_i D_tau(G_i, G)       (tau = ledger steps so far)

which is always >= 0 because D(G, G) = 0 participates in the max.  The
implementation uses the equivalent form tau * (max_i ratio_i - ratio_G).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExposureModel, Feedback, ItemCatalog, Ranking, rank_of_items
from .errors import EmptyHistoryError, PropensityError, UndefinedMetricError

MODES = ("exposure", "impact")


@dataclass
class FairnessLedger:
    """Cumulative per-group exposure and impact sums for one trial."""

    exposure_sums: np.ndarray
    impact_sums: np.ndarray
    group_sizes: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, catalog: ItemCatalog) -> "FairnessLedger":
        m = catalog.group_count
        return cls(
            exposure_sums=np.zeros(m, dtype=np.float64),
            impact_sums=np.zeros(m, dtype=np.float64),
            group_sizes=catalog.group_sizes.astype(np.float64),
        )

    @property
    def group_count(self) -> int:
        return self.exposure_sums.size

    def accumulate(
        self,
        order: Ranking,
        feedback: Feedback,
        exposure: ExposureModel,
        catalog: ItemCatalog,
    ) -> None:
        inv = rank_of_items(order)
        m = self.group_count
        exp_g = np.bincount(
            catalog.group_ids, weights=exposure.propensity_by_rank[inv], minlength=m
        )
        imp_g = np.bincount(
            catalog.group_ids, weights=feedback.clicks.astype(np.float64), minlength=m
        )
        self.exposure_sums += exp_g / self.group_sizes
        self.impact_sums += imp_g / self.group_sizes
        self.step_count += 1

    def _sums(self, mode: str) -> np.ndarray:
        if mode == "exposure":
            return self.exposure_sums
        if mode == "impact":
            return self.impact_sums
        raise ValueError(f"unknown mode {mode!r}")

    def ratios(self, merit: np.ndarray, mode: str) -> np.ndarray:
        """Per-group average-sums-to-merit ratios at the current step count."""
        if self.step_count < 1:
            raise EmptyHistoryError("ledger is empty")
        merit = np.asarray(merit, dtype=np.float64)
        if (merit <= 0).any():
            raise PropensityError("merits must be strictly positive")
        return (self._sums(mode) / self.step_count) / merit

    def disparity(self, merit: np.ndarray, g_i: int, g_j: int, mode: str) -> float:
        r = self.ratios(merit, mode)
        return float(r[g_i] - r[g_j])

    def overall_disparity(self, merit: np.ndarray, mode: str) -> float:
        """Mean absolute pairwise disparity, 2/(m(m-1)) * sum_{i<j} |D_ij|."""
        m = self.group_count
        if m < 2:
            raise UndefinedMetricError("need at least two groups")
        r = self.ratios(merit, mode)
        total = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                total += abs(r[i] - r[j])
        return 2.0 * total / (m * (m - 1))

    def error_term(self, merit: np.ndarray, catalog: ItemCatalog, mode: str) -> np.ndarray:
        """Controller correction per item; zero for the best-off group."""
        if self.step_count == 0:
            return np.zeros(catalog.n_items)
        r = self.ratios(merit, mode)
        err_group = self.step_count * (r.max() - r)
        return err_group[catalog.group_ids]


def overall_disparity_from_ratios(ratios: np.ndarray) -> float:
    """Same metric as FairnessLedger.overall_disparity from raw ratios."""
    m = ratios.size
    if m < 2:
        raise UndefinedMetricError("need at least two groups")
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            total += abs(ratios[i] - ratios[j])
    return 2.0 * total / (m * (m - 1))


def max_exposure_gap(
    exposure: ExposureModel, catalog: ItemCatalog, merit: np.ndarray
) -> float:
    """Largest achievable exposure/merit difference between two groups.

    For an ordered pair (A, B) the extremal ranking puts A contiguously at
    the top and B contiguously at the bottom (other groups fill the middle
    and do not affect the pair's difference, since the curve is fixed).
    """
    merit = np.asarray(merit, dtype=np.float64)
    props = exposure.propensity_by_rank
    n = props.size
    sizes = catalog.group_sizes
    m = catalog.group_count
    if m < 2:
        return 0.0
    gap = 0.0
    for a in range(m):
        top_a = props[: sizes[a]].mean() / merit[a]
        for b in range(m):
            if a == b:
                continue
            bottom_b = props[n - sizes[b] :].mean() / merit[b]
            gap = max(gap, top_a - bottom_b)
    return float(gap)


def theorem_bound(
    ledger: FairnessLedger,
    merit: np.ndarray,
    lam: float,
    exposure: ExposureModel,
    catalog: ItemCatalog,
) -> np.ndarray:
    """Per-pair ceiling on tau * |D^E_tau| when the controller runs onward.

    With merits frozen at the ledger's current step tau0, the controller
    guarantees tau * |D^E_tau(G_i, G_j)| <= max(tau0 * |D^E_tau0|, 1/lam + delta)
    for every later tau, where delta is the worst single-step exposure/merit
    difference over all rankings.  Returned as an (m, m) array filled for
    i < j (zero elsewhere).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    m = ledger.group_count
    delta = max_exposure_gap(exposure, catalog, merit)
    bounds = np.zeros((m, m))
    tau0 = ledger.step_count
    for i in range(m):
        for j in range(i + 1, m):
            d0 = ledger.disparity(merit, i, j, "exposure") if tau0 > 0 else 0.0
            bounds[i, j] = max(tau0 * abs(d0), 1.0 / lam + delta)
    return bounds
