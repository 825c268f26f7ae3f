"""Dynamic learning-to-rank simulation under position-biased feedback,
with unbiased relevance estimation and merit-based fairness control."""

from ._backend import ACTIVE as backend
from .core import (
    ExposureModel,
    Feedback,
    ItemCatalog,
    Ranking,
    Request,
    argsort_desc,
    dcg,
    default_propensities,
    ndcg,
    simulate_interaction,
)
from .estimators import GlobalEstimator, merit_estimate
from .fairness import FairnessLedger, max_exposure_gap, theorem_bound
from .policies import make_policy
from .runner import ExperimentConfig, run_experiment, run_sweep, run_trial

__version__ = "0.1.0"

__all__ = [
    "ExposureModel",
    "Feedback",
    "ItemCatalog",
    "Ranking",
    "Request",
    "GlobalEstimator",
    "FairnessLedger",
    "ExperimentConfig",
    "argsort_desc",
    "backend",
    "dcg",
    "default_propensities",
    "make_policy",
    "max_exposure_gap",
    "merit_estimate",
    "ndcg",
    "run_experiment",
    "run_sweep",
    "run_trial",
    "simulate_interaction",
    "theorem_bound",
]
