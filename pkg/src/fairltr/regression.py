"""Personalized relevance model: a one-hidden-layer regressor trained on
an inverse-propensity-weighted objective.

The network maps user features x (dim D) through H rectified hidden units
to n logistic outputs, one predicted relevance probability per item.  Two
training objectives are supported:

  full_info  sum_t sum_d (r_t(d) - y(d|x_t))^2        needs true labels
  unbiased   sum_t sum_d y(d|x_t)^2
                 + c_t(d)/p_t(d) * (c_t(d) - 2 y(d|x_t))

The unbiased objective only uses observed clicks c and the propensities p
of the presented ranking, and its expectation over examination draws
equals the full-information least squares (the c^2/p vs c^2/p^2 constant
differs, which does not move the minimizer).  Optimization is full-batch
adaptive-moment gradient descent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PropensityError, TrainingError

PARAM_NAMES = ("w1", "b1", "w2", "b2")


@dataclass
class RelevanceRegressor:
    w1: np.ndarray  # (D, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H, n)
    b2: np.ndarray  # (n,)

    @classmethod
    def initialize(
        cls, input_dim: int, hidden_dim: int, output_dim: int, rng: np.random.Generator
    ) -> "RelevanceRegressor":
        """Uniform init in +-1/sqrt(fan_in) for each layer."""
        s1 = 1.0 / np.sqrt(input_dim)
        s2 = 1.0 / np.sqrt(hidden_dim)
        return cls(
            w1=rng.uniform(-s1, s1, (input_dim, hidden_dim)),
            b1=rng.uniform(-s1, s1, hidden_dim),
            w2=rng.uniform(-s2, s2, (hidden_dim, output_dim)),
            b2=rng.uniform(-s2, s2, output_dim),
        )

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def forward(self, features: np.ndarray) -> np.ndarray:
        """Batch forward pass: (T, D) -> predicted relevance in (0, 1)^(T, n)."""
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise ContractError(
                f"feature dim {x.shape[1]} != model input dim {self.input_dim}"
            )
        hidden = np.maximum(0.0, x @ self.w1 + self.b1)
        logits = hidden @ self.w2 + self.b2
        return 1.0 / (1.0 + np.exp(-logits))

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Predicted relevance probability of every item for one user."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ContractError("predict expects a single feature vector")
        return self.forward(x[None, :])[0]


@dataclass
class InteractionLog:
    """Training data: one row per presented ranking.

    `propensities[t][d]` is the examination propensity of the display rank
    item d held at step t.  `relevances` stays None in normal operation and
    is only populated for skyline/diagnostic training.
    """

    features: list = field(default_factory=list)
    clicks: list = field(default_factory=list)
    propensities: list = field(default_factory=list)
    relevances: list | None = None

    def __len__(self) -> int:
        return len(self.features)

    def append(self, x, clicks, propensities, relevance=None) -> None:
        self.features.append(np.asarray(x, dtype=np.float64))
        self.clicks.append(np.asarray(clicks, dtype=np.float64))
        self.propensities.append(np.asarray(propensities, dtype=np.float64))
        if relevance is not None:
            if self.relevances is None:
                self.relevances = []
            self.relevances.append(np.asarray(relevance, dtype=np.float64))

    def arrays(self):
        if not self.features:
            raise ContractError("interaction log is empty")
        x = np.stack(self.features)
        c = np.stack(self.clicks)
        p = np.stack(self.propensities)
        if (p <= 0).any():
            raise PropensityError("logged propensities must be positive")
        if ((c != 0.0) & (c != 1.0)).any():
            raise ContractError("logged clicks must be binary")
        r = np.stack(self.relevances) if self.relevances else None
        return x, c, p, r


@dataclass
class AdamState:
    """Per-parameter moment accumulators for adaptive-moment updates."""

    first: dict
    second: dict
    step: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_model(cls, model: RelevanceRegressor, learning_rate: float = 1e-3) -> "AdamState":
        return cls(
            first={k: np.zeros_like(v) for k, v in model.params().items()},
            second={k: np.zeros_like(v) for k, v in model.params().items()},
            learning_rate=learning_rate,
        )

    def apply(self, model: RelevanceRegressor, grads: dict) -> None:
        self.step += 1
        bc1 = 1.0 - self.beta1**self.step
        bc2 = 1.0 - self.beta2**self.step
        for name, param in model.params().items():
            g = grads[name]
            self.first[name] = self.beta1 * self.first[name] + (1 - self.beta1) * g
            self.second[name] = self.beta2 * self.second[name] + (1 - self.beta2) * g * g
            m_hat = self.first[name] / bc1
            v_hat = self.second[name] / bc2
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def unbiased_loss(model: RelevanceRegressor, log: InteractionLog) -> float:
    x, c, p, _ = log.arrays()
    y = model.forward(x)
    return float((y * y + (c / p) * (c - 2.0 * y)).sum())


def full_info_loss(model: RelevanceRegressor, log: InteractionLog) -> float:
    x, _, _, r = log.arrays()
    if r is None:
        raise ContractError("log has no true relevances")
    y = model.forward(x)
    return float(((r - y) ** 2).sum())


def gradient(model: RelevanceRegressor, log: InteractionLog, objective: str = "unbiased") -> dict:
    """Exact gradient of the chosen objective at the current parameters."""
    x, c, p, r = log.arrays()
    hidden_pre = x @ model.w1 + model.b1
    hidden = np.maximum(0.0, hidden_pre)
    y = 1.0 / (1.0 + np.exp(-(hidden @ model.w2 + model.b2)))
    if objective == "unbiased":
        dy = 2.0 * y - 2.0 * (c / p)
    elif objective == "full_info":
        if r is None:
            raise ContractError("log has no true relevances")
        dy = 2.0 * (y - r)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    dz2 = dy * y * (1.0 - y)
    dhidden = (dz2 @ model.w2.T) * (hidden_pre > 0)
    return {
        "w2": hidden.T @ dz2,
        "b2": dz2.sum(axis=0),
        "w1": x.T @ dhidden,
        "b1": dhidden.sum(axis=0),
    }


def train(
    model: RelevanceRegressor,
    log: InteractionLog,
    optimizer: AdamState,
    epochs: int,
    objective: str = "unbiased",
) -> float:
    """Full-batch gradient descent; returns the final loss on the log."""
    loss_fn = unbiased_loss if objective == "unbiased" else full_info_loss
    for _ in range(epochs):
        optimizer.apply(model, gradient(model, log, objective))
    loss = loss_fn(model, log)
    if not np.isfinite(loss):
        raise TrainingError("training diverged (loss is not finite)")
    return loss


def save_checkpoint(model: RelevanceRegressor, path) -> None:
    """Flat JSON checkpoint: dims plus row-major weight arrays."""
    doc = {
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "output_dim": model.output_dim,
        "w1": model.w1.ravel().tolist(),
        "b1": model.b1.tolist(),
        "w2": model.w2.ravel().tolist(),
        "b2": model.b2.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> RelevanceRegressor:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    d, h, n = doc["input_dim"], doc["hidden_dim"], doc["output_dim"]
    return RelevanceRegressor(
        w1=np.asarray(doc["w1"], dtype=np.float64).reshape(d, h),
        b1=np.asarray(doc["b1"], dtype=np.float64),
        w2=np.asarray(doc["w2"], dtype=np.float64).reshape(h, n),
        b2=np.asarray(doc["b2"], dtype=np.float64),
    )
