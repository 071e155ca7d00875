"""Binary help-call classifier: linear max-margin model over TF-IDF vectors.

Trained with Pegasos-style stochastic subgradient descent on the hinge loss
with L2 regularization. The bias is learned as an extra always-on feature
(so it shares the regularizer); trained models are immutable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tweetriage.domain import HelpLabel
from tweetriage.textfeat import SparseVector


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-4
    epochs: int = 50
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    trained_on: str = ""

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model weights must be finite")

    def to_json(self) -> str:
        return json.dumps(
            {
                "weights": [float(w) for w in self.weights],
                "bias": float(self.bias),
                "vectorizer_fingerprint": self.trained_on,
            }
        )

    @classmethod
    def from_json(cls, payload: str) -> "LinearModel":
        doc = json.loads(payload)
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            bias=float(doc["bias"]),
            trained_on=doc.get("vectorizer_fingerprint", ""),
        )


def _sign(label: HelpLabel) -> float:
    return 1.0 if label == HelpLabel.CALL_FOR_HELP else -1.0


def train_classifier(
    X: Sequence[SparseVector],
    y: Sequence[HelpLabel],
    cfg: TrainConfig,
    *,
    feature_size: int,
    fingerprint: str = "",
) -> LinearModel:
    """Minimize lam/2 * ||w||^2 + mean hinge loss by Pegasos SGD.

    Step size 1/(lam * t) with the usual 1/sqrt(lam)-ball projection;
    deterministic given cfg.seed.
    """
    if len(X) != len(y) or len(X) < 2:
        raise ValueError("need at least two labeled examples")
    signs = np.array([_sign(label) for label in y])
    if len(set(signs.tolist())) < 2:
        raise ValueError("training data must contain both classes")
    for x in X:
        if x.indices and x.indices[-1] >= feature_size:
            raise ValueError("feature index out of range")

    # weights[:-1] are the term weights, weights[-1] is the bias slot.
    w = np.zeros(feature_size + 1)
    radius = 1.0 / math.sqrt(cfg.lam)
    rng = np.random.default_rng(cfg.seed)
    order = np.arange(len(X))
    step = 0
    for _ in range(cfg.epochs):
        if cfg.shuffle:
            rng.shuffle(order)
        for i in order:
            step += 1
            eta = 1.0 / (cfg.lam * step)
            x = X[i]
            margin = signs[i] * (x.dot(w) + w[-1])
            w *= 1.0 - eta * cfg.lam
            if margin < 1.0:
                if x.indices:
                    w[list(x.indices)] += eta * signs[i] * np.asarray(x.values)
                w[-1] += eta * signs[i]
            norm = float(np.linalg.norm(w))
            if norm > radius:
                w *= radius / norm
    return LinearModel(weights=w[:-1].copy(), bias=float(w[-1]), trained_on=fingerprint)


def predict(model: LinearModel, x: SparseVector) -> tuple[HelpLabel, float]:
    """Return (label, margin); margin > 0 means call-for-help, ties are negative."""
    if x.indices and x.indices[-1] >= len(model.weights):
        raise ValueError("feature index out of range for this model")
    margin = x.dot(model.weights) + model.bias
    label = HelpLabel.CALL_FOR_HELP if margin > 0 else HelpLabel.NOT_CALL_FOR_HELP
    return label, float(margin)


def objective(
    model: LinearModel, X: Sequence[SparseVector], y: Sequence[HelpLabel], lam: float
) -> float:
    """The trained objective: lam/2 * (||w||^2 + b^2) + mean hinge loss."""
    reg = 0.5 * lam * (float(np.dot(model.weights, model.weights)) + model.bias**2)
    hinge = 0.0
    for x, label in zip(X, y):
        margin = _sign(label) * (x.dot(model.weights) + model.bias)
        hinge += max(0.0, 1.0 - margin)
    return reg + hinge / len(X)
