"""Linear-chain CRF entity tagger built from scratch.

Per-token state features (hand-crafted strings) plus label-bigram transition
weights over the nine BIO labels. Inference runs in log space; training is
SGD on the per-sequence negative log-likelihood with L2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tweetriage.domain import BioLabel, EntitySpan, bio_to_spans
from tweetriage.textfeat import Token, shape_class, stem, tokenize, turkish_fold
from tweetriage.textfeat import ShapeClass

NUM_LABELS = len(BioLabel)

FeatureVector = Sequence[str]


def extract_features(tokens: Sequence[Token], i: int) -> list[str]:
    """Features for position i: stem, shape of the current/previous/next token
    (shape doubles as a pseudo-POS), folded surface, and casing booleans."""
    if not 0 <= i < len(tokens):
        raise IndexError(f"position {i} out of range")
    token = tokens[i]
    shape = shape_class(token.surface)
    prev_shape = "BOS" if i == 0 else shape_class(tokens[i - 1].surface).value
    next_shape = "EOS" if i == len(tokens) - 1 else shape_class(tokens[i + 1].surface).value
    return [
        "bias",
        f"stem={stem(token.surface)}",
        f"shape={shape.value}",
        f"prev.shape={prev_shape}",
        f"next.shape={next_shape}",
        f"word={turkish_fold(token.surface)}",
        f"istitle={1 if shape is ShapeClass.TITLE else 0}",
        f"islower={1 if shape is ShapeClass.LOWER else 0}",
        f"isupper={1 if shape is ShapeClass.UPPER else 0}",
    ]


def sequence_features(tokens: Sequence[Token]) -> list[list[str]]:
    return [extract_features(tokens, i) for i in range(len(tokens))]


@dataclass(frozen=True)
class CrfTrainConfig:
    iterations: int = 1000
    l2: float = 0.1
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


class CrfModel:
    """Feature-indexed state weights [num_features x 9] plus transition
    weights [9 x 9]; the feature index is frozen after training and unknown
    features contribute zero at decode time."""

    def __init__(
        self,
        feature_index: dict[str, int],
        state_weights: np.ndarray,
        transition_weights: np.ndarray,
        l2: float = 0.1,
    ):
        state_weights = np.asarray(state_weights, dtype=np.float64)
        transition_weights = np.asarray(transition_weights, dtype=np.float64)
        if state_weights.shape != (len(feature_index), NUM_LABELS):
            raise ValueError("state weight shape mismatch")
        if transition_weights.shape != (NUM_LABELS, NUM_LABELS):
            raise ValueError("transition weight shape mismatch")
        if not (np.all(np.isfinite(state_weights)) and np.all(np.isfinite(transition_weights))):
            raise ValueError("weights must be finite")
        self.feature_index = dict(feature_index)
        self.state_weights = state_weights
        self.transition_weights = transition_weights
        self.l2 = float(l2)

    @property
    def num_features(self) -> int:
        return len(self.feature_index)

    def emissions(self, features: Sequence[FeatureVector]) -> np.ndarray:
        """Per-position label scores [T x 9]; unknown features are skipped."""
        scores = np.zeros((len(features), NUM_LABELS))
        index = self.feature_index
        for t, feats in enumerate(features):
            ids = [index[f] for f in feats if f in index]
            if ids:
                scores[t] = self.state_weights[ids].sum(axis=0)
        return scores

    def to_json(self) -> str:
        terms = [None] * len(self.feature_index)
        for feat, idx in self.feature_index.items():
            terms[idx] = feat
        return json.dumps(
            {
                "features": terms,
                "state_weights": self.state_weights.tolist(),
                "transition_weights": self.transition_weights.tolist(),
                "l2": self.l2,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, payload: str) -> "CrfModel":
        doc = json.loads(payload)
        index = {feat: i for i, feat in enumerate(doc["features"])}
        return cls(
            index,
            np.asarray(doc["state_weights"], dtype=np.float64),
            np.asarray(doc["transition_weights"], dtype=np.float64),
            float(doc.get("l2", 0.1)),
        )


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    peak = a.max(axis=axis, keepdims=True)
    out = peak + np.log(np.exp(a - peak).sum(axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _chain_marginals(
    emissions: np.ndarray, transitions: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Forward-backward over a score chain: (logZ, node [T x 9], edge [(T-1) x 9 x 9])."""
    T = emissions.shape[0]
    alpha = np.empty_like(emissions)
    beta = np.empty_like(emissions)
    alpha[0] = emissions[0]
    for t in range(1, T):
        alpha[t] = emissions[t] + _logsumexp(alpha[t - 1][:, None] + transitions, axis=0)
    beta[T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp(transitions + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)
    log_z = float(_logsumexp(alpha[T - 1], axis=0))
    node = np.exp(alpha + beta - log_z)
    if T > 1:
        edge = np.exp(
            alpha[:-1, :, None]
            + transitions[None, :, :]
            + (emissions[1:] + beta[1:])[:, None, :]
            - log_z
        )
    else:
        edge = np.zeros((0, NUM_LABELS, NUM_LABELS))
    return log_z, node, edge


def forward_backward(
    model: CrfModel, features: Sequence[FeatureVector]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log partition function plus node and edge marginals, in log space."""
    if len(features) < 1:
        raise ValueError("need at least one position")
    return _chain_marginals(model.emissions(features), model.transition_weights)


def sequence_score(
    model: CrfModel, features: Sequence[FeatureVector], labels: Sequence[BioLabel]
) -> float:
    """Unnormalized log-score of one label sequence."""
    emissions = model.emissions(features)
    return _path_score(emissions, model.transition_weights, [int(l) for l in labels])


def _path_score(emissions: np.ndarray, transitions: np.ndarray, labels: Sequence[int]) -> float:
    score = float(sum(emissions[t, l] for t, l in enumerate(labels)))
    score += float(sum(transitions[a, b] for a, b in zip(labels, labels[1:])))
    return score


def nll_and_gradient(
    model: CrfModel, features: Sequence[FeatureVector], gold: Sequence[BioLabel]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Per-sequence regularized NLL and its gradient.

    nll = logZ - score(gold) + l2/2 * ||w||^2 over both weight blocks;
    gradient = expected feature counts - empirical counts + l2 * w,
    returned as (nll, state_gradient, transition_gradient).
    """
    if len(gold) != len(features):
        raise ValueError(f"{len(gold)} gold labels for {len(features)} positions")
    emissions = model.emissions(features)
    log_z, node, edge = _chain_marginals(emissions, model.transition_weights)
    labels = [int(l) for l in gold]

    state_grad = model.l2 * model.state_weights.copy()
    trans_grad = model.l2 * model.transition_weights.copy()
    index = model.feature_index
    for t, feats in enumerate(features):
        for feat in feats:
            idx = index.get(feat)
            if idx is None:
                continue
            state_grad[idx] += node[t]
            state_grad[idx, labels[t]] -= 1.0
    if len(labels) > 1:
        trans_grad += edge.sum(axis=0)
        for a, b in zip(labels, labels[1:]):
            trans_grad[a, b] -= 1.0

    reg = 0.5 * model.l2 * (
        float(np.sum(model.state_weights**2)) + float(np.sum(model.transition_weights**2))
    )
    nll = log_z - _path_score(emissions, model.transition_weights, labels) + reg
    return nll, state_grad, trans_grad


def _viterbi(emissions: np.ndarray, transitions: np.ndarray) -> tuple[list[int], float]:
    T = emissions.shape[0]
    delta = emissions[0]
    back = np.zeros((T, NUM_LABELS), dtype=np.int64)
    for t in range(1, T):
        scores = delta[:, None] + transitions
        back[t] = scores.argmax(axis=0)  # argmax picks the lowest index on ties
        delta = emissions[t] + scores.max(axis=0)
    last = int(delta.argmax())
    path = [last]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(delta[last])


def viterbi_decode(
    model: CrfModel, features: Sequence[FeatureVector]
) -> tuple[list[BioLabel], float]:
    """Best label sequence and its unnormalized score; ties resolve to the
    lowest label index."""
    if len(features) < 1:
        raise ValueError("need at least one position")
    path, score = _viterbi(model.emissions(features), model.transition_weights)
    return [BioLabel(p) for p in path], score


TrainingSequence = tuple[Sequence[FeatureVector], Sequence[BioLabel]]


def train_crf(data: Sequence[TrainingSequence], cfg: CrfTrainConfig) -> CrfModel:
    """SGD over sequences with step learning_rate/sqrt(t) for cfg.iterations
    passes; the feature index is built from the training data only."""
    if not data:
        raise ValueError("training data must be non-empty")
    for features, gold in data:
        if len(features) != len(gold) or len(features) == 0:
            raise ValueError("each sequence needs matching, non-empty features/labels")

    index: dict[str, int] = {}
    for features, _ in data:
        for feats in features:
            for feat in feats:
                if feat not in index:
                    index[feat] = len(index)
    num_features = len(index)
    pad = num_features  # scratch row, forced back to zero after every update

    # Pre-encoded per sequence: feature-id matrix [T x width], gold ids,
    # empirical one-hot rows, and gold transition counts.
    encoded = []
    for features, gold in data:
        width = max(len(feats) for feats in features)
        mat = np.full((len(features), width), pad, dtype=np.int64)
        for t, feats in enumerate(features):
            for k, feat in enumerate(feats):
                mat[t, k] = index[feat]
        labels = np.array([int(l) for l in gold], dtype=np.int64)
        onehot = np.zeros((len(labels), NUM_LABELS))
        onehot[np.arange(len(labels)), labels] = 1.0
        bigram = np.zeros((NUM_LABELS, NUM_LABELS))
        np.add.at(bigram, (labels[:-1], labels[1:]), 1.0)
        encoded.append((mat, width, labels, onehot, bigram))

    state = np.zeros((num_features + 1, NUM_LABELS))
    trans = np.zeros((NUM_LABELS, NUM_LABELS))
    rng = np.random.default_rng(cfg.seed)
    step = 0
    for _ in range(cfg.iterations):
        for s in rng.permutation(len(encoded)):
            mat, width, labels, onehot, bigram = encoded[s]
            step += 1
            eta = cfg.learning_rate / math.sqrt(step)
            emissions = state[mat].sum(axis=1)
            _, node, edge = _chain_marginals(emissions, trans)
            if cfg.l2 > 0:
                state *= 1.0 - eta * cfg.l2
                trans *= 1.0 - eta * cfg.l2
            delta = np.repeat(node - onehot, width, axis=0)
            np.add.at(state, mat.ravel(), -eta * delta)
            state[pad] = 0.0
            trans -= eta * (edge.sum(axis=0) - bigram)
    return CrfModel(index, state[:num_features], trans, l2=cfg.l2)


def token_accuracy(model: CrfModel, data: Sequence[TrainingSequence]) -> float:
    """Fraction of positions where Viterbi agrees with gold."""
    correct = total = 0
    for features, gold in data:
        decoded, _ = viterbi_decode(model, features)
        correct += sum(1 for d, g in zip(decoded, gold) if d == g)
        total += len(gold)
    return correct / total if total else 0.0


def tag_tweet(model: CrfModel, text: str) -> list[EntitySpan]:
    """tokenize -> feature extraction -> Viterbi -> spans with exact offsets."""
    tokens = tokenize(text)
    if not tokens:
        return []
    labels, _ = viterbi_decode(model, sequence_features(tokens))
    return bio_to_spans(text, tokens, labels)
