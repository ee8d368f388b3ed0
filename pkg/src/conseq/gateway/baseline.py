"""Natively trainable title classifier: logistic regression over lowercased
word-unigram counts, trained by deterministic SGD.

This is the cheap first-stage relevance filter. It is pluggable with the
remote classifier in http.py; both expose predict(title) -> probability.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DegenerateDataset

EPOCHS = 50
LEARNING_RATE = 0.1
L2 = 1e-4

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def _tokenize(title: str) -> list[str]:
    return _TOKEN_RE.findall(title.lower())


def _sigmoid(z: float) -> float:
    z = max(-30.0, min(30.0, z))
    return 1.0 / (1.0 + math.exp(-z))


@dataclass(frozen=True)
class TitleClassifierModel:
    vocabulary: dict[str, int]
    weights: np.ndarray  # length |vocabulary| + 1; last entry is the bias
    trained_on: str
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.vocabulary:
            raise ValueError("vocabulary must be non-empty")
        if len(self.weights) != len(self.vocabulary) + 1:
            raise ValueError("weights length must be |vocabulary| + 1")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")

    def predict(self, title: str) -> float:
        return predict_title(self, title)


def _dataset_fingerprint(labeled: Sequence[tuple[str, bool]], seed: int) -> str:
    h = hashlib.sha256()
    h.update(str(seed).encode())
    for title, label in labeled:
        h.update(b"\x00")
        h.update(title.encode("utf-8"))
        h.update(b"\x01" if label else b"\x02")
    return h.hexdigest()


def train_title_baseline(
    labeled: Sequence[tuple[str, bool]], seed: int = 0
) -> TitleClassifierModel:
    """Train the baseline on (title, relevant?) pairs.

    Deterministic for a fixed seed: fixed epoch count, fixed learning rate,
    L2 regularization on everything but the bias, per-epoch seeded
    shuffling. Raises DegenerateDataset unless both classes appear at
    least twice.
    """
    n_pos = sum(1 for _, y in labeled if y)
    n_neg = len(labeled) - n_pos
    if n_pos < 2 or n_neg < 2:
        raise DegenerateDataset(
            f"need >= 2 examples per class, got {n_pos} relevant / {n_neg} irrelevant"
        )

    vocab_tokens = sorted({t for title, _ in labeled for t in _tokenize(title)})
    if not vocab_tokens:
        raise DegenerateDataset("no word tokens in any title")
    vocabulary = {tok: i for i, tok in enumerate(vocab_tokens)}
    dim = len(vocabulary) + 1

    # Dense count matrix with a constant bias column at the end.
    x = np.zeros((len(labeled), dim), dtype=np.float64)
    y = np.zeros(len(labeled), dtype=np.float64)
    for row, (title, label) in enumerate(labeled):
        for tok in _tokenize(title):
            x[row, vocabulary[tok]] += 1.0
        x[row, dim - 1] = 1.0
        y[row] = 1.0 if label else 0.0

    rng = np.random.default_rng(seed)
    w = np.zeros(dim, dtype=np.float64)
    reg_mask = np.ones(dim, dtype=np.float64)
    reg_mask[dim - 1] = 0.0  # bias is not regularized

    losses = []
    for _ in range(EPOCHS):
        order = rng.permutation(len(labeled))
        for i in order:
            z = float(x[i] @ w)
            p = _sigmoid(z)
            grad = (p - y[i]) * x[i] + L2 * reg_mask * w
            w -= LEARNING_RATE * grad
        losses.append(_mean_loss(x, y, w))

    return TitleClassifierModel(
        vocabulary=vocabulary,
        weights=w,
        trained_on=_dataset_fingerprint(labeled, seed),
        loss_history=tuple(losses),
    )


def _mean_loss(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    z = np.clip(x @ w, -30.0, 30.0)
    p = 1.0 / (1.0 + np.exp(-z))
    eps = 1e-12
    ll = y * np.log(p + eps) + (1.0 - y) * np.log(1.0 - p + eps)
    return float(-np.mean(ll) + 0.5 * L2 * float(w[:-1] @ w[:-1]))


def save_model(model: TitleClassifierModel, path) -> None:
    payload = {
        "vocabulary": model.vocabulary,
        "weights": [float(w) for w in model.weights],
        "trained_on": model.trained_on,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> TitleClassifierModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return TitleClassifierModel(
        vocabulary=payload["vocabulary"],
        weights=np.asarray(payload["weights"], dtype=np.float64),
        trained_on=payload["trained_on"],
    )


def predict_title(model: TitleClassifierModel, title: str) -> float:
    """Probability the title signals an undesirable-consequence article.

    Unknown tokens contribute zero, so an all-unknown title scores
    sigmoid(bias).
    """
    z = float(model.weights[-1])
    for tok in _tokenize(title):
        idx = model.vocabulary.get(tok)
        if idx is not None:
            z += float(model.weights[idx])
    return _sigmoid(z)
