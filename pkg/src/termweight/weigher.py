"""A trainable, hand-featured stand-in for a contextual term weigher.

Per-term features are linearly combined into an importance score; the
weights are fit by full-batch gradient descent on a summed squared error.
An oracle weigher that replays ground-truth targets is included as the
upper bound for the rest of the pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from termweight.errors import EngineError, TrainingDivergedError
from termweight.targets import TermTargets, WeightRecord

FEATURE_DIM = 6

# Layout: [0] log(1+tf in owner), [1] log((N+1)/(df+1)), [2] normalized
# first-occurrence position, [3] term length / 20 capped at 1,
# [4] 1 if term in title, [5] bias.


@dataclass
class FeatureVector:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise EngineError("feature vector must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise EngineError("feature vector contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class LinearModel:
    w: np.ndarray
    b: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.feature_means = np.asarray(self.feature_means, dtype=np.float64)
        self.feature_stds = np.asarray(self.feature_stds, dtype=np.float64)

    @classmethod
    def plain(cls, w: Sequence[float], b: float) -> "LinearModel":
        """Model with identity standardization, for direct feature spaces."""
        w = np.asarray(w, dtype=np.float64)
        return cls(w=w, b=b, feature_means=np.zeros_like(w), feature_stds=np.ones_like(w))

    def standardize(self, f: FeatureVector) -> FeatureVector:
        return FeatureVector((f.values - self.feature_means) / self.feature_stds)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 200
    seed: int = 13
    subsample_fraction: float = 1.0


def extract_features(
    terms: Sequence[str],
    title_terms: frozenset[str] | set[str],
    df: Mapping[str, int],
    doc_count: int,
) -> dict[str, FeatureVector]:
    """Features for every distinct term of one owner (document or query)."""
    tf: dict[str, int] = {}
    first_pos: dict[str, int] = {}
    for pos, term in enumerate(terms):
        tf[term] = tf.get(term, 0) + 1
        first_pos.setdefault(term, pos)
    span = max(1, len(terms) - 1)
    out: dict[str, FeatureVector] = {}
    for term, count in tf.items():
        out[term] = FeatureVector(
            np.array(
                [
                    math.log1p(count),
                    math.log((doc_count + 1) / (df.get(term, 0) + 1)),
                    first_pos[term] / span,
                    min(len(term) / 20.0, 1.0),
                    1.0 if term in title_terms else 0.0,
                    1.0,
                ]
            )
        )
    return out


def predict(model: LinearModel, f: FeatureVector) -> float:
    """w . f + b, in the model's feature space."""
    if len(model.w) != len(f):
        raise EngineError(f"dimension mismatch: model {len(model.w)}, features {len(f)}")
    return float(np.dot(model.w, f.values) + model.b)


def predict_raw(model: LinearModel, f: FeatureVector) -> float:
    """Standardize raw features with the model's stored stats, then predict."""
    return predict(model, model.standardize(f))


def _as_matrix(batch: Sequence[tuple[FeatureVector, float]]) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([f.values for f, _ in batch])
    y = np.array([t for _, t in batch], dtype=np.float64)
    return X, y


def mse_loss(model: LinearModel, batch: Sequence[tuple[FeatureVector, float]]) -> float:
    """Summed squared error over the batch."""
    if not batch:
        raise EngineError("mse_loss requires a non-empty batch")
    X, y = _as_matrix(batch)
    if X.shape[1] != len(model.w):
        raise EngineError(f"dimension mismatch: model {len(model.w)}, features {X.shape[1]}")
    r = y - (X @ model.w + model.b)
    return float(r @ r)


def gradient(model: LinearModel, batch: Sequence[tuple[FeatureVector, float]]) -> tuple[np.ndarray, float]:
    """Analytic gradient of the summed squared error w.r.t. (w, b)."""
    if not batch:
        raise EngineError("gradient requires a non-empty batch")
    X, y = _as_matrix(batch)
    if X.shape[1] != len(model.w):
        raise EngineError(f"dimension mismatch: model {len(model.w)}, features {X.shape[1]}")
    grad_w, grad_b = _gradient_arrays(model.w, model.b, X, y)
    return grad_w, grad_b


def _gradient_arrays(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    r = y - (X @ w + b)
    return -2.0 * (X.T @ r), float(-2.0 * r.sum())


def train(
    examples: Sequence[tuple[FeatureVector, float]],
    config: TrainConfig | None = None,
) -> LinearModel:
    """Full-batch gradient descent; deterministic for a fixed seed.

    Features are z-scored on the (subsampled) training set and the stats are
    stored in the model; constant features center to zero. Initialization is
    w=0, b=mean(targets).
    """
    config = config or TrainConfig()
    if not examples:
        raise EngineError("train requires at least one example")
    if config.learning_rate <= 0:
        raise EngineError(f"learning_rate must be > 0, got {config.learning_rate}")
    if not 0 < config.subsample_fraction <= 1:
        raise EngineError(f"subsample_fraction must be in (0, 1], got {config.subsample_fraction}")

    X, y = _as_matrix(examples)
    n = len(examples)
    if config.subsample_fraction < 1.0:
        k = max(1, round(n * config.subsample_fraction))
        rng = np.random.default_rng(config.seed)
        idx = np.sort(rng.choice(n, size=k, replace=False))
        X, y = X[idx], y[idx]

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    Xz = (X - means) / stds

    w = np.zeros(X.shape[1])
    b = float(y.mean())
    # Divergence surfaces as inf/nan loss and is reported with its epoch.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            r = y - (Xz @ w + b)
            loss = float(r @ r)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch)
            grad_w, grad_b = _gradient_arrays(w, b, Xz, y)
            w = w - config.learning_rate * grad_w
            b = b - config.learning_rate * grad_b

        final = y - (Xz @ w + b)
        final_loss = float(final @ final)
    if not math.isfinite(final_loss):
        raise TrainingDivergedError(config.epochs)

    return LinearModel(
        w=w,
        b=b,
        feature_means=means,
        feature_stds=stds,
        training_meta={
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "seed": config.seed,
            "subsample_fraction": config.subsample_fraction,
            "examples_used": int(len(y)),
            "final_loss": final_loss,
        },
    )


def oracle_weigher(targets: Iterable[TermTargets]) -> Iterator[WeightRecord]:
    """Replay ground-truth targets as predicted weights (the upper bound)."""
    for t in targets:
        yield WeightRecord(t.owner_id, dict(t.weights))


def save_model(model: LinearModel, path: str) -> None:
    payload = {
        "w": model.w.tolist(),
        "b": model.b,
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "meta": model.training_meta,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_model(path: str) -> LinearModel:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    try:
        return LinearModel(
            w=payload["w"],
            b=float(payload["b"]),
            feature_means=payload["feature_means"],
            feature_stds=payload["feature_stds"],
            training_meta=payload.get("meta", {}),
        )
    except KeyError as exc:
        raise EngineError(f"{path}: model file missing field {exc}") from exc
