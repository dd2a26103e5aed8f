"""Branch II: residual featurization and the trainable linear classifier.

Each residual map is summarized by its change statistics plus mean, std,
and histogram entropy; the per-map descriptors are concatenated in
temporal order into one vector per sequence. A logistic regression with
frozen feature normalization turns that vector into an AI/Real verdict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .consistency import change_stats
from .errors import ConfigError, InputError
from .residual import DEFAULT_MASK_THRESHOLD, ResidualStack
from .sentinel import KIND_EMBEDDINGS, ScoreFile

# per-residual descriptor: 6 change statistics + mean, std, entropy
FEATURES_PER_RESIDUAL = 9

VERDICT_AI = "AI"
VERDICT_REAL = "Real"

DEFAULT_EPOCHS = 300
DEFAULT_LR = 0.1
LOSS_DELTA_STOP = 1e-7
_STD_EPS = 1e-12


def map_entropy(residual_map: np.ndarray) -> float:
    """Shannon entropy (bits) of the 256-bin histogram of the map quantized
    to u8. Ranges over [0, 8]; constant maps give 0."""
    q = np.clip(np.round(np.asarray(residual_map, dtype=np.float64)), 0, 255)
    counts = np.bincount(q.astype(np.uint8).ravel(), minlength=256)
    p = counts[counts > 0] / q.size
    return float(-(p * np.log2(p)).sum())


def featurize(stack: ResidualStack,
              mask_threshold: float = DEFAULT_MASK_THRESHOLD) -> np.ndarray:
    """Concatenated per-residual descriptors, temporal order, shape
    ((L-1) * FEATURES_PER_RESIDUAL,)."""
    parts = []
    for m in stack.maps:
        stats = change_stats(m, mask_threshold=mask_threshold)
        parts.append(np.concatenate([
            stats.as_array(),
            [float(m.mean()), float(m.std()), map_entropy(m)],
        ]))
    return np.concatenate(parts)


def features_from_scores(scores: ScoreFile) -> np.ndarray:
    """Alternative featurizer: an embeddings ScoreFile with one row per
    residual map, flattened in temporal order. Lets an external backbone
    stand in for the built-in change statistics."""
    if scores.kind != KIND_EMBEDDINGS:
        raise ConfigError("alternative featurizer needs kind=embeddings",
                          code="microscope/score-kind")
    return scores.values.astype(np.float64).ravel()


@dataclass(frozen=True)
class ClassifierModel:
    """Logistic-regression weights plus frozen feature normalization.

    Dimensions whose training std collapsed are dropped: their normalizer
    is forced to 1 and their weight to 0, and the indices are recorded.
    """

    weights: np.ndarray
    bias: float
    norm_mean: np.ndarray
    norm_std: np.ndarray
    dropped_dims: tuple[int, ...] = ()

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.norm_mean) / self.norm_std

    def decision(self, x: np.ndarray) -> float:
        return float(self.normalize(np.asarray(x, dtype=np.float64))
                     @ self.weights + self.bias)

    def save(self, path) -> None:
        # floats are written with 17 significant digits so reloading
        # reproduces every value bit-exactly
        def arr(values):
            return "[" + ", ".join(f"{v:.17g}" for v in values) + "]"

        text = (
            "{\n"
            f'  "bias": {self.bias:.17g},\n'
            f'  "dropped_dims": {json.dumps(list(self.dropped_dims))},\n'
            f'  "norm_mean": {arr(self.norm_mean)},\n'
            f'  "norm_std": {arr(self.norm_std)},\n'
            f'  "weights": {arr(self.weights)}\n'
            "}\n"
        )
        Path(path).write_text(text)

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        path = Path(path)
        if not path.is_file():
            raise InputError(f"no such model file: {path}", code="microscope/model")
        data = json.loads(path.read_text())
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            norm_mean=np.asarray(data["norm_mean"], dtype=np.float64),
            norm_std=np.asarray(data["norm_std"], dtype=np.float64),
            dropped_dims=tuple(data.get("dropped_dims", [])),
        )


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cross_entropy_loss(weights, bias, x, y):
    """Mean binary cross-entropy of the logistic model on (x, y)."""
    p = _sigmoid(x @ weights + bias)
    eps = 1e-12
    return float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))


def loss_gradient(weights, bias, x, y):
    """Analytic gradient of cross_entropy_loss wrt (weights, bias)."""
    p = _sigmoid(x @ weights + bias)
    err = p - y
    return x.T @ err / len(y), float(err.mean())


@dataclass(frozen=True)
class TrainResult:
    model: ClassifierModel
    final_loss: float
    epochs_run: int
    loss_history: tuple[float, ...]


def train(features: np.ndarray, labels: np.ndarray,
          epochs: int = DEFAULT_EPOCHS, lr: float = DEFAULT_LR,
          seed: int = 0) -> TrainResult:
    """Fit the classifier by full-batch gradient descent on cross-entropy.

    The learning rate halves whenever a step would increase the loss (the
    step is rejected), so the accepted-loss curve is non-increasing.
    Stops early once the loss improvement drops below 1e-7.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ConfigError(f"features {x.shape} and labels {y.shape} disagree",
                          code="microscope/shapes")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ConfigError("training corpus contains a single class",
                          code="microscope/single-class")
    if counts.min() < 2:
        raise ConfigError("need at least 2 examples per class",
                          code="microscope/class-count")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    dropped = np.flatnonzero(std <= _STD_EPS)
    std_safe = std.copy()
    std_safe[dropped] = 1.0
    xn = (x - mean) / std_safe

    rng = np.random.default_rng(seed)
    w = 0.01 * rng.standard_normal(x.shape[1])
    w[dropped] = 0.0
    b = 0.0

    loss = cross_entropy_loss(w, b, xn, y)
    history = [loss]
    epochs_run = 0
    for _ in range(epochs):
        grad_w, grad_b = loss_gradient(w, b, xn, y)
        grad_w[dropped] = 0.0
        accepted = False
        while lr >= 1e-12:
            w_new = w - lr * grad_w
            b_new = b - lr * grad_b
            new_loss = cross_entropy_loss(w_new, b_new, xn, y)
            if new_loss <= loss:
                accepted = True
                break
            lr *= 0.5
        if not accepted:
            break
        w, b = w_new, b_new
        epochs_run += 1
        improvement = loss - new_loss
        loss = new_loss
        history.append(loss)
        if improvement < LOSS_DELTA_STOP:
            break

    model = ClassifierModel(weights=w, bias=b, norm_mean=mean,
                            norm_std=std_safe,
                            dropped_dims=tuple(int(i) for i in dropped))
    return TrainResult(model=model, final_loss=loss, epochs_run=epochs_run,
                       loss_history=tuple(history))


@dataclass(frozen=True)
class Classification:
    verdict: str
    probability: float


def classify(model: ClassifierModel, feature_vector: np.ndarray) -> Classification:
    """Sigmoid probability of the AI class; ties at 0.5 count as Real."""
    x = np.asarray(feature_vector, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ConfigError(
            f"feature vector dim {x.shape} does not match model "
            f"{model.weights.shape}",
            code="microscope/feature-dim",
        )
    z = np.array([model.decision(x)])
    probability = float(_sigmoid(z)[0])
    verdict = VERDICT_AI if probability > 0.5 else VERDICT_REAL
    return Classification(verdict=verdict, probability=probability)
