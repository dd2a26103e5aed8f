"""Branch I: the frame-level gate over externally computed scores.

Per-frame logits (or embeddings plus a linear head) arrive through the
binary ScoreFile interchange format, are aggregated by mean, and compared
against the threshold tau. Scores above tau terminate the pipeline as
AI-generated; everything else routes onward to the residual microscope.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError

SCORE_MAGIC = b"MPFS"
SCORE_VERSION = 1
KIND_LOGITS = 0
KIND_EMBEDDINGS = 1
_KIND_NAMES = {KIND_LOGITS: "logits", KIND_EMBEDDINGS: "embeddings"}

# magic[4] | version u16 | num_frames u32 | dim u32 | kind u8, little-endian
_SCORE_HEADER = struct.Struct("<4sHIIB")

DEFAULT_TAU = 0.0
# constant logit of the null scorer; routes every video to Branch II
NULL_SCORE = -1e9

VERDICT_OFF_MANIFOLD = "OffManifold"
VERDICT_ON_MANIFOLD = "OnManifold"


class ScoreFileError(InputError):
    code = "sentinel/score-file"


@dataclass(frozen=True)
class ScoreFile:
    """Parsed per-frame score matrix: (num_frames, dim) float32."""

    values: np.ndarray
    kind: int

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES[self.kind]


@dataclass(frozen=True)
class LinearHead:
    """Projection from embedding space to a single logit."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ConfigError("linear head must be finite", code="sentinel/head")

    def apply(self, embeddings: np.ndarray) -> np.ndarray:
        if embeddings.shape[1] != self.weights.shape[0]:
            raise ConfigError(
                f"head dim {self.weights.shape[0]} does not match "
                f"embedding dim {embeddings.shape[1]}",
                code="sentinel/head-dim",
            )
        return embeddings @ self.weights + self.bias

    @classmethod
    def load(cls, path) -> "LinearHead":
        data = json.loads(Path(path).read_text())
        return cls(weights=np.asarray(data["weights"], dtype=np.float64),
                   bias=float(data.get("bias", 0.0)))


@dataclass(frozen=True)
class GateDecision:
    """Outcome of the tau comparison. OffManifold means AI, terminate."""

    s_agg: float
    tau: float
    verdict: str


def write_scores(path, values: np.ndarray, kind: int) -> None:
    """Serialize a (num_frames, dim) float matrix as a ScoreFile."""
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise ConfigError(f"scores must be 1-D or 2-D, got shape {values.shape}",
                          code="sentinel/score-shape")
    if kind not in _KIND_NAMES:
        raise ConfigError(f"kind must be 0 (logits) or 1 (embeddings), got {kind}",
                          code="sentinel/kind")
    if not np.all(np.isfinite(values)):
        raise ConfigError("scores must be finite", code="sentinel/score-finite")
    n, dim = values.shape
    with open(path, "wb") as fh:
        fh.write(_SCORE_HEADER.pack(SCORE_MAGIC, SCORE_VERSION, n, dim, kind))
        fh.write(values.tobytes())


def load_scores(path) -> ScoreFile:
    """Parse and validate a ScoreFile from disk."""
    path = Path(path)
    if not path.is_file():
        raise ScoreFileError(f"no such score file: {path}")
    blob = path.read_bytes()
    if len(blob) < _SCORE_HEADER.size:
        raise ScoreFileError(f"{path.name}: truncated header ({len(blob)} bytes)")
    magic, version, n, dim, kind = _SCORE_HEADER.unpack_from(blob)
    if magic != SCORE_MAGIC:
        raise ScoreFileError(f"{path.name}: bad magic {magic!r}, expected {SCORE_MAGIC!r}")
    if version != SCORE_VERSION:
        raise ScoreFileError(f"{path.name}: unsupported version {version}")
    if kind not in _KIND_NAMES:
        raise ScoreFileError(f"{path.name}: unknown kind {kind}")
    expected = _SCORE_HEADER.size + n * dim * 4
    if len(blob) != expected:
        raise ScoreFileError(
            f"{path.name}: payload size mismatch, expected {expected} bytes "
            f"({n} frames x {dim} dims), got {len(blob)}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=_SCORE_HEADER.size)
    values = values.reshape(n, dim)
    if not np.all(np.isfinite(values)):
        raise ScoreFileError(f"{path.name}: non-finite values in payload")
    return ScoreFile(values=values, kind=kind)


def frame_logits(scores: ScoreFile, head: LinearHead | None = None) -> np.ndarray:
    """Reduce a ScoreFile to one logit per frame.

    kind=logits requires dim 1; kind=embeddings requires a linear head.
    """
    if scores.kind == KIND_LOGITS:
        if scores.dim != 1:
            raise ScoreFileError(
                f"logit score files must have dim 1, got {scores.dim}"
            )
        return scores.values[:, 0].astype(np.float64)
    if head is None:
        raise ConfigError("embedding score files need a linear head",
                          code="sentinel/head-missing")
    return head.apply(scores.values.astype(np.float64))


def null_scores(num_frames: int) -> np.ndarray:
    """Constant all-pass logits routing every video to Branch II."""
    return np.full(num_frames, NULL_SCORE)


def aggregate_mean(logits) -> float:
    """Mean-Logits aggregation over the segment."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ConfigError("cannot aggregate an empty score list",
                          code="sentinel/empty")
    return float(logits.mean())


# Aggregation registry; the mean is the one defined strategy, others can
# be added without touching the gate.
AGGREGATORS = {"mean": aggregate_mean}


def gate(s_agg: float, tau: float = DEFAULT_TAU) -> GateDecision:
    """Route by threshold: s_agg > tau is off-manifold (AI, terminate);
    s_agg <= tau, ties included, routes on to Branch II."""
    verdict = VERDICT_OFF_MANIFOLD if s_agg > tau else VERDICT_ON_MANIFOLD
    return GateDecision(s_agg=float(s_agg), tau=float(tau), verdict=verdict)
