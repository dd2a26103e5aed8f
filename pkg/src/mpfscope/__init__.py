"""mpfscope: signal-level forensics for AI-generated video.

The toolkit analyzes inter-frame residuals of short contiguous segments:
a frame-level gate (sentinel) intercepts obvious forgeries from external
per-frame scores, and a residual-level classifier (microscope) exposes the
structured fluctuations that a frozen generative decoder leaves behind.
A built-in simulator of both residual regimes makes every claim testable
without any video dataset.
"""

from .consistency import (
    ChangeStats,
    ConsistencyScore,
    change_stats,
    consistency_score,
    score_stack,
    stack_stats,
)
from .errors import ConfigError, InputError, MpfScopeError
from .frames import (
    FrameSequence,
    IngestSpec,
    load_frames,
    load_segment,
    sample_segment,
    write_raw,
)
from .microscope import ClassifierModel, classify, featurize, train
from .residual import (
    ResidualStack,
    Strategy,
    compute_residuals,
    residual_change_mask,
    residual_frequency,
    residual_log_scale,
    residual_normalized,
    residual_optical_flow,
)
from .sentinel import GateDecision, LinearHead, aggregate_mean, gate, load_scores, write_scores
from .synthgen import (
    DecoderModel,
    LatentTrajectory,
    PhysicsModel,
    SynthConfig,
    generate_corpus,
    generate_decoder_sequence,
    generate_physics_sequence,
    residual_rank,
)

__version__ = "0.1.0"

__all__ = [
    "ChangeStats",
    "ClassifierModel",
    "ConfigError",
    "ConsistencyScore",
    "DecoderModel",
    "FrameSequence",
    "GateDecision",
    "IngestSpec",
    "InputError",
    "LatentTrajectory",
    "LinearHead",
    "MpfScopeError",
    "PhysicsModel",
    "ResidualStack",
    "Strategy",
    "SynthConfig",
    "aggregate_mean",
    "change_stats",
    "classify",
    "compute_residuals",
    "consistency_score",
    "featurize",
    "gate",
    "generate_corpus",
    "generate_decoder_sequence",
    "generate_physics_sequence",
    "load_frames",
    "load_scores",
    "load_segment",
    "residual_change_mask",
    "residual_frequency",
    "residual_log_scale",
    "residual_normalized",
    "residual_optical_flow",
    "residual_rank",
    "sample_segment",
    "score_stack",
    "stack_stats",
    "train",
    "write_raw",
    "write_scores",
]
