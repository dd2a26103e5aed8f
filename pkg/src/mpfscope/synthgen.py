"""Simulator of the two residual-generation regimes.

The decoder regime projects a slowly drifting latent trajectory through a
frozen random decoder, so every inter-frame residual is a combination of
the same basis patterns. The physics regime renders a static scene under
camera jitter, fresh sensor noise, and sparse object motion, so residuals
are heterogeneous in both space and time. Both emit standard 8-bit frame
sequences; the decoder path also exposes its pre-quantization floats for
rank analysis.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .frames import DEFAULT_FPS, FrameSequence, write_raw

DEFAULT_SHAPE = (64, 64, 3)
DEFAULT_LATENT_DIM = 16
DEFAULT_DRIFT = 0.05
DEFAULT_LENGTH = 8
DEFAULT_COUNT = 200

MANIFEST_NAME = "corpus.json"

# decoder output is rescaled from frame 0 onto this intensity range,
# leaving headroom so later frames rarely clip
_RESCALE_LO = 32.0
_RESCALE_HI = 223.0


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


@dataclass(frozen=True)
class DecoderModel:
    """Frozen decoder mapping an M-dim latent to N = H*W*C pixels.

    nonlinearity "none" gives D(z) = W z + b; "tanh" inserts one hidden
    layer of size M: D(z) = W tanh(Wh z + bh) + b.
    """

    weights: np.ndarray
    bias: np.ndarray
    latent_dim: int
    nonlinearity: str = "none"
    hidden_weights: np.ndarray | None = None
    hidden_bias: np.ndarray | None = None

    def __post_init__(self):
        n, m = self.weights.shape
        if m != self.latent_dim:
            raise ConfigError("weights columns must equal latent_dim",
                              code="synthgen/decoder-shape")
        if m >= n:
            raise ConfigError(
                f"latent_dim {m} must be smaller than output dim {n} "
                "(compressive manifold)",
                code="synthgen/latent-dim",
            )
        if not np.all(np.isfinite(self.weights)):
            raise ConfigError("decoder weights must be finite",
                              code="synthgen/decoder-finite")
        if self.nonlinearity not in ("none", "tanh"):
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}",
                              code="synthgen/nonlinearity")
        if self.nonlinearity == "tanh" and (
            self.hidden_weights is None or self.hidden_bias is None
        ):
            raise ConfigError("tanh decoder needs hidden weights and bias",
                              code="synthgen/hidden")

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def create(cls, shape=DEFAULT_SHAPE, latent_dim=DEFAULT_LATENT_DIM,
               nonlinearity="none", seed=0) -> "DecoderModel":
        """Draw a frozen random decoder for the given frame shape."""
        h, w, c = shape
        n = h * w * c
        rng = _rng(seed)
        weights = rng.standard_normal((n, latent_dim)) / np.sqrt(latent_dim)
        bias = rng.standard_normal(n)
        hidden_w = hidden_b = None
        if nonlinearity == "tanh":
            hidden_w = rng.standard_normal((latent_dim, latent_dim)) / np.sqrt(latent_dim)
            hidden_b = 0.1 * rng.standard_normal(latent_dim)
        return cls(weights=weights, bias=bias, latent_dim=latent_dim,
                   nonlinearity=nonlinearity, hidden_weights=hidden_w,
                   hidden_bias=hidden_b)

    def decode(self, z: np.ndarray) -> np.ndarray:
        """Project one latent vector to a flat pixel vector."""
        if self.nonlinearity == "tanh":
            hidden = np.tanh(self.hidden_weights @ z + self.hidden_bias)
            return self.weights @ hidden + self.bias
        return self.weights @ z + self.bias


@dataclass(frozen=True)
class LatentTrajectory:
    """A smooth latent path: fixed-norm steps of magnitude drift*sqrt(M)."""

    z0: np.ndarray
    drift: float
    steps: int
    seed: int = 0

    def positions(self) -> np.ndarray:
        """(steps, M) latent positions along the walk."""
        m = self.z0.shape[0]
        rng = _rng(self.seed)
        z = np.empty((self.steps, m))
        z[0] = self.z0
        step_norm = self.drift * np.sqrt(m)
        for t in range(1, self.steps):
            direction = rng.standard_normal(m)
            norm = np.linalg.norm(direction)
            if norm == 0 or step_norm == 0:
                z[t] = z[t - 1]
            else:
                z[t] = z[t - 1] + step_norm * direction / norm
        return z

    @classmethod
    def create(cls, latent_dim=DEFAULT_LATENT_DIM, drift=DEFAULT_DRIFT,
               steps=DEFAULT_LENGTH, seed=0) -> "LatentTrajectory":
        rng = _rng(np.random.SeedSequence([0x5EED, _seed_int(seed)]))
        return cls(z0=rng.standard_normal(latent_dim), drift=drift,
                   steps=steps, seed=seed)


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1)[0])
    return int(seed)


# probability per frame that camera shake re-draws the shift; between
# shakes the camera holds position, so shift events are intermittent
SHAKE_PROB = 0.5


@dataclass(frozen=True)
class PhysicsModel:
    """Physical recording parameters: camera jitter, shot noise, motion."""

    jitter_px: int = 1
    shot_noise_sigma: float = 0.3
    motion_prob: float = 0.5
    object_size: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.jitter_px < 0 or self.shot_noise_sigma < 0 or self.object_size < 0:
            raise ConfigError("physics parameters must be non-negative",
                              code="synthgen/physics-params")
        if not 0 <= self.motion_prob <= 1:
            raise ConfigError("motion_prob must be in [0, 1]",
                              code="synthgen/motion-prob")


def base_scene(kind: str, shape=DEFAULT_SHAPE, seed=0) -> np.ndarray:
    """Render a u8 starting scene: random-texture, gradient or checkerboard."""
    h, w, c = shape
    if kind == "random-texture":
        return _rng(seed).integers(0, 256, size=(h, w, c), dtype=np.uint8)
    if kind == "gradient":
        ramp = np.linspace(32, 224, w)
        scene = np.tile(ramp, (h, 1))
        return np.repeat(scene[:, :, None], c, axis=2).astype(np.uint8)
    if kind == "checkerboard":
        yy, xx = np.mgrid[0:h, 0:w]
        board = ((yy // 8 + xx // 8) % 2) * 160 + 48
        return np.repeat(board[:, :, None], c, axis=2).astype(np.uint8)
    raise ConfigError(f"unknown base scene {kind!r}", code="synthgen/base-scene")


def decode_trajectory(model: DecoderModel, traj: LatentTrajectory) -> np.ndarray:
    """Pre-quantization decoder outputs, shape (steps, N) float64."""
    z = traj.positions()
    return np.stack([model.decode(z[t]) for t in range(traj.steps)])


def generate_decoder_sequence(model: DecoderModel, traj: LatentTrajectory,
                              shape=DEFAULT_SHAPE,
                              fps: Fraction = DEFAULT_FPS) -> FrameSequence:
    """Quantized frames of a decoder projection.

    The affine rescale is fitted on frame 0 only and then frozen, so the
    residual structure of later frames is preserved up to u8 rounding.
    """
    h, w, c = shape
    if model.output_dim != h * w * c:
        raise ConfigError(
            f"decoder output dim {model.output_dim} does not match "
            f"shape {shape}",
            code="synthgen/shape-mismatch",
        )
    if traj.z0.shape[0] != model.latent_dim:
        raise ConfigError("trajectory latent dim does not match decoder",
                          code="synthgen/latent-mismatch")
    floats = decode_trajectory(model, traj)
    lo, hi = floats[0].min(), floats[0].max()
    if hi > lo:
        scale = (_RESCALE_HI - _RESCALE_LO) / (hi - lo)
        offset = _RESCALE_LO - scale * lo
    else:
        scale, offset = 1.0, 128.0 - lo
    frames = np.clip(np.round(scale * floats + offset), 0, 255).astype(np.uint8)
    return FrameSequence(frames=frames.reshape(traj.steps, h, w, c), fps=fps,
                         source_id="synthgen:decoder")


def generate_physics_sequence(model: PhysicsModel, shape=DEFAULT_SHAPE,
                              length: int = DEFAULT_LENGTH,
                              scene: str = "random-texture",
                              fps: Fraction = DEFAULT_FPS) -> FrameSequence:
    """Quantized frames of a simulated physical recording.

    Frame 0 is the base scene. Later frames re-render it under camera
    shake (intermittent integer shifts up to jitter_px, wrap padding),
    fresh per-frame Gaussian shot noise, and a sparse bright square that
    appears at a new spot with probability motion_prob. Events are
    intermittent rather than per-frame iid, so residual statistics are
    heterogeneous over time the way handheld footage is.
    """
    h, w, c = shape
    rng = _rng(model.seed)
    scene_arr = base_scene(scene, shape, seed=np.random.SeedSequence(
        [0xBA5E, _seed_int(model.seed)]))
    scene_f = scene_arr.astype(np.float64)

    frames = np.empty((length, h, w, c), dtype=np.uint8)
    frames[0] = scene_arr
    shift = (0, 0)
    for t in range(1, length):
        if model.jitter_px > 0 and rng.random() < SHAKE_PROB:
            shift = (int(rng.integers(-model.jitter_px, model.jitter_px + 1)),
                     int(rng.integers(-model.jitter_px, model.jitter_px + 1)))
        frame = np.roll(scene_f, shift, axis=(0, 1))
        if model.shot_noise_sigma > 0:
            frame = frame + rng.normal(0.0, model.shot_noise_sigma, size=frame.shape)
        if model.object_size > 0 and rng.random() < model.motion_prob:
            oy = int(rng.integers(0, max(h - model.object_size, 1)))
            ox = int(rng.integers(0, max(w - model.object_size, 1)))
            frame[oy:oy + model.object_size, ox:ox + model.object_size] += 80.0
        frames[t] = np.clip(np.round(frame), 0, 255).astype(np.uint8)
    return FrameSequence(frames=frames, fps=fps, source_id="synthgen:physics")


def residual_rank(float_frames: np.ndarray, rel_cutoff: float = 1e-6) -> int:
    """Numerical rank of the stacked inter-frame residual matrix.

    Rows are consecutive-frame differences; singular values below
    rel_cutoff * sigma_max count as zero.
    """
    frames = np.asarray(float_frames, dtype=np.float64)
    if frames.ndim > 2:
        frames = frames.reshape(frames.shape[0], -1)
    residuals = frames[1:] - frames[:-1]
    sv = np.linalg.svd(residuals, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.count_nonzero(sv > rel_cutoff * sv[0]))


@dataclass(frozen=True)
class SynthConfig:
    """One corpus-generation run: regime, geometry, and model parameters."""

    regime: str = "decoder"
    height: int = 64
    width: int = 64
    channels: int = 3
    length: int = DEFAULT_LENGTH
    count: int = DEFAULT_COUNT
    seed: int = 0
    scene: str = "random-texture"
    # decoder regime
    latent_dim: int = DEFAULT_LATENT_DIM
    drift: float = DEFAULT_DRIFT
    nonlinearity: str = "none"
    # physics regime
    jitter_px: int = 1
    shot_noise_sigma: float = 0.3
    motion_prob: float = 0.5
    object_size: int = 10

    def __post_init__(self):
        if self.regime not in ("decoder", "physics"):
            raise ConfigError(f"unknown regime {self.regime!r}",
                              code="synthgen/regime")
        if self.count < 1:
            raise ConfigError("count must be >= 1", code="synthgen/count")
        if min(self.height, self.width, self.channels, self.length) < 1:
            raise ConfigError("shape and length must be positive",
                              code="synthgen/shape")

    @property
    def shape(self):
        return (self.height, self.width, self.channels)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def generate_sequence(cfg: SynthConfig, index: int) -> FrameSequence:
    """Sequence number `index` of a corpus; reproducible from (cfg, index)."""
    root = np.random.SeedSequence([cfg.seed, index])
    if cfg.regime == "decoder":
        model_seed, path_seed = root.spawn(2)
        model = DecoderModel.create(cfg.shape, latent_dim=cfg.latent_dim,
                                    nonlinearity=cfg.nonlinearity, seed=model_seed)
        traj = LatentTrajectory.create(latent_dim=cfg.latent_dim, drift=cfg.drift,
                                       steps=cfg.length, seed=path_seed)
        return generate_decoder_sequence(model, traj, cfg.shape)
    model = PhysicsModel(jitter_px=cfg.jitter_px,
                         shot_noise_sigma=cfg.shot_noise_sigma,
                         motion_prob=cfg.motion_prob,
                         object_size=cfg.object_size, seed=root)
    return generate_physics_sequence(model, cfg.shape, length=cfg.length,
                                     scene=cfg.scene)


def generate_corpus(cfg: SynthConfig, out_dir) -> Path:
    """Write `count` sequences as .mpfraw plus a labeled manifest.

    Returns the manifest path. The manifest carries ground-truth labels
    (decoder = 1 / AI, physics = 0 / real) and is byte-reproducible from
    (cfg, seed).
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create corpus directory {out_dir}: {exc}",
                         code="synthgen/out-dir") from exc

    label = 1 if cfg.regime == "decoder" else 0
    entries = []
    for i in range(cfg.count):
        seq = generate_sequence(cfg, i)
        name = f"{cfg.regime}_{i:05d}.mpfraw"
        write_raw(out_dir / name, seq.frames, fps=seq.fps)
        entries.append({
            "file": name,
            "regime": cfg.regime,
            "label": label,
            "seed": [cfg.seed, i],
        })
    manifest = {
        "version": 1,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "sequences": entries,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_manifest(path) -> dict:
    """Read a corpus manifest written by generate_corpus."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise InputError(f"no corpus manifest at {path}", code="synthgen/manifest")
    return json.loads(path.read_text())
