"""Inter-frame residual extraction and signal-enhancement strategies.

Five strategies turn raw frame differences into forensic maps: clamped
normalization, binary change masks, log scaling, centered log-magnitude
spectra, and block-matching optical-flow magnitude. Maps stay float32 in
[0, 255]; only the PNG export path quantizes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .frames import FrameSequence

DEFAULT_ALPHA = 10.0
DEFAULT_MASK_THRESHOLD = 5.0
DEFAULT_FLOW_BLOCK = 8
DEFAULT_FLOW_RADIUS = 4

# Rec.601 luma weights, used by the frequency strategy
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)

# Incremented once per residual map computed; the pipeline tests use this
# to prove the stage-1 short circuit never touches residual math.
map_compute_count = 0


class Strategy(str, Enum):
    NORMALIZED = "normalized"
    CHANGE_MASK = "mask"
    LOG_SCALE = "log"
    FREQUENCY = "freq"
    OPTICAL_FLOW = "flow"


@dataclass(frozen=True)
class ResidualStack:
    """L-1 enhanced residual maps plus the strategy that produced them.

    ``maps`` has shape (L-1, H, W, C) for per-channel strategies or
    (L-1, H, W) for scalar ones; values are float32 in [0, 255].
    """

    maps: np.ndarray
    strategy: Strategy
    alpha: float = 1.0

    def __len__(self):
        return self.maps.shape[0]


def _count_maps(n):
    global map_compute_count
    map_compute_count += n


def _check_sequence(seq: FrameSequence):
    if len(seq) < 2:
        raise ConfigError(
            f"need at least 2 frames for residuals, got {len(seq)}",
            code="residual/too-short",
        )


def _diffs(seq: FrameSequence) -> np.ndarray:
    """Signed frame differences (L-1, H, W, C) as float32."""
    f = seq.frames.astype(np.float32)
    return f[1:] - f[:-1]


def residual_normalized(seq: FrameSequence, alpha: float = DEFAULT_ALPHA) -> ResidualStack:
    """Clamp(alpha * |I_{t+1} - I_t|, 0, 255) per pixel per channel."""
    _check_sequence(seq)
    if alpha <= 0:
        raise ConfigError(f"alpha must be > 0, got {alpha}", code="residual/alpha")
    maps = np.clip(alpha * np.abs(_diffs(seq)), 0.0, 255.0).astype(np.float32)
    _count_maps(maps.shape[0])
    return ResidualStack(maps=maps, strategy=Strategy.NORMALIZED, alpha=float(alpha))


def residual_change_mask(seq: FrameSequence,
                         threshold: float = DEFAULT_MASK_THRESHOLD) -> ResidualStack:
    """Binary mask: 255 where the channel-max |difference| exceeds threshold."""
    _check_sequence(seq)
    if not 0 <= threshold <= 255:
        raise ConfigError(
            f"threshold must be in [0, 255], got {threshold}", code="residual/threshold"
        )
    peak = np.abs(_diffs(seq)).max(axis=3)
    maps = np.where(peak > threshold, np.float32(255.0), np.float32(0.0))
    _count_maps(maps.shape[0])
    return ResidualStack(maps=maps, strategy=Strategy.CHANGE_MASK)


def residual_log_scale(seq: FrameSequence) -> ResidualStack:
    """255 * ln(1 + |diff|) / ln(256), balancing micro and macro changes."""
    _check_sequence(seq)
    maps = (255.0 / math.log(256.0)) * np.log1p(np.abs(_diffs(seq)))
    maps = maps.astype(np.float32)
    _count_maps(maps.shape[0])
    return ResidualStack(maps=maps, strategy=Strategy.LOG_SCALE)


def _luma(frames: np.ndarray) -> np.ndarray:
    return frames.astype(np.float64) @ _LUMA


def residual_frequency(seq: FrameSequence) -> ResidualStack:
    """Centered log-magnitude spectrum of the luma difference, per map min-max
    scaled to [0, 255]. An all-zero difference yields an all-zero map."""
    _check_sequence(seq)
    luma = _luma(seq.frames)
    diffs = luma[1:] - luma[:-1]
    out = np.zeros(diffs.shape, dtype=np.float32)
    for i, d in enumerate(diffs):
        spectrum = np.fft.fftshift(np.fft.fft2(d))
        mag = np.log1p(np.abs(spectrum))
        lo, hi = mag.min(), mag.max()
        if hi - lo > 0:
            out[i] = (255.0 * (mag - lo) / (hi - lo)).astype(np.float32)
    _count_maps(out.shape[0])
    return ResidualStack(maps=out, strategy=Strategy.FREQUENCY)


def _block_flow(prev: np.ndarray, curr: np.ndarray, block: int,
                radius: int) -> np.ndarray:
    """Per-block displacement magnitude via exhaustive SAD search.

    Candidate windows that leave the frame are skipped; ties keep the
    earliest candidate, starting from zero displacement, so static content
    reports zero flow.
    """
    h, w = prev.shape
    ny = (h + block - 1) // block
    nx = (w + block - 1) // block
    mags = np.zeros((ny, nx), dtype=np.float32)
    if radius == 0:
        return mags
    displacements = [(0, 0)] + [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if (dy, dx) != (0, 0)
    ]
    for by in range(ny):
        for bx in range(nx):
            y0, x0 = by * block, bx * block
            y1, x1 = min(y0 + block, h), min(x0 + block, w)
            ref = prev[y0:y1, x0:x1]
            best_cost = None
            best = (0, 0)
            for dy, dx in displacements:
                sy0, sx0 = y0 + dy, x0 + dx
                sy1, sx1 = y1 + dy, x1 + dx
                if sy0 < 0 or sx0 < 0 or sy1 > h or sx1 > w:
                    continue
                cost = np.abs(ref - curr[sy0:sy1, sx0:sx1]).sum()
                if best_cost is None or cost < best_cost:
                    best_cost = cost
                    best = (dy, dx)
            mags[by, bx] = math.hypot(best[0], best[1])
    return mags


def residual_optical_flow(seq: FrameSequence, block: int = DEFAULT_FLOW_BLOCK,
                          radius: int = DEFAULT_FLOW_RADIUS) -> ResidualStack:
    """Block-matching flow magnitude, nearest-neighbor upsampled to HxW and
    scaled so a displacement of radius*sqrt(2) maps to 255."""
    _check_sequence(seq)
    if block < 1:
        raise ConfigError(f"block must be >= 1, got {block}", code="residual/block")
    if radius < 0:
        raise ConfigError(f"radius must be >= 0, got {radius}", code="residual/radius")
    h, w = seq.frames.shape[1:3]
    luma = _luma(seq.frames)
    n = len(seq) - 1
    out = np.zeros((n, h, w), dtype=np.float32)
    if radius > 0:
        scale = 255.0 / (radius * math.sqrt(2.0))
        for i in range(n):
            mags = _block_flow(luma[i], luma[i + 1], block, radius)
            full = np.repeat(np.repeat(mags, block, axis=0), block, axis=1)
            out[i] = np.minimum(scale * full[:h, :w], 255.0)
    _count_maps(n)
    return ResidualStack(maps=out, strategy=Strategy.OPTICAL_FLOW)


_STRATEGY_FUNCS = {
    Strategy.NORMALIZED: residual_normalized,
    Strategy.CHANGE_MASK: residual_change_mask,
    Strategy.LOG_SCALE: residual_log_scale,
    Strategy.FREQUENCY: residual_frequency,
    Strategy.OPTICAL_FLOW: residual_optical_flow,
}


def compute_residuals(seq: FrameSequence, strategy: Strategy | str,
                      **kwargs) -> ResidualStack:
    """Dispatch to one of the five enhancement strategies by name."""
    strategy = Strategy(strategy)
    return _STRATEGY_FUNCS[strategy](seq, **kwargs)


# PNG export quantizes [0, 255] floats to the full u16 range.
_PNG16_SCALE = 65535.0 / 255.0
MANIFEST_NAME = "residuals.json"


def write_stack(stack: ResidualStack, out_dir) -> Path:
    """Write maps as 16-bit PNGs plus a JSON manifest; returns manifest path."""
    import cv2

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, m in enumerate(stack.maps):
        q = np.round(m.astype(np.float64) * _PNG16_SCALE).astype(np.uint16)
        if q.ndim == 3:  # cv2 writes BGR
            q = q[:, :, ::-1]
        path = out_dir / f"residual_{i:04d}.png"
        if not cv2.imwrite(str(path), q):
            raise InputError(f"cannot write {path}", code="residual/write")
    manifest = {
        "strategy": stack.strategy.value,
        "alpha": stack.alpha,
        "count": int(stack.maps.shape[0]),
        "shape": [int(s) for s in stack.maps.shape[1:]],
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def read_stack(manifest_path) -> ResidualStack:
    """Load a residual stack previously written by write_stack."""
    import cv2

    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    if not manifest_path.is_file():
        raise InputError(f"no residual manifest at {manifest_path}",
                         code="residual/manifest")
    manifest = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    maps = []
    for i in range(manifest["count"]):
        path = base / f"residual_{i:04d}.png"
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise InputError(f"cannot read {path}", code="residual/read")
        if raw.ndim == 3:
            raw = raw[:, :, ::-1]
        maps.append(raw.astype(np.float32) / _PNG16_SCALE)
    return ResidualStack(
        maps=np.stack(maps),
        strategy=Strategy(manifest["strategy"]),
        alpha=float(manifest["alpha"]),
    )
