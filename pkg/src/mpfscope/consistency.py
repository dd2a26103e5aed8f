"""Per-frame change statistics and the Comprehensive Consistency Score.

The score family measures how stable the "how much" (change quantity) and
the "where" (spatial distribution) of a residual sequence are over time.
Synthetic residuals projected through a frozen decoder score high on both;
physically recorded residuals fluctuate and score low.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, InputError
from .residual import DEFAULT_MASK_THRESHOLD, ResidualStack

DEFAULT_BORDER_FRAC = 0.125
DEFAULT_CENTER_FRAC = 0.5
DEFAULT_W1 = 0.5
DEFAULT_W2 = 0.5


@dataclass(frozen=True)
class ChangeStats:
    """Change statistics of one residual map, all in [0, 1].

    change_ratio counts pixels whose channel-max residual exceeds the mask
    threshold; mask_density counts exceeding cells over every channel (the
    two coincide on single-channel maps). The centroid is intensity
    weighted with pixel centers at (x + 0.5) / W. Border/center ratios are
    residual-mass fractions of disjoint regions.
    """

    change_ratio: float
    mask_density: float
    centroid_x: float
    centroid_y: float
    ratio_border: float
    ratio_center: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])


@dataclass(frozen=True)
class ConsistencyScore:
    """C_qty / C_spa and their weighted fusion."""

    c_qty: float
    c_spa: float
    s_cons: float
    w1: float = DEFAULT_W1
    w2: float = DEFAULT_W2


def _region_masks(h: int, w: int, border_frac: float, center_frac: float):
    """Boolean masks of the outer border band and the central box."""
    margin_y = int(border_frac * h)
    margin_x = int(border_frac * w)
    border = np.zeros((h, w), dtype=bool)
    if margin_y > 0:
        border[:margin_y, :] = True
        border[h - margin_y:, :] = True
    if margin_x > 0:
        border[:, :margin_x] = True
        border[:, w - margin_x:] = True

    cy0 = int((0.5 - center_frac / 2.0) * h)
    cx0 = int((0.5 - center_frac / 2.0) * w)
    cy1 = cy0 + int(center_frac * h)
    cx1 = cx0 + int(center_frac * w)
    center = np.zeros((h, w), dtype=bool)
    center[cy0:cy1, cx0:cx1] = True
    return border, center


def change_stats(residual_map: np.ndarray,
                 mask_threshold: float = DEFAULT_MASK_THRESHOLD,
                 border_frac: float = DEFAULT_BORDER_FRAC,
                 center_frac: float = DEFAULT_CENTER_FRAC) -> ChangeStats:
    """Compute ChangeStats for a single HxW or HxWxC residual map.

    The threshold applies to the enhanced map values as given. An all-zero
    map yields zero ratios and a (0.5, 0.5) centroid.
    """
    m = np.asarray(residual_map, dtype=np.float64)
    if m.ndim not in (2, 3):
        raise InputError(f"residual map must be HxW or HxWxC, got {m.shape}",
                         code="consistency/map-shape")
    if not np.all(np.isfinite(m)) or m.min() < 0:
        raise InputError("residual map must be finite and non-negative",
                         code="consistency/map-values")
    if border_frac > (1.0 - center_frac) / 2.0:
        raise ConfigError(
            "border band and center box must stay disjoint: "
            f"border_frac {border_frac} > (1 - center_frac)/2",
            code="consistency/regions",
        )

    if m.ndim == 2:
        per_pixel = m
        cell_exceed = m > mask_threshold
    else:
        per_pixel = m.max(axis=2)
        cell_exceed = m > mask_threshold
    h, w = per_pixel.shape

    change_ratio = float(np.count_nonzero(per_pixel > mask_threshold) / (h * w))
    mask_density = float(np.count_nonzero(cell_exceed) / cell_exceed.size)

    weight = m if m.ndim == 2 else m.sum(axis=2)
    mass = weight.sum()
    if mass > 0:
        xs = (np.arange(w) + 0.5) / w
        ys = (np.arange(h) + 0.5) / h
        centroid_x = float((weight.sum(axis=0) * xs).sum() / mass)
        centroid_y = float((weight.sum(axis=1) * ys).sum() / mass)
        border, center = _region_masks(h, w, border_frac, center_frac)
        ratio_border = float(weight[border].sum() / mass)
        ratio_center = float(weight[center].sum() / mass)
    else:
        centroid_x = centroid_y = 0.5
        ratio_border = ratio_center = 0.0

    return ChangeStats(
        change_ratio=change_ratio,
        mask_density=mask_density,
        centroid_x=centroid_x,
        centroid_y=centroid_y,
        ratio_border=ratio_border,
        ratio_center=ratio_center,
    )


def stack_stats(stack: ResidualStack,
                mask_threshold: float = DEFAULT_MASK_THRESHOLD,
                border_frac: float = DEFAULT_BORDER_FRAC,
                center_frac: float = DEFAULT_CENTER_FRAC) -> list[ChangeStats]:
    """ChangeStats for every map of a residual stack, in temporal order."""
    return [
        change_stats(m, mask_threshold=mask_threshold,
                     border_frac=border_frac, center_frac=center_frac)
        for m in stack.maps
    ]


def _pop_std(values) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64)))


def consistency_score(stats: list[ChangeStats], w1: float = DEFAULT_W1,
                      w2: float = DEFAULT_W2) -> ConsistencyScore:
    """Fuse per-frame statistics into C_qty, C_spa and S_cons.

    Sigma is the population standard deviation over the map sequence:
      C_qty = 1 / (1 + s(change_ratio) + s(mask_density))
      C_spa = 1 / (1 + s(centroid_x) + s(centroid_y)
                     + s(ratio_border) + s(ratio_center))
      S_cons = w1 * C_qty + w2 * C_spa
    """
    if len(stats) < 2:
        raise ConfigError(
            f"need >= 2 per-frame statistics for a variance, got {len(stats)}",
            code="consistency/too-few",
        )
    if w1 < 0 or w2 < 0:
        raise ConfigError("weights must be non-negative", code="consistency/weights")

    c_qty = 1.0 / (
        1.0
        + _pop_std([s.change_ratio for s in stats])
        + _pop_std([s.mask_density for s in stats])
    )
    c_spa = 1.0 / (
        1.0
        + _pop_std([s.centroid_x for s in stats])
        + _pop_std([s.centroid_y for s in stats])
        + _pop_std([s.ratio_border for s in stats])
        + _pop_std([s.ratio_center for s in stats])
    )
    return ConsistencyScore(
        c_qty=c_qty,
        c_spa=c_spa,
        s_cons=w1 * c_qty + w2 * c_spa,
        w1=w1,
        w2=w2,
    )


def score_stack(stack: ResidualStack, w1: float = DEFAULT_W1, w2: float = DEFAULT_W2,
                mask_threshold: float = DEFAULT_MASK_THRESHOLD) -> ConsistencyScore:
    """Convenience wrapper: per-map stats followed by score fusion."""
    return consistency_score(
        stack_stats(stack, mask_threshold=mask_threshold), w1=w1, w2=w2
    )
