import math
import random

import numpy as np
import pytest

from mpfscope.consistency import (
    ChangeStats,
    change_stats,
    consistency_score,
    score_stack,
    stack_stats,
)
from mpfscope.errors import ConfigError, InputError
from mpfscope.residual import residual_normalized

from conftest import sequence_from


def flat_stats(**overrides):
    base = dict(change_ratio=0.3, mask_density=0.3, centroid_x=0.5,
                centroid_y=0.5, ratio_border=0.2, ratio_center=0.4)
    base.update(overrides)
    return ChangeStats(**base)


def test_all_zero_map_defaults():
    stats = change_stats(np.zeros((8, 8)))
    assert stats.change_ratio == 0.0
    assert stats.mask_density == 0.0
    assert (stats.centroid_x, stats.centroid_y) == (0.5, 0.5)
    assert stats.ratio_border == 0.0
    assert stats.ratio_center == 0.0


def test_single_pixel_centroid_uses_pixel_centers():
    m = np.zeros((8, 8))
    m[0, 0] = 42.0
    stats = change_stats(m)
    assert stats.centroid_x == pytest.approx(0.0625)
    assert stats.centroid_y == pytest.approx(0.0625)


def test_uniform_map_symmetry():
    stats = change_stats(np.full((8, 8), 20.0))
    assert stats.centroid_x == pytest.approx(0.5)
    assert stats.centroid_y == pytest.approx(0.5)
    # central 50% x 50% box holds a quarter of uniform mass
    assert stats.ratio_center == pytest.approx(0.25)
    # outer 12.5% band of an 8x8 map is 64 - 36 pixels
    assert stats.ratio_border == pytest.approx(28 / 64)


def test_change_ratio_counts_channel_max_pixels():
    m = np.zeros((4, 4, 3))
    m[1, 2, 0] = 50.0  # one channel of one pixel
    stats = change_stats(m, mask_threshold=5)
    assert stats.change_ratio == pytest.approx(1 / 16)
    assert stats.mask_density == pytest.approx(1 / 48)


def test_regions_disjoint_on_random_maps(rng):
    for _ in range(200):
        h, w = rng.integers(3, 33, size=2)
        m = rng.random((int(h), int(w))) * 255
        stats = change_stats(m)
        assert stats.ratio_border + stats.ratio_center <= 1 + 1e-9
        for f in (stats.change_ratio, stats.mask_density, stats.centroid_x,
                  stats.centroid_y, stats.ratio_border, stats.ratio_center):
            assert 0.0 <= f <= 1.0


def test_threshold_applies_to_enhanced_map_values(rng):
    m = rng.random((8, 8, 3)) * 40
    a = change_stats(m, mask_threshold=5)
    b = change_stats(m * 2.0, mask_threshold=10)
    assert a.change_ratio == b.change_ratio
    assert a.mask_density == b.mask_density


def test_overlapping_region_config_rejected():
    with pytest.raises(ConfigError):
        change_stats(np.zeros((8, 8)), border_frac=0.4, center_frac=0.9)


def test_non_finite_map_rejected():
    m = np.zeros((4, 4))
    m[0, 0] = np.nan
    with pytest.raises(InputError):
        change_stats(m)


def test_constant_stats_reach_upper_bound():
    stats = [flat_stats()] * 4
    score = consistency_score(stats, w1=0.5, w2=0.5)
    assert score.c_qty == 1.0
    assert score.c_spa == 1.0
    assert score.s_cons == 1.0


def population_sigma(values):
    # direct-summation oracle, independent of numpy
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def test_c_qty_matches_population_sigma_oracle():
    ratios = [0.1, 0.2, 0.3]
    stats = [flat_stats(change_ratio=r) for r in ratios]
    score = consistency_score(stats)
    expected = 1.0 / (1.0 + population_sigma(ratios))
    assert score.c_qty == pytest.approx(expected, abs=1e-12)
    assert score.c_qty == pytest.approx(0.92451, abs=5e-6)
    assert score.c_spa == 1.0
    assert score.s_cons == pytest.approx(0.5 * score.c_qty + 0.5)


def test_scores_in_unit_interval_and_below_one_when_varying(rng):
    stats = [
        flat_stats(change_ratio=float(r), centroid_x=float(c))
        for r, c in zip(rng.random(6), rng.random(6))
    ]
    score = consistency_score(stats)
    assert 0.0 < score.c_qty < 1.0
    assert 0.0 < score.c_spa < 1.0


def test_permutation_invariance(rng):
    stats = [
        flat_stats(change_ratio=float(v), mask_density=float(w),
                   centroid_x=float(x))
        for v, w, x in zip(rng.random(7), rng.random(7), rng.random(7))
    ]
    base = consistency_score(stats)
    shuffled = stats[:]
    random.Random(3).shuffle(shuffled)
    other = consistency_score(shuffled)
    assert other.c_qty == pytest.approx(base.c_qty, abs=1e-15)
    assert other.c_spa == pytest.approx(base.c_spa, abs=1e-15)


def test_too_few_stats_rejected():
    with pytest.raises(ConfigError):
        consistency_score([flat_stats()])


def test_score_stack_runs_over_normalized_residuals(rng):
    frames = rng.integers(0, 256, size=(8, 16, 16, 3), dtype=np.uint8)
    stack = residual_normalized(sequence_from(frames))
    stats = stack_stats(stack)
    assert len(stats) == 7
    score = score_stack(stack)
    assert 0.0 < score.s_cons <= 1.0
