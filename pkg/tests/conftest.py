import numpy as np
import pytest
from PIL import Image

from mpfscope.frames import FrameSequence


def write_png_dir(directory, frames_arr, prefix="frame"):
    """Write frames (T, H, W, C) uint8 as numbered PNGs; returns the paths."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames_arr):
        path = directory / f"{prefix}_{i:06d}.png"
        Image.fromarray(frame).save(path)
        paths.append(path)
    return paths


def sequence_from(frames_arr, **kwargs):
    """Wrap a (T, H, W, C) uint8 array as a FrameSequence."""
    return FrameSequence(frames=np.ascontiguousarray(frames_arr, dtype=np.uint8),
                        **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
