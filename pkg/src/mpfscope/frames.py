"""Frame-sequence ingestion and micro-segment sampling.

Sources are either a directory of numbered PNG/PPM files or a raw
``.mpfraw`` container (header layout documented in docs/formats.md).
All frames are normalized to 8-bit RGB so downstream math sees one shape.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, InputError

DEFAULT_FPS = Fraction(8, 1)
DEFAULT_SEGMENT_LENGTH = 8

RAW_MAGIC = b"MPFR"
RAW_VERSION = 1
# magic[4] | version u16 | height u32 | width u32 | channels u8
# | fps_num u16 | fps_den u16 | frame_count u32, all little-endian
_RAW_HEADER = struct.Struct("<4sHIIBHHI")

_IMAGE_SUFFIXES = (".png", ".ppm")
_SIDECAR_NAME = "meta.json"


class FrameLoadError(InputError):
    code = "frames/load"


class DimensionMismatchError(InputError):
    code = "frames/dimension-mismatch"


class RawFormatError(InputError):
    code = "frames/raw-format"


@dataclass(frozen=True)
class IngestSpec:
    """Options controlling how a source is read.

    ``length``/``start`` select the segment window; ``height``/``width``/
    ``channels`` are validated against raw-container headers when given.
    """

    length: int | None = None
    start: int = 0
    fps: Fraction | None = None
    height: int | None = None
    width: int | None = None
    channels: int | None = None


@dataclass(frozen=True)
class FrameSequence:
    """A contiguous window of decoded frames.

    ``frames`` has shape (L, H, W, 3) and dtype uint8. ``short`` marks
    sequences truncated because the source held fewer frames than
    requested.
    """

    frames: np.ndarray
    fps: Fraction = DEFAULT_FPS
    source_id: str = ""
    start_index: int = 0
    short: bool = False

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise DimensionMismatchError(
                f"frames must have shape (L, H, W, 3), got {self.frames.shape}"
            )
        if self.frames.dtype != np.uint8:
            raise FrameLoadError(f"frames must be uint8, got {self.frames.dtype}")
        if self.fps <= 0:
            raise ConfigError("fps must be positive", code="frames/fps")
        if self.start_index < 0:
            raise ConfigError("start_index must be >= 0", code="frames/start-index")

    def __len__(self):
        return self.frames.shape[0]

    @property
    def shape(self):
        """(H, W, C) of a single frame."""
        return self.frames.shape[1:]


def _to_rgb(arr: np.ndarray, name: str) -> np.ndarray:
    """Promote a decoded frame to HxWx3 uint8. Grayscale is replicated."""
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise FrameLoadError(f"unsupported channel layout {arr.shape} in {name}")
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    return np.ascontiguousarray(arr, dtype=np.uint8)


def _parse_fps(value) -> Fraction:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    return Fraction(value).limit_denominator(65535)


def list_frame_files(directory: Path) -> list[Path]:
    """Image files of a source directory, sorted by zero-padded stem."""
    files = [
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
    ]
    return sorted(files, key=lambda p: p.name)


def _load_directory(directory: Path, spec: IngestSpec) -> FrameSequence:
    files = list_frame_files(directory)
    if not files:
        raise FrameLoadError(f"no PNG/PPM frames found in {directory}")

    total = len(files)
    start = spec.start
    if start >= total:
        raise FrameLoadError(
            f"segment start {start} is beyond the {total} frames in {directory}"
        )
    length = spec.length if spec.length is not None else total - start
    short = start + length > total
    window = files[start:start + length]

    frames = []
    ref_shape = None
    ref_name = None
    for path in window:
        try:
            with Image.open(path) as img:
                img.load()
                if img.mode not in ("RGB", "L"):
                    img = img.convert("RGB")
                arr = np.asarray(img)
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise FrameLoadError(f"cannot decode frame {path.name}: {exc}") from exc
        arr = _to_rgb(arr, path.name)
        if ref_shape is None:
            ref_shape, ref_name = arr.shape, path.name
        elif arr.shape != ref_shape:
            raise DimensionMismatchError(
                f"frame {path.name} has shape {arr.shape[:2]}, "
                f"expected {ref_shape[:2]} from {ref_name}"
            )
        frames.append(arr)

    fps = spec.fps
    if fps is None:
        sidecar = directory / _SIDECAR_NAME
        if sidecar.is_file():
            try:
                meta = json.loads(sidecar.read_text())
            except json.JSONDecodeError as exc:
                raise FrameLoadError(f"bad sidecar {sidecar.name}: {exc}") from exc
            if "fps" in meta:
                fps = _parse_fps(meta["fps"])
    if fps is None:
        fps = DEFAULT_FPS

    return FrameSequence(
        frames=np.stack(frames),
        fps=fps,
        source_id=str(directory),
        start_index=start,
        short=short,
    )


def read_raw_header(path: Path) -> dict:
    """Parse and validate an .mpfraw header."""
    with open(path, "rb") as fh:
        blob = fh.read(_RAW_HEADER.size)
    if len(blob) < _RAW_HEADER.size:
        raise RawFormatError(f"{path.name}: truncated header ({len(blob)} bytes)")
    magic, version, height, width, channels, fps_num, fps_den, count = (
        _RAW_HEADER.unpack(blob)
    )
    if magic != RAW_MAGIC:
        raise RawFormatError(f"{path.name}: bad magic {magic!r}, expected {RAW_MAGIC!r}")
    if version != RAW_VERSION:
        raise RawFormatError(f"{path.name}: unsupported version {version}")
    if channels not in (1, 3):
        raise RawFormatError(f"{path.name}: channels must be 1 or 3, got {channels}")
    if fps_den == 0:
        raise RawFormatError(f"{path.name}: zero fps denominator")
    return {
        "height": height,
        "width": width,
        "channels": channels,
        "fps": Fraction(fps_num, fps_den),
        "frame_count": count,
    }


def _load_raw(path: Path, spec: IngestSpec) -> FrameSequence:
    header = read_raw_header(path)
    h, w, c = header["height"], header["width"], header["channels"]
    total = header["frame_count"]
    for key, expected in (("height", spec.height), ("width", spec.width),
                          ("channels", spec.channels)):
        if expected is not None and header[key] != expected:
            raise RawFormatError(
                f"{path.name}: header {key}={header[key]} does not match "
                f"expected {expected}"
            )

    start = spec.start
    if start >= total:
        raise FrameLoadError(
            f"segment start {start} is beyond the {total} frames in {path.name}"
        )
    length = spec.length if spec.length is not None else total - start
    short = start + length > total
    count = min(length, total - start)

    frame_bytes = h * w * c
    expected_size = _RAW_HEADER.size + total * frame_bytes
    actual_size = path.stat().st_size
    if actual_size != expected_size:
        raise RawFormatError(
            f"{path.name}: payload size mismatch, expected {expected_size} bytes "
            f"for {total} frames, got {actual_size}"
        )

    with open(path, "rb") as fh:
        fh.seek(_RAW_HEADER.size + start * frame_bytes)
        payload = fh.read(count * frame_bytes)
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(count, h, w, c)
    if c == 1:
        frames = np.repeat(frames, 3, axis=3)

    fps = spec.fps if spec.fps is not None else header["fps"]
    return FrameSequence(
        frames=np.ascontiguousarray(frames),
        fps=fps,
        source_id=str(path),
        start_index=start,
        short=short,
    )


def load_frames(path, spec: IngestSpec | None = None) -> FrameSequence:
    """Load a frame window from an image directory or .mpfraw container.

    Frames come back as 8-bit RGB in file-name order. fps is taken from
    the ingest spec, then sidecar/container metadata, defaulting to 8.
    """
    spec = spec or IngestSpec()
    path = Path(path)
    if not path.exists():
        raise FrameLoadError(f"no such input: {path}")
    if path.is_dir():
        return _load_directory(path, spec)
    if path.suffix.lower() == ".mpfraw":
        return _load_raw(path, spec)
    raise FrameLoadError(f"unsupported input {path.name}: expected directory or .mpfraw")


def write_raw(path, frames: np.ndarray, fps: Fraction = DEFAULT_FPS) -> None:
    """Write frames (T, H, W, C) uint8 to an .mpfraw container."""
    frames = np.ascontiguousarray(frames, dtype=np.uint8)
    if frames.ndim != 4 or frames.shape[3] not in (1, 3):
        raise ConfigError(
            f"raw frames must have shape (T, H, W, 1|3), got {frames.shape}",
            code="frames/raw-shape",
        )
    t, h, w, c = frames.shape
    fps = Fraction(fps)
    header = _RAW_HEADER.pack(
        RAW_MAGIC, RAW_VERSION, h, w, c, fps.numerator, fps.denominator, t
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frames.tobytes())


def count_frames(path) -> int:
    """Number of frames available in a source without decoding them."""
    path = Path(path)
    if not path.exists():
        raise FrameLoadError(f"no such input: {path}")
    if path.is_dir():
        return len(list_frame_files(path))
    if path.suffix.lower() == ".mpfraw":
        return read_raw_header(path)["frame_count"]
    raise FrameLoadError(f"unsupported input {path.name}: expected directory or .mpfraw")


def sample_segment(total_frames: int, length: int, mode: str = "fixed",
                   seed: int | None = None) -> int:
    """Pick the start index k of a contiguous segment.

    Stochastic mode draws k uniformly from {0, ..., T-L} with the seeded
    generator; fixed mode always starts at frame 0. When the source is
    shorter than the segment, k = 0 and the caller truncates.
    """
    if length < 2:
        raise ConfigError(
            f"segment length must be >= 2 (residuals undefined), got {length}",
            code="frames/segment-length",
        )
    if total_frames < 1:
        raise ConfigError("total_frames must be >= 1", code="frames/total-frames")
    if mode not in ("fixed", "stochastic"):
        raise ConfigError(f"unknown sampling mode {mode!r}", code="frames/mode")
    if mode == "fixed" or total_frames <= length:
        return 0
    rng = np.random.default_rng(seed)
    return int(rng.integers(0, total_frames - length + 1))


def load_segment(path, length: int = DEFAULT_SEGMENT_LENGTH, mode: str = "fixed",
                 seed: int | None = None, fps: Fraction | None = None) -> FrameSequence:
    """Sample a start index for the source and load that window."""
    total = count_frames(path)
    start = sample_segment(total, length, mode=mode, seed=seed)
    return load_frames(path, IngestSpec(length=length, start=start, fps=fps))
