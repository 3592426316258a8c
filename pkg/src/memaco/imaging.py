"""Grayscale image I/O, contrast heuristics, noise injection and synthetic scenes."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class PGMError(ValueError):
    """Raised when a PGM stream cannot be decoded or encoded."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image, row-major with the origin at the top-left."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("image must be a non-empty 2-D array")
        if np.any(px < 0) or np.any(px > 255):
            raise ValueError("intensities must lie in [0, 255]")
        object.__setattr__(self, "pixels", px.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def intensities(self) -> list[int]:
        return self.pixels.ravel().tolist()

    @classmethod
    def from_list(cls, width: int, height: int, intensities: Sequence[int]) -> "GrayImage":
        if len(intensities) != width * height:
            raise ValueError(f"expected {width * height} intensities, got {len(intensities)}")
        return cls(np.asarray(intensities, dtype=np.int64).reshape(height, width))


# ---------------------------------------------------------------- PGM codec

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _next_token(data: bytes, pos: int, name: str) -> tuple[bytes, int]:
    m = _TOKEN.match(data, pos)
    if m is None:
        raise PGMError(f"truncated header: missing {name}")
    return m.group(1), m.end()


def _header_int(data: bytes, pos: int, name: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos, name)
    try:
        value = int(tok)
    except ValueError:
        raise PGMError(f"invalid {name}: {tok!r}") from None
    return value, pos


def load_pgm(data: bytes) -> GrayImage:
    """Decode a P2 (ASCII) or P5 (binary) PGM byte stream with maxval <= 255."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"unsupported magic number {magic!r} (only P2/P5 grayscale)")
    pos = 2
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width <= 0 or height <= 0:
        raise PGMError(f"invalid width/height: {width}x{height}")
    if not 0 < maxval <= 255:
        raise PGMError(f"maxval {maxval} out of range (1..255)")
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        raster = data[pos:pos + n]
        if len(raster) < n:
            raise PGMError(f"truncated payload: expected {n} bytes, got {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        tokens = data[pos:].split()
        if len(tokens) < n:
            raise PGMError(f"truncated payload: expected {n} samples, got {len(tokens)}")
        try:
            values = np.array([int(t) for t in tokens[:n]], dtype=np.int64)
        except ValueError:
            raise PGMError("invalid sample in payload") from None

    if np.any(values > maxval):
        raise PGMError(f"payload sample exceeds maxval {maxval}")
    return GrayImage(values.reshape(height, width))


def scale_to_bytes(values: np.ndarray) -> np.ndarray:
    """Min-max scale a real-valued map to integers in [0, 255]; a flat map becomes 0."""
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise PGMError("cannot encode non-finite values")
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        return np.zeros(arr.shape, dtype=np.uint8)
    return np.rint((arr - lo) / (hi - lo) * 255.0).astype(np.uint8)


def save_pgm(img: Union[GrayImage, np.ndarray]) -> bytes:
    """Encode as binary P5.

    A ``GrayImage`` (or an integer/bool array) is written verbatim; boolean
    arrays map to {0, 255}; float arrays are min-max scaled to [0, 255].
    """
    if isinstance(img, GrayImage):
        px = img.pixels
    else:
        arr = np.asarray(img)
        if arr.ndim != 2:
            raise PGMError("only 2-D maps can be encoded")
        if arr.dtype == bool:
            px = arr.astype(np.uint8) * 255
        elif np.issubdtype(arr.dtype, np.integer):
            if arr.min() < 0 or arr.max() > 255:
                raise PGMError("integer map outside [0, 255]")
            px = arr.astype(np.uint8)
        else:
            px = scale_to_bytes(arr)
    h, w = px.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(px, dtype=np.uint8).tobytes()


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return load_pgm(fh.read())


# ---------------------------------------------------------------- heuristics

def compute_heuristics(img: GrayImage, border: str = "clamp") -> np.ndarray:
    """Per-pixel contrast favorability in [0, 1].

    The raw score of a pixel is the absolute horizontal difference of its
    left/right neighbours plus the absolute vertical difference of its
    up/down neighbours; scores are divided by their maximum over the image.

    border : {"clamp", "shrink"}
        ``clamp`` replicates edge pixels, so a missing neighbour is replaced
        by the pixel itself. ``shrink`` drops a difference term whenever one
        of its two neighbours is missing.
    A flat image yields an all-zero map.
    """
    px = img.pixels.astype(np.int64)
    if border == "clamp":
        p = np.pad(px, 1, mode="edge")
        raw = np.abs(p[1:-1, :-2] - p[1:-1, 2:]) + np.abs(p[:-2, 1:-1] - p[2:, 1:-1])
    elif border == "shrink":
        raw = np.zeros_like(px)
        raw[:, 1:-1] += np.abs(px[:, :-2] - px[:, 2:])
        raw[1:-1, :] += np.abs(px[:-2, :] - px[2:, :])
    else:
        raise ValueError(f"unknown border policy {border!r}")
    i_max = raw.max()
    if i_max == 0:
        return np.zeros(px.shape, dtype=float)
    return raw / float(i_max)


# ---------------------------------------------------------------- noise

def add_uniform_noise(img: GrayImage, level: float, seed: int) -> GrayImage:
    """Perturb every pixel by an independent draw from U[-255*level, 255*level]."""
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"noise level must be in [0, 1], got {level}")
    if level == 0.0:
        return GrayImage(img.pixels.copy())
    rng = np.random.default_rng(seed)
    amp = level * 255.0
    noisy = img.pixels + rng.uniform(-amp, amp, size=img.pixels.shape)
    return GrayImage(np.clip(np.rint(noisy), 0, 255))


def add_spike_noise(img: GrayImage, fraction: float, seed: int) -> GrayImage:
    """Replace a random ``fraction`` of pixels with uniformly random intensities."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"spike fraction must be in [0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    px = img.pixels.astype(np.int64).ravel()
    k = int(round(fraction * px.size))
    where = rng.choice(px.size, size=k, replace=False)
    px[where] = rng.integers(0, 256, size=k)
    return GrayImage(px.reshape(img.pixels.shape))


# ---------------------------------------------------------------- synthetic scenes

@dataclass(frozen=True)
class Rect:
    row: int
    col: int
    height: int
    width: int
    intensity: int


@dataclass(frozen=True)
class Triangle:
    """Right isosceles triangle; the right angle sits at the bottom-left of its box."""

    row: int
    col: int
    size: int
    intensity: int


@dataclass(frozen=True)
class Scene:
    background: int = 0
    shapes: tuple = field(default_factory=tuple)


def _footprint(shape, height: int, width: int) -> np.ndarray:
    rr, cc = np.mgrid[0:height, 0:width]
    if isinstance(shape, Rect):
        if (shape.height <= 0 or shape.width <= 0 or shape.row < 0 or shape.col < 0
                or shape.row + shape.height > height or shape.col + shape.width > width):
            raise ValueError(f"{shape} does not fit a {width}x{height} canvas")
        return ((rr >= shape.row) & (rr < shape.row + shape.height)
                & (cc >= shape.col) & (cc < shape.col + shape.width))
    if isinstance(shape, Triangle):
        if (shape.size <= 0 or shape.row < 0 or shape.col < 0
                or shape.row + shape.size > height or shape.col + shape.size > width):
            raise ValueError(f"{shape} does not fit a {width}x{height} canvas")
        dr, dc = rr - shape.row, cc - shape.col
        return (dr >= 0) & (dr < shape.size) & (dc >= 0) & (dc <= dr)
    raise TypeError(f"unsupported shape {shape!r}")


def synth_shapes(width: int, height: int, scene: Scene) -> tuple[GrayImage, np.ndarray]:
    """Render a scene and its ground-truth edge mask.

    Shapes are painted in order; later shapes cover earlier ones. A pixel is
    an edge pixel when one of its 4-neighbours belongs to a different region.
    """
    if width <= 0 or height <= 0:
        raise ValueError("canvas dimensions must be positive")
    labels = np.zeros((height, width), dtype=np.int64)
    px = np.full((height, width), scene.background, dtype=np.int64)
    for k, shape in enumerate(scene.shapes, start=1):
        fp = _footprint(shape, height, width)
        labels[fp] = k
        px[fp] = shape.intensity
    mask = np.zeros((height, width), dtype=bool)
    horiz = labels[:, 1:] != labels[:, :-1]
    vert = labels[1:, :] != labels[:-1, :]
    mask[:, 1:] |= horiz
    mask[:, :-1] |= horiz
    mask[1:, :] |= vert
    mask[:-1, :] |= vert
    return GrayImage(px), mask


def two_region_scene(size: int = 32, background: int = 20, foreground: int = 235) -> Scene:
    """A centred square covering half the side length: the default desk-scale test."""
    q = size // 4
    return Scene(background, (Rect(q, q, size - 2 * q, size - 2 * q, foreground),))


def nested_scene(size: int = 64) -> Scene:
    """Three tones: an outer square holding an inner square, plus a triangle."""
    s = size
    return Scene(30, (
        Rect(s // 8, s // 8, s // 2, s // 2, 140),
        Rect(s // 4, s // 4, s // 4, s // 4, 230),
        Triangle(s // 2 + s // 8, s // 2 + s // 8, s // 4, 180),
    ))


# ---------------------------------------------------------------- evaluation

def f1_score(predicted: np.ndarray, truth: np.ndarray) -> float:
    """F1 of a binary edge map against a reference mask (1.0 when both are empty)."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise ValueError("mask shapes differ")
    tp = np.count_nonzero(predicted & truth)
    fp = np.count_nonzero(predicted & ~truth)
    fn = np.count_nonzero(~predicted & truth)
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)
