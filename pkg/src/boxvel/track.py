"""Box sequences: temporal Gaussian smoothing, featurization, tracker-noise simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel coordinates, (x, y) top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValidationError("box coordinates must be finite")
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(f"box size must be positive, got w={self.w}, h={self.h}")


@dataclass(frozen=True)
class Track:
    """Fixed-length sequence of boxes with its frame rate."""

    boxes: tuple[BBox, ...]
    fps: float = 20.0

    def __post_init__(self):
        if len(self.boxes) < 2:
            raise ValidationError(f"track needs at least 2 frames, got {len(self.boxes)}")
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")

    def __len__(self) -> int:
        return len(self.boxes)

    def as_array(self) -> np.ndarray:
        """(T, 4) array with columns x, y, w, h."""
        return np.array([[b.x, b.y, b.w, b.h] for b in self.boxes], dtype=np.float64)

    @classmethod
    def from_array(cls, arr: np.ndarray, fps: float = 20.0) -> "Track":
        return cls(boxes=tuple(BBox(*row) for row in np.asarray(arr, dtype=np.float64)), fps=fps)


@dataclass(frozen=True)
class SmoothingConfig:
    """Truncated Gaussian kernel: std-dev and half-width in frames."""

    sigma: float = 5.0
    radius: int | None = None  # default ceil(3*sigma)

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if self.radius is not None and self.radius < math.ceil(3 * self.sigma):
            raise ValidationError(f"radius {self.radius} < ceil(3*sigma)={math.ceil(3 * self.sigma)}")

    @property
    def effective_radius(self) -> int:
        return self.radius if self.radius is not None else math.ceil(3 * self.sigma)


@dataclass(frozen=True)
class NoiseConfig:
    """Simulated tracker imperfection: i.i.d. pixel noise plus optional size drift."""

    sigma_xy: float = 2.0
    sigma_wh: float = 1.0
    drift_wh: float = 0.0  # px per frame added linearly to w and h


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """Renormalized truncated Gaussian; weights sum to 1 exactly."""
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (offsets / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(t: Track, cfg: SmoothingConfig) -> Track:
    """Convolve each coordinate series with a Gaussian, replicate-padded at the ends."""
    if cfg.sigma == 0:
        return t
    radius = cfg.effective_radius
    kernel = gaussian_kernel(cfg.sigma, radius)
    arr = t.as_array()
    padded = np.pad(arr, ((radius, radius), (0, 0)), mode="edge")
    out = np.empty_like(arr)
    for c in range(4):
        out[:, c] = np.convolve(padded[:, c], kernel, mode="valid")
    return Track.from_array(out, fps=t.fps)


@dataclass(frozen=True)
class FeatureNorm:
    """Per-feature standardization statistics, stored with the trained model."""

    mean: np.ndarray
    std: np.ndarray

    STD_FLOOR = 1e-8

    @classmethod
    def identity(cls, dim: int) -> "FeatureNorm":
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    @classmethod
    def fit(cls, features: np.ndarray) -> "FeatureNorm":
        """Column-wise mean and population std of an (N, D) feature matrix."""
        x = np.asarray(features, dtype=np.float64)
        return cls(mean=x.mean(axis=0), std=x.std(axis=0))

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / np.maximum(self.std, self.STD_FLOOR)


def flatten(t: Track) -> np.ndarray:
    """Frame-major flattening: (x1, y1, w1, h1, x2, ...), length 4T."""
    return t.as_array().reshape(-1)


def unflatten(values: np.ndarray, fps: float = 20.0) -> Track:
    """Inverse of flatten for valid 4T vectors."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size % 4 != 0:
        raise ValidationError(f"expected a flat 4T vector, got shape {values.shape}")
    return Track.from_array(values.reshape(-1, 4), fps=fps)


def featurize(t: Track, norm: FeatureNorm) -> np.ndarray:
    """Flatten frame-major and standardize with the stored statistics."""
    flat = flatten(t)
    if flat.size != norm.mean.size:
        raise ValidationError(f"track gives {flat.size} features, norm expects {norm.mean.size}")
    return norm.apply(flat)


def add_tracker_noise(t: Track, noise: NoiseConfig, rng_seed) -> Track:
    """Perturb a track with seeded Gaussian pixel noise; w, h clamped to >= 1 px."""
    rng = np.random.default_rng(rng_seed)
    arr = t.as_array()
    n = len(t)
    arr[:, 0] += rng.normal(0.0, noise.sigma_xy, n) if noise.sigma_xy > 0 else 0.0
    arr[:, 1] += rng.normal(0.0, noise.sigma_xy, n) if noise.sigma_xy > 0 else 0.0
    arr[:, 2] += rng.normal(0.0, noise.sigma_wh, n) if noise.sigma_wh > 0 else 0.0
    arr[:, 3] += rng.normal(0.0, noise.sigma_wh, n) if noise.sigma_wh > 0 else 0.0
    if noise.drift_wh != 0.0:
        drift = noise.drift_wh * np.arange(n, dtype=np.float64)
        arr[:, 2] += drift
        arr[:, 3] += drift
    arr[:, 2:] = np.maximum(arr[:, 2:], 1.0)
    return Track.from_array(arr, fps=t.fps)
