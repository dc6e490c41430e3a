"""Synthetic labeled tracks: constant-velocity motion re-projected through the camera."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .geometry import Camera, GroundPoint, Velocity2D, project
from .priors import PriorModel, sample_scenario
from .track import BBox, NoiseConfig, Track, add_tracker_noise

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenConfig:
    """Settings for one generation run."""

    n_samples: int
    seed: int
    T: int = 40
    fps: float = 20.0
    jitter_x: float = 0.5
    jitter_z: float = 2.0
    noise: NoiseConfig | None = None
    distance_convention: str = "euclidean"  # or "longitudinal"
    max_retries: int = 50

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.T < 2:
            raise ValidationError(f"T must be >= 2, got {self.T}")
        if self.distance_convention not in ("euclidean", "longitudinal"):
            raise ValidationError(f"unknown distance convention {self.distance_convention!r}")


@dataclass(frozen=True)
class LabeledSample:
    """A track with its ground-truth velocity and distance at the final frame."""

    track: Track
    velocity: Velocity2D
    distance: float


def _distance(p: GroundPoint, convention: str) -> float:
    return math.hypot(p.X, p.Z) if convention == "euclidean" else p.Z


def _box_at(cam: Camera, p: GroundPoint, h_m: float, w_m: float) -> BBox:
    """Box whose bottom-center projects p and whose pixel size matches the physical extent."""
    ip = project(cam, p)
    h_px = cam.f * h_m / p.Z
    w_px = cam.f * w_m / p.Z
    u_pix = ip.u + cam.img_w / 2.0
    v_pix = ip.v + cam.img_h / 2.0
    return BBox(x=u_pix - w_px / 2.0, y=v_pix - h_px, w=w_px, h=h_px)


def _in_frustum(cam: Camera, b: BBox) -> bool:
    return b.x >= 0 and b.y >= 0 and b.x + b.w <= cam.img_w and b.y + b.h <= cam.img_h


def generate_track(cam: Camera, pm: PriorModel, cfg: GenConfig, sample_index: int) -> LabeledSample | None:
    """Generate one labeled sample, deterministic in (cfg.seed, sample_index).

    The sampled seed point is frame 1; the velocity and distance labels are
    stated at the final frame. Scenarios whose track leaves the depth bounds
    or the image frustum are resampled up to cfg.max_retries, then skipped.
    """
    rng = np.random.default_rng([cfg.seed, sample_index])
    for _ in range(cfg.max_retries):
        seed, vel, h_m, w_m = sample_scenario(pm, cam, rng, cfg.jitter_x, cfg.jitter_z)
        boxes = []
        ok = True
        last = seed
        for t in range(cfg.T):
            dt = t / cfg.fps
            p = GroundPoint(X=seed.X + vel.Vx * dt, Z=seed.Z + vel.Vz * dt)
            if not (pm.bounds.z_min <= p.Z <= pm.bounds.z_max):
                ok = False
                break
            b = _box_at(cam, p, h_m, w_m)
            if not _in_frustum(cam, b):
                ok = False
                break
            boxes.append(b)
            last = p
        if not ok:
            continue
        track = Track(boxes=tuple(boxes), fps=cfg.fps)
        if cfg.noise is not None:
            noise_seed = int(rng.integers(2**63))
            track = add_tracker_noise(track, cfg.noise, noise_seed)
        return LabeledSample(track=track, velocity=vel,
                             distance=_distance(last, cfg.distance_convention))
    log.warning("sample %d skipped after %d retries", sample_index, cfg.max_retries)
    return None


def generate_dataset(cam: Camera, pm: PriorModel, cfg: GenConfig) -> tuple[list[LabeledSample], int]:
    """Generate cfg.n_samples samples; returns (samples, skip count).

    Each sample's RNG stream depends only on (seed, index), so the output is
    independent of generation order.
    """
    samples = []
    skipped = 0
    for i in range(cfg.n_samples):
        s = generate_track(cam, pm, cfg, i)
        if s is None:
            skipped += 1
        else:
            samples.append(s)
    if skipped > cfg.n_samples / 2:
        raise ValidationError(
            f"{skipped}/{cfg.n_samples} samples skipped; priors are inconsistent with the bounds")
    return samples, skipped
