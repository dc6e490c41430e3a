"""Pinhole ground-plane geometry and the purely geometric velocity baseline.

Conventions (pinned): image u grows right, v grows down, both relative to the
principal point at the image center; world X grows right, Z grows forward,
the camera sits at height H above a flat road looking straight ahead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ValidationError


@dataclass(frozen=True)
class Camera:
    """Calibrated forward-facing camera: focal length in pixels, height in meters."""

    f: float
    H: float
    img_w: int = 1280
    img_h: int = 720

    def __post_init__(self):
        if self.f <= 0 or self.H <= 0:
            raise ValidationError(f"focal length and height must be positive, got f={self.f}, H={self.H}")
        if self.img_w <= 0 or self.img_h <= 0:
            raise ValidationError(f"image size must be positive, got {self.img_w}x{self.img_h}")

    def to_dict(self) -> dict:
        return {"f": self.f, "H": self.H, "img_w": self.img_w, "img_h": self.img_h}

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        return cls(f=float(d["f"]), H=float(d["H"]), img_w=int(d["img_w"]), img_h=int(d["img_h"]))


DEFAULT_CAMERA = Camera(f=1000.0, H=1.5)


@dataclass(frozen=True)
class GroundPoint:
    """Road-level point in the ego frame: X lateral (right positive), Z forward, meters."""

    X: float
    Z: float


@dataclass(frozen=True)
class ImagePoint:
    """Pixel coordinates relative to the principal point (u right, v down)."""

    u: float
    v: float


@dataclass(frozen=True)
class Velocity2D:
    """Ground-plane velocity relative to the ego-vehicle, m/s."""

    Vx: float
    Vz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.Vx, self.Vz], dtype=np.float64)


def project(cam: Camera, p: GroundPoint) -> ImagePoint:
    """Project a road-level point into the image: u = f X / Z, v = f H / Z."""
    if p.Z <= 0:
        raise DomainError(f"point not in front of camera (Z={p.Z})")
    return ImagePoint(u=cam.f * p.X / p.Z, v=cam.f * cam.H / p.Z)


def back_project(cam: Camera, ip: ImagePoint) -> GroundPoint:
    """Invert project for road-level points: Z = f H / v, X = H u / v."""
    if ip.v <= 0:
        raise DomainError(f"point at or above horizon (v={ip.v})")
    return GroundPoint(X=cam.H * ip.u / ip.v, Z=cam.f * cam.H / ip.v)


def bbox_reference_point(cam: Camera, box) -> ImagePoint:
    """Bottom-center of a box, shifted to principal-point-relative coordinates.

    The principal point is pinned at the image center.
    """
    if box.w <= 0 or box.h <= 0:
        raise ValidationError(f"degenerate box w={box.w}, h={box.h}")
    u_pix = box.x + box.w / 2.0
    v_pix = box.y + box.h
    return ImagePoint(u=u_pix - cam.img_w / 2.0, v=v_pix - cam.img_h / 2.0)


def track_ground_points(cam: Camera, track) -> np.ndarray:
    """Back-project every frame's reference point; returns an (T, 2) array of (X, Z)."""
    pts = np.empty((len(track.boxes), 2), dtype=np.float64)
    for i, b in enumerate(track.boxes):
        gp = back_project(cam, bbox_reference_point(cam, b))
        pts[i] = (gp.X, gp.Z)
    return pts


def geometric_velocity(cam: Camera, track, window: int | None = None) -> Velocity2D:
    """Velocity from back-projected positions: OLS slope of X and Z against time.

    `window` restricts the fit to the final K frames (default: whole track).
    """
    if len(track.boxes) < 2:
        raise ValidationError(f"track needs at least 2 frames, got {len(track.boxes)}")
    pts = track_ground_points(cam, track)
    if window is not None:
        if window < 2:
            raise ValidationError(f"window must be >= 2, got {window}")
        pts = pts[-window:]
    t = np.arange(len(pts), dtype=np.float64) / track.fps
    vx = np.polyfit(t, pts[:, 0], 1)[0]
    vz = np.polyfit(t, pts[:, 1], 1)[0]
    return Velocity2D(Vx=float(vx), Vz=float(vz))
