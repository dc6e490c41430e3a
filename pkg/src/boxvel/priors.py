"""Distilled scene statistics: empirical seed locations, size-vs-depth fits, velocity Gaussian."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, FitError, ValidationError
from .geometry import Camera, GroundPoint, Velocity2D, back_project, bbox_reference_point

# Physical plausibility bands for vehicle extents, meters.
VEHICLE_HEIGHT_RANGE = (1.3, 2.5)
VEHICLE_WIDTH_RANGE = (1.5, 3.0)

PRIOR_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LocationBounds:
    """Supported region of the road plane, meters."""

    x_min: float = -9.0
    x_max: float = 9.0
    z_min: float = 5.0
    z_max: float = 100.0

    def __post_init__(self):
        if self.x_min >= self.x_max or self.z_min >= self.z_max:
            raise ValidationError("bounds must satisfy min < max")

    def contains(self, p: GroundPoint) -> bool:
        return self.x_min <= p.X <= self.x_max and self.z_min <= p.Z <= self.z_max

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "z_min": self.z_min, "z_max": self.z_max}

    @classmethod
    def from_dict(cls, d: dict) -> "LocationBounds":
        return cls(**{k: float(v) for k, v in d.items()})


def polyfit(xs, ys, degree: int) -> np.ndarray:
    """Least-squares polynomial coefficients, highest power first."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise FitError(f"xs and ys must be equal-length 1-D arrays, got {xs.shape} and {ys.shape}")
    if np.unique(xs).size < degree + 1:
        raise FitError(f"degree-{degree} fit needs at least {degree + 1} distinct xs")
    try:
        return np.polyfit(xs, ys, degree)
    except np.linalg.LinAlgError as e:  # pragma: no cover - numpy rarely fails here
        raise FitError(f"polynomial fit failed: {e}") from e


def fit_gaussian(vels) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and unbiased sample covariance of 2D velocities."""
    arr = np.array([[v.Vx, v.Vz] for v in vels], dtype=np.float64)
    if arr.shape[0] < 2:
        raise FitError(f"velocity Gaussian needs at least 2 samples, got {arr.shape[0]}")
    mean = arr.mean(axis=0)
    cov = np.cov(arr, rowvar=False, ddof=1)
    return mean, cov


@dataclass
class PriorModel:
    """Everything needed to sample a plausible vehicle scenario."""

    seed_points: list[GroundPoint]
    h_poly: np.ndarray  # pixel height as polynomial in basis variable
    w_poly: np.ndarray
    basis: str  # "inv_z": variable is 1/Z; "z": raw depth
    vel_mean: np.ndarray
    vel_cov: np.ndarray
    bounds: LocationBounds = field(default_factory=LocationBounds)

    def __post_init__(self):
        if not self.seed_points:
            raise ValidationError("prior needs at least one seed point")
        if self.basis not in ("inv_z", "z"):
            raise ValidationError(f"unknown basis {self.basis!r}")
        self.h_poly = np.asarray(self.h_poly, dtype=np.float64)
        self.w_poly = np.asarray(self.w_poly, dtype=np.float64)
        self.vel_mean = np.asarray(self.vel_mean, dtype=np.float64)
        self.vel_cov = np.asarray(self.vel_cov, dtype=np.float64)
        if not np.allclose(self.vel_cov, self.vel_cov.T):
            raise ValidationError("velocity covariance must be symmetric")

    def _basis_var(self, z: float) -> float:
        return 1.0 / z if self.basis == "inv_z" else z

    def box_height(self, z: float) -> float:
        return float(np.polyval(self.h_poly, self._basis_var(z)))

    def box_width(self, z: float) -> float:
        return float(np.polyval(self.w_poly, self._basis_var(z)))

    def to_dict(self) -> dict:
        return {
            "seed_points": [[p.X, p.Z] for p in self.seed_points],
            "h_poly": self.h_poly.tolist(),
            "w_poly": self.w_poly.tolist(),
            "basis": self.basis,
            "vel_mean": self.vel_mean.tolist(),
            "vel_cov": self.vel_cov.tolist(),
            "bounds": self.bounds.to_dict(),
            "version": PRIOR_FORMAT_VERSION,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PriorModel":
        if d.get("version") != PRIOR_FORMAT_VERSION:
            raise DataError(f"unsupported prior version {d.get('version')!r}")
        return cls(
            seed_points=[GroundPoint(X=x, Z=z) for x, z in d["seed_points"]],
            h_poly=d["h_poly"],
            w_poly=d["w_poly"],
            basis=d["basis"],
            vel_mean=d["vel_mean"],
            vel_cov=d["vel_cov"],
            bounds=LocationBounds.from_dict(d["bounds"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PriorModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_priors(samples, cam: Camera, degree: int = 1, basis: str = "inv_z",
               bounds: LocationBounds | None = None) -> PriorModel:
    """Distill a labeled sample set into a PriorModel.

    Seed points come from back-projecting each sample's first box; size
    polynomials are fitted on the back-projected depth of every frame; the
    velocity Gaussian is fitted on the ground-truth labels. Seeds outside
    the bounds are dropped.
    """
    bounds = bounds or LocationBounds()
    samples = list(samples)
    if not samples:
        raise FitError("no samples to fit priors from")

    seeds = []
    zs, hs, ws = [], [], []
    for s in samples:
        gp = back_project(cam, bbox_reference_point(cam, s.track.boxes[0]))
        if bounds.contains(gp):
            seeds.append(gp)
        for b in s.track.boxes:
            z = back_project(cam, bbox_reference_point(cam, b)).Z
            zs.append(z)
            hs.append(b.h)
            ws.append(b.w)
    if not seeds:
        raise FitError("all seed points fall outside the location bounds")

    xvar = 1.0 / np.asarray(zs) if basis == "inv_z" else np.asarray(zs)
    h_poly = polyfit(xvar, hs, degree)
    w_poly = polyfit(xvar, ws, degree)
    vel_mean, vel_cov = fit_gaussian([s.velocity for s in samples])
    return PriorModel(seed_points=seeds, h_poly=h_poly, w_poly=w_poly, basis=basis,
                      vel_mean=vel_mean, vel_cov=vel_cov, bounds=bounds)


def sample_velocity(pm: PriorModel, rng: np.random.Generator) -> Velocity2D:
    """Draw from the fitted velocity Gaussian via Cholesky.

    A zero covariance returns the mean exactly; other degenerate (PSD but
    not PD) covariances fall back to Cholesky of cov + 1e-12 I.
    """
    if not pm.vel_cov.any():
        v = pm.vel_mean
    else:
        try:
            chol = np.linalg.cholesky(pm.vel_cov)
        except np.linalg.LinAlgError:
            chol = np.linalg.cholesky(pm.vel_cov + 1e-12 * np.eye(2))
        v = pm.vel_mean + chol @ rng.standard_normal(2)
    return Velocity2D(Vx=float(v[0]), Vz=float(v[1]))


def sample_scenario(pm: PriorModel, cam: Camera, rng,
                    jitter_x: float = 0.5, jitter_z: float = 2.0):
    """Draw one scenario: (seed point, velocity, vehicle height m, vehicle width m).

    The seed is a uniform choice among the empirical seed points with uniform
    jitter, truncated to the bounds. Pixel sizes from the polynomials are
    converted to physical extents at the seed depth and clamped to the
    plausible vehicle bands.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    base = pm.seed_points[rng.integers(len(pm.seed_points))]
    x = base.X + (rng.uniform(-jitter_x, jitter_x) if jitter_x > 0 else 0.0)
    z = base.Z + (rng.uniform(-jitter_z, jitter_z) if jitter_z > 0 else 0.0)
    b = pm.bounds
    seed = GroundPoint(X=float(np.clip(x, b.x_min, b.x_max)), Z=float(np.clip(z, b.z_min, b.z_max)))
    vel = sample_velocity(pm, rng)
    h_m = float(np.clip(pm.box_height(seed.Z) * seed.Z / cam.f, *VEHICLE_HEIGHT_RANGE))
    w_m = float(np.clip(pm.box_width(seed.Z) * seed.Z / cam.f, *VEHICLE_WIDTH_RANGE))
    return seed, vel, h_m, w_m
