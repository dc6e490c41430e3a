import numpy as np
import pytest

from boxvel.experiment import reference_prior
from boxvel.geometry import DEFAULT_CAMERA, GroundPoint, Velocity2D, project
from boxvel.synth import GenConfig, generate_dataset
from boxvel.track import BBox, Track


@pytest.fixture(scope="session")
def cam():
    return DEFAULT_CAMERA


@pytest.fixture(scope="session")
def prior(cam):
    return reference_prior(cam)


@pytest.fixture(scope="session")
def clean_samples(cam, prior):
    samples, skipped = generate_dataset(cam, prior, GenConfig(n_samples=200, seed=123))
    assert skipped == 0
    return samples


def make_constant_velocity_track(cam, seed: GroundPoint, vel: Velocity2D,
                                 h_m: float = 1.6, w_m: float = 1.9,
                                 T: int = 40, fps: float = 20.0) -> Track:
    """Noiseless track of a vehicle with fixed physical size and constant velocity."""
    boxes = []
    for t in range(T):
        dt = t / fps
        p = GroundPoint(X=seed.X + vel.Vx * dt, Z=seed.Z + vel.Vz * dt)
        ip = project(cam, p)
        h_px = cam.f * h_m / p.Z
        w_px = cam.f * w_m / p.Z
        u = ip.u + cam.img_w / 2.0
        v = ip.v + cam.img_h / 2.0
        boxes.append(BBox(x=u - w_px / 2.0, y=v - h_px, w=w_px, h=h_px))
    return Track(boxes=tuple(boxes), fps=fps)
