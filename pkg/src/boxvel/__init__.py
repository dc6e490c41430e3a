"""Vehicle velocity estimation from bounding-box trajectories."""

from .geometry import (  # noqa: F401
    Camera,
    DEFAULT_CAMERA,
    GroundPoint,
    ImagePoint,
    Velocity2D,
    back_project,
    bbox_reference_point,
    geometric_velocity,
    project,
)
from .track import BBox, FeatureNorm, NoiseConfig, SmoothingConfig, Track  # noqa: F401
from .priors import LocationBounds, PriorModel, fit_priors, sample_scenario  # noqa: F401
from .synth import GenConfig, LabeledSample, generate_dataset, generate_track  # noqa: F401
from .regressor import MlpModel, TrainConfig, predict, train  # noqa: F401
from .metrics import BucketSpec, EvalReport, bucketize, compare, e_v  # noqa: F401

__version__ = "0.1.0"
