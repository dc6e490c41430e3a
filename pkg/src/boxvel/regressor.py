"""Velocity regressor: small MLP with CReLU activations, analytic backprop, Adam.

Architecture: input (4T) -> affine(70) -> CReLU -> [affine(70) -> CReLU] x3
-> affine(2). CReLU doubles the width, so hidden affine layers after the
first take 140 inputs. Inverted dropout after each CReLU during training.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CheckpointError, NumericError, ValidationError
from .geometry import Velocity2D
from .track import FeatureNorm, SmoothingConfig, Track, featurize, flatten, gaussian_smooth

log = logging.getLogger(__name__)

HIDDEN_WIDTH = 70
N_HIDDEN = 4
OUTPUT_DIM = 2
CHECKPOINT_VERSION = 1


def crelu(x: np.ndarray) -> np.ndarray:
    """Concatenated ReLU: [relu(x), relu(-x)] along the last axis."""
    return np.concatenate([np.maximum(x, 0.0), np.maximum(-x, 0.0)], axis=-1)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    lr0: float = 6e-4
    decay: float = 0.99
    dropout_p: float = 0.2
    batch_size: int = 64
    seed: int = 0
    optimizer: str = "adam"  # or "sgd"
    decay_per_step: bool = False
    smooth_sigma: float = 0.0  # training-time smoothing of input tracks

    def __post_init__(self):
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValidationError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.lr0 <= 0 or not (0.0 < self.decay <= 1.0):
            raise ValidationError(f"bad schedule lr0={self.lr0}, decay={self.decay}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs, "lr0": self.lr0, "decay": self.decay,
            "dropout_p": self.dropout_p, "batch_size": self.batch_size,
            "seed": self.seed, "optimizer": self.optimizer,
            "decay_per_step": self.decay_per_step, "smooth_sigma": self.smooth_sigma,
        }


def layer_dims(t_frames: int) -> list[tuple[int, int]]:
    """(fan_in, fan_out) of every affine layer, CReLU doubling included."""
    dims = [(4 * t_frames, HIDDEN_WIDTH)]
    dims += [(2 * HIDDEN_WIDTH, HIDDEN_WIDTH)] * (N_HIDDEN - 1)
    dims += [(2 * HIDDEN_WIDTH, OUTPUT_DIM)]
    return dims


@dataclass
class MlpModel:
    """Trained estimator: affine layers (weights (in, out), biases) plus feature statistics."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feature_norm: FeatureNorm
    t_frames: int
    train_config: dict | None = None

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_model(t_frames: int, rng: np.random.Generator,
               feature_norm: FeatureNorm | None = None) -> MlpModel:
    """Glorot-uniform weights (fan-out doubled for CReLU layers), zero biases."""
    weights, biases = [], []
    dims = layer_dims(t_frames)
    for i, (fan_in, fan_out) in enumerate(dims):
        eff_out = 2 * fan_out if i < len(dims) - 1 else fan_out
        limit = np.sqrt(6.0 / (fan_in + eff_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    norm = feature_norm or FeatureNorm.identity(4 * t_frames)
    return MlpModel(weights=weights, biases=biases, feature_norm=norm, t_frames=t_frames)


def forward(m: MlpModel, x: np.ndarray, train: bool = False, dropout_p: float = 0.0,
            rng: np.random.Generator | None = None):
    """Run the network on standardized features; returns (output, cache).

    x may be a single (4T,) vector or a (B, 4T) batch. Eval mode disables
    dropout; train mode applies inverted dropout after each CReLU.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != 4 * m.t_frames:
        raise ValidationError(f"expected {4 * m.t_frames} features, got {x.shape[1]}")
    if train and dropout_p > 0 and rng is None:
        raise ValidationError("dropout in train mode needs an RNG")

    cache = {"inputs": [], "preacts": [], "masks": []}
    h = x
    for i in range(len(m.weights) - 1):
        cache["inputs"].append(h)
        a = h @ m.weights[i] + m.biases[i]
        cache["preacts"].append(a)
        z = crelu(a)
        if train and dropout_p > 0:
            mask = (rng.random(z.shape) >= dropout_p) / (1.0 - dropout_p)
            z = z * mask
        else:
            mask = None
        cache["masks"].append(mask)
        h = z
    cache["inputs"].append(h)
    out = h @ m.weights[-1] + m.biases[-1]
    cache["single"] = single
    return (out[0] if single else out), cache


def backward(m: MlpModel, cache, target: np.ndarray):
    """Gradients of the mean squared-norm loss w.r.t. every weight and bias.

    Loss: mean over the batch of ||pred - target||^2. Returns (dWs, dbs)
    aligned with m.weights / m.biases.
    """
    target = np.asarray(target, dtype=np.float64)
    if cache["single"]:
        target = target[None, :]
    last_in = cache["inputs"][-1]
    pred = last_in @ m.weights[-1] + m.biases[-1]
    if pred.shape != target.shape:
        raise ValidationError(f"target shape {target.shape} does not match output {pred.shape}")
    batch = pred.shape[0]
    delta = 2.0 * (pred - target) / batch

    dWs = [None] * len(m.weights)
    dbs = [None] * len(m.biases)
    dWs[-1] = last_in.T @ delta
    dbs[-1] = delta.sum(axis=0)
    dz = delta @ m.weights[-1].T
    for i in reversed(range(len(m.weights) - 1)):
        if cache["masks"][i] is not None:
            dz = dz * cache["masks"][i]
        a = cache["preacts"][i]
        width = a.shape[1]
        da = dz[:, :width] * (a > 0) - dz[:, width:] * (a < 0)
        dWs[i] = cache["inputs"][i].T @ da
        dbs[i] = da.sum(axis=0)
        if i > 0:
            dz = da @ m.weights[i].T
    return dWs, dbs


def _features_and_targets(samples, smooth_sigma: float):
    tracks = [s.track for s in samples]
    if smooth_sigma > 0:
        cfg = SmoothingConfig(sigma=smooth_sigma)
        tracks = [gaussian_smooth(t, cfg) for t in tracks]
    X = np.stack([flatten(t) for t in tracks])
    Y = np.stack([s.velocity.as_array() for s in samples])
    return X, Y


def train(samples, cfg: TrainConfig) -> tuple[MlpModel, list[float]]:
    """Fit the estimator with the standard recipe; returns (model, per-epoch loss trace).

    Feature statistics are computed on the training set and stored in the
    model. Learning rate at epoch e is lr0 * decay**e (or per optimizer step
    when decay_per_step is set).
    """
    samples = list(samples)
    if not samples:
        raise ValidationError("training needs at least one sample")
    t_frames = len(samples[0].track)
    if any(len(s.track) != t_frames for s in samples):
        raise ValidationError("all training tracks must have the same length")

    X_raw, Y = _features_and_targets(samples, cfg.smooth_sigma)
    norm = FeatureNorm.fit(X_raw)
    X = norm.apply(X_raw)

    rng = np.random.default_rng(cfg.seed)
    model = init_model(t_frames, rng, feature_norm=norm)

    # Adam state
    ms = [np.zeros_like(w) for w in model.weights] + [np.zeros_like(b) for b in model.biases]
    vs = [np.zeros_like(p) for p in ms]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    n = X.shape[0]
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = X[idx], Y[idx]
            out, cache = forward(model, xb, train=True, dropout_p=cfg.dropout_p, rng=rng)
            residual = out - yb
            loss = float(np.mean(np.sum(residual**2, axis=1)))
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            epoch_loss += loss * len(idx)
            dWs, dbs = backward(model, cache, yb)
            grads = dWs + dbs
            params = model.weights + model.biases
            step += 1
            lr = cfg.lr0 * cfg.decay ** (step if cfg.decay_per_step else epoch)
            if cfg.optimizer == "adam":
                for p, g, mbuf, vbuf in zip(params, grads, ms, vs):
                    mbuf *= beta1
                    mbuf += (1 - beta1) * g
                    vbuf *= beta2
                    vbuf += (1 - beta2) * g**2
                    mhat = mbuf / (1 - beta1**step)
                    vhat = vbuf / (1 - beta2**step)
                    p -= lr * mhat / (np.sqrt(vhat) + eps)
            else:
                for p, g in zip(params, grads):
                    p -= lr * g
        trace.append(epoch_loss / n)
    model.train_config = cfg.to_dict()
    return model, trace


def predict(m: MlpModel, track: Track, smoothing: SmoothingConfig | None = None) -> Velocity2D:
    """Smooth, featurize with the stored statistics, run the network in eval mode."""
    if smoothing is not None and smoothing.sigma > 0:
        track = gaussian_smooth(track, smoothing)
    feats = featurize(track, m.feature_norm)
    out, _ = forward(m, feats)
    return Velocity2D(Vx=float(out[0]), Vz=float(out[1]))


def _payload(m: MlpModel) -> dict:
    return {
        "arch": {"T": m.t_frames, "hidden": [HIDDEN_WIDTH] * N_HIDDEN, "activation": "crelu"},
        "feature_norm": {"mean": m.feature_norm.mean.tolist(), "std": m.feature_norm.std.tolist()},
        "weights": [{"W": w.tolist(), "b": b.tolist()} for w, b in zip(m.weights, m.biases)],
    }


def _checksum(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def save(m: MlpModel, path) -> None:
    """Write a versioned, checksummed JSON checkpoint."""
    payload = _payload(m)
    doc = {"version": CHECKPOINT_VERSION, **payload,
           "train_config": m.train_config, "checksum": _checksum(payload)}
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load(path) -> MlpModel:
    """Read a checkpoint; rejects corrupt, truncated or version-mismatched files."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, OSError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(doc, dict) or doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}"
                              if isinstance(doc, dict) else "malformed checkpoint")
    payload = {k: doc[k] for k in ("arch", "feature_norm", "weights") if k in doc}
    if set(payload) != {"arch", "feature_norm", "weights"}:
        raise CheckpointError("checkpoint missing required sections")
    if doc.get("checksum") != _checksum(payload):
        raise CheckpointError("checkpoint checksum mismatch")
    norm = FeatureNorm(mean=np.array(payload["feature_norm"]["mean"]),
                       std=np.array(payload["feature_norm"]["std"]))
    weights = [np.array(layer["W"]) for layer in payload["weights"]]
    biases = [np.array(layer["b"]) for layer in payload["weights"]]
    model = MlpModel(weights=weights, biases=biases, feature_norm=norm,
                     t_frames=int(payload["arch"]["T"]), train_config=doc.get("train_config"))
    expected = layer_dims(model.t_frames)
    actual = [w.shape for w in model.weights]
    if actual != [tuple(d) for d in expected]:
        raise CheckpointError(f"checkpoint layer shapes {actual} do not match architecture")
    return model
