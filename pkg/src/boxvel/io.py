"""File formats: camera JSON, labeled-track JSONL, prediction JSONL, run manifests.

Track record, one JSON object per line:
    {"id": str, "fps": float, "boxes": [[x, y, w, h], ...],
     "velocity": [Vx, Vz],   # optional, labeled samples only
     "distance": d}          # optional, labeled samples only
Prediction record: {"id": str, "velocity": [Vx, Vz]}.
Floats are serialized with full round-trip precision.
"""
from __future__ import annotations

import hashlib
import json

from .exceptions import DataError
from .geometry import Camera, Velocity2D
from .synth import LabeledSample
from .track import BBox, Track


def load_camera(path) -> Camera:
    try:
        with open(path) as fh:
            return Camera.from_dict(json.load(fh))
    except FileNotFoundError:
        raise DataError(f"camera file not found: {path}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed camera file {path}: {e}") from e


def save_camera(cam: Camera, path) -> None:
    with open(path, "w") as fh:
        json.dump(cam.to_dict(), fh)
        fh.write("\n")


def sample_to_record(sample: LabeledSample, sample_id: str) -> dict:
    rec = {
        "id": sample_id,
        "fps": sample.track.fps,
        "boxes": [[b.x, b.y, b.w, b.h] for b in sample.track.boxes],
    }
    if sample.velocity is not None:
        rec["velocity"] = [sample.velocity.Vx, sample.velocity.Vz]
    if sample.distance is not None:
        rec["distance"] = sample.distance
    return rec


def record_to_sample(rec: dict) -> tuple[str, LabeledSample]:
    if "boxes" not in rec:
        raise DataError("record missing 'boxes'")
    track = Track(boxes=tuple(BBox(*b) for b in rec["boxes"]), fps=float(rec.get("fps", 20.0)))
    vel = rec.get("velocity")
    velocity = Velocity2D(Vx=float(vel[0]), Vz=float(vel[1])) if vel is not None else None
    distance = float(rec["distance"]) if "distance" in rec else None
    return str(rec.get("id", "")), LabeledSample(track=track, velocity=velocity, distance=distance)


def write_tracks_jsonl(path, samples, ids=None) -> None:
    """Write labeled or unlabeled samples; ids default to the running index."""
    with open(path, "w") as fh:
        for i, s in enumerate(samples):
            sid = ids[i] if ids is not None else str(i)
            fh.write(json.dumps(sample_to_record(s, sid)))
            fh.write("\n")


def read_tracks_jsonl(path, strict: bool = True):
    """Read all records as (id, sample) pairs.

    Strict mode raises DataError citing the offending line number. Lenient
    mode instead returns (records, failures) where failures is a list of
    (line number, message) for records that could not be parsed.
    """
    out = []
    failures = []
    try:
        fh = open(path)
    except FileNotFoundError:
        raise DataError(f"track file not found: {path}")
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(record_to_sample(rec))
            except (json.JSONDecodeError, DataError, TypeError, ValueError, IndexError) as e:
                if strict:
                    raise DataError(f"{path}:{lineno}: malformed record: {e}") from e
                failures.append((lineno, str(e)))
    return (out, failures) if not strict else out


def write_preds_jsonl(path, preds: dict) -> None:
    """preds: mapping id -> Velocity2D."""
    with open(path, "w") as fh:
        for sid, v in preds.items():
            fh.write(json.dumps({"id": sid, "velocity": [v.Vx, v.Vz]}))
            fh.write("\n")


def read_preds_jsonl(path) -> dict:
    out = {}
    try:
        fh = open(path)
    except FileNotFoundError:
        raise DataError(f"prediction file not found: {path}")
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[str(rec["id"])] = Velocity2D(Vx=float(rec["velocity"][0]),
                                                 Vz=float(rec["velocity"][1]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as e:
                raise DataError(f"{path}:{lineno}: malformed prediction: {e}") from e
    return out


def write_manifest(path, seed: int, config: dict, n_written: int, n_skipped: int) -> None:
    """Sidecar manifest for a generated dataset."""
    config_hash = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()
    doc = {"seed": seed, "config": config, "config_hash": config_hash,
           "n": n_written, "skipped": n_skipped}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
