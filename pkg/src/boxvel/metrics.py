"""Distance-bucketed velocity error: per-bucket mean squared norm, averaged over buckets."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError

BUCKETS = ("near", "medium", "far")


@dataclass(frozen=True)
class BucketSpec:
    """Distance split: near below b1, medium in [b1, b2), far at or beyond b2."""

    near_max: float = 20.0
    far_min: float = 45.0
    convention: str = "euclidean"  # or "longitudinal"; informational, bucketing uses the label

    def __post_init__(self):
        if not (0 < self.near_max < self.far_min):
            raise ValidationError(f"need 0 < near_max < far_min, got {self.near_max}, {self.far_min}")


def bucketize(d: float, spec: BucketSpec = BucketSpec()) -> str:
    """Assign a distance to near/medium/far; boundaries go to the farther bucket."""
    if d <= 0:
        raise ValidationError(f"distance must be positive, got {d}")
    if d < spec.near_max:
        return "near"
    if d < spec.far_min:
        return "medium"
    return "far"


@dataclass
class EvalReport:
    """Per-bucket mean squared velocity errors and their unweighted average."""

    overall: float
    per_bucket: dict
    counts: dict
    residuals: list | None = None

    @property
    def overall_rms(self) -> float:
        return math.sqrt(self.overall)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "overall_rms": self.overall_rms,
            "per_bucket": dict(self.per_bucket),
            "per_bucket_rms": {k: math.sqrt(v) for k, v in self.per_bucket.items()},
            "counts": dict(self.counts),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"{'bucket':<8} {'mse':>10} {'rms':>10} {'n':>6}"]
        for b in BUCKETS:
            lines.append(f"{b:<8} {self.per_bucket[b]:>10.4f} {math.sqrt(self.per_bucket[b]):>10.4f} "
                         f"{self.counts[b]:>6d}")
        lines.append(f"{'overall':<8} {self.overall:>10.4f} {self.overall_rms:>10.4f} "
                     f"{sum(self.counts.values()):>6d}")
        return "\n".join(lines)


def e_v(preds, truths, distances, spec: BucketSpec = BucketSpec(),
        keep_residuals: bool = False) -> EvalReport:
    """Challenge metric: bucket samples by ground-truth distance, take the mean
    squared residual norm per bucket, and average the three bucket values.

    The overall value is the unweighted mean of the three buckets even when
    their sizes differ. Every bucket must be populated.
    """
    preds = list(preds)
    truths = list(truths)
    distances = list(distances)
    if not (len(preds) == len(truths) == len(distances)):
        raise ValidationError(f"length mismatch: {len(preds)} preds, {len(truths)} truths, "
                              f"{len(distances)} distances")
    if not preds:
        raise ValidationError("no samples to evaluate")

    sq = {b: [] for b in BUCKETS}
    residuals = []
    for p, t, d in zip(preds, truths, distances):
        r = p.as_array() - t.as_array()
        err = float(r @ r)
        sq[bucketize(d, spec)].append(err)
        if keep_residuals:
            residuals.append({"residual": r.tolist(), "distance": d, "sq_error": err})
    for b in BUCKETS:
        if not sq[b]:
            raise ValidationError(f"bucket '{b}' is empty; cannot compute the bucket average")
    per_bucket = {b: float(np.mean(sq[b])) for b in BUCKETS}
    overall = sum(per_bucket.values()) / len(BUCKETS)
    return EvalReport(overall=overall, per_bucket=per_bucket,
                      counts={b: len(sq[b]) for b in BUCKETS},
                      residuals=residuals if keep_residuals else None)


def compare(reports: dict) -> str:
    """Aligned comparison table over named reports, best overall first."""
    if not reports:
        raise ValidationError("nothing to compare")
    rows = sorted(reports.items(), key=lambda kv: kv[1].overall)
    name_w = max(len("method"), max(len(n) for n in reports))
    header = f"{'method':<{name_w}} {'overall':>10} {'near':>10} {'medium':>10} {'far':>10}"
    lines = [header]
    for name, rep in rows:
        lines.append(f"{name:<{name_w}} {rep.overall:>10.4f} "
                     + " ".join(f"{rep.per_bucket[b]:>10.4f}" for b in BUCKETS))
    return "\n".join(lines)


def compare_csv(reports: dict) -> str:
    """CSV form of the comparison table; parses back to identical numbers."""
    if not reports:
        raise ValidationError("nothing to compare")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["method", "overall", *BUCKETS])
    for name, rep in sorted(reports.items(), key=lambda kv: kv[1].overall):
        writer.writerow([name, repr(rep.overall)] + [repr(rep.per_bucket[b]) for b in BUCKETS])
    return buf.getvalue()
