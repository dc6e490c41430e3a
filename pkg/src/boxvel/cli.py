"""Command-line pipeline: fit-priors, generate, train, predict, baseline, eval, export-stats.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from . import io as bio
from .exceptions import BoxvelError, CheckpointError, DataError, DomainError, FitError, NumericError, ValidationError
from .geometry import back_project, bbox_reference_point, geometric_velocity
from .metrics import BucketSpec, compare, compare_csv, e_v
from .priors import PriorModel, fit_priors
from .regressor import TrainConfig, load as load_model, predict, save as save_model, train
from .synth import GenConfig, generate_dataset
from .track import NoiseConfig, SmoothingConfig, gaussian_smooth

log = logging.getLogger("boxvel")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="boxvel", description=__doc__,
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fp = sub.add_parser("fit-priors", help="fit a prior model from annotated tracks",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    fp.add_argument("annotations", help="labeled track JSONL (velocity + distance per record)")
    fp.add_argument("camera", help="camera JSON {f, H, img_w, img_h}")
    fp.add_argument("-o", "--output", required=True, help="output prior JSON")
    fp.add_argument("--degree", type=int, default=1, help="size polynomial degree")
    fp.add_argument("--basis", choices=["inv_z", "z"], default="inv_z",
                    help="size fit variable: 1/Z or raw depth")

    gen = sub.add_parser("generate", help="generate a synthetic labeled dataset",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    gen.add_argument("priors", help="prior model JSON")
    gen.add_argument("camera", help="camera JSON")
    gen.add_argument("-o", "--output", required=True, help="output track JSONL (manifest written alongside)")
    gen.add_argument("-n", "--n-samples", type=int, required=True, help="number of samples")
    gen.add_argument("--seed", type=int, required=True, help="master seed")
    gen.add_argument("--frames", type=int, default=40, help="frames per track")
    gen.add_argument("--fps", type=float, default=20.0, help="frame rate")
    gen.add_argument("--noise-sigma-xy", type=float, default=0.0,
                     help="tracker-noise std-dev on x, y (px); 0 disables noise")
    gen.add_argument("--noise-sigma-wh", type=float, default=0.0,
                     help="tracker-noise std-dev on w, h (px)")

    tr = sub.add_parser("train", help="train the velocity regressor",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    tr.add_argument("dataset", help="labeled track JSONL")
    tr.add_argument("-o", "--output", required=True, help="output model checkpoint JSON")
    tr.add_argument("--epochs", type=int, default=150)
    tr.add_argument("--lr", type=float, default=6e-4, help="initial learning rate")
    tr.add_argument("--decay", type=float, default=0.99, help="per-epoch exponential lr decay")
    tr.add_argument("--dropout", type=float, default=0.2)
    tr.add_argument("--batch-size", type=int, default=64)
    tr.add_argument("--seed", type=int, required=True)
    tr.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    tr.add_argument("--smooth-sigma", type=float, default=0.0,
                    help="Gaussian smoothing applied to training tracks (frames)")
    tr.add_argument("--loss-trace", help="CSV path for the per-epoch loss trace "
                                         "(default: <output>.loss.csv)")

    pr = sub.add_parser("predict", help="run the trained model on tracks",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    pr.add_argument("tracks", help="track JSONL")
    pr.add_argument("model", help="model checkpoint JSON")
    pr.add_argument("-o", "--output", required=True, help="output prediction JSONL")
    pr.add_argument("--smooth-sigma", type=float, default=5.0,
                    help="test-time Gaussian smoothing (frames)")

    bl = sub.add_parser("baseline", help="geometric back-projection baseline",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    bl.add_argument("tracks", help="track JSONL")
    bl.add_argument("camera", help="camera JSON")
    bl.add_argument("-o", "--output", required=True, help="output prediction JSONL")
    bl.add_argument("--smooth-sigma", type=float, default=0.0,
                    help="Gaussian smoothing before back-projection (frames)")
    bl.add_argument("--window", type=int, default=None,
                    help="fit the velocity over the final K frames only")

    ev = sub.add_parser("eval", help="distance-bucketed velocity error",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ev.add_argument("preds", help="prediction JSONL")
    ev.add_argument("truth", help="labeled track JSONL with velocity and distance")
    ev.add_argument("--near-max", type=float, default=20.0, help="near/medium boundary (m)")
    ev.add_argument("--far-min", type=float, default=45.0, help="medium/far boundary (m)")
    ev.add_argument("-o", "--output", help="write the report as JSON here too")
    ev.add_argument("--csv", help="write a single-row CSV comparison table here")

    ex = sub.add_parser("export-stats", help="export dataset distributions for plotting",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ex.add_argument("dataset", help="track JSONL")
    ex.add_argument("camera", help="camera JSON")
    ex.add_argument("-o", "--output", required=True,
                    help="output prefix: writes <prefix>_boxes.csv and <prefix>_velocities.csv")
    return p


def _cmd_fit_priors(args) -> int:
    cam = bio.load_camera(args.camera)
    records = bio.read_tracks_jsonl(args.annotations)
    samples = [s for _, s in records]
    if any(s.velocity is None for s in samples):
        raise DataError("fit-priors needs a velocity label on every record")
    pm = fit_priors(samples, cam, degree=args.degree, basis=args.basis)
    pm.save(args.output)
    print(f"wrote {args.output}: {len(pm.seed_points)} seeds, "
          f"vel mean ({pm.vel_mean[0]:.3f}, {pm.vel_mean[1]:.3f})")
    return EXIT_OK


def _cmd_generate(args) -> int:
    if args.n_samples < 1:
        print("boxvel generate: error: --n-samples must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    cam = bio.load_camera(args.camera)
    pm = PriorModel.load(args.priors)
    noise = None
    if args.noise_sigma_xy > 0 or args.noise_sigma_wh > 0:
        noise = NoiseConfig(sigma_xy=args.noise_sigma_xy, sigma_wh=args.noise_sigma_wh)
    cfg = GenConfig(n_samples=args.n_samples, seed=args.seed, T=args.frames,
                    fps=args.fps, noise=noise)
    samples, skipped = generate_dataset(cam, pm, cfg)
    bio.write_tracks_jsonl(args.output, samples)
    manifest = {
        "n_samples": cfg.n_samples, "T": cfg.T, "fps": cfg.fps,
        "noise_sigma_xy": args.noise_sigma_xy, "noise_sigma_wh": args.noise_sigma_wh,
    }
    bio.write_manifest(args.output + ".manifest.json", args.seed, manifest, len(samples), skipped)
    print(f"wrote {args.output}: {len(samples)} samples ({skipped} skipped)")
    return EXIT_OK


def _cmd_train(args) -> int:
    records = bio.read_tracks_jsonl(args.dataset)
    samples = [s for _, s in records]
    if any(s.velocity is None for s in samples):
        raise DataError("training needs a velocity label on every record")
    cfg = TrainConfig(epochs=args.epochs, lr0=args.lr, decay=args.decay,
                      dropout_p=args.dropout, batch_size=args.batch_size,
                      seed=args.seed, optimizer=args.optimizer,
                      smooth_sigma=args.smooth_sigma)
    model, trace = train(samples, cfg)
    save_model(model, args.output)
    trace_path = args.loss_trace or args.output + ".loss.csv"
    with open(trace_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for e, l in enumerate(trace):
            writer.writerow([e, repr(l)])
    print(f"wrote {args.output} ({model.n_params} params); final loss {trace[-1]:.6f}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    records, bad_lines = bio.read_tracks_jsonl(args.tracks, strict=False)
    smoothing = SmoothingConfig(sigma=args.smooth_sigma) if args.smooth_sigma > 0 else None
    preds, failures = {}, [(f"line {ln}", msg) for ln, msg in bad_lines]
    for sid, s in records:
        try:
            preds[sid] = predict(model, s.track, smoothing)
        except BoxvelError as e:
            failures.append((sid, str(e)))
    bio.write_preds_jsonl(args.output, preds)
    print(f"wrote {args.output}: {len(preds)} predictions, {len(failures)} failures")
    for sid, msg in failures:
        print(f"  failed {sid}: {msg}", file=sys.stderr)
    return EXIT_OK


def _cmd_baseline(args) -> int:
    cam = bio.load_camera(args.camera)
    records, bad_lines = bio.read_tracks_jsonl(args.tracks, strict=False)
    smoothing = SmoothingConfig(sigma=args.smooth_sigma) if args.smooth_sigma > 0 else None
    preds, failures = {}, [(f"line {ln}", msg) for ln, msg in bad_lines]
    for sid, s in records:
        try:
            track = s.track
            if smoothing is not None:
                track = gaussian_smooth(track, smoothing)
            preds[sid] = geometric_velocity(cam, track, window=args.window)
        except BoxvelError as e:
            failures.append((sid, str(e)))
    bio.write_preds_jsonl(args.output, preds)
    print(f"wrote {args.output}: {len(preds)} predictions, {len(failures)} failures")
    for sid, msg in failures:
        print(f"  failed {sid}: {msg}", file=sys.stderr)
    return EXIT_OK


def _cmd_eval(args) -> int:
    preds = bio.read_preds_jsonl(args.preds)
    records = bio.read_tracks_jsonl(args.truth)
    spec = BucketSpec(near_max=args.near_max, far_min=args.far_min)
    aligned_preds, truths, dists = [], [], []
    for sid, s in records:
        if sid not in preds:
            raise DataError(f"no prediction for sample {sid!r}")
        if s.velocity is None or s.distance is None:
            raise DataError(f"sample {sid!r} lacks velocity/distance labels")
        aligned_preds.append(preds[sid])
        truths.append(s.velocity)
        dists.append(s.distance)
    report = e_v(aligned_preds, truths, dists, spec)
    print(report.to_text())
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(compare_csv({"eval": report}))
    return EXIT_OK


def _cmd_export_stats(args) -> int:
    cam = bio.load_camera(args.camera)
    records = bio.read_tracks_jsonl(args.dataset)
    boxes_path = args.output + "_boxes.csv"
    vels_path = args.output + "_velocities.csv"
    with open(boxes_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "frame", "x", "y", "w", "h", "Z"])
        for sid, s in records:
            for frame, b in enumerate(s.track.boxes):
                try:
                    z = back_project(cam, bbox_reference_point(cam, b)).Z
                except DomainError:
                    z = float("nan")
                writer.writerow([sid, frame, repr(b.x), repr(b.y), repr(b.w), repr(b.h), repr(z)])
    with open(vels_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "Vx", "Vz", "distance"])
        for sid, s in records:
            if s.velocity is not None:
                writer.writerow([sid, repr(s.velocity.Vx), repr(s.velocity.Vz),
                                 repr(s.distance) if s.distance is not None else ""])
    print(f"wrote {boxes_path} and {vels_path}")
    return EXIT_OK


_COMMANDS = {
    "fit-priors": _cmd_fit_priors,
    "generate": _cmd_generate,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "baseline": _cmd_baseline,
    "eval": _cmd_eval,
    "export-stats": _cmd_export_stats,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NumericError as e:
        print(f"boxvel: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, FitError, CheckpointError, DomainError, ValidationError) as e:
        print(f"boxvel: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
