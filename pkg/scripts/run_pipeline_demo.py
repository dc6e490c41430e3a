#!/usr/bin/env python3
"""Exercise the CLI end to end in a scratch directory with small settings."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from boxvel.experiment import reference_prior
from boxvel.geometry import DEFAULT_CAMERA
from boxvel.io import save_camera


def run(*args):
    cmd = [sys.executable, "-m", "boxvel.cli", *map(str, args)]
    print("+", " ".join(cmd[2:]))
    subprocess.run(cmd, check=True)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        save_camera(DEFAULT_CAMERA, d / "camera.json")
        reference_prior(DEFAULT_CAMERA).save(d / "ref_prior.json")

        run("generate", d / "ref_prior.json", d / "camera.json",
            "-o", d / "annotations.jsonl", "-n", 300, "--seed", 1)
        run("fit-priors", d / "annotations.jsonl", d / "camera.json",
            "-o", d / "priors.json")
        run("generate", d / "priors.json", d / "camera.json",
            "-o", d / "train.jsonl", "-n", 2000, "--seed", 2,
            "--noise-sigma-xy", 2, "--noise-sigma-wh", 1)
        run("train", d / "train.jsonl", "-o", d / "model.json",
            "--epochs", 30, "--seed", 0, "--smooth-sigma", 5)
        run("generate", d / "ref_prior.json", d / "camera.json",
            "-o", d / "test.jsonl", "-n", 300, "--seed", 3,
            "--noise-sigma-xy", 2, "--noise-sigma-wh", 1)
        run("predict", d / "test.jsonl", d / "model.json", "-o", d / "preds.jsonl")
        run("baseline", d / "test.jsonl", d / "camera.json",
            "-o", d / "base.jsonl", "--smooth-sigma", 5, "--window", 10)
        print("\n== trained model ==")
        run("eval", d / "preds.jsonl", d / "test.jsonl")
        print("\n== geometric baseline ==")
        run("eval", d / "base.jsonl", d / "test.jsonl")
        run("export-stats", d / "test.jsonl", d / "camera.json", "-o", d / "stats")
        print("\nstats preview:")
        print("\n".join((d / "stats_boxes.csv").read_text().splitlines()[:3]))


if __name__ == "__main__":
    main()
