#!/usr/bin/env python3
"""Run the full synthetic end-to-end benchmark and print a comparison table.

Fits priors from generated annotations, trains the regressor on 11536
noisy synthetic tracks, and evaluates it against the geometric baseline
on 1000 held-out noisy tracks.
"""
import argparse
import logging

from boxvel.experiment import run_benchmark
from boxvel.metrics import compare


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=11536)
    p.add_argument("--n-eval", type=int, default=1000)
    p.add_argument("--n-annotations", type=int, default=500)
    args = p.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    res = run_benchmark(n_annotations=args.n_annotations, n_train=args.n_train,
                        n_eval=args.n_eval, seed=args.seed)
    print()
    print(compare({
        "mlp": res.mlp_report,
        "geometric (derivative)": res.baseline_report,
        "geometric (full-track OLS)": res.baseline_full_report,
    }))
    print(f"\nbaseline/mlp overall ratio: {res.overall_ratio:.2f}")


if __name__ == "__main__":
    main()
