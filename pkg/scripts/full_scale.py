#!/usr/bin/env python3
"""Opt-in long-running Monte Carlo runs at full scale.

These runs take hours to days on one core and are not part of the test
suite.  Each job calls ``xicorr simulate`` and writes one CSV into the
output directory, so the columns match the CLI output exactly.

Jobs
----
bias
    Bias and MSE of both estimators for models 1-10 over a grid of n,
    10**6 trials per configuration.
coverage
    Coverage of 0.9-level m-out-of-n and Dette-Kroll intervals for the
    continuous and discrete models over a grid of n, 10**5 trials.
bca
    BCa coverage of the normalized estimator for models 5-7 at
    sigma=0.1 and n=2000, 10**5 trials.
varfit
    Variance scaling fits for every model, 10**6 trials per n.

Use ``--smoke`` for a tiny configuration that exercises every job in a
short time.

Examples
--------
    python3 scripts/full_scale.py --out results/ --jobs bca --threads 8
    python3 scripts/full_scale.py --smoke --out /tmp/smoke
"""

import argparse
import sys
from pathlib import Path

from xicorr.cli import main as xicorr_main

FULL = {
    "bias_n": "10,20,50,100,200,500,1000",
    "bias_N": 1_000_000,
    "cov_n": "20,50,100,200,500,1000,2000",
    "cov_N": 100_000,
    "R": 1000,
    "bca_n": "2000",
    "var_grid": "50..5000",
    "var_N": 1_000_000,
    "sigmas": (0.1, 0.3, 0.7),
}
SMOKE = {
    "bias_n": "10,20",
    "bias_N": 100,
    "cov_n": "30",
    "cov_N": 100,
    "R": 200,
    "bca_n": "30",
    "var_grid": "20,50,100,200",
    "var_N": 100,
    "sigmas": (0.1,),
}

CONTINUOUS = (1, 2, 3)
DISCRETE = (5, 6, 7)
NOISY = (1, 2, 3, 5, 6, 7)


def configurations(job, size):
    """Yield ``(filename, argv)`` pairs for ``xicorr simulate``."""
    if job == "bias":
        for model in range(1, 11):
            for sigma in size["sigmas"] if model in NOISY else (None,):
                args = ["bias", "--model", model, "--n", size["bias_n"], "-N", size["bias_N"]]
                yield _tag("bias", model, sigma), args + _sigma(sigma)
    elif job == "coverage":
        for method in ("m-out-of-n", "normal"):
            for model in CONTINUOUS + DISCRETE + (8,):
                for sigma in size["sigmas"] if model in NOISY else (None,):
                    args = ["coverage", "--model", model, "--n", size["cov_n"],
                            "-N", size["cov_N"], "-R", size["R"], "--method", method]
                    yield _tag(f"coverage-{method}", model, sigma), args + _sigma(sigma)
    elif job == "bca":
        for model in DISCRETE:
            args = ["coverage", "--model", model, "--sigma", 0.1, "--n", size["bca_n"],
                    "-N", size["cov_N"], "-R", size["R"], "--method", "bca"]
            yield _tag("bca", model, 0.1), args
    elif job == "varfit":
        for model in range(1, 11):
            args = ["varfit", "--model", model, "--grid", size["var_grid"], "-N", size["var_N"]]
            yield _tag("varfit", model, None), args


def _sigma(sigma):
    return [] if sigma is None else ["--sigma", sigma]


def _tag(prefix, model, sigma):
    return f"{prefix}-model{model}" + ("" if sigma is None else f"-sigma{sigma}") + ".csv"


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--jobs", nargs="+", default=["bias", "coverage", "bca", "varfit"],
                        choices=["bias", "coverage", "bca", "varfit"])
    parser.add_argument("--seed", type=int, default=20211)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--smoke", action="store_true", help="tiny sizes for a quick check")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    size = SMOKE if args.smoke else FULL
    args.out.mkdir(parents=True, exist_ok=True)
    for job in args.jobs:
        for name, sim_args in configurations(job, size):
            argv_ = ["simulate", *map(str, sim_args), "--seed", str(args.seed),
                     "--threads", str(args.threads), "--out", str(args.out / name)]
            code = xicorr_main(argv_)
            if code != 0:
                print(f"job {name} failed with exit code {code}", file=sys.stderr)
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
