"""Command-line interface: ``xicorr {xi,ci,truth,simulate}``.

Exit codes: 0 success, 2 unreadable input or bad usage, 3 violated
precondition (constant Y, too few pairs, invalid parameters, unwritable
output), 4 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from ._rng import fresh_seed
from .errors import NumericalError, XiError
from .models import ModelSpec
from .rankcore import PairedSample, xi_n, xi_normalized
from .resample import Method, confidence_interval
from .study import run_bias_mse, run_coverage, variance_scaling_fit
from .truth import (
    QuadratureSpec, model_law, xi_continuous_numeric, xi_model1_symbolic, xi_true,
)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4
PARAM_FIELDS = ("sigma", "m", "m_prime", "p", "p_prime", "a", "b")


class DatasetError(Exception):
    """Malformed dataset file; the message carries the line number."""


def read_dataset(path, delimiter=","):
    """Read columns ``x`` and ``y`` from a delimited text file with a header."""
    try:
        handle = sys.stdin if path == "-" else open(path, newline="")
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        names = [h.strip().lower() for h in header]
        missing = [c for c in ("x", "y") if c not in names]
        if missing:
            raise DatasetError(f"{path}:1: missing column(s) {', '.join(missing)}")
        ix, iy = names.index("x"), names.index("y")
        xs, ys = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                x, y = float(row[ix]), float(row[iy])
            except ValueError:
                raise DatasetError(f"{path}:{line}: not a number") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DatasetError(f"{path}:{line}: NaN or infinite value")
            xs.append(x)
            ys.append(y)
    return xs, ys


def emit(records, fmt, out=None):
    """Write records (dicts sharing one key order) as CSV or JSON lines."""
    buf = io.StringIO()
    if fmt == "json":
        for rec in records:
            buf.write(json.dumps(rec) + "\n")
    else:
        writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: "" if v is None else v for k, v in rec.items()})
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _model_from_args(args):
    params = {k: getattr(args, k) for k in PARAM_FIELDS if getattr(args, k) is not None}
    return ModelSpec(args.model, **params)


def _model_columns(spec):
    return {"model": spec.id, **{k: getattr(spec, k) for k in PARAM_FIELDS}}


def _seed(args):
    if args.seed is None:
        args.seed = fresh_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def cmd_xi(args):
    seed = _seed(args)
    xs, ys = read_dataset(args.input, args.delimiter)
    sample = PairedSample(xs, ys)
    if args.normalized:
        value, name = xi_normalized(sample, seed=seed), "normalized"
    else:
        value, name = xi_n(sample, seed=seed), "raw"
    emit([{"estimator": name, "xi": value, "n": sample.n, "seed": seed,
           "input": args.input, "version": __version__}], args.format)


def cmd_ci(args):
    seed = _seed(args)
    xs, ys = read_dataset(args.input, args.delimiter)
    sample = PairedSample(xs, ys)
    method = Method(args.method)
    if method in (Method.PERCENTILE, Method.BCA) and len(set(ys)) == len(ys):
        print("warning: the n-out-of-n bootstrap is known to be unreliable for "
              "continuous Y; its intervals often miss the point estimate",
              file=sys.stderr)
    iv = confidence_interval(sample, None, method, args.conf, args.R, args.m,
                             args.estimator, seed)
    emit([{"method": iv.method.value, "estimator": iv.estimator, "level": iv.level,
           "point": iv.point, "lower": iv.lower, "upper": iv.upper, "n": sample.n,
           "m": iv.m, "R": iv.replicates, "degenerate": iv.degenerate,
           "fallback": iv.fallback, "seed": seed, "input": args.input,
           "version": __version__}], args.format)


def cmd_truth(args):
    spec = _model_from_args(args)
    quad = QuadratureSpec(args.abs_tol, args.rel_tol, args.truncation)
    rec = {**_model_columns(spec), "xi": xi_true(spec, quad)}
    numeric = symbolic = None
    if spec.id in (1, 2, 3) and spec.sigma > 0:
        numeric = xi_continuous_numeric(model_law(spec, quad), quad)
        if spec.id == 1:
            symbolic = xi_model1_symbolic(spec.a, spec.b, spec.sigma, quad)
    rec.update(xi_numeric=numeric, xi_symbolic=symbolic, abs_tol=quad.abs_tol,
               rel_tol=quad.rel_tol, truncation=quad.truncation, version=__version__)
    emit([rec], args.format)


def _parse_grid(text):
    if ".." in text:
        lo, hi = (int(v) for v in text.split(".."))
        grid, n = [], lo
        # 1-2-5 steps per decade between the bounds
        while n <= hi:
            grid.append(n)
            n = n * 5 // 2 if str(n)[0] == "2" else n * 2
        return grid
    return [int(v) for v in text.split(",")]


def cmd_simulate(args):
    seed = _seed(args)
    spec = _model_from_args(args)
    base = {**_model_columns(spec)}
    rows = []
    if args.kind == "bias":
        for n in _parse_grid(args.n):
            for rep in run_bias_mse(spec, n, args.N, seed, workers=args.threads):
                rows.append({**base, "n": n, "N": rep.N, "estimator": rep.estimator,
                             "mean_estimate": rep.mean_estimate, "bias": rep.bias,
                             "mse": rep.mse, "variance": rep.variance, "se_mean": rep.se_mean,
                             "xi_true": rep.xi_true, "seed": seed, "version": __version__})
        summary = "; ".join(f"n={r['n']} {r['estimator']}: bias={r['bias']:.5f} "
                            f"mse={r['mse']:.5f}" for r in rows)
    elif args.kind == "coverage":
        for n in _parse_grid(args.n):
            rep = run_coverage(spec, n, args.N, args.R, args.method, args.conf, args.estimator,
                               seed, args.subsample, workers=args.threads)
            rows.append({**base, "n": n, "N": rep.N, "R": rep.R, "method": rep.method,
                         "conf": rep.conf, "estimator": rep.estimator, "subsample": rep.m,
                         "coverage": rep.coverage, "se": rep.se,
                         "mean_width": rep.mean_width, "xi_true": rep.xi_true,
                         "seed": seed, "version": __version__})
        summary = "; ".join(f"n={r['n']}: coverage={r['coverage']:.3f} (se {r['se']:.3f})"
                            for r in rows)
    else:
        fit = variance_scaling_fit(spec, _parse_grid(args.grid or args.n), args.N,
                                   args.estimator, seed, workers=args.threads)
        for n, var, res in zip(fit.n_grid, fit.variances, fit.residuals):
            rows.append({**base, "estimator": fit.estimator, "n": n, "N": args.N,
                         "variance": var, "residual": res, "log_V": fit.log_V,
                         "gamma": fit.gamma, "seed": seed, "version": __version__})
        summary = f"gamma={fit.gamma:.4f} log_V={fit.log_V:.4f}"
    try:
        emit(rows, args.format, args.out)
    except OSError as exc:
        raise XiError(f"cannot write {args.out}: {exc.strerror}") from None
    print(f"{args.kind} model={spec.id}: {summary}",
          file=sys.stdout if args.out else sys.stderr)


def _add_model_args(p):
    p.add_argument("--model", type=int, required=True, choices=range(1, 11), metavar="ID",
                   help="model id 1-10")
    p.add_argument("--sigma", type=float)
    p.add_argument("--m", type=int, help="atoms of X (models 5-7, 9) or binom size (10)")
    p.add_argument("--m-prime", "--mp", dest="m_prime", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--p-prime", "--pp", dest="p_prime", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xicorr", description="Chatterjee's xi: estimates, intervals, truth, studies")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeded=True):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if seeded:
            p.add_argument("--seed", type=int, help="64-bit seed; random when omitted")

    p = sub.add_parser("xi", help="estimate xi_n or the normalized xi'_n")
    p.add_argument("input", help="delimited file with header columns x and y ('-' = stdin)")
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--delimiter", default=",")
    common(p)
    p.set_defaults(func=cmd_xi)

    p = sub.add_parser("ci", help="bootstrap confidence interval")
    p.add_argument("input")
    p.add_argument("--method", choices=[m.value for m in Method], default="m-out-of-n")
    p.add_argument("--conf", type=float, default=0.9)
    p.add_argument("-R", "--replicates", dest="R", type=int, default=1000)
    p.add_argument("--m", type=int)
    p.add_argument("--estimator", choices=("raw", "normalized"), default="normalized")
    p.add_argument("--delimiter", default=",")
    common(p)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("truth", help="asymptotic xi of a model")
    _add_model_args(p)
    p.add_argument("--abs-tol", type=float, default=QuadratureSpec.abs_tol)
    p.add_argument("--rel-tol", type=float, default=QuadratureSpec.rel_tol)
    p.add_argument("--truncation", type=float, default=QuadratureSpec.truncation)
    common(p, seeded=False)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("simulate", help="Monte Carlo study written as CSV/JSON")
    p.add_argument("kind", choices=("bias", "coverage", "varfit"))
    _add_model_args(p)
    p.add_argument("--n", default="50",
                   help="sample size(s): 20 or 10,20,50 or 50..5000 (1-2-5 steps)")
    p.add_argument("--grid", help="n grid for varfit (same syntax as --n)")
    p.add_argument("-N", "--trials", dest="N", type=int, default=None)
    p.add_argument("-R", "--replicates", dest="R", type=int, default=1000)
    p.add_argument("--method", choices=[m.value for m in Method], default="m-out-of-n")
    p.add_argument("--subsample", type=int, help="m of the m-out-of-n/normal methods")
    p.add_argument("--estimator", choices=("raw", "normalized"), default=None)
    p.add_argument("--conf", type=float, default=0.9)
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        if args.N is None:
            args.N = 500 if args.kind == "coverage" else 10_000
        if args.estimator is None:
            args.estimator = "raw" if args.kind == "varfit" else "normalized"
    try:
        args.func(args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (XiError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
