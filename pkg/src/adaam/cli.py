"""Command line interface.

Subcommands: fit, transform, cluster, bench, synth. Exit codes: 0 on
success, 1 for usage or configuration errors, 2 for data format errors.
The ADAAM_THREADS environment variable caps process-wide thread pools;
results do not depend on it because the numerical core always runs on a
pinned BLAS schedule.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .cluster import evaluate
from .core import (AdaamModel, center, default_neighbors, fit_adaam,
                   load_model, save_model)
from .core import transform as apply_model
from .datasets import (DataFormatError, load_dataset, save_binary, save_csv,
                       synth_blobs)
from .graph import knn_heat_kernel
from .lpp import lpp

METHODS = ("adaam", "knn-lpp", "raw")


class CliUsageError(Exception):
    """Bad flags or unresolvable configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(message)


def _parse_bandwidth(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise CliUsageError(
            f"--bandwidth must be 'auto' or a positive number, got {text!r}"
        ) from None
    if not value > 0:
        raise CliUsageError(f"--bandwidth must be positive, got {text}")
    return value


def _parse_labels_col(text):
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        return text


def _standardize(X: np.ndarray):
    scales = X.std(axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    return X / scales, scales


def _fold_scaling(model: AdaamModel, scales: np.ndarray) -> AdaamModel:
    # express a model fit on X / scales in raw-input units so transform
    # needs no extra state
    A = model.projection / scales[:, None]
    return AdaamModel(
        projection=A,
        metric=A @ A.T,
        column_means=model.column_means * scales,
        n=model.n, d=model.d, c=model.c, k=model.k, m=model.m,
        alpha1=model.alpha1, alpha2=model.alpha2,
        bandwidth=model.bandwidth, iterations=model.iterations,
    )


def _resolve_clusters(args, ds) -> int:
    if args.clusters is not None:
        if args.clusters < 2:
            raise CliUsageError(f"--clusters must be >= 2, got {args.clusters}")
        return args.clusters
    if ds.labels is not None:
        return ds.n_classes
    raise CliUsageError(
        "--clusters is required when the dataset has no labels"
    )


def _load_input(path, args):
    ds = load_dataset(path, _parse_labels_col(args.labels_col))
    if getattr(args, "standardize", False):
        X, scales = _standardize(ds.X)
        ds.X = X
    return ds


def _embed(method: str, X: np.ndarray, c: int, args):
    """Fit ``method`` on X and return (embedding, resolved config)."""
    n, d = X.shape
    config = {
        "method": method, "c": int(c), "k": None, "m": None,
        "alpha1": None, "alpha2": None, "bandwidth": None,
        "iterations": None, "squared_kernel": bool(args.squared_kernel),
        "standardize": bool(args.standardize),
    }
    if method == "raw":
        Xc, _ = center(X)
        return Xc, config

    k = args.k if args.k is not None else default_neighbors(n, c)
    m = args.dim if args.dim is not None else c
    bandwidth = _parse_bandwidth(args.bandwidth)
    config.update(k=int(k), m=int(m))

    if method == "adaam":
        model = fit_adaam(
            X, c, k=k, m=m, iterations=args.iterations,
            alpha1=args.alpha1, alpha2=args.alpha2, bandwidth=bandwidth,
            squared_kernel=args.squared_kernel,
        )
        config.update(alpha1=model.alpha1, alpha2=model.alpha2,
                      bandwidth=model.bandwidth, iterations=model.iterations)
        return apply_model(model, X), config

    if method == "knn-lpp":
        Xc, _ = center(X)
        W, bw = knn_heat_kernel(Xc, k, bandwidth,
                                squared=args.squared_kernel,
                                return_bandwidth=True)
        config.update(bandwidth=bw)
        return Xc @ lpp(Xc, W, m).matrix, config

    raise CliUsageError(f"unknown method {method!r}")


def _evaluate_method(method: str, ds, c: int, args):
    Y, config = _embed(method, ds.X, c, args)
    config.update(rounds=int(args.rounds), seed=int(args.seed))
    report = evaluate(
        Y, ds.labels, c, args.rounds, args.seed,
        method=method, dataset=ds.name, k=config["k"], d=ds.X.shape[1],
        config=config,
    )
    return report


def _print_report(report) -> None:
    line = (
        f"{report.dataset}  method={report.method}  n={report.n} "
        f"d={report.d} c={report.c} k={report.k}"
    )
    print(line)
    if report.accuracies:
        print(
            f"  rounds={report.rounds} seed={report.seed}  "
            f"avg={report.avg:.4f}  max={report.max:.4f}  "
            f"wall={report.wall_ms:.1f}ms"
        )
    else:
        print(
            f"  rounds={report.rounds} seed={report.seed}  "
            f"no labels: accuracy unavailable  wall={report.wall_ms:.1f}ms"
        )


def _write_reports(path, reports) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report.to_dict(), allow_nan=False))
            fh.write("\n")


def _cmd_fit(args) -> int:
    ds = load_dataset(args.input, _parse_labels_col(args.labels_col))
    c = _resolve_clusters(args, ds)
    X = ds.X
    scales = None
    if args.standardize:
        X, scales = _standardize(X)
    model = fit_adaam(
        X, c, k=args.k, m=args.dim, iterations=args.iterations,
        alpha1=args.alpha1, alpha2=args.alpha2,
        bandwidth=_parse_bandwidth(args.bandwidth),
        squared_kernel=args.squared_kernel,
    )
    if scales is not None:
        model = _fold_scaling(model, scales)
    save_model(model, args.out)
    print(
        f"fit {ds.name}: n={model.n} d={model.d} c={model.c} k={model.k} "
        f"m={model.m} bandwidth={model.bandwidth:.6g} "
        f"iterations={model.iterations} -> {args.out}"
    )
    return 0


def _cmd_transform(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.input, _parse_labels_col(args.labels_col))
    Y = apply_model(model, ds.X)
    save_csv(args.out, Y, labels=ds.labels, prefix="e")
    print(f"transformed {ds.name}: {Y.shape[0]} x {Y.shape[1]} -> {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    ds = _load_input(args.input, args)
    c = _resolve_clusters(args, ds)
    report = _evaluate_method(args.method, ds, c, args)
    _print_report(report)
    if args.report:
        _write_reports(args.report, [report])
    return 0


def _cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise CliUsageError(
                f"unknown method {m!r}; choose from {', '.join(METHODS)}"
            )
    if args.k_sweep:
        try:
            ks = [int(v) for v in args.k_sweep.split(",") if v.strip()]
        except ValueError:
            raise CliUsageError(
                f"--k-sweep must be a comma list of ints, got {args.k_sweep!r}"
            ) from None
    else:
        ks = [args.k]

    reports = []
    header = f"{'dataset':<24} {'method':<8} {'k':>4} {'avg':>8} {'max':>8} {'wall_ms':>10}"
    print(header)
    print("-" * len(header))
    for path in args.input:
        ds = _load_input(path, args)
        c = _resolve_clusters(args, ds)
        for k in ks:
            args.k = k
            for method in methods:
                report = _evaluate_method(method, ds, c, args)
                reports.append(report)
                avg = f"{report.avg:.4f}" if report.avg is not None else "-"
                mx = f"{report.max:.4f}" if report.max is not None else "-"
                kk = report.k if report.k is not None else "-"
                print(
                    f"{report.dataset:<24} {report.method:<8} {kk:>4} "
                    f"{avg:>8} {mx:>8} {report.wall_ms:>10.1f}"
                )
    if args.report:
        _write_reports(args.report, reports)
    return 0


def _cmd_synth(args) -> int:
    ds = synth_blobs(args.clusters, args.n, args.dim,
                     separation=args.separation, sigma=args.sigma,
                     seed=args.seed)
    out = Path(args.out)
    if out.suffix.lower() == ".csv":
        save_csv(out, ds.X, labels=ds.labels)
    else:
        save_binary(out, ds.X, ds.labels)
    print(
        f"wrote {ds.name}: {ds.X.shape[0]} x {ds.X.shape[1]}, "
        f"{args.clusters} clusters -> {out}"
    )
    return 0


def _add_data_flags(p, multi_input=False):
    if multi_input:
        p.add_argument("--input", action="append", required=True,
                       metavar="PATH", help="dataset file (repeatable)")
    else:
        p.add_argument("--input", required=True, metavar="PATH",
                       help="dataset file (CSV or binary)")
    p.add_argument("--labels-col", default=None, metavar="COL",
                   help="CSV label column, by index or header name")


def _add_hyper_flags(p):
    p.add_argument("--clusters", type=int, default=None,
                   help="cluster count c (default: number of label classes)")
    p.add_argument("--k", type=int, default=None,
                   help="graph neighbors (default: round(log2(n/c)))")
    p.add_argument("--dim", type=int, default=None,
                   help="projection dimension m (default: c)")
    p.add_argument("--alpha1", type=float, default=2.5,
                   help="intermediate affinity sparsity factor")
    p.add_argument("--alpha2", type=float, default=5.0,
                   help="final affinity sparsity factor")
    p.add_argument("--bandwidth", default="auto",
                   help="heat kernel bandwidth, 'auto' or a positive number")
    p.add_argument("--squared-kernel", action="store_true",
                   help="use squared distances in the kernel exponent")
    p.add_argument("--iterations", type=int, default=1,
                   help="affinity re-estimation passes")
    p.add_argument("--standardize", action="store_true",
                   help="divide features by their std before fitting")


def _add_eval_flags(p):
    p.add_argument("--rounds", type=int, default=10,
                   help="evaluation rounds (each is best-of-10 k-means)")
    p.add_argument("--seed", type=int, default=0, help="base round seed")
    p.add_argument("--report", default=None, metavar="PATH",
                   help="write report JSON lines here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adaam",
                     description="Adaptive affinity metric learning")
    parser.add_argument("--version", action="version",
                        version=f"adaam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a metric model and save it as JSON")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--out", required=True, metavar="PATH",
                   help="model JSON output path")
    p.set_defaults(run=_cmd_fit)

    p = sub.add_parser("transform",
                       help="embed a dataset with a saved model")
    p.add_argument("--model", required=True, metavar="PATH")
    _add_data_flags(p)
    p.add_argument("--out", required=True, metavar="PATH",
                   help="embedded CSV output path")
    p.set_defaults(run=_cmd_transform)

    p = sub.add_parser("cluster",
                       help="fit, embed, and score k-means accuracy")
    _add_data_flags(p)
    _add_hyper_flags(p)
    _add_eval_flags(p)
    p.add_argument("--method", choices=METHODS, default="adaam")
    p.set_defaults(run=_cmd_cluster)

    p = sub.add_parser("bench", help="compare methods across datasets")
    _add_data_flags(p, multi_input=True)
    _add_hyper_flags(p)
    _add_eval_flags(p)
    p.add_argument("--methods", default=",".join(METHODS),
                   help="comma list of methods to run")
    p.add_argument("--k-sweep", default=None, metavar="K1,K2,...",
                   help="repeat the comparison for each neighbor count")
    p.set_defaults(run=_cmd_bench)

    p = sub.add_parser("synth", help="generate a gaussian blob dataset")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="total points")
    p.add_argument("--dim", type=int, required=True, help="features")
    p.add_argument("--separation", type=float, default=10.0,
                   help="min center distance in units of sigma")
    p.add_argument("--sigma", type=float, default=1.0, help="noise scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH",
                   help=".csv writes CSV, anything else the binary format")
    p.set_defaults(run=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    limit = None
    raw_threads = os.environ.get("ADAAM_THREADS")
    if raw_threads:
        try:
            limit = int(raw_threads)
            if limit < 1:
                raise ValueError
        except ValueError:
            print(
                f"error: ADAAM_THREADS must be a positive integer, "
                f"got {raw_threads!r}",
                file=sys.stderr,
            )
            return 1

    try:
        with threadpool_limits(limits=limit) if limit else nullcontext():
            return args.run(args)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
