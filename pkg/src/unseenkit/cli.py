"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric or
convergence error.  ``--out -`` writes to standard output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

from . import baselines, bench, sbsp
from .baselines import SBBParams
from .ebayes import FitConfig, fit_sbb, fit_sbsp
from .errors import DataError, DomainError, InsufficientSignalError, NumericalError
from .featureset import ZipfConfig, read_sparse, zipf_generate
from .params import dumps_params, read_params

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("unseenkit")


@contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _train(text: str) -> int | float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a row count or fraction, got {text!r}")
    if v < 1.0:
        return v
    if not v.is_integer():
        raise argparse.ArgumentTypeError(f"row count must be an integer, got {text!r}")
    return int(v)


def cmd_fit(args) -> int:
    data = read_sparse(args.input)
    counts = data.counts()
    config = FitConfig(starts=args.starts, seed=args.seed)
    fit = (fit_sbsp if args.model == "sbsp" else fit_sbb)(counts, config)
    meta = fit.to_dict()
    meta["seed"] = args.seed
    meta["optimizer"] = "nelder-mead"
    with _output(args.out) as fh:
        fh.write(dumps_params(fit.params, meta))
    if not fit.converged:
        log.warning("best start did not meet the convergence tolerance")
    return EXIT_OK


def _posterior(params, n: int, k: int, horizon: int, rare: int | None):
    if isinstance(params, SBBParams):
        if rare is None:
            return baselines.sbb_posterior_unseen(params, n, horizon)
        return baselines.sbb_posterior_unseen_rare(params, n, horizon, rare)
    if rare is None:
        return sbsp.posterior_unseen(params, n, k, horizon)
    return sbsp.posterior_unseen_rare(params, n, k, horizon, rare)


def cmd_predict(args) -> int:
    params = read_params(args.params)
    counts = read_sparse(args.input).counts()
    law = _posterior(params, counts.n, counts.k, args.horizon, args.rare)
    doc = {
        "model": params.model,
        "n": counts.n,
        "k": counts.k,
        "horizon": args.horizon,
        "rare": args.rare,
        "law": law.to_dict(),
        "mean": float(law.mean),
        "variance": float(law.variance),
    }
    if args.ci is not None:
        lo, hi = law.central_interval(args.ci)
        doc.update(ci=args.ci, lo=int(lo), hi=int(hi))
    with _output(args.out) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    params = read_params(args.params)
    if not isinstance(params, sbsp.SBSPParams):
        raise DataError("sample needs an sbsp parameter document")
    data = sbsp.sample_dataset(params, args.n, args.seed)
    with _output(args.out) as fh:
        fh.write(data.serialize())
    return EXIT_OK


def cmd_zipf(args) -> int:
    data = zipf_generate(ZipfConfig(args.xi, args.kmax, args.l, args.seed))
    with _output(args.out) as fh:
        fh.write(data.serialize())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    data = read_sparse(args.input)
    config = bench.BenchmarkConfig(
        methods=bench.parse_methods(args.methods),
        train=args.train,
        replicates=args.replicates,
        seed=args.seed,
        rare_r=args.rare,
        ci=args.ci,
        horizon=args.horizon,
        loo=args.loo,
        fit_starts=args.fit_starts,
    )
    rows = bench.run_benchmark(data, config)
    with _output(args.out) as fh:
        bench.write_csv(rows, bench.REPORT_HEADER, fh)
    return EXIT_OK


def cmd_coverage(args) -> int:
    data = read_sparse(args.input)
    rows = bench.coverage_study(
        data,
        args.train,
        args.replicates,
        args.alpha_grid,
        args.seed,
        methods=args.methods.split(","),
        fit_starts=args.fit_starts,
    )
    with _output(args.out) as fh:
        bench.write_csv(rows, bench.COVERAGE_HEADER, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unseenkit", description="Predict how many unseen features future samples will reveal."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="empirical-Bayes fit of a prior to a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True, choices=("sbsp", "sbb"))
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior law of the number of new features")
    p.add_argument("--params", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--rare", type=int, default=None, help="count new features seen exactly this often")
    p.add_argument("--ci", type=float, default=None, help="level of the central credible interval")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sample", help="draw a dataset from the SB-SP prior")
    p.add_argument("--params", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("zipf", help="draw a Zipf benchmark dataset")
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_zipf)

    p = sub.add_parser("evaluate", help="held-out accuracy of several methods")
    p.add_argument("--input", required=True)
    p.add_argument("--methods", required=True, help="e.g. sbsp,sbb,jackknife:4,gt:poisson")
    p.add_argument("--train", type=_train, required=True, help="row count or fraction in (0, 1)")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rare", type=int, default=None)
    p.add_argument("--ci", type=float, default=None)
    p.add_argument("--horizon", type=int, default=None, help="largest horizon (default: all held-out rows)")
    p.add_argument("--loo", action="store_true", help="add leave-one-out stability bands")
    p.add_argument("--fit-starts", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("coverage", help="coverage of credible intervals on held-out data")
    p.add_argument("--input", required=True)
    p.add_argument("--train", type=_train, required=True)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--alpha-grid", type=_float_list, required=True, help="e.g. 0.5,0.8,0.95")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="sbsp,sbb")
    p.add_argument("--fit-starts", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coverage)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, InsufficientSignalError) as exc:
        print(f"unseenkit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"unseenkit: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"unseenkit: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
