"""``vrspam`` command line: stats | train | cv | protocol | eval | check.

Exit codes: 0 success, 1 solver or configuration error, 2 I/O or parse error,
3 failed invariant checks.  Diagnostics go to stderr; results to stdout or files.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict

import numpy as np

from .analysis import run_invariant_suite
from .dataio import (DegenerateDataError, ParseError, compute_stats, load_dataset, normalize,
                     split)
from .experiment import (ALGORITHMS, DEFAULT_GRID, CvConfig, RunConfig, cross_validate,
                         load_model, prepare, reference_optimum, repeated_holdout, save_model,
                         summarize, train_model, write_trace)
from .objective import auc_score
from .solvers import ConfigError, ConvergenceError, StepSizeWarning, WarmStart

log = logging.getLogger("vrspam")

EXIT_OK, EXIT_SOLVER, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3


def _grid(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_run_args(p: argparse.ArgumentParser, holdout: str = "required") -> None:
    p.add_argument("data", help="LIBSVM file ('-' for stdin)")
    if holdout != "none":
        group = p.add_mutually_exclusive_group(required=holdout == "required")
        group.add_argument("--test", dest="test_path", help="separate LIBSVM test file")
        group.add_argument("--split", dest="split_fraction", type=float,
                           help="train fraction of a seeded shuffle of DATA")
    p.add_argument("--algo", choices=ALGORITHMS, default="vrspam")
    p.add_argument("--reg", choices=["l2", "elasticnet"], default="l2")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--beta1", type=float, default=0.0)
    step = p.add_mutually_exclusive_group()
    step.add_argument("--eta", type=float, help="constant step size")
    step.add_argument("--theta", type=float, default=0.5,
                      help="eta = theta * beta / (128 M^4) when --eta is absent")
    p.add_argument("--m", type=int, help="inner-loop length (default n)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", action="store_true", help="scale samples to max norm 1")
    p.add_argument("--warm-start", choices=[w.value for w in WarmStart], default="zero")
    p.add_argument("--spam-c", type=float, help="SPAM schedule constant (default 1/beta)")
    p.add_argument("--tolerance", type=float, default=1e-10, help="pgd stopping step norm")


def _run_config(args) -> RunConfig:
    return RunConfig(algo=args.algo, reg=args.reg, beta=args.beta, beta1=args.beta1,
                     eta=args.eta, theta=args.theta, m=args.m, epochs=args.epochs,
                     seed=args.seed, normalize=args.normalize, warm_start=args.warm_start,
                     spam_c=args.spam_c, tolerance=args.tolerance)


def _cv_config(args) -> CvConfig:
    return CvConfig(folds=args.folds, beta_grid=args.beta_grid, beta1_grid=args.beta1_grid)


def _load_split(args):
    data = load_dataset(args.data)
    if getattr(args, "test_path", None):
        return data, load_dataset(args.test_path)
    if getattr(args, "split_fraction", None) is not None:
        return split(data, args.split_fraction, args.seed)
    return data, None


def cmd_stats(args) -> int:
    data = load_dataset(args.data)
    if args.normalize:
        data = normalize(data)
    st = compute_stats(data)
    out = {"n": data.n, "d": data.dimension, "n_pos": st.n_pos, "n_neg": st.n_neg,
           "p": st.p, "M": st.max_norm, "eta_max": args.beta / (128.0 * st.max_norm**4),
           "beta": args.beta}
    json.dump(out, sys.stdout, indent=1)
    print()
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _run_config(args)
    train, test = _load_split(args)
    train, test = prepare(train, test, cfg.normalize)
    if args.ref_path:
        w_ref, _ = load_model(args.ref_path)
        if w_ref.shape[0] < train.dimension:
            w_ref = np.pad(w_ref, (0, train.dimension - w_ref.shape[0]))
    elif cfg.algo == "pgd":
        w_ref = reference_optimum(train, cfg)
    else:
        w_ref = None
    result = train_model(train, cfg, test=test, w_ref=w_ref)
    if args.trace_path:
        with open(args.trace_path, "w", newline="") as fh:
            write_trace(result.trace, fh, timing=not args.no_timing)
    if args.model_path:
        meta = asdict(cfg)
        meta["train_n"] = train.n
        save_model(args.model_path, result.weights, meta)
    auc = auc_score(test.X @ result.weights, test.y)
    print(f"test_auc={auc:.4f}")
    return EXIT_OK


def cmd_cv(args) -> int:
    cfg = _run_config(args)
    train, _ = _load_split(args)
    result = cross_validate(train, cfg, _cv_config(args), jobs=args.jobs)
    json.dump(result.to_dict(), sys.stdout, indent=1)
    print()
    return EXIT_OK


def cmd_protocol(args) -> int:
    cfg = _run_config(args)
    data = load_dataset(args.data)
    runs = repeated_holdout(data, cfg, _cv_config(args), runs=args.runs,
                            train_fraction=args.train_fraction, jobs=args.jobs)
    json.dump(summarize(runs), sys.stdout, indent=1)
    print()
    return EXIT_OK


def cmd_eval(args) -> int:
    w, _ = load_model(args.model)
    data = load_dataset(args.data)
    if data.dimension > w.shape[0]:
        raise ConfigError(f"data has {data.dimension} features, model only {w.shape[0]}")
    data = data.with_dimension(w.shape[0])
    print(f"{auc_score(data.X @ w, data.y):.4f}")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _run_config(args)
    data = load_dataset(args.data)
    if cfg.normalize:
        data = normalize(data)
    report = run_invariant_suite(data, cfg.regularizer(), seed=args.seed, draws=args.draws)
    json.dump(report.to_dict(), sys.stdout, indent=1)
    print()
    for c in report.checks:
        log.info("%-22s %s  worst margin %.3e", c.name, "pass" if c.passed else "FAIL",
                 c.worst_margin)
    return EXIT_OK if report.passed else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrspam", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics as JSON")
    p.add_argument("data")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--beta", type=float, default=1.0, help="beta used for eta_max")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train one model, write trace and model")
    _add_run_args(p)
    p.add_argument("--trace", dest="trace_path")
    p.add_argument("--model", dest="model_path")
    p.add_argument("--ref", dest="ref_path", help="model JSON holding a reference optimum")
    p.add_argument("--no-timing", action="store_true",
                   help="leave elapsed_ms empty so traces are byte-reproducible")
    p.set_defaults(func=cmd_train)

    for name, func, holdout in [("cv", cmd_cv, "optional"), ("protocol", cmd_protocol, "none")]:
        p = sub.add_parser(name, help={
            "cv": "stratified k-fold grid search over beta (and beta1)",
            "protocol": "repeated 80/20 holdout with CV model selection"}[name])
        _add_run_args(p, holdout)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--beta-grid", type=_grid, default=list(DEFAULT_GRID))
        p.add_argument("--beta1-grid", type=_grid, default=list(DEFAULT_GRID))
        p.add_argument("--jobs", type=int, default=1)
        if name == "protocol":
            p.add_argument("--runs", type=int, default=20)
            p.add_argument("--train-fraction", type=float, default=0.8)
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="AUC of a saved model on a LIBSVM file")
    p.add_argument("model")
    p.add_argument("data")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="numerical invariant suite; exit 3 on failure")
    _add_run_args(p, "none")
    p.add_argument("--draws", type=int, default=1000)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("once", StepSizeWarning)
            return args.func(args)
    except (OSError, ParseError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ConvergenceError, DegenerateDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
