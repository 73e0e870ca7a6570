"""Command-line interface: ``pocre {fit,predict,simulate,screen}``.

Exit codes: 0 success, 2 malformed input or flags, 3 dimension mismatch,
4 numeric failure.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
import warnings

import numpy as np

from . import core, io, screening, simbench, tuning

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SHAPE = 3
EXIT_NUMERIC = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read(path):
    try:
        return io.read_table(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_INPUT) from None
    except io.TableError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


def _grid(text):
    try:
        grid = tuning.parse_grid(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:step:stop or a comma list") from None
    if not grid or min(grid) <= 0:
        raise argparse.ArgumentTypeError("grid values must be positive")
    return grid


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# --------------------------------------------------------------------------- #
# commands
# --------------------------------------------------------------------------- #


def cmd_fit(args, out=None):
    out = out or sys.stdout
    xh, X = _read(args.x)
    yh, Y = _read(args.y)
    if X.shape[0] != Y.shape[0]:
        raise CliError(f"x has {X.shape[0]} rows but y has {Y.shape[0]}", EXIT_SHAPE)
    if X.shape[0] < 2:
        raise CliError("need at least two rows", EXIT_INPUT)
    cv_info = None
    n = X.shape[0]
    cap = min(args.max_components, core.default_max_components(n))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", core.ConvergenceWarning)
            lam = 1.0 if args.baseline_pls else args.lam
            if args.cv and args.baseline_pls:
                fold_cap = core.default_max_components(n - -(-n // args.folds))
                rep = tuning.cross_validate_components(
                    X, Y, min(cap, fold_cap), args.folds, args.seed, standardize=args.standardize)
                cap = rep.best
                cv_info = {"folds": rep.folds, "seed": rep.fold_assignment_seed,
                           "n_components": list(rep.n_components), "cv_error": [float(e) for e in rep.cv_error]}
            elif args.cv:
                rep = tuning.cross_validate(X, Y, args.grid, args.folds, args.seed,
                                            standardize=args.standardize, max_components=cap)
                lam = rep.best_lambda
                cv_info = {"folds": rep.folds, "seed": rep.fold_assignment_seed,
                           "grid": list(rep.grid), "cv_error": [float(e) for e in rep.cv_error]}
            model = core.fit(core.prepare(X, Y, args.standardize), lam, cap, args.baseline_pls)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise CliError(f"numeric failure: {exc}", EXIT_NUMERIC) from None
    if not np.all(np.isfinite(model.beta)):
        raise CliError("numeric failure: non-finite coefficients", EXIT_NUMERIC)

    provenance = {
        "x_sha256": io.file_digest(args.x),
        "y_sha256": io.file_digest(args.y),
        "seed": args.seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "cv": cv_info,
    }
    io.save_model(args.out, model, xh, yh, provenance)

    print(f"method: {'pls-baseline' if args.baseline_pls else 'pocre'}", file=out)
    if not args.baseline_pls:
        print(f"lambda: {model.lam:g}{' (cross-validated)' if args.cv else ''}", file=out)
    print(f"components: {model.n_components} (stop: {model.stop_reason})", file=out)
    for c in model.components:
        flag = "" if c.converged else "  [not converged]"
        print(f"  component {c.index}: support {c.support.size}{flag}", file=out)
    print(f"selected predictors: {model.selected().size} of {X.shape[1]}", file=out)
    print(f"model written to {args.out}", file=out)
    return EXIT_OK


def cmd_predict(args, out=None):
    out = out or sys.stdout
    try:
        model, _, response_names = io.load_model(args.model)
    except OSError as exc:
        raise CliError(f"cannot read {args.model}: {exc.strerror}", EXIT_INPUT) from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"malformed model file: {exc}", EXIT_INPUT) from None
    _, X = _read(args.x)
    if X.shape[1] != model.beta.shape[0]:
        raise CliError(f"model expects {model.beta.shape[0]} columns, x has {X.shape[1]}", EXIT_SHAPE)
    pred = core.predict(model, X)
    io.write_table(args.out, response_names, pred)
    print(f"wrote {pred.shape[0]} x {pred.shape[1]} predictions to {args.out}", file=out)
    return EXIT_OK


def cmd_simulate(args, out=None):
    out = out or sys.stdout
    if args.lam is not None:
        policy = simbench.LambdaPolicy.fixed(args.lam, args.folds)
    else:
        policy = simbench.LambdaPolicy.cv(args.grid, args.folds)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", core.ConvergenceWarning)
            records = simbench.run_benchmark(
                args.case, args.n, args.replicates, tuple(args.methods), policy, args.seed,
                p=args.p, n_jobs=args.jobs,
            )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    io.atomic_write_text(args.out, simbench.records_to_csv(records))
    if args.summary_out:
        io.atomic_write_text(args.summary_out, simbench.summary_to_csv(records))
    failed = sum(r.failed for r in records)
    summ = simbench.summarize(records)
    for (n, method, case), st in sorted(summ.items(), key=lambda kv: (kv[0][2], -kv[0][0], kv[0][1])):
        (lm, ls), (fm, fs) = st["loss"], st["fdr"]
        print(f"case {case} n={n} {method:13s} loss {lm:9.3f} ({ls:.3f})  fdr {fm:.4f} ({fs:.4f})", file=out)
    print(f"{len(records)} records written to {args.out}" + (f" ({failed} failed)" if failed else ""), file=out)
    return EXIT_OK


def cmd_screen(args, out=None):
    out = out or sys.stdout
    xh, X = _read(args.x)
    _, Y = _read(args.y)
    if X.shape[0] != Y.shape[0]:
        raise CliError(f"x has {X.shape[0]} rows but y has {Y.shape[0]}", EXIT_SHAPE)
    top = args.top if args.top is not None else X.shape[1]
    if top > X.shape[1]:
        raise CliError(f"--top {top} exceeds the {X.shape[1]} predictors", EXIT_SHAPE)
    order, values = screening.rank_by_occ(X, Y, top)
    io.write_table(args.out, [xh[i] for i in order], X[:, order])
    if args.report:
        lines = ["rank,index,name,occ"]
        for r, i in enumerate(order, start=1):
            lines.append(f"{r},{i + 1},{xh[i]},{float(values[i])!r}")
        io.atomic_write_text(args.report, "\n".join(lines) + "\n")
    print(f"kept {order.size} of {X.shape[1]} predictors (min OCC {float(values[order[-1]]):.4f})", file=out)
    return EXIT_OK


# --------------------------------------------------------------------------- #
# parser
# --------------------------------------------------------------------------- #


def build_parser():
    parser = argparse.ArgumentParser(prog="pocre", description="Penalized orthogonal-components regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a model from CSV tables")
    f.add_argument("--x", required=True, help="predictor table (rows = samples)")
    f.add_argument("--y", required=True, help="response table")
    lam = f.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=_positive_float, default=None,
                     help="fixed thresholding parameter")
    lam.add_argument("--cv", action="store_true", help="choose lambda by cross-validation (default)")
    f.add_argument("--folds", type=_positive_int, default=10)
    f.add_argument("--grid", type=_grid, default=tuning.DEFAULT_GRID, help="start:step:stop (default 0.80:0.01:1.00)")
    f.add_argument("--max-components", type=_positive_int, default=core.MAX_COMPONENTS_CAP)
    f.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    f.add_argument("--baseline-pls", action="store_true", help="disable thresholding (NIPALS PLS)")
    f.add_argument("--out", required=True, help="model file to write")
    f.add_argument("--seed", type=int, default=0, help="fold-assignment seed")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    s = sub.add_parser("simulate", help="run the simulation benchmark")
    s.add_argument("--case", type=int, nargs="+", required=True, choices=simbench.CASE_IDS)
    s.add_argument("--n", type=_positive_int, nargs="+", default=[100])
    s.add_argument("--p", type=_positive_int, default=simbench.DEFAULT_P)
    s.add_argument("--replicates", type=_positive_int, default=1)
    lam = s.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=_positive_float, default=None)
    lam.add_argument("--cv", action="store_true", help="cross-validate lambda (default)")
    s.add_argument("--folds", type=_positive_int, default=10)
    s.add_argument("--grid", type=_grid, default=tuning.DEFAULT_GRID)
    s.add_argument("--methods", nargs="+", choices=simbench.METHODS, default=list(simbench.METHODS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1, help="parallel workers (joblib)")
    s.add_argument("--out", required=True, help="per-replicate CSV")
    s.add_argument("--summary-out", help="summary CSV (means and standard errors)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("screen", help="rank predictors by overall correlation (OCC)")
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--top", type=_positive_int, default=None)
    c.add_argument("--out", required=True, help="table of the kept predictor columns")
    c.add_argument("--report", help="rank table (rank, index, name, occ)")
    c.set_defaults(func=cmd_screen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "lam", None) is None and hasattr(args, "cv"):
        args.cv = True
    try:
        return args.func(args)
    except CliError as exc:
        print(f"pocre {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
