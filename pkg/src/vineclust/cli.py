"""Command-line interface: ``vineclust {fit,simulate,evaluate,compare,glasso-path}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import time

import numpy as np

from . import __version__
from .copula import METRICS, FitError, parse_family
from .data import DataError, format_delimited, ingest
from .fileio import atomic_write_text
from .glasso import (GlassoConvergenceError, glasso_fit, glasso_path, path_report, precision_coo,
                     select_partition, to_z_scale)
from .rvine import (RVineStructureError, count_parameters, information_criteria, load_model,
                    rvine_loglik, rvine_simulate, save_model)
from .select import (FitTrace, SelectionConfig, SelectionError, dissmann_select, fit_summary,
                     rvine_cluster_select)
from .study import compare_models, replication_study, rows_to_long, rows_to_table

log = logging.getLogger("vineclust")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _family_list(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise argparse.ArgumentTypeError("empty family list")
    for name in names:
        try:
            parse_family(name)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return tuple(names)


def _float_list(text):
    try:
        vals = [float(s) for s in text.replace(";", ",").split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty lambda list")
    return tuple(vals)


def _add_selection_flags(p):
    # defaults live in SelectionConfig so that a --config file can fill unset flags
    g = p.add_argument_group("selection")
    g.add_argument("--config", help="JSON file with SelectionConfig fields; flags override it")
    g.add_argument("--method", choices=("cluster", "dissmann"), default=None,
                   help="selector (default cluster)")
    g.add_argument("--d-max", type=int, default=None, dest="d_max",
                   help="threshold dimension: largest allowed component size (default 25)")
    g.add_argument("--fill-level", type=int, default=None, dest="fill_level",
                   help="trees joining components that are estimated (default ceil(log d))")
    g.add_argument("--families", type=_family_list, default=None,
                   help="comma-separated pair-copula families")
    g.add_argument("--fill-families", type=_family_list, default=None, dest="fill_families")
    g.add_argument("--indep-alpha", type=float, default=None, dest="indep_alpha",
                   help="level of the independence pre-test (off by default)")
    g.add_argument("--truncation", type=int, default=None)
    g.add_argument("--metric", choices=METRICS, default=None, help="pair weight (default aic)")
    g.add_argument("--nlambda", type=int, default=None, help="path length (default 30)")
    g.add_argument("--lambda", type=_float_list, default=None, dest="lambdas",
                   help="explicit penalty values, comma separated")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--threads", type=int, default=None)


# flag dest -> SelectionConfig field
_FLAG_FIELDS = {"d_max": "d_T", "fill_level": "k_F", "families": "families",
                "fill_families": "fill_families", "indep_alpha": "alpha",
                "truncation": "truncation", "metric": "metric", "nlambda": "J",
                "lambdas": "lambdas", "seed": "seed", "threads": "threads"}
_CONFIG_KEYS = frozenset(_FLAG_FIELDS.values()) | {"method", "prune"}


def _read_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a JSON object")
    unknown = sorted(set(doc) - _CONFIG_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown config keys {unknown}")
    return doc


def _method(args):
    doc = _read_config(args.config) if args.config else {}
    method = args.method or doc.get("method", "cluster")
    if method not in ("cluster", "dissmann"):
        raise UsageError(f"unknown method {method!r}")
    return method


def _add_scale(p):
    p.add_argument("--scale", choices=("u", "x"), default="u",
                   help="u: copula data in (0,1); x: raw data, rank transformed")


def build_parser():
    parser = _Parser(prog="vineclust", description="Regular-vine copula selection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("fit", help="select and estimate an R-vine")
    p.add_argument("data")
    p.add_argument("-o", "--output", required=True, help="model document (JSON)")
    p.add_argument("--report", help="run report (delimited text)")
    p.add_argument("--trace", help="per-tree fit counters (delimited text)")
    p.add_argument("--no-timestamps", action="store_true",
                   help="omit stage timings so repeated runs write identical files")
    _add_scale(p)
    _add_selection_flags(p)

    p = sub.add_parser("simulate", help="draw a u-scale sample from a model")
    p.add_argument("model")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("evaluate", help="log-likelihood and information criteria")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("-o", "--output", help="report file (default stdout)")
    _add_scale(p)

    p = sub.add_parser("compare", help="compare models or run a replication study")
    p.add_argument("models", nargs="*")
    p.add_argument("--data", help="dataset for comparing given models")
    p.add_argument("--truth", help="model to simulate replications from")
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("-n", type=int, default=1000, help="observations per replication")
    p.add_argument("--methods", default="cluster,dissmann")
    p.add_argument("-o", "--output", help="comparison table (default stdout)")
    p.add_argument("--long", help="long-format plot data")
    _add_scale(p)
    _add_selection_flags(p)

    p = sub.add_parser("glasso-path", help="screening path summary and partition choice")
    p.add_argument("data")
    p.add_argument("-o", "--output", help="path report (default stdout)")
    p.add_argument("--nlambda", type=int, default=30)
    p.add_argument("--lambda", type=_float_list, default=None, dest="lambdas")
    p.add_argument("--d-max", type=int, default=None, dest="d_max")
    p.add_argument("--precision", action="store_true",
                   help="also estimate precision matrices (adds a Gaussian log-likelihood column)")
    p.add_argument("--precision-out", help="sparse precision of the selected graph (i,j,value)")
    _add_scale(p)
    return parser


def _config(args):
    kw = _read_config(args.config) if args.config else {}
    kw.pop("method", None)
    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest)
        if value is not None:
            kw[name] = value
    for key in ("families", "fill_families", "lambdas"):
        if kw.get(key) is not None:
            kw[key] = tuple(kw[key])
    if kw.get("J", 30) < 2 and kw.get("lambdas") is None:
        raise UsageError("--nlambda must be at least 2")
    if kw.get("threads", 1) < 1:
        raise UsageError("--threads must be at least 1")
    try:
        return SelectionConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _write_or_print(path, text):
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def run_report(model, trace=None, extra=None):
    """``key,value`` lines summarizing a fitted model."""
    meta = model.meta
    lines = [("d", model.d)]
    for key in ("method", "n", "loglik", "nparams", "aic", "bic", "gic", "T", "lambda_T",
                "p_T", "delta_T", "pairs_fitted", "pairs_forced"):
        if key in meta:
            lines.append((key, meta[key]))
    for stage, sec in (meta.get("timestamps") or {}).items():
        lines.append((f"seconds_{stage}", sec))
    for code, count in model.family_histogram().items():
        lines.append((f"family_{code}", count))
    dfs = sorted(model.copulas[i][j].theta2 for i, j in model.cells()
                 if model.copulas[i][j].family.name == "STUDENT")
    lines.append(("t_df", ";".join(repr(float(v)) for v in dfs)))
    for k, v in (extra or {}).items():
        lines.append((k, v))
    buf = io.StringIO()
    buf.write("key,value\n")
    for k, v in lines:
        buf.write(f"{k},{v!r}\n" if isinstance(v, float) else f"{k},{v}\n")
    return buf.getvalue()


def cmd_fit(args):
    ds = ingest(args.data, args.scale)
    config = _config(args)
    method = _method(args)
    t0 = time.perf_counter()
    if method == "cluster":
        res = rvine_cluster_select(ds.sample, config)
        model, trace, choice = res.model, res.trace, res.choice
    else:
        trace = FitTrace()
        try:
            model = dissmann_select(ds.sample, config, trace)
        except (FitError, ValueError, ArithmeticError) as exc:
            raise SelectionError("dissmann", exc) from exc
        choice = None
    total = time.perf_counter() - t0
    model = fit_summary(model, ds.sample, method, trace, choice, total)
    model = model.with_meta(config={
        "d_T": config.d_T, "k_F": config.fill_level(ds.d), "metric": config.metric,
        "families": list(config.families), "fill_families": list(config.fill_family_set(ds.d)),
        "alpha": config.alpha, "truncation": config.truncation, "J": config.J,
        "lambdas": list(config.lambdas) if config.lambdas else None, "seed": config.seed})
    save_model(model, args.output, timestamps=not args.no_timestamps)
    report = run_report(model, trace)
    if args.report:
        atomic_write_text(args.report, report)
    if args.trace:
        atomic_write_text(args.trace, trace.report())
    m = model.meta
    print(f"{method}: d={ds.d} n={ds.n} loglik={m['loglik']:.4f} p={m['nparams']} "
          f"AIC={m['aic']:.4f} BIC={m['bic']:.4f} GIC={m['gic']:.4f} -> {args.output}")
    return EXIT_OK


def cmd_simulate(args):
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    model = _load(args.model)
    sample = rvine_simulate(model, args.n, args.seed)
    atomic_write_text(args.output, format_delimited(sample.data, model.names))
    return EXIT_OK


def _load(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a model document ({exc})") from None


def cmd_evaluate(args):
    model = _load(args.model)
    ds = ingest(args.data, args.scale)
    if ds.d != model.d:
        raise DataError(f"data has {ds.d} columns, model dimension is {model.d}")
    ll = rvine_loglik(model, ds.data)[0]
    p = count_parameters(model)
    ic = information_criteria(ll, p, ds.n)
    text = (f"key,value\nn,{ds.n}\nd,{ds.d}\nloglik,{ll!r}\nnparams,{p}\naic,{ic.aic!r}\n"
            f"bic,{ic.bic!r}\ngic,{ic.gic!r}\n")
    _write_or_print(args.output, text)
    return EXIT_OK


def cmd_compare(args):
    if args.truth:
        truth = _load(args.truth)
        if args.replications < 1:
            raise UsageError("--replications must be at least 1")
        config = _config(args)
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        for m in methods:
            if m not in ("cluster", "dissmann"):
                raise UsageError(f"unknown method {m!r}")
        rows = replication_study(truth, args.n, args.replications,
                                 {m: config for m in methods}, seed=config.seed)
    else:
        if not args.data or not args.models:
            raise UsageError("compare needs --data and at least one model, or --truth")
        ds = ingest(args.data, args.scale)
        models = {}
        for path in args.models:
            model = _load(path)
            if model.d != ds.d:
                raise DataError(f"model {path} has dimension {model.d}, data has {ds.d}")
            name = path if path not in models else f"{path}#{len(models) + 1}"
            models[name] = model
        rows = compare_models(models, ds.data)
    _write_or_print(args.output, rows_to_table(rows))
    if args.long:
        atomic_write_text(args.long, rows_to_long(rows))
    return EXIT_OK


def cmd_glasso_path(args):
    ds = ingest(args.data, args.scale)
    if args.nlambda < 2 and args.lambdas is None:
        raise UsageError("--nlambda must be at least 2")
    path = glasso_path(to_z_scale(ds.data), args.nlambda, args.lambdas, precision=args.precision)
    _write_or_print(args.output, path_report(path))
    if args.d_max is not None:
        choice = select_partition(path, args.d_max)
        parts = " | ".join(" ".join(str(v) for v in c) for c in choice.partition)
        print(f"T={choice.T} lambda={choice.lam!r} p_T={choice.p} delta_T={choice.delta} "
              f"partition: {parts}", file=sys.stderr)
        if args.precision_out:
            atomic_write_text(args.precision_out, precision_coo(glasso_fit(path.S, choice.lam)))
    elif args.precision_out:
        raise UsageError("--precision-out needs --d-max to pick a graph")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "evaluate": cmd_evaluate,
            "compare": cmd_compare, "glasso-path": cmd_glasso_path}

_NUMERIC = (FitError, GlassoConvergenceError, np.linalg.LinAlgError, ArithmeticError, AssertionError)


def _exit_code(exc):
    if isinstance(exc, SelectionError):
        return _exit_code(exc.cause)
    if isinstance(exc, _NUMERIC):
        return EXIT_NUMERIC
    return EXIT_DATA


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"vineclust {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SelectionError, DataError, RVineStructureError, ValueError, KeyError, OSError,
            *_NUMERIC) as exc:
        print(f"vineclust {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
