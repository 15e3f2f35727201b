"""Simulate-and-refit replication studies and model comparison tables."""
from __future__ import annotations

import io
import time
from dataclasses import asdict, dataclass

import numpy as np

from .rvine import (as_data, count_parameters, information_criteria, random_rvine_model,
                    rvine_loglik, rvine_simulate)
from .select import (ComponentVine, FitTrace, SelectionConfig, dissmann_select,
                     fill_between_components, merge_subvines, rvine_cluster_select)

METRIC_COLUMNS = ("loglik", "nparams", "aic", "bic", "gic", "seconds")


@dataclass(frozen=True)
class ModelRow:
    method: str
    replicate: int
    loglik: float
    nparams: int
    aic: float
    bic: float
    gic: float
    seconds: float
    fitted: int = -1


def evaluate_model(model, sample, method="model", replicate=0, seconds=0.0, fitted=-1):
    data = as_data(sample)
    ll = rvine_loglik(model, data)[0]
    p = count_parameters(model)
    ic = information_criteria(ll, p, data.shape[0])
    return ModelRow(method, replicate, ll, p, ic.aic, ic.bic, ic.gic, seconds, fitted)


def compare_models(models, sample):
    """One row per named model evaluated on ``sample``."""
    data = as_data(sample)
    rows = []
    for name, model in models.items():
        if model.d != data.shape[1]:
            raise ValueError(f"model {name!r} has dimension {model.d}, data has {data.shape[1]}")
        rows.append(evaluate_model(model, data, name, seconds=float(model.meta.get("seconds", 0.0))))
    return rows


def block_rvine_model(sizes, rng=None, **kwargs):
    """Independent random vines on consecutive blocks of variables.

    Block ``b`` holds the next ``sizes[b]`` labels; ``kwargs`` go to
    :func:`random_rvine_model`.  Pairs across blocks are independent, so any
    prefix of whole blocks is again a block model.
    """
    rng = np.random.default_rng(rng)
    d = int(sum(sizes))
    subs, isolated, start = [], [], 1
    for size in sizes:
        labels = tuple(range(start, start + size))
        if size == 1:
            isolated.append(start)
        else:
            subs.append(ComponentVine(random_rvine_model(size, rng, **kwargs), labels))
        start += size
    partial = merge_subvines(subs, isolated, d)
    # no fitting happens at fill level 0, so the sample is only a shape carrier
    return fill_between_components(partial, np.full((1, d), 0.5), 0)


def _run_cluster(sample, config):
    res = rvine_cluster_select(sample, config)
    return res.model, res.trace


def _run_dissmann(sample, config):
    trace = FitTrace()
    return dissmann_select(sample, config, trace), trace


METHODS = {"cluster": _run_cluster, "dissmann": _run_dissmann}


def replication_study(truth, n, replications, configs, seed=0, include_truth=True):
    """Simulate ``replications`` samples from ``truth`` and refit each method.

    ``configs`` maps a method name (``"cluster"`` or ``"dissmann"``, optionally
    suffixed like ``"cluster:25"``) to its :class:`SelectionConfig`.
    Replicate ``r`` uses the simulation seed ``seed + r``.
    """
    rows = []
    for r in range(replications):
        sample = rvine_simulate(truth, n, seed + r)
        if include_truth:
            rows.append(evaluate_model(truth, sample, "truth", r))
        for name, config in configs.items():
            kind = name.split(":", 1)[0]
            if kind not in METHODS:
                raise ValueError(f"unknown method {kind!r}; expected one of {sorted(METHODS)}")
            t0 = time.perf_counter()
            model, trace = METHODS[kind](sample, config)
            dt = time.perf_counter() - t0
            rows.append(evaluate_model(model, sample, name, r, dt, trace.fitted()))
    return rows


def rows_to_table(rows, delimiter=","):
    cols = ["method", "replicate", "loglik", "nparams", "aic", "bic", "gic", "seconds", "fitted"]
    buf = io.StringIO()
    buf.write(delimiter.join(cols) + "\n")
    for row in rows:
        d = asdict(row)
        buf.write(delimiter.join(_fmt(d[c]) for c in cols) + "\n")
    return buf.getvalue()


def rows_to_long(rows, delimiter=","):
    """Tidy ``replicate, method, metric, value`` lines for plotting tools."""
    buf = io.StringIO()
    buf.write(delimiter.join(["replicate", "method", "metric", "value"]) + "\n")
    for row in rows:
        d = asdict(row)
        for metric in METRIC_COLUMNS:
            buf.write(delimiter.join([str(row.replicate), row.method, metric, _fmt(d[metric])]) + "\n")
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summarize(rows, metric):
    """Median of ``metric`` per method."""
    out = {}
    for method in sorted({r.method for r in rows}):
        vals = [getattr(r, metric) for r in rows if r.method == method]
        out[method] = float(np.median(vals))
    return out
