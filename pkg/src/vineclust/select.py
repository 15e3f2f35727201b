"""Structure selection for regular vines.

Two selectors share one tree-by-tree engine:

* :func:`dissmann_select` picks every tree as a maximum spanning tree under
  absolute Kendall's tau and fits pair copulas on the chosen edges only.
* :func:`select_component_rvine` works inside one connected component of a
  sparse Gaussian graph ``H``.  Pairs that are not edges of ``H`` (first
  tree) or that are separated in ``H`` by their conditioning set (higher
  trees) are set to independence without fitting; all other candidates are
  fitted and the spanning tree maximizes the fitted weight.

:func:`rvine_cluster_select` partitions the variables along a screening
path, runs the component selector on each part, merges the sub-vines into
one matrix and estimates the connecting pair copulas in the first trees.
"""
from __future__ import annotations

import io
import math
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .copula import (DEFAULT_FAMILIES, INDEPENDENCE, METRICS, FitResult, independence_result,
                     kendall_tau, one_parametric, select_pair_copula)
from .glasso import (covariance_path, glasso_fit, precision_graph, sample_covariance,
                     select_partition, to_z_scale)
from .graphs import UndirectedGraph, connected_components, max_spanning_tree, separates
from .rvine import (CopulaSample, RVineModel, admissible_entries, as_data, column_sets, count_parameters,
                    information_criteria, row_of_tree, rvine_loglik, truncate)

LARGE_D = 500


class SelectionError(RuntimeError):
    """A selection stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def default_fill_level(d):
    return max(0, math.ceil(math.log(d))) if d > 1 else 0


@dataclass(frozen=True)
class SelectionConfig:
    """Settings shared by the selectors.

    ``k_F=None`` means ``ceil(log d)``.  ``fill_families=None`` reuses
    ``families``, restricted to one-parametric families when ``d > 500``.
    """

    d_T: int = 25
    k_F: int | None = None
    metric: str = "aic"
    families: tuple = DEFAULT_FAMILIES
    fill_families: tuple | None = None
    alpha: float | None = None
    truncation: int | None = None
    J: int = 30
    lambdas: tuple | None = None
    seed: int = 0
    prune: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.d_T < 1:
            raise ValueError(f"d_T must be >= 1, got {self.d_T}")
        if self.k_F is not None and self.k_F < 0:
            raise ValueError(f"k_F must be >= 0, got {self.k_F}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not self.families:
            raise ValueError("empty family set")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.truncation is not None and self.truncation < 1:
            raise ValueError(f"truncation must be >= 1, got {self.truncation}")
        if self.J < 2 and self.lambdas is None:
            raise ValueError(f"J must be >= 2, got {self.J}")
        object.__setattr__(self, "families", tuple(self.families))
        if self.fill_families is not None:
            object.__setattr__(self, "fill_families", tuple(self.fill_families))

    def fill_level(self, d):
        k = default_fill_level(d) if self.k_F is None else self.k_F
        k = min(k, d - 1)
        if self.truncation is not None:
            k = min(k, self.truncation)
        return k

    def fill_family_set(self, d):
        if self.fill_families is not None:
            return self.fill_families
        if d > LARGE_D:
            return tuple(one_parametric(self.families)) or self.families
        return self.families

    def depth(self, d):
        return d - 1 if self.truncation is None else min(self.truncation, d - 1)


# ---------------------------------------------------------------------------
# Trace


@dataclass
class TreeRecord:
    stage: str
    component: int
    tree: int
    nodes: int
    candidates: int
    fitted: int = 0
    forced: int = 0
    truncated: int = 0
    tau_only: int = 0
    seconds: float = 0.0

    @property
    def determined(self):
        """The proximity condition leaves no choice in this tree."""
        return self.candidates == self.nodes - 1


@dataclass
class FillRecord:
    row: int
    col: int
    tree: int
    admissible: tuple
    chosen: int
    fitted: int


@dataclass
class FitTrace:
    """Counters and timings collected during selection."""

    trees: list = field(default_factory=list)
    fill: list = field(default_factory=list)
    component_sizes: list = field(default_factory=list)
    stage_seconds: dict = field(default_factory=dict)

    def _sel(self, stage=None, component=None):
        return [r for r in self.trees
                if (stage is None or r.stage == stage)
                and (component is None or r.component == component)]

    def fitted(self, stage=None, component=None):
        n = sum(r.fitted for r in self._sel(stage, component))
        if stage in (None, "fill") and component is None:
            n += sum(r.fitted for r in self.fill)
        return n

    def forced(self, stage=None, component=None):
        return sum(r.forced for r in self._sel(stage, component))

    def candidates(self, stage=None, component=None):
        return sum(r.candidates for r in self._sel(stage, component))

    def search_candidates(self, stage=None, component=None):
        """Candidate pairs in trees where the spanning tree is a real choice."""
        return sum(r.candidates for r in self._sel(stage, component) if not r.determined)

    def add_time(self, stage, seconds):
        self.stage_seconds[stage] = self.stage_seconds.get(stage, 0.0) + seconds

    def merge(self, other, component=None):
        for r in other.trees:
            self.trees.append(replace(r, component=r.component if component is None else component))
        self.fill.extend(other.fill)
        for k, v in other.stage_seconds.items():
            self.add_time(k, v)

    def report(self, delimiter=","):
        cols = ["stage", "component", "tree", "nodes", "candidates", "fitted", "forced",
                "truncated", "tau_only", "determined", "seconds"]
        buf = io.StringIO()
        buf.write(delimiter.join(cols) + "\n")
        for r in self.trees:
            buf.write(delimiter.join(str(x) for x in (
                r.stage, r.component, r.tree, r.nodes, r.candidates, r.fitted, r.forced,
                r.truncated, r.tau_only, int(r.determined), f"{r.seconds:.6f}")) + "\n")
        fill_by_tree = defaultdict(lambda: [0, 0])
        for f in self.fill:
            fill_by_tree[f.tree][0] += len(f.admissible)
            fill_by_tree[f.tree][1] += f.fitted
        for t in sorted(fill_by_tree):
            cand, fit = fill_by_tree[t]
            buf.write(delimiter.join(str(x) for x in (
                "fill", -1, t, "", cand, fit, 0, 0, 0, 0, "")) + "\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Tree-sequence engine


@dataclass
class _Edge:
    children: tuple
    pair: tuple
    cond: frozenset
    copula: object = INDEPENDENCE
    fit: FitResult | None = None
    mu: float = 0.0
    h: dict = field(default_factory=dict)

    @property
    def union(self):
        return self.cond | set(self.pair)


def _candidates(prev, t):
    if t == 1:
        k = len(prev)
        return [(p, q) for p in range(k) for q in range(p + 1, k)]
    by_child = defaultdict(list)
    for idx, e in enumerate(prev):
        for c in e.children:
            by_child[c].append(idx)
    out = set()
    for idxs in by_child.values():
        for a in range(len(idxs)):
            for b in range(a + 1, len(idxs)):
                out.add((idxs[a], idxs[b]))
    return sorted(out)


def _pair_data(prev, p, q):
    ep, eq = prev[p], prev[q]
    up, uq = ep.union, eq.union
    cond = up & uq
    (x,) = up - cond
    (y,) = uq - cond
    return (x, y), frozenset(cond), ep.h[x], eq.h[y]


def _fit_pair(u, v, families, config):
    return select_pair_copula(u, v, families, metric=config.metric, alpha=config.alpha)


def _grow_trees(data, labels, config, mode, graph=None, trace=None, stage="dissmann",
                component=0):
    """Select a full tree sequence on ``labels`` (columns of ``data``)."""
    nu = len(labels)
    depth = config.depth(nu)
    prev = [_Edge((), (lab,), frozenset(), h={lab: data[:, k]}) for k, lab in enumerate(labels)]
    trees = []
    for t in range(1, nu):
        t0 = time.perf_counter()
        cands = _candidates(prev, t)
        rec = TreeRecord(stage, component, t, len(prev), len(cands))
        info = {}
        weights = []
        for p, q in cands:
            pair, cond, u, v = _pair_data(prev, p, q)
            fit = None
            if t > depth:
                rec.truncated += 1
                w = 0.0
            elif mode == "dissmann":
                w = abs(kendall_tau(u, v))
                rec.tau_only += 1
            elif config.prune and _is_forced(graph, pair, cond, t):
                rec.forced += 1
                w = 0.0
            else:
                fit = _fit_pair(u, v, config.families, config)
                rec.fitted += 1
                w = fit.mu
            info[(p, q)] = (pair, cond, u, v, fit)
            weights.append((p, q, w))
        chosen = max_spanning_tree(range(len(prev)), weights)
        edges = []
        for p, q in chosen:
            pair, cond, u, v, fit = info[(p, q)]
            if mode == "dissmann" and t <= depth:
                fit = _fit_pair(u, v, config.families, config)
                rec.tau_only -= 1
                rec.fitted += 1
            cop = fit.copula if fit is not None else INDEPENDENCE
            e = _Edge((p, q), pair, cond, cop, fit, fit.mu if fit is not None else 0.0)
            if t < nu - 1:
                x, y = pair
                if cop.is_independence:
                    e.h = {x: u, y: v}
                else:
                    e.h = {x: cop.h1(u, v), y: cop.h2(u, v)}
            edges.append(e)
        rec.seconds = time.perf_counter() - t0
        if trace is not None:
            trace.trees.append(rec)
        trees.append(edges)
        prev = edges
    return trees


def _is_forced(graph, pair, cond, t):
    x, y = pair
    if t == 1:
        return not graph.has_edge(x, y)
    return separates(graph, x, y, cond)


def trees_to_matrix(trees, labels):
    """R-vine matrix and oriented copulas from a selected tree sequence.

    Column by column, the variable on the diagonal is a conditioned variable
    of the single remaining top edge; the column lists its partners from the
    deepest tree down to tree 1.  Edges placed in a column are removed.
    """
    d = len(labels)
    remaining = [list(edges) for edges in trees]
    m = np.zeros((d, d), dtype=int)
    cops = {}
    placed = set()
    for col in range(d - 1):
        top = d - 1 - col
        if len(remaining[top - 1]) != 1:
            raise AssertionError(f"tree {top} has {len(remaining[top - 1])} remaining edges")
        a = min(remaining[top - 1][0].pair)
        m[col, col] = a
        placed.add(a)
        for t in range(top, 0, -1):
            hits = [e for e in remaining[t - 1] if a in e.pair]
            if len(hits) != 1:
                raise AssertionError(f"variable {a} is conditioned in {len(hits)} edges of tree {t}")
            e = hits[0]
            remaining[t - 1].remove(e)
            b = e.pair[1] if e.pair[0] == a else e.pair[0]
            i = row_of_tree(d, t)
            m[i, col] = b
            cops[(i, col)] = e.copula if e.pair[0] == a else e.copula.transposed()
    (last,) = set(labels) - placed
    m[d - 1, d - 1] = last
    return m, cops


def _relabel(m, variables):
    # global labels -> local 1..nu in the order of ``variables``
    pos = {v: k + 1 for k, v in enumerate(variables)}
    out = np.zeros_like(m)
    nz = m != 0
    out[nz] = [pos[int(v)] for v in m[nz]]
    return out


# ---------------------------------------------------------------------------
# Public selectors


def dissmann_select(sample, config=SelectionConfig(), trace=None):
    """Tree-wise maximum spanning trees under |tau| with per-edge family selection."""
    data = as_data(sample)
    n, d = data.shape
    if d < 2:
        raise ValueError(f"vine selection needs d >= 2, got {d}")
    names = getattr(sample, "names", ())
    t0 = time.perf_counter()
    labels = list(range(1, d + 1))
    trees = _grow_trees(data, labels, config, "dissmann", trace=trace, stage="dissmann")
    m, cops = trees_to_matrix(trees, labels)
    trunc = config.truncation if config.truncation is not None and config.truncation < d - 1 else None
    model = RVineModel(m, cops, names, trunc)
    if trace is not None:
        trace.component_sizes.append(d)
        trace.add_time("dissmann", time.perf_counter() - t0)
    return model


@dataclass(frozen=True)
class ComponentVine:
    """A vine on local labels ``1..nu`` and the global labels they stand for."""

    model: RVineModel
    variables: tuple


def _pair_component(data, variables, config, graph, trace, component, prune=True):
    """Two-variable component: the structure is forced."""
    t0 = time.perf_counter()
    a, b = variables
    rec = TreeRecord("component", component, 1, 2, 1)
    if config.prune and prune and graph is not None and not graph.has_edge(a, b):
        fit = independence_result()
        rec.forced = 1
    else:
        fit = _fit_pair(data[:, 0], data[:, 1], config.families, config)
        rec.fitted = 1
    rec.seconds = time.perf_counter() - t0
    if trace is not None:
        trace.trees.append(rec)
    m = np.array([[1, 0], [2, 2]])
    return RVineModel(m, {(1, 0): fit.copula})


def select_component_rvine(sample, H, config=SelectionConfig(), variables=None, trace=None,
                           component=0):
    """Separation-pruned vine selection inside one connected component.

    ``sample`` has one column per variable of ``variables`` (default: the
    sorted nodes of ``H``).  Returns a :class:`ComponentVine`.
    """
    data = as_data(sample)
    variables = tuple(sorted(H.nodes)) if variables is None else tuple(variables)
    if set(variables) != set(H.nodes):
        raise ValueError("variables must equal the node set of H")
    nu = len(variables)
    if data.shape[1] != nu:
        raise ValueError(f"sample has {data.shape[1]} columns for {nu} variables")
    if nu < 2:
        raise ValueError("a component vine needs at least two variables")
    if len(connected_components(H)) != 1:
        raise ValueError("graph H must be connected")
    names = tuple(getattr(sample, "names", ()))
    if nu == 2:
        model = _pair_component(data, variables, config, H, trace, component)
        return ComponentVine(RVineModel(model.matrix, model.copulas, names), variables)
    trees = _grow_trees(data, list(variables), config, "component", graph=H, trace=trace,
                        stage="component", component=component)
    m, cops = trees_to_matrix(trees, list(variables))
    trunc = config.truncation if config.truncation is not None and config.truncation < nu - 1 else None
    model = RVineModel(_relabel(m, variables), cops, names, trunc)
    return ComponentVine(model, variables)


# ---------------------------------------------------------------------------
# Merge and fill


@dataclass(frozen=True)
class PartialVine:
    """A d x d matrix whose empty cells (0) still await an entry.

    ``copulas`` holds the pair copulas of the already filled cells, which
    are listed in ``fixed``.
    """

    matrix: np.ndarray
    copulas: dict
    fixed: frozenset
    names: tuple = ()
    blocks: tuple = ()

    @property
    def d(self):
        return self.matrix.shape[0]


def merge_subvines(subvines, isolated, d, names=()):
    """Arrange component vines and isolated nodes into one partial matrix.

    Isolated nodes come first (ascending), then components by increasing
    size with ties broken by their smallest label.  A component of size nu
    occupies nu consecutive columns; its local row r moves to row d - nu + r
    so that every tree keeps its level.
    """
    subvines = [sv if isinstance(sv, ComponentVine) else ComponentVine(*sv) for sv in subvines]
    isolated = sorted(int(v) for v in isolated)
    seen = set(isolated)
    if len(seen) != len(isolated):
        raise ValueError("duplicate isolated node")
    for sv in subvines:
        if sv.model.d != len(sv.variables):
            raise ValueError("sub-vine dimension does not match its variable list")
        overlap = seen & set(sv.variables)
        if overlap:
            raise ValueError(f"components overlap in {sorted(overlap)}")
        seen |= set(sv.variables)
    if seen != set(range(1, d + 1)):
        bad = sorted(seen ^ set(range(1, d + 1)))
        raise ValueError(f"components and isolated nodes must cover 1..{d}; mismatch at {bad}")
    ordered = sorted(subvines, key=lambda sv: (len(sv.variables), min(sv.variables)))
    m = np.zeros((d, d), dtype=int)
    cops = {}
    fixed = set()
    col = 0
    blocks = []
    for v in isolated:
        m[col, col] = v
        blocks.append((col, (v,)))
        col += 1
    for sv in ordered:
        nu = len(sv.variables)
        glob = sv.variables
        local = sv.model.matrix
        for c in range(nu):
            m[col + c, col + c] = glob[local[c, c] - 1]
            for r in range(c + 1, nu):
                gi, gj = d - nu + r, col + c
                m[gi, gj] = glob[local[r, c] - 1]
                cops[(gi, gj)] = sv.model.copulas[r][c]
                fixed.add((gi, gj))
        blocks.append((col, tuple(glob[local[c, c] - 1] for c in range(nu))))
        col += nu
    return PartialVine(m, cops, frozenset(fixed), tuple(names), tuple(blocks))


def fill_between_components(partial, sample, k_F, config=SelectionConfig(), pinned=None,
                            trace=None):
    """Complete a merged matrix row by row from the first tree upwards.

    Every empty cell takes a proximity-admissible diagonal entry.  In trees
    up to ``k_F`` each admissible entry is fitted and the one with the
    largest weight wins; above ``k_F`` the first admissible entry is used
    with the independence copula.  ``pinned`` maps 0-based cells to values
    that must be used (they still have to be admissible).
    """
    data = as_data(sample)
    d = partial.d
    if data.shape[1] != d:
        raise ValueError(f"sample has {data.shape[1]} columns, partial vine has {d}")
    if not 0 <= k_F <= max(d - 1, 0):
        raise ValueError(f"fill level {k_F} outside 0..{d - 1}")
    pinned = dict(pinned or {})
    families = config.fill_family_set(d)
    t0 = time.perf_counter()
    m = partial.matrix.copy()
    cops = dict(partial.copulas)
    memo = {(k + 1, frozenset()): data[:, k] for k in range(d)}
    for t in range(1, d):
        i = row_of_tree(d, t)
        new = {}
        sets = column_sets(m, i)
        for j in range(i):
            if (i, j) in partial.fixed:
                a, b = int(m[j, j]), int(m[i, j])
                cond = frozenset(int(x) for x in m[i + 1:, j])
                cop = cops[(i, j)]
                ua, ub = memo[(a, cond)], memo[(b, cond)]
            else:
                a = int(m[j, j])
                cond = frozenset(int(x) for x in m[i + 1:, j])
                opts = admissible_entries(m, i, j, sets)
                if not opts:
                    raise AssertionError(f"no admissible entry for cell ({i}, {j}); the merged "
                                         f"matrix is inconsistent")
                ua = memo[(a, cond)]
                if (i, j) in pinned:
                    b = int(pinned[(i, j)])
                    if b not in opts:
                        raise ValueError(f"pinned value {b} not admissible at ({i}, {j}): {opts}")
                    cand = [b]
                else:
                    cand = opts
                nfit = 0
                if t <= k_F:
                    best = None
                    for b in cand:
                        fit = _fit_pair(ua, memo[(b, cond)], families, config)
                        nfit += 1
                        if best is None or fit.mu > best[1].mu:
                            best = (b, fit)
                    b, cop = best[0], best[1].copula
                else:
                    b, cop = cand[0], INDEPENDENCE
                m[i, j] = b
                cops[(i, j)] = cop
                ub = memo[(b, cond)]
                if trace is not None:
                    trace.fill.append(FillRecord(i, j, t, tuple(opts), b, nfit))
            if t < d - 1:
                if cop.is_independence:
                    new[(a, cond | {b})] = ua
                    new[(b, cond | {a})] = ub
                else:
                    new[(a, cond | {b})] = cop.h1(ua, ub)
                    new[(b, cond | {a})] = cop.h2(ua, ub)
        memo = new
    if trace is not None:
        trace.add_time("fill", time.perf_counter() - t0)
    return RVineModel(m, cops, partial.names)


# ---------------------------------------------------------------------------
# Orchestration


@dataclass
class ClusterSelectResult:
    model: RVineModel
    trace: FitTrace
    path: object
    choice: object
    graphs: dict = field(default_factory=dict)


def component_graph(S, lam, component):
    """Graphical Lasso support on one screening component.

    Falls back to the screening subgraph when the penalized support splits
    the component, which can only happen at exact ties ``|S_ij| == lam``.
    """
    ix = [v - 1 for v in component]
    block = S[np.ix_(ix, ix)]
    omega = glasso_fit(block, lam, decompose=False)
    g = precision_graph(omega, labels=component)
    if len(connected_components(g)) != 1:
        adj = np.abs(block) >= lam
        np.fill_diagonal(adj, False)
        g = UndirectedGraph.from_adjacency(adj, component)
    return g


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except SelectionError:
        raise
    except Exception as exc:
        raise SelectionError(name, exc) from exc


def fit_partition(sample, partition, graphs, config=SelectionConfig(), trace=None):
    """Fit component vines on a given partition, merge them and fill.

    ``graphs`` maps each component tuple (size >= 2) to its graph ``H``.
    """
    data = as_data(sample)
    n, d = data.shape
    names = tuple(getattr(sample, "names", ()))
    trace = trace if trace is not None else FitTrace()
    comps = [tuple(sorted(c)) for c in partition if len(c) >= 2]
    isolated = [c[0] for c in partition if len(c) == 1]
    trace.component_sizes.extend(len(c) for c in partition)

    def fit_one(args):
        k, comp = args
        local = FitTrace()
        cols = data[:, [v - 1 for v in comp]]
        sub_names = tuple(names[v - 1] for v in comp) if names else ()
        sv = select_component_rvine(CopulaSample(cols, sub_names), graphs[comp], config,
                                    variables=comp, trace=local, component=k)
        return sv, local

    t0 = time.perf_counter()
    jobs = list(enumerate(comps, 1))
    if config.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda a: _stage("component", fit_one, a), jobs))
    else:
        results = [_stage("component", fit_one, a) for a in jobs]
    subvines = []
    for sv, local in results:
        subvines.append(sv)
        trace.merge(local)
    trace.add_time("component", time.perf_counter() - t0)
    t0 = time.perf_counter()
    partial = _stage("merge", merge_subvines, subvines, isolated, d, names)
    trace.add_time("merge", time.perf_counter() - t0)
    kf = config.fill_level(d)
    model = _stage("fill", fill_between_components, partial, data, kf, config, trace=trace)
    if config.truncation is not None and config.truncation < d - 1:
        model = truncate(model, config.truncation)
    return model


def rvine_cluster_select(sample, config=SelectionConfig()):
    """Partition along a screening path, fit component vines, merge and fill."""
    data = as_data(sample)
    n, d = data.shape
    if d < 2:
        raise ValueError(f"vine selection needs d >= 2, got {d}")
    if n < 10:
        raise ValueError(f"vine selection needs n >= 10, got {n}")
    trace = FitTrace()
    t0 = time.perf_counter()

    def path_stage():
        S = sample_covariance(to_z_scale(data))
        path = covariance_path(S, config.J, config.lambdas, n=n)
        return S, path, select_partition(path, config.d_T)

    S, path, choice = _stage("path", path_stage)
    trace.add_time("path", time.perf_counter() - t0)
    t0 = time.perf_counter()
    graphs = _stage("glasso", lambda: {tuple(c): component_graph(S, choice.lam, tuple(c))
                                       for c in choice.partition if len(c) >= 2})
    trace.add_time("glasso", time.perf_counter() - t0)
    model = fit_partition(sample, choice.partition, graphs, config, trace)
    return ClusterSelectResult(model, trace, path, choice, graphs)


def fit_summary(model, sample, method, trace=None, choice=None, seconds=None):
    """Model copy carrying loglik, parameter count and information criteria."""
    data = as_data(sample)
    n = data.shape[0]
    ll = rvine_loglik(model, data)[0]
    p = count_parameters(model)
    ic = information_criteria(ll, p, n)
    meta = {"method": method, "n": n, "loglik": ll, "nparams": p,
            "aic": ic.aic, "bic": ic.bic, "gic": ic.gic}
    if choice is not None:
        meta.update({"T": choice.T, "lambda_T": choice.lam, "p_T": choice.p,
                     "delta_T": choice.delta})
    if trace is not None:
        meta["pairs_fitted"] = trace.fitted()
        meta["pairs_forced"] = trace.forced()
        meta["timestamps"] = {k: round(v, 6) for k, v in trace.stage_seconds.items()}
    if seconds is not None:
        meta.setdefault("timestamps", {})["total"] = round(seconds, 6)
    return model.with_meta(**meta)


# ---------------------------------------------------------------------------
# Sector concentration


@dataclass(frozen=True)
class SectorShare:
    b: int
    nu: int
    sector: object

    @property
    def rho(self):
        return self.b / self.nu


def sector_concentration(partition, labels):
    """Size of the modal sector in every component and its share."""
    out = []
    for comp in partition:
        comp = list(comp)
        if not comp:
            raise ValueError("empty component")
        missing = [v for v in comp if v not in labels]
        if missing:
            raise KeyError(f"no sector label for nodes {missing}")
        counts = Counter(labels[v] for v in comp)
        sector, b = max(sorted(counts.items(), key=lambda kv: str(kv[0])), key=lambda kv: kv[1])
        out.append(SectorShare(b, len(comp), sector))
    return out
