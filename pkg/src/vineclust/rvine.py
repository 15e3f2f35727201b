"""Regular-vine copula models in matrix form.

A d-dimensional R-vine is stored as a lower-triangular integer matrix ``M``
with 1-based variable labels (0 marks an empty cell).  Indices in this module
are 0-based, so the cell ``(i, j)`` with ``j < i`` encodes the pair copula

    c_{M[j, j], M[i, j] | M[i+1:, j]}

of tree ``d - i``.  The last row therefore holds the first tree and the
diagonal lists the variables.  The copula stored in a cell models the pair
``(F(M[j, j] | D), F(M[i, j] | D))`` in that order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .copula import EPS, INDEPENDENCE, PairCopula, make_copula, parse_family, tau_to_parameter
from .fileio import atomic_write_text


class RVineStructureError(ValueError):
    """An R-vine matrix violates one of the structural conditions."""


@dataclass(frozen=True)
class CopulaSample:
    """n x d matrix of u-scale observations with column names."""

    data: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"sample must be two-dimensional, got shape {data.shape}")
        if data.size and not np.all(np.isfinite(data)):
            raise ValueError("sample contains non-finite values")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("u-scale sample has entries outside [0, 1]")
        data = np.clip(data, EPS, 1.0 - EPS)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        names = tuple(self.names) or tuple(f"V{k + 1}" for k in range(data.shape[1]))
        if len(names) != data.shape[1]:
            raise ValueError(f"{len(names)} names for {data.shape[1]} columns")
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def columns(self, labels):
        """Sub-sample on 1-based variable labels."""
        idx = [int(v) - 1 for v in labels]
        return CopulaSample(self.data[:, idx], tuple(self.names[k] for k in idx))


def as_data(sample):
    data = np.asarray(sample.data if isinstance(sample, CopulaSample) else sample, dtype=float)
    if data.ndim != 2:
        raise ValueError(f"sample must be two-dimensional, got shape {data.shape}")
    return np.clip(data, EPS, 1.0 - EPS)


# ---------------------------------------------------------------------------
# Structure


def tree_of_row(d, i):
    """Tree index (1-based) encoded by 0-based matrix row ``i``."""
    return d - i


def row_of_tree(d, t):
    return d - t


def check_rvine_matrix(matrix):
    """Return ``(valid, message)`` for a candidate R-vine matrix.

    The message names the first offending cell (1-based row and column) and
    the condition it fails; it is empty for a valid matrix.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"R-vine matrix must be square, got shape {m.shape}")
    d = m.shape[0]
    if d == 0:
        return False, "empty matrix"
    if not np.issubdtype(m.dtype, np.integer):
        if not np.all(m == np.round(m)):
            return False, "entries must be integers"
        m = m.astype(int)
    for i in range(d):
        for j in range(i + 1, d):
            if m[i, j] != 0:
                return False, f"cell ({i + 1},{j + 1}): entries above the diagonal must be 0"
    diag = [int(m[k, k]) for k in range(d)]
    if sorted(diag) != list(range(1, d + 1)):
        return False, f"diagonal {diag} is not a permutation of 1..{d}"
    for j in range(d - 1):
        right = set(diag[j + 1:])
        seen = set()
        for i in range(d - 1, j, -1):
            v = int(m[i, j])
            if v not in right:
                return False, (f"cell ({i + 1},{j + 1}): value {v} is not a diagonal entry "
                               f"right of column {j + 1}")
            if v in seen:
                return False, f"cell ({i + 1},{j + 1}): value {v} duplicated in column {j + 1}"
            seen.add(v)
    for i in range(d - 2, 0, -1):
        sets = column_sets(m, i)
        for j in range(i):
            v = int(m[i, j])
            if v not in _admissible_from(m, i, j, sets):
                return False, (f"cell ({i + 1},{j + 1}): value {v} violates the "
                               f"proximity condition")
    return True, ""


def validate_rvine_matrix(matrix):
    """True iff ``matrix`` is a valid R-vine matrix."""
    return check_rvine_matrix(matrix)[0]


def column_sets(matrix, i):
    """For every column k <= i the set {M[k, k]} | M[i+1:, k]."""
    m = np.asarray(matrix)
    return [frozenset([int(m[k, k]), *(int(x) for x in m[i + 1:, k])]) for k in range(i + 1)]


def _admissible_from(m, i, j, sets):
    # b is admissible iff below_j | {b} equals the set of some column k in (j, i]
    below = frozenset(int(x) for x in m[i + 1:, j])
    found = set()
    for k in range(j + 1, i + 1):
        sk = sets[k]
        if below < sk and len(sk) == len(below) + 1:
            found |= sk - below
    return found


def admissible_entries(matrix, i, j, sets=None):
    """Values allowed in cell ``(i, j)`` given that all rows below ``i`` are set.

    Candidates are diagonal entries right of column ``j``, in diagonal order,
    that are not yet used in the column and satisfy the proximity condition.
    ``sets`` may carry :func:`column_sets` of row ``i`` to avoid recomputing
    them for every cell of a row.
    """
    m = np.asarray(matrix)
    d = m.shape[0]
    if not 0 <= j < i < d:
        raise IndexError(f"cell ({i}, {j}) is not strictly below the diagonal")
    if sets is None:
        sets = column_sets(m, i)
    found = _admissible_from(m, i, j, sets)
    return [int(m[k, k]) for k in range(j + 1, d) if int(m[k, k]) in found]


def pair_copula_labels(matrix):
    """Pair-copula terms in tree order, right to left within each tree.

    Each item is ``(cell, conditioned, conditioning)`` with a 0-based cell,
    a label pair and a sorted label tuple.
    """
    m = np.asarray(matrix, dtype=int)
    d = m.shape[0]
    out = []
    for t in range(1, d):
        i = row_of_tree(d, t)
        for j in range(i - 1, -1, -1):
            cond = tuple(sorted(int(x) for x in m[i + 1:, j]))
            out.append(((i, j), (int(m[j, j]), int(m[i, j])), cond))
    return out


def term_string(conditioned, conditioning):
    a, b = conditioned
    if not conditioning:
        return f"c{a},{b}"
    return f"c{a},{b}|" + ",".join(str(x) for x in conditioning)


# ---------------------------------------------------------------------------
# Model


def _copula_grid(d, copulas):
    grid = [[INDEPENDENCE] * d for _ in range(d)]
    if copulas is None:
        return tuple(tuple(r) for r in grid)
    if isinstance(copulas, dict):
        for (i, j), c in copulas.items():
            if not 0 <= j < i < d:
                raise IndexError(f"copula cell ({i}, {j}) is not below the diagonal")
            grid[i][j] = c
    else:
        rows = list(copulas)
        if len(rows) != d:
            raise ValueError(f"copula grid has {len(rows)} rows, expected {d}")
        for i, row in enumerate(rows):
            for j, c in enumerate(row):
                if j < i and c is not None:
                    grid[i][j] = c
    for i in range(d):
        for j in range(i):
            if not isinstance(grid[i][j], PairCopula):
                raise TypeError(f"cell ({i}, {j}) holds {type(grid[i][j]).__name__}, not PairCopula")
    return tuple(tuple(r) for r in grid)


@dataclass(frozen=True, eq=False)
class RVineModel:
    """Structure matrix plus one pair copula per cell below the diagonal.

    Parameters
    ----------
    matrix : (d, d) int array
        Lower-triangular structure matrix with labels ``1..d``.
    copulas : dict or nested sequence of PairCopula, optional
        Either ``{(i, j): PairCopula}`` or a d x d grid; missing cells are
        the independence copula.
    names : sequence of str, optional
        Variable names indexed by label - 1.
    truncation : int, optional
        Trees above this level carry only independence copulas.
    meta : dict
        Fit metadata (not part of equality).
    """

    matrix: np.ndarray
    copulas: tuple = None
    names: tuple = ()
    truncation: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.int64)
        ok, msg = check_rvine_matrix(m)
        if not ok:
            raise RVineStructureError(msg)
        m.setflags(write=False)
        d = m.shape[0]
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "copulas", _copula_grid(d, self.copulas))
        names = tuple(self.names) or tuple(f"V{k + 1}" for k in range(d))
        if len(names) != d:
            raise ValueError(f"{len(names)} names for a {d}-dimensional vine")
        object.__setattr__(self, "names", names)
        if self.truncation is not None:
            k = int(self.truncation)
            if not 1 <= k <= max(d - 1, 1):
                raise ValueError(f"truncation {k} outside 1..{d - 1}")
            object.__setattr__(self, "truncation", k)
            for i in range(d - k):
                for j in range(i):
                    if not self.copulas[i][j].is_independence:
                        raise ValueError(f"cell ({i + 1},{j + 1}) lies in tree {d - i} above "
                                         f"truncation {k} but is not independence")

    @property
    def d(self):
        return self.matrix.shape[0]

    def copula(self, i, j):
        return self.copulas[i][j]

    def cells(self):
        """0-based cells below the diagonal, tree by tree, right to left."""
        d = self.d
        for t in range(1, d):
            i = row_of_tree(d, t)
            for j in range(i - 1, -1, -1):
                yield i, j

    @property
    def diagonal(self):
        return tuple(int(self.matrix[k, k]) for k in range(self.d))

    @property
    def family_codes(self):
        """Integer family matrix (0 on and above the diagonal)."""
        d = self.d
        out = np.zeros((d, d), dtype=int)
        for i, j in self.cells():
            out[i, j] = int(self.copulas[i][j].family)
        return out

    @property
    def rotations(self):
        d = self.d
        out = np.zeros((d, d), dtype=int)
        for i, j in self.cells():
            out[i, j] = self.copulas[i][j].rotation
        return out

    @property
    def par(self):
        d = self.d
        out = np.zeros((d, d))
        for i, j in self.cells():
            out[i, j] = self.copulas[i][j].theta1
        return out

    @property
    def par2(self):
        d = self.d
        out = np.zeros((d, d))
        for i, j in self.cells():
            out[i, j] = self.copulas[i][j].theta2
        return out

    def terms(self):
        """Printable pair-copula terms such as ``c4,1|2,3,5,6``."""
        return [term_string(c, D) for _, c, D in pair_copula_labels(self.matrix)]

    def equals(self, other):
        return (isinstance(other, RVineModel)
                and np.array_equal(self.matrix, other.matrix)
                and self.copulas == other.copulas
                and self.names == other.names
                and self.truncation == other.truncation)

    def with_meta(self, **meta):
        return RVineModel(self.matrix, self.copulas, self.names, self.truncation,
                          {**self.meta, **meta})

    def nonindependence_cells(self):
        return [(i, j) for i, j in self.cells() if not self.copulas[i][j].is_independence]

    def family_histogram(self):
        hist = {}
        for i, j in self.cells():
            code = self.copulas[i][j].code
            hist[code] = hist.get(code, 0) + 1
        return dict(sorted(hist.items()))


def independence_model(d, names=(), order=None):
    """All-independence D-vine style model on ``d`` variables."""
    order = list(order) if order is not None else list(range(1, d + 1))
    m = np.zeros((d, d), dtype=int)
    for j in range(d):
        m[j, j] = order[j]
        for i in range(j + 1, d):
            # column j holds the diagonal entries to its right in reverse
            m[i, j] = order[d - i + j]
    return RVineModel(m, None, names)


def count_parameters(model):
    return sum(model.copulas[i][j].nparams for i, j in model.cells())


class InformationCriteria(NamedTuple):
    aic: float
    bic: float
    gic: float


def information_criteria(loglik, nparams, n):
    """AIC, BIC and GIC of a fitted model.

    GIC uses the penalty ``log(log n) * log(p) * p`` which is taken as 0 for
    ``p <= 1``.
    """
    if n < 2:
        raise ValueError(f"information criteria need n >= 2, got {n}")
    if nparams < 0:
        raise ValueError(f"negative parameter count {nparams}")
    p = int(nparams)
    ll = float(loglik)
    gic_pen = math.log(math.log(n)) * math.log(p) * p if p > 1 else 0.0
    return InformationCriteria(-2.0 * ll + 2.0 * p, -2.0 * ll + math.log(n) * p, -2.0 * ll + gic_pen)


def truncate(model, k):
    """Copy of ``model`` with every tree above ``k`` set to independence."""
    d = model.d
    if not 1 <= k <= d - 1:
        raise ValueError(f"truncation level {k} outside 1..{d - 1}")
    grid = [list(r) for r in model.copulas]
    for i in range(d - k):
        for j in range(i):
            grid[i][j] = INDEPENDENCE
    trunc = k if k < d - 1 else model.truncation
    return RVineModel(model.matrix, grid, model.names, trunc, dict(model.meta))


def effective_depth(model):
    """Highest tree that carries a non-independence copula (0 if none)."""
    d = model.d
    for t in range(d - 1, 0, -1):
        i = row_of_tree(d, t)
        if any(not model.copulas[i][j].is_independence for j in range(i)):
            return t
    return 0


# ---------------------------------------------------------------------------
# Evaluation


def _check_dims(model, data):
    if data.shape[1] != model.d:
        raise ValueError(f"sample has {data.shape[1]} columns, model dimension is {model.d}")


def rvine_loglik(model, sample, cells=False):
    """Log-likelihood of a u-scale sample.

    Returns ``(loglik, per_observation)`` and, with ``cells=True``, a third
    item mapping every cell to its summed log-density contribution.
    Conditional distribution functions are propagated tree by tree through
    h-functions and memoized by (variable, conditioning set).
    """
    data = as_data(sample)
    _check_dims(model, data)
    d, n = model.d, data.shape[0]
    m = model.matrix
    per_obs = np.zeros(n)
    contrib = {}
    memo = {(k + 1, frozenset()): data[:, k] for k in range(d)}
    depth = effective_depth(model) if not cells else d - 1
    for t in range(1, depth + 1):
        i = row_of_tree(d, t)
        new = {}
        for j in range(i - 1, -1, -1):
            a, b = int(m[j, j]), int(m[i, j])
            cond = frozenset(int(x) for x in m[i + 1:, j])
            try:
                ua = memo[(a, cond)]
                ub = memo[(b, cond)]
            except KeyError as exc:
                raise RVineStructureError(f"missing pseudo-observation {exc} at cell ({i}, {j})") from None
            cop = model.copulas[i][j]
            if cop.is_independence:
                contrib[(i, j)] = 0.0
                new[(a, cond | {b})] = ua
                new[(b, cond | {a})] = ub
                continue
            lp = cop.logpdf(ua, ub)
            per_obs += lp
            contrib[(i, j)] = math.fsum(lp)
            if t < depth:
                new[(a, cond | {b})] = cop.h1(ua, ub)
                new[(b, cond | {a})] = cop.h2(ua, ub)
        memo = new
    total = math.fsum(per_obs)
    if cells:
        for i, j in model.cells():
            contrib.setdefault((i, j), 0.0)
        return total, per_obs, contrib
    return total, per_obs


def rvine_logpdf(model, sample):
    """Per-observation log-density."""
    return rvine_loglik(model, sample)[1]


def rvine_simulate(model, n, seed=None):
    """Draw ``n`` observations by inverse Rosenblatt transformation.

    Columns are processed right to left; within a column the uniform draw is
    pushed through inverse h-functions from the deepest tree down to tree 1.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    rng = np.random.default_rng(seed)
    d = model.d
    m = model.matrix
    w = rng.random((n, d))
    out = np.empty((n, d))
    memo = {}
    last = int(m[d - 1, d - 1])
    out[:, last - 1] = w[:, d - 1]
    memo[(last, frozenset())] = w[:, d - 1]
    for j in range(d - 2, -1, -1):
        a = int(m[j, j])
        below = [int(x) for x in m[j + 1:, j]]
        full = frozenset(below)
        x = w[:, j]
        memo[(a, full)] = x
        # invert towards the unconditional margin
        for i in range(j + 1, d):
            b = int(m[i, j])
            cond = frozenset(below[i - j:])
            cop = model.copulas[i][j]
            ub = memo[(b, cond)]
            if not cop.is_independence:
                x = cop.h1inv(x, ub)
            memo[(a, cond)] = x
        out[:, a - 1] = x
        # forward values of the other conditioned variable for later columns
        for i in range(d - 1, j, -1):
            b = int(m[i, j])
            cond = frozenset(below[i - j:])
            cop = model.copulas[i][j]
            key = (b, cond | {a})
            if key in memo:
                continue
            ua = memo[(a, cond)]
            ub = memo[(b, cond)]
            memo[key] = ub if cop.is_independence else cop.h2(ua, ub)
    return CopulaSample(out, model.names)


# ---------------------------------------------------------------------------
# Random structures


def random_rvine_matrix(d, rng=None):
    """A random valid R-vine matrix built by random admissible completion."""
    rng = np.random.default_rng(rng)
    m = np.zeros((d, d), dtype=int)
    order = rng.permutation(d) + 1
    for k in range(d):
        m[k, k] = order[k]
    for i in range(d - 1, 0, -1):
        sets = column_sets(m, i)
        for j in range(i):
            opts = admissible_entries(m, i, j, sets)
            if not opts:
                raise AssertionError(f"no admissible entry for cell ({i}, {j})")
            m[i, j] = opts[int(rng.integers(len(opts)))]
    return m


DEFAULT_RANDOM_FAMILIES = ("gaussian", "clayton", "gumbel", "frank")


def random_rvine_model(d, rng=None, truncation=None, families=DEFAULT_RANDOM_FAMILIES,
                       tau_range=(0.2, 0.7), tau_decay=0.6, indep_prob=0.0):
    """Random model with tau-parameterised one-parametric pair copulas.

    In tree ``t`` the absolute Kendall's tau is drawn uniformly from
    ``tau_range`` and scaled by ``tau_decay ** (t - 1)``; signs are random.
    With probability ``indep_prob`` a cell is set to independence.
    """
    rng = np.random.default_rng(rng)
    m = random_rvine_matrix(d, rng)
    depth = d - 1 if truncation is None else truncation
    cops = {}
    for t in range(1, depth + 1):
        i = row_of_tree(d, t)
        for j in range(i):
            if rng.random() < indep_prob:
                continue
            tau = rng.uniform(*tau_range) * tau_decay ** (t - 1)
            if rng.random() < 0.3:
                tau = -tau
            fam, _ = parse_family(families[int(rng.integers(len(families)))])
            rot = 0
            if fam.name in ("CLAYTON", "GUMBEL", "JOE"):
                rot = int(rng.choice([0, 180])) if tau > 0 else int(rng.choice([90, 270]))
            theta = tau_to_parameter(fam, tau, rot)
            cops[(i, j)] = PairCopula(fam, rot, theta)
    trunc = truncation if truncation is not None and truncation < d - 1 else None
    return RVineModel(m, cops, truncation=trunc)


# ---------------------------------------------------------------------------
# Serialization


FORMAT_VERSION = 1


def model_to_dict(model, timestamps=True):
    d = model.d
    fams = [[model.copulas[i][j].code if j < i else "" for j in range(d)] for i in range(d)]
    p1 = [[model.copulas[i][j].theta1 if j < i else 0.0 for j in range(d)] for i in range(d)]
    p2 = [[model.copulas[i][j].theta2 if j < i else 0.0 for j in range(d)] for i in range(d)]
    meta = dict(model.meta)
    if not timestamps:
        meta.pop("timestamps", None)
    return {
        "format": "rvine-matrix",
        "version": FORMAT_VERSION,
        "d": d,
        "names": list(model.names),
        "matrix": model.matrix.tolist(),
        "families": fams,
        "params1": p1,
        "params2": p2,
        "truncation": model.truncation,
        "fit": meta,
    }


def model_from_dict(doc):
    try:
        d = int(doc["d"])
        matrix = np.array(doc["matrix"], dtype=np.int64)
        fams = doc["families"]
        p1 = doc["params1"]
        p2 = doc["params2"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"model document is missing field {exc}") from None
    if matrix.shape != (d, d):
        raise ValueError(f"matrix shape {matrix.shape} does not match d={d}")
    cops = {}
    for i in range(d):
        for j in range(i):
            code = fams[i][j]
            if code and code not in ("indep", "independence"):
                cops[(i, j)] = make_copula(code, float(p1[i][j]), float(p2[i][j]))
    return RVineModel(matrix, cops, tuple(doc.get("names") or ()), doc.get("truncation"),
                      dict(doc.get("fit") or {}))


def model_to_json(model, timestamps=True, indent=1):
    return json.dumps(model_to_dict(model, timestamps), indent=indent, allow_nan=True)


def model_from_json(text):
    return model_from_dict(json.loads(text))


def save_model(model, path, timestamps=True):
    atomic_write_text(path, model_to_json(model, timestamps) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
