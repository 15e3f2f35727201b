"""Graphical Lasso, covariance screening and solution paths.

The estimator maximizes ``log det(Omega) - tr(S Omega) - lam * sum |Omega_ij|``
(diagonal included) by block coordinate descent on the covariance ``W``.
Connected components of the thresholded covariance ``|S_ij| >= lam`` coincide
with those of the penalized solution, so every component is solved on its
own.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .copula import EPS
from .graphs import UndirectedGraph, connected_components


class GlassoConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ZSample:
    """Gaussian-scale observations obtained from u-scale data."""

    data: np.ndarray
    provenance: str = "probit"

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]


def to_z_scale(sample):
    """Elementwise standard-normal quantile transform of u-scale data."""
    u = np.asarray(getattr(sample, "data", sample), dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError("u-scale data must lie in [0, 1] (values are clamped to the open interval)")
    z = special.ndtri(np.clip(u, EPS, 1.0 - EPS))
    return ZSample(z)


def sample_covariance(z):
    """``X^T X / n`` of the column-centred data."""
    x = np.asarray(getattr(z, "data", z), dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"covariance needs an n x d array with n >= 2, got shape {x.shape}")
    xc = x - x.mean(axis=0)
    s = xc.T @ xc / x.shape[0]
    return 0.5 * (s + s.T)


def _check_cov(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"covariance must be square, got shape {S.shape}")
    if not np.allclose(S, S.T, atol=1e-12, rtol=0):
        raise ValueError("covariance matrix is not symmetric")
    return S


def screening_graph(S, lam, labels=None):
    """Graph with an edge wherever ``|S_ij| >= lam`` off the diagonal."""
    S = _check_cov(S)
    if not lam > 0:
        raise ValueError(f"screening threshold must be positive, got {lam}")
    adj = np.abs(S) >= lam
    np.fill_diagonal(adj, False)
    return UndirectedGraph.from_adjacency(adj, labels)


def max_offdiagonal(S):
    S = np.asarray(S, dtype=float)
    if S.shape[0] < 2:
        return 0.0
    a = np.abs(S).copy()
    np.fill_diagonal(a, 0.0)
    return float(a.max())


# ---------------------------------------------------------------------------
# Solver


def _lasso_cd(W11, s12, lam, beta, tol, max_sweeps):
    # min 1/2 b'W11 b - s12'b + lam |b|_1 by cyclic coordinate descent
    p = beta.size
    grad = W11 @ beta
    diag = np.diag(W11)
    for _ in range(max_sweeps):
        delta = 0.0
        for k in range(p):
            old = beta[k]
            r = s12[k] - grad[k] + diag[k] * old
            new = math.copysign(max(abs(r) - lam, 0.0), r) / diag[k]
            if new != old:
                grad += W11[:, k] * (new - old)
                beta[k] = new
                delta = max(delta, abs(new - old))
        if delta < tol:
            break
    return beta


def kkt_residual(S, omega, lam):
    """Largest violation of the stationarity conditions at ``omega``."""
    S = np.asarray(S, dtype=float)
    W = np.linalg.inv(omega)
    R = W - S
    d = S.shape[0]
    res = float(np.max(np.abs(np.diag(R) - lam))) if d else 0.0
    off = ~np.eye(d, dtype=bool)
    nz = off & (omega != 0)
    z = off & (omega == 0)
    if nz.any():
        res = max(res, float(np.max(np.abs(R[nz] - lam * np.sign(omega[nz])))))
    if z.any():
        res = max(res, float(np.max(np.abs(R[z]) - lam)))
    return max(res, 0.0)


def _glasso_block(S, lam, tol, max_iter):
    p = S.shape[0]
    if p == 1:
        return np.array([[1.0 / (S[0, 0] + lam)]]), 0
    if lam == 0.0:
        # unpenalized problem: the block must be invertible
        if np.linalg.matrix_rank(S) < p:
            raise np.linalg.LinAlgError("singular covariance block at lambda = 0")
    W = S + lam * np.eye(p)
    B = np.zeros((p, p))
    idx = np.arange(p)
    inner_tol = max(tol * 1e-3, 1e-14)
    for it in range(1, max_iter + 1):
        change = 0.0
        for j in range(p):
            rest = idx != j
            W11 = W[np.ix_(rest, rest)]
            beta = _lasso_cd(W11, S[rest, j], lam, B[rest, j].copy(), inner_tol, 10000)
            B[rest, j] = beta
            w12 = W11 @ beta
            change = max(change, float(np.max(np.abs(w12 - W[rest, j]))))
            W[rest, j] = w12
            W[j, rest] = w12
        if change < tol * 1e-2:
            omega = _precision_from(W, B)
            if kkt_residual(S, omega, lam) <= tol:
                return omega, it
    omega = _precision_from(W, B)
    res = kkt_residual(S, omega, lam)
    if res <= tol:
        return omega, max_iter
    raise GlassoConvergenceError(
        f"graphical lasso did not reach KKT residual {tol} within {max_iter} sweeps "
        f"(residual {res:.3g})", res, max_iter)


def _precision_from(W, B):
    p = W.shape[0]
    omega = np.zeros((p, p))
    idx = np.arange(p)
    for j in range(p):
        rest = idx != j
        beta = B[rest, j]
        o22 = 1.0 / (W[j, j] - W[rest, j] @ beta)
        omega[j, j] = o22
        omega[rest, j] = -beta * o22
    # symmetrize keeping exact zeros where either triangle is zero
    sym = 0.5 * (omega + omega.T)
    sym[(omega == 0) | (omega.T == 0)] = 0.0
    np.fill_diagonal(sym, np.diag(omega))
    return sym


def glasso_fit(S, lam, tol=1e-8, max_iter=1000, decompose=True):
    """Sparse precision matrix at penalty ``lam``.

    With ``decompose`` the problem is split along the screening components
    and each block is solved separately.  Raises
    :class:`GlassoConvergenceError` when the KKT residual stays above ``tol``.
    """
    S = _check_cov(S)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError(f"penalty must be non-negative, got {lam}")
    d = S.shape[0]
    if np.any(np.diag(S) + lam <= 0):
        raise ValueError("covariance diagonal must be positive")
    if not decompose or lam == 0.0:
        omega, _ = _glasso_block(S, float(lam), tol, max_iter)
        return omega
    omega = np.zeros((d, d))
    for comp in connected_components(screening_graph(S, lam, labels=range(d))):
        ix = np.array(comp)
        block, _ = _glasso_block(S[np.ix_(ix, ix)], float(lam), tol, max_iter)
        omega[np.ix_(ix, ix)] = block
    return omega


def precision_graph(omega, labels=None):
    """Graph with an edge wherever the precision entry is non-zero."""
    omega = np.asarray(omega)
    adj = omega != 0
    np.fill_diagonal(adj, False)
    adj = adj | adj.T
    return UndirectedGraph.from_adjacency(adj, labels)


# ---------------------------------------------------------------------------
# Paths


def default_lambdas(S, J=30, min_ratio=0.1):
    """Log-spaced penalties from the largest off-diagonal |S_ij| downwards.

    The first value sits a relative 1e-9 above that maximum so that the
    first screening graph is edgeless under the inclusive threshold.
    """
    if J < 2:
        raise ValueError(f"a default path needs J >= 2, got {J}")
    lmax = max_offdiagonal(S)
    if lmax <= 0:
        raise ValueError("covariance has no off-diagonal dependence; supply explicit lambdas")
    top = lmax * (1.0 + 1e-9)
    return np.exp(np.linspace(math.log(top), math.log(min_ratio * lmax), J))


@dataclass(frozen=True)
class GlassoPath:
    """Screening graphs and partitions along a decreasing penalty sequence."""

    lambdas: np.ndarray
    graphs: tuple
    partitions: tuple
    precisions: tuple | None = None
    S: np.ndarray | None = field(default=None, repr=False)
    n: int | None = None

    @property
    def J(self):
        return len(self.lambdas)

    @property
    def p(self):
        return [len(part) for part in self.partitions]

    @property
    def delta(self):
        return [max(len(c) for c in part) for part in self.partitions]

    def edge_counts(self):
        return [len(g.edges) for g in self.graphs]

    def gaussian_loglik(self, j):
        """Gaussian log-likelihood of the j-th precision estimate (0-based)."""
        if self.precisions is None or self.S is None or self.n is None:
            return None
        om = self.precisions[j]
        sign, logdet = np.linalg.slogdet(om)
        d = om.shape[0]
        return 0.5 * self.n * (logdet - float(np.sum(self.S * om)) - d * math.log(2 * math.pi))


def covariance_path(S, J=30, lambdas=None, precision=False, tol=1e-8, n=None, labels=None):
    """Solution path for a covariance matrix; see :func:`glasso_path`."""
    S = _check_cov(S)
    if lambdas is None:
        lams = default_lambdas(S, J)
    else:
        lams = np.asarray(lambdas, dtype=float).ravel()
        if lams.size < 1:
            raise ValueError("empty lambda vector")
        if np.any(~np.isfinite(lams)) or np.any(lams <= 0):
            raise ValueError(f"lambda values must be positive, got {lams.tolist()}")
        lams = np.sort(lams)[::-1]
    d = S.shape[0]
    labels = list(labels) if labels is not None else list(range(1, d + 1))
    graphs, parts, precs = [], [], []
    for lam in lams:
        g = screening_graph(S, lam, labels)
        graphs.append(g)
        parts.append(tuple(connected_components(g)))
        if precision:
            precs.append(glasso_fit(S, lam, tol=tol))
    lams = np.array(lams)
    lams.setflags(write=False)
    return GlassoPath(lams, tuple(graphs), tuple(parts), tuple(precs) if precision else None, S, n)


def glasso_path(z, J=30, lambdas=None, precision=False, tol=1e-8):
    """Screening path on z-scale data.

    The default path is log-spaced with ``J`` values from the largest
    off-diagonal sample covariance down to a tenth of it.  Explicit
    ``lambdas`` override it and are sorted in decreasing order.
    """
    x = np.asarray(getattr(z, "data", z), dtype=float)
    return covariance_path(sample_covariance(x), J, lambdas, precision, tol, n=x.shape[0])


@dataclass(frozen=True)
class PartitionChoice:
    index: int
    lam: float
    graph: UndirectedGraph
    partition: tuple
    p: int
    delta: int

    @property
    def T(self):
        """1-based position on the path."""
        return self.index + 1


def select_partition(path, d_T):
    """Densest path graph whose largest component has at most ``d_T`` nodes.

    Among graphs with the same maximal feasible component size the one
    furthest along the path (smallest penalty) wins.
    """
    if d_T < 1:
        raise ValueError(f"threshold dimension must be >= 1, got {d_T}")
    best = None
    for j, dj in enumerate(path.delta):
        if dj <= d_T and (best is None or dj >= path.delta[best]):
            best = j
    if best is None:
        raise ValueError(f"no graph on the path has components of size <= {d_T}; "
                         f"smallest maximal size is {min(path.delta)}")
    part = path.partitions[best]
    return PartitionChoice(best, float(path.lambdas[best]), path.graphs[best], part,
                           len(part), max(len(c) for c in part))


# ---------------------------------------------------------------------------
# Reports


def path_report(path, delimiter=","):
    """Per-penalty rows ``lambda, p, delta, edges[, gaussian_loglik]``."""
    buf = io.StringIO()
    cols = ["j", "lambda", "p", "delta", "edges"]
    with_ll = path.precisions is not None and path.n is not None
    if with_ll:
        cols.append("gaussian_loglik")
    buf.write(delimiter.join(cols) + "\n")
    for j in range(path.J):
        row = [str(j + 1), repr(float(path.lambdas[j])), str(path.p[j]), str(path.delta[j]),
               str(path.edge_counts()[j])]
        if with_ll:
            row.append(repr(path.gaussian_loglik(j)))
        buf.write(delimiter.join(row) + "\n")
    return buf.getvalue()


def precision_coo(omega, delimiter=","):
    """Non-zero upper-triangle entries as ``i, j, value`` lines (1-based)."""
    omega = np.asarray(omega)
    buf = io.StringIO()
    buf.write(delimiter.join(["i", "j", "value"]) + "\n")
    iu, ju = np.nonzero(np.triu(omega != 0))
    for i, j in zip(iu, ju):
        buf.write(f"{i + 1}{delimiter}{j + 1}{delimiter}{float(omega[i, j])!r}\n")
    return buf.getvalue()
