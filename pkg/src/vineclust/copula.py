"""Bivariate parametric copula families.

Every family is evaluated on arrays.  A :class:`PairCopula` carries a family
tag, a rotation and up to two parameters; 90/180/270 degree rotations are
available for the Clayton, Gumbel and Joe families.  Functions in this module
are pure and safe to call from several threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, optimize, special, stats

EPS = 1e-10

T_DF_BOUNDS = (2.01, 30.0)


class FitError(RuntimeError):
    """Raised when a pair-copula fit cannot be carried out."""

    def __init__(self, family, message, diagnostics=None):
        super().__init__(f"{family}: {message}")
        self.family = family
        self.diagnostics = diagnostics or {}


class Family(enum.IntEnum):
    INDEP = 0
    GAUSSIAN = 1
    STUDENT = 2
    CLAYTON = 3
    GUMBEL = 4
    FRANK = 5
    JOE = 6


FAMILY_NAMES = {
    Family.INDEP: "indep",
    Family.GAUSSIAN: "gaussian",
    Family.STUDENT: "t",
    Family.CLAYTON: "clayton",
    Family.GUMBEL: "gumbel",
    Family.FRANK: "frank",
    Family.JOE: "joe",
}
_NAME_TO_FAMILY = {v: k for k, v in FAMILY_NAMES.items()}
_NAME_TO_FAMILY.update({"independence": Family.INDEP, "student": Family.STUDENT,
                        "normal": Family.GAUSSIAN})

ROTATABLE = frozenset({Family.CLAYTON, Family.GUMBEL, Family.JOE})
ONE_PARAMETRIC = (Family.GAUSSIAN, Family.CLAYTON, Family.GUMBEL, Family.FRANK, Family.JOE)
DEFAULT_FAMILIES = ("gaussian", "t", "clayton", "gumbel", "frank", "joe")

# Search intervals for maximum likelihood.
_BOUNDS = {
    Family.GAUSSIAN: (-0.999, 0.999),
    Family.STUDENT: (-0.999, 0.999),
    Family.CLAYTON: (1e-4, 28.0),
    Family.GUMBEL: (1.0, 17.0),
    Family.FRANK: (-35.0, 35.0),
    Family.JOE: (1.0, 30.0),
}


def clamp(u):
    return np.clip(np.asarray(u, dtype=float), EPS, 1.0 - EPS)


# ---------------------------------------------------------------------------
# Base (unrotated, exchangeable) families.  ``_h`` is F(u | v) = dC(u, v)/dv.


def _gauss_logpdf(u, v, rho, _):
    x = special.ndtri(u)
    y = special.ndtri(v)
    r2 = 1.0 - rho * rho
    return -0.5 * math.log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)


def _gauss_h(u, v, rho, _):
    x = special.ndtri(u)
    y = special.ndtri(v)
    return special.ndtr((x - rho * y) / math.sqrt(1.0 - rho * rho))


def _gauss_hinv(w, v, rho, _):
    y = special.ndtri(v)
    return special.ndtr(special.ndtri(w) * math.sqrt(1.0 - rho * rho) + rho * y)


def _t_quantile(nu, p):
    # through the regularized incomplete beta inverse; faster than stdtrit
    p = np.asarray(p, dtype=float)
    q = np.minimum(p, 1.0 - p)
    z = special.betaincinv(nu / 2.0, 0.5, 2.0 * q)
    return np.sign(p - 0.5) * np.sqrt(nu * (1.0 / z - 1.0))


def _t_logpdf_xy(x, y, rho, nu):
    r2 = 1.0 - rho * rho
    const = (special.gammaln((nu + 2.0) / 2.0) + special.gammaln(nu / 2.0)
             - 2.0 * special.gammaln((nu + 1.0) / 2.0) - 0.5 * math.log(r2))
    quad = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2)
    return (const - (nu + 2.0) / 2.0 * np.log1p(quad)
            + (nu + 1.0) / 2.0 * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))


def _t_logpdf(u, v, rho, nu):
    return _t_logpdf_xy(_t_quantile(nu, u), _t_quantile(nu, v), rho, nu)


def _t_h(u, v, rho, nu):
    x = _t_quantile(nu, u)
    y = _t_quantile(nu, v)
    scale = np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
    return special.stdtr(nu + 1.0, (x - rho * y) / scale)


def _t_hinv(w, v, rho, nu):
    y = _t_quantile(nu, v)
    scale = np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
    x = _t_quantile(nu + 1.0, w) * scale + rho * y
    return special.stdtr(nu, x)


def _clayton_logsum(u, v, theta):
    # log(u^-theta + v^-theta - 1) without overflow
    a = -theta * np.log(u)
    b = -theta * np.log(v)
    m = np.logaddexp(a, b)
    return m + np.log1p(-np.exp(-m))


def _clayton_logpdf(u, v, theta, _):
    lu, lv = np.log(u), np.log(v)
    return (math.log1p(theta) - (1.0 + theta) * (lu + lv)
            - (2.0 + 1.0 / theta) * _clayton_logsum(u, v, theta))


def _clayton_h(u, v, theta, _):
    return np.exp(-(theta + 1.0) * np.log(v) - (1.0 / theta + 1.0) * _clayton_logsum(u, v, theta))


def _clayton_hinv(w, v, theta, _):
    inner = 1.0 + np.exp(-theta * np.log(v)) * np.expm1(-theta / (1.0 + theta) * np.log(w))
    return np.exp(-np.log(inner) / theta)


def _gumbel_parts(u, v, theta):
    x = -np.log(u)
    y = -np.log(v)
    lx, ly = np.log(x), np.log(y)
    log_s = np.logaddexp(theta * lx, theta * ly)
    a = np.exp(log_s / theta)
    return x, y, lx, ly, log_s, a


def _gumbel_logpdf(u, v, theta, _):
    x, y, lx, ly, log_s, a = _gumbel_parts(u, v, theta)
    return (-a + x + y + (theta - 1.0) * (lx + ly) + (1.0 / theta - 2.0) * log_s
            + np.log(a + theta - 1.0))


def _gumbel_h(u, v, theta, _):
    x, y, lx, ly, log_s, a = _gumbel_parts(u, v, theta)
    return np.exp(-a + (1.0 / theta - 1.0) * log_s + (theta - 1.0) * ly + y)


def _frank_logpdf(u, v, theta, _):
    if abs(theta) < 1e-8:
        return np.zeros(np.broadcast(u, v).shape)
    a = -np.expm1(-theta * u)
    b = -np.expm1(-theta * v)
    g = -math.expm1(-theta)
    den = g - a * b
    return math.log(theta * g) - theta * (u + v) - 2.0 * np.log(np.abs(den))


def _frank_h(u, v, theta, _):
    if abs(theta) < 1e-8:
        return np.array(u, dtype=float, copy=True)
    a = -np.expm1(-theta * u)
    b = -np.expm1(-theta * v)
    g = -math.expm1(-theta)
    return np.exp(-theta * v) * a / (g - a * b)


def _frank_hinv(w, v, theta, _):
    if abs(theta) < 1e-8:
        return np.array(w, dtype=float, copy=True)
    g = -math.expm1(-theta)
    a = w * g / (w + (1.0 - w) * np.exp(-theta * v))
    return -np.log1p(-a) / theta


def _joe_parts(u, v, theta):
    ub = 1.0 - u
    vb = 1.0 - v
    x = ub ** theta
    y = vb ** theta
    s = x + y - x * y
    return ub, vb, x, y, s


def _joe_logpdf(u, v, theta, _):
    ub, vb, x, y, s = _joe_parts(u, v, theta)
    return ((1.0 / theta - 2.0) * np.log(s) + (theta - 1.0) * (np.log(ub) + np.log(vb))
            + np.log(theta - 1.0 + s))


def _joe_h(u, v, theta, _):
    ub, vb, x, y, s = _joe_parts(u, v, theta)
    return np.exp((1.0 / theta - 1.0) * np.log(s) + (theta - 1.0) * np.log(vb)) * (1.0 - x)


def _bisect_hinv(h):
    """Numerically invert a conditional cdf that is increasing in its first argument."""

    def hinv(w, v, t1, t2):
        w, v = np.broadcast_arrays(np.asarray(w, float), np.asarray(v, float))
        if w.size == 0:
            return np.empty(w.shape)
        # bisection in the probit domain keeps resolution near the boundaries
        zlo = np.full(w.shape, -9.0)
        zhi = np.full(w.shape, 9.0)
        for _ in range(60):
            zmid = 0.5 * (zlo + zhi)
            val = h(special.ndtr(zmid), v, t1, t2)
            below = val < w
            zlo = np.where(below, zmid, zlo)
            zhi = np.where(below, zhi, zmid)
            if np.max(zhi - zlo) < 1e-12:
                break
        return special.ndtr(0.5 * (zlo + zhi))

    return hinv


_IMPL = {
    Family.GAUSSIAN: (_gauss_logpdf, _gauss_h, _gauss_hinv),
    Family.STUDENT: (_t_logpdf, _t_h, _t_hinv),
    Family.CLAYTON: (_clayton_logpdf, _clayton_h, _clayton_hinv),
    Family.GUMBEL: (_gumbel_logpdf, _gumbel_h, _bisect_hinv(_gumbel_h)),
    Family.FRANK: (_frank_logpdf, _frank_h, _frank_hinv),
    Family.JOE: (_joe_logpdf, _joe_h, _bisect_hinv(_joe_h)),
}


# ---------------------------------------------------------------------------
# Kendall's tau relations


def _debye1(x):
    if x == 0.0:
        return 1.0
    if x > 50.0:
        # tail beyond 50 is below 1e-19
        return math.pi ** 2 / 6.0 / x
    val, _ = integrate.quad(lambda t: t / math.expm1(t) if t > 0 else 1.0, 0.0, x)
    return val / x


def _frank_tau(theta):
    if abs(theta) < 1e-8:
        return 0.0
    a = abs(theta)
    tau = 1.0 - 4.0 / a + 4.0 * _debye1(a) / a
    return math.copysign(tau, theta)


def _joe_tau(theta):
    if theta == 1.0:
        return 0.0
    if abs(theta - 2.0) < 1e-6:
        # removable singularity of the digamma form
        return 0.5 * (_joe_tau(2.0 - 2e-6) + _joe_tau(2.0 + 2e-6))
    return 1.0 + 2.0 / (2.0 - theta) * (special.digamma(2.0) - special.digamma(2.0 / theta + 1.0))


def _base_tau(family, theta):
    if family in (Family.GAUSSIAN, Family.STUDENT):
        return 2.0 / math.pi * math.asin(theta)
    if family == Family.CLAYTON:
        return theta / (theta + 2.0)
    if family == Family.GUMBEL:
        return 1.0 - 1.0 / theta
    if family == Family.FRANK:
        return _frank_tau(theta)
    if family == Family.JOE:
        return _joe_tau(theta)
    return 0.0


def _solve_increasing(f, target, lo, hi, tol=1e-12):
    # bisection; f increasing on [lo, hi]
    flo = f(lo) - target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid) - target
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def tau_to_parameter(family, tau, rotation=0):
    """Invert the Kendall's tau relation of a one-parametric family.

    ``family`` may be a :class:`Family`, a name such as ``"clayton"`` or a
    rotated name such as ``"clayton90"`` (which overrides ``rotation``).
    """
    family, rot = parse_family(family)
    if rot is not None:
        rotation = rot
    if family == Family.STUDENT:
        raise ValueError("tau inversion is only defined for one-parametric families")
    if family == Family.INDEP:
        raise ValueError("the independence copula has no parameter")
    tau = float(tau)
    if not -1.0 < tau < 1.0:
        raise ValueError(f"tau={tau} outside (-1, 1)")
    if rotation in (90, 270):
        tau = -tau
    if family == Family.GAUSSIAN:
        return math.sin(math.pi * tau / 2.0)
    if family == Family.FRANK:
        if tau == 0.0:
            raise ValueError("tau=0 is not attainable by the Frank family (theta != 0)")
        theta = _solve_increasing(_frank_tau, abs(tau), 1e-8, 1e3)
        return math.copysign(theta, tau)
    if tau < 0.0:
        raise ValueError(f"tau={tau} not attainable by {FAMILY_NAMES[family]} with rotation {rotation}")
    if family == Family.CLAYTON:
        if tau == 0.0:
            raise ValueError("tau=0 is not attainable by the Clayton family (theta > 0)")
        return 2.0 * tau / (1.0 - tau)
    if family == Family.GUMBEL:
        return 1.0 / (1.0 - tau)
    if family == Family.JOE:
        if tau == 0.0:
            return 1.0
        return _solve_increasing(_joe_tau, tau, 1.0, 1e4)
    raise ValueError(f"unsupported family {family!r}")


def parse_family(spec):
    """Return ``(Family, rotation or None)`` for a family specification."""
    if isinstance(spec, Family):
        return spec, None
    if isinstance(spec, (int, np.integer)):
        return Family(int(spec)), None
    text = str(spec).strip().lower()
    for rot in (270, 180, 90):
        suffix = str(rot)
        if text.endswith(suffix) and text[: -len(suffix)] in _NAME_TO_FAMILY:
            fam = _NAME_TO_FAMILY[text[: -len(suffix)]]
            if fam not in ROTATABLE:
                raise ValueError(f"family {fam.name.lower()} cannot be rotated")
            return fam, rot
    if text not in _NAME_TO_FAMILY:
        raise ValueError(f"unknown copula family {spec!r}")
    return _NAME_TO_FAMILY[text], None


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairCopula:
    """A bivariate copula: family, rotation in degrees and parameters.

    ``theta1`` is the correlation for Gaussian/Student-t and the dependence
    parameter otherwise; ``theta2`` holds the Student-t degrees of freedom.
    """

    family: Family = Family.INDEP
    rotation: int = 0
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "rotation", int(self.rotation))
        object.__setattr__(self, "theta1", float(self.theta1))
        object.__setattr__(self, "theta2", float(self.theta2))
        fam, t1, t2 = self.family, self.theta1, self.theta2
        if self.rotation not in (0, 90, 180, 270):
            raise ValueError(f"rotation must be 0, 90, 180 or 270, got {self.rotation}")
        if self.rotation and fam not in ROTATABLE:
            raise ValueError(f"{FAMILY_NAMES[fam]} does not support rotation")
        if fam == Family.INDEP:
            return
        if fam in (Family.GAUSSIAN, Family.STUDENT) and not -1.0 < t1 < 1.0:
            raise ValueError(f"correlation {t1} outside (-1, 1)")
        if fam == Family.STUDENT and not t2 > 2.0:
            raise ValueError(f"degrees of freedom {t2} must exceed 2")
        if fam == Family.CLAYTON and not t1 > 0.0:
            raise ValueError(f"Clayton parameter {t1} must be positive")
        if fam in (Family.GUMBEL, Family.JOE) and not t1 >= 1.0:
            raise ValueError(f"{FAMILY_NAMES[fam]} parameter {t1} must be >= 1")
        if fam == Family.FRANK and t1 == 0.0:
            raise ValueError("Frank parameter must be non-zero")

    @property
    def nparams(self):
        if self.family == Family.INDEP:
            return 0
        return 2 if self.family == Family.STUDENT else 1

    @property
    def code(self):
        name = FAMILY_NAMES[self.family]
        return f"{name}{self.rotation}" if self.rotation else name

    @property
    def is_independence(self):
        return self.family == Family.INDEP

    def tau(self):
        t = _base_tau(self.family, self.theta1)
        return -t if self.rotation in (90, 270) else t

    def transposed(self):
        """Copula of (V, U) when this one describes (U, V)."""
        if self.rotation in (90, 270):
            return PairCopula(self.family, 360 - self.rotation, self.theta1, self.theta2)
        return self

    # -- evaluation -------------------------------------------------------
    def logpdf(self, u, v):
        u, v = clamp(u), clamp(v)
        if self.family == Family.INDEP:
            return np.zeros(np.broadcast(u, v).shape)
        f = _IMPL[self.family][0]
        r = self.rotation
        if r == 90:
            u = 1.0 - u
        elif r == 180:
            u, v = 1.0 - u, 1.0 - v
        elif r == 270:
            v = 1.0 - v
        return f(u, v, self.theta1, self.theta2)

    def pdf(self, u, v):
        return np.exp(self.logpdf(u, v))

    def h1(self, u, v):
        """Conditional cdf of the first argument given the second, dC/dv."""
        u, v = clamp(u), clamp(v)
        if self.family == Family.INDEP:
            return np.array(np.broadcast_to(u, np.broadcast(u, v).shape), copy=True)
        h = _IMPL[self.family][1]
        a, b = self.theta1, self.theta2
        r = self.rotation
        if r == 0:
            out = h(u, v, a, b)
        elif r == 180:
            out = 1.0 - h(1.0 - u, 1.0 - v, a, b)
        elif r == 90:
            out = 1.0 - h(1.0 - u, v, a, b)
        else:
            out = h(u, 1.0 - v, a, b)
        return clamp(out)

    def h2(self, u, v):
        """Conditional cdf of the second argument given the first, dC/du."""
        return self.transposed().h1(v, u)

    def h1inv(self, w, v):
        """Inverse of :meth:`h1` in its first argument."""
        w, v = clamp(w), clamp(v)
        if self.family == Family.INDEP:
            return np.array(np.broadcast_to(w, np.broadcast(w, v).shape), copy=True)
        hinv = _IMPL[self.family][2]
        a, b = self.theta1, self.theta2
        r = self.rotation
        if r == 0:
            out = hinv(w, v, a, b)
        elif r == 180:
            out = 1.0 - hinv(1.0 - w, 1.0 - v, a, b)
        elif r == 90:
            out = 1.0 - hinv(1.0 - w, v, a, b)
        else:
            out = hinv(w, 1.0 - v, a, b)
        return clamp(out)

    def h2inv(self, w, u):
        return self.transposed().h1inv(w, u)

    def loglik(self, u, v):
        return float(np.sum(self.logpdf(u, v)))

    def simulate(self, n, rng):
        """Draw ``n`` pairs by inverting :meth:`h1`."""
        rng = np.random.default_rng(rng)
        v = rng.random(n)
        w = rng.random(n)
        return np.column_stack([self.h1inv(w, v), v])

    def to_dict(self):
        return {"family": self.code, "theta1": self.theta1, "theta2": self.theta2}


INDEPENDENCE = PairCopula()


def make_copula(spec, theta1=0.0, theta2=0.0):
    fam, rot = parse_family(spec)
    return PairCopula(fam, rot or 0, theta1, theta2)


def pair_density_h(copula, u, v):
    """Density, h1 = dC/dv and h2 = dC/du at (u, v)."""
    return copula.pdf(u, v), copula.h1(u, v), copula.h2(u, v)


# ---------------------------------------------------------------------------
# Estimation


def kendall_tau(u, v):
    """Tie-corrected Kendall's tau-b."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    if u.size < 2:
        raise ValueError("kendall_tau needs at least two observations")
    tau = stats.kendalltau(u, v).statistic
    return 0.0 if np.isnan(tau) else float(tau)


def independence_test(u, v, alpha=0.05, tau=None):
    """Asymptotic normal test of Kendall's tau against zero.

    Returns ``(reject, statistic)`` where the statistic is
    ``|tau| * sqrt(9 n (n - 1) / (2 (2 n + 5)))``.
    """
    n = len(u)
    if n < 10:
        raise ValueError(f"independence test needs n >= 10, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if tau is None:
        tau = kendall_tau(u, v)
    stat = abs(tau) * math.sqrt(9.0 * n * (n - 1) / (2.0 * (2 * n + 5)))
    return bool(stat > stats.norm.ppf(1.0 - alpha / 2.0)), stat


METRICS = ("loglik", "aic", "bic")


def selection_weight(loglik, nparams, n, metric="aic"):
    """Edge weight mu, larger is better: loglik, -AIC or -BIC."""
    if metric == "loglik":
        return loglik
    if metric == "aic":
        return 2.0 * loglik - 2.0 * nparams
    if metric == "bic":
        return 2.0 * loglik - math.log(n) * nparams
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class FitResult:
    copula: PairCopula
    loglik: float
    nparams: int
    mu: float
    independent: bool = False
    at_boundary: bool = False
    tau: float = float("nan")
    diagnostics: dict = field(default_factory=dict, compare=False)


def independence_result(tau=float("nan")):
    return FitResult(INDEPENDENCE, 0.0, 0, 0.0, independent=True, tau=tau)


def _check_pair(u, v, family):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be one-dimensional and of equal length")
    if u.size < 10:
        raise ValueError(f"maximum likelihood needs n >= 10, got {u.size}")
    if np.ptp(u) == 0.0 or np.ptp(v) == 0.0:
        raise FitError(family, "degenerate data: constant margin")
    return clamp(u), clamp(v)


def _start_value(family, rotation, tau):
    lo, hi = _BOUNDS[family]
    try:
        start = tau_to_parameter(family, tau, rotation)
    except ValueError:
        start = {Family.CLAYTON: 0.05, Family.GUMBEL: 1.02, Family.JOE: 1.02,
                 Family.FRANK: 0.1 if tau >= 0 else -0.1}.get(family, 0.0)
    return float(np.clip(start, lo, hi))


def _fit_one_param(u, v, family, rotation, tau):
    lo, hi = _BOUNDS[family]

    def nll(theta):
        if family == Family.FRANK and abs(theta) < 1e-8:
            return 0.0
        c = PairCopula(family, rotation, theta)
        val = -np.sum(c.logpdf(u, v))
        return val if np.isfinite(val) else 1e300

    start = _start_value(family, rotation, tau)
    start_f = nll(start)
    best_x, best_f = start, start_f
    width = 0.25 * (hi - lo)
    brackets = [(lo, hi),
                (max(lo, start - width), min(hi, start + width)),
                (max(lo, start - 0.1 * width), min(hi, start + 0.1 * width))]
    evals = 1
    for a, b in brackets:
        res = optimize.minimize_scalar(nll, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-6 * max(1.0, abs(start))})
        evals += res.nfev
        if res.fun < best_f:
            best_x, best_f = float(res.x), float(res.fun)
        if best_f < start_f:
            break
    if family == Family.FRANK and abs(best_x) < 1e-8:
        best_x = 1e-8 if tau >= 0 else -1e-8
    # only the strong-dependence end flags a degenerate fit; the other end of
    # the one-sided families is the independence copula
    tol = (1e-3 if family == Family.GAUSSIAN else 1e-2) * (hi - lo)
    at_boundary = hi - best_x < tol
    if family in (Family.GAUSSIAN, Family.FRANK):
        at_boundary = at_boundary or best_x - lo < tol
    return PairCopula(family, rotation, best_x), -best_f, at_boundary, {"nfev": evals, "start": start}


def _fit_student(u, v, tau):
    rho0 = float(np.clip(math.sin(math.pi * tau / 2.0), -0.98, 0.98))
    lo_nu, hi_nu = T_DF_BOUNDS
    evals = 0
    cache = {}

    def profile(nu):
        # maximize over rho for fixed nu; the quantiles only depend on nu
        nonlocal evals
        evals += 1
        x, y = _t_quantile(nu, u), _t_quantile(nu, v)

        def nll(rho):
            val = -np.sum(_t_logpdf_xy(x, y, rho, nu))
            return val if np.isfinite(val) else 1e300

        res = optimize.minimize_scalar(nll, bounds=(-0.999, 0.999), method="bounded",
                                       options={"xatol": 1e-7})
        cache[nu] = float(res.x)
        return float(res.fun)

    grid = (2.5, 4.0, 6.0, 9.0, 14.0, 21.0, 29.0)
    vals = [profile(nu) for nu in grid]
    i = int(np.argmin(vals))
    lo = grid[i - 1] if i > 0 else lo_nu
    hi = grid[i + 1] if i < len(grid) - 1 else hi_nu
    res = optimize.minimize_scalar(profile, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-3})
    nu, f = (float(res.x), float(res.fun)) if res.fun < vals[i] else (grid[i], vals[i])
    rho = cache[nu]
    at_boundary = abs(rho) > 0.998
    return rho, nu, -f, at_boundary, {"nfev": evals, "start": (rho0, grid[i])}


def fit_pair_copula_mle(u, v, family, rotation=0, metric="aic", tau=None):
    """Maximum likelihood fit of one family to pseudo-observations ``(u, v)``.

    The Kendall's tau inversion estimate is the starting point.  A Student-t
    fit whose degrees of freedom reach the upper search bound is reported as
    the equivalent Gaussian copula.
    """
    fam, rot = parse_family(family)
    if rot is not None:
        rotation = rot
    u, v = _check_pair(u, v, fam)
    n = u.size
    if tau is None:
        tau = kendall_tau(u, v)
    if fam == Family.INDEP:
        return FitResult(INDEPENDENCE, 0.0, 0, 0.0, independent=True, tau=tau)
    if fam == Family.STUDENT:
        rho, nu, ll, at_boundary, diag = _fit_student(u, v, tau)
        if nu >= T_DF_BOUNDS[1] - 1e-3:
            gauss = _fit_one_param(u, v, Family.GAUSSIAN, 0, tau)
            cop, ll, at_boundary, diag2 = gauss
            diag = {**diag, **diag2, "gaussian_equivalent": True}
        else:
            cop = PairCopula(Family.STUDENT, 0, rho, nu)
    else:
        cop, ll, at_boundary, diag = _fit_one_param(u, v, fam, rotation, tau)
    if not np.isfinite(ll):
        raise FitError(fam, "non-finite log-likelihood at optimum", diag)
    k = cop.nparams
    return FitResult(cop, float(ll), k, selection_weight(ll, k, n, metric),
                     at_boundary=at_boundary, tau=tau, diagnostics=diag)


def expand_candidates(families, tau):
    """Concrete (family, rotation) pairs for the sign of ``tau``.

    Unsuffixed rotatable names expand to 0/180 degrees for non-negative
    dependence and to 90/270 degrees otherwise.
    """
    out = []
    for spec in families:
        fam, rot = parse_family(spec)
        if rot is not None:
            out.append((fam, rot))
        elif fam in ROTATABLE:
            out.extend([(fam, 0), (fam, 180)] if tau >= 0 else [(fam, 90), (fam, 270)])
        else:
            out.append((fam, 0))
    seen = []
    for item in out:
        if item not in seen:
            seen.append(item)
    return seen


def select_pair_copula(u, v, candidates=DEFAULT_FAMILIES, metric="aic", alpha=None):
    """Fit each candidate family and return the one with the largest weight.

    When ``alpha`` is given and the independence test does not reject, the
    independence copula is returned without fitting.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty candidate family set")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    tau = kendall_tau(u, v)
    if alpha is not None:
        reject, _ = independence_test(u, v, alpha, tau=tau)
        if not reject:
            return independence_result(tau)
    best = None
    errors = []
    for fam, rot in expand_candidates(candidates, tau):
        try:
            res = fit_pair_copula_mle(u, v, fam, rot, metric=metric, tau=tau)
        except (FitError, ValueError, FloatingPointError) as exc:
            errors.append(str(exc))
            continue
        if best is None or res.mu > best.mu:
            best = res
    if best is None:
        raise FitError("candidates", "all candidate fits failed", {"errors": errors})
    return best


def one_parametric(families: Iterable) -> list:
    """Filter a family list down to one-parametric members."""
    keep = []
    for spec in families:
        fam, _ = parse_family(spec)
        if fam in ONE_PARAMETRIC:
            keep.append(spec)
    return keep


def candidate_names(families: Sequence) -> list[str]:
    names = []
    for spec in families:
        fam, rot = parse_family(spec)
        names.append(FAMILY_NAMES[fam] + (str(rot) if rot else ""))
    return names
