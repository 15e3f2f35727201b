import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from vineclust.copula import (DEFAULT_FAMILIES, EPS, Family, FitError, PairCopula, fit_pair_copula_mle,
                              independence_test, kendall_tau, make_copula, pair_density_h,
                              select_pair_copula, selection_weight, tau_to_parameter)

# one representative parameter per family and rotation
COPULAS = [
    make_copula("gaussian", 0.6),
    make_copula("gaussian", -0.4),
    make_copula("t", 0.5, 5.0),
    make_copula("t", -0.3, 12.0),
    make_copula("clayton", 1.5),
    make_copula("clayton90", 1.2),
    make_copula("clayton180", 2.0),
    make_copula("clayton270", 0.8),
    make_copula("gumbel", 1.8),
    make_copula("gumbel90", 1.4),
    make_copula("gumbel180", 1.6),
    make_copula("gumbel270", 2.2),
    make_copula("frank", 4.0),
    make_copula("frank", -6.0),
    make_copula("joe", 1.7),
    make_copula("joe90", 1.5),
    make_copula("joe180", 2.1),
    make_copula("joe270", 1.3),
]
IDS = [f"{c.code}-{c.theta1:g}" for c in COPULAS]


def brute_tau(u, v):
    n = len(u)
    s = 0
    for i in range(n):
        for j in range(i + 1, n):
            s += np.sign(u[i] - u[j]) * np.sign(v[i] - v[j])
    return s / (n * (n - 1) / 2)


class TestKendallTau:
    def test_concordant(self):
        assert kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0

    def test_discordant(self):
        assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0

    def test_four_points(self):
        assert kendall_tau([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(1 / 3)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=3, max_size=15, unique_by=(lambda t: t[0], lambda t: t[1])))
    def test_matches_pair_count_without_ties(self, pts):
        u, v = np.array(pts).T
        assert kendall_tau(u, v) == pytest.approx(brute_tau(u, v), abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            kendall_tau([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            kendall_tau([1], [1])


class TestTauInversion:
    def test_examples(self):
        assert tau_to_parameter("gaussian", 0.0) == 0.0
        assert tau_to_parameter("gaussian", 0.5) == pytest.approx(0.70711, abs=1e-5)
        assert tau_to_parameter("clayton", 0.5) == pytest.approx(2.0)

    def test_gaussian_against_integrated_tau(self):
        # tau = 4 E[C(U, V)] - 1, integrated numerically
        c = make_copula("gaussian", tau_to_parameter("gaussian", 0.5))
        cov = [[1, c.theta1], [c.theta1, 1]]

        def integrand(v, u):
            x = stats.norm.ppf([u, v])
            cdf = stats.multivariate_normal.cdf(x, cov=cov)
            return cdf * c.pdf(u, v)

        val, _ = integrate.dblquad(integrand, 1e-6, 1 - 1e-6, 1e-6, 1 - 1e-6, epsabs=1e-5)
        assert 4 * val - 1 == pytest.approx(0.5, abs=5e-3)

    def test_clayton_simulation(self):
        c = make_copula("clayton", tau_to_parameter("clayton", 0.5))
        uv = c.simulate(100_000, np.random.default_rng(3))
        assert kendall_tau(uv[:, 0], uv[:, 1]) == pytest.approx(0.5, abs=0.01)

    @pytest.mark.parametrize("name", ["gaussian", "clayton", "gumbel", "frank", "joe"])
    @pytest.mark.parametrize("tau", [0.05, 0.2, 0.45, 0.7, 0.85])
    def test_round_trip(self, name, tau):
        theta = tau_to_parameter(name, tau)
        assert make_copula(name, theta).tau() == pytest.approx(tau, abs=1e-6)

    @pytest.mark.parametrize("name", ["clayton90", "gumbel270", "frank", "gaussian"])
    def test_negative_round_trip(self, name):
        theta = tau_to_parameter(name, -0.4)
        assert make_copula(name, theta).tau() == pytest.approx(-0.4, abs=1e-6)

    def test_errors(self):
        with pytest.raises(ValueError):
            tau_to_parameter("clayton", -0.3)
        with pytest.raises(ValueError):
            tau_to_parameter("t", 0.3)
        with pytest.raises(ValueError):
            tau_to_parameter("gaussian", 1.0)


class TestPairCopula:
    def test_domain(self):
        for fam, t1, t2 in [("gaussian", 1.0, 0), ("t", 0.5, 2.0), ("clayton", 0.0, 0),
                            ("gumbel", 0.9, 0), ("frank", 0.0, 0), ("joe", 0.5, 0)]:
            with pytest.raises(ValueError):
                make_copula(fam, t1, t2)
        with pytest.raises(ValueError):
            PairCopula(Family.GAUSSIAN, 90, 0.3)

    def test_nparams(self):
        assert PairCopula().nparams == 0
        assert make_copula("t", 0.2, 4.0).nparams == 2
        assert make_copula("frank", 2.0).nparams == 1

    def test_independence(self):
        u, v = np.array([0.1, 0.7]), np.array([0.4, 0.9])
        dens, h1, h2 = pair_density_h(PairCopula(), u, v)
        np.testing.assert_array_equal(dens, 1.0)
        np.testing.assert_allclose(h1, u)
        np.testing.assert_allclose(h2, v)

    def test_gaussian_h_at_median(self):
        assert make_copula("gaussian", 0.5).h1(0.5, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_gaussian_h_finite_difference(self):
        rho, u, v, eps = 0.7, 0.3, 0.6, 1e-4
        cov = [[1, rho], [rho, 1]]

        def C(a, b):
            return stats.multivariate_normal.cdf(stats.norm.ppf([a, b]), cov=cov,
                                                 abseps=1e-13, releps=1e-13)

        fd = (C(u, v + eps) - C(u, v - eps)) / (2 * eps)
        assert make_copula("gaussian", rho).h1(u, v) == pytest.approx(fd, abs=1e-6)

    @pytest.mark.parametrize("cop", COPULAS, ids=IDS)
    def test_density_integrates_to_one(self, cop):
        val, _ = integrate.dblquad(lambda v, u: cop.pdf(u, v), 0, 1, 0, 1, epsabs=1e-7, epsrel=1e-7)
        assert val == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("cop", COPULAS, ids=IDS)
    def test_h_is_conditional_cdf(self, cop):
        # h1(u, v) is the integral of the density over [0, u] at fixed v
        for u, v in [(0.2, 0.3), (0.6, 0.8), (0.9, 0.15)]:
            val, _ = integrate.quad(lambda s: cop.pdf(s, v), 0, u, epsabs=1e-10)
            assert cop.h1(u, v) == pytest.approx(val, abs=1e-6)
            val, _ = integrate.quad(lambda s: cop.pdf(u, s), 0, v, epsabs=1e-10)
            assert cop.h2(u, v) == pytest.approx(val, abs=1e-6)

    @pytest.mark.parametrize("cop", COPULAS, ids=IDS)
    def test_h_monotone_and_onto(self, cop):
        grid = np.linspace(0, 1, 401)
        for v in (0.01, 0.3, 0.5, 0.77, 0.99):
            h = cop.h1(grid, np.full_like(grid, v))
            assert np.all(np.diff(h) >= -1e-12)
            assert h[0] < 1e-3 and h[-1] > 1 - 1e-3
            assert np.all((h >= 0) & (h <= 1))

    @pytest.mark.parametrize("cop", COPULAS, ids=IDS)
    def test_inverse_h(self, cop):
        rng = np.random.default_rng(0)
        w, v = rng.uniform(0.01, 0.99, (2, 200))
        np.testing.assert_allclose(cop.h1(cop.h1inv(w, v), v), w, atol=1e-8)
        np.testing.assert_allclose(cop.h2(v, cop.h2inv(w, v)), w, atol=1e-8)

    @pytest.mark.parametrize("cop", COPULAS, ids=IDS)
    def test_density_nonnegative(self, cop):
        g = np.linspace(EPS, 1 - EPS, 60)
        uu, vv = np.meshgrid(g, g)
        d = cop.pdf(uu.ravel(), vv.ravel())
        assert np.all(d >= 0) and np.all(np.isfinite(d))

    @pytest.mark.parametrize("name", ["clayton", "gumbel", "joe"])
    def test_survival_rotation(self, name):
        base = make_copula(name, 2.0)
        rot = make_copula(name + "180", 2.0)
        rng = np.random.default_rng(1)
        u, v = rng.uniform(0.01, 0.99, (2, 50))
        np.testing.assert_allclose(rot.logpdf(u, v), base.logpdf(1 - u, 1 - v), rtol=1e-10)

    @pytest.mark.parametrize("cop", COPULAS, ids=IDS)
    def test_transposed(self, cop):
        rng = np.random.default_rng(2)
        u, v = rng.uniform(0.01, 0.99, (2, 50))
        t = cop.transposed()
        np.testing.assert_allclose(t.logpdf(v, u), cop.logpdf(u, v), rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(t.h1(v, u), cop.h2(u, v), atol=1e-10)

    def test_simulated_tau(self):
        for cop in COPULAS:
            uv = cop.simulate(20_000, np.random.default_rng(5))
            assert kendall_tau(uv[:, 0], uv[:, 1]) == pytest.approx(cop.tau(), abs=0.02), cop.code


class TestFitting:
    def test_independent_gaussian(self):
        rng = np.random.default_rng(0)
        u, v = rng.random((2, 1000))
        res = fit_pair_copula_mle(u, v, "gaussian")
        assert abs(res.copula.theta1) < 0.08
        assert res.nparams == 1

    def test_clayton_recovery(self):
        uv = make_copula("clayton", 2.0).simulate(1000, np.random.default_rng(7))
        res = fit_pair_copula_mle(uv[:, 0], uv[:, 1], "clayton")
        assert res.copula.theta1 == pytest.approx(2.0, abs=0.3)

    def test_student_recovery(self):
        uv = make_copula("t", 0.6, 4.0).simulate(3000, np.random.default_rng(8))
        res = fit_pair_copula_mle(uv[:, 0], uv[:, 1], "t")
        assert res.copula.theta1 == pytest.approx(0.6, abs=0.05)
        assert 2.5 < res.copula.theta2 < 8.0
        assert res.nparams == 2

    def test_comonotone_flags_boundary(self):
        u = np.linspace(0.01, 0.99, 200)
        for fam in ("gaussian", "clayton", "gumbel", "frank"):
            try:
                res = fit_pair_copula_mle(u, u, fam)
            except FitError:
                continue
            assert res.at_boundary, fam

    def test_constant_margin(self):
        with pytest.raises(FitError):
            fit_pair_copula_mle(np.full(20, 0.5), np.linspace(0.1, 0.9, 20), "gaussian")

    def test_too_few(self):
        with pytest.raises(ValueError):
            fit_pair_copula_mle(np.arange(5) / 6, np.arange(5) / 6, "gaussian")

    @pytest.mark.parametrize("name", ["gaussian", "clayton", "gumbel", "frank", "joe"])
    def test_mle_not_worse_than_start(self, name):
        uv = make_copula("gumbel", 1.7).simulate(500, np.random.default_rng(11))
        u, v = uv[:, 0], uv[:, 1]
        res = fit_pair_copula_mle(u, v, name)
        start = make_copula(name, tau_to_parameter(name, kendall_tau(u, v)))
        assert res.loglik >= start.loglik(u, v) - 1e-9

    def test_weight_is_function_of_loglik(self):
        uv = make_copula("frank", 5.0).simulate(300, np.random.default_rng(4))
        for metric in ("loglik", "aic", "bic"):
            res = fit_pair_copula_mle(uv[:, 0], uv[:, 1], "frank", metric=metric)
            assert res.mu == selection_weight(res.loglik, res.nparams, 300, metric)

    def test_selection_weights(self):
        assert selection_weight(10.0, 3, 100, "aic") == 14.0
        assert selection_weight(0.0, 2, 1000, "bic") == pytest.approx(-2 * math.log(1000))
        with pytest.raises(ValueError):
            selection_weight(0, 1, 10, "hqc")


class TestIndependenceTest:
    def test_zero(self):
        u = np.linspace(0.05, 0.95, 30)
        reject, stat = independence_test(u, u, tau=0.0)
        assert not reject and stat == 0.0

    def test_strong(self):
        u = np.linspace(0.01, 0.99, 100)
        reject, stat = independence_test(u, u, 0.05, tau=0.3)
        assert reject
        assert stat == pytest.approx(0.3 * math.sqrt(9 * 100 * 99 / (2 * 205)), rel=1e-12)
        assert stat == pytest.approx(4.4226, abs=1e-4)

    def test_weak(self):
        u = np.linspace(0.01, 0.99, 100)
        reject, stat = independence_test(u, u, 0.05, tau=0.01)
        assert not reject
        assert stat == pytest.approx(0.1474, abs=1e-4)

    def test_small_n(self):
        with pytest.raises(ValueError):
            independence_test(np.arange(5.0), np.arange(5.0))


class TestSelection:
    def test_independence_with_alpha(self):
        rng = np.random.default_rng(21)
        hits = 0
        for _ in range(200):
            u, v = rng.random((2, 200))
            hits += select_pair_copula(u, v, ["gaussian"], alpha=0.05).copula.is_independence
        assert 0.91 <= hits / 200 <= 0.99

    def test_independence_result_fields(self):
        rng = np.random.default_rng(1)
        u, v = rng.random((2, 200))
        res = select_pair_copula(u, v, ["frank"], alpha=0.999)
        if res.independent:
            assert res.mu == 0.0 and res.loglik == 0.0

    def test_gaussian_beats_frank(self):
        cop = make_copula("gaussian", 0.8)
        wins = 0
        for seed in range(100):
            uv = cop.simulate(300, np.random.default_rng(seed))
            res = select_pair_copula(uv[:, 0], uv[:, 1], ["gaussian", "frank"], "aic")
            wins += res.copula.family == Family.GAUSSIAN
        assert wins >= 90

    def test_singleton(self):
        uv = make_copula("clayton", 3.0).simulate(300, np.random.default_rng(0))
        for metric in ("loglik", "aic", "bic"):
            res = select_pair_copula(uv[:, 0], uv[:, 1], ["frank"], metric)
            assert res.copula.family == Family.FRANK

    def test_rotation_follows_sign(self):
        uv = make_copula("clayton90", 2.0).simulate(500, np.random.default_rng(0))
        res = select_pair_copula(uv[:, 0], uv[:, 1], ["clayton"])
        assert res.copula.rotation in (90, 270)
        assert res.copula.tau() < 0

    def test_default_set_picks_max_weight(self):
        uv = make_copula("gumbel", 2.0).simulate(400, np.random.default_rng(9))
        best = select_pair_copula(uv[:, 0], uv[:, 1], DEFAULT_FAMILIES)
        for fam in DEFAULT_FAMILIES:
            assert best.mu >= select_pair_copula(uv[:, 0], uv[:, 1], [fam]).mu - 1e-9

    def test_empty(self):
        with pytest.raises(ValueError):
            select_pair_copula(np.random.random(20), np.random.random(20), [])
