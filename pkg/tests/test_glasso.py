import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import EXAMPLE_LAMBDAS, EXAMPLE_S
from vineclust.glasso import (covariance_path, default_lambdas, glasso_fit, glasso_path, kkt_residual,
                              path_report, precision_coo, precision_graph, sample_covariance,
                              screening_graph, select_partition, to_z_scale)
from vineclust.graphs import connected_components

EXAMPLE_PI = np.array([
    [0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1],
    [0, 0, 0, 1, 0, 1],
    [0, 0, 0, 1, 1, 0],
])


def random_cov(d, seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or 4 * d
    x = rng.normal(size=(n, d)) @ rng.normal(size=(d, d))
    x /= x.std(0)
    return np.cov(x.T, bias=True)


def kkt_oracle(S, omega, lam):
    # stationarity of log det - tr(S omega) - lam * sum|omega_ij|, written out
    W = np.linalg.inv(omega)
    d = S.shape[0]
    worst = 0.0
    for i in range(d):
        for j in range(d):
            g = W[i, j] - S[i, j]
            if i == j or omega[i, j] != 0:
                sign = 1.0 if i == j else np.sign(omega[i, j])
                worst = max(worst, abs(g - lam * sign))
            else:
                worst = max(worst, abs(g) - lam)
    return worst


def objective(S, omega, lam):
    return np.linalg.slogdet(omega)[1] - np.sum(S * omega) - lam * np.abs(omega).sum()


class TestScales:
    def test_probit(self):
        z = to_z_scale(np.array([[0.5, 0.975]])).data
        assert z[0, 0] == 0.0
        assert z[0, 1] == pytest.approx(1.95996, abs=1e-5)

    def test_rank_column(self):
        n = 1000
        z = to_z_scale((np.arange(1, n + 1) / (n + 1))[:, None]).data
        assert abs(z.mean()) < 0.05 and abs(z.var() - 1) < 0.05

    def test_outside(self):
        with pytest.raises(ValueError):
            to_z_scale(np.array([[1.2]]))


class TestCovariance:
    def test_identical_columns(self):
        x = np.random.default_rng(0).normal(size=(50, 1))
        S = sample_covariance(np.hstack([x, x]))
        assert S[0, 1] == pytest.approx(S[0, 0])

    def test_orthogonal(self):
        x = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        assert sample_covariance(x)[0, 1] == 0.0

    def test_law_of_large_numbers(self):
        sigma = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, -0.3], [0.2, -0.3, 1.0]])
        x = np.random.default_rng(1).multivariate_normal(np.zeros(3), sigma, 100_000)
        assert np.max(np.abs(sample_covariance(x) - sigma)) <= 0.02

    def test_psd(self):
        S = sample_covariance(np.random.default_rng(2).normal(size=(5, 8)))
        assert np.allclose(S, S.T) and np.linalg.eigvalsh(S).min() > -1e-12


class TestScreening:
    def test_example_adjacency(self):
        np.testing.assert_array_equal(screening_graph(EXAMPLE_S, 0.7438).adjacency(), EXAMPLE_PI)

    def test_above_max(self):
        assert not screening_graph(EXAMPLE_S, 0.97).edges

    def test_tiny_lambda_complete(self):
        assert len(screening_graph(EXAMPLE_S, 1e-9).edges) == 15

    def test_inclusive_threshold(self):
        S = np.array([[1.0, 0.5], [0.5, 1.0]])
        assert screening_graph(S, 0.5).has_edge(1, 2)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    def test_monotone(self, seed, a, b):
        S = random_cov(6, seed)
        lo, hi = sorted((a, b))
        assert screening_graph(S, hi).edges <= screening_graph(S, lo).edges


class TestGlassoFit:
    def test_identity(self):
        np.testing.assert_allclose(glasso_fit(np.eye(4), 0.0), np.eye(4), atol=1e-12)

    def test_unpenalized_is_inverse(self):
        S = random_cov(5, 0, n=50)
        assert np.max(np.abs(glasso_fit(S, 0.0) - np.linalg.inv(S))) <= 1e-6

    @pytest.mark.parametrize("lam", [0.1, 0.3])
    @pytest.mark.parametrize("seed", range(5))
    def test_kkt(self, lam, seed):
        S = random_cov(5, seed, n=50)
        omega = glasso_fit(S, lam)
        assert kkt_oracle(S, omega, lam) <= 1e-6
        assert kkt_residual(S, omega, lam) == pytest.approx(kkt_oracle(S, omega, lam), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_optimal_against_perturbations(self, seed):
        S = random_cov(5, seed, n=50)
        lam = 0.2
        omega = glasso_fit(S, lam)
        best = objective(S, omega, lam)
        rng = np.random.default_rng(seed)
        for _ in range(50):
            e = rng.normal(size=(5, 5)) * 1e-3
            cand = omega + (e + e.T) / 2
            if np.linalg.eigvalsh(cand).min() > 0:
                assert objective(S, cand, lam) <= best + 1e-12

    def test_large_penalty_diagonal(self):
        S = random_cov(5, 3)
        lam = 1.01 * np.max(np.abs(S - np.diag(np.diag(S))))
        omega = glasso_fit(S, lam)
        np.testing.assert_allclose(omega, np.diag(1.0 / (np.diag(S) + lam)), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_positive_definite_symmetric(self, seed):
        S = random_cov(7, seed)
        omega = glasso_fit(S, 0.15)
        np.testing.assert_array_equal(omega, omega.T)
        np.linalg.cholesky(omega)

    def test_decomposed_equals_full(self):
        S = random_cov(8, 4)
        lam = 0.35
        a = glasso_fit(S, lam)
        b = glasso_fit(S, lam, decompose=False)
        assert np.max(np.abs(a - b)) < 1e-6
        assert connected_components(precision_graph(a)) == connected_components(precision_graph(b))

    def test_negative_penalty(self):
        with pytest.raises(ValueError):
            glasso_fit(np.eye(2), -0.1)

    def test_component_equivalence(self):
        mismatches = 0
        for seed in range(100):
            S = random_cov(8, seed, n=30)
            path = covariance_path(S, J=10)
            for lam, g in zip(path.lambdas, path.graphs):
                omega = glasso_fit(S, lam, decompose=False)
                mismatches += connected_components(g) != connected_components(precision_graph(omega))
        assert mismatches == 0


class TestPath:
    def test_example_table(self):
        path = covariance_path(EXAMPLE_S, lambdas=EXAMPLE_LAMBDAS)
        assert path.p == [6, 4, 3, 1]
        assert path.delta == [1, 3, 4, 6]
        np.testing.assert_array_equal(path.graphs[1].adjacency(), EXAMPLE_PI)

    def test_lambdas_sorted(self):
        path = covariance_path(EXAMPLE_S, lambdas=EXAMPLE_LAMBDAS[::-1])
        assert list(path.lambdas) == list(EXAMPLE_LAMBDAS)

    def test_default_path(self):
        lams = default_lambdas(EXAMPLE_S, 30)
        assert len(lams) == 30
        assert lams[-1] == pytest.approx(0.1 * 0.9606)
        ratios = lams[1:] / lams[:-1]
        np.testing.assert_allclose(ratios, ratios[0])

    def test_two_point_path_starts_edgeless(self):
        for seed in range(10):
            path = covariance_path(random_cov(6, seed), J=2)
            assert not path.graphs[0].edges

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_monotone_path(self, seed):
        path = covariance_path(random_cov(7, seed), J=12)
        assert all(a <= b for a, b in zip(path.delta, path.delta[1:]))
        assert all(a >= b for a, b in zip(path.p, path.p[1:]))
        assert all(lam > 0 for lam in path.lambdas)

    def test_precision_support_matches_graph_components(self):
        S = random_cov(6, 1)
        path = covariance_path(S, J=6, precision=True, n=24)
        for g, om in zip(path.graphs, path.precisions):
            assert connected_components(g) == connected_components(precision_graph(om))
        assert path.gaussian_loglik(3) is not None

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            covariance_path(EXAMPLE_S, lambdas=[0.5, 0.0])

    def test_from_z(self):
        x = np.random.default_rng(0).normal(size=(100, 3))
        u = stats.norm.cdf(x)
        path = glasso_path(to_z_scale(u), J=5)
        assert path.J == 5 and path.n == 100


class TestPartitionSelection:
    path = covariance_path(EXAMPLE_S, lambdas=EXAMPLE_LAMBDAS)

    def test_threshold_four(self):
        c = select_partition(self.path, 4)
        assert c.T == 3
        assert c.partition == ((1, 4, 5, 6), (2,), (3,))

    def test_threshold_six(self):
        c = select_partition(self.path, 6)
        assert c.T == 4 and c.partition == ((1, 2, 3, 4, 5, 6),)

    def test_threshold_one(self):
        c = select_partition(self.path, 1)
        assert c.T == 1 and c.p == 6

    def test_tie_goes_to_densest(self):
        S = np.eye(4)
        S[0, 1] = S[1, 0] = 0.8
        S[2, 3] = S[3, 2] = 0.6
        path = covariance_path(S, lambdas=(0.9, 0.7, 0.5))
        assert path.delta == [1, 2, 2]
        c = select_partition(path, 2)
        assert c.T == 3 and c.partition == ((1, 2), (3, 4))

    def test_invalid(self):
        with pytest.raises(ValueError):
            select_partition(self.path, 0)


class TestReports:
    def test_path_report(self):
        text = path_report(covariance_path(EXAMPLE_S, lambdas=EXAMPLE_LAMBDAS))
        lines = text.strip().split("\n")
        assert lines[0] == "j,lambda,p,delta,edges"
        assert lines[2] == "2,0.7438,4,3,3"

    def test_precision_coo(self):
        text = precision_coo(np.array([[2.0, 0.5], [0.5, 1.0]]))
        assert text == "i,j,value\n1,1,2.0\n1,2,0.5\n2,2,1.0\n"
