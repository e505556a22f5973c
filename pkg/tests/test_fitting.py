import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neyman_logit.checks import likelihood_equation_residuals, random_fit_data
from neyman_logit.errors import MaxIterations, RankDeficient, Separation
from neyman_logit.fitting import (
    Beta,
    FitData,
    FitOptions,
    fit_mle,
    gradient,
    hessian,
    is_separated,
    link_prob,
    log_likelihood,
    read_fit_data_csv,
    softplus,
    write_fit_data_csv,
)
from neyman_logit.theory import grouped_log_likelihood


def loglik_oracle(rows, b):
    """Row-by-row logit log-likelihood in plain floats."""
    total = 0.0
    for x, z, y in rows:
        eta = b[0] + b[1] * x + b[2] * z
        p = 1.0 / (1.0 + math.exp(-eta))
        total += math.log(p) if y else math.log(1.0 - p)
    return total


def compass_search(f, start, step=1.0, min_step=1e-7):
    """Derivative-free maximizer: try +/- step on each axis, halve when stuck."""
    b = list(start)
    best = f(b)
    while step > min_step:
        improved = False
        for j in range(len(b)):
            for sign in (1, -1):
                cand = list(b)
                cand[j] += sign * step
                val = f(cand)
                if val > best:
                    b, best, improved = cand, val, True
        if not improved:
            step /= 2
    return b


data_instances = st.integers(0, 2**32 - 1).map(lambda s: random_fit_data(np.random.default_rng(s)))


class TestLinkProb:
    def test_zero_beta(self):
        for x, z in [(0, 0.0), (1, 3.2), (0, -7.0)]:
            assert link_prob((0, 0, 0), x, z, "logit") == 0.5
            assert link_prob((0, 0, 0), x, z, "probit") == 0.5

    def test_log3(self):
        assert link_prob((0, math.log(3), 0), 1, 0.0) == pytest.approx(0.75, rel=1e-15)

    def test_clamped_inside_unit_interval(self):
        for link in ("logit", "probit"):
            assert 0 < link_prob((-100, 0, 0), 0, 0.0, link) < 1
            assert 0 < link_prob((100, 0, 0), 0, 0.0, link) < 1

    def test_softplus_regimes(self):
        assert softplus(0.0) == pytest.approx(math.log(2))
        assert softplus(800.0) == 800.0
        assert softplus(-800.0) == 0.0
        assert softplus(-30.0) == pytest.approx(math.exp(-30), rel=1e-12)


class TestLogLikelihood:
    def test_single_row(self):
        d = FitData([0], [0], [1])
        assert log_likelihood(d, (0, 0, 0)) == pytest.approx(math.log(0.5))

    def test_matches_plain_oracle(self, eight_rows):
        d = FitData.from_rows(eight_rows)
        for b in [(0.3, -1.0, 2.0), (-2, 0.5, 0.1)]:
            assert log_likelihood(d, b) == pytest.approx(loglik_oracle(eight_rows, b), rel=1e-13)

    def test_terms_negative(self, rng):
        d = random_fit_data(rng)
        for b in rng.normal(size=(20, 3)):
            assert log_likelihood(d, b) < 0
            assert log_likelihood(d, b, "probit") < 0

    @given(st.integers(0, 2**32 - 1))
    def test_grouped_equals_rowwise(self, seed):
        r = np.random.default_rng(seed)
        n = int(r.integers(3, 80))
        d = FitData(r.integers(0, 2, n), r.integers(0, 3, n), r.integers(0, 2, n))
        b = r.normal(size=3) * 3
        assert grouped_log_likelihood(d, b) == pytest.approx(log_likelihood(d, b), rel=1e-12)

    def test_weights_scale_terms(self, eight_rows):
        d1 = FitData.from_rows(eight_rows)
        d2 = FitData.from_rows([r + (2.0,) for r in eight_rows])
        assert log_likelihood(d2, (0.1, 0.2, 0.3)) == pytest.approx(2 * log_likelihood(d1, (0.1, 0.2, 0.3)))


class TestDerivatives:
    @pytest.mark.parametrize("link", ["logit", "probit"])
    @given(data=data_instances, seed=st.integers(0, 10_000))
    def test_gradient_finite_differences(self, link, data, seed):
        beta = np.random.default_rng(seed).normal(size=3)
        g = gradient(data, beta, link)
        h = 1e-5
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (log_likelihood(data, beta + e, link) - log_likelihood(data, beta - e, link)) / (2 * h)
            assert abs(g[j] - fd) <= 1e-6 * (1 + abs(g[j]))

    def test_logit_gradient_closed_form(self, eight_rows):
        d = FitData.from_rows(eight_rows)
        b = (0.2, -0.4, 0.7)
        expected = np.zeros(3)
        for x, z, y in eight_rows:
            p = 1 / (1 + math.exp(-(b[0] + b[1] * x + b[2] * z)))
            expected += (y - p) * np.array([1, x, z])
        assert gradient(d, b) == pytest.approx(expected, rel=1e-13, abs=1e-15)

    @pytest.mark.parametrize("link", ["logit", "probit"])
    @given(data=data_instances, seed=st.integers(0, 10_000))
    def test_hessian_finite_differences(self, link, data, seed):
        beta = np.random.default_rng(seed).normal(size=3)
        H = hessian(data, beta, link)
        h = 1e-5
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (gradient(data, beta + e, link) - gradient(data, beta - e, link)) / (2 * h)
            assert np.all(np.abs(H[:, j] - fd) <= 1e-5 * (1 + np.abs(H[:, j])))

    def test_hessian_negative_definite_and_symmetric(self, rng):
        for k in range(100):
            d = random_fit_data(rng)
            H = hessian(d, rng.normal(size=3) * 2, ("logit", "probit")[k % 2])
            assert np.array_equal(H, H.T)
            np.linalg.cholesky(-H)
            assert np.all(np.linalg.eigvalsh(H) < 0)

    def test_hessian_rank_deficient(self):
        with pytest.raises(RankDeficient):
            hessian(FitData([1], [0.5], [1]), (0, 0, 0))


class TestConcavity:
    @given(data=data_instances, seed=st.integers(0, 10_000), t=st.floats(0.05, 0.95))
    def test_strict_concavity(self, data, seed, t):
        r = np.random.default_rng(seed)
        ba, bb = r.normal(size=3), r.normal(size=3)
        for link in ("logit", "probit"):
            mid = log_likelihood(data, t * ba + (1 - t) * bb, link)
            assert mid > t * log_likelihood(data, ba, link) + (1 - t) * log_likelihood(data, bb, link)


class TestFit:
    def test_eight_rows_against_compass_search(self, eight_rows):
        fit = fit_mle(FitData.from_rows(eight_rows))
        oracle = compass_search(lambda b: loglik_oracle(eight_rows, b), [0.0, 0.0, 0.0])
        assert np.max(np.abs(np.array(fit.beta) - oracle)) <= 1e-4
        # frozen from the oracle
        assert fit.beta == pytest.approx((-0.593623, 1.187246, 1.187246), abs=1e-5)

    def test_first_order_conditions(self, eight_rows):
        d = FitData.from_rows(eight_rows)
        fit = fit_mle(d)
        assert fit.converged
        assert np.max(np.abs(gradient(d, fit.beta))) <= 1e-8 * d.n_rows
        t = d.x == 1
        p = link_prob(fit.beta, d.x, d.z)
        assert abs(p[t].mean() - d.y[t].mean()) <= 1e-8

    def test_maximum_beats_perturbations(self, rng):
        d = random_fit_data(rng, n=200)
        fit = fit_mle(d)
        for v in rng.normal(size=(50, 3)):
            assert log_likelihood(d, np.array(fit.beta) + 1e-3 * v) < fit.loglik

    @given(data_instances)
    def test_likelihood_equations(self, data):
        try:
            fit = fit_mle(data)
        except Separation:
            assert is_separated(data)
            return
        assert max(likelihood_equation_residuals(data, fit.beta)) <= 1e-8

    @given(data_instances, st.sampled_from(["logit", "probit"]))
    def test_monotone_ascent(self, data, link):
        try:
            fit = fit_mle(data, link)
        except Separation:
            return
        assert np.all(np.diff(fit.trace) >= 0)

    def test_separation(self):
        z = np.linspace(-1, 1, 20)
        x = np.tile([0, 1], 10)
        with pytest.raises(Separation):
            fit_mle(FitData(x, z, (z > 0).astype(int)))
        # y = x with a varying covariate
        with pytest.raises(Separation):
            fit_mle(FitData(x, z, x))
        with pytest.raises(Separation):
            fit_mle(FitData(x, z, x), "probit")

    def test_quasi_separation(self):
        # y = 1 whenever z > 0; ties at z = 0 mixed
        z = np.array([-2, -1, 0, 0, 1, 2, -1.5, 0.5])
        x = np.array([0, 1, 0, 1, 0, 1, 1, 0])
        y = np.array([0, 0, 1, 0, 1, 1, 0, 1])
        with pytest.raises(Separation):
            fit_mle(FitData(x, z, y))

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            fit_mle(FitData([1, 0, 1, 0], [2.0, 2.0, 2.0, 2.0], [1, 0, 0, 1]))
        with pytest.raises(RankDeficient):
            fit_mle(FitData([1, 1, 1, 1], [0.0, 1.0, 2.0, 3.0], [1, 0, 0, 1]))
        with pytest.raises(RankDeficient):
            fit_mle(FitData([1], [0.5], [1]))

    def test_max_iterations(self, eight_rows):
        with pytest.raises(MaxIterations):
            fit_mle(FitData.from_rows(eight_rows), opts=FitOptions(max_iter=1, tol=1e-14))

    def test_weighted_equals_replicated(self, eight_rows):
        doubled = fit_mle(FitData.from_rows(eight_rows + eight_rows))
        weighted = fit_mle(FitData.from_rows([r + (2.0,) for r in eight_rows]))
        assert np.array(weighted.beta) == pytest.approx(np.array(doubled.beta), abs=1e-10)

    def test_beta_type(self, eight_rows):
        fit = fit_mle(FitData.from_rows(eight_rows))
        assert isinstance(fit.beta, Beta)
        assert all(math.isfinite(b) for b in fit.beta)


class TestFitDataCsv:
    def test_round_trip(self, tmp_path, rng):
        d = random_fit_data(rng)
        path = tmp_path / "d.csv"
        write_fit_data_csv(d, path)
        assert path.read_text().splitlines()[0] == "y,x,z"
        back = read_fit_data_csv(path)
        assert np.array_equal(back.z, d.z) and np.array_equal(back.y, d.y) and np.array_equal(back.x, d.x)
        assert fit_mle(back).beta == fit_mle(d).beta
