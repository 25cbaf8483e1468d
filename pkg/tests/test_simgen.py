"""Tests for the scenario generators and their random-variate building blocks."""

import math

import numpy as np
import pytest
from scipy import stats

from tailfx.errors import DomainError
from tailfx.simgen import (
    FourierFunction,
    Noise,
    Scenario,
    ScenarioSpec,
    gen_copula_b3,
    gen_extremal_b5,
    gen_hidden_b4,
    gen_highdim_b1,
    gen_simple_51,
    gumbel_copula_sample,
    mu_kink,
    pareto_noise,
    student_t_noise,
)


class TestMuKink:
    def test_apex(self):
        for slope in (0.0, 1.0, 7.5):
            assert mu_kink(2.0, 2.0, slope) == 5.0

    def test_examples(self):
        assert mu_kink(3.0, 2.0, 3.0) == 2.0
        assert mu_kink(1.0, 2.0, 3.0) == 2.0

    def test_vectorised_slope(self):
        np.testing.assert_allclose(mu_kink([0.0, 4.0], 1.0, [2.0, 0.5]), [3.0, 3.5])


class TestNoise:
    def test_student_t_infinite_is_normal(self):
        a = student_t_noise(np.random.default_rng(5), 1000, math.inf)
        b = np.random.default_rng(5).standard_normal(1000)
        np.testing.assert_array_equal(a, b)

    def test_student_t_variance(self):
        e = student_t_noise(np.random.default_rng(6), 100_000, 3.0)
        assert abs(e.var() / 3.0 - 1.0) < 0.10

    def test_student_t_domain(self):
        with pytest.raises(DomainError):
            student_t_noise(np.random.default_rng(0), 5, 0.0)

    @pytest.mark.parametrize("x", [2.0, 5.0, 10.0])
    def test_pareto_survival(self, x):
        n = 100_000
        e = pareto_noise(np.random.default_rng(7), n)
        p = 1.0 / x
        assert e.min() >= 1.0
        assert abs(np.mean(e > x) - p) <= 3 * math.sqrt(p * (1 - p) / n)


class TestGumbelCopula:
    @pytest.mark.parametrize("alpha", [1.0, 2.0, 4.0])
    def test_kendall_tau(self, alpha):
        U = gumbel_copula_sample(2, alpha, 100_000, seed=9)
        tau = stats.kendalltau(U[:, 0], U[:, 1]).statistic
        assert abs(tau - (1 - 1 / alpha)) < 0.01

    @pytest.mark.parametrize("alpha", [1.0, 1.5, 3.0])
    def test_uniform_margins(self, alpha):
        U = gumbel_copula_sample(3, alpha, 20_000, seed=10)
        for j in range(3):
            assert stats.kstest(U[:, j], "uniform").pvalue > 0.01

    def test_domain(self):
        with pytest.raises(DomainError):
            gumbel_copula_sample(2, 0.5, 10, seed=0)


class TestScenarios:
    def test_simple_truth(self):
        assert gen_simple_51(10, seed=0).true_omega == 1.25

    def test_simple_conditional_mean(self):
        s = gen_simple_51(100_000, seed=1)
        x, t, y = s.data.confounders[:, 0], s.data.treatment, s.data.outcome
        # E[Y | T = t, X = 1] = t above 1: residuals average to zero
        mask = (x == 1) & (t > 1)
        assert abs(np.mean(y[mask] - t[mask])) < 0.1
        band = mask & (t > 2.0) & (t < 2.2)
        assert abs(y[band].mean() - t[band].mean()) < 0.1

    @pytest.mark.parametrize("variant,params", [
        (Scenario.SIMPLE_51, {}),
        (Scenario.HIGHDIM_B1, {"d": 3, "noise": Noise.PARETO_1_1}),
        (Scenario.COPULA_B3, {"alpha": 2.0, "omega": 1.0}),
        (Scenario.HIDDEN_B4, {"delta": 1.0, "omega": 5.0}),
        (Scenario.EXTREMAL_B5, {"c": 1.0, "nu": 2.0}),
    ])
    def test_seed_determinism(self, variant, params):
        spec = ScenarioSpec(variant, 200, params)
        a, b = spec.generate(4), spec.generate(4)
        np.testing.assert_array_equal(a.data.confounders, b.data.confounders)
        np.testing.assert_array_equal(a.data.treatment, b.data.treatment)
        np.testing.assert_array_equal(a.data.outcome, b.data.outcome)
        assert not np.array_equal(a.data.outcome, spec.generate(5).data.outcome)

    def test_highdim_truth_and_correlation(self):
        s = gen_highdim_b1(100_000, 5, Noise.EXP_MEAN10, seed=2)
        assert s.true_omega == -1.0
        C = np.corrcoef(s.data.confounders, rowvar=False)
        off = C[~np.eye(5, dtype=bool)]
        assert np.all(np.abs(off - 0.1) < 0.01)
        assert np.all(np.abs(s.data.confounders.var(axis=0) - 1.0) < 0.02)

    @pytest.mark.parametrize("noise,mean", [(Noise.GAUSSIAN_SD10, 0.0), (Noise.EXP_MEAN10, 10.0)])
    def test_highdim_noise_readings(self, noise, mean):
        # with a single confounder the treatment noise is T - a X; recover its moments
        s = gen_highdim_b1(100_000, 1, noise, seed=3)
        X, T = s.data.confounders[:, 0], s.data.treatment
        slope = np.cov(X, T)[0, 1] / X.var()
        resid = T - slope * X
        assert abs(resid.std() - 10.0) < 0.3
        assert abs(resid.mean() - mean) < 0.3

    def test_highdim_domain(self):
        with pytest.raises(DomainError):
            gen_highdim_b1(10, 0, seed=0)

    def test_copula_truth_and_margin(self):
        assert gen_copula_b3(5, 1.0, 5.0, seed=0).true_omega == 5.0
        s = gen_copula_b3(100_000, 1.5, 1.0, seed=1)
        assert abs(s.data.treatment.mean() - 1.0) < 0.02
        assert abs(np.mean(s.data.confounders[:, 0] > 0) - 0.5) < 0.01

    def test_copula_domain(self):
        with pytest.raises(DomainError):
            gen_copula_b3(10, 0.9, 1.0, seed=0)

    def test_hidden_truth(self):
        assert gen_hidden_b4(5, 0.0, 5.0, seed=0).true_omega == pytest.approx(5.0)

    def test_hidden_withheld(self):
        s = gen_hidden_b4(100_000, 0.0, 5.0, seed=3)
        assert s.data.d == 1
        assert abs(np.corrcoef(s.hidden, s.data.treatment)[0, 1]) < 0.02
        s2 = gen_hidden_b4(100_000, 5.0, 5.0, seed=3)
        assert np.corrcoef(s2.hidden, s2.data.treatment)[0, 1] > 0.9

    def test_extremal_truth(self):
        s = gen_extremal_b5(10, 1.0, 2.0, seed=0)
        assert round(s.true_omega, 3) == -0.798
        assert s.true_omega == pytest.approx(-math.sqrt(2 / math.pi))

    def test_extremal_domain(self):
        with pytest.raises(DomainError):
            gen_extremal_b5(10, 1.0, -1.0, seed=0)

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            ScenarioSpec(Scenario.SIMPLE_51, 0)
        with pytest.raises(ValueError):
            ScenarioSpec("unknown", 10)


class TestFourierFunction:
    def test_smooth_and_bounded(self):
        f = FourierFunction.random(np.random.default_rng(0), 3)
        X = np.random.default_rng(1).normal(size=(1000, 3))
        v = f(X)
        assert np.all(np.abs(v) <= np.abs(f.gains).sum() / math.sqrt(f.gains.size) + 1e-12)
        h = 1e-6
        e = np.eye(3)[0] * h
        fd = (f(X + e) - f(X - e)) / (2 * h)
        assert np.all(np.abs(fd) <= np.abs(f.gains) @ np.abs(f.freqs[:, 0]) / math.sqrt(f.gains.size) + 1e-6)
