import math

import numpy as np
import pytest
from scipy.linalg import hadamard

from factorvol import (
    DataError,
    FactorDecomposition,
    GarchParams,
    NumericalError,
    Portfolio,
    QuantileRule,
    ThresholdSpec,
    pgarch_forecast,
    quantile_value,
    var_forecast,
)
from conftest import scalar_theta

PHI_INV_001 = -2.3263478740408411
T6_SCALED_001 = -2.5659780062766839


def hadamard_decomp(p=4, r=2, idio_scale=0.3):
    """Loadings from a Hadamard matrix satisfy V'V = p I exactly."""
    V = hadamard(p).astype(float)[:, :r]
    resid = idio_scale * np.eye(p)
    return FactorDecomposition(
        loadings=V,
        eigvals=np.array([float(p * (r - j)) for j in range(r)]),
        residual_cov=resid,
        rank=r,
    )


def two_factor_theta(omega=(0.5, 0.2)):
    return GarchParams(omega=np.asarray(omega, dtype=float), amat=np.zeros((2, 2)), bmat=np.zeros((2, 2)))


class TestQuantileValue:
    def test_normal_one_percent(self):
        c = quantile_value(QuantileRule("normal", 0.01))
        assert c == pytest.approx(PHI_INV_001, abs=1e-12)

    def test_normal_five_percent(self):
        assert quantile_value(QuantileRule("normal", 0.05)) == pytest.approx(-1.6448536269514722, abs=1e-12)

    def test_student_t_six_dof(self):
        c = quantile_value(QuantileRule("student_t", 0.01, nu=6.0))
        assert c == pytest.approx(T6_SCALED_001, abs=1e-12)

    def test_student_t_large_nu_approaches_normal(self):
        c = quantile_value(QuantileRule("student_t", 0.01, nu=1e6))
        assert c == pytest.approx(PHI_INV_001, abs=1e-4)

    def test_student_t_heavier_tail_after_rescale(self):
        # unit-variance t with few dof still has a fatter 1% tail
        c = quantile_value(QuantileRule("student_t", 0.01, nu=5.0))
        assert c < PHI_INV_001

    def test_empirical_kth_smallest(self, rng):
        hist = np.arange(1.0, 101.0)
        rng.shuffle(hist)
        c = quantile_value(QuantileRule("empirical", 0.05), standardized_history=hist)
        assert c == 5.0  # ceil(0.05 * 100) = 5th smallest, no interpolation

    def test_empirical_ceiling(self):
        hist = np.arange(1.0, 11.0)
        # ceil(0.25 * 10) = 3
        assert quantile_value(QuantileRule("empirical", 0.25), hist) == 3.0
        # ceil(0.21 * 10) = 3 as well
        assert quantile_value(QuantileRule("empirical", 0.21), hist) == 3.0

    def test_empirical_needs_enough_history(self):
        with pytest.raises(DataError):
            quantile_value(QuantileRule("empirical", 0.01), np.arange(50.0))

    def test_empirical_needs_history(self):
        with pytest.raises(DataError):
            quantile_value(QuantileRule("empirical", 0.05))

    def test_rule_validation(self):
        with pytest.raises(DataError):
            QuantileRule("cauchy", 0.05)
        with pytest.raises(DataError):
            QuantileRule("normal", 1.5)
        with pytest.raises(DataError):
            QuantileRule("student_t", 0.05, nu=2.0)
        with pytest.raises(DataError):
            QuantileRule("student_t", 0.05)

    def test_in_window_coverage(self, rng):
        hist = rng.standard_normal(400)
        for alpha in (0.01, 0.05, 0.10):
            c = quantile_value(QuantileRule("empirical", alpha), hist)
            frac = np.mean(hist <= c)
            assert abs(frac - alpha) <= 1.0 / hist.size + 1e-12


class TestPgarchForecast:
    def test_static_assembly_no_dynamics(self):
        # A = B = 0 freezes h at omega; a huge threshold strips the
        # off-diagonal residual, leaving V diag(omega) V' + diag
        decomp = hadamard_decomp(p=4, r=2)
        theta = two_factor_theta(omega=(0.5, 0.2))
        fsq = np.full((30, 2), 0.1)
        spec = ThresholdSpec(c_tau=1e6)
        vol = pgarch_forecast(decomp, theta, fsq, spec)
        expected_factor = decomp.loadings @ np.diag([0.5, 0.2]) @ decomp.loadings.T
        np.testing.assert_allclose(vol.factor_part, expected_factor, atol=1e-12)
        np.testing.assert_allclose(vol.idio_part, 0.3 * np.eye(4), atol=1e-12)
        np.testing.assert_allclose(vol.h_next, [0.5, 0.2])

    def test_split_adds_up_exactly(self, rng):
        decomp = hadamard_decomp(p=8, r=2, idio_scale=0.2)
        theta = two_factor_theta()
        fsq = np.abs(rng.standard_normal((40, 2)))
        vol = pgarch_forecast(decomp, theta, fsq, ThresholdSpec())
        np.testing.assert_array_equal(vol.sigma, vol.factor_part + vol.idio_part)

    def test_forecast_is_psd(self, rng):
        decomp = hadamard_decomp(p=8, r=2, idio_scale=0.05)
        theta = two_factor_theta()
        fsq = np.abs(rng.standard_normal((40, 2)))
        vol = pgarch_forecast(decomp, theta, fsq, ThresholdSpec())
        assert np.linalg.eigvalsh(vol.sigma).min() >= -1e-12

    def test_window_length_controls_threshold(self):
        # passing a longer T lowers the threshold, so more residual survives
        p = 4
        V = hadamard(p).astype(float)[:, :1]
        resid = 0.01 * np.eye(p) + 0.002 * (np.ones((p, p)) - np.eye(p))
        decomp = FactorDecomposition(loadings=V, eigvals=np.array([4.0]), residual_cov=resid, rank=1)
        theta = scalar_theta(omega=0.1, a=0.0, b=0.0)
        fsq = np.full((10, 1), 0.1)
        spec = ThresholdSpec(s_p=0.0)  # keep only the vanishing log-term
        short = pgarch_forecast(decomp, theta, fsq, spec, T=10)
        long = pgarch_forecast(decomp, theta, fsq, spec, T=10**7)
        n_zero_short = np.sum(short.idio_part == 0.0)
        n_zero_long = np.sum(long.idio_part == 0.0)
        assert n_zero_long < n_zero_short

    def test_rank_mismatch_rejected(self):
        decomp = hadamard_decomp(p=4, r=2)
        with pytest.raises(DataError):
            pgarch_forecast(decomp, scalar_theta(), np.full((10, 1), 0.1), ThresholdSpec())

    def test_fsq_shape_rejected(self):
        decomp = hadamard_decomp(p=4, r=2)
        with pytest.raises(DataError):
            pgarch_forecast(decomp, two_factor_theta(), np.full((10, 3), 0.1), ThresholdSpec())


class TestVarForecast:
    def setup_method(self):
        self.decomp = hadamard_decomp(p=4, r=2)
        self.theta = two_factor_theta()
        self.vol = pgarch_forecast(self.decomp, self.theta, np.full((20, 2), 0.1), ThresholdSpec(c_tau=1e6))

    def test_identity_holds_exactly(self):
        w = np.full(4, 0.25)
        rule = QuantileRule("normal", 0.01)
        out = var_forecast(self.vol, w, np.zeros(4), rule)
        assert out.var_value == -out.mean_port - out.c_alpha * out.sigma_port

    def test_single_asset_portfolio(self):
        e0 = np.zeros(4)
        e0[0] = 1.0
        out = var_forecast(self.vol, e0, np.zeros(4), QuantileRule("normal", 0.05))
        assert out.sigma_port == pytest.approx(math.sqrt(self.vol.sigma[0, 0]), rel=1e-12)

    def test_scalar_and_vector_mean_agree(self):
        w = np.array([0.4, 0.3, 0.2, 0.1])
        mu = np.array([0.001, -0.002, 0.0005, 0.0])
        rule = QuantileRule("normal", 0.01)
        a = var_forecast(self.vol, w, mu, rule)
        b = var_forecast(self.vol, w, np.asarray(float(w @ mu)), rule)
        assert a.var_value == pytest.approx(b.var_value, abs=1e-15)

    def test_mean_shifts_var_linearly(self):
        w = np.full(4, 0.25)
        rule = QuantileRule("normal", 0.01)
        base = var_forecast(self.vol, w, np.zeros(4), rule)
        shifted = var_forecast(self.vol, w, np.full(4, 0.01), rule)
        assert shifted.var_value == pytest.approx(base.var_value - 0.01, rel=1e-12)

    def test_var_decreasing_in_alpha(self, rng):
        w = np.full(4, 0.25)
        hist = rng.standard_normal(500)
        for kind, nu in (("normal", None), ("student_t", 6.0), ("empirical", None)):
            values = []
            for alpha in (0.01, 0.05, 0.10):
                rule = QuantileRule(kind, alpha, nu=nu)
                values.append(var_forecast(self.vol, w, np.zeros(4), rule, history=hist).var_value)
            assert values[0] > values[1] > values[2]

    def test_portfolio_object_accepted(self):
        port = Portfolio(weights=np.full(4, 0.25))
        out = var_forecast(self.vol, port, np.zeros(4), QuantileRule("normal", 0.05))
        assert out.sigma_port > 0

    def test_weight_dimension_mismatch(self):
        with pytest.raises(DataError):
            var_forecast(self.vol, np.ones(3), np.zeros(3), QuantileRule("normal", 0.05))

    def test_bad_mean_shape(self):
        with pytest.raises(DataError):
            var_forecast(self.vol, np.ones(4), np.zeros(2), QuantileRule("normal", 0.05))

    def test_zero_weights_rejected(self):
        with pytest.raises(NumericalError):
            var_forecast(self.vol, np.zeros(4), np.zeros(4), QuantileRule("normal", 0.05))
