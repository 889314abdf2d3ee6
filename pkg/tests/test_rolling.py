import numpy as np
import pytest

from factorvol import (
    DataError,
    DgpSpec,
    Portfolio,
    QuantileRule,
    RollingConfig,
    demean,
    generate,
    hist_vol,
    n_forecasts,
    rolling_var_forecast,
    sample_cov,
)

NORMAL_RULES = (QuantileRule("normal", 0.05),)


def small_roll(panel, models=("hist_vol",), rules=NORMAL_RULES, **kw):
    cfg = RollingConfig(window=kw.pop("window", 60), refit_every=kw.pop("refit_every", 5), rank=kw.pop("rank", 2), **kw)
    w = np.full(panel.returns.shape[1], 1.0 / panel.returns.shape[1])
    return rolling_var_forecast(panel, w, models, rules, cfg)


class TestNForecasts:
    def test_reference_protocol_count(self):
        assert n_forecasts(4523, 252) == 4270

    def test_small_case(self):
        assert n_forecasts(400, 250) == 149

    def test_too_short(self):
        with pytest.raises(DataError):
            n_forecasts(100, 99)


class TestRollingConfig:
    def test_defaults(self):
        cfg = RollingConfig()
        assert cfg.window == 252
        assert cfg.refit_every == 10
        assert cfg.rank == "auto"

    def test_validation(self):
        with pytest.raises(DataError):
            RollingConfig(window=10)
        with pytest.raises(DataError):
            RollingConfig(refit_every=0)
        with pytest.raises(DataError):
            RollingConfig(rank="all")


@pytest.fixture(scope="module")
def panel():
    p, _ = generate(DgpSpec(p=6, T=160), seed=21)
    return p


class TestRollingEngine:
    def test_target_range_and_count(self, panel):
        res = small_roll(panel)
        assert res.targets[0] == 61
        assert res.targets[-1] == 159
        assert res.targets.size == n_forecasts(160, 60)

    def test_realized_matches_panel(self, panel):
        res = small_roll(panel)
        w = np.full(6, 1.0 / 6)
        np.testing.assert_allclose(res.realized, panel.returns[res.targets] @ w, atol=1e-15)

    def test_refit_days_follow_schedule(self, panel):
        res = small_roll(panel, refit_every=7)
        np.testing.assert_array_equal(res.refit_days, res.targets[::7])

    def test_refit_once_when_interval_covers_everything(self, panel):
        res = small_roll(panel, refit_every=10**6)
        assert res.refit_days.size == 1

    def test_hist_vol_matches_direct_recomputation(self, panel):
        res = small_roll(panel)
        w = np.full(6, 1.0 / 6)
        y = panel.returns
        for k in (0, 37, res.targets.size - 1):
            tau = res.targets[k]
            win = y[tau - 60 : tau]
            sigma = hist_vol(win)
            assert res.sigma_port["hist_vol"][k] == pytest.approx(np.sqrt(w @ sigma @ w), rel=1e-12)
            mu = win.mean(axis=0) @ w
            c = -1.6448536269514722
            expect = -mu - c * np.sqrt(w @ sigma @ w)
            assert res.var_series[("hist_vol", "normal", 0.05)][k] == pytest.approx(expect, rel=1e-12)

    def test_no_look_ahead(self, panel):
        # perturbing one target row must not change that day's forecast
        y2 = panel.returns.copy()
        res = small_roll(panel)
        k = 20
        tau = res.targets[k]
        y2[tau] += 0.5
        res2 = small_roll(panel.__class__(returns=y2, asset_ids=panel.asset_ids, timestamps=panel.timestamps))
        assert res2.sigma_port["hist_vol"][k] == res.sigma_port["hist_vol"][k]
        assert res2.var_series[("hist_vol", "normal", 0.05)][k] == res.var_series[("hist_vol", "normal", 0.05)][k]
        # but the realized return on that day does change
        assert res2.realized[k] != res.realized[k]

    @pytest.mark.filterwarnings("ignore:.*small for.*:UserWarning")
    def test_pgarch_runs_with_multiple_rules(self, panel):
        rules = (
            QuantileRule("normal", 0.01),
            QuantileRule("student_t", 0.01, nu=6.0),
            QuantileRule("empirical", 0.05),
        )
        res = small_roll(panel, models=("pgarch",), rules=rules, refit_every=40)
        for key, series in res.var_series.items():
            assert np.all(np.isfinite(series))
        # at the 1% level the unit-variance t tail is fatter than the
        # normal one, so its VaR is larger every day
        vn = res.var_series[("pgarch", "normal", 0.01)]
        vt = res.var_series[("pgarch", "student_t", 0.01)]
        sd = res.sigma_port["pgarch"]
        assert np.all(vt - vn > 0)
        assert np.all(sd > 0)

    @pytest.mark.filterwarnings("ignore:.*small for.*:UserWarning")
    def test_all_models_produce_finite_series(self, panel):
        models = ("pgarch", "ccc", "bekk_diag_vt", "port_garch", "hist_vol", "static_poet")
        res = small_roll(panel, models=models, refit_every=50)
        for m in models:
            assert np.all(np.isfinite(res.sigma_port[m])), m
            assert np.all(res.sigma_port[m] > 0), m

    def test_portfolio_object_and_array_agree(self, panel):
        w = np.full(6, 1.0 / 6)
        cfg = RollingConfig(window=60, refit_every=25, rank=2)
        a = rolling_var_forecast(panel, w, ("hist_vol",), NORMAL_RULES, cfg)
        b = rolling_var_forecast(panel, Portfolio(weights=w), ("hist_vol",), NORMAL_RULES, cfg)
        np.testing.assert_array_equal(
            a.var_series[("hist_vol", "normal", 0.05)], b.var_series[("hist_vol", "normal", 0.05)]
        )

    def test_unknown_model_rejected(self, panel):
        with pytest.raises(DataError):
            small_roll(panel, models=("dcc",))

    def test_weight_width_checked(self, panel):
        with pytest.raises(DataError):
            rolling_var_forecast(panel, np.ones(4), ("hist_vol",), NORMAL_RULES, RollingConfig(window=60))

    def test_empirical_rule_uses_window_history(self, panel):
        # under a constant-variance model the standardized history is the
        # centered portfolio return over the window divided by a constant,
        # so the empirical VaR is a window order statistic
        res = small_roll(panel, rules=(QuantileRule("empirical", 0.10),))
        w = np.full(6, 1.0 / 6)
        y = panel.returns
        k = 10
        tau = res.targets[k]
        win = y[tau - 60 : tau]
        pr = win @ w
        mu = pr.mean()
        sd = res.sigma_port["hist_vol"][k]
        win_sd = np.sqrt(w @ hist_vol(win) @ w)
        hist = (pr - mu) / win_sd
        k_ord = int(np.ceil(0.10 * 60))
        c = np.partition(hist, k_ord - 1)[k_ord - 1]
        assert res.var_series[("hist_vol", "empirical", 0.10)][k] == pytest.approx(-mu - c * sd, rel=1e-12)
