"""Rolling-window one-step VaR forecasting.

Each forecast target day tau uses only the `window` rows strictly before it.
Model coefficients are re-estimated every `refit_every` targets; everything
that is a window statistic rather than a coefficient (loadings, residual
covariance, sample means, variance-recursion states) is recomputed daily on
the updated window. The first day after the initial window only ever serves
as conditioning data, so a panel of length T yields exactly T - window - 1
forecasts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bench import (
    _uni_path,
    bekk_predict,
    ccc_predict,
    fit_bekk_diag_vt,
    fit_ccc,
    fit_port_garch,
    hist_vol,
    static_poet,
)
from .errors import DataError
from .fgarch import FitConfig, qmle_fit, recurse_h
from .forecast import QuantileRule, quantile_value
from .panel import Portfolio, ReturnPanel, demean
from .shrink import ThresholdSpec, apply_threshold, psd_repair, threshold_level
from .simul import AVAILABLE_MODELS
from .spectral import estimate_rank, poet_fit, sample_cov


@dataclass(frozen=True)
class RollingConfig:
    """Protocol parameters for the rolling scheme."""

    window: int = 252
    refit_every: int = 10
    rank: int | str = "auto"
    r_max: int = 10
    c1: float = 1.0
    c2: float = 0.5
    threshold_spec: ThresholdSpec = field(default_factory=ThresholdSpec)
    fit_config: FitConfig | None = None
    psd_repair: bool = True

    def __post_init__(self):
        if self.window < 30:
            raise DataError("window must be >= 30")
        if self.refit_every < 1:
            raise DataError("refit_every must be >= 1")
        if isinstance(self.rank, str) and self.rank != "auto":
            raise DataError("rank must be an integer or 'auto'")


@dataclass(frozen=True)
class RollingResult:
    """Daily forecasts over the target range.

    var_series maps (model, rule_kind, alpha) to the N daily VaR values;
    sigma_port maps model to its daily portfolio-sd forecast.
    """

    targets: np.ndarray
    realized: np.ndarray
    mean_port: np.ndarray
    sigma_port: dict
    var_series: dict
    window: int
    refit_days: np.ndarray


def n_forecasts(panel_length: int, window: int) -> int:
    """Number of rolling one-step forecasts a panel supports."""
    n = panel_length - window - 1
    if n < 1:
        raise DataError(f"panel of length {panel_length} cannot support window {window}")
    return n


# ---------------------------------------------------------------------------
# per-model adapters: refit(window) -> params, predict(window, params) ->
# (sigma_port, in-window portfolio variance path for the empirical rule)
# ---------------------------------------------------------------------------


class _PgarchAdapter:
    def __init__(self, cfg: RollingConfig, weights: np.ndarray):
        self.cfg = cfg
        self.w = weights

    def refit(self, win: np.ndarray) -> dict:
        centered, _ = demean(win)
        if self.cfg.rank == "auto":
            r_eff = min(self.cfg.r_max, win.shape[1] - 1)
            rank = estimate_rank(
                sample_cov(centered), win.shape[0], r_eff, self.cfg.c1, self.cfg.c2
            )
        else:
            rank = int(self.cfg.rank)
        decomp = poet_fit(centered, rank)
        theta, _ = qmle_fit(decomp.factors**2, self.cfg.fit_config)
        return {"rank": rank, "theta": theta}

    def predict(self, win: np.ndarray, params: dict) -> tuple:
        T, p = win.shape
        centered, _ = demean(win)
        decomp = poet_fit(centered, params["rank"])
        theta = params["theta"]
        fsq = decomp.factors**2
        path = recurse_h(theta, fsq)
        h_next = theta.omega + theta.amat @ fsq[-1] + theta.bmat @ path.h[-1]
        tau = threshold_level(self.cfg.threshold_spec, p, T)
        idio = apply_threshold(decomp.residual_cov, tau, self.cfg.threshold_spec)
        if self.cfg.psd_repair:
            idio = psd_repair(idio)
        vw = decomp.loadings.T @ self.w
        idio_quad = float(self.w @ idio @ self.w)
        var_next = float(vw @ (h_next * vw)) + idio_quad
        var_path = (path.h * vw**2).sum(axis=1) + idio_quad
        return var_next, var_path


class _CccAdapter:
    def __init__(self, cfg: RollingConfig, weights: np.ndarray):
        self.w = weights

    def refit(self, win: np.ndarray) -> dict:
        return fit_ccc(win).params

    def predict(self, win: np.ndarray, params: dict) -> tuple:
        x, _ = demean(win)
        sigma = ccc_predict(params, win)
        var_next = float(self.w @ sigma @ self.w)
        sd = np.column_stack(
            [np.sqrt(_uni_path(*m, x[:, i])) for i, m in enumerate(params["margins"])]
        )
        wsd = sd * self.w
        var_path = np.einsum("ti,ij,tj->t", wsd, params["corr"], wsd)
        return var_next, var_path


class _BekkAdapter:
    def __init__(self, cfg: RollingConfig, weights: np.ndarray):
        self.w = weights

    def refit(self, win: np.ndarray) -> dict:
        return fit_bekk_diag_vt(win).params

    def predict(self, win: np.ndarray, params: dict) -> tuple:
        x, _ = demean(win)
        sigma_next = bekk_predict(params, win)
        var_next = float(self.w @ sigma_next @ self.w)
        sbar = sample_cov(x)
        aa = np.outer(params["avec"], params["avec"])
        bb = np.outer(params["bvec"], params["bvec"])
        cmat = sbar * (1.0 - aa - bb)
        sigma = sbar.copy()
        var_path = np.empty(x.shape[0])
        var_path[0] = float(self.w @ sigma @ self.w)
        for t in range(1, x.shape[0]):
            sigma = cmat + aa * np.outer(x[t - 1], x[t - 1]) + bb * sigma
            var_path[t] = float(self.w @ sigma @ self.w)
        return var_next, var_path


class _PortGarchAdapter:
    def __init__(self, cfg: RollingConfig, weights: np.ndarray):
        self.w = weights

    def refit(self, win: np.ndarray) -> dict:
        return fit_port_garch(win @ self.w).params

    def predict(self, win: np.ndarray, params: dict) -> tuple:
        pr = win @ self.w
        x = pr - pr.mean()
        h = _uni_path(params["omega"], params["a"], params["b"], x)
        var_next = params["omega"] + params["a"] * x[-1] ** 2 + params["b"] * h[-1]
        return float(var_next), h


class _HistVolAdapter:
    def __init__(self, cfg: RollingConfig, weights: np.ndarray):
        self.w = weights

    def refit(self, win: np.ndarray) -> dict:
        return {}

    def predict(self, win: np.ndarray, params: dict) -> tuple:
        sigma = hist_vol(win)
        v = float(self.w @ sigma @ self.w)
        return v, np.full(win.shape[0], v)


class _StaticPoetAdapter:
    def __init__(self, cfg: RollingConfig, weights: np.ndarray):
        self.cfg = cfg
        self.w = weights

    def refit(self, win: np.ndarray) -> dict:
        if self.cfg.rank == "auto":
            centered, _ = demean(win)
            r_eff = min(self.cfg.r_max, win.shape[1] - 1)
            rank = estimate_rank(
                sample_cov(centered), win.shape[0], r_eff, self.cfg.c1, self.cfg.c2
            )
        else:
            rank = int(self.cfg.rank)
        return {"rank": rank}

    def predict(self, win: np.ndarray, params: dict) -> tuple:
        sigma = static_poet(win, params["rank"], self.cfg.threshold_spec, self.cfg.psd_repair)
        v = float(self.w @ sigma @ self.w)
        return v, np.full(win.shape[0], v)


_ADAPTERS = {
    "pgarch": _PgarchAdapter,
    "ccc": _CccAdapter,
    "bekk_diag_vt": _BekkAdapter,
    "port_garch": _PortGarchAdapter,
    "hist_vol": _HistVolAdapter,
    "static_poet": _StaticPoetAdapter,
}


def rolling_var_forecast(
    panel,
    portfolio,
    models,
    rules,
    config: RollingConfig | None = None,
) -> RollingResult:
    """Daily one-step VaR over the rolling targets for each model and rule.

    panel may be a ReturnPanel or a T x p array; portfolio a Portfolio or
    weight vector; rules a list of QuantileRule.
    """
    cfg = config or RollingConfig()
    y = panel.returns if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    w = portfolio.weights if isinstance(portfolio, Portfolio) else np.asarray(portfolio, dtype=float)
    if w.shape[0] != y.shape[1]:
        raise DataError("portfolio width does not match the panel")
    models = tuple(models)
    unknown = [m for m in models if m not in AVAILABLE_MODELS]
    if unknown:
        raise DataError(f"unknown model(s): {', '.join(unknown)}")
    rules = tuple(rules)
    T = y.shape[0]
    n = n_forecasts(T, cfg.window)
    targets = np.arange(cfg.window + 1, T)
    assert targets.size == n

    adapters = {m: _ADAPTERS[m](cfg, w) for m in models}
    params = {}
    needs_history = any(rule.kind == "empirical" for rule in rules)

    realized = np.empty(n)
    mean_port = np.empty(n)
    sigma_port = {m: np.empty(n) for m in models}
    var_series = {(m, rule.kind, rule.alpha): np.empty(n) for m in models for rule in rules}
    refit_days = []

    for idx, tau in enumerate(targets):
        win = y[tau - cfg.window : tau]
        if idx % cfg.refit_every == 0:
            for m in models:
                params[m] = adapters[m].refit(win)
            refit_days.append(tau)
        wbar = win.mean(axis=0)
        mu = float(wbar @ w)
        pr_win = win @ w
        realized[idx] = float(y[tau] @ w)
        mean_port[idx] = mu
        for m in models:
            var_next, var_path = adapters[m].predict(win, params[m])
            sd_next = float(np.sqrt(max(var_next, 1e-300)))
            sigma_port[m][idx] = sd_next
            history = None
            if needs_history:
                history = (pr_win - mu) / np.sqrt(np.maximum(var_path, 1e-300))
            for rule in rules:
                c = quantile_value(rule, history if rule.kind == "empirical" else None)
                var_series[(m, rule.kind, rule.alpha)][idx] = -mu - c * sd_next
    return RollingResult(
        targets=targets,
        realized=realized,
        mean_port=mean_port,
        sigma_port=sigma_port,
        var_series=var_series,
        window=cfg.window,
        refit_days=np.array(refit_days),
    )
