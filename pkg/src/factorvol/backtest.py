"""Exceedance tests for VaR forecast series.

A hit is a day whose realized return falls below the negative of the
forecast VaR. The suite covers the binomial likelihood-ratio test of the
hit frequency, its conditional-coverage extension with a first-order Markov
independence component, and regression-based dynamic quantile tests on
lagged hits (optionally adding the VaR level itself as a regressor).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr
from scipy.stats import chi2

from .errors import DataError


@dataclass(frozen=True)
class HitSeries:
    """Exceedance indicators with the series they came from."""

    hits: np.ndarray
    alpha: float
    var_series: np.ndarray
    returns: np.ndarray

    @property
    def hit_rate(self) -> float:
        return float(self.hits.mean())


def hit_series(returns: np.ndarray, var_forecasts: np.ndarray, alpha: float) -> HitSeries:
    """hit_t = 1 iff return_t < -VaR_t."""
    r = np.asarray(returns, dtype=float).ravel()
    v = np.asarray(var_forecasts, dtype=float).ravel()
    if r.shape != v.shape:
        raise DataError("returns and VaR series must have equal length")
    return HitSeries(hits=(r < -v).astype(np.int8), alpha=alpha, var_series=v, returns=r)


def _xlogy(x: float, y: float) -> float:
    # 0 * log(0) = 0 convention for degenerate counts
    return 0.0 if x == 0 else x * math.log(y)


def _as_hits(hits) -> np.ndarray:
    h = hits.hits if isinstance(hits, HitSeries) else np.asarray(hits)
    h = h.astype(np.int64).ravel()
    if h.size == 0:
        raise DataError("empty hit series")
    if np.any((h != 0) & (h != 1)):
        raise DataError("hits must be 0/1")
    return h


def lr_uc(hits, alpha: float) -> tuple:
    """Unconditional-coverage likelihood ratio: hit frequency vs alpha.

    Returns (stat, p_value) with the statistic referred to chi-square(1).
    """
    h = _as_hits(hits)
    n = h.size
    x = int(h.sum())
    pi = x / n
    log_null = _xlogy(n - x, 1.0 - alpha) + _xlogy(x, alpha)
    log_alt = _xlogy(n - x, 1.0 - pi) if x < n else 0.0
    log_alt += _xlogy(x, pi) if x > 0 else 0.0
    stat = max(-2.0 * (log_null - log_alt), 0.0)
    return stat, float(chi2.sf(stat, 1))


def lr_ind(hits) -> tuple:
    """First-order Markov independence component: (stat, p_value), chi-square(1).

    Transition rows with no observations contribute nothing (0 log 0 = 0).
    """
    h = _as_hits(hits)
    if h.size < 2:
        raise DataError("independence test needs at least 2 observations")
    prev, cur = h[:-1], h[1:]
    n00 = int(np.sum((prev == 0) & (cur == 0)))
    n01 = int(np.sum((prev == 0) & (cur == 1)))
    n10 = int(np.sum((prev == 1) & (cur == 0)))
    n11 = int(np.sum((prev == 1) & (cur == 1)))
    n = n00 + n01 + n10 + n11
    pi = (n01 + n11) / n
    log_null = _xlogy(n00 + n10, 1.0 - pi) + _xlogy(n01 + n11, pi)
    log_alt = 0.0
    if n00 + n01 > 0:
        p01 = n01 / (n00 + n01)
        log_alt += _xlogy(n00, 1.0 - p01) if p01 < 1 else 0.0
        log_alt += _xlogy(n01, p01) if p01 > 0 else 0.0
    if n10 + n11 > 0:
        p11 = n11 / (n10 + n11)
        log_alt += _xlogy(n10, 1.0 - p11) if p11 < 1 else 0.0
        log_alt += _xlogy(n11, p11) if p11 > 0 else 0.0
    stat = max(-2.0 * (log_null - log_alt), 0.0)
    return stat, float(chi2.sf(stat, 1))


def lr_cc(hits, alpha: float) -> tuple:
    """Conditional coverage: lr_uc + lr_ind, referred to chi-square(2)."""
    h = _as_hits(hits)
    if h.size < 2:
        raise DataError("conditional coverage needs at least 2 observations")
    stat = lr_uc(h, alpha)[0] + lr_ind(h)[0]
    return stat, float(chi2.sf(stat, 2))


def dq_test(hits, var_series, alpha: float, lags: int = 4, variant: str = "dq_hit") -> tuple:
    """Dynamic quantile regression test.

    Regress (hit_t - alpha) on a constant and `lags` lagged hits; the
    dq_var variant adds the contemporaneous VaR forecast as a regressor.
    The statistic is the squared norm of the fitted values over
    alpha (1 - alpha), referred to chi-square(#retained regressors).
    Exactly collinear columns are dropped (with a warning).
    """
    if variant not in ("dq_hit", "dq_var"):
        raise DataError(f"unknown DQ variant {variant!r}")
    h = _as_hits(hits).astype(float)
    n = h.size
    if n <= lags + 2:
        raise DataError("series too short for the requested lag count")
    y = h[lags:] - alpha
    cols = [np.ones(n - lags)]
    for ell in range(1, lags + 1):
        cols.append(h[lags - ell : n - ell])
    if variant == "dq_var":
        v = np.asarray(var_series, dtype=float).ravel()
        if v.size != n:
            raise DataError("VaR series length must match the hit series")
        cols.append(v[lags:])
    X = np.column_stack(cols)
    # rank-revealing QR; drop columns outside the numerical column space
    q, rmat, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rmat))
    tol = diag[0] * max(X.shape) * np.finfo(float).eps if diag[0] > 0 else 0.0
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        warnings.warn(
            f"DQ regression dropped {X.shape[1] - rank} collinear column(s)",
            stacklevel=2,
        )
    qk = q[:, :rank]
    fitted = qk @ (qk.T @ y)
    stat = float(fitted @ fitted) / (alpha * (1.0 - alpha))
    return stat, float(chi2.sf(stat, rank))


@dataclass(frozen=True)
class BacktestReport:
    """One row of the backtest summary table."""

    model: str
    quantile_rule: str
    alpha: float
    portfolio_size: int
    hit_rate: float
    lr_uc_p: float
    lr_cc_p: float
    dq_hit_p: float
    dq_var_p: float


def evaluate_var_series(
    returns: np.ndarray,
    var_forecasts: np.ndarray,
    alpha: float,
    model: str,
    quantile_rule: str,
    portfolio_size: int,
    lags: int = 4,
) -> BacktestReport:
    """Run the full test battery on one VaR series and summarize it."""
    hs = hit_series(returns, var_forecasts, alpha)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # collinear-drop warnings are expected here
        dq_hit_p = dq_test(hs, hs.var_series, alpha, lags, "dq_hit")[1]
        dq_var_p = dq_test(hs, hs.var_series, alpha, lags, "dq_var")[1]
    return BacktestReport(
        model=model,
        quantile_rule=quantile_rule,
        alpha=alpha,
        portfolio_size=portfolio_size,
        hit_rate=hs.hit_rate,
        lr_uc_p=lr_uc(hs, alpha)[1],
        lr_cc_p=lr_cc(hs, alpha)[1],
        dq_hit_p=dq_hit_p,
        dq_var_p=dq_var_p,
    )
