"""Benchmark one-step covariance forecasters for small portfolios.

Five reference models: constant-conditional-correlation GARCH, diagonal
BEKK with variance targeting, a univariate GARCH(1,1) on the portfolio
return itself, the plain window sample covariance, and a static spectral
factor estimate without variance dynamics. The univariate GARCH margins
reuse the r=1 path of the factor-GARCH fitter so there is a single
optimizer code path in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._kernels import bekk_diag_filter
from .errors import DataError, NumericalError
from .fgarch import FitConfig, GarchParams, qmle_fit, recurse_h
from .panel import demean
from .shrink import ThresholdSpec, apply_threshold, psd_repair, threshold_level
from .spectral import poet_decompose, sample_cov

BEKK_MARGIN = 1e-6  # stationarity slack for a_i^2 + b_i^2


@dataclass(frozen=True)
class BenchModel:
    """A fitted benchmark with its one-step forecast.

    kind : 'ccc', 'bekk_diag_vt', 'port_garch', 'hist_vol', or 'static_poet'
    params : fitted quantities needed to re-forecast on a new window
    sigma_next : s x s covariance forecast (None for port_garch)
    variance_next : scalar portfolio-variance forecast (port_garch only)
    flags : fit caveats, e.g. per-asset fallbacks
    """

    kind: str
    params: dict
    sigma_next: np.ndarray | None = None
    variance_next: float | None = None
    flags: tuple = ()


# ---------------------------------------------------------------------------
# univariate GARCH(1,1), the shared margin fitter
# ---------------------------------------------------------------------------

def fit_univariate_garch(x: np.ndarray, config: FitConfig | None = None) -> tuple:
    """GARCH(1,1) on a demeaned series via the r=1 factor-QMLE path.

    Returns ((omega, a, b), diagnostics).
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 10:
        raise DataError("univariate GARCH needs at least 10 observations")
    fsq = (x * x)[:, None]
    theta, diag = qmle_fit(fsq, config)
    return (float(theta.omega[0]), float(theta.amat[0, 0]), float(theta.bmat[0, 0])), diag


def _uni_path(omega: float, a: float, b: float, x: np.ndarray) -> np.ndarray:
    """Conditional variance path for fixed scalar parameters."""
    theta = GarchParams(omega=np.array([omega]), amat=np.array([[a]]), bmat=np.array([[b]]))
    return recurse_h(theta, (x * x)[:, None]).h[:, 0]


def _uni_forecast(omega: float, a: float, b: float, x: np.ndarray) -> float:
    h = _uni_path(omega, a, b, x)
    return float(omega + a * x[-1] ** 2 + b * h[-1])


def _fit_margin(x: np.ndarray) -> tuple:
    """Univariate fit with the variance-targeting fallback.

    Falls back to (a, b) = (0.05, 0.9) with a targeted intercept when the
    optimizer fails, goes nowhere, or lands on a non-stationary pair.
    Returns ((omega, a, b), fell_back).
    """
    try:
        (omega, a, b), diag = fit_univariate_garch(x)
        no_progress = not diag["converged"] and diag["objective"] >= diag["objective_init"]
        if a + b >= 1.0 - 1e-8 or no_progress:
            raise NumericalError("margin fit unusable")
        return (omega, a, b), False
    except (NumericalError, DataError):
        a, b = 0.05, 0.9
        omega = float(np.var(x)) * (1.0 - a - b)
        omega = max(omega, 1e-12)
        return (omega, a, b), True


# ---------------------------------------------------------------------------
# constant conditional correlation
# ---------------------------------------------------------------------------

def ccc_predict(params: dict, returns: np.ndarray) -> np.ndarray:
    """One-step CCC covariance on a window with frozen margins and correlation."""
    x, _ = demean(np.asarray(returns, dtype=float))
    margins = params["margins"]
    corr = params["corr"]
    s = x.shape[1]
    if len(margins) != s or corr.shape != (s, s):
        raise DataError("CCC parameters do not match the window width")
    sd_next = np.array([math.sqrt(_uni_forecast(*m, x[:, i])) for i, m in enumerate(margins)])
    sigma = corr * np.outer(sd_next, sd_next)
    return (sigma + sigma.T) / 2.0


def fit_ccc(returns: np.ndarray) -> BenchModel:
    """Univariate GARCH margins plus a constant correlation matrix."""
    x, _ = demean(np.asarray(returns, dtype=float))
    T, s = x.shape
    margins = []
    flags = []
    resid = np.empty_like(x)
    for i in range(s):
        (omega, a, b), fell_back = _fit_margin(x[:, i])
        margins.append((omega, a, b))
        if fell_back:
            flags.append(f"margin_fallback:{i}")
        h = _uni_path(omega, a, b, x[:, i])
        resid[:, i] = x[:, i] / np.sqrt(h)
    raw = resid.T @ resid / T
    d = np.sqrt(np.diag(raw))
    corr = raw / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)
    corr = (corr + corr.T) / 2.0
    params = {"margins": margins, "corr": corr}
    return BenchModel(
        kind="ccc",
        params=params,
        sigma_next=ccc_predict(params, returns),
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# diagonal BEKK with variance targeting
# ---------------------------------------------------------------------------

def _bekk_intercept(sbar: np.ndarray, avec: np.ndarray, bvec: np.ndarray) -> np.ndarray:
    return sbar * (1.0 - np.outer(avec, avec) - np.outer(bvec, bvec))


def _bekk_filter_np(cmat, avec, bvec, x, sbar) -> np.ndarray:
    """Plain-numpy one-pass filter returning the next-step covariance."""
    aa = np.outer(avec, avec)
    bb = np.outer(bvec, bvec)
    sigma = sbar.copy()
    for t in range(1, x.shape[0] + 1):
        sigma = cmat + aa * np.outer(x[t - 1], x[t - 1]) + bb * sigma
    return (sigma + sigma.T) / 2.0


def bekk_predict(params: dict, returns: np.ndarray) -> np.ndarray:
    """One-step BEKK covariance on a window with frozen (avec, bvec).

    The variance-targeting intercept is a window statistic, so it is
    recomputed from the window's sample covariance; a non-PSD intercept is
    repaired.
    """
    x, _ = demean(np.asarray(returns, dtype=float))
    avec = np.asarray(params["avec"], dtype=float)
    bvec = np.asarray(params["bvec"], dtype=float)
    sbar = sample_cov(x)
    cmat = _bekk_intercept(sbar, avec, bvec)
    eigmin = np.linalg.eigvalsh(cmat)[0]
    if eigmin < -1e-12 * max(np.abs(cmat).max(), 1.0):
        cmat = psd_repair(cmat)
    return _bekk_filter_np(cmat, avec, bvec, x, sbar)


def fit_bekk_diag_vt(returns: np.ndarray) -> BenchModel:
    """Gaussian QMLE over the 2s diagonal BEKK coefficients.

    The intercept is pinned by variance targeting to the window's sample
    covariance; margins seed the starting point.
    """
    x, _ = demean(np.asarray(returns, dtype=float))
    T, s = x.shape
    if T < 4 * s + 10:
        raise DataError("window too short for the BEKK parameter count")
    sbar = sample_cov(x)
    a0 = np.empty(s)
    b0 = np.empty(s)
    for i in range(s):
        (_, a, b), _ = _fit_margin(x[:, i])
        a0[i] = math.sqrt(min(max(a, 1e-4), 0.5))
        b0[i] = math.sqrt(min(max(b, 1e-4), 0.93))
    penalty_weight = 1e4 * T

    def fun(z):
        avec, bvec = z[:s], z[s:]
        nll, _, ok = bekk_diag_filter(avec, bvec, x, sbar)
        if not ok or not np.isfinite(nll):
            return 1e12
        viol = np.maximum(avec**2 + bvec**2 - (1.0 - BEKK_MARGIN), 0.0)
        return nll + penalty_weight * float(viol @ viol)

    z0 = np.concatenate([a0, b0])
    res = minimize(
        fun,
        z0,
        method="L-BFGS-B",
        bounds=[(0.0, 0.9999)] * (2 * s),
        options={"maxiter": 500, "ftol": 1e-12},
    )
    z = res.x if np.isfinite(res.fun) and res.fun <= fun(z0) else z0
    avec, bvec = z[:s].copy(), z[s:].copy()
    flags = [] if res.success else ["optimizer_not_converged"]
    # pull any boundary-riding pair strictly inside the stationarity disk
    norms = avec**2 + bvec**2
    hot = norms >= 1.0 - BEKK_MARGIN / 2
    if np.any(hot):
        shrinkf = np.sqrt((1.0 - BEKK_MARGIN) / norms[hot])
        avec[hot] *= shrinkf
        bvec[hot] *= shrinkf
        flags.append("stationarity_rescaled")
    cmat = _bekk_intercept(sbar, avec, bvec)
    eigmin = np.linalg.eigvalsh(cmat)[0]
    if eigmin < -1e-12 * max(np.abs(cmat).max(), 1.0):
        flags.append("targeting_not_psd_repaired")
    params = {"avec": avec, "bvec": bvec}
    return BenchModel(
        kind="bekk_diag_vt",
        params=params,
        sigma_next=bekk_predict(params, returns),
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# portfolio univariate GARCH
# ---------------------------------------------------------------------------

def port_garch_predict(params: dict, pr: np.ndarray) -> float:
    """One-step portfolio-variance forecast with frozen scalar parameters."""
    x = np.asarray(pr, dtype=float).ravel()
    x = x - x.mean()
    return _uni_forecast(params["omega"], params["a"], params["b"], x)


def fit_port_garch(pr: np.ndarray) -> BenchModel:
    """Scalar GARCH(1,1) on the portfolio return series."""
    x = np.asarray(pr, dtype=float).ravel()
    xd = x - x.mean()
    (omega, a, b), fell_back = _fit_margin(xd)
    params = {"omega": omega, "a": a, "b": b}
    return BenchModel(
        kind="port_garch",
        params=params,
        variance_next=_uni_forecast(omega, a, b, xd),
        flags=("margin_fallback:0",) if fell_back else (),
    )


# ---------------------------------------------------------------------------
# static forecasts
# ---------------------------------------------------------------------------

def hist_vol(returns: np.ndarray) -> np.ndarray:
    """Window sample covariance used directly as the forecast."""
    x, _ = demean(np.asarray(returns, dtype=float))
    return sample_cov(x)


def static_poet(returns: np.ndarray, r: int, spec: ThresholdSpec, repair: bool = True) -> np.ndarray:
    """Spectral factor estimate with no variance dynamics.

    Low-rank part from the leading eigen-components at their window-average
    level, plus the thresholded residual; constant over the window.
    """
    x, _ = demean(np.asarray(returns, dtype=float))
    T, p = x.shape
    S = sample_cov(x)
    decomp = poet_decompose(S, r)
    lowrank = (decomp.loadings * decomp.mean_factor_var) @ decomp.loadings.T
    lowrank = (lowrank + lowrank.T) / 2.0
    tau = threshold_level(spec, p, T)
    resid = apply_threshold(decomp.residual_cov, tau, spec)
    if repair:
        resid = psd_repair(resid)
    return lowrank + resid
