"""One-step-ahead covariance assembly and sigma-based Value-at-Risk.

The forecast covariance is the sum of a factor part, loadings times the
predicted diagonal factor variances, and a thresholded idiosyncratic part.
VaR plugs a portfolio's forecast standard deviation and window mean into
-mean - c_alpha * sd, where c_alpha comes from a normal, rescaled
student-t, or empirical-order-statistic quantile rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import t as student_t_dist

from .errors import DataError, NumericalError
from .fgarch import GarchParams, forecast_h
from .panel import Portfolio
from .shrink import ThresholdSpec, apply_threshold, psd_repair, threshold_level
from .spectral import FactorDecomposition


@dataclass(frozen=True)
class VolForecast:
    """Forecast covariance with its factor / idiosyncratic split.

    sigma = factor_part + idio_part holds exactly; the PSD repair is applied
    to the idiosyncratic part (the factor part is PSD by construction), so
    the identity survives the repair.
    """

    sigma: np.ndarray
    factor_part: np.ndarray
    idio_part: np.ndarray
    h_next: np.ndarray


@dataclass(frozen=True)
class QuantileRule:
    """Quantile constant c_alpha: 'normal', 'student_t' (rescaled), 'empirical'."""

    kind: str
    alpha: float
    nu: float | None = None

    def __post_init__(self):
        if self.kind not in ("normal", "student_t", "empirical"):
            raise DataError(f"unknown quantile rule {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise DataError("alpha must be in (0, 1)")
        if self.kind == "student_t":
            if self.nu is None or self.nu <= 2:
                raise DataError("student_t rule needs nu > 2")


@dataclass(frozen=True)
class VarForecast:
    """One-day VaR on the loss scale: var_value = -mean_port - c_alpha * sigma_port."""

    var_value: float
    sigma_port: float
    mean_port: float
    c_alpha: float


def pgarch_forecast(
    decomp: FactorDecomposition,
    theta: GarchParams,
    fsq: np.ndarray,
    spec: ThresholdSpec,
    T: int | None = None,
    repair: bool = True,
) -> VolForecast:
    """Assemble the one-step covariance forecast from fitted pieces.

    T is the window length used for the threshold level; it defaults to the
    number of rows of fsq.
    """
    loadings = decomp.loadings
    p, r = loadings.shape
    if r < 1:
        raise DataError("forecast needs at least one factor")
    if theta.r != r:
        raise DataError("theta rank does not match the decomposition")
    fsq = np.asarray(fsq, dtype=float)
    if fsq.ndim != 2 or fsq.shape[1] != r:
        raise DataError("fsq must be T x r")
    if T is None:
        T = fsq.shape[0]
    h_next = forecast_h(theta, fsq)
    factor_part = (loadings * h_next) @ loadings.T
    factor_part = (factor_part + factor_part.T) / 2.0
    tau = threshold_level(spec, p, T)
    idio_part = apply_threshold(decomp.residual_cov, tau, spec)
    if repair:
        idio_part = psd_repair(idio_part)
    sigma = factor_part + idio_part
    return VolForecast(sigma=sigma, factor_part=factor_part, idio_part=idio_part, h_next=h_next)


def quantile_value(rule: QuantileRule, standardized_history: np.ndarray | None = None) -> float:
    """The quantile constant c_alpha for a rule.

    normal: inverse standard-normal CDF at alpha. student_t: inverse t CDF
    rescaled by sqrt((nu - 2) / nu) to unit variance. empirical: the
    ceil(alpha T)-th smallest value of the standardized history, no
    interpolation.
    """
    if rule.kind == "normal":
        return float(ndtri(rule.alpha))
    if rule.kind == "student_t":
        return float(student_t_dist.ppf(rule.alpha, rule.nu) * math.sqrt((rule.nu - 2) / rule.nu))
    if standardized_history is None:
        raise DataError("empirical rule needs a standardized history")
    hist = np.asarray(standardized_history, dtype=float).ravel()
    T = hist.size
    if T < math.ceil(1.0 / rule.alpha):
        raise DataError(f"empirical rule needs T >= ceil(1/alpha) = {math.ceil(1.0 / rule.alpha)}")
    k = math.ceil(rule.alpha * T)
    return float(np.partition(hist, k - 1)[k - 1])


def var_forecast(
    vol: VolForecast,
    w: Portfolio,
    mean: np.ndarray,
    rule: QuantileRule,
    history: np.ndarray | None = None,
) -> VarForecast:
    """Plug-in VaR for a portfolio given the covariance forecast.

    `mean` is either the per-asset mean vector (aggregated with the weights)
    or the portfolio mean as a scalar. For the empirical rule, `history` must
    be the window's portfolio returns standardized by their per-day forecast
    volatilities.
    """
    weights = w.weights if isinstance(w, Portfolio) else np.asarray(w, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if weights.shape[0] != vol.sigma.shape[0]:
        raise DataError("weights and sigma dimensions do not agree")
    if mean.ndim == 0:
        mean_port = float(mean)
    elif mean.shape == weights.shape:
        mean_port = float(weights @ mean)
    else:
        raise DataError("mean must be a scalar or match the weights length")
    port_var = float(weights @ vol.sigma @ weights)
    if port_var <= 0:
        raise NumericalError("non-positive portfolio variance")
    sigma_port = math.sqrt(port_var)
    c_alpha = quantile_value(rule, history)
    return VarForecast(
        var_value=-mean_port - c_alpha * sigma_port,
        sigma_port=sigma_port,
        mean_port=mean_port,
        c_alpha=c_alpha,
    )
