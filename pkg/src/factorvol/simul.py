"""Monte Carlo data generator and replication driver.

Returns follow a latent factor model y_t = V f_t + u_t: loadings are drawn
once per panel from the right singular vectors of a uniform random matrix
(rescaled so V'V = p I), factor variances follow the three-factor GARCH
recursion started at their unconditional level, and the idiosyncratic part
is Gaussian with a geometrically banded covariance. Replications draw
independent child streams from one root seed, so runs are reproducible and
parallelizable.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .bench import fit_bekk_diag_vt, fit_ccc, fit_port_garch, hist_vol, static_poet
from .errors import DataError, FactorVolError, NumericalError
from .fgarch import FitConfig, GarchParams, h_init, qmle_fit
from .forecast import QuantileRule, pgarch_forecast, var_forecast
from .panel import ReturnPanel, demean
from .shrink import ThresholdSpec
from .spectral import poet_fit

AVAILABLE_MODELS = ("pgarch", "ccc", "bekk_diag_vt", "port_garch", "hist_vol", "static_poet")
MATRIX_METRICS = ("frobenius", "spectral", "max", "rel_frobenius")
FULL_MATRIX_MODELS = ("pgarch", "hist_vol", "static_poet")


def default_theta0() -> GarchParams:
    """Built-in three-factor parameter set for the simulation studies."""
    return GarchParams(
        omega=np.array([0.003, 0.002, 0.001]),
        amat=np.array([[0.20, 0.30, 0.40], [0.15, 0.12, 0.20], [0.10, 0.10, 0.10]]),
        bmat=np.array([[0.20, 0.10, 0.10], [0.20, 0.05, 0.07], [0.10, 0.00, 0.05]]),
    )


def banded_idio_cov(p: int, scale: float = 0.01, decay: float = 0.5) -> np.ndarray:
    """Geometrically banded idiosyncratic covariance scale * decay^|i-j|."""
    idx = np.arange(p)
    return scale * decay ** np.abs(idx[:, None] - idx[None, :])


@dataclass(frozen=True)
class DgpSpec:
    """Simulation design: dimensions, true parameters, and noise shape."""

    p: int
    T: int
    r: int = 3
    theta0: GarchParams = field(default_factory=default_theta0)
    loading_seed: int | None = None  # fix V across replications if set
    idio_scale: float = 0.01
    idio_decay: float = 0.5
    noise: str = "gaussian"
    burn_in: int = 0

    def __post_init__(self):
        if self.p < 2 or self.T < 2:
            raise DataError("DGP needs p >= 2 and T >= 2")
        if not 1 <= self.r < self.p:
            raise DataError("DGP needs 1 <= r < p")
        if self.theta0.r != self.r:
            raise DataError("theta0 rank does not match r")
        if self.noise != "gaussian":
            raise DataError(f"unsupported noise kind {self.noise!r}")
        if self.burn_in < 0:
            raise DataError("burn_in must be >= 0")


@dataclass(frozen=True)
class DgpTruth:
    """Everything needed to score forecasts against the generating process."""

    loadings: np.ndarray
    factors: np.ndarray
    h: np.ndarray
    sigma_u: np.ndarray
    theta0: GarchParams

    def h_next(self) -> np.ndarray:
        """True one-step factor variance past the sample."""
        th = self.theta0
        return th.omega + th.amat @ (self.factors[-1] ** 2) + th.bmat @ self.h[-1]

    def sigma_next(self) -> np.ndarray:
        """True one-step covariance past the sample."""
        hn = self.h_next()
        s = (self.loadings * hn) @ self.loadings.T + self.sigma_u
        return (s + s.T) / 2.0

    def sigma_at(self, t: int) -> np.ndarray:
        s = (self.loadings * self.h[t]) @ self.loadings.T + self.sigma_u
        return (s + s.T) / 2.0

    def true_var(self, weights: np.ndarray, alpha: float) -> float:
        """True VaR (loss scale) for Gaussian innovations: -z_alpha * sd."""
        w = np.asarray(weights, dtype=float)
        return float(-ndtri(alpha) * np.sqrt(w @ self.sigma_next() @ w))


def _loadings_from(rng: np.random.Generator, T: int, p: int, r: int) -> np.ndarray:
    g = rng.random((T, p))
    _, _, vt = np.linalg.svd(g, full_matrices=False)
    return np.sqrt(p) * vt[:r].T


def generate(spec: DgpSpec, seed) -> tuple:
    """Draw one panel from the DGP. Returns (ReturnPanel, DgpTruth)."""
    rng = np.random.default_rng(seed)
    if spec.loading_seed is not None:
        loadings = _loadings_from(np.random.default_rng(spec.loading_seed), spec.T, spec.p, spec.r)
    else:
        loadings = _loadings_from(rng, spec.T, spec.p, spec.r)
    th = spec.theta0
    h1 = h_init(th)
    total = spec.burn_in + spec.T
    z = rng.standard_normal((total, spec.r))
    h_all = np.empty((total, spec.r))
    f_all = np.empty((total, spec.r))
    h_cur = h1
    for t in range(total):
        h_all[t] = h_cur
        f_all[t] = np.sqrt(h_cur) * z[t]
        h_cur = th.omega + th.amat @ (f_all[t] ** 2) + th.bmat @ h_cur
    h = h_all[spec.burn_in :]
    f = f_all[spec.burn_in :]
    sigma_u = banded_idio_cov(spec.p, spec.idio_scale, spec.idio_decay)
    chol = np.linalg.cholesky(sigma_u)
    u = rng.standard_normal((spec.T, spec.p)) @ chol.T
    y = f @ loadings.T + u
    start = _dt.date(2000, 1, 1)
    stamps = tuple((start + _dt.timedelta(days=t)).isoformat() for t in range(spec.T))
    ids = tuple(f"A{i:04d}" for i in range(1, spec.p + 1))
    panel = ReturnPanel(returns=y, asset_ids=ids, timestamps=stamps)
    truth = DgpTruth(loadings=loadings, factors=f, h=h, sigma_u=sigma_u, theta0=th)
    return panel, truth


# ---------------------------------------------------------------------------
# replication driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricRow:
    p: int
    T: int
    model: str
    metric: str
    mean: float
    sd: float
    n_reps: int


@dataclass
class MetricTable:
    """Long-format per-model, per-metric summary across replications."""

    rows: list

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame([r.__dict__ for r in self.rows])

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    def lookup(self, model: str, metric: str) -> MetricRow:
        for row in self.rows:
            if row.model == model and row.metric == metric:
                return row
        raise KeyError(f"no row for ({model}, {metric})")


def _matrix_errors(est: np.ndarray, true: np.ndarray, isqrt: np.ndarray) -> dict:
    delta = est - true
    p = true.shape[0]
    mid = isqrt @ delta @ isqrt
    return {
        "frobenius": float(np.linalg.norm(delta, "fro")),
        "spectral": float(np.linalg.norm(delta, 2)),
        "max": float(np.abs(delta).max()),
        "rel_frobenius": float(np.sqrt((mid * mid).sum() / p)),
    }


def _inv_sqrt(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    if vals[0] <= 0:
        raise NumericalError("true covariance is not positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


def _replicate(
    spec: DgpSpec,
    child,
    models: tuple,
    metrics: tuple,
    portfolio_size: int | None,
    alphas: tuple,
    rank: int,
    tspec: ThresholdSpec,
    fit_config: FitConfig | None,
) -> dict:
    """One replication: returns {(model, metric): value} plus failure marks."""
    dgp_ss, port_ss = np.random.SeedSequence(child).spawn(2) if isinstance(child, int) else child.spawn(2)
    panel, truth = generate(spec, dgp_ss)
    y = panel.returns
    sigma_true = truth.sigma_next()
    out = {}

    want_full = any(m in metrics for m in MATRIX_METRICS)
    isqrt = _inv_sqrt(sigma_true) if want_full else None

    if portfolio_size is not None:
        rng_port = np.random.default_rng(port_ss)
        members = np.sort(rng_port.choice(spec.p, size=portfolio_size, replace=False))
        w_sub = np.full(portfolio_size, 1.0 / portfolio_size)
        sub = y[:, members]
        sigma_true_sub = sigma_true[np.ix_(members, members)]
        true_vars = {a: float(-ndtri(a) * np.sqrt(w_sub @ sigma_true_sub @ w_sub)) for a in alphas}
        pr = sub @ w_sub
    else:
        members = None

    def score_matrix(name: str, est_full: np.ndarray | None, est_sub: np.ndarray | None):
        if est_full is not None and want_full:
            for k, v in _matrix_errors(est_full, sigma_true, isqrt).items():
                if k in metrics:
                    out[(name, k)] = v
        if members is not None and est_sub is not None and "port_frobenius" in metrics:
            out[(name, "port_frobenius")] = float(np.linalg.norm(est_sub - sigma_true_sub, "fro"))

    def score_var(name: str, sigma_port: float, mean_port: float):
        if members is None or "var_mae" not in metrics:
            return
        for a in alphas:
            c = float(ndtri(a))
            var_hat = -mean_port - c * sigma_port
            key = f"var_mae_{a:g}" if len(alphas) > 1 else "var_mae"
            out[(name, key)] = abs(var_hat - true_vars[a])

    for name in models:
        try:
            if name == "pgarch":
                centered, ybar = demean(y)
                decomp = poet_fit(centered, rank)
                theta, _ = qmle_fit(decomp.factors**2, fit_config)
                vol = pgarch_forecast(decomp, theta, decomp.factors**2, tspec)
                est_sub = vol.sigma[np.ix_(members, members)] if members is not None else None
                score_matrix(name, vol.sigma, est_sub)
                if members is not None:
                    score_var(name, float(np.sqrt(w_sub @ est_sub @ w_sub)), float(ybar[members] @ w_sub))
                if "theta_mae" in metrics and theta.r == spec.theta0.r:
                    for i in range(spec.r):
                        out[(name, f"mae_omega_{i + 1}")] = abs(theta.omega[i] - spec.theta0.omega[i])
                    out[(name, "mae_amat")] = float(np.abs(theta.amat - spec.theta0.amat).mean())
                    out[(name, "mae_bmat")] = float(np.abs(theta.bmat - spec.theta0.bmat).mean())
            elif name == "hist_vol":
                est_full = hist_vol(y) if want_full else None
                est_sub = hist_vol(sub) if members is not None else None
                score_matrix(name, est_full, est_sub)
                if members is not None:
                    score_var(name, float(np.sqrt(w_sub @ est_sub @ w_sub)), float(sub.mean(axis=0) @ w_sub))
            elif name == "static_poet":
                est_full = static_poet(y, rank, tspec) if want_full else None
                if members is not None:
                    full = est_full if est_full is not None else static_poet(y, rank, tspec)
                    est_sub = full[np.ix_(members, members)]
                else:
                    est_sub = None
                score_matrix(name, est_full, est_sub)
                if members is not None:
                    score_var(name, float(np.sqrt(w_sub @ est_sub @ w_sub)), float(sub.mean(axis=0) @ w_sub))
            elif name in ("ccc", "bekk_diag_vt"):
                if members is None:
                    raise DataError(f"{name} requires a portfolio_size")
                model = fit_ccc(sub) if name == "ccc" else fit_bekk_diag_vt(sub)
                score_matrix(name, None, model.sigma_next)
                score_var(name, float(np.sqrt(w_sub @ model.sigma_next @ w_sub)), float(sub.mean(axis=0) @ w_sub))
            elif name == "port_garch":
                if members is None:
                    raise DataError("port_garch requires a portfolio_size")
                model = fit_port_garch(pr)
                score_var(name, float(np.sqrt(model.variance_next)), float(pr.mean()))
            else:
                raise DataError(f"unknown model {name!r}")
        except FactorVolError:
            out[(name, "__failed__")] = 1.0
    return out


def run_replications(
    spec: DgpSpec,
    n_reps: int,
    models,
    metrics,
    seed: int = 0,
    portfolio_size: int | None = None,
    alphas=(0.01,),
    rank: int | None = None,
    threshold_spec: ThresholdSpec | None = None,
    fit_config: FitConfig | None = None,
    n_jobs: int = 1,
) -> MetricTable:
    """Repeat generate -> fit -> forecast -> score and aggregate.

    Returns a long-format MetricTable with one row per (model, metric):
    mean and standard deviation across successful replications, plus an
    `n_failed` row per model counting replications whose fit raised.
    """
    if n_reps < 1:
        raise DataError("n_reps must be >= 1")
    models = tuple(models)
    metrics = tuple(metrics)
    unknown = [m for m in models if m not in AVAILABLE_MODELS]
    if unknown:
        raise DataError(f"unknown model(s): {', '.join(unknown)}")
    rank = rank if rank is not None else spec.r
    tspec = threshold_spec or ThresholdSpec()
    alphas = tuple(alphas)
    children = np.random.SeedSequence(seed).spawn(n_reps)
    args = [(spec, c, models, metrics, portfolio_size, alphas, rank, tspec, fit_config) for c in children]
    if n_jobs == 1:
        results = [_replicate(*a) for a in args]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(delayed(_replicate)(*a) for a in args)

    rows = []
    for model in models:
        n_failed = sum(1 for res in results if (model, "__failed__") in res)
        keys = sorted({k[1] for res in results for k in res if k[0] == model and k[1] != "__failed__"})
        for metric in keys:
            vals = np.array([res[(model, metric)] for res in results if (model, metric) in res])
            rows.append(
                MetricRow(
                    p=spec.p,
                    T=spec.T,
                    model=model,
                    metric=metric,
                    mean=float(vals.mean()),
                    sd=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                    n_reps=int(vals.size),
                )
            )
        rows.append(
            MetricRow(p=spec.p, T=spec.T, model=model, metric="n_failed", mean=float(n_failed), sd=0.0, n_reps=n_reps)
        )
    return MetricTable(rows=rows)
