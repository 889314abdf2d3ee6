"""Multivariate diagonal-volatility GARCH on latent factors, fit by QMLE.

The factor variances follow h_t = omega + amat f(t-1)^2 + bmat h_{t-1},
started at the model-implied unconditional level (I - amat - bmat)^-1 omega.
Estimation minimizes the Gaussian quasi-likelihood sum(log h + f^2 / h)
over theta = (omega, vec(amat), vec(bmat)) with a quasi-Newton method on an
unconstrained reparameterization: elementwise log for omega and a scaled
logistic for the coefficient entries, plus a spectral-norm penalty that keeps
the persistence matrix a contraction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._kernels import garch_objective, garch_objective_grad, garch_recursion
from .errors import DataError, NumericalError

H_FLOOR = 1e-12
COEF_CAP = 0.9999  # open upper bound for amat/bmat entries
BNORM_CAP = 1.0 - 1e-4  # spectral-norm budget for bmat
OMEGA_FLOOR = 1e-10
SENTINEL = 1e12  # finite stand-in for +inf inside the optimizer


@dataclass(frozen=True)
class GarchParams:
    """theta = (omega, amat, bmat) for an r-factor volatility recursion.

    omega : (r,) strictly positive intercepts
    amat : (r, r) nonnegative loadings on lagged squared factors
    bmat : (r, r) nonnegative persistence matrix, spectral norm < 1
    """

    omega: np.ndarray
    amat: np.ndarray
    bmat: np.ndarray

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        amat = np.atleast_2d(np.asarray(self.amat, dtype=float))
        bmat = np.atleast_2d(np.asarray(self.bmat, dtype=float))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "amat", amat)
        object.__setattr__(self, "bmat", bmat)
        r = omega.shape[0]
        if amat.shape != (r, r) or bmat.shape != (r, r):
            raise DataError("amat and bmat must be r x r with r = len(omega)")
        if not np.all(np.isfinite(omega)) or np.any(omega <= 0):
            raise DataError("omega entries must be strictly positive")
        if np.any(amat < 0) or np.any(bmat < 0):
            raise DataError("amat and bmat must be nonnegative elementwise")
        if np.linalg.norm(bmat, 2) >= 1.0:
            raise DataError("spectral norm of bmat must be < 1")

    @property
    def r(self) -> int:
        return self.omega.shape[0]

    def flatten(self) -> np.ndarray:
        """Pack as (omega, vec(amat), vec(bmat)), column-major vec."""
        return np.concatenate(
            [self.omega, self.amat.ravel(order="F"), self.bmat.ravel(order="F")]
        )

    @staticmethod
    def unflatten(vec: np.ndarray, r: int) -> "GarchParams":
        vec = np.asarray(vec, dtype=float)
        return GarchParams(
            omega=vec[:r],
            amat=vec[r : r + r * r].reshape((r, r), order="F"),
            bmat=vec[r + r * r :].reshape((r, r), order="F"),
        )

    def to_dict(self) -> dict:
        return {
            "omega": self.omega.tolist(),
            "amat": self.amat.tolist(),
            "bmat": self.bmat.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "GarchParams":
        return GarchParams(np.array(d["omega"]), np.array(d["amat"]), np.array(d["bmat"]))


@dataclass(frozen=True)
class VolPath:
    """Conditional factor variances h_t produced by a recursion run."""

    h: np.ndarray
    theta: GarchParams

    def __post_init__(self):
        if np.any(self.h <= 0):
            raise NumericalError("variance path contains non-positive entries")


@dataclass
class FitConfig:
    """Knobs for qmle_fit; serializable as a flat key-value mapping."""

    max_iter: int = 500
    grad_tol: float = 1e-6
    init_arch: float = 0.1
    init_persist: float = 0.8
    init_offdiag: float = 1e-3  # exact zeros are unreachable under the logit map
    penalty_weight: float | None = None  # None: 1000 * T

    def to_dict(self) -> dict:
        return {
            "max_iter": self.max_iter,
            "grad_tol": self.grad_tol,
            "init_arch": self.init_arch,
            "init_persist": self.init_persist,
            "init_offdiag": self.init_offdiag,
            "penalty_weight": self.penalty_weight,
        }

    @staticmethod
    def from_dict(d: dict) -> "FitConfig":
        return FitConfig(**{k: d[k] for k in FitConfig().to_dict() if k in d})


def _unconditional(theta: GarchParams) -> np.ndarray:
    m = np.eye(theta.r) - theta.amat - theta.bmat
    try:
        h1 = np.linalg.solve(m, theta.omega)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("I - amat - bmat is singular") from exc
    return h1


def h_init(theta: GarchParams) -> np.ndarray:
    """Unconditional factor variance (I - amat - bmat)^-1 omega."""
    h1 = _unconditional(theta)
    if np.any(h1 <= 0):
        raise NumericalError("unconditional variance is not positive (invalid parameter region)")
    return h1


def recurse_h(theta: GarchParams, fsq: np.ndarray) -> VolPath:
    """Run the variance recursion over a T x r squared-factor matrix."""
    fsq = _check_fsq(fsq, theta.r)
    h1 = h_init(theta)
    h = garch_recursion(theta.omega, theta.amat, theta.bmat, h1, fsq)
    return VolPath(h=h, theta=theta)


def forecast_h(theta: GarchParams, fsq: np.ndarray) -> np.ndarray:
    """One step past the sample: omega + amat fsq_T + bmat h_T."""
    path = recurse_h(theta, fsq)
    return theta.omega + theta.amat @ fsq[-1] + theta.bmat @ path.h[-1]


def _check_fsq(fsq, r: int | None = None) -> np.ndarray:
    fsq = np.asarray(fsq, dtype=float)
    if fsq.ndim == 1:
        fsq = fsq[:, None]
    if fsq.ndim != 2 or fsq.shape[0] < 1:
        raise DataError("fsq must be a T x r matrix")
    if r is not None and fsq.shape[1] != r:
        raise DataError(f"fsq has {fsq.shape[1]} columns, expected {r}")
    if np.any(fsq < 0) or not np.all(np.isfinite(fsq)):
        raise DataError("fsq must be nonnegative and finite")
    return fsq


def qmle_objective(theta: GarchParams, fsq: np.ndarray) -> float:
    """Gaussian quasi-likelihood criterion (lower is better).

    Returns +inf when the parameter point is outside the valid region
    (non-positive unconditional variance or an overflowing path).
    """
    fsq = _check_fsq(fsq, theta.r)
    try:
        h1 = h_init(theta)
    except NumericalError:
        return math.inf
    obj, ok = garch_objective(theta.omega, theta.amat, theta.bmat, h1, fsq)
    return obj if ok else math.inf


def qmle_gradient(theta: GarchParams, fsq: np.ndarray) -> tuple:
    """Objective and analytic gradient, flat (omega, vec(amat), vec(bmat)) order."""
    fsq = _check_fsq(fsq, theta.r)
    r = theta.r
    m = np.eye(r) - theta.amat - theta.bmat
    try:
        minv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return math.inf, np.zeros(r + 2 * r * r)
    h1 = minv @ theta.omega
    if np.any(h1 <= 0):
        return math.inf, np.zeros(r + 2 * r * r)
    obj, g_omega, g_amat, g_bmat, ok = garch_objective_grad(
        theta.omega, theta.amat, theta.bmat, h1, minv, fsq
    )
    if not ok:
        return math.inf, np.zeros(r + 2 * r * r)
    grad = np.concatenate([g_omega, g_amat.ravel(order="F"), g_bmat.ravel(order="F")])
    return obj, grad


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _logit(y):
    y = np.clip(y, 1e-15, 1.0 - 1e-15)
    return np.log(y) - np.log1p(-y)


def _bnorm_penalty(bmat: np.ndarray, weight: float) -> tuple:
    """Quadratic penalty on the spectral norm above the cap, with gradient."""
    u, s, vt = np.linalg.svd(bmat)
    viol = s[0] - BNORM_CAP
    if viol <= 0:
        return 0.0, np.zeros_like(bmat)
    return weight * viol * viol, 2.0 * weight * viol * np.outer(u[:, 0], vt[0])


def qmle_fit(fsq: np.ndarray, config: FitConfig | None = None, trace: list | None = None) -> tuple:
    """Quasi-maximum-likelihood fit of (omega, amat, bmat) on squared factors.

    Returns (GarchParams, diagnostics). diagnostics carries iteration count,
    gradient norm, convergence flag, and objective values. If `trace` is a
    list, the optimizer's (penalized) objective at each accepted iterate is
    appended to it.
    """
    cfg = config or FitConfig()
    fsq = _check_fsq(fsq)
    T, r = fsq.shape
    if not np.any(fsq > 0):
        raise DataError("all-zero squared factors cannot identify a variance model")
    n_params = r + 2 * r * r
    if T < 20 * n_params:
        warnings.warn(
            f"T={T} is small for {n_params} parameters; estimates may be unstable",
            stacklevel=2,
        )
    colmean = np.maximum(fsq.mean(axis=0), 1e-10)
    omega_ub = 10.0 * colmean
    a0, b0 = cfg.init_arch, cfg.init_persist
    off = cfg.init_offdiag
    omega0 = 0.1 * colmean * (1.0 - a0 - b0)
    amat0 = np.full((r, r), off) + (a0 - off) * np.eye(r)
    bmat0 = np.full((r, r), off) + (b0 - off) * np.eye(r)
    weight = cfg.penalty_weight if cfg.penalty_weight is not None else 1000.0 * T

    def pack(omega, amat, bmat):
        return np.concatenate(
            [
                np.log(omega),
                _logit(amat.ravel(order="F") / COEF_CAP),
                _logit(bmat.ravel(order="F") / COEF_CAP),
            ]
        )

    def unpack(x):
        omega = np.exp(x[:r])
        amat = (COEF_CAP * _sigmoid(x[r : r + r * r])).reshape((r, r), order="F")
        bmat = (COEF_CAP * _sigmoid(x[r + r * r :])).reshape((r, r), order="F")
        return omega, amat, bmat

    def fun(x):
        omega, amat, bmat = unpack(x)
        m = np.eye(r) - amat - bmat
        try:
            minv = np.linalg.inv(m)
        except np.linalg.LinAlgError:
            return 2.0 * SENTINEL, np.zeros_like(x)
        h1 = minv @ omega
        if np.any(h1 <= 0):
            # graded sentinel so the line search backs off smoothly
            return SENTINEL * (1.0 + min(1.0, float(-h1.min()))), np.zeros_like(x)
        obj, g_omega, g_amat, g_bmat, ok = garch_objective_grad(omega, amat, bmat, h1, minv, fsq)
        if not ok:
            return SENTINEL, np.zeros_like(x)
        pen, pen_grad = _bnorm_penalty(bmat, weight)
        obj += pen
        g_bmat = g_bmat + pen_grad
        # chain rule through omega = exp(.), coef = CAP * sigmoid(.)
        ga = g_amat.ravel(order="F")
        gb = g_bmat.ravel(order="F")
        av = amat.ravel(order="F")
        bv = bmat.ravel(order="F")
        grad = np.concatenate(
            [
                g_omega * omega,
                ga * av * (1.0 - av / COEF_CAP),
                gb * bv * (1.0 - bv / COEF_CAP),
            ]
        )
        return obj, grad

    x0 = pack(omega0, amat0, bmat0)
    f0 = fun(x0)[0]
    bounds = [(math.log(OMEGA_FLOOR), math.log(ub)) for ub in omega_ub]
    bounds += [(None, None)] * (2 * r * r)

    callback = None
    if trace is not None:
        trace.append(f0)

        def callback(xk):
            trace.append(fun(xk)[0])

    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=callback,
        options={"maxiter": cfg.max_iter, "gtol": cfg.grad_tol, "ftol": 1e-12},
    )
    omega, amat, bmat = unpack(res.x)
    omega = np.clip(omega, OMEGA_FLOOR * (1 + 1e-6), omega_ub * (1 - 1e-12))
    constraint_active = False
    bnorm = np.linalg.norm(bmat, 2)
    if bnorm >= BNORM_CAP:
        bmat = bmat * ((BNORM_CAP - 1e-4) / bnorm)
        constraint_active = True
    theta = GarchParams(omega=omega, amat=amat, bmat=bmat)
    theta0 = GarchParams(omega=omega0, amat=amat0, bmat=bmat0)
    obj_init = qmle_objective(theta0, fsq)
    obj_final = qmle_objective(theta, fsq)
    converged = bool(res.success)
    if not math.isfinite(obj_final) or obj_final > obj_init:
        # never hand back something worse than the starting point
        theta, obj_final, converged = theta0, obj_init, False
    diagnostics = {
        "converged": converged,
        "iterations": int(res.nit),
        "n_feval": int(res.nfev),
        "grad_norm": float(np.linalg.norm(res.jac)) if res.jac is not None else math.nan,
        "objective_init": float(obj_init),
        "objective": float(obj_final),
        "constraint_active": constraint_active,
        "message": str(res.message),
    }
    return theta, diagnostics
