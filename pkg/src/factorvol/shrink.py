"""Correlation-scaled thresholding of the idiosyncratic covariance.

Off-diagonal entries survive only if they exceed a level tau scaled by the
corresponding pair of variances; survivors are kept as-is (hard) or shrunk
toward zero by the level (soft). A third mode zeroes every cross-group entry
and keeps within-group blocks untouched. Thresholding can break positive
semidefiniteness, so an eigenvalue-clipping repair is provided.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .spectral import eigh_desc

DIAG_FLOOR_FRAC = 1e-10  # floor for non-positive diagonal entries, times trace/p


@dataclass(frozen=True)
class ThresholdSpec:
    """Thresholding rule: level constant, sparsity proxy, and mode.

    c_tau : positive multiplier on the vanishing rate
    s_p : nonnegative sparsity proxy entering the sqrt(s_p / p) term
    mode : 'soft', 'hard', or 'sector_block'
    groups : per-asset labels, required by sector_block
    """

    c_tau: float = 1.0
    s_p: float = 1.0
    mode: str = "soft"
    groups: tuple | None = None

    def __post_init__(self):
        if self.c_tau <= 0:
            raise DataError("c_tau must be > 0")
        if self.s_p < 0:
            raise DataError("s_p must be >= 0")
        if self.mode not in ("soft", "hard", "sector_block"):
            raise DataError(f"unknown threshold mode {self.mode!r}")
        if self.mode == "sector_block" and self.groups is None:
            raise DataError("sector_block mode requires group labels")
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(self.groups))

    def to_dict(self) -> dict:
        return {
            "c_tau": self.c_tau,
            "s_p": self.s_p,
            "mode": self.mode,
            "n_groups": None if self.groups is None else len(set(self.groups)),
        }


def threshold_level(spec: ThresholdSpec, p: int, T: int) -> float:
    """tau = c_tau * (sqrt(log(p) / T) + sqrt(s_p / p))."""
    if p < 2 or T < 2:
        raise DataError("threshold level needs p >= 2 and T >= 2")
    return spec.c_tau * (np.sqrt(np.log(p) / T) + np.sqrt(spec.s_p / p))


def apply_threshold(sigma_u: np.ndarray, tau: float, spec: ThresholdSpec) -> np.ndarray:
    """Threshold off-diagonal entries at tau times the correlation scale.

    The diagonal passes through untouched (non-positive entries are floored
    first). An off-diagonal x survives iff |x| >= tau * sqrt(d_i d_j); soft
    mode shrinks survivors by that level, hard mode keeps them, sector_block
    ignores tau and zeroes exactly the cross-group entries.
    """
    S = np.asarray(sigma_u, dtype=float)
    p = S.shape[0]
    if S.ndim != 2 or S.shape[1] != p:
        raise DataError("sigma_u must be square")
    scale = np.abs(S).max()
    if scale > 0 and np.abs(S - S.T).max() > 1e-10 * scale:
        raise DataError("sigma_u must be symmetric")
    S = (S + S.T) / 2.0
    d = np.diag(S).copy()
    floor = DIAG_FLOOR_FRAC * max(abs(d.sum()), p * 1e-300) / p
    d = np.where(d > 0, d, floor)

    if spec.mode == "sector_block":
        if spec.groups is None or len(spec.groups) != p:
            raise DataError("sector_block needs one group label per asset")
        g = np.asarray(spec.groups)
        mask = g[:, None] == g[None, :]
        out = np.where(mask, S, 0.0)
    else:
        level = tau * np.sqrt(np.outer(d, d))
        keep = np.abs(S) >= level
        if spec.mode == "soft":
            out = np.where(keep, np.sign(S) * (np.abs(S) - level), 0.0)
        else:
            out = np.where(keep, S, 0.0)
    np.fill_diagonal(out, d)
    return (out + out.T) / 2.0


def psd_repair(M: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Clip eigenvalues from below and reassemble.

    floor defaults to 1e-8 times the largest eigenvalue (0 when that is
    not positive), so an already-PSD matrix passes through unchanged up to
    the clip on its smallest eigenvalues.
    """
    M = np.asarray(M, dtype=float)
    vals, vecs = eigh_desc(M)
    if floor is None:
        floor = 1e-8 * max(vals[0], 0.0)
    clipped = np.maximum(vals, floor)
    out = (vecs * clipped) @ vecs.T
    return (out + out.T) / 2.0
