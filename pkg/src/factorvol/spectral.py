"""Sample covariance, symmetric eigendecomposition, and latent-factor extraction.

The estimator splits a p x p sample covariance into its leading r
eigen-components (the pervasive, factor-driven part) and the orthogonal
remainder (the idiosyncratic part). Loadings are scaled so that
loadings' loadings = p * I_r, which pins the factor scale; latent factor
scores are then cross-sectional averages of the centered returns weighted
by the loadings.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, NumericalError


@dataclass(frozen=True)
class FactorDecomposition:
    """Spectral split of a covariance matrix into factor and residual parts.

    loadings : (p, r) scaled eigenvectors, column sign fixed (nonnegative sum)
    eigvals : (r,) leading eigenvalues, nonincreasing
    residual_cov : (p, p) sum of the trailing eigen-components
    rank : number of factors r
    factors : (T, r) factor scores, or None until extracted
    """

    loadings: np.ndarray
    eigvals: np.ndarray
    residual_cov: np.ndarray
    rank: int
    factors: np.ndarray | None = None

    @property
    def mean_factor_var(self) -> np.ndarray:
        """Average factor variances implied by the spectrum: eigvals / p."""
        return self.eigvals / self.loadings.shape[0]


def sample_cov(centered: np.ndarray) -> np.ndarray:
    """Sample covariance X'X / T of already-centered data (divisor T)."""
    x = np.asarray(centered, dtype=float)
    T = x.shape[0]
    if T < 2:
        raise DataError("sample covariance needs T >= 2")
    cov = x.T @ x / T
    return (cov + cov.T) / 2.0


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so each has nonnegative sum.

    Ties (sum numerically zero) fall back to making the first entry of
    non-negligible magnitude positive.
    """
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        s = col.sum()
        scale = np.abs(col).max()
        if abs(s) > 1e-12 * max(scale, 1.0):
            if s < 0:
                out[:, j] = -col
        else:
            nz = np.nonzero(np.abs(col) > 1e-12 * max(scale, 1.0))[0]
            if nz.size and col[nz[0]] < 0:
                out[:, j] = -col
    return out


def eigh_desc(S: np.ndarray) -> tuple:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (eigvals, eigvecs) with eigvecs[:, i] the unit eigenvector of
    eigvals[i], column signs fixed by the nonnegative-sum convention.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DataError("matrix must be square")
    scale = np.abs(S).max()
    if scale > 0 and np.abs(S - S.T).max() > 1e-10 * scale:
        raise DataError("matrix is not symmetric")
    try:
        vals, vecs = np.linalg.eigh((S + S.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    return vals[order], _fix_signs(vecs[:, order])


def poet_decompose(S: np.ndarray, rank: int) -> FactorDecomposition:
    """Split S into its top-`rank` eigen-part and the residual covariance.

    loadings = sqrt(p) * leading eigenvectors, so loadings' loadings = p I_r;
    residual_cov = S minus the leading eigen-components, i.e. the sum of the
    trailing ones.
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if not 1 <= rank < p:
        raise DataError(f"rank must satisfy 1 <= r < p, got r={rank}, p={p}")
    vals, vecs = eigh_desc(S)
    lead_vals = vals[:rank]
    lead_vecs = vecs[:, :rank]
    loadings = np.sqrt(p) * lead_vecs
    residual = S - (lead_vecs * lead_vals) @ lead_vecs.T
    residual = (residual + residual.T) / 2.0
    return FactorDecomposition(
        loadings=loadings,
        eigvals=lead_vals.copy(),
        residual_cov=residual,
        rank=rank,
    )


def extract_factors(decomp: FactorDecomposition, centered: np.ndarray) -> np.ndarray:
    """Factor scores: each row is loadings' x_t / p."""
    x = np.asarray(centered, dtype=float)
    p = decomp.loadings.shape[0]
    if x.shape[1] != p:
        raise DataError(f"panel width {x.shape[1]} does not match loadings ({p})")
    return x @ decomp.loadings / p


def poet_fit(centered: np.ndarray, rank: int) -> FactorDecomposition:
    """Convenience: sample_cov -> poet_decompose -> extract_factors."""
    S = sample_cov(centered)
    decomp = poet_decompose(S, rank)
    return replace(decomp, factors=extract_factors(decomp, centered))


def estimate_rank(S: np.ndarray, T: int, r_max: int = 10, c1: float = 1.0, c2: float = 0.5) -> int:
    """Pick the factor count by a penalized scaled-eigenvalue criterion.

    Let j* minimize, over j in [1, r_max],

        eigval_j / p  +  j * c1 * (sqrt(log(p)/T) + log(p)/p)**c2

    with ties going to the smaller j. j* marks the first eigenvalue small
    enough that the penalty dominates, so the factor count is j* - 1,
    floored at 1. c1 is scale-sensitive: the eigenvalue term is in the
    data's variance units while the penalty is not, so c1 should be chosen
    commensurate with the panel's scale (the default suits daily percent
    returns).
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if not 1 <= r_max < p:
        raise DataError(f"r_max must satisfy 1 <= r_max < p, got {r_max}")
    if c1 <= 0 or not 0 < c2 <= 1:
        raise DataError("need c1 > 0 and 0 < c2 <= 1")
    if T < 2:
        raise DataError("need T >= 2")
    vals, _ = eigh_desc(S)
    if np.all(vals <= 0):
        raise NumericalError("degenerate covariance: no positive eigenvalues")
    penalty = c1 * (np.sqrt(np.log(p) / T) + np.log(p) / p) ** c2
    j = np.arange(1, r_max + 1)
    crit = vals[:r_max] / p + j * penalty
    return max(int(j[np.argmin(crit)]) - 1, 1)
