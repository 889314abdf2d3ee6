"""Return-panel data model and ingestion.

A panel is a T x p matrix of per-period returns with one column per asset and
one row per date. Ingestion enforces a strict no-missing-data policy: any
column containing a gap is dropped (and reported) rather than imputed, so
every downstream estimator sees a complete matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReturnPanel:
    """Immutable T x p panel of returns.

    Parameters
    ----------
    returns : np.ndarray, shape (T, p)
        Per-period returns, one column per asset. Stored in whatever unit
        the source provides (no automatic rescaling).
    asset_ids : tuple of str
        Column labels, unique.
    timestamps : tuple of str
        Row labels (ISO-8601 dates), strictly increasing.
    groups : tuple of str, optional
        Per-asset group labels (e.g. sector codes) for block thresholding.
    dropped_assets : tuple of str
        Ids of columns removed at ingestion because of missing cells.
    """

    returns: np.ndarray
    asset_ids: tuple
    timestamps: tuple
    groups: tuple | None = None
    dropped_assets: tuple = ()

    def __post_init__(self):
        ret = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "returns", ret)
        object.__setattr__(self, "asset_ids", tuple(str(a) for a in self.asset_ids))
        object.__setattr__(self, "timestamps", tuple(str(t) for t in self.timestamps))
        if ret.ndim != 2:
            raise DataError("returns must be a 2-D array")
        T, p = ret.shape
        if T < 2 or p < 1:
            raise DataError(f"panel needs T >= 2 and p >= 1, got T={T}, p={p}")
        if not np.all(np.isfinite(ret)):
            raise DataError("panel contains missing or non-finite values")
        if len(self.asset_ids) != p:
            raise DataError("asset_ids length does not match panel width")
        if len(set(self.asset_ids)) != p:
            raise DataError("duplicate asset ids")
        if len(self.timestamps) != T:
            raise DataError("timestamps length does not match panel length")
        if any(a >= b for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise DataError("timestamps must be strictly increasing")
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(str(g) for g in self.groups))
            if len(self.groups) != p:
                raise DataError("groups length does not match panel width")

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class Portfolio:
    """Fixed weight vector over the panel's assets."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "weights", w)
        if w.size == 0 or not np.any(w != 0.0):
            raise DataError("portfolio needs at least one nonzero weight")
        if not np.all(np.isfinite(w)):
            raise DataError("portfolio weights must be finite")

    @property
    def gross_exposure(self) -> float:
        """L1 norm of the weights (gross exposure)."""
        return float(np.abs(self.weights).sum())

    @staticmethod
    def equal(p: int) -> "Portfolio":
        """Equally weighted portfolio of p assets."""
        return Portfolio(np.full(p, 1.0 / p))


def load_panel(path, format: str = "csv") -> ReturnPanel:
    """Read a wide CSV panel: `date` column plus one column per asset.

    Columns containing any missing cell are dropped and listed in the
    returned panel's ``dropped_assets``.
    """
    if format != "csv":
        raise DataError(f"unsupported panel format: {format!r}")
    try:
        # round_trip: the default parser drops the last couple of bits
        frame = pd.read_csv(path, dtype={0: str}, float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read panel file {path}: {exc}") from exc
    if frame.shape[1] < 2:
        raise DataError("panel file needs a date column and at least one asset column")
    date_col = frame.columns[0]
    dates = frame[date_col].astype(str).tolist()
    body = frame.drop(columns=[date_col])
    body = body.apply(pd.to_numeric, errors="coerce")
    ids = [str(c) for c in body.columns]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate asset ids in header")
    bad = [c for c in body.columns if body[c].isna().any()]
    if bad:
        logger.warning("dropping %d asset(s) with missing data: %s", len(bad), ", ".join(map(str, bad)))
        body = body.drop(columns=bad)
    if body.shape[1] == 0:
        raise DataError("every asset column has missing data")
    if body.shape[0] < 2:
        raise DataError("panel needs at least 2 complete rows")
    return ReturnPanel(
        # C order: to_numpy hands back column-major blocks, and a different
        # layout changes BLAS summation order in the last ulp downstream
        returns=np.ascontiguousarray(body.to_numpy(dtype=float)),
        asset_ids=tuple(str(c) for c in body.columns),
        timestamps=tuple(dates),
        dropped_assets=tuple(str(c) for c in bad),
    )


def save_panel(panel: ReturnPanel, path) -> None:
    """Write a panel back to the wide CSV layout accepted by load_panel."""
    frame = pd.DataFrame(panel.returns, columns=list(panel.asset_ids))
    frame.insert(0, "date", list(panel.timestamps))
    # %.17g keeps the round trip through text lossless for float64
    frame.to_csv(path, index=False, float_format="%.17g")


def load_groups(path) -> dict:
    """Read the sidecar group file (columns asset_id,group) into a dict."""
    try:
        frame = pd.read_csv(path, dtype=str)
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read group file {path}: {exc}") from exc
    cols = [c.strip() for c in frame.columns]
    if cols[:2] != ["asset_id", "group"]:
        raise DataError("group file must have columns asset_id,group")
    return dict(zip(frame.iloc[:, 0], frame.iloc[:, 1]))


def with_groups(panel: ReturnPanel, mapping: dict) -> ReturnPanel:
    """Attach group labels from an asset_id -> group mapping."""
    missing = [a for a in panel.asset_ids if a not in mapping]
    if missing:
        raise DataError(f"group file misses {len(missing)} asset(s), e.g. {missing[0]!r}")
    return ReturnPanel(
        returns=panel.returns,
        asset_ids=panel.asset_ids,
        timestamps=panel.timestamps,
        groups=tuple(mapping[a] for a in panel.asset_ids),
        dropped_assets=panel.dropped_assets,
    )


def demean(panel) -> tuple:
    """Subtract per-asset sample means.

    Accepts a ReturnPanel or a bare (T, p) array; returns (centered, mean).
    """
    ret = panel.returns if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    mean = ret.mean(axis=0)
    centered = ret - mean
    # bitwise-constant columns center to exactly zero, not eps-size noise
    if centered.ndim == 2 and centered.size:
        centered[:, np.ptp(ret, axis=0) == 0] = 0.0
    return centered, mean


def portfolio_returns(panel, portfolio) -> np.ndarray:
    """Per-period portfolio returns w'y_t."""
    ret = panel.returns if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    w = portfolio.weights if isinstance(portfolio, Portfolio) else np.asarray(portfolio, dtype=float)
    if ret.shape[1] != w.shape[0]:
        raise DataError(f"weights length {w.shape[0]} does not match panel width {ret.shape[1]}")
    return ret @ w
