"""CSV tables, run manifests, and the figures rendered alongside them.

Every report path writes delimited data first and then a matching figure
in the same directory, so each plot has its underlying numbers next to it.
Output is deterministic for a fixed seed and configuration: no wall-clock
timestamps are embedded anywhere.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .backtest import BacktestReport
from .rolling import RollingResult
from .simul import MetricTable

REPORT_COLUMNS = [
    "model",
    "quantile_rule",
    "alpha",
    "portfolio_size",
    "hit_rate",
    "lr_uc_p",
    "lr_cc_p",
    "dq_hit_p",
    "dq_var_p",
]


def _ensure_dir(out_dir) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(out_dir, config: dict) -> Path:
    """Echo the run configuration and library versions for reproducibility."""
    import numpy
    import scipy

    from . import __version__

    path = _ensure_dir(out_dir) / "manifest.json"
    payload = {
        "config": config,
        "versions": {
            "factorvol": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path


def write_metric_table(table: MetricTable, out_dir, stem: str = "metrics") -> list:
    """Write the long-format metric table and one figure per metric.

    A single (p, T) cell renders as a per-model bar chart; a grid renders as
    lines against whichever of p or T varies.
    """
    out = _ensure_dir(out_dir)
    frame = table.to_frame()
    csv_path = out / f"{stem}.csv"
    frame.to_csv(csv_path, index=False)
    written = [csv_path]
    plotted = frame[frame.metric != "n_failed"]
    for metric, grp in plotted.groupby("metric"):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        cells = grp[["p", "T"]].drop_duplicates()
        if len(cells) > 1:
            x_col = "p" if cells["p"].nunique() > 1 else "T"
            for model, sub in grp.groupby("model"):
                sub = sub.sort_values(x_col)
                ax.plot(sub[x_col], sub["mean"], marker="o", label=model)
            ax.set_xlabel(x_col)
        else:
            models = grp["model"].tolist()
            ax.bar(models, grp["mean"], yerr=grp["sd"], capsize=3)
            ax.set_xlabel("model")
        ax.set_ylabel(metric)
        ax.set_title(f"{metric} (mean over replications)")
        if len(cells) > 1:
            ax.legend()
        fig.tight_layout()
        fig_path = out / f"{stem}_{metric}.png"
        fig.savefig(fig_path, dpi=120)
        plt.close(fig)
        written.append(fig_path)
    return written


def write_backtest_report(reports: list, out_dir, stem: str = "backtest_report") -> list:
    """Write the summary table (fixed column set) and a hit-rate figure."""
    out = _ensure_dir(out_dir)
    rows = []
    for rep in reports:
        if isinstance(rep, BacktestReport):
            rows.append({c: getattr(rep, c) for c in REPORT_COLUMNS})
        else:
            rows.append({c: rep[c] for c in REPORT_COLUMNS})
    frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    csv_path = out / f"{stem}.csv"
    frame.to_csv(csv_path, index=False)
    written = [csv_path]

    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    labels = [f"{r['model']}/{r['quantile_rule']}@{r['alpha']:g}" for r in rows]
    ax.bar(range(len(rows)), [r["hit_rate"] for r in rows])
    uniq_alphas = sorted({r["alpha"] for r in rows})
    for a in uniq_alphas:
        ax.axhline(a, linestyle="--", linewidth=0.8, color="gray")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("hit rate")
    ax.set_title("Exceedance rates vs nominal levels (dashed)")
    fig.tight_layout()
    fig_path = out / f"{stem}_hit_rates.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    written.append(fig_path)
    return written


def write_var_series(result: RollingResult, out_dir, stem: str = "var_series") -> list:
    """Write the daily VaR paths (long format) and an overlay figure per rule."""
    out = _ensure_dir(out_dir)
    records = []
    for (model, kind, alpha), series in sorted(result.var_series.items()):
        for i, tau in enumerate(result.targets):
            records.append(
                {
                    "target_index": int(tau),
                    "model": model,
                    "quantile_rule": kind,
                    "alpha": alpha,
                    "var_value": series[i],
                    "sigma_port": result.sigma_port[model][i],
                    "mean_port": result.mean_port[i],
                    "realized_return": result.realized[i],
                }
            )
    frame = pd.DataFrame.from_records(records)
    csv_path = out / f"{stem}.csv"
    frame.to_csv(csv_path, index=False)
    written = [csv_path]

    combos = sorted({(kind, alpha) for (_, kind, alpha) in result.var_series})
    for kind, alpha in combos:
        fig, ax = plt.subplots(figsize=(8.5, 4.5))
        ax.plot(result.targets, result.realized, linewidth=0.6, alpha=0.6, label="realized return")
        for (model, k, a), series in sorted(result.var_series.items()):
            if (k, a) == (kind, alpha):
                ax.plot(result.targets, -series, linewidth=1.0, label=f"-VaR {model}")
        ax.set_xlabel("day index")
        ax.set_ylabel("return / -VaR")
        ax.set_title(f"One-step VaR, rule={kind}, alpha={alpha:g}")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig_path = out / f"{stem}_{kind}_{alpha:g}.png"
        fig.savefig(fig_path, dpi=120)
        plt.close(fig)
        written.append(fig_path)
    return written


def write_forecast_snapshot(vol, var_rows: list, asset_ids, out_dir) -> list:
    """Write the one-step covariance forecast, its split, and the VaR table."""
    out = _ensure_dir(out_dir)
    ids = list(asset_ids)
    written = []
    for name, mat in (("sigma", vol.sigma), ("factor_part", vol.factor_part), ("idio_part", vol.idio_part)):
        path = out / f"forecast_{name}.csv"
        pd.DataFrame(mat, index=ids, columns=ids).to_csv(path)
        written.append(path)
    var_path = out / "forecast_var.csv"
    pd.DataFrame(var_rows).to_csv(var_path, index=False)
    written.append(var_path)

    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, (name, mat) in zip(
        axes, (("sigma", vol.sigma), ("factor part", vol.factor_part), ("idio part", vol.idio_part))
    ):
        im = ax.imshow(mat, cmap="RdBu_r")
        ax.set_title(name)
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig_path = out / "forecast_sigma.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    written.append(fig_path)
    return written
