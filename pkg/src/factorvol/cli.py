"""Command-line interface.

Subcommands: simulate, fit, forecast, backtest, compare. Options can come
from an INI file (--config); explicit command-line flags win over the file,
which wins over built-in defaults. Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import DataError, FactorVolError, NumericalError, UsageError
from .fgarch import FitConfig, qmle_fit
from .forecast import QuantileRule, pgarch_forecast, var_forecast
from .panel import Portfolio, ReturnPanel, demean, load_groups, load_panel, portfolio_returns, with_groups
from .rolling import RollingConfig, rolling_var_forecast
from .shrink import ThresholdSpec
from .simul import AVAILABLE_MODELS, DgpSpec, MetricTable, run_replications
from .spectral import estimate_rank, poet_fit, sample_cov

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 252
DEFAULT_REFIT_EVERY = 10
DEFAULT_ALPHAS = (0.10, 0.05, 0.02, 0.01)
DEFAULT_QUANTILES = ("normal",)
QUANTILE_KINDS = ("normal", "student_t", "empirical")
THRESHOLD_MODES = ("soft", "hard", "sector_block")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _float_list(text: str) -> list:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _str_list(text: str) -> list:
    return [tok for tok in text.replace(",", " ").split() if tok]


def _load_config(path) -> dict:
    """Flatten an INI file into one options dict (keys use underscores)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise UsageError(f"config file not found or unreadable: {path}")
    merged: dict = {}
    sections = list(parser.sections())
    if parser.defaults():
        merged.update(parser.defaults())
    for section in sections:
        for key, value in parser.items(section):
            merged[key.strip().replace("-", "_")] = value
    return {k.replace("-", "_"): v for k, v in merged.items()}


_CONV = {
    "alpha": _float_list,
    "p": _int_list,
    "t": _int_list,
    "metric": _str_list,
    "models": str,
    "quantiles": str,
    "window": int,
    "refit_every": int,
    "reps": int,
    "seed": int,
    "rank": str,
    "r_max": int,
    "c_tau": float,
    "s_p": float,
    "threshold_mode": str,
    "portfolio_size": int,
    "n_portfolios": int,
    "nu": float,
    "dq_lags": int,
    "jobs": int,
    "out_dir": str,
    "panel": str,
    "groups": str,
    "weights": str,
    "dgp_rank": int,
}


def _opt(args, config: dict, key: str, default):
    """Resolve one option with CLI > config-file > default precedence."""
    value = getattr(args, key, None)
    if value in (None, []):
        raw = config.get(key)
        if key == "t" and raw is None:
            raw = config.get("T")
        if raw is not None:
            conv = _CONV.get(key, str)
            try:
                value = conv(raw)
            except ValueError as exc:
                raise UsageError(f"bad config value for {key!r}: {raw!r}") from exc
        else:
            value = default
    return value


def _parse_rank(value) -> object:
    if value is None or value == "auto":
        return "auto"
    try:
        rank = int(value)
    except (TypeError, ValueError):
        raise UsageError(f"--rank must be an integer or 'auto', got {value!r}")
    if rank < 1:
        raise UsageError("--rank must be a positive integer")
    return rank


def _parse_models(value) -> tuple:
    if value is None:
        return ("pgarch",)
    names = tuple(_str_list(value)) if isinstance(value, str) else tuple(value)
    if not names:
        raise UsageError("at least one model is required")
    if names == ("all",):
        return AVAILABLE_MODELS
    for name in names:
        if name not in AVAILABLE_MODELS:
            raise UsageError(f"unknown model {name!r}; available: {', '.join(AVAILABLE_MODELS)}")
    return names


def _parse_quantiles(value, nu: float, alphas) -> list:
    kinds = tuple(_str_list(value)) if isinstance(value, str) else tuple(value or DEFAULT_QUANTILES)
    rules = []
    for kind in kinds:
        if kind not in QUANTILE_KINDS:
            raise UsageError(f"unknown quantile rule {kind!r}; available: {', '.join(QUANTILE_KINDS)}")
        for alpha in alphas:
            rules.append(QuantileRule(kind=kind, alpha=float(alpha), nu=nu if kind == "student_t" else None))
    return rules


def _check_alphas(alphas):
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise UsageError(f"--alpha must lie in (0, 1), got {alpha}")
    return tuple(float(a) for a in alphas)


def _threshold_spec(args, config, panel=None) -> ThresholdSpec:
    mode = _opt(args, config, "threshold_mode", "soft")
    if mode not in THRESHOLD_MODES:
        raise UsageError(f"unknown threshold mode {mode!r}; available: {', '.join(THRESHOLD_MODES)}")
    c_tau = float(_opt(args, config, "c_tau", 1.0))
    s_p = float(_opt(args, config, "s_p", 1.0))
    groups = None
    if mode == "sector_block":
        if panel is None or panel.groups is None:
            raise UsageError("threshold mode 'sector_block' requires a group sidecar (--groups)")
        groups = panel.groups
    return ThresholdSpec(c_tau=c_tau, s_p=s_p, mode=mode, groups=groups)


def _load_panel_arg(args, config) -> ReturnPanel:
    path = _opt(args, config, "panel", None)
    if path is None:
        raise UsageError("--panel is required")
    panel = load_panel(path)
    groups_path = _opt(args, config, "groups", None)
    if groups_path is not None:
        panel = with_groups(panel, load_groups(groups_path))
    return panel


def _out_dir(args, config, default: str) -> Path:
    out = Path(_opt(args, config, "out_dir", default))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI file with option defaults")
    sub.add_argument("--out-dir", dest="out_dir", help="directory for output files")
    sub.add_argument("--seed", type=int, help="random seed")
    sub.add_argument("--rank", help="number of factors, or 'auto'")
    sub.add_argument("--c-tau", dest="c_tau", type=float, help="threshold scale constant")
    sub.add_argument("--s-p", dest="s_p", type=float, help="sparsity growth constant in the threshold")
    sub.add_argument(
        "--threshold-mode",
        dest="threshold_mode",
        choices=THRESHOLD_MODES,
        help="idiosyncratic threshold rule",
    )
    sub.add_argument("--alpha", action="append", type=float, help="VaR tail level (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="factorvol", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", metavar="command")

    sim = subs.add_parser(
        "simulate",
        help="Monte Carlo study of estimation error over a (p, T) grid",
        parents=[],
    )
    _add_common(sim)
    sim.add_argument("--p", action="append", type=int, help="panel width (repeatable)")
    sim.add_argument("--T", dest="t", action="append", type=int, help="panel length (repeatable)")
    sim.add_argument("--reps", type=int, help="number of replications per cell")
    sim.add_argument("--models", help="comma-separated model names, or 'all'")
    sim.add_argument("--metric", action="append", help="error metric (repeatable)")
    sim.add_argument("--portfolio-size", dest="portfolio_size", type=int, help="random portfolio width")
    sim.add_argument("--dgp-rank", dest="dgp_rank", type=int, help="number of factors in the generator")
    sim.add_argument("--jobs", type=int, help="parallel workers (joblib)")
    sim.set_defaults(func=cmd_simulate)

    fit = subs.add_parser("fit", help="fit the factor volatility model on a full panel")
    _add_common(fit)
    fit.add_argument("--panel", help="CSV return panel (first column dates)")
    fit.add_argument("--groups", help="asset_id,group sidecar CSV")
    fit.add_argument("--r-max", dest="r_max", type=int, help="rank search upper bound")
    fit.set_defaults(func=cmd_fit)

    fc = subs.add_parser("forecast", help="one-step covariance and VaR forecast from the latest window")
    _add_common(fc)
    fc.add_argument("--panel", help="CSV return panel (first column dates)")
    fc.add_argument("--groups", help="asset_id,group sidecar CSV")
    fc.add_argument("--window", type=int, help="trailing estimation window length")
    fc.add_argument("--weights", help="portfolio weights CSV (asset_id,weight) or 'equal'")
    fc.add_argument("--quantiles", help="comma-separated quantile rules")
    fc.add_argument("--nu", type=float, help="degrees of freedom for the student_t rule")
    fc.add_argument("--r-max", dest="r_max", type=int, help="rank search upper bound")
    fc.set_defaults(func=cmd_forecast)

    bt = subs.add_parser("backtest", help="rolling out-of-sample VaR backtest")
    _add_common(bt)
    bt.add_argument("--panel", help="CSV return panel (first column dates)")
    bt.add_argument("--groups", help="asset_id,group sidecar CSV")
    bt.add_argument("--window", type=int, help="rolling window length")
    bt.add_argument("--refit-every", dest="refit_every", type=int, help="days between parameter refits")
    bt.add_argument("--models", help="comma-separated model names, or 'all'")
    bt.add_argument("--quantiles", help="comma-separated quantile rules")
    bt.add_argument("--nu", type=float, help="degrees of freedom for the student_t rule")
    bt.add_argument("--weights", help="portfolio weights CSV (asset_id,weight) or 'equal'")
    bt.add_argument("--portfolio-size", dest="portfolio_size", type=int, help="random portfolio width")
    bt.add_argument("--n-portfolios", dest="n_portfolios", type=int, help="number of random portfolios")
    bt.add_argument("--r-max", dest="r_max", type=int, help="rank search upper bound")
    bt.add_argument("--dq-lags", dest="dq_lags", type=int, help="lagged hits in the dynamic quantile test")
    bt.set_defaults(func=cmd_backtest)

    cmp_ = subs.add_parser("compare", help="Monte Carlo comparison of all models at one (p, T)")
    _add_common(cmp_)
    cmp_.add_argument("--p", action="append", type=int, help="panel width")
    cmp_.add_argument("--T", dest="t", action="append", type=int, help="panel length")
    cmp_.add_argument("--reps", type=int, help="number of replications")
    cmp_.add_argument("--models", help="comma-separated model names, or 'all'")
    cmp_.add_argument("--metric", action="append", help="error metric (repeatable)")
    cmp_.add_argument("--portfolio-size", dest="portfolio_size", type=int, help="random portfolio width")
    cmp_.add_argument("--dgp-rank", dest="dgp_rank", type=int, help="number of factors in the generator")
    cmp_.add_argument("--jobs", type=int, help="parallel workers (joblib)")
    cmp_.set_defaults(func=cmd_compare)

    return parser


def _config_for(args) -> dict:
    path = getattr(args, "config", None)
    return _load_config(path) if path else {}


def _echo_config(args, resolved: dict, out_dir: Path) -> None:
    from .report import write_manifest

    payload = {"command": args.command}
    payload.update(resolved)
    write_manifest(out_dir, payload)


def cmd_simulate(args) -> int:
    config = _config_for(args)
    ps = _opt(args, config, "p", [20])
    ts = _opt(args, config, "t", [500])
    reps = int(_opt(args, config, "reps", 50))
    seed = int(_opt(args, config, "seed", 0))
    models = _parse_models(_opt(args, config, "models", None))
    metrics = tuple(
        _opt(args, config, "metric", ["frobenius", "spectral", "max", "rel_frobenius", "theta_mae"])
    )
    alphas = _check_alphas(_opt(args, config, "alpha", (0.01,)))
    portfolio_size = _opt(args, config, "portfolio_size", None)
    dgp_rank = int(_opt(args, config, "dgp_rank", 3))
    rank_arg = _parse_rank(_opt(args, config, "rank", str(dgp_rank)))
    rank = None if rank_arg == "auto" else rank_arg
    jobs = int(_opt(args, config, "jobs", 1))
    out = _out_dir(args, config, "simulate_out")
    tspec = _threshold_spec(args, config)

    needs_port = portfolio_size is not None or any(m.startswith("port_frobenius") or m.startswith("var_mae") for m in metrics)
    psize = portfolio_size if portfolio_size is not None else (5 if needs_port else None)

    rows = []
    for p in ps:
        for T in ts:
            spec = DgpSpec(p=int(p), T=int(T), r=dgp_rank)
            table = run_replications(
                spec,
                n_reps=reps,
                models=models,
                metrics=metrics,
                seed=seed,
                portfolio_size=psize,
                alphas=alphas,
                rank=rank,
                threshold_spec=tspec,
                n_jobs=jobs,
            )
            rows.extend(table.rows)
            logger.info("simulate cell p=%d T=%d done", p, T)
    table = MetricTable(rows=tuple(rows))

    from .report import write_metric_table

    written = write_metric_table(table, out)
    _echo_config(
        args,
        {
            "p": list(ps),
            "T": list(ts),
            "reps": reps,
            "seed": seed,
            "models": list(models),
            "metrics": list(metrics),
            "alphas": list(alphas),
            "portfolio_size": psize,
            "rank": rank_arg,
            "dgp_rank": dgp_rank,
            "threshold": tspec.to_dict(),
        },
        out,
    )
    print(f"simulate: wrote {len(written)} files to {out}")
    for path in written:
        print(f"  {path}")
    return 0


def cmd_fit(args) -> int:
    config = _config_for(args)
    panel = _load_panel_arg(args, config)
    rank_arg = _parse_rank(_opt(args, config, "rank", "auto"))
    r_max = int(_opt(args, config, "r_max", 10))
    out = _out_dir(args, config, "fit_out")
    # fit never thresholds, but the shared flags still deserve validation
    _threshold_spec(args, config, panel)

    centered, mean = demean(panel)
    cov = sample_cov(centered)
    # the search bound cannot exceed p - 1, whatever the flag says
    r_eff = min(r_max, panel.n_assets - 1)
    rank = estimate_rank(cov, panel.n_periods, r_max=r_eff) if rank_arg == "auto" else int(rank_arg)
    decomp = poet_fit(centered, rank)
    theta, diag = qmle_fit(decomp.factors**2)

    import pandas as pd

    params_path = out / "fit_params.json"
    params_path.write_text(
        json.dumps(
            {
                "rank": rank,
                "theta": theta.to_dict(),
                "diagnostics": {k: v for k, v in diag.items() if k != "message"} | {"message": str(diag["message"])},
                "leading_eigenvalues": decomp.eigvals[: min(r_max, len(decomp.eigvals))].tolist(),
                "asset_mean": mean.tolist(),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    factor_cols = [f"f{i + 1}" for i in range(rank)]
    pd.DataFrame(decomp.factors, index=panel.timestamps, columns=factor_cols).to_csv(out / "factors.csv")
    pd.DataFrame(decomp.loadings, index=panel.asset_ids, columns=factor_cols).to_csv(out / "loadings.csv")

    from .fgarch import recurse_h

    h = recurse_h(theta, decomp.factors**2).h

    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    for i in range(rank):
        ax.plot(h[:, i], linewidth=0.8, label=factor_cols[i])
    ax.set_xlabel("day index")
    ax.set_ylabel("conditional factor variance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "fit_factor_variance.png", dpi=120)
    plt.close(fig)

    _echo_config(args, {"panel": str(_opt(args, config, "panel", None)), "rank": rank, "r_max": r_max}, out)
    print(f"fit: rank={rank} converged={diag['converged']} objective={diag['objective']:.6g}")
    print(f"fit: wrote fit_params.json, factors.csv, loadings.csv to {out}")
    return 0


def cmd_forecast(args) -> int:
    config = _config_for(args)
    panel = _load_panel_arg(args, config)
    window = int(_opt(args, config, "window", DEFAULT_WINDOW))
    if panel.n_periods < window:
        raise DataError(f"panel has {panel.n_periods} rows, fewer than window={window}")
    alphas = _check_alphas(_opt(args, config, "alpha", DEFAULT_ALPHAS))
    nu = float(_opt(args, config, "nu", 6.0))
    rules = _parse_quantiles(_opt(args, config, "quantiles", None), nu, alphas)
    rank_arg = _parse_rank(_opt(args, config, "rank", "auto"))
    r_max = int(_opt(args, config, "r_max", 10))
    out = _out_dir(args, config, "forecast_out")
    tspec = _threshold_spec(args, config, panel)

    tail = ReturnPanel(
        returns=panel.returns[-window:],
        asset_ids=panel.asset_ids,
        timestamps=panel.timestamps[-window:],
        groups=panel.groups,
    )
    centered, mean = demean(tail)
    cov = sample_cov(centered)
    # the search bound cannot exceed p - 1, whatever the flag says
    r_eff = min(r_max, panel.n_assets - 1)
    rank = estimate_rank(cov, window, r_max=r_eff) if rank_arg == "auto" else int(rank_arg)
    decomp = poet_fit(centered, rank)
    theta, diag = qmle_fit(decomp.factors**2)
    vol = pgarch_forecast(decomp, theta, decomp.factors**2, tspec, T=window)

    weights = _resolve_weights(_opt(args, config, "weights", "equal"), tail)
    mean_port = float(weights.weights @ mean)
    port_hist = portfolio_returns(tail, weights)

    from .fgarch import recurse_h

    h_path = recurse_h(theta, decomp.factors**2).h
    proj = decomp.loadings.T @ weights.weights
    var_path = (proj**2 * h_path).sum(axis=1) + float(weights.weights @ vol.idio_part @ weights.weights)
    std_hist = (port_hist - mean_port) / np.sqrt(np.maximum(var_path, 1e-300))

    var_rows = []
    for rule in rules:
        vf = var_forecast(vol, weights.weights, mean_port, rule, history=std_hist if rule.kind == "empirical" else None)
        var_rows.append(
            {
                "quantile_rule": rule.kind,
                "alpha": rule.alpha,
                "var_value": vf.var_value,
                "sigma_port": vf.sigma_port,
                "mean_port": vf.mean_port,
                "c_alpha": vf.c_alpha,
            }
        )

    from .report import write_forecast_snapshot

    written = write_forecast_snapshot(vol, var_rows, panel.asset_ids, out)
    _echo_config(
        args,
        {
            "panel": str(_opt(args, config, "panel", None)),
            "window": window,
            "rank": rank,
            "alphas": list(alphas),
            "quantiles": sorted({r.kind for r in rules}),
            "threshold": tspec.to_dict(),
        },
        out,
    )
    print(f"forecast: rank={rank} sigma[0,0]={vol.sigma[0, 0]:.6g}")
    for row in var_rows:
        print(
            f"  VaR[{row['quantile_rule']}, alpha={row['alpha']:g}] = {row['var_value']:.6g}"
            f" (sigma_port={row['sigma_port']:.6g})"
        )
    print(f"forecast: wrote {len(written)} files to {out}")
    return 0


def _resolve_weights(spec_value, panel: ReturnPanel) -> Portfolio:
    if spec_value in (None, "equal"):
        return Portfolio.equal(panel.n_assets)
    import pandas as pd

    frame = pd.read_csv(spec_value)
    if not {"asset_id", "weight"}.issubset(frame.columns):
        raise DataError(f"weights file {spec_value} needs columns asset_id,weight")
    lookup = dict(zip(frame["asset_id"].astype(str), frame["weight"].astype(float)))
    unknown = set(lookup) - set(panel.asset_ids)
    if unknown:
        raise DataError(f"weights reference unknown assets: {sorted(unknown)[:5]}")
    weights = np.array([lookup.get(a, 0.0) for a in panel.asset_ids])
    return Portfolio(weights=weights)


def cmd_backtest(args) -> int:
    config = _config_for(args)
    panel = _load_panel_arg(args, config)
    window = int(_opt(args, config, "window", DEFAULT_WINDOW))
    refit_every = int(_opt(args, config, "refit_every", DEFAULT_REFIT_EVERY))
    alphas = _check_alphas(_opt(args, config, "alpha", DEFAULT_ALPHAS))
    nu = float(_opt(args, config, "nu", 6.0))
    rules = _parse_quantiles(_opt(args, config, "quantiles", None), nu, alphas)
    models = _parse_models(_opt(args, config, "models", None))
    rank_arg = _parse_rank(_opt(args, config, "rank", "auto"))
    r_max = int(_opt(args, config, "r_max", 10))
    dq_lags = int(_opt(args, config, "dq_lags", 4))
    seed = int(_opt(args, config, "seed", 0))
    out = _out_dir(args, config, "backtest_out")
    tspec = _threshold_spec(args, config, panel)

    weights_arg = _opt(args, config, "weights", None)
    portfolio_size = _opt(args, config, "portfolio_size", None)
    n_portfolios = int(_opt(args, config, "n_portfolios", 1))
    portfolios = []
    if weights_arg is not None:
        portfolios.append(_resolve_weights(weights_arg, panel))
    else:
        size = int(portfolio_size) if portfolio_size is not None else min(5, panel.n_assets)
        if size > panel.n_assets:
            raise UsageError(f"--portfolio-size {size} exceeds panel width {panel.n_assets}")
        rng = np.random.default_rng(seed)
        for _ in range(n_portfolios):
            idx = np.sort(rng.choice(panel.n_assets, size=size, replace=False))
            w = np.zeros(panel.n_assets)
            w[idx] = 1.0 / size
            portfolios.append(Portfolio(weights=w))

    rcfg = RollingConfig(
        window=window,
        refit_every=refit_every,
        rank=rank_arg,
        r_max=r_max,
        threshold_spec=tspec,
    )

    from .backtest import evaluate_var_series
    from .report import write_backtest_report, write_var_series

    detail_rows = []
    agg: dict = {}
    first_result = None
    for pid, portfolio in enumerate(portfolios):
        result = rolling_var_forecast(panel, portfolio, models, rules, rcfg)
        if first_result is None:
            first_result = result
        psize = int(np.count_nonzero(portfolio.weights))
        for (model, kind, alpha), series in sorted(result.var_series.items()):
            rep = evaluate_var_series(
                result.realized, series, alpha, model=model, quantile_rule=kind, portfolio_size=psize, lags=dq_lags
            )
            detail_rows.append({"portfolio_id": pid, **{c: getattr(rep, c) for c in _REPORT_FIELDS}})
            agg.setdefault((model, kind, alpha, psize), []).append(rep)
    summary = []
    for (model, kind, alpha, psize), reps_ in sorted(agg.items()):
        summary.append(
            {
                "model": model,
                "quantile_rule": kind,
                "alpha": alpha,
                "portfolio_size": psize,
                "hit_rate": float(np.mean([r.hit_rate for r in reps_])),
                "lr_uc_p": float(np.mean([r.lr_uc_p for r in reps_])),
                "lr_cc_p": float(np.mean([r.lr_cc_p for r in reps_])),
                "dq_hit_p": float(np.mean([r.dq_hit_p for r in reps_])),
                "dq_var_p": float(np.mean([r.dq_var_p for r in reps_])),
            }
        )

    written = write_backtest_report(summary, out)
    import pandas as pd

    detail_path = out / "backtest_detail.csv"
    pd.DataFrame(detail_rows).to_csv(detail_path, index=False)
    written.append(detail_path)
    written.extend(write_var_series(first_result, out))
    _echo_config(
        args,
        {
            "panel": str(_opt(args, config, "panel", None)),
            "window": window,
            "refit_every": refit_every,
            "models": list(models),
            "alphas": list(alphas),
            "quantiles": sorted({r.kind for r in rules}),
            "rank": rank_arg,
            "n_portfolios": len(portfolios),
            "seed": seed,
            "threshold": tspec.to_dict(),
            "dq_lags": dq_lags,
        },
        out,
    )
    print(f"backtest: {len(first_result.targets)} forecasts, {len(portfolios)} portfolio(s), {len(summary)} rows")
    for row in summary:
        print(
            f"  {row['model']:>12s} {row['quantile_rule']:>9s} alpha={row['alpha']:<5g}"
            f" hit={row['hit_rate']:.4f} lr_uc_p={row['lr_uc_p']:.3f}"
        )
    print(f"backtest: wrote {len(written)} files to {out}")
    return 0


_REPORT_FIELDS = (
    "model",
    "quantile_rule",
    "alpha",
    "portfolio_size",
    "hit_rate",
    "lr_uc_p",
    "lr_cc_p",
    "dq_hit_p",
    "dq_var_p",
)


def cmd_compare(args) -> int:
    config = _config_for(args)
    ps = _opt(args, config, "p", [50])
    ts = _opt(args, config, "t", [1000])
    reps = int(_opt(args, config, "reps", 20))
    seed = int(_opt(args, config, "seed", 0))
    models_arg = _opt(args, config, "models", None)
    models = AVAILABLE_MODELS if models_arg is None else _parse_models(models_arg)
    metrics = tuple(
        _opt(args, config, "metric", ["frobenius", "spectral", "rel_frobenius", "port_frobenius", "var_mae"])
    )
    alphas = _check_alphas(_opt(args, config, "alpha", (0.01,)))
    portfolio_size = int(_opt(args, config, "portfolio_size", 5))
    dgp_rank = int(_opt(args, config, "dgp_rank", 3))
    rank_arg = _parse_rank(_opt(args, config, "rank", str(dgp_rank)))
    rank = None if rank_arg == "auto" else rank_arg
    jobs = int(_opt(args, config, "jobs", 1))
    out = _out_dir(args, config, "compare_out")
    tspec = _threshold_spec(args, config)

    spec = DgpSpec(p=int(ps[0]), T=int(ts[0]), r=dgp_rank)
    table = run_replications(
        spec,
        n_reps=reps,
        models=models,
        metrics=metrics,
        seed=seed,
        portfolio_size=portfolio_size,
        alphas=alphas,
        rank=rank,
        threshold_spec=tspec,
        n_jobs=jobs,
    )

    from .report import write_metric_table

    written = write_metric_table(table, out, stem="comparison")
    _echo_config(
        args,
        {
            "p": int(ps[0]),
            "T": int(ts[0]),
            "reps": reps,
            "seed": seed,
            "models": list(models),
            "metrics": list(metrics),
            "alphas": list(alphas),
            "portfolio_size": portfolio_size,
            "rank": rank_arg,
            "threshold": tspec.to_dict(),
        },
        out,
    )
    frame = table.to_frame()
    print(f"compare: p={ps[0]} T={ts[0]} reps={reps}")
    for metric in metrics:
        sub = frame[frame.metric == metric].sort_values("mean")
        if len(sub):
            best = sub.iloc[0]
            print(f"  best {metric}: {best['model']} (mean={best['mean']:.6g})")
    print(f"compare: wrote {len(written)} files to {out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        print("factorvol: error: a command is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"factorvol: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"factorvol: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"factorvol: numerical error: {exc}", file=sys.stderr)
        return 3
    except FactorVolError as exc:
        print(f"factorvol: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
