"""Batch command-line front end.

Subcommands: ``calibrate``, ``backtest-static``, ``simulate``,
``regress``.  Every run writes its artifacts plus a ``manifest.txt``
(subcommand, config snapshot, seed, input digests, output paths,
timings) into the output directory; the manifest is written last, so
its absence marks a failed run.  All files are plain text and written
atomically.

Exit codes: 0 success, 2 data error, 3 calibration failure,
4 degenerate optimization.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import intercept_curve, ols_regression, scatter_report, slope_table
from .calibrate import mle_fit, mom_fit
from .data import load_panel, panel_from_simulation
from .dynamic import TrackingConfig, dynamic_strategy
from .errors import CalibrationError, DataError, DegenerateProblemError
from .model import (
    HistoricalParams,
    LocalVol,
    MarketConfig,
    RiskNeutralParams,
    TRADING_DAYS_PER_YEAR,
)
from .simulate import (
    ContractCalendar,
    futures_panel_from_path,
    run_strategy,
    simulate_index_path,
    vxx_strategy,
)
from .static import (
    price_tracking_portfolio,
    results_table,
    return_tracking_portfolio,
)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CALIBRATION = 3
EXIT_DEGENERATE = 4

DEFAULT_SUBSET_POOL = (1, 2, 6, 7)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


class RunManifest:
    """Key-value record of one run; reruns with identical manifests
    (timings aside) produce byte-identical outputs."""

    def __init__(self, subcommand: str):
        self.subcommand = subcommand
        self.config: dict = {}
        self.inputs: dict = {}
        self.outputs: list = []
        self.started = time.perf_counter()

    def add_input(self, label: str, path: Path) -> None:
        self.inputs[label] = _sha256(path)

    def write(self, out_dir: Path) -> None:
        lines = [
            f"subcommand={self.subcommand}",
            f"version={__version__}",
        ]
        lines += [f"config.{k}={v}" for k, v in sorted(self.config.items())]
        lines += [f"input.{k}.sha256={v}" for k, v in sorted(self.inputs.items())]
        lines += [f"output.{i}={p}" for i, p in enumerate(self.outputs)]
        lines.append(f"elapsed_seconds={time.perf_counter() - self.started:.3f}")
        _write_atomic(out_dir / "manifest.txt", "\n".join(lines) + "\n")


def _emit(manifest: RunManifest, out_dir: Path, name: str, text: str) -> None:
    _write_atomic(out_dir / name, text)
    manifest.outputs.append(name)


def _parse_window(text):
    if text is None:
        return None
    try:
        start, end = text.split(":")
        return start, end
    except ValueError:
        raise DataError(f"--window must be START:END, got {text!r}") from None


def write_params_file(
    path: Path, hist: HistoricalParams, rn: RiskNeutralParams, diagnostics: dict
) -> None:
    lines = [
        f"mu={hist.mu!r}",
        f"theta={hist.theta!r}",
        f"sigma={hist.sigma!r}",
        f"mu_tilde={rn.mu_tilde!r}",
        f"theta_tilde={rn.theta_tilde!r}",
    ]
    lines += [f"{k}={v}" for k, v in diagnostics.items()]
    _write_atomic(path, "\n".join(lines) + "\n")


def read_params_file(path) -> tuple:
    """Parse a calibrate-emitted parameter file into (hist, rn, extras)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"parameter file {path} not found")
    kv = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, v = line.split("=", 1)
        kv[k] = v
    try:
        hist = HistoricalParams(
            mu=float(kv["mu"]), theta=float(kv["theta"]), sigma=float(kv["sigma"])
        )
        rn = RiskNeutralParams(
            mu_tilde=float(kv["mu_tilde"]), theta_tilde=float(kv["theta_tilde"])
        )
    except KeyError as missing:
        raise DataError(f"parameter file {path} missing key {missing}") from None
    extras = {
        k: v
        for k, v in kv.items()
        if k not in ("mu", "theta", "sigma", "mu_tilde", "theta_tilde")
    }
    return hist, rn, extras


def read_scenario_config(path) -> dict:
    """Plain-text key=value scenario file for the simulate subcommand."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"scenario config {path} not found")
    cfg = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, v = line.split("=", 1)
        cfg[k.strip()] = v.strip()
    return cfg


def cmd_calibrate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("calibrate")
    window = _parse_window(args.window)
    manifest.config.update(
        {"data_dir": args.data_dir, "window": args.window or "all"}
    )
    data_dir = Path(args.data_dir)
    for name in ("spot.csv", "futures.csv", "rates.csv"):
        p = data_dir / name
        if p.exists():
            manifest.add_input(name, p)
    panel = load_panel(data_dir, window=window, n_ranks=args.n_ranks)
    mle = mle_fit(panel.spot, dt=1.0 / TRADING_DAYS_PER_YEAR)
    mom = mom_fit(panel.observations())
    diagnostics = {
        "mle_avg_loglik": repr(mle.avg_loglik),
        "mle_iterations": mle.iterations,
        "mle_converged": str(mle.converged).lower(),
        "mle_at_bound": str(mle.at_bound).lower(),
        "mom_loss": repr(mom.loss),
        "n_days": panel.n_days,
        "n_dropped": panel.n_dropped,
    }
    write_params_file(out_dir / "params.txt", mle.params, mom.params, diagnostics)
    manifest.outputs.append("params.txt")
    if not mle.converged:
        manifest.config["warning"] = "mle_not_converged"
    manifest.write(out_dir)
    print(
        f"calibrated: mu={mle.params.mu:.4f} theta={mle.params.theta:.4f} "
        f"sigma={mle.params.sigma:.4f} mu_tilde={mom.params.mu_tilde:.4f} "
        f"theta_tilde={mom.params.theta_tilde:.4f}"
    )
    return EXIT_CALIBRATION if mle.at_bound else EXIT_OK


def _parse_subsets(text):
    if not text:
        pool = DEFAULT_SUBSET_POOL
        subsets = []
        for r in range(1, len(pool) + 1):
            subsets.extend(itertools.combinations(pool, r))
        return subsets
    return [tuple(int(r) for r in part.split(",")) for part in text.split(";")]


def cmd_backtest_static(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("backtest-static")
    window = _parse_window(args.window)
    manifest.config.update(
        {
            "data_dir": args.data_dir,
            "window": args.window or "all",
            "split": args.split,
            "mode": args.mode,
            "subsets": args.subsets or "default-15",
        }
    )
    data_dir = Path(args.data_dir)
    for name in ("spot.csv", "futures.csv", "rates.csv"):
        p = data_dir / name
        if p.exists():
            manifest.add_input(name, p)
    panel = load_panel(data_dir, window=window, n_ranks=args.n_ranks)
    boundary = args.split
    if np.issubdtype(panel.dates.dtype, np.integer):
        boundary = int(boundary)
    fit = (
        price_tracking_portfolio if args.mode == "price" else return_tracking_portfolio
    )
    results = {}
    n_failed = 0
    for subset in _parse_subsets(args.subsets):
        label = ",".join(f"{r}-m" for r in subset)
        try:
            results[label] = fit(panel, subset, boundary)
        except (DegenerateProblemError, DataError, ValueError) as exc:
            results[label] = str(exc)
            n_failed += 1
            print(f"subset {label} failed: {exc}", file=sys.stderr)
    name = f"static_{args.mode}.tsv"
    _emit(manifest, out_dir, name, results_table(results))
    manifest.config["n_failed_subsets"] = n_failed
    manifest.write(out_dir)
    print(f"fitted {len(results) - n_failed}/{len(results)} subsets -> {out_dir / name}")
    return EXIT_OK


def _scenario_label(mult: float) -> str:
    return f"s0_{mult:g}x".replace(".", "p")


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("simulate")
    cfg = {}
    if args.scenario:
        cfg = read_scenario_config(args.scenario)
        manifest.add_input("scenario", Path(args.scenario))
    hist, rn, _ = read_params_file(args.params)
    manifest.add_input("params", Path(args.params))
    beta = args.beta if args.beta is not None else float(cfg.get("beta", 1.0))
    cycles = args.cycles if args.cycles is not None else int(cfg.get("cycles", 3))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 1))
    r = float(cfg.get("r", 0.01))
    i1, i2 = (
        tuple(int(v) for v in args.contracts.split(","))
        if args.contracts
        else tuple(int(v) for v in cfg.get("contracts", "1,2").split(","))
    )
    mults = (
        tuple(float(v) for v in cfg["s0_multipliers"].split(","))
        if "s0_multipliers" in cfg
        else (1.0, 1.0 / 3.0, 3.0)
    )
    manifest.config.update(
        {
            "beta": beta,
            "cycles": cycles,
            "seed": seed,
            "r": r,
            "contracts": f"{i1},{i2}",
            "s0_multipliers": ",".join(f"{m:g}" for m in mults),
            "params": args.params,
        }
    )

    mkt = MarketConfig(r=r)
    g = LocalVol.square_root(hist.sigma)
    tracking = TrackingConfig(beta=beta, i1=i1, i2=i2)
    n_days = cycles * mkt.days_per_month
    cal = ContractCalendar.monthly(cycles + 1, mkt.days_per_month, mkt.dt)
    children = np.random.SeedSequence(seed).spawn(len(mults))
    for mult, child in zip(mults, children):
        s0 = mult * hist.theta
        path = simulate_index_path(hist, g, s0, n_days, child)
        panel = futures_panel_from_path(path, cal, rn)
        dyn = run_strategy(panel, dynamic_strategy(tracking, cal, hist, rn, g, mkt), 100.0, mkt)
        vxx = run_strategy(panel, vxx_strategy, 100.0, mkt)
        label = _scenario_label(mult)
        index_norm = 100.0 * path.values / path.values[0]
        lines = ["day\tindex\tvxx\tdynamic"]
        for j in range(panel.n_days):
            lines.append(
                f"{j}\t{index_norm[j]!r}\t{vxx.wealth[j]!r}\t{dyn.wealth[j]!r}"
            )
        _emit(manifest, out_dir, f"wealth_{label}.tsv", "\n".join(lines) + "\n")

        lines = ["day\tdynamic_w1\tvxx_w1"]
        for j in range(panel.n_days - 1):
            lines.append(f"{j}\t{dyn.weights[j][0]!r}\t{vxx.weights[j][0]!r}")
        _emit(manifest, out_dir, f"weights_{label}.tsv", "\n".join(lines) + "\n")

        idx_ret = path.values[1:] / path.values[:-1] - 1.0
        rows = ["portfolio\tslope\tslope_se\tintercept\tintercept_se\tr2\tp_slope_eq_1\tmax_abs_weight"]
        for name, port in (("dynamic", dyn), ("vxx", vxx)):
            rep = scatter_report(port.returns, idx_ret)
            reg = rep.regression
            max_w = max(float(np.max(np.abs(w))) for w in port.weights)
            rows.append(
                f"{name}\t{reg.slope:.6f}\t{reg.slope_se:.3e}\t{reg.intercept:.3e}"
                f"\t{reg.intercept_se:.3e}\t{reg.r2:.6f}\t{rep.slope_one_p:.3e}"
                f"\t{max_w:.4f}"
            )
        _emit(manifest, out_dir, f"scatter_{label}.tsv", "\n".join(rows) + "\n")

        pairs = ["index_return\tportfolio_return"]
        pairs += [f"{x!r}\t{y!r}" for x, y in zip(idx_ret, dyn.returns)]
        _emit(manifest, out_dir, f"scatter_points_{label}.tsv", "\n".join(pairs) + "\n")
    manifest.write(out_dir)
    print(f"simulated {len(mults)} scenarios over {cycles} cycles -> {out_dir}")
    return EXIT_OK


def cmd_regress(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("regress")
    window = _parse_window(args.window)
    manifest.config.update(
        {
            "data_dir": args.data_dir,
            "window": args.window or "all",
            "horizons": args.horizons,
            "ranks": args.ranks,
        }
    )
    data_dir = Path(args.data_dir)
    for name in ("spot.csv", "futures.csv", "rates.csv"):
        p = data_dir / name
        if p.exists():
            manifest.add_input(name, p)
    panel = load_panel(data_dir, window=window, n_ranks=args.n_ranks)
    ranks = tuple(int(v) for v in args.ranks.split(","))
    horizons = tuple(int(v) for v in args.horizons.split(","))

    from .static import build_rolled_series  # local import keeps module load light

    lines = ["futures\tslope\tintercept\tslope_se\tintercept_se\tr2\trmse\tn"]
    for rank in ranks:
        rolled = build_rolled_series(panel, rank).values
        x = panel.spot[1:] / panel.spot[:-1] - 1.0
        y = rolled[1:] / rolled[:-1] - 1.0
        res = ols_regression(x, y)
        lines.append(
            f"{rank}-m\t{res.slope:.4f}\t{res.intercept:.3e}\t{res.slope_se:.3e}"
            f"\t{res.intercept_se:.3e}\t{res.r2:.4f}\t{res.rmse:.4f}\t{res.n}"
        )
    _emit(manifest, out_dir, "one_day_regressions.tsv", "\n".join(lines) + "\n")

    table = slope_table(panel, horizons, ranks)
    _emit(manifest, out_dir, "holding_period_table.tsv", table.to_text())

    for rank in ranks[: min(len(ranks), 3)]:
        curve = intercept_curve(panel, rank, range(1, args.max_horizon + 1))
        lines = ["horizon\tintercept\tintercept_se"]
        lines += [
            f"{h}\t{a!r}\t{s!r}"
            for h, a, s in zip(curve.horizons, curve.intercepts, curve.std_errors)
        ]
        _emit(manifest, out_dir, f"intercepts_{rank}m.tsv", "\n".join(lines) + "\n")

    rolled = build_rolled_series(panel, ranks[0]).values
    x = panel.spot[1:] / panel.spot[:-1] - 1.0
    y = rolled[1:] / rolled[:-1] - 1.0
    res = ols_regression(x, y)
    lines = ["spot_return\tfutures_return\tfit"]
    lines += [
        f"{xi!r}\t{yi!r}\t{res.intercept + res.slope * xi!r}" for xi, yi in zip(x, y)
    ]
    _emit(manifest, out_dir, f"scatter_{ranks[0]}m_1d.tsv", "\n".join(lines) + "\n")
    manifest.write(out_dir)
    print(f"regression tables -> {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vixtrack",
        description="Calibrate a mean-reverting volatility-index model and "
        "build/evaluate index-tracking futures portfolios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out-dir", required=True, help="run output directory")

    def add_data(p):
        p.add_argument("--data-dir", required=True, help="directory of quote files")
        p.add_argument("--window", default=None, help="START:END inclusive date range")
        p.add_argument("--n-ranks", type=int, default=7, help="front contracts required per day")

    p = sub.add_parser("calibrate", help="fit model parameters from a data panel")
    add_data(p)
    add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("backtest-static", help="constrained least-squares tracking portfolios")
    add_data(p)
    add_common(p)
    p.add_argument("--mode", choices=("price", "return"), default="price")
    p.add_argument("--split", required=True, help="first out-of-sample date")
    p.add_argument("--subsets", default=None, help="e.g. '1;1,2;2,6,7' (default: all 15 of {1,2,6,7})")
    p.set_defaults(func=cmd_backtest_static)

    p = sub.add_parser("simulate", help="simulate index paths and run tracking strategies")
    p.add_argument("--params", required=True, help="parameter file from calibrate")
    p.add_argument("--scenario", default=None, help="plain-text scenario config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--contracts", default=None, help="maturity ranks, e.g. 1,2")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("regress", help="return-dependency regression tables")
    add_data(p)
    add_common(p)
    p.add_argument("--horizons", default="1,5,10,15", help="holding periods in days")
    p.add_argument("--ranks", default="1,2,3,4,5,6,7", help="maturity ranks")
    p.add_argument("--max-horizon", type=int, default=30, help="intercept-curve range")
    p.set_defaults(func=cmd_regress)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateProblemError as exc:
        print(f"degenerate optimization: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (DataError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
