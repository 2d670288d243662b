"""Command line interface.

One binary with subcommands::

    ffm fpca       eigenstructure and scores of a curve panel
    ffm select     information-criterion surface and chosen (K, p)
    ffm forecast   fit and forecast curves h steps ahead
    ffm simulate   draw a synthetic curve sample
    ffm mc         replicated order-selection experiment
    ffm backtest   expanding-window forecast comparison
    ffm dns        dynamic Nelson-Siegel fit and forecast
    ffm fetch-h15  download and normalize the Treasury yield panel

Every command writes a ``manifest.json`` (config echo, seed, version)
next to its outputs and is deterministic given inputs, options, and
seed.  Exit codes: 0 ok, 2 bad configuration, 3 bad data, 4 numerical
failure, 5 network required.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from ._version import __version__
from .backtest import (DEFAULT_INITIAL_WINDOW, Dns, FfmCriterion, FfmFixed,
                       rolling_backtest)
from .core import Grid, make_grid, panel_to_sample
from .dns import DEFAULT_DECAY, dns_forecast, fit_dns
from .errors import ConfigError, DataError, NetworkError, NumericError
from .fpca import fpca
from .montecarlo import monte_carlo
from .pipeline import FfmConfig, fit_ffm, forecast
from .selection import CRITERIA, criterion_grid
from .simulate import MODELS, SimSpec, simulate

__all__ = ["RunConfig", "main", "cmd_fpca", "cmd_select", "cmd_forecast",
           "cmd_simulate", "cmd_mc", "cmd_backtest", "cmd_dns", "cmd_fetch_h15"]

DEFAULT_GRID_SIZE = 100

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_NETWORK = 5


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one command invocation."""

    command: str
    output_dir: Path
    fmt: str
    options: dict = field(default_factory=dict)

    def manifest(self, outputs: list, results: dict | None = None) -> Path:
        return io.write_manifest(self.output_dir, self.command, self.options,
                                 outputs, results)


def _parse_grid(text: str) -> Grid:
    try:
        a, b, n = text.split(",")
        return make_grid(float(a), float(b), int(n))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"--grid expects 'a,b,n' with a < b and n >= 2, got {text!r}: {exc}")


def _parse_criteria(text: str) -> tuple:
    names = tuple(name.strip() for name in text.split(",") if name.strip())
    if not names:
        raise ConfigError("--criteria must name at least one criterion")
    for name in names:
        if name not in CRITERIA:
            raise ConfigError(f"unknown criterion {name!r}; expected one of {CRITERIA}")
    return names


def _run_config(args, command: str, option_names: list) -> RunConfig:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    options = {}
    for name in option_names:
        value = getattr(args, name)
        options[name.replace("_", "-")] = str(value) if isinstance(value, Path) else value
    return RunConfig(command=command, output_dir=outdir,
                     fmt=getattr(args, "format", "csv"), options=options)


def _load_panel(path):
    if not Path(path).exists():
        raise DataError(f"input file not found: {path}")
    return io.read_panel_csv(path)


def _panel_grid(panel, grid_flag: str | None) -> Grid:
    if grid_flag:
        return _parse_grid(grid_flag)
    a, b = float(panel.maturities[0]), float(panel.maturities[-1])
    return make_grid(a, b, DEFAULT_GRID_SIZE)


def _load_sample(path, grid_flag: str | None):
    panel = _load_panel(path)
    grid = _panel_grid(panel, grid_flag)
    return panel, panel_to_sample(panel, grid)


# ---------------------------------------------------------------------------
# commands


def cmd_fpca(args) -> int:
    cfg = _run_config(args, "fpca", ["input", "grid", "kmax", "seed", "format"])
    panel, sample = _load_sample(args.input, args.grid)
    result = fpca(sample, args.kmax)
    outputs = []
    if cfg.fmt == "json":
        path = cfg.output_dir / "fpca.json"
        io.write_json(io.fpca_to_json(result), path)
        outputs.append(path)
    else:
        outputs.extend(io.write_fpca_csv(result, cfg.output_dir))
    knots = cfg.output_dir / "knots.json"
    io.write_json(
        {str(t): panel.row_knots(i).tolist() for i, t in enumerate(panel.times)}, knots
    )
    outputs.append(knots)
    results = {"rank": result.rank, "total_variance": result.total_variance()}
    outputs.append(cfg.manifest(outputs, results))
    print(f"fpca: rank {result.rank}, total variance {result.total_variance():.6g}; "
          f"wrote {len(outputs)} files to {cfg.output_dir}")
    return EXIT_OK


def cmd_select(args) -> int:
    cfg = _run_config(args, "select",
                      ["input", "grid", "criterion", "kmax", "pmax", "restricted",
                       "seed", "format"])
    _, sample = _load_sample(args.input, args.grid)
    result = fpca(sample)
    k_max = min(args.kmax, result.rank)
    grid = criterion_grid(result, k_max, args.pmax, args.criterion, args.restricted)
    rows = io.surface_rows(grid)
    if cfg.fmt == "json":
        path = cfg.output_dir / "surface.json"
        io.write_json({"cells": rows, "chosen": list(grid.chosen)}, path)
    else:
        path = cfg.output_dir / "surface.csv"
        io.write_rows_csv(rows, path)
    results = {"K": grid.chosen[0], "p": grid.chosen[1], "criterion": grid.criterion}
    manifest = cfg.manifest([path], results)
    print(f"select: {grid.criterion} chose (K, p) = {grid.chosen}; wrote {path} and {manifest}")
    return EXIT_OK


def cmd_forecast(args) -> int:
    cfg = _run_config(args, "forecast",
                      ["input", "grid", "horizon", "criterion", "kmax", "pmax",
                       "k", "p", "restricted", "seed", "format"])
    _, sample = _load_sample(args.input, args.grid)
    if (args.k is None) != (args.p is None):
        raise ConfigError("set both --k and --p to pin the orders, or neither")
    config = FfmConfig(criterion=args.criterion, k_max=args.kmax, p_max=args.pmax,
                       k=args.k, p=args.p, restricted=args.restricted)
    model = fit_ffm(sample, config)
    result = forecast(model, args.horizon)
    rows = io.forecast_rows(result)
    if cfg.fmt == "json":
        path = cfg.output_dir / "forecast.json"
        io.write_json({"rows": rows}, path)
    else:
        path = cfg.output_dir / "forecast.csv"
        io.write_rows_csv(rows, path)
    model_path = cfg.output_dir / "model.json"
    io.write_json(io.model_to_json(model), model_path)
    results = {"K": model.k, "p": model.p,
               "degenerate_dynamics": model.degenerate_dynamics}
    manifest = cfg.manifest([path, model_path], results)
    if model.degenerate_dynamics:
        print("warning: fitted dynamics are indistinguishable from noise; "
              "forecasts are close to the mean curve", file=sys.stderr)
    print(f"forecast: (K, p) = ({model.k}, {model.p}), horizons 1..{args.horizon}; "
          f"wrote {path}, {model_path}, {manifest}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _run_config(args, "simulate",
                      ["model", "T", "seed", "grid", "burn_in", "noise_scale", "format"])
    grid = _parse_grid(args.grid) if args.grid else None
    spec = SimSpec(model=args.model, n_obs=args.T, seed=args.seed, grid=grid,
                   burn_in=args.burn_in, noise_scale=args.noise_scale)
    sample = simulate(spec)
    panel = io.sample_to_panel(sample)
    if cfg.fmt == "json":
        path = cfg.output_dir / "sample.json"
        io.write_json(io.panel_to_json(panel), path)
    else:
        path = cfg.output_dir / "sample.csv"
        io.write_panel_csv(panel, path)
    manifest = cfg.manifest([path])
    print(f"simulate: {args.model}, T={args.T}, seed={args.seed}; wrote {path} and {manifest}")
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = _run_config(args, "mc",
                      ["model", "T", "reps", "kmax", "pmax", "criteria", "restricted",
                       "seed", "jobs", "format"])
    spec = SimSpec(model=args.model, n_obs=args.T, seed=args.seed)
    criteria = _parse_criteria(args.criteria)
    report = monte_carlo(spec, args.reps, args.kmax, args.pmax, criteria,
                         args.restricted, args.jobs)
    rows = report.summary_rows()
    if cfg.fmt == "json":
        path = cfg.output_dir / "mc.json"
        doc = {
            "summary": rows,
            "frequencies": {c: report.frequencies(c).tolist() for c in criteria},
        }
        io.write_json(doc, path)
    else:
        path = cfg.output_dir / "mc.csv"
        io.write_rows_csv(rows, path)
    results = {row["criterion"]: {"bias_K": row["bias_K"], "bias_p": row["bias_p"]}
               for row in rows}
    manifest = cfg.manifest([path], results)
    print(f"mc: {args.model}, T={args.T}, {args.reps} replications; "
          f"wrote {path} and {manifest}")
    return EXIT_OK


def _backtest_method(args):
    restricted = args.dynamics == "diagonal"
    if args.method == "ffm-fixed":
        if args.k is None or args.p is None:
            raise ConfigError("--method ffm-fixed requires --k and --p")
        return FfmFixed(k=args.k, p=args.p, restricted=restricted)
    if args.method == "ffm-criterion":
        return FfmCriterion(criterion=args.criterion, k_max=args.kmax,
                            p_max=args.pmax, restricted=restricted)
    if args.method == "dns":
        return Dns(decay=args.lam, diagonal=restricted)
    raise ConfigError(f"unknown method {args.method!r}")


def cmd_backtest(args) -> int:
    cfg = _run_config(args, "backtest",
                      ["input", "method", "dynamics", "horizon", "window", "criterion",
                       "kmax", "pmax", "k", "p", "lam", "seed", "format"])
    panel = _load_panel(args.input)
    method = _backtest_method(args)
    report = rolling_backtest(panel, method, h=args.horizon, initial_window=args.window)
    rows = io.backtest_rows([report])
    if cfg.fmt == "json":
        path = cfg.output_dir / "backtest.json"
        io.write_json({"summary": rows}, path)
    else:
        path = cfg.output_dir / "backtest.csv"
        io.write_rows_csv(rows, path)
    errors_path = cfg.output_dir / "errors.csv"
    io.write_rows_csv(io.backtest_error_rows(report), errors_path)
    results = {"method": report.method, "rmsfe": report.rmsfe,
               "failures": report.failures}
    manifest = cfg.manifest([path, errors_path], results)
    print(f"backtest: {report.method}, h={args.horizon}, RMSFE {report.rmsfe:.6g} "
          f"({report.failures} failed origins); wrote {path}, {errors_path}, {manifest}")
    return EXIT_OK


def cmd_dns(args) -> int:
    cfg = _run_config(args, "dns",
                      ["input", "lam", "dynamics", "horizon", "seed", "format"])
    panel = _load_panel(args.input)
    model = fit_dns(panel, args.lam, diagonal=args.dynamics == "diagonal")
    result = dns_forecast(model, panel.maturities, args.horizon)
    rows = io.forecast_rows(result)
    if cfg.fmt == "json":
        path = cfg.output_dir / "dns.json"
        io.write_json({"rows": rows}, path)
    else:
        path = cfg.output_dir / "dns.csv"
        io.write_rows_csv(rows, path)
    betas_path = cfg.output_dir / "betas.csv"
    io.write_rows_csv(io.dns_betas_rows(model), betas_path)
    manifest = cfg.manifest([path, betas_path])
    print(f"dns: decay {args.lam}, horizons 1..{args.horizon}; "
          f"wrote {path}, {betas_path}, {manifest}")
    return EXIT_OK


def cmd_fetch_h15(args) -> int:
    cfg = _run_config(args, "fetch-h15", ["url", "layout", "seed", "format"])
    text = io.fetch_h15(args.url)
    panel, dropped = io.parse_h15_csv(text)
    path = cfg.output_dir / "h15.csv"
    io.write_panel_csv(panel, path, layout=args.layout)
    results = {"rows": panel.n_rows, "dropped_rows": dropped}
    manifest = cfg.manifest([path], results)
    print(f"fetch-h15: {panel.n_rows} monthly rows ({dropped} dropped); "
          f"wrote {path} and {manifest}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(parser, *, seed_default=None):
    parser.add_argument("--output-dir", default=".", help="directory for outputs")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format")
    parser.add_argument("--seed", type=int, default=seed_default, help="random seed")


def _add_selection_flags(parser):
    parser.add_argument("--criterion", choices=CRITERIA, default="bic",
                        help="information criterion")
    parser.add_argument("--kmax", type=int, default=8, help="largest number of factors")
    parser.add_argument("--pmax", type=int, default=8, help="largest lag order")
    parser.add_argument("--restricted", action="store_true",
                        help="diagonal (own-lags) dynamics instead of a full VAR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffm",
        description="Functional factor models for curve time series",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fpca", help="eigenstructure and scores of a curve panel")
    p.add_argument("--input", required=True, help="panel CSV (wide or long)")
    p.add_argument("--grid", default=None, metavar="a,b,n",
                   help="evaluation grid (default: 100 uniform points over the maturities)")
    p.add_argument("--kmax", type=int, default=None, help="components to keep (default: all)")
    _add_common(p)
    p.set_defaults(func=cmd_fpca)

    p = sub.add_parser("select", help="criterion surface and chosen (K, p)")
    p.add_argument("--input", required=True, help="panel CSV (wide or long)")
    p.add_argument("--grid", default=None, metavar="a,b,n")
    _add_selection_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("forecast", help="fit and forecast curves")
    p.add_argument("--input", required=True, help="panel CSV (wide or long)")
    p.add_argument("--grid", default=None, metavar="a,b,n")
    p.add_argument("--horizon", type=int, default=1, help="steps ahead")
    p.add_argument("--k", type=int, default=None, help="pin the number of factors")
    p.add_argument("--p", type=int, default=None, help="pin the lag order")
    _add_selection_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("simulate", help="draw a synthetic curve sample")
    p.add_argument("--model", choices=sorted(MODELS), default="M1")
    p.add_argument("--T", type=int, default=200, help="sample length")
    p.add_argument("--grid", default=None, metavar="a,b,n",
                   help="simulation grid (default: 51 uniform points on [0,1])")
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--noise-scale", type=float, default=1.0)
    _add_common(p, seed_default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="replicated order-selection experiment")
    p.add_argument("--model", choices=sorted(MODELS), default="M1")
    p.add_argument("--T", type=int, default=200, help="sample length")
    p.add_argument("--reps", type=int, default=100, help="number of replications")
    p.add_argument("--criteria", default=",".join(CRITERIA),
                   help="comma-separated list of criteria")
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--pmax", type=int, default=8)
    p.add_argument("--restricted", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_common(p, seed_default=0)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("backtest", help="expanding-window forecast comparison")
    p.add_argument("--input", required=True, help="panel CSV (wide or long)")
    p.add_argument("--method", choices=("ffm-fixed", "ffm-criterion", "dns"),
                   required=True)
    p.add_argument("--dynamics", choices=("full", "diagonal"), default="full")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--window", type=int, default=DEFAULT_INITIAL_WINDOW,
                   help="observations in the first training window")
    p.add_argument("--k", type=int, default=None, help="factors for ffm-fixed")
    p.add_argument("--p", type=int, default=None, help="lags for ffm-fixed")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_DECAY,
                   help="decay for the dns method")
    p.add_argument("--criterion", choices=CRITERIA, default="bic")
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--pmax", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("dns", help="dynamic Nelson-Siegel fit and forecast")
    p.add_argument("--input", required=True, help="panel CSV (wide or long)")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_DECAY,
                   help="loading decay parameter")
    p.add_argument("--dynamics", choices=("full", "diagonal"), default="full")
    p.add_argument("--horizon", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_dns)

    p = sub.add_parser("fetch-h15", help="download the Treasury yield panel")
    p.add_argument("--url", default=io.H15_URL)
    p.add_argument("--layout", choices=("wide", "long"), default="wide",
                   help="layout of the written panel CSV")
    _add_common(p)
    p.set_defaults(func=cmd_fetch_h15)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
