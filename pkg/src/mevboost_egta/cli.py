"""Command-line entry points: calibrate, hpt, solve, scenario, report.

Each subcommand is composable through file artifacts: ``hpt`` writes a payoff
table CSV that ``solve`` consumes, ``scenario`` chains everything, and
``report`` rebuilds summary.csv from persisted artifacts.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .alpharank import save_stationary_csv, save_sweep_csv
from .experiment import (
    ConfigError,
    ExperimentConfig,
    GAME_KINDS,
    build_latency_spec,
    build_orderflow_spec,
    build_signal_config,
    build_symmetric_spec,
    export_results,
    load_config,
    run_scenario_suite,
    run_single_scenario,
    scenario_seed,
    _resolve_alpha,
)
from .hpt import (
    enumerate_profiles,
    enumerate_role_profiles,
    estimate_hpt_role,
    estimate_hpt_symmetric,
    load_hpt_csv,
    save_hpt_csv,
)
from .metrics import ScenarioReport, hhi, overall_efficiency, overall_win_rates
from .alpharank import equilibrium_summary

logger = logging.getLogger(__name__)

_KIND_ALIASES = {
    "symmetric": "symmetric",
    "latency": "latency_roles",
    "latency_roles": "latency_roles",
    "orderflow": "orderflow_roles",
    "orderflow_roles": "orderflow_roles",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file (empty file = defaults)")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--sims", type=int, default=None, help="simulation rounds per profile")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=None, help="parallel worker count")
    parser.add_argument("--alpha", default=None, help="alpha mode: sweep, bound, or a numeric value")


def _parse_alpha(value):
    if value is None:
        return None
    if value in ("sweep", "bound", "auto"):
        return value
    try:
        return float(value)
    except ValueError as err:
        raise ConfigError(f"--alpha must be 'sweep', 'bound' or a number, got {value!r}") from err


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        "master_seed": args.seed,
        "n_sims": args.sims,
        "workers": args.workers,
        "alpha_mode": _parse_alpha(getattr(args, "alpha", None)),
    }
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = str(args.out)
    return load_config(args.config, overrides)


def _cmd_calibrate(args) -> int:
    config = _config_from_args(args)
    _, signal = build_signal_config(config)
    payload = dataclasses.asdict(signal)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "signal_config.json").write_text(text + "\n")
        print(args.out / "signal_config.json")
    else:
        print(text)
    return 0


def _cmd_hpt(args) -> int:
    config = _config_from_args(args)
    kind = _KIND_ALIASES[args.game]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = config.master_seed if args.seed is not None else scenario_seed(config.master_seed, kind, args.index)
    if kind == "symmetric":
        spec = build_symmetric_spec(config)
        table = estimate_hpt_symmetric(
            enumerate_profiles(spec.n_players), spec, config.n_sims, seed, workers=config.workers
        )
        scenario_id = "symmetric"
    elif kind == "latency_roles":
        spec = build_latency_spec(config, args.param)
        table = estimate_hpt_role(
            enumerate_role_profiles(spec.n_per_role), spec, config.n_sims, seed, workers=config.workers
        )
        scenario_id = f"latency_{int(round(args.param)):03d}"
    else:
        spec = build_orderflow_spec(config, args.param)
        table = estimate_hpt_role(
            enumerate_role_profiles(spec.n_per_role), spec, config.n_sims, seed, workers=config.workers
        )
        scenario_id = f"orderflow_{int(round(args.param * 100)):03d}"
    hpt_path = out / f"hpt_{scenario_id}.csv"
    save_hpt_csv(table, hpt_path, sidecar_path=out / f"hpt_{scenario_id}.json")
    print(hpt_path)
    return 0


def _cmd_solve(args) -> int:
    table = load_hpt_csv(args.hpt, sidecar_path=args.sidecar)
    mode = _parse_alpha(args.alpha) or "auto"
    game_kind = "symmetric" if table.kind == "symmetric" else "latency_roles"
    dist, sweep = _resolve_alpha(table, mode, game_kind, args.population)
    out = args.out or Path(args.hpt).parent
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.hpt).stem.removeprefix("hpt_")
    stationary_path = out / f"stationary_{stem}.csv"
    save_stationary_csv(table, dist, stationary_path)
    print(stationary_path)
    if sweep is not None:
        sweep_path = out / f"sweep_{stem}.csv"
        save_sweep_csv(sweep, sweep_path)
        print(sweep_path)
    return 0


def _cmd_scenario(args) -> int:
    config = _config_from_args(args)
    if args.game != "all":
        config = dataclasses.replace(config, game_kinds=[_KIND_ALIASES[args.game]])
    suite = run_scenario_suite(config)
    if not suite.results:
        logger.error("every scenario failed: %s", suite.errors)
        return 2
    export_results(suite, config.out_dir)
    print(Path(config.out_dir) / "summary.csv")
    return 0 if not suite.errors else 2


def _load_stationary(path: Path):
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = list(reader)
    masses = np.zeros(len(rows))
    alpha = 0.0
    for row in rows:
        masses[int(row[0])] = float(row[2])
        alpha = float(row[3])
    return masses, alpha


def _cmd_report(args) -> int:
    from .alpharank import StationaryDistribution
    from .experiment import SuiteResult, ScenarioResult, write_summary_csv

    directory = Path(args.dir)
    hpt_paths = sorted(directory.glob("hpt_*.csv"))
    if not hpt_paths:
        logger.error("no hpt_*.csv artifacts under %s", directory)
        return 1
    results = []
    for hpt_path in hpt_paths:
        scenario_id = hpt_path.stem.removeprefix("hpt_")
        sidecar = hpt_path.with_suffix(".json")
        table = load_hpt_csv(hpt_path, sidecar_path=sidecar if sidecar.exists() else None)
        stationary_path = directory / f"stationary_{scenario_id}.csv"
        if not stationary_path.exists():
            logger.warning("skipping %s: no stationary distribution", scenario_id)
            continue
        masses, alpha = _load_stationary(stationary_path)
        dist = StationaryDistribution(masses=masses, alpha=alpha, residual=0.0)
        spec_meta = table.game_meta
        if table.kind == "symmetric":
            game_kind, param = "symmetric", 0.0
        elif table.role_kind == "latency":
            game_kind = "latency_roles"
            param = float(spec_meta.get("latency_high_ms", 0.0)) - float(spec_meta.get("latency_low_ms", 0.0))
        else:
            game_kind = "orderflow_roles"
            param = float(spec_meta.get("theta_high", 0.0))
        usage = equilibrium_summary(dist, table)
        if table.kind == "symmetric":
            usage_low = usage / 2.0
            usage_high = usage / 2.0
        else:
            usage_low, usage_high = usage[0], usage[1]
        w_low, w_high = overall_win_rates(masses, table.group_win_rates)
        concentration = hhi(w_low, w_high)
        report = ScenarioReport(
            game_kind=game_kind,
            scenario_param=param,
            strategy_usage_low=usage_low,
            strategy_usage_high=usage_high,
            w_low=w_low,
            w_high=w_high,
            hhi_fraction=concentration.fraction,
            hhi_scaled=concentration.scaled,
            efficiency=overall_efficiency(masses, table.efficiency_mean),
            alpha=alpha,
            n_sims=table.n_sims,
            master_seed=table.master_seed,
        )
        results.append(ScenarioResult(scenario_id, game_kind, param, report, table, dist))
    if not results:
        return 1
    out = directory / "summary.csv"
    write_summary_csv(results, out)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mevboost-egta",
                                     description="MEV-Boost auction meta-game simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="derive signal rates from market constants")
    _add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("hpt", help="estimate one scenario's heuristic payoff table")
    _add_common(p)
    p.add_argument("--game", choices=sorted(_KIND_ALIASES), required=True)
    p.add_argument("--param", type=float, default=0.0,
                   help="latency gap in ms, or high-group access probability")
    p.add_argument("--index", type=int, default=0, help="scenario index for seed derivation")
    p.set_defaults(func=_cmd_hpt)

    p = sub.add_parser("solve", help="rank profiles from a payoff table CSV")
    p.add_argument("--hpt", type=Path, required=True)
    p.add_argument("--sidecar", type=Path, default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("scenario", help="run full scenario suites end to end")
    _add_common(p)
    p.add_argument("--game", choices=sorted(_KIND_ALIASES) + ["all"], default="all")
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("report", help="rebuild summary.csv from persisted artifacts")
    p.add_argument("--dir", type=Path, required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        logger.error("%s", err)
        return 1
    except Exception as err:  # noqa: BLE001 - CLI boundary
        logger.exception("command failed: %s", err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
