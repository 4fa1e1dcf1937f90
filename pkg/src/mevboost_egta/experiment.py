"""Experiment configuration, suite orchestration and artifact persistence.

A suite runs one or more market scenarios end to end: build the game spec,
estimate the payoff table, solve for the stationary distribution, compute
equilibrium metrics, and persist every intermediate artifact as CSV plus a
JSON manifest. The whole suite is a pure function of (config, master_seed);
re-running it reproduces every CSV byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Union

import numpy as np
import jsonschema

from . import __version__
from .alpharank import (
    AlphaSweepResult,
    StationaryDistribution,
    build_transition_chain,
    equilibrium_summary,
    estimate_alpha_lower_bound,
    save_stationary_csv,
    save_sweep_csv,
    stationary_distribution,
    sweep_alpha,
)
from .auction import AuctionParams
from .hpt import (
    HeuristicPayoffTable,
    RoleGameSpec,
    SymmetricGameSpec,
    enumerate_profiles,
    enumerate_role_profiles,
    estimate_hpt_role,
    estimate_hpt_symmetric,
    save_hpt_csv,
)
from .metrics import SUMMARY_COLUMNS, ScenarioReport, hhi, overall_efficiency, overall_win_rates, report_row
from .signals import CalibrationConstants, calibrate_rates

logger = logging.getLogger(__name__)

GAME_KINDS = ("symmetric", "latency_roles", "orderflow_roles")

DEFAULT_LATENCY_GAPS_MS = [float(g) for g in range(0, 201, 10)]
DEFAULT_THETA_HIGHS = [round(0.4 + 0.1 * i, 1) for i in range(7)]
DEFAULT_MASTER_SEED = 10007

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "game_kinds": {
            "type": "array",
            "items": {"enum": list(GAME_KINDS)},
            "minItems": 1,
        },
        "latency_gaps_ms": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "theta_highs": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        },
        "theta_low": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "latency_low_ms": {"type": "number", "exclusiveMinimum": 0},
        "n_sims": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "alpha_mode": {
            "oneOf": [
                {"enum": ["auto", "sweep", "bound"]},
                {"type": "number", "exclusiveMinimum": 0},
            ]
        },
        "orderflow_mask_mode": {"enum": ["shared", "exclusive"]},
        "efficiency_basis": {"enum": ["end", "submission"]},
        "t_mean_s": {"type": "number", "exclusiveMinimum": 0},
        "t_sigma_s": {"type": "number", "minimum": 0},
        "population_size": {"type": ["integer", "null"], "minimum": 2},
        "out_dir": {"type": "string"},
        "workers": {"type": "integer", "minimum": 1},
        "signal": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "public_tx_count": {"type": "number", "exclusiveMinimum": 0},
                "public_tx_value_eth": {"type": "number", "exclusiveMinimum": 0},
                "public_value_share": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "private_tx_share_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "private_tx_share_max": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "theta_min": {"type": "number", "minimum": 0, "maximum": 1},
                "theta_max": {"type": "number", "minimum": 0, "maximum": 1},
                "slot_seconds": {"type": "number", "exclusiveMinimum": 0},
                "lognormal_shape_public": {"type": "number", "minimum": 0},
                "lognormal_shape_private": {"type": "number", "minimum": 0},
                "step_ms": {"type": "number", "exclusiveMinimum": 0},
                "horizon_s": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    game_kinds: list[str] = field(default_factory=lambda: list(GAME_KINDS))
    latency_gaps_ms: list[float] = field(default_factory=lambda: list(DEFAULT_LATENCY_GAPS_MS))
    theta_highs: list[float] = field(default_factory=lambda: list(DEFAULT_THETA_HIGHS))
    theta_low: float = 0.3
    latency_low_ms: float = 10.0
    n_sims: int = 1000
    master_seed: int = DEFAULT_MASTER_SEED
    alpha_mode: Union[str, float] = "auto"
    orderflow_mask_mode: str = "exclusive"
    efficiency_basis: str = "end"
    t_mean_s: float = 13.0
    t_sigma_s: float = 0.1
    population_size: Optional[int] = None
    out_dir: str = "results"
    workers: int = field(default_factory=lambda: max(1, os.cpu_count() or 1))
    signal: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build a config from an optional JSON file plus programmatic overrides.

    An empty or missing file reproduces the default market setup; unknown
    keys are rejected against the schema.
    """
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                content = fh.read().strip()
                raw = json.loads(content) if content else {}
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"invalid config: {err.message}") from err
    return ExperimentConfig(**raw)


def build_signal_config(config: ExperimentConfig):
    sig = dict(config.signal)
    gen_keys = {"lognormal_shape_public", "lognormal_shape_private", "step_ms", "horizon_s"}
    gen = {k: sig.pop(k) for k in list(sig) if k in gen_keys}
    calibration = CalibrationConstants(**sig)
    horizon = gen.get("horizon_s", max(14.0, config.t_mean_s + 6.0 * config.t_sigma_s + 0.2))
    gen["horizon_s"] = horizon
    return calibration, calibrate_rates(calibration, **gen)


def _auction_params(config: ExperimentConfig, step_ms: float) -> AuctionParams:
    return AuctionParams(
        t_mean_s=config.t_mean_s,
        t_sigma_s=config.t_sigma_s,
        step_ms=step_ms,
        n_builders=10,
    )


def build_symmetric_spec(config: ExperimentConfig) -> SymmetricGameSpec:
    calibration, signal = build_signal_config(config)
    return SymmetricGameSpec(
        signal=signal,
        auction=_auction_params(config, signal.step_ms),
        latency_ms=config.latency_low_ms,
        theta_prior=(calibration.theta_min, calibration.theta_max),
        orderflow_mode="shared",
        efficiency_basis=config.efficiency_basis,
    )


def build_latency_spec(config: ExperimentConfig, gap_ms: float) -> RoleGameSpec:
    calibration, signal = build_signal_config(config)
    return RoleGameSpec(
        role_kind="latency",
        signal=signal,
        auction=_auction_params(config, signal.step_ms),
        latency_low_ms=config.latency_low_ms,
        latency_high_ms=config.latency_low_ms + gap_ms,
        theta_prior=(calibration.theta_min, calibration.theta_max),
        orderflow_mode="shared",
        efficiency_basis=config.efficiency_basis,
    )


def build_orderflow_spec(config: ExperimentConfig, theta_high: float) -> RoleGameSpec:
    _, signal = build_signal_config(config)
    return RoleGameSpec(
        role_kind="orderflow",
        signal=signal,
        auction=_auction_params(config, signal.step_ms),
        latency_low_ms=config.latency_low_ms,
        latency_high_ms=config.latency_low_ms,
        theta_low=config.theta_low,
        theta_high=theta_high,
        orderflow_mode=config.orderflow_mask_mode,
        efficiency_basis=config.efficiency_basis,
    )


def scenario_seed(master_seed: int, kind: str, index: int) -> int:
    """Deterministic per-scenario seed so scenarios never share random streams."""
    kind_code = GAME_KINDS.index(kind)
    state = np.random.SeedSequence(master_seed, spawn_key=(kind_code, index)).generate_state(2)
    return int(state[0]) ^ (int(state[1]) << 32) & 0xFFFFFFFFFFFFFFFF


@dataclass
class ScenarioResult:
    scenario_id: str
    game_kind: str
    scenario_param: float
    report: ScenarioReport
    hpt: HeuristicPayoffTable
    distribution: StationaryDistribution
    sweep: Optional[AlphaSweepResult] = None


def _resolve_alpha(hpt: HeuristicPayoffTable,
                   mode: Union[str, float],
                   game_kind: str,
                   population_size: Optional[int]):
    """Returns (distribution, sweep_or_None)."""
    if mode == "auto":
        mode = "sweep" if game_kind == "symmetric" else "bound"
    if mode == "sweep":
        sweep = sweep_alpha(hpt, population_size=population_size)
        return sweep.final, sweep
    if mode == "bound":
        alpha = estimate_alpha_lower_bound(hpt)
    else:
        alpha = float(mode)
    chain = build_transition_chain(hpt, alpha, population_size)
    return stationary_distribution(chain), None


def run_single_scenario(config: ExperimentConfig,
                        game_kind: str,
                        index: int,
                        param: float) -> ScenarioResult:
    seed = scenario_seed(config.master_seed, game_kind, index)
    if game_kind == "symmetric":
        spec = build_symmetric_spec(config)
        profiles = enumerate_profiles(spec.n_players)
        table = estimate_hpt_symmetric(profiles, spec, config.n_sims, seed, workers=config.workers)
        scenario_id = "symmetric"
    elif game_kind == "latency_roles":
        spec = build_latency_spec(config, param)
        profiles = enumerate_role_profiles(spec.n_per_role)
        table = estimate_hpt_role(profiles, spec, config.n_sims, seed, workers=config.workers)
        scenario_id = f"latency_{int(round(param)):03d}"
    elif game_kind == "orderflow_roles":
        spec = build_orderflow_spec(config, param)
        profiles = enumerate_role_profiles(spec.n_per_role)
        table = estimate_hpt_role(profiles, spec, config.n_sims, seed, workers=config.workers)
        scenario_id = f"orderflow_{int(round(param * 100)):03d}"
    else:
        raise ConfigError(f"unknown game kind: {game_kind!r}")

    dist, sweep = _resolve_alpha(table, config.alpha_mode, game_kind, config.population_size)
    usage = equilibrium_summary(dist, table)
    if table.kind == "symmetric":
        # reuse the two-group report schema with an arbitrary half/half split
        usage_low = usage / 2.0
        usage_high = usage / 2.0
    else:
        usage_low, usage_high = usage[0], usage[1]
    w_low, w_high = overall_win_rates(dist.masses, table.group_win_rates)
    concentration = hhi(w_low, w_high)
    efficiency = overall_efficiency(dist.masses, table.efficiency_mean)
    report = ScenarioReport(
        game_kind=game_kind,
        scenario_param=param,
        strategy_usage_low=usage_low,
        strategy_usage_high=usage_high,
        w_low=w_low,
        w_high=w_high,
        hhi_fraction=concentration.fraction,
        hhi_scaled=concentration.scaled,
        efficiency=efficiency,
        alpha=dist.alpha,
        n_sims=config.n_sims,
        # the per-scenario seed: replaying this scenario needs it, the suite
        # seed is recorded in the manifest
        master_seed=seed,
        provenance={
            "scenario_seed": seed,
            "perturbed": dist.perturbed,
            "residual": dist.residual,
            "no_winner_rounds": int(table.no_winner_counts.sum()),
        },
    )
    return ScenarioResult(scenario_id, game_kind, param, report, table, dist, sweep)


@dataclass
class SuiteResult:
    results: list[ScenarioResult]
    errors: list[dict]
    timings: dict[str, float]
    config: ExperimentConfig


def _scenario_params(config: ExperimentConfig, kind: str) -> list[float]:
    if kind == "symmetric":
        return [0.0]
    if kind == "latency_roles":
        return [float(g) for g in config.latency_gaps_ms]
    return [float(t) for t in config.theta_highs]


def run_scenario_suite(config: ExperimentConfig) -> SuiteResult:
    """Run every configured scenario; failures skip that point and are recorded."""
    results: list[ScenarioResult] = []
    errors: list[dict] = []
    timings: dict[str, float] = {}
    for kind in config.game_kinds:
        if kind not in GAME_KINDS:
            raise ConfigError(f"unknown game kind: {kind!r}")
        for index, param in enumerate(_scenario_params(config, kind)):
            started = time.perf_counter()
            label = f"{kind}[{param:g}]"
            try:
                result = run_single_scenario(config, kind, index, param)
                results.append(result)
                timings[result.scenario_id] = time.perf_counter() - started
                logger.info("finished %s in %.1fs", label, timings[result.scenario_id])
            except Exception as err:  # noqa: BLE001 - isolate sweep points
                logger.exception("scenario %s failed", label)
                errors.append({"scenario": label, "error": f"{type(err).__name__}: {err}"})
    return SuiteResult(results=results, errors=errors, timings=timings, config=config)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def write_summary_csv(results: list[ScenarioResult], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for res in results:
            writer.writerow(report_row(res.report))


def export_results(suite: SuiteResult, out_dir) -> list[Path]:
    """Write summary.csv, all per-scenario artifacts and manifest.json.

    Exporting the same suite twice produces byte-identical CSV files; the
    manifest's deterministic sections (config echo, seeds, results hash) are
    likewise stable, with wall-clock timings kept in a separate section.
    """
    if not suite.results:
        raise ValueError("no scenario results to export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for res in suite.results:
        hpt_path = out / f"hpt_{res.scenario_id}.csv"
        save_hpt_csv(res.hpt, hpt_path, sidecar_path=out / f"hpt_{res.scenario_id}.json")
        written += [hpt_path, out / f"hpt_{res.scenario_id}.json"]
        stationary_path = out / f"stationary_{res.scenario_id}.csv"
        save_stationary_csv(res.hpt, res.distribution, stationary_path)
        written.append(stationary_path)
        if res.sweep is not None:
            sweep_path = out / f"sweep_{res.scenario_id}.csv"
            save_sweep_csv(res.sweep, sweep_path)
            written.append(sweep_path)

    summary_path = out / "summary.csv"
    write_summary_csv(suite.results, summary_path)
    written.append(summary_path)

    digest = hashlib.sha256()
    for p in sorted(written):
        digest.update(p.name.encode())
        digest.update(p.read_bytes())
    manifest = {
        "package_version": __version__,
        "config": suite.config.to_dict(),
        "scenarios": [
            {
                "id": res.scenario_id,
                "game_kind": res.game_kind,
                "scenario_param": res.scenario_param,
                "seed": res.report.provenance.get("scenario_seed"),
                "alpha": res.report.alpha,
                "perturbed": res.report.provenance.get("perturbed", False),
            }
            for res in suite.results
        ],
        "errors": suite.errors,
        "results_hash": digest.hexdigest(),
        "tolerances": {
            "n_sims": suite.config.n_sims,
            "mc_scale_vs_1000_sims": (1000.0 / suite.config.n_sims) ** 0.5,
        },
        "timings_s": {k: round(v, 3) for k, v in suite.timings.items()},
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(manifest_path)
    return written
