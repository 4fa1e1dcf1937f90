"""Equilibrium-level market metrics: group win rates, concentration, efficiency.

Per-profile statistics from the payoff table are averaged under the
stationary distribution's masses to characterize the market at equilibrium.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class HHIResult(NamedTuple):
    """Concentration index on both conventions: squared-share fraction and the
    0-10000 scale used for regulatory-style thresholds."""

    fraction: float
    scaled: float


def overall_win_rates(masses: np.ndarray, per_profile_group_win_rates: np.ndarray) -> tuple[float, float]:
    """Mass-weighted group win rates (low group, high group)."""
    masses = np.asarray(masses, dtype=float)
    rates = np.asarray(per_profile_group_win_rates, dtype=float)
    if rates.ndim != 2 or rates.shape[1] != 2:
        raise ValueError("per-profile group win rates must have shape (K, 2)")
    if masses.shape[0] != rates.shape[0]:
        raise ValueError("masses and per-profile win rates are misaligned")
    w = masses @ rates
    return float(w[0]), float(w[1])


def hhi(w_low: float, w_high: float, group_size: int = 5) -> HHIResult:
    """Concentration from group win rates, shares spread evenly within groups.

    Each group member holds w_group / group_size of the market, so the index
    is (w_low^2 + w_high^2) / group_size.
    """
    if not 0.0 <= w_low <= 1.0 or not 0.0 <= w_high <= 1.0:
        raise ValueError("win rates must lie in [0, 1]")
    fraction = (w_low * w_low + w_high * w_high) / group_size
    return HHIResult(fraction=fraction, scaled=fraction * 1e4)


def overall_efficiency(masses: np.ndarray, per_profile_efficiency: np.ndarray) -> float:
    """Mass-weighted mean of per-profile average auction efficiency."""
    masses = np.asarray(masses, dtype=float)
    eff = np.asarray(per_profile_efficiency, dtype=float)
    if masses.shape != eff.shape:
        raise ValueError("masses and per-profile efficiency are misaligned")
    return float(masses @ eff)


@dataclass
class ScenarioReport:
    """One market scenario's equilibrium summary row."""

    game_kind: str
    scenario_param: float  # latency gap in ms, or the high group's access probability
    strategy_usage_low: np.ndarray  # (3,) expected player counts per style
    strategy_usage_high: np.ndarray
    w_low: float
    w_high: float
    hhi_fraction: float
    hhi_scaled: float
    efficiency: float
    alpha: float
    n_sims: int
    master_seed: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.w_low + self.w_high > 1.0 + 1e-9:
            raise ValueError("group win rates cannot sum past 1")
        if not 0.0 <= self.efficiency <= 1.0 + 1e-9:
            raise ValueError("efficiency must lie in [0, 1]")

    @property
    def aggressive_usage_low(self) -> float:
        return float(self.strategy_usage_low[2])

    @property
    def aggressive_usage_high(self) -> float:
        return float(self.strategy_usage_high[2])


SUMMARY_COLUMNS = [
    "game_kind",
    "scenario_param",
    "avg_conservative_low",
    "avg_moderate_low",
    "avg_aggressive_low",
    "avg_conservative_high",
    "avg_moderate_high",
    "avg_aggressive_high",
    "w_low",
    "w_high",
    "hhi_scaled",
    "efficiency",
    "alpha",
    "n_sims",
    "master_seed",
]


def report_row(report: ScenarioReport) -> list:
    row: list = [report.game_kind, repr(float(report.scenario_param))]
    row += [repr(float(x)) for x in report.strategy_usage_low]
    row += [repr(float(x)) for x in report.strategy_usage_high]
    row += [
        repr(float(report.w_low)),
        repr(float(report.w_high)),
        repr(float(report.hhi_scaled)),
        repr(float(report.efficiency)),
        repr(float(report.alpha)),
        report.n_sims,
        report.master_seed,
    ]
    return row
