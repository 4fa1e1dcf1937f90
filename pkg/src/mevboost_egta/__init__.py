"""MEV-Boost auction meta-game: agent-based simulation + EGTA solving."""

__version__ = "0.1.0"

from .signals import (
    CalibrationConstants,
    OrderflowEvent,
    SignalConfig,
    SignalTrace,
    calibrate_rates,
    generate_signal_trace,
)
from .auction import (
    AuctionOutcome,
    AuctionParams,
    BuilderSpec,
    MetaStrategy,
    compute_bid,
    draw_meta_fraction,
    run_auction,
)
from .hpt import (
    HeuristicPayoffTable,
    Profile,
    RoleGameSpec,
    RoleProfile,
    SymmetricGameSpec,
    enumerate_profiles,
    enumerate_role_profiles,
    estimate_hpt_role,
    estimate_hpt_symmetric,
)
from .alpharank import (
    StationaryDistribution,
    TransitionChain,
    build_transition_chain,
    equilibrium_summary,
    estimate_alpha_lower_bound,
    stationary_distribution,
    sweep_alpha,
    switch_rate,
)
from .metrics import HHIResult, ScenarioReport, hhi, overall_efficiency, overall_win_rates
from .experiment import ExperimentConfig, export_results, load_config, run_scenario_suite

__all__ = [
    "__version__",
    "CalibrationConstants",
    "SignalConfig",
    "SignalTrace",
    "OrderflowEvent",
    "calibrate_rates",
    "generate_signal_trace",
    "MetaStrategy",
    "BuilderSpec",
    "AuctionParams",
    "AuctionOutcome",
    "draw_meta_fraction",
    "compute_bid",
    "run_auction",
    "Profile",
    "RoleProfile",
    "SymmetricGameSpec",
    "RoleGameSpec",
    "HeuristicPayoffTable",
    "enumerate_profiles",
    "enumerate_role_profiles",
    "estimate_hpt_symmetric",
    "estimate_hpt_role",
    "switch_rate",
    "TransitionChain",
    "build_transition_chain",
    "StationaryDistribution",
    "stationary_distribution",
    "sweep_alpha",
    "estimate_alpha_lower_bound",
    "equilibrium_summary",
    "HHIResult",
    "hhi",
    "overall_win_rates",
    "overall_efficiency",
    "ScenarioReport",
    "ExperimentConfig",
    "load_config",
    "run_scenario_suite",
    "export_results",
]
