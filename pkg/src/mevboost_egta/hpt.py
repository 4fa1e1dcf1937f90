"""Heuristic payoff table estimation for the builder meta-game.

Strategy profiles are multisets of bidding styles (anonymous players), or a
pair of multisets when players split into two roles (latency tiers or
orderflow tiers). Each profile's payoffs, win rates and efficiency are
averaged over seeded Monte Carlo auction rounds; per-(profile, round) seeds
are derived from the master seed so any single cell can be replayed bit-exactly
regardless of execution order.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from itertools import combinations_with_replacement, product
from math import comb
from typing import Literal, Optional, Sequence, Union

import numpy as np

from .auction import (
    AuctionParams,
    BuilderSpec,
    MetaStrategy,
    N_STRATEGIES,
    STRATEGIES,
    run_auction,
)
from .signals import SignalConfig, calibrate_rates, generate_signal_trace

STRATEGY_NAMES = ("conservative", "moderate", "aggressive")
ROLE_NAMES = ("low", "high")


@dataclass(frozen=True)
class Profile:
    """How many players use each bidding style; one row of the count matrix."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError("profile counts must be non-negative")

    @property
    def n_players(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class RoleProfile:
    """Per-role style counts for the two-role games."""

    low: tuple[int, ...]
    high: tuple[int, ...]

    @property
    def n_per_role(self) -> int:
        return sum(self.low)


def enumerate_profiles(n_players: int, n_strategies: int = N_STRATEGIES) -> list[Profile]:
    """All style multisets in deterministic lexicographic order.

    The head element puts every player on the first style; the length is the
    stars-and-bars count C(n_players + n_strategies - 1, n_players).
    """
    if n_players < 1 or n_strategies < 1:
        raise ValueError("need at least one player and one strategy")
    profiles = []
    for combo in combinations_with_replacement(range(n_strategies), n_players):
        counts = [0] * n_strategies
        for s in combo:
            counts[s] += 1
        profiles.append(Profile(tuple(counts)))
    assert len(profiles) == comb(n_players + n_strategies - 1, n_players)
    return profiles


def enumerate_role_profiles(n_per_role: int, n_strategies: int = N_STRATEGIES) -> list[RoleProfile]:
    """Cartesian product of the per-role enumerations, low role outermost."""
    per_role = [p.counts for p in enumerate_profiles(n_per_role, n_strategies)]
    return [RoleProfile(low, high) for low, high in product(per_role, per_role)]


@dataclass(frozen=True)
class SymmetricGameSpec:
    """All builders share one latency; access probabilities are drawn per round."""

    signal: SignalConfig = field(default_factory=calibrate_rates)
    auction: AuctionParams = field(default_factory=AuctionParams)
    latency_ms: float = 10.0
    theta_prior: tuple[float, float] = (0.3, 1.0)
    orderflow_mode: str = "shared"
    efficiency_basis: str = "end"  # divide by the total signal at T, or at t_w

    @property
    def n_players(self) -> int:
        return self.auction.n_builders


RoleKind = Literal["latency", "orderflow"]


@dataclass(frozen=True)
class RoleGameSpec:
    """Two five-player roles differing in latency or in orderflow access."""

    role_kind: RoleKind
    signal: SignalConfig = field(default_factory=calibrate_rates)
    auction: AuctionParams = field(default_factory=AuctionParams)
    n_per_role: int = 5
    latency_low_ms: float = 10.0
    latency_high_ms: float = 10.0
    theta_prior: tuple[float, float] = (0.3, 1.0)  # latency game: drawn for everyone
    theta_low: float = 0.3  # orderflow game: fixed per role
    theta_high: float = 0.4
    orderflow_mode: str = "shared"
    efficiency_basis: str = "end"

    def __post_init__(self) -> None:
        if self.role_kind not in ("latency", "orderflow"):
            raise ValueError(f"unknown role_kind: {self.role_kind!r}")
        if 2 * self.n_per_role != self.auction.n_builders:
            raise ValueError("auction n_builders must equal 2 * n_per_role")

    @property
    def n_players(self) -> int:
        return self.auction.n_builders


GameSpec = Union[SymmetricGameSpec, RoleGameSpec]


@dataclass
class HeuristicPayoffTable:
    """Profile counts paired with average payoffs, win rates and efficiency.

    For symmetric games arrays are (K, S); for role games (K, 2, S) with the
    low role first. ``group_win_rates`` always has shape (K, 2): the roles, or
    an arbitrary half-and-half split of the anonymous players so all game
    kinds share one report schema.
    """

    kind: Literal["symmetric", "role"]
    counts: np.ndarray
    payoffs: np.ndarray
    win_rates: np.ndarray
    group_win_rates: np.ndarray
    efficiency_mean: np.ndarray
    no_winner_counts: np.ndarray
    n_sims: int
    master_seed: int
    role_kind: Optional[str] = None
    game_meta: dict = field(default_factory=dict)

    @property
    def n_profiles(self) -> int:
        return self.counts.shape[0]

    @property
    def profiles(self) -> list[Union[Profile, RoleProfile]]:
        if self.kind == "symmetric":
            return [Profile(tuple(int(c) for c in row)) for row in self.counts]
        return [
            RoleProfile(tuple(int(c) for c in row[0]), tuple(int(c) for c in row[1]))
            for row in self.counts
        ]

    def profile_label(self, k: int) -> str:
        if self.kind == "symmetric":
            return ",".join(str(int(c)) for c in self.counts[k])
        low = ",".join(str(int(c)) for c in self.counts[k, 0])
        high = ",".join(str(int(c)) for c in self.counts[k, 1])
        return f"{low}|{high}"


def _strategies_from_counts(counts: Sequence[int]) -> list[MetaStrategy]:
    out: list[MetaStrategy] = []
    for j, c in enumerate(counts):
        out.extend([STRATEGIES[j]] * int(c))
    return out


@dataclass(frozen=True)
class _RoundPlan:
    """Everything fixed across one profile's simulation rounds."""

    strategies: tuple[MetaStrategy, ...]
    strategy_idx: np.ndarray  # (n,) style index per slot
    group_idx: np.ndarray  # (n,) 0 = low/first half, 1 = high/second half
    latencies_ms: np.ndarray  # (n,)
    roles: tuple[Optional[str], ...]
    fixed_thetas: Optional[np.ndarray]  # None -> draw from the prior each round
    theta_prior: tuple[float, float]


def _plan_for_profile(spec: GameSpec, counts: np.ndarray) -> _RoundPlan:
    if isinstance(spec, SymmetricGameSpec):
        strategies = _strategies_from_counts(counts)
        n = len(strategies)
        if n != spec.n_players:
            raise ValueError(f"profile has {n} players, spec expects {spec.n_players}")
        half = n // 2
        group_idx = np.array([0 if i < half else 1 for i in range(n)])
        return _RoundPlan(
            strategies=tuple(strategies),
            strategy_idx=np.array([s.value for s in strategies]),
            group_idx=group_idx,
            latencies_ms=np.full(n, spec.latency_ms),
            roles=tuple(None for _ in range(n)),
            fixed_thetas=None,
            theta_prior=spec.theta_prior,
        )

    low_counts, high_counts = counts[0], counts[1]
    strategies = _strategies_from_counts(low_counts) + _strategies_from_counts(high_counts)
    n = len(strategies)
    if n != spec.n_players:
        raise ValueError(f"role profile has {n} players, spec expects {spec.n_players}")
    m = spec.n_per_role
    group_idx = np.array([0] * m + [1] * m)
    latencies = np.array([spec.latency_low_ms] * m + [spec.latency_high_ms] * m)
    if spec.role_kind == "orderflow":
        fixed = np.array([spec.theta_low] * m + [spec.theta_high] * m)
    else:
        fixed = None
    return _RoundPlan(
        strategies=tuple(strategies),
        strategy_idx=np.array([s.value for s in strategies]),
        group_idx=group_idx,
        latencies_ms=latencies,
        roles=tuple(["low"] * m + ["high"] * m),
        fixed_thetas=fixed,
        theta_prior=spec.theta_prior,
    )


def round_rng(master_seed: int, profile_index: int, round_index: int) -> np.random.Generator:
    """Independent, order-free random stream for one (profile, round) cell."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(profile_index, round_index))
    )


@dataclass
class RoundRecord:
    winner_slot: Optional[int]
    winner_strategy: Optional[int]
    winner_group: Optional[int]
    payoffs: np.ndarray
    efficiency: float
    no_winner: bool


def simulate_profile_round(spec: GameSpec,
                           plan: _RoundPlan,
                           profile_index: int,
                           round_index: int,
                           master_seed: int) -> RoundRecord:
    """One seeded auction round for one profile cell."""
    rng = round_rng(master_seed, profile_index, round_index)
    n = len(plan.strategies)
    if plan.fixed_thetas is None:
        thetas = rng.uniform(plan.theta_prior[0], plan.theta_prior[1], n)
    else:
        thetas = plan.fixed_thetas
    builders = [
        BuilderSpec(
            id=i + 1,
            latency_ms=float(plan.latencies_ms[i]),
            theta=float(thetas[i]),
            strategy=plan.strategies[i],
            role=plan.roles[i],
        )
        for i in range(n)
    ]
    trace = generate_signal_trace(spec.signal, thetas, rng, orderflow_mode=spec.orderflow_mode)
    outcome = run_auction(spec.auction, builders, trace, rng)
    if spec.efficiency_basis == "end":
        efficiency = outcome.efficiency
    elif spec.efficiency_basis == "submission":
        efficiency = (
            outcome.winning_bid / outcome.total_signal_at_tw
            if outcome.total_signal_at_tw > 0.0 else 0.0
        )
    else:
        raise ValueError(f"unknown efficiency_basis: {spec.efficiency_basis!r}")
    if outcome.no_winner:
        return RoundRecord(None, None, None, outcome.payoffs, efficiency, True)
    w = outcome.winner_index
    return RoundRecord(
        winner_slot=w,
        winner_strategy=int(plan.strategy_idx[w]),
        winner_group=int(plan.group_idx[w]),
        payoffs=outcome.payoffs,
        efficiency=efficiency,
        no_winner=False,
    )


def simulate_profile_rounds(spec: GameSpec,
                            profile: Union[Profile, RoleProfile],
                            profile_index: int,
                            n_sims: int,
                            master_seed: int,
                            *,
                            slot_permutation: Optional[Sequence[int]] = None) -> list[RoundRecord]:
    """Detailed per-round records for one profile (diagnostics and tests).

    ``slot_permutation`` reassigns which anonymous player slot receives which
    strategy (symmetric games only); payoff statistics must be invariant to it
    in expectation.
    """
    counts = _counts_array(profile)
    plan = _plan_for_profile(spec, counts)
    if slot_permutation is not None:
        if not isinstance(spec, SymmetricGameSpec):
            raise ValueError("slot_permutation only applies to the anonymous game")
        perm = np.asarray(slot_permutation)
        if sorted(perm.tolist()) != list(range(len(plan.strategies))):
            raise ValueError("slot_permutation must be a permutation of the player slots")
        plan = _RoundPlan(
            strategies=tuple(plan.strategies[i] for i in perm),
            strategy_idx=plan.strategy_idx[perm],
            group_idx=plan.group_idx,
            latencies_ms=plan.latencies_ms,
            roles=plan.roles,
            fixed_thetas=plan.fixed_thetas,
            theta_prior=plan.theta_prior,
        )
    return [
        simulate_profile_round(spec, plan, profile_index, v, master_seed)
        for v in range(n_sims)
    ]


def _counts_array(profile: Union[Profile, RoleProfile]) -> np.ndarray:
    if isinstance(profile, Profile):
        return np.array(profile.counts, dtype=np.int64)
    return np.array([profile.low, profile.high], dtype=np.int64)


def _estimate_cells(spec: GameSpec,
                    tasks: list[tuple[int, np.ndarray]],
                    n_sims: int,
                    master_seed: int) -> list[tuple[int, np.ndarray, np.ndarray, np.ndarray, float, int]]:
    """Aggregate (payoff sums, win counts, group wins, efficiency, no-winner) per profile."""
    out = []
    for k, counts in tasks:
        plan = _plan_for_profile(spec, counts)
        n_slots = len(plan.strategies)
        shape = counts.shape  # (S,) or (2, S)
        payoff_sum = np.zeros(shape)
        win_count = np.zeros(shape)
        group_wins = np.zeros(2)
        eff_sum = 0.0
        no_winner = 0
        for v in range(n_sims):
            rec = simulate_profile_round(spec, plan, k, v, master_seed)
            eff_sum += rec.efficiency
            if rec.no_winner:
                no_winner += 1
                continue
            w = rec.winner_slot
            pay = rec.payoffs[w]
            if counts.ndim == 1:
                payoff_sum[rec.winner_strategy] += pay
                win_count[rec.winner_strategy] += 1.0
            else:
                payoff_sum[rec.winner_group, rec.winner_strategy] += pay
                win_count[rec.winner_group, rec.winner_strategy] += 1.0
            group_wins[rec.winner_group] += 1.0
        assert n_slots == counts.sum()
        out.append((k, payoff_sum, win_count, group_wins, eff_sum, no_winner))
    return out


def _assemble_table(kind: Literal["symmetric", "role"],
                    spec: GameSpec,
                    counts: np.ndarray,
                    cells: list[tuple[int, np.ndarray, np.ndarray, np.ndarray, float, int]],
                    n_sims: int,
                    master_seed: int) -> HeuristicPayoffTable:
    K = counts.shape[0]
    payoffs = np.zeros(counts.shape, dtype=float)
    win_rates = np.zeros(counts.shape, dtype=float)
    group_win_rates = np.zeros((K, 2))
    efficiency_mean = np.zeros(K)
    no_winner_counts = np.zeros(K, dtype=np.int64)
    for k, payoff_sum, win_count, group_wins, eff_sum, no_winner in cells:
        occupied = counts[k] > 0
        # average payoff per player of a style: zero by convention where unoccupied
        denom = np.where(occupied, counts[k] * n_sims, 1)
        payoffs[k] = np.where(occupied, payoff_sum / denom, 0.0)
        win_rates[k] = win_count / n_sims
        group_win_rates[k] = group_wins / n_sims
        efficiency_mean[k] = eff_sum / n_sims
        no_winner_counts[k] = no_winner
    meta = asdict(spec) if not isinstance(spec, dict) else dict(spec)
    return HeuristicPayoffTable(
        kind=kind,
        counts=counts,
        payoffs=payoffs,
        win_rates=win_rates,
        group_win_rates=group_win_rates,
        efficiency_mean=efficiency_mean,
        no_winner_counts=no_winner_counts,
        n_sims=n_sims,
        master_seed=master_seed,
        role_kind=getattr(spec, "role_kind", None),
        game_meta=meta,
    )


def _run_tasks(spec: GameSpec,
               counts: np.ndarray,
               n_sims: int,
               master_seed: int,
               workers: int):
    tasks = [(k, counts[k]) for k in range(counts.shape[0])]
    if workers <= 1 or len(tasks) == 1:
        return _estimate_cells(spec, tasks, n_sims, master_seed)
    chunks = [tasks[i::workers] for i in range(workers)]
    cells = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_estimate_cells, spec, chunk, n_sims, master_seed)
            for chunk in chunks
            if chunk
        ]
        for fut in futures:
            cells.extend(fut.result())
    cells.sort(key=lambda c: c[0])
    return cells


def estimate_hpt_symmetric(profiles: Sequence[Profile],
                           game_spec: SymmetricGameSpec,
                           n_sims: int,
                           master_seed: int,
                           *,
                           workers: int = 1) -> HeuristicPayoffTable:
    """Estimate the anonymous-game payoff table by Monte Carlo averaging."""
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    counts = np.array([p.counts for p in profiles], dtype=np.int64)
    if np.any(counts.sum(axis=1) != game_spec.n_players):
        raise ValueError("every profile must sum to the configured player count")
    cells = _run_tasks(game_spec, counts, n_sims, master_seed, workers)
    return _assemble_table("symmetric", game_spec, counts, cells, n_sims, master_seed)


def estimate_hpt_role(role_profiles: Sequence[RoleProfile],
                      game_spec: RoleGameSpec,
                      n_sims: int,
                      master_seed: int,
                      *,
                      workers: int = 1) -> HeuristicPayoffTable:
    """Estimate the two-role payoff table; arrays gain a leading role axis."""
    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    counts = np.array([[p.low, p.high] for p in role_profiles], dtype=np.int64)
    if np.any(counts.sum(axis=2) != game_spec.n_per_role):
        raise ValueError("each role's counts must sum to n_per_role")
    cells = _run_tasks(game_spec, counts, n_sims, master_seed, workers)
    return _assemble_table("role", game_spec, counts, cells, n_sims, master_seed)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _flat_columns(kind: str) -> list[str]:
    if kind == "symmetric":
        groups = [""]
    else:
        groups = [f"_{r}" for r in ROLE_NAMES]
    cols = ["profile_id"]
    for prefix in ("n", "payoff", "win_rate"):
        for g in groups:
            cols.extend(f"{prefix}_{s}{g}" for s in STRATEGY_NAMES)
    cols += ["win_rate_group_low", "win_rate_group_high", "efficiency_mean", "no_winner_rounds", "n_sims"]
    return cols


def save_hpt_csv(table: HeuristicPayoffTable, path, sidecar_path=None) -> None:
    """One row per profile; a JSON sidecar records the game spec and seed."""
    cols = _flat_columns(table.kind)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for k in range(table.n_profiles):
            row: list = [table.profile_label(k)]
            row += [int(c) for c in table.counts[k].reshape(-1)]
            row += [repr(float(u)) for u in table.payoffs[k].reshape(-1)]
            row += [repr(float(w)) for w in table.win_rates[k].reshape(-1)]
            row += [repr(float(w)) for w in table.group_win_rates[k]]
            row += [repr(float(table.efficiency_mean[k])), int(table.no_winner_counts[k]), table.n_sims]
            writer.writerow(row)
    if sidecar_path is not None:
        sidecar = {
            "kind": table.kind,
            "role_kind": table.role_kind,
            "n_sims": table.n_sims,
            "master_seed": table.master_seed,
            "game_spec": table.game_meta,
        }
        with open(sidecar_path, "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_hpt_csv(path, sidecar_path=None) -> HeuristicPayoffTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    kind = "role" if "n_conservative_low" in header else "symmetric"
    cols = _flat_columns(kind)
    if header != cols:
        raise ValueError(f"unexpected HPT csv header in {path}")
    S = len(STRATEGY_NAMES)
    width = S if kind == "symmetric" else 2 * S
    K = len(rows)
    shape = (K, S) if kind == "symmetric" else (K, 2, S)
    counts = np.zeros(shape, dtype=np.int64)
    payoffs = np.zeros(shape)
    win_rates = np.zeros(shape)
    group_win_rates = np.zeros((K, 2))
    efficiency_mean = np.zeros(K)
    no_winner = np.zeros(K, dtype=np.int64)
    n_sims = 0
    for k, row in enumerate(rows):
        vals = row[1:]
        counts[k] = np.array([int(v) for v in vals[:width]]).reshape(shape[1:])
        payoffs[k] = np.array([float(v) for v in vals[width:2 * width]]).reshape(shape[1:])
        win_rates[k] = np.array([float(v) for v in vals[2 * width:3 * width]]).reshape(shape[1:])
        group_win_rates[k] = [float(vals[3 * width]), float(vals[3 * width + 1])]
        efficiency_mean[k] = float(vals[3 * width + 2])
        no_winner[k] = int(vals[3 * width + 3])
        n_sims = int(vals[3 * width + 4])
    meta = {}
    role_kind = None
    master_seed = -1
    if sidecar_path is not None:
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
        meta = sidecar.get("game_spec", {})
        role_kind = sidecar.get("role_kind")
        master_seed = sidecar.get("master_seed", -1)
    return HeuristicPayoffTable(
        kind=kind,
        counts=counts,
        payoffs=payoffs,
        win_rates=win_rates,
        group_win_rates=group_win_rates,
        efficiency_mean=efficiency_mean,
        no_winner_counts=no_winner,
        n_sims=n_sims,
        master_seed=master_seed,
        role_kind=role_kind,
        game_meta=meta,
    )
