"""Single-auction simulation: bidding, latency-delayed acceptance, winner payoff.

Builders bid every tick according to their bidding style: the full public
signal plus a style-specific fraction of their private signal. A bid submitted
at tick ``t`` is accepted by the relay at ``t + latency`` and competes only if
accepted by the (random) auction end time ``T``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .signals import SignalTrace


class MetaStrategy(enum.Enum):
    """Coarse bidding style: which fraction of private signal goes into the bid."""

    CONSERVATIVE = 0
    MODERATE = 1
    AGGRESSIVE = 2

    @property
    def fraction_interval(self) -> tuple[float, float]:
        return _INTERVALS[self]

    @property
    def includes_lower_bound(self) -> bool:
        # [0, 1/3] for conservative; (1/3, 2/3] and (2/3, 1] for the others
        return self is MetaStrategy.CONSERVATIVE


_INTERVALS = {
    MetaStrategy.CONSERVATIVE: (0.0, 1.0 / 3.0),
    MetaStrategy.MODERATE: (1.0 / 3.0, 2.0 / 3.0),
    MetaStrategy.AGGRESSIVE: (2.0 / 3.0, 1.0),
}

STRATEGIES: tuple[MetaStrategy, ...] = (
    MetaStrategy.CONSERVATIVE,
    MetaStrategy.MODERATE,
    MetaStrategy.AGGRESSIVE,
)

N_STRATEGIES = len(STRATEGIES)


def draw_meta_fraction(strategy: MetaStrategy, rng: np.random.Generator) -> float:
    """Draw the private-signal fraction for one auction, uniform on the style's interval.

    Conservative draws land in [low, high); the other styles exclude the lower
    endpoint and include the upper one, so the three intervals partition [0, 1].
    """
    low, high = strategy.fraction_interval
    u = rng.random()
    if strategy.includes_lower_bound:
        return low + u * (high - low)
    return high - u * (high - low)


def compute_bid(public: float, private: float, lam: float) -> float:
    """Bid value: full public signal plus ``lam`` times the private signal."""
    if public < 0.0 or private < 0.0:
        raise ValueError("signals must be non-negative")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return public + lam * private


@dataclass(frozen=True)
class BuilderSpec:
    id: int
    latency_ms: float
    theta: float
    strategy: MetaStrategy
    role: Optional[str] = None  # e.g. "low"/"high" latency or orderflow tier

    def __post_init__(self) -> None:
        if self.latency_ms <= 0.0:
            raise ValueError("latency_ms must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


@dataclass(frozen=True)
class AuctionParams:
    t_mean_s: float = 13.0
    t_sigma_s: float = 0.1
    step_ms: float = 10.0
    n_builders: int = 10

    def __post_init__(self) -> None:
        if self.t_mean_s <= 0.0:
            raise ValueError("t_mean_s must be positive")
        if self.t_sigma_s < 0.0:
            raise ValueError("t_sigma_s must be non-negative")
        if self.step_ms <= 0.0 or self.n_builders < 1:
            raise ValueError("step_ms must be positive and n_builders >= 1")


@dataclass
class AuctionState:
    """Optional tick-level view of the auction, for debugging and analysis.

    ``highest_accepted`` tracks the best relay-accepted bid visible at each
    tick; the bidding styles never read it, but it is part of the observable
    auction state.
    """

    step_ms: float
    bids: np.ndarray  # (n_builders, n_ticks) submitted bid per tick
    highest_accepted: np.ndarray  # (n_ticks,) running max of accepted bids


@dataclass
class AuctionOutcome:
    winner_index: Optional[int]  # slot into the builders list; None if no bid was accepted
    winner_id: Optional[int]
    winning_bid: float
    t_w: float  # submission time of the winning bid (seconds)
    acceptance_time: float  # t_w + winner latency
    t_end: float  # realized auction end time T
    payoffs: np.ndarray  # (n_builders,) ETH
    winner_signal_at_tw: float  # winner's aggregated signal at t_w
    total_signal_at_T: float
    total_signal_at_tw: float
    efficiency: float  # winning bid / total signal at T
    lambda_draws: np.ndarray  # (n_builders,) private-signal fractions used
    no_winner: bool = False
    state: Optional[AuctionState] = None


def _required_horizon(params: AuctionParams) -> float:
    return params.t_mean_s + 6.0 * params.t_sigma_s


def run_auction(params: AuctionParams,
                builders: Sequence[BuilderSpec],
                trace: SignalTrace,
                rng: np.random.Generator,
                *,
                lambdas: Optional[Sequence[float]] = None,
                record_state: bool = False) -> AuctionOutcome:
    """Simulate one auction over a pre-generated signal trace.

    The end time T is drawn from Normal(t_mean_s, t_sigma_s), truncated to be
    positive and capped at the trace horizon. Each builder's best accepted bid
    is its bid at the last tick accepted by T; the winner holds the maximum,
    with ties broken by earliest acceptance time and then uniformly at random.
    The winner earns its aggregated signal at the winning bid's submission
    time minus the bid; everyone else earns zero.
    """
    n = len(builders)
    if n != params.n_builders:
        raise ValueError(f"expected {params.n_builders} builders, got {n}")
    if trace.n_builders != n:
        raise ValueError("trace was generated for a different builder count")
    if abs(trace.step_ms - params.step_ms) > 1e-9:
        raise ValueError("trace step_ms does not match auction params")
    if trace.horizon_s < _required_horizon(params):
        raise ValueError(
            f"trace horizon {trace.horizon_s:.3f}s does not cover the auction end "
            f"time distribution (need >= {_required_horizon(params):.3f}s)"
        )

    step_s = trace.step_s
    t_end = float(rng.normal(params.t_mean_s, params.t_sigma_s))
    t_end = min(max(t_end, step_s), trace.horizon_s)

    if lambdas is None:
        lams = np.array([draw_meta_fraction(b.strategy, rng) for b in builders])
    else:
        lams = np.asarray(lambdas, dtype=float)
        if lams.shape != (n,):
            raise ValueError("lambdas must have one entry per builder")

    delays_s = np.array([b.latency_ms for b in builders]) / 1000.0
    # last tick whose bid the relay accepts before T; the epsilon absorbs
    # float fuzz when (t_end - delay) sits exactly on the tick grid
    decision_ticks = np.floor((t_end - delays_s) / step_s + 1e-9).astype(np.int64)
    eligible = decision_ticks >= 0
    decision_ticks = np.clip(decision_ticks, 0, trace.n_ticks - 1)

    pub = trace.public_cumulative
    priv = trace.private_cumulative_per_builder
    best_bids = pub[decision_ticks] + lams * priv[np.arange(n), decision_ticks]
    best_bids[~eligible] = -np.inf

    t_tick = trace.tick_of(t_end)
    total_signal = trace.total_signal(t_tick)

    state = None
    if record_state:
        bids = pub[np.newaxis, :] + lams[:, np.newaxis] * priv
        delay_ticks = np.ceil(delays_s / step_s - 1e-12).astype(np.int64)
        highest = np.full(trace.n_ticks, -np.inf)
        for i in range(n):
            d = delay_ticks[i]
            if d < trace.n_ticks:
                shifted = np.full(trace.n_ticks, -np.inf)
                shifted[d:] = bids[i, : trace.n_ticks - d]
                highest = np.maximum(highest, shifted)
        state = AuctionState(step_ms=trace.step_ms, bids=bids, highest_accepted=highest)

    if not np.any(eligible):
        return AuctionOutcome(
            winner_index=None, winner_id=None, winning_bid=0.0,
            t_w=0.0, acceptance_time=0.0, t_end=t_end,
            payoffs=np.zeros(n), winner_signal_at_tw=0.0,
            total_signal_at_T=total_signal, total_signal_at_tw=0.0,
            efficiency=0.0, lambda_draws=lams, no_winner=True, state=state,
        )

    top = float(np.max(best_bids))
    contenders = np.flatnonzero(best_bids == top)

    def submission_tick(i: int) -> int:
        # bids are non-decreasing, so the first tick reaching the best value
        # marks when that bid value was first submitted
        series = pub[: decision_ticks[i] + 1] + lams[i] * priv[i, : decision_ticks[i] + 1]
        return int(np.searchsorted(series, best_bids[i], side="left"))

    if contenders.size == 1:
        winner = int(contenders[0])
        tw_tick = submission_tick(winner)
    else:
        ticks = {int(i): submission_tick(int(i)) for i in contenders}
        acceptance = {i: ticks[i] * step_s + delays_s[i] for i in ticks}
        earliest = min(acceptance.values())
        finalists = [i for i in contenders if acceptance[int(i)] <= earliest + 1e-15]
        winner = int(finalists[rng.integers(len(finalists))]) if len(finalists) > 1 else int(finalists[0])
        tw_tick = ticks[winner]

    winning_bid = float(pub[tw_tick] + lams[winner] * priv[winner, tw_tick])
    winner_signal = float(pub[tw_tick] + priv[winner, tw_tick])
    payoffs = np.zeros(n)
    payoffs[winner] = winner_signal - winning_bid

    total_at_tw = trace.total_signal(tw_tick)
    efficiency = winning_bid / total_signal if total_signal > 0.0 else 0.0

    return AuctionOutcome(
        winner_index=winner,
        winner_id=builders[winner].id,
        winning_bid=winning_bid,
        t_w=tw_tick * step_s,
        acceptance_time=tw_tick * step_s + delays_s[winner],
        t_end=t_end,
        payoffs=payoffs,
        winner_signal_at_tw=winner_signal,
        total_signal_at_T=total_signal,
        total_signal_at_tw=total_at_tw,
        efficiency=efficiency,
        lambda_draws=lams,
        no_winner=False,
        state=state,
    )


def write_bid_log_csv(outcome: AuctionOutcome, builders: Sequence[BuilderSpec], path) -> None:
    """Debug dump of (tick, builder, bid, accepted_flag); requires record_state=True."""
    import csv

    if outcome.state is None:
        raise ValueError("outcome has no recorded state; rerun with record_state=True")
    bids = outcome.state.bids
    step_s = outcome.state.step_ms / 1000.0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "builder_id", "bid_eth", "accepted"])
        for i, b in enumerate(builders):
            delay_s = b.latency_ms / 1000.0
            for t in range(bids.shape[1]):
                accepted = t * step_s + delay_s <= outcome.t_end
                writer.writerow([t, b.id, repr(float(bids[i, t])), int(accepted)])
