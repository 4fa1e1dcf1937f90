"""Stochastic MEV signal streams driving the auction simulations.

Public transactions and private orderflow both arrive as Poisson processes
with log-normally distributed ETH values. Private orderflow is a single
global stream; which builders see a given event is controlled by per-builder
access probabilities (thetas).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

OrderflowMode = Literal["shared", "exclusive"]


@dataclass(frozen=True)
class CalibrationConstants:
    """Market-level constants the signal rates are calibrated against.

    Defaults describe one 12s slot of the top-10 builder market: ~105 public
    transactions worth ~0.00019 ETH each (~31% of block value), private
    orderflow making up 10.92%..36.38% of winning-block transactions, and
    orderflow access probabilities spanning 30%..100%.
    """

    public_tx_count: float = 105.0
    public_tx_value_eth: float = 0.00019
    public_value_share: float = 0.31
    private_tx_share_min: float = 0.1092
    private_tx_share_max: float = 0.3638
    theta_min: float = 0.3
    theta_max: float = 1.0
    slot_seconds: float = 12.0

    def __post_init__(self) -> None:
        if self.public_tx_count <= 0 or self.public_tx_value_eth <= 0:
            raise ValueError("public transaction count and value must be positive")
        if self.slot_seconds <= 0:
            raise ValueError("slot_seconds must be positive")
        for name in ("public_value_share", "private_tx_share_min", "private_tx_share_max"):
            share = getattr(self, name)
            if not 0.0 < share < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {share}")
        if not 0.0 <= self.theta_min <= self.theta_max <= 1.0:
            raise ValueError("theta range must satisfy 0 <= min <= max <= 1")


@dataclass(frozen=True)
class SignalConfig:
    """Arrival rates, value distributions and discretization of one auction's signals."""

    lambda_p: float  # public tx arrivals per second
    lambda_e: float  # global private orderflow arrivals per second
    public_value_mean: float  # ETH per public tx
    private_value_mean: float  # ETH per private orderflow
    lognormal_shape_public: float = 1.0  # sigma of the underlying normal
    lognormal_shape_private: float = 1.0
    step_ms: float = 10.0
    horizon_s: float = 14.0

    def __post_init__(self) -> None:
        if self.lambda_p <= 0:
            raise ValueError("lambda_p must be positive")
        if self.lambda_e < 0:
            raise ValueError("lambda_e must be non-negative")
        if self.public_value_mean <= 0 or self.private_value_mean <= 0:
            raise ValueError("value means must be positive")
        if self.lognormal_shape_public < 0 or self.lognormal_shape_private < 0:
            raise ValueError("log-normal shapes must be non-negative")
        if self.step_ms <= 0 or self.horizon_s <= 0:
            raise ValueError("step_ms and horizon_s must be positive")

    @property
    def step_s(self) -> float:
        return self.step_ms / 1000.0

    @property
    def n_ticks(self) -> int:
        return int(round(self.horizon_s / self.step_s)) + 1


def calibrate_rates(calibration: CalibrationConstants = CalibrationConstants(),
                    *,
                    lognormal_shape_public: float = 1.0,
                    lognormal_shape_private: float = 1.0,
                    step_ms: float = 10.0,
                    horizon_s: float = 14.0) -> SignalConfig:
    """Derive arrival rates and value means from market constants.

    The private stream is pinned at the full-access endpoint: a builder seeing
    every orderflow event should observe a private-to-total transaction-count
    share of ``private_tx_share_max``, and the private value total should make
    up the complement of the public value share.
    """
    lambda_p = calibration.public_tx_count / calibration.slot_seconds
    # expected full-access private event count per slot: n / (n + n_pub) = share_max
    share = calibration.private_tx_share_max
    n_e = calibration.public_tx_count * share / (1.0 - share)
    lambda_e = n_e / calibration.slot_seconds
    public_total = calibration.public_tx_count * calibration.public_tx_value_eth
    private_total = public_total * (1.0 - calibration.public_value_share) / calibration.public_value_share
    private_value_mean = private_total / n_e
    return SignalConfig(
        lambda_p=lambda_p,
        lambda_e=lambda_e,
        public_value_mean=calibration.public_tx_value_eth,
        private_value_mean=private_value_mean,
        lognormal_shape_public=lognormal_shape_public,
        lognormal_shape_private=lognormal_shape_private,
        step_ms=step_ms,
        horizon_s=horizon_s,
    )


@dataclass(frozen=True)
class PublicEvent:
    time_s: float
    value_eth: float


@dataclass(frozen=True)
class OrderflowEvent:
    time_s: float
    value_eth: float
    access_mask: tuple[bool, ...]  # which builders see this event


@dataclass
class SignalTrace:
    """Time-discretized cumulative signals for one auction.

    Cumulative arrays have one entry per tick ``k`` (time ``k * step_ms``).
    An event occurring at continuous time ``u`` is binned at tick
    ``floor(u / step)`` and contributes to every tick from there on.
    """

    step_ms: float
    public_cumulative: np.ndarray  # (n_ticks,)
    private_cumulative_per_builder: np.ndarray  # (n_builders, n_ticks)
    private_cumulative_total: np.ndarray  # (n_ticks,)
    public_times: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    public_values: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    private_times: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    private_values: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    private_masks: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 0), dtype=bool))

    @property
    def n_ticks(self) -> int:
        return self.public_cumulative.shape[0]

    @property
    def n_builders(self) -> int:
        return self.private_cumulative_per_builder.shape[0]

    @property
    def step_s(self) -> float:
        return self.step_ms / 1000.0

    @property
    def horizon_s(self) -> float:
        return (self.n_ticks - 1) * self.step_s

    @property
    def public_events(self) -> list[PublicEvent]:
        return [PublicEvent(t, v) for t, v in zip(self.public_times, self.public_values)]

    @property
    def private_events(self) -> list[OrderflowEvent]:
        return [
            OrderflowEvent(t, v, tuple(bool(b) for b in mask))
            for t, v, mask in zip(self.private_times, self.private_values, self.private_masks)
        ]

    @property
    def events(self) -> list[PublicEvent | OrderflowEvent]:
        """All events merged in chronological order."""
        merged: list[PublicEvent | OrderflowEvent] = [*self.public_events, *self.private_events]
        merged.sort(key=lambda e: e.time_s)
        return merged

    def tick_of(self, time_s: float) -> int:
        """Tick index holding the cumulative signal at continuous time ``time_s``."""
        k = int(np.floor(time_s / self.step_s + 1e-9))
        return min(max(k, 0), self.n_ticks - 1)

    def total_signal(self, tick: int) -> float:
        return float(self.public_cumulative[tick] + self.private_cumulative_total[tick])


def _lognormal_values(rng: np.random.Generator, mean: float, shape: float, n: int) -> np.ndarray:
    # parameterize so the distribution mean equals `mean`
    mu = np.log(mean) - 0.5 * shape * shape
    return rng.lognormal(mean=mu, sigma=shape, size=n)


def _poisson_arrivals(rng: np.random.Generator, rate: float, horizon_s: float) -> np.ndarray:
    n = rng.poisson(rate * horizon_s)
    return np.sort(rng.uniform(0.0, horizon_s, size=n))


def _cumulative_on_grid(bins: np.ndarray, event_cumsum: np.ndarray, n_ticks: int) -> np.ndarray:
    """Step function of cumulative event values sampled on the tick grid."""
    idx = np.searchsorted(bins, np.arange(n_ticks), side="right")
    padded = np.concatenate(([0.0], event_cumsum))
    return padded[idx]


def generate_signal_trace(config: SignalConfig,
                          thetas: np.ndarray,
                          rng: np.random.Generator,
                          *,
                          orderflow_mode: OrderflowMode = "shared") -> SignalTrace:
    """Sample one auction's public and private signal streams.

    In ``shared`` mode every private event is visible to builder ``i``
    independently with probability ``thetas[i]``; events can be seen by many
    builders at once. In ``exclusive`` mode the same global pool is split into
    exclusive deals: each event belongs to exactly one builder, chosen with
    probability proportional to that builder's theta. Both modes keep the
    global private stream at rate ``lambda_e``, so the total available signal
    is identical; they differ only in who sees what.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 1 or thetas.size == 0:
        raise ValueError("thetas must be a non-empty 1-D vector")
    if np.any((thetas < 0.0) | (thetas > 1.0)):
        raise ValueError("every theta must lie in [0, 1]")
    if orderflow_mode not in ("shared", "exclusive"):
        raise ValueError(f"unknown orderflow_mode: {orderflow_mode!r}")
    n_builders = thetas.size
    n_ticks = config.n_ticks
    step_s = config.step_s

    pub_times = _poisson_arrivals(rng, config.lambda_p, config.horizon_s)
    pub_values = _lognormal_values(rng, config.public_value_mean, config.lognormal_shape_public, pub_times.size)

    priv_times = _poisson_arrivals(rng, config.lambda_e, config.horizon_s)
    priv_values = _lognormal_values(rng, config.private_value_mean, config.lognormal_shape_private, priv_times.size)

    n_priv = priv_times.size
    if orderflow_mode == "shared":
        masks = rng.random((n_priv, n_builders)) < thetas[np.newaxis, :]
    else:
        masks = np.zeros((n_priv, n_builders), dtype=bool)
        total = float(thetas.sum())
        if total > 0.0 and n_priv > 0:
            owners = np.searchsorted(np.cumsum(thetas) / total, rng.random(n_priv), side="right")
            masks[np.arange(n_priv), owners] = True

    pub_bins = np.floor(pub_times / step_s).astype(np.int64)
    priv_bins = np.floor(priv_times / step_s).astype(np.int64)

    public_cumulative = _cumulative_on_grid(pub_bins, np.cumsum(pub_values), n_ticks)
    private_cumulative_total = _cumulative_on_grid(priv_bins, np.cumsum(priv_values), n_ticks)

    # per-builder cumulative built from the same event partial sums
    masked = masks.T * priv_values[np.newaxis, :]  # (n_builders, n_priv)
    idx = np.searchsorted(priv_bins, np.arange(n_ticks), side="right")
    cum = np.concatenate((np.zeros((n_builders, 1)), np.cumsum(masked, axis=1)), axis=1)
    private_cumulative_per_builder = cum[:, idx]

    return SignalTrace(
        step_ms=config.step_ms,
        public_cumulative=public_cumulative,
        private_cumulative_per_builder=private_cumulative_per_builder,
        private_cumulative_total=private_cumulative_total,
        public_times=pub_times,
        public_values=pub_values,
        private_times=priv_times,
        private_values=priv_values,
        private_masks=masks,
    )


def iter_trace_event_rows(trace: SignalTrace) -> Iterator[tuple[float, str, float, str]]:
    """Rows (time_s, kind, value_eth, access_mask bitstring) in time order."""
    n = trace.n_builders
    rows = [(float(t), "public", float(v), "1" * n) for t, v in zip(trace.public_times, trace.public_values)]
    rows += [
        (float(t), "private", float(v), "".join("1" if b else "0" for b in mask))
        for t, mask, v in zip(trace.private_times, trace.private_masks, trace.private_values)
    ]
    rows.sort(key=lambda r: r[0])
    return iter(rows)


def write_trace_events_csv(trace: SignalTrace, path) -> None:
    """Dump one CSV row per event: time_s, kind, value_eth, access_mask."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "kind", "value_eth", "access_mask"])
        for row in iter_trace_event_rows(trace):
            writer.writerow([repr(row[0]), row[1], repr(row[2]), row[3]])
