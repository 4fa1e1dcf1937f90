"""Evolutionary profile ranking via a single-mutation Markov chain.

States are the payoff table's strategy profiles. From a profile, a uniformly
random player may switch to a uniformly random alternative style; the switch
is accepted with a logistic-style rate driven by the payoff difference between
the deviator's current payoff (source profile) and its post-switch payoff
(destination profile). The stationary distribution of the chain ranks the
profiles; its mass is the equilibrium weight of each profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .hpt import HeuristicPayoffTable

PERTURBATION = 1e-12
RESIDUAL_TOL = 1e-9


class SolverError(RuntimeError):
    """Stationary distribution could not be computed to tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class DegenerateGameError(ValueError):
    """Every unilateral deviation has a zero payoff gap."""


def _logexpm1(z: float) -> float:
    # log(e^z - 1) for z > 0, stable for large z
    if z > 30.0:
        return z + math.log1p(-math.exp(-z))
    return math.log(math.expm1(z))


def switch_rate(u_sigma: float, u_tau: float, alpha: float, population_size: int) -> float:
    """Probability that a player switches from payoff ``u_sigma`` to ``u_tau``.

    Equal payoffs give the neutral rate 1/N. Otherwise the rate is
    (1 - e^(-a*d)) / (1 - e^(-N*a*d)) with d = u_tau - u_sigma, evaluated in a
    form that saturates to 1 for strongly beneficial switches and decays like
    e^(-(N-1)*a*|d|) for strongly harmful ones instead of overflowing.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if population_size < 2:
        raise ValueError("population_size must be at least 2")
    if u_tau == u_sigma:
        return 1.0 / population_size
    x = alpha * (u_tau - u_sigma)
    n = population_size
    if x > 0.0:
        return math.expm1(-x) / math.expm1(-n * x)
    y = -x
    if y < 700.0 / n:
        return math.expm1(y) / math.expm1(n * y)
    log_rho = _logexpm1(y) - _logexpm1(n * y)
    return math.exp(log_rho) if log_rho > -745.0 else 0.0


@dataclass
class TransitionChain:
    profile_labels: list[str]
    matrix: np.ndarray  # (K, K) row-stochastic
    alpha: float
    population_size: int

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]


def _deviation_edges(hpt: HeuristicPayoffTable) -> Iterator[tuple[int, int, float, float, int]]:
    """Yield (source k, dest k2, u_source, u_dest, deviator count) for every
    single-player strategy switch present in the table."""
    counts = hpt.counts
    S = counts.shape[-1]
    if hpt.kind == "symmetric":
        index = {tuple(int(c) for c in counts[k]): k for k in range(counts.shape[0])}
        for k in range(counts.shape[0]):
            c = counts[k]
            for j in range(S):
                if c[j] == 0:
                    continue
                for j2 in range(S):
                    if j2 == j:
                        continue
                    dest = list(c)
                    dest[j] -= 1
                    dest[j2] += 1
                    k2 = index.get(tuple(dest))
                    if k2 is None:
                        raise ValueError("payoff table is missing a deviation profile")
                    yield k, k2, float(hpt.payoffs[k, j]), float(hpt.payoffs[k2, j2]), int(c[j])
    else:
        index = {
            (tuple(int(c) for c in counts[k, 0]), tuple(int(c) for c in counts[k, 1])): k
            for k in range(counts.shape[0])
        }
        for k in range(counts.shape[0]):
            for r in range(2):
                c = counts[k, r]
                for j in range(S):
                    if c[j] == 0:
                        continue
                    for j2 in range(S):
                        if j2 == j:
                            continue
                        dest = counts[k].copy()
                        dest[r, j] -= 1
                        dest[r, j2] += 1
                        key = (tuple(int(x) for x in dest[0]), tuple(int(x) for x in dest[1]))
                        k2 = index.get(key)
                        if k2 is None:
                            raise ValueError("payoff table is missing a deviation profile")
                        yield k, k2, float(hpt.payoffs[k, r, j]), float(hpt.payoffs[k2, r, j2]), int(c[j])


def default_population_size(hpt: HeuristicPayoffTable) -> int:
    """Population N in the switch rate: all players for the anonymous game,
    players per role for the role games."""
    if hpt.kind == "symmetric":
        return int(hpt.counts[0].sum())
    return int(hpt.counts[0, 0].sum())


def build_transition_chain(hpt: HeuristicPayoffTable,
                           alpha: float,
                           population_size: Optional[int] = None) -> TransitionChain:
    """Assemble the row-stochastic single-mutation chain over profiles."""
    n_pop = default_population_size(hpt) if population_size is None else population_size
    S = hpt.counts.shape[-1]
    n_players = int(hpt.counts[0].sum())
    K = hpt.n_profiles
    matrix = np.zeros((K, K))
    for k, k2, u_src, u_dst, c_j in _deviation_edges(hpt):
        rho = switch_rate(u_src, u_dst, alpha, n_pop)
        matrix[k, k2] += (c_j / n_players) * (1.0 / (S - 1)) * rho
    np.fill_diagonal(matrix, 0.0)
    row_sums = matrix.sum(axis=1)
    if np.any(row_sums > 1.0 + 1e-12):
        raise AssertionError("off-diagonal transition mass exceeds 1")
    np.fill_diagonal(matrix, np.maximum(1.0 - row_sums, 0.0))
    labels = [hpt.profile_label(k) for k in range(K)]
    return TransitionChain(profile_labels=labels, matrix=matrix, alpha=alpha, population_size=n_pop)


@dataclass
class StationaryDistribution:
    masses: np.ndarray
    alpha: float
    residual: float  # l1 norm of pi @ P - pi
    perturbed: bool = False


def _direct_solve(matrix: np.ndarray) -> np.ndarray:
    K = matrix.shape[0]
    a = matrix.T - np.eye(K)
    a[-1, :] = 1.0
    b = np.zeros(K)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    return pi


def _power_iteration(matrix: np.ndarray, max_iters: int = 200_000, tol: float = 1e-13) -> np.ndarray:
    K = matrix.shape[0]
    pi = np.full(K, 1.0 / K)
    for _ in range(max_iters):
        nxt = pi @ matrix
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    return pi


def _is_irreducible(matrix: np.ndarray) -> bool:
    n_comp, _ = connected_components(csr_matrix(matrix > 0.0), directed=True, connection="strong")
    return n_comp == 1


def stationary_distribution(chain: TransitionChain) -> StationaryDistribution:
    """Solve pi @ P = pi by direct linear solve with a power-iteration fallback.

    Chains saturated at large alpha can be reducible (absorbing profiles); a
    uniform off-diagonal perturbation restores a unique stationary
    distribution and is reported via the ``perturbed`` flag.
    """
    matrix = chain.matrix
    perturbed = False
    if not _is_irreducible(matrix):
        K = matrix.shape[0]
        matrix = matrix + PERTURBATION * (np.ones((K, K)) - np.eye(K))
        matrix /= matrix.sum(axis=1, keepdims=True)
        perturbed = True

    pi = None
    try:
        candidate = _direct_solve(matrix)
        if candidate.min() > -1e-8:
            candidate = np.clip(candidate, 0.0, None)
            candidate /= candidate.sum()
            pi = candidate
    except np.linalg.LinAlgError:
        pi = None
    if pi is None or np.abs(pi @ matrix - pi).sum() >= RESIDUAL_TOL:
        pi = _power_iteration(matrix)
    residual = float(np.abs(pi @ matrix - pi).sum())
    if residual >= RESIDUAL_TOL:
        raise SolverError("stationary distribution did not converge", residual)
    return StationaryDistribution(masses=pi, alpha=chain.alpha, residual=residual, perturbed=perturbed)


def _deviation_gaps(hpt: HeuristicPayoffTable) -> np.ndarray:
    gaps = np.array([abs(u_dst - u_src) for _, _, u_src, u_dst, _ in _deviation_edges(hpt)])
    return gaps[gaps > 0.0]


def estimate_alpha_lower_bound(hpt: HeuristicPayoffTable, epsilon: float = 1e-3) -> float:
    """Selection strength at which every beneficial switch is near-saturated.

    Returns ln(1/epsilon) divided by the smallest nonzero payoff gap across
    all unilateral deviations in the table.
    """
    gaps = _deviation_gaps(hpt)
    if gaps.size == 0:
        raise DegenerateGameError("all unilateral deviation payoff gaps are zero")
    return math.log(1.0 / epsilon) / float(gaps.min())


def default_alpha_grid(hpt: HeuristicPayoffTable, n_points: int = 30) -> np.ndarray:
    """Geometric grid from well below the payoff scale to past saturation."""
    gaps = _deviation_gaps(hpt)
    if gaps.size == 0:
        raise DegenerateGameError("all unilateral deviation payoff gaps are zero")
    start = 1e-2 / float(gaps.max())
    end = 10.0 * estimate_alpha_lower_bound(hpt)
    return np.geomspace(start, end, n_points)


@dataclass
class AlphaSweepResult:
    alphas: np.ndarray  # (A,)
    masses: np.ndarray  # (A, K)
    converged: bool
    final: StationaryDistribution
    profile_labels: list[str] = field(default_factory=list)

    @property
    def final_ranking(self) -> np.ndarray:
        return np.argsort(self.masses[-1])[::-1]


def sweep_alpha(hpt: HeuristicPayoffTable,
                alpha_grid: Optional[np.ndarray] = None,
                population_size: Optional[int] = None) -> AlphaSweepResult:
    """Stationary distribution along an ascending alpha grid.

    Convergence is declared when the top-ranked profile is unchanged across
    the last three grid points and the largest mass change between them is
    below 1e-3.
    """
    if alpha_grid is None:
        alpha_grid = default_alpha_grid(hpt)
    alphas = np.asarray(alpha_grid, dtype=float)
    if alphas.size < 1 or np.any(alphas <= 0.0) or np.any(np.diff(alphas) <= 0.0):
        raise ValueError("alpha grid must be ascending and strictly positive")
    masses = np.zeros((alphas.size, hpt.n_profiles))
    last = None
    for i, alpha in enumerate(alphas):
        try:
            dist = stationary_distribution(build_transition_chain(hpt, alpha, population_size))
        except SolverError as err:
            raise SolverError(f"sweep failed at alpha={alpha:.6g}", err.residual) from err
        masses[i] = dist.masses
        last = dist
    converged = False
    if alphas.size >= 3:
        tail = masses[-3:]
        tops = {int(np.argmax(m)) for m in tail}
        converged = len(tops) == 1 and float(np.abs(np.diff(tail, axis=0)).max()) < 1e-3
    labels = [hpt.profile_label(k) for k in range(hpt.n_profiles)]
    return AlphaSweepResult(alphas=alphas, masses=masses, converged=converged,
                            final=last, profile_labels=labels)


def equilibrium_summary(dist: StationaryDistribution, hpt: HeuristicPayoffTable) -> np.ndarray:
    """Mass-weighted expected player count per style (per role for role games)."""
    masses = np.asarray(dist.masses, dtype=float)
    if masses.shape[0] != hpt.n_profiles:
        raise ValueError("distribution and payoff table have different profile counts")
    weights = masses.reshape((-1,) + (1,) * (hpt.counts.ndim - 1))
    return (weights * hpt.counts).sum(axis=0)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_stationary_csv(hpt: HeuristicPayoffTable, dist: StationaryDistribution, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["profile_id", "profile_counts", "mass", "alpha"])
        for k in range(hpt.n_profiles):
            writer.writerow([k, hpt.profile_label(k), repr(float(dist.masses[k])), repr(float(dist.alpha))])


def save_sweep_csv(sweep: AlphaSweepResult, path) -> None:
    """Long format (alpha, profile_id, mass); profile_id is the counts label."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "profile_id", "mass"])
        for i, alpha in enumerate(sweep.alphas):
            for k, label in enumerate(sweep.profile_labels):
                writer.writerow([repr(float(alpha)), label, repr(float(sweep.masses[i, k]))])
