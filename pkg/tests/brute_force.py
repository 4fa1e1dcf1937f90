"""Naive reference constructions used as oracles for the ranking solver.

Everything here is written independently of the package implementation:
profiles as dictionaries, the switch rate straight from its textbook form,
and the stationary distribution from a dense left-eigenvector solve.
"""
import itertools
import math

import numpy as np
import scipy.linalg


def naive_profiles(n_players, n_strategies):
    """All count vectors summing to n_players, assignment-lexicographic order."""
    seen = []
    for assignment in itertools.combinations_with_replacement(range(n_strategies), n_players):
        counts = tuple(assignment.count(s) for s in range(n_strategies))
        seen.append(counts)
    return seen


def naive_switch_rate(u_from, u_to, alpha, n_pop):
    if u_to == u_from:
        return 1.0 / n_pop
    d = u_to - u_from
    return (1.0 - math.exp(-alpha * d)) / (1.0 - math.exp(-n_pop * alpha * d))


def naive_chain(profiles, payoffs, alpha, n_pop):
    """Transition matrix over count-vector profiles from a payoff dict.

    payoffs[counts][j] is the average payoff of strategy j in that profile.
    """
    n_players = sum(profiles[0])
    n_strategies = len(profiles[0])
    index = {p: i for i, p in enumerate(profiles)}
    size = len(profiles)
    matrix = np.zeros((size, size))
    for p in profiles:
        k = index[p]
        for j in range(n_strategies):
            if p[j] == 0:
                continue
            for j2 in range(n_strategies):
                if j2 == j:
                    continue
                moved = list(p)
                moved[j] -= 1
                moved[j2] += 1
                k2 = index[tuple(moved)]
                rho = naive_switch_rate(payoffs[p][j], payoffs[tuple(moved)][j2], alpha, n_pop)
                matrix[k, k2] = (p[j] / n_players) * rho / (n_strategies - 1)
        matrix[k, k] = 1.0 - matrix[k].sum()
    return matrix


def naive_stationary(matrix):
    """Left eigenvector of eigenvalue one, via a dense eigendecomposition."""
    eigvals, eigvecs = scipy.linalg.eig(matrix, left=True, right=False)
    idx = int(np.argmin(np.abs(eigvals - 1.0)))
    pi = np.real(eigvecs[:, idx])
    pi = np.abs(pi)
    return pi / pi.sum()
