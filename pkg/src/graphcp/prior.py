"""Changepoint priors: the graph-coupled Markov random field over indicator
columns, its full conditionals, and the lag model of the asynchronous
extension, including the exact cardinality of the feasible lag set.
"""

from __future__ import annotations

from itertools import product
from math import comb, log
from typing import Iterator, Sequence

from .core import ChangepointState, DependencyGraph, InvalidStateError, LaggedState


def log_mrf_prior_unnorm(state: ChangepointState, p_bar: float, graph: DependencyGraph) -> float:
    """Unnormalised log prior of a changepoint configuration.

    Sums, over time columns, p_bar times the number of active indicators plus
    the edge weight for every pair of neighbouring series sharing a
    changepoint in that column. The (intractable) log normalising constant is
    excluded throughout.
    """
    if state.L != graph.L:
        raise InvalidStateError("state and graph disagree on the number of series")
    total = p_bar * sum(len(t) for t in state.taus)
    sets = [set(t) for t in state.taus]
    for a, b, w in graph.edges:
        total += w * len(sets[a] & sets[b])
    return total


def log_full_conditional_prior(
    i: int, t: int, state: ChangepointState, p_bar: float, graph: DependencyGraph
) -> float:
    """Log-odds that series i has a changepoint at time t, conditional on all
    other indicators: p_bar plus the weights of neighbours active at t."""
    odds = p_bar
    for j, w in graph.adjacency[i]:
        if t in state.taus[j]:
            odds += w
    return odds


def log_window_prior(w: int, eta: float) -> float:
    """Geometric window prior with support {0, 1, 2, ...}."""
    if w < 0:
        raise ValueError("window must be nonnegative")
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    return log(eta) + w * log(1.0 - eta)


def lag_set_cardinality(w: int, k: int, tau: Sequence[int], T: int) -> int:
    """Number of feasible lag vectors for one series, computed exactly.

    A lag vector d in {0, ..., w}^k is feasible when the lagged positions
    tau_j + d_j stay strictly increasing and below T + 1. The count follows
    the alternating recursion Z(k) = sum_j (-1)^(k-j) Z(j-1) Q(j, k-j), where
    Q(j, l) counts weakly decreasing lagged tails and reduces to a single
    binomial coefficient. All arithmetic is exact integer arithmetic; the
    alternating sum is hopeless in floating point.
    """
    tau = tuple(int(v) for v in tau)
    if len(tau) != k:
        raise ValueError("k does not match the number of positions")
    if w < 0:
        raise ValueError("window must be nonnegative")
    for a, b in zip(tau, tau[1:]):
        if a >= b:
            raise ValueError("positions must be strictly increasing")
    if tau and (tau[0] < 2 or tau[-1] > T):
        raise ValueError("positions must lie in {2, ..., T}")
    if k == 0:
        return 1

    def q(j: int, l: int) -> int:
        gap = tau[j + l - 1] - tau[j - 1]
        if gap > w:
            return 0
        rho = min(w + 1, T + 1 - tau[j - 1]) - gap
        if rho <= 0:
            return 0
        return comb(rho + l, l + 1)

    z = [1] * (k + 1)
    for m in range(1, k + 1):
        z[m] = sum((-1) ** (m - j) * z[j - 1] * q(j, m - j) for j in range(1, m + 1))
    return z[k]


def enumerate_lag_vectors(w: int, tau: Sequence[int], T: int) -> Iterator[tuple[int, ...]]:
    """Brute-force enumeration of the feasible lag set, for oracles and for
    exact marginalisation on small instances."""
    tau = tuple(int(v) for v in tau)
    if not tau:
        yield ()
        return
    for d in product(range(w + 1), repeat=len(tau)):
        pos = [t + dd for t, dd in zip(tau, d)]
        if all(a < b for a, b in zip(pos, pos[1:])) and pos[-1] <= T:
            yield d


def log_joint_prior_lagged(
    lagged: LaggedState, p_bar: float, graph: DependencyGraph, T: int
) -> float:
    """Unnormalised log prior of (latent positions, lags): the field prior of
    the latent configuration minus the log cardinality of each series'
    feasible lag set (lags are uniform on that set)."""
    total = log_mrf_prior_unnorm(lagged.latent, p_bar, graph)
    for tau, w in zip(lagged.latent.taus, lagged.windows):
        if w > 0 and tau:
            total -= log(lag_set_cardinality(w, len(tau), tau, T))
    return total
