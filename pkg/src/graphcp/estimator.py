"""Point estimation from a posterior sample: the matching-based changepoint
loss and the Bayes estimate minimising estimated expected posterior loss,
plus empirical marginal summaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


def matching_loss(est: Sequence[int], truth: Sequence[int], gamma: float) -> float:
    """Distance between two changepoint configurations of one series.

    Both configurations are augmented with a fixed index-0 vertex at position
    1 and matched completely across the two sides; each pairwise weight is the
    positional distance capped at gamma, so matching beyond gamma costs the
    same as leaving a changepoint unmatched. The returned loss is gamma times
    the count difference plus the total weight of a minimum-weight maximum
    matching, found by solving the rectangular assignment problem. Symmetric
    in its arguments.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    a = np.asarray((1,) + tuple(est), dtype=np.float64)
    b = np.asarray((1,) + tuple(truth), dtype=np.float64)
    cost = np.minimum(gamma, np.abs(a[:, None] - b[None, :]))
    if cost.shape[0] > cost.shape[1]:
        cost = cost.T
    rows, cols = linear_sum_assignment(cost)
    return gamma * abs(len(est) - len(truth)) + float(cost[rows, cols].sum())


def bayes_estimate(sample, series: int, gamma: float) -> tuple[int, tuple[int, ...]]:
    """Drawn configuration minimising the estimated expected posterior loss.

    The search space is the set of distinct configurations drawn for the
    series; ties break towards fewer changepoints, then lexicographically
    smaller positions. Returns (k_hat, tau_hat).
    """
    counts = sample.series_states(series)
    if not counts:
        raise ValueError("empty posterior sample")
    states = sorted(counts)
    best = None
    for cand in states:
        expected = sum(w * matching_loss(cand, s, gamma) for s, w in counts.items())
        key = (expected, len(cand), cand)
        if best is None or key < best:
            best = key
    return len(best[2]), best[2]


@dataclass(frozen=True)
class MarginalSummaries:
    """Empirical posterior marginals: ``k_probs[i, m]`` estimates
    P(k_i = m) and ``position_probs[i, t - 2]`` estimates P(series i has a
    changepoint at time t), for t = 2..T."""

    k_probs: np.ndarray
    position_probs: np.ndarray


def marginal_summaries(sample) -> MarginalSummaries:
    """Frequency tables over the stored draws; each k row sums to one."""
    L, T = sample.L, sample.T
    total = sample.n_draws
    if total == 0:
        raise ValueError("empty posterior sample")
    kmax = 0
    per_series = []
    for i in range(L):
        counts = sample.series_states(i)
        per_series.append(counts)
        kmax = max(kmax, max((len(s) for s in counts), default=0))
    k_probs = np.zeros((L, kmax + 1))
    pos_probs = np.zeros((L, T - 1))
    for i, counts in enumerate(per_series):
        for state, w in counts.items():
            k_probs[i, len(state)] += w
            for t in state:
                pos_probs[i, t - 2] += w
    k_probs /= total
    pos_probs /= total
    return MarginalSummaries(k_probs, pos_probs)


def expected_loss(sample, series: int, reference: Sequence[int], gamma: float) -> float:
    """Posterior expected matching loss of the drawn configurations against a
    fixed reference configuration (for example the simulation truth)."""
    counts = sample.series_states(series)
    total = sample.n_draws
    if total == 0:
        raise ValueError("empty posterior sample")
    ref = tuple(reference)
    return sum(w * matching_loss(s, ref, gamma) for s, w in counts.items()) / total
