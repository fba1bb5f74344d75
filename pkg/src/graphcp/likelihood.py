"""Marginal segment likelihoods under conjugate observation families.

Each family integrates its segment parameter out in closed form; per-series
prefix sums of the sufficient statistics make any segment value an O(1)
lookup after O(T) preprocessing. Segment [t1, t2) covers the time points
t1, ..., t2 - 1 (1-based).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log

import numpy as np
from scipy.special import gammaln

from .core import ChangepointState, InvalidStateError, SeriesPanel


@dataclass(frozen=True)
class SegmentCache:
    """Per-series prefix sums; ``prefix[i, t]`` accumulates times 1..t.

    For count panels ``sums`` has shape (L, T+1) and for vector panels
    (L, T+1, M); ``log_norm`` accumulates the per-observation combinatorial
    term (log x! for counts, minus the log multinomial coefficient for
    vectors, with sign folded so that subtraction applies it directly).
    """

    sums: np.ndarray
    log_norm: np.ndarray

    def segment_sum(self, i: int, t1: int, t2: int):
        return self.sums[i, t2 - 1] - self.sums[i, t1 - 1]


class PoissonGamma:
    """Poisson observations with a Gamma(shape, rate) segment parameter.

    The marginal likelihood of n observations summing to S is
    exp(shape*log(rate) - lgamma(shape)) * Gamma(shape + S)
    / (rate + n)^(shape + S) / prod_t x_t!.
    """

    family = "poisson_gamma"

    def __init__(self, shape: float, rate: float):
        if shape <= 0 or rate <= 0:
            raise ValueError("shape and rate must be positive")
        self.shape = float(shape)
        self.rate = float(rate)
        self._norm = self.shape * log(self.rate) - lgamma(self.shape)

    def build_cache(self, panel: SeriesPanel) -> SegmentCache:
        if panel.kind != "count":
            raise InvalidStateError("PoissonGamma requires a count panel")
        x = panel.values
        L, T = x.shape
        sums = np.zeros((L, T + 1), dtype=np.int64)
        np.cumsum(x, axis=1, out=sums[:, 1:])
        log_norm = np.zeros((L, T + 1))
        np.cumsum(gammaln(x + 1.0), axis=1, out=log_norm[:, 1:])
        return SegmentCache(sums, log_norm)

    def segment_loglik(self, cache: SegmentCache, i: int, t1: int, t2: int) -> float:
        if t1 >= t2:
            raise ValueError(f"empty segment [{t1}, {t2})")
        n = t2 - t1
        s = float(cache.sums[i, t2 - 1] - cache.sums[i, t1 - 1])
        lf = cache.log_norm[i, t2 - 1] - cache.log_norm[i, t1 - 1]
        a = self.shape + s
        return self._norm + lgamma(a) - a * log(self.rate + n) - lf


class MultinomialDirichlet:
    """Multinomial observations with a Dirichlet(alphas) probability parameter.

    The marginal likelihood of a segment with per-category totals S is
    (prod_t multinomial coefficient) * B(alphas + S) / B(alphas), with B the
    multivariate beta function.
    """

    family = "multinomial_dirichlet"

    def __init__(self, alphas):
        a = np.asarray(alphas, dtype=np.float64)
        if a.ndim != 1 or a.size < 1 or np.any(a <= 0):
            raise ValueError("alphas must be a vector of positive reals")
        self.alphas = a
        self.alpha_total = float(a.sum())
        self._log_beta_prior = float(gammaln(a).sum() - gammaln(self.alpha_total))

    def build_cache(self, panel: SeriesPanel) -> SegmentCache:
        if panel.kind != "vector":
            raise InvalidStateError("MultinomialDirichlet requires a vector panel")
        if panel.M != self.alphas.size:
            raise InvalidStateError("alphas length does not match panel categories")
        x = panel.values
        L, T, M = x.shape
        sums = np.zeros((L, T + 1, M), dtype=np.int64)
        np.cumsum(x, axis=1, out=sums[:, 1:, :])
        # minus log multinomial coefficient per time point
        per_t = gammaln(x + 1.0).sum(axis=2) - gammaln(x.sum(axis=2) + 1.0)
        log_norm = np.zeros((L, T + 1))
        np.cumsum(per_t, axis=1, out=log_norm[:, 1:])
        return SegmentCache(sums, log_norm)

    def segment_loglik(self, cache: SegmentCache, i: int, t1: int, t2: int) -> float:
        if t1 >= t2:
            raise ValueError(f"empty segment [{t1}, {t2})")
        s = cache.sums[i, t2 - 1] - cache.sums[i, t1 - 1]
        coeff = cache.log_norm[i, t2 - 1] - cache.log_norm[i, t1 - 1]
        n_tot = float(s.sum())
        log_beta_post = float(gammaln(self.alphas + s).sum()) - lgamma(self.alpha_total + n_tot)
        return -coeff + log_beta_post - self._log_beta_prior


ObservationModel = PoissonGamma | MultinomialDirichlet


def log_segment_lik(model: ObservationModel, cache: SegmentCache, i: int, t1: int, t2: int) -> float:
    """Log marginal likelihood of segment [t1, t2) of series i."""
    return model.segment_loglik(cache, i, t1, t2)


def log_lik_full(model: ObservationModel, cache: SegmentCache, state: ChangepointState, T: int) -> float:
    """Log marginal likelihood of the whole panel given the changepoints."""
    if state.max_position() > T:
        raise InvalidStateError("changepoint position beyond T")
    total = 0.0
    for i, tau in enumerate(state.taus):
        bounds = (1,) + tau + (T + 1,)
        for t1, t2 in zip(bounds, bounds[1:]):
            total += model.segment_loglik(cache, i, t1, t2)
    return total
