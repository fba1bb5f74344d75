"""Reversible-jump MCMC for graph-coupled changepoints.

One engine covers the synchronous model and the asynchronous (lagged)
extension; the synchronous case is the degenerate all-windows-zero state in
which every lag bookkeeping term collapses to zero. The parameter space is
augmented with per-column binary bonds over the graph edges; the connected
components they induce are proposed for joint birth/death and shift, in the
style of cluster algorithms for random fields. With the decoupling parameter
at zero every cluster is a singleton and the engine reduces to single-site
updating.

Acceptance ratios are exact ratios of the augmented joint density times
proposal ratios. Lag proposals are drawn from their full conditionals, so the
lag factors collapse to ratios of conditional normalisers; bond resampling
masses cancel against the matching auxiliary prior factors, leaving a
(1 - delta)-tempered interaction term for pairs straddling a moved cluster.

One seeded generator drives a chain. Draws are consumed in a fixed order per
move (documented in each move), which makes runs bit-reproducible for a fixed
seed.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass, field, replace
from math import exp, inf, log
from typing import Mapping, Sequence

import numpy as np

from .core import (
    AuxiliaryField,
    ChangepointState,
    ConfigurationError,
    DependencyGraph,
    Hyperparameters,
    InvalidStateError,
    LaggedState,
    SeriesPanel,
    WindowPrior,
)
from .likelihood import ObservationModel, log_segment_lik
from .prior import lag_set_cardinality, log_window_prior

MOVES = ("birth_death", "shift", "aux_update", "lag_update", "window_update")

_DEFAULT_WEIGHTS = {
    "birth_death": 0.4,
    "shift": 0.3,
    "aux_update": 0.2,
    "lag_update": 0.05,
    "window_update": 0.05,
}


@dataclass(frozen=True)
class SamplerConfig:
    """Chain length, move mixture and reproducibility knobs.

    ``move_weights`` defaults to the standard mixture with the mass of
    disabled lag/window moves folded into birth/death. ``rho`` is the
    geometric step parameter of the window random walk. ``init`` selects cold
    (no changepoints) or independent-fit initialisation, the latter seeding
    the chain with per-series Bayes estimates under the uncoupled model.
    """

    iterations: int = 50_000
    burn_in: int = 10_000
    thin: int = 1
    move_weights: Mapping[str, float] | None = None
    rho: float = 0.5
    seed: int = 0
    init: str = "cold"
    init_iterations: int = 2_000
    init_burn_in: int = 500

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0 or self.thin < 1:
            raise ConfigurationError("iterations, burn_in, thin out of range")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError("rho must lie in (0, 1)")
        if self.init not in ("cold", "independent-fit"):
            raise ConfigurationError(f"unknown init {self.init!r}")
        if self.init_iterations < 1 or self.init_burn_in < 0:
            raise ConfigurationError("init chain lengths out of range")
        if self.move_weights is not None:
            unknown = set(self.move_weights) - set(MOVES)
            if unknown:
                raise ConfigurationError(f"unknown moves {sorted(unknown)}")
            vals = [float(self.move_weights.get(m, 0.0)) for m in MOVES]
            if any(v < 0 for v in vals):
                raise ConfigurationError("move weights must be nonnegative")
            if abs(sum(vals) - 1.0) > 1e-9:
                raise ConfigurationError("move weights must sum to 1")


@dataclass
class ChainState:
    """Snapshot of the chain: lagged configuration, bond field and the cached
    per-series log-likelihood totals."""

    lagged: LaggedState
    aux: AuxiliaryField
    loglik: tuple[float, ...]


@dataclass
class PosteriorSample:
    """Recorded draws of a chain, run-length encoded over consecutive equal
    states. ``records`` holds (weight, snapshot) pairs where a snapshot is a
    per-series tuple of (derived positions, lags, window). Draw m corresponds
    to iteration ``first_iteration + m * thin``.
    """

    L: int
    T: int
    first_iteration: int
    thin: int
    n_draws: int
    records: list[tuple[int, tuple]]
    delta_trace: np.ndarray | None = None
    acceptance: dict | None = None
    seed: int | None = None
    config: SamplerConfig | None = None

    def series_states(self, i: int) -> dict[tuple[int, ...], int]:
        """Multiplicities of the distinct derived configurations of series i."""
        out: dict[tuple[int, ...], int] = {}
        for w, snap in self.records:
            tau = snap[i][0]
            out[tau] = out.get(tau, 0) + w
        return out

    def k_distribution(self, i: int) -> dict[int, float]:
        counts = self.series_states(i)
        dist: dict[int, float] = {}
        for tau, w in counts.items():
            dist[len(tau)] = dist.get(len(tau), 0.0) + w / self.n_draws
        return dist

    def position_marginals(self, i: int) -> np.ndarray:
        """P(series i has a changepoint at t) for t = 2..T."""
        out = np.zeros(self.T - 1)
        for tau, w in self.series_states(i).items():
            for t in tau:
                out[t - 2] += w
        return out / self.n_draws

    def mean_k(self, i: int) -> float:
        return sum(k * p for k, p in self.k_distribution(i).items())

    def iter_draws(self):
        """Expand the run-length encoding into (iteration, snapshot) pairs."""
        it = self.first_iteration
        for w, snap in self.records:
            for _ in range(w):
                yield it, snap
                it += self.thin


def sample_aux_field(
    state: ChangepointState,
    graph: DependencyGraph,
    delta: float,
    rng: np.random.Generator,
    T: int,
) -> AuxiliaryField:
    """Draw the bond field from its conditional given the latent indicators.

    Independently per column and edge, a bond activates with probability
    1 - exp(-delta * weight) when the two endpoint indicators are equal and
    never otherwise; with delta = 0 the field is empty and cluster updating
    degenerates to single-site updating.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    aux = AuxiliaryField.empty(graph, T, delta)
    if delta == 0.0 or aux.n_edges == 0:
        return aux
    S = np.zeros((graph.L, T + 1), dtype=np.uint8)
    for i, tau in enumerate(state.taus):
        S[i, list(tau)] = 1
    eq = S[aux.edge_a, 2:] == S[aux.edge_b, 2:]
    w = np.array([e[2] for e in graph.edges])
    p_bond = (1.0 - np.exp(-delta * w))[:, None] * eq
    aux.bonds[:, 2:] = rng.random(eq.shape) < p_bond
    return aux


def _components(L: int, pairs) -> list[list[int]]:
    parent = list(range(L))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for v in range(L):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def clusters_at(aux: AuxiliaryField, t: int, L: int | None = None) -> list[list[int]]:
    """Partition of the series indices induced by the bonds of column t:
    connected components, each sorted, ordered by smallest member."""
    if L is None:
        L = int(max(aux.edge_b.max(initial=-1), aux.edge_a.max(initial=-1))) + 1
    return _components(L, aux.pairs_at(t))


def _logsumexp(vals: Sequence[float]) -> float:
    m = max(vals)
    if m == -inf:
        return -inf
    return m + log(sum(exp(v - m) for v in vals))


@dataclass
class _FlipPlan:
    """Planned cluster birth/death at one column: per-member lag draws and the
    collapsed acceptance contribution."""

    t: int
    gamma: list[int]
    birth: bool
    log_ratio: float
    new_lags: list[int | None]
    loglik_delta: list[float]


class ChainEngine:
    """Mutable chain over (latent positions, lags, windows, bonds, delta).

    Per-iteration moves are methods; ``run`` drives the configured mixture
    and records thinned draws of the derived positions.
    """

    def __init__(
        self,
        panel: SeriesPanel,
        model: ObservationModel,
        graph: DependencyGraph,
        hyper: Hyperparameters,
        config: SamplerConfig,
        rng: np.random.Generator | None = None,
        initial: LaggedState | None = None,
    ):
        if graph.L != panel.L:
            raise ConfigurationError("graph and panel disagree on the number of series")
        self.panel = panel
        self.model = model
        self.graph = graph
        self.hyper = hyper
        self.config = config
        self.L = panel.L
        self.T = panel.T
        self.p_bar = hyper.p_bar
        self.cache = model.build_cache(panel)
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)

        self.adj = graph.adjacency
        edges = graph.edges
        self.edge_a = np.array([e[0] for e in edges], dtype=np.int64)
        self.edge_b = np.array([e[1] for e in edges], dtype=np.int64)
        self.edge_w = np.array([e[2] for e in edges])
        self.n_edges = len(edges)
        # edge ids incident to each node, for cluster-boundary bookkeeping
        self.edge_ids: list[list[int]] = [[] for _ in range(self.L)]
        for e in range(self.n_edges):
            self.edge_ids[int(self.edge_a[e])].append(e)
            self.edge_ids[int(self.edge_b[e])].append(e)

        wins = hyper.windows_for(self.L)
        self.win_mode = [wp.mode for wp in wins]
        self.win_fixed = [wp.w for wp in wins]
        self.win_eta = [wp.eta for wp in wins]
        self.geo_series = [i for i, m in enumerate(self.win_mode) if m == "geometric"]
        lag_possible = any(
            m == "geometric" or (m == "fixed" and wf > 0)
            for m, wf in zip(self.win_mode, self.win_fixed)
        )
        self.moves, self.move_cum = self._resolve_weights(lag_possible, bool(self.geo_series))

        # state
        self.tau: list[list[int]] = [[] for _ in range(self.L)]
        self.lags: list[list[int]] = [[] for _ in range(self.L)]
        self.der: list[list[int]] = [[] for _ in range(self.L)]
        self.w: list[int] = [
            self.win_fixed[i] if self.win_mode[i] == "fixed" else 0 for i in range(self.L)
        ]
        self.S = np.zeros((self.L, self.T + 1), dtype=np.uint8)
        self.u = np.zeros((self.n_edges, self.T + 1), dtype=bool)
        self.delta = 0.0
        self.col_count = np.zeros(self.T + 1, dtype=np.int64)
        self.loglik = [self._seg(i, 1, self.T + 1) for i in range(self.L)]
        self.counters = {
            m: {"proposed": 0, "accepted": 0, "infeasible": 0, "skipped": 0} for m in MOVES
        }
        if initial is not None:
            self._load_state(initial)

    # -- configuration ----------------------------------------------------

    def _resolve_weights(self, lag_possible: bool, window_unknown: bool):
        user = self.config.move_weights
        if user is None:
            weights = dict(_DEFAULT_WEIGHTS)
            if not lag_possible:
                weights["birth_death"] += weights.pop("lag_update")
                weights["lag_update"] = 0.0
            if not window_unknown:
                weights["birth_death"] += weights.pop("window_update")
                weights["window_update"] = 0.0
        else:
            weights = {m: float(user.get(m, 0.0)) for m in MOVES}
            if weights["lag_update"] > 0 and not lag_possible:
                raise ConfigurationError("lag moves require a nonzero window model")
            if weights["window_update"] > 0 and not window_unknown:
                raise ConfigurationError("window moves require a geometric window prior")
        names = [m for m in MOVES if weights.get(m, 0.0) > 0]
        probs = np.array([weights[m] for m in names])
        return names, np.cumsum(probs / probs.sum())

    def _load_state(self, lagged: LaggedState) -> None:
        if lagged.latent.L != self.L:
            raise ConfigurationError("initial state has wrong number of series")
        if lagged.latent.max_position() > self.T:
            raise InvalidStateError("initial position beyond T")
        for i in range(self.L):
            if self.win_mode[i] == "fixed" and lagged.windows[i] != self.win_fixed[i]:
                raise ConfigurationError("initial windows conflict with fixed window prior")
            if self.win_mode[i] == "zero" and lagged.windows[i] != 0:
                raise ConfigurationError("initial windows conflict with zero window prior")
            self.tau[i] = list(lagged.latent.taus[i])
            self.lags[i] = list(lagged.lags[i])
            self.der[i] = [t + d for t, d in zip(self.tau[i], self.lags[i])]
            self.w[i] = lagged.windows[i]
            if self.der[i] and self.der[i][-1] > self.T:
                raise InvalidStateError("derived position beyond T")
            self.S[i, self.tau[i]] = 1
            self.loglik[i] = self._series_loglik(i)
        np.add.at(self.col_count, [t for row in self.tau for t in row], 1)

    # -- basic helpers -----------------------------------------------------

    def _seg(self, i: int, t1: int, t2: int) -> float:
        return self.model.segment_loglik(self.cache, i, t1, t2)

    def _series_loglik(self, i: int) -> float:
        bounds = [1] + self.der[i] + [self.T + 1]
        return sum(self._seg(i, a, b) for a, b in zip(bounds, bounds[1:]))

    def _neighbors_der(self, i: int, j: int, skip: bool) -> tuple[int, int]:
        """Derived positions flanking slot j of series i; ``skip`` excludes the
        changepoint currently at slot j (for death / re-draw)."""
        der = self.der[i]
        prev_der = der[j - 1] if j > 0 else 1
        nxt = j + 1 if skip else j
        next_der = der[nxt] if nxt < len(der) else self.T + 1
        return prev_der, next_der

    def _lag_scan(self, i, base, prev_der, next_der, w):
        """Feasible lags and their two-segment log likelihoods around a
        changepoint with latent position ``base``."""
        lo = max(0, prev_der - base + 1)
        hi = min(w, next_der - base - 1)
        if lo > hi:
            return lo, None
        lls = [
            self._seg(i, prev_der, base + d) + self._seg(i, base + d, next_der)
            for d in range(lo, hi + 1)
        ]
        return lo, lls

    def _sample_index(self, lls: list[float]) -> int:
        """Draw an index proportional to exp(lls); one uniform consumed."""
        m = max(lls)
        ws = [exp(v - m) for v in lls]
        r = self.rng.random() * sum(ws)
        acc = 0.0
        for idx, wv in enumerate(ws):
            acc += wv
            if r < acc:
                return idx
        return len(ws) - 1

    def _log_card(self, i: int, tau: Sequence[int]) -> float:
        if self.w[i] == 0 or not tau:
            return 0.0
        return log(lag_set_cardinality(self.w[i], len(tau), tau, self.T))

    def _clusters(self, t: int) -> list[list[int]]:
        if self.delta == 0.0 or self.n_edges == 0:
            return [[i] for i in range(self.L)]
        ids = np.flatnonzero(self.u[:, t])
        if len(ids) == 0:
            return [[i] for i in range(self.L)]
        return _components(
            self.L, ((int(self.edge_a[e]), int(self.edge_b[e])) for e in ids)
        )

    # -- birth / death -----------------------------------------------------

    def _plan_flip(self, gamma: list[int], t: int) -> _FlipPlan | None:
        """Joint birth (if the cluster is inactive at t) or death of the
        cluster's latent changepoints at column t. Returns None when some
        member admits no feasible lag; the caller counts that as an automatic
        rejection."""
        birth = self.S[gamma[0], t] == 0
        log_ratio = 0.0
        new_lags: list[int | None] = []
        ll_delta: list[float] = []
        for i in gamma:
            w = self.w[i]
            if birth:
                j = bisect_left(self.tau[i], t)
                prev_der, next_der = self._neighbors_der(i, j, skip=False)
                lo, lls = self._lag_scan(i, t, prev_der, next_der, w)
                if lls is None:
                    return None
                old = self._seg(i, prev_der, next_der)
                idx = self._sample_index(lls)
                log_ratio += _logsumexp(lls) - old
                if w > 0:
                    cur = self.tau[i]
                    log_ratio += self._log_card(i, cur)
                    log_ratio -= self._log_card(i, cur[:j] + [t] + cur[j:])
                new_lags.append(lo + idx)
                ll_delta.append(lls[idx] - old)
            else:
                j = bisect_left(self.tau[i], t)
                prev_der, next_der = self._neighbors_der(i, j, skip=True)
                cur_pos = self.der[i][j]
                merged = self._seg(i, prev_der, next_der)
                lo, lls = self._lag_scan(i, t, prev_der, next_der, w)
                old_pair = self._seg(i, prev_der, cur_pos) + self._seg(i, cur_pos, next_der)
                log_ratio += merged - _logsumexp(lls)
                if w > 0:
                    cur = self.tau[i]
                    log_ratio += self._log_card(i, cur)
                    log_ratio -= self._log_card(i, cur[:j] + cur[j + 1 :])
                new_lags.append(None)
                ll_delta.append(merged - old_pair)
        log_ratio += self._flip_prior_delta(gamma, t, birth)
        return _FlipPlan(t, gamma, birth, log_ratio, new_lags, ll_delta)

    def _flip_prior_delta(self, gamma: list[int], t: int, birth: bool) -> float:
        """Field-prior energy change of flipping the cluster at column t plus
        the bond-compatibility change of boundary pairs (all of which carry
        inactive bonds): breaking endpoint equality multiplies the joint by
        exp(delta * weight), creating it by exp(-delta * weight)."""
        sign = 1.0 if birth else -1.0
        gset = set(gamma)
        total = sign * self.p_bar * len(gamma)
        delta = self.delta
        for i in gamma:
            si = self.S[i, t]
            for i2, lam in self.adj[i]:
                if i2 in gset:
                    if i2 > i:
                        total += sign * lam
                else:
                    s2 = self.S[i2, t]
                    total += sign * lam * s2
                    if delta > 0.0:
                        total += delta * lam * (1.0 if si == s2 else -1.0)
        return total

    def _apply_flip(self, plan: _FlipPlan) -> None:
        t = plan.t
        for i, d_new, dll in zip(plan.gamma, plan.new_lags, plan.loglik_delta):
            j = bisect_left(self.tau[i], t)
            if plan.birth:
                self.tau[i].insert(j, t)
                self.lags[i].insert(j, d_new)
                self.der[i].insert(j, t + d_new)
                self.S[i, t] = 1
                self.col_count[t] += 1
            else:
                self.tau[i].pop(j)
                self.lags[i].pop(j)
                self.der[i].pop(j)
                self.S[i, t] = 0
                self.col_count[t] -= 1
            self.loglik[i] += dll

    def move_birth_death(self, forced: tuple[int, list[int]] | None = None) -> bool:
        """Cluster birth/death. Draws, in order: t' uniform on {2..T}, the
        cluster index, one uniform per member lag draw (birth only), the
        acceptance uniform."""
        c = self.counters["birth_death"]
        c["proposed"] += 1
        if forced is None:
            t = 2 + int(self.rng.integers(self.T - 1))
            comps = self._clusters(t)
            gamma = comps[int(self.rng.integers(len(comps)))]
        else:
            t, gamma = forced
        plan = self._plan_flip(list(gamma), t)
        if plan is None:
            c["infeasible"] += 1
            return False
        if plan.log_ratio >= 0 or self.rng.random() < exp(plan.log_ratio):
            self._apply_flip(plan)
            c["accepted"] += 1
            return True
        return False

    # -- shift -------------------------------------------------------------

    def move_shift(self) -> bool:
        """Cluster shift. Draws, in order: the source column among active
        columns, the active-cluster index, the target column within the
        latent window intersection, one uniform per member lag re-draw, the
        acceptance uniform, then Bernoulli draws for the resampled boundary
        bonds of the accepted state."""
        c = self.counters["shift"]
        c["proposed"] += 1
        active = np.flatnonzero(self.col_count[2:]) + 2
        if len(active) == 0:
            c["skipped"] += 1
            return False
        t = int(active[int(self.rng.integers(len(active)))])
        comps = self._clusters(t)
        act = [g for g in comps if self.S[g[0], t]]
        gamma = act[int(self.rng.integers(len(act)))]
        gset = set(gamma)

        lo_t, hi_t = 2, self.T
        slots = []
        for i in gamma:
            j = bisect_left(self.tau[i], t)
            slots.append(j)
            lo_t = max(lo_t, (self.tau[i][j - 1] if j > 0 else 1) + 1)
            hi_t = min(
                hi_t, (self.tau[i][j + 1] if j + 1 < len(self.tau[i]) else self.T + 1) - 1
            )
        tp = lo_t + int(self.rng.integers(hi_t - lo_t + 1))

        if tp == t:
            # identity shift: refresh the member lags from their conditionals
            for i, j in zip(gamma, slots):
                self._gibbs_lag(i, j)
            c["accepted"] += 1
            return True

        log_ratio = 0.0
        new_lags = []
        ll_deltas = []
        for i, j in zip(gamma, slots):
            prev_der, next_der = self._neighbors_der(i, j, skip=True)
            w = self.w[i]
            lo_old, lls_old = self._lag_scan(i, t, prev_der, next_der, w)
            lo_new, lls_new = self._lag_scan(i, tp, prev_der, next_der, w)
            idx = self._sample_index(lls_new)
            cur_pos = self.der[i][j]
            old_pair = self._seg(i, prev_der, cur_pos) + self._seg(i, cur_pos, next_der)
            log_ratio += _logsumexp(lls_new) - _logsumexp(lls_old)
            new_lags.append(lo_new + idx)
            ll_deltas.append(lls_new[idx] - old_pair)

        # boundary interaction, tempered by the decoupling parameter
        one_minus_delta = 1.0 - self.delta
        for i in gamma:
            for i2, lam in self.adj[i]:
                if i2 not in gset:
                    log_ratio += one_minus_delta * lam * (
                        float(self.S[i2, tp]) - float(self.S[i2, t])
                    )

        # selection probabilities: active-column count and active-cluster
        # count, before and after the move
        n_active_a = len(active)
        n_active_b = n_active_a - (self.col_count[t] == len(gamma)) + (self.col_count[tp] == 0)
        outside_pairs = [
            (int(self.edge_a[e]), int(self.edge_b[e]))
            for e in np.flatnonzero(self.u[:, tp])
            if int(self.edge_a[e]) not in gset and int(self.edge_b[e]) not in gset
        ]
        n_act_clusters_b = 1 + sum(
            1 for g in _components(self.L, outside_pairs) if g[0] not in gset and self.S[g[0], tp]
        )
        log_ratio += log(n_active_a) - log(n_active_b)
        log_ratio += log(len(act)) - log(n_act_clusters_b)

        if not (log_ratio >= 0 or self.rng.random() < exp(log_ratio)):
            return False

        # apply: swap in-cluster bonds between the columns, clear bonds from
        # the cluster to outsiders at the target column, resample bonds to
        # inactive outsiders at the source column
        for i in gamma:
            for e in self.edge_ids[i]:
                other = int(self.edge_b[e]) if int(self.edge_a[e]) == i else int(self.edge_a[e])
                if other in gset:
                    if other > i:
                        self.u[e, t], self.u[e, tp] = self.u[e, tp], self.u[e, t]
                else:
                    self.u[e, tp] = False
                    if self.S[other, t] == 0:
                        p_bond = 1.0 - exp(-self.delta * self.edge_w[e])
                        self.u[e, t] = self.rng.random() < p_bond
        for i, j, d_new, dll in zip(gamma, slots, new_lags, ll_deltas):
            self.S[i, t] = 0
            self.S[i, tp] = 1
            self.tau[i][j] = tp
            self.lags[i][j] = d_new
            self.der[i][j] = tp + d_new
            self.loglik[i] += dll
        self.col_count[t] -= len(gamma)
        self.col_count[tp] += len(gamma)
        c["accepted"] += 1
        return True

    # -- Gibbs updates -----------------------------------------------------

    def _gibbs_lag(self, i: int, j: int) -> None:
        """Exact draw of lag (i, j) from its full conditional; one uniform."""
        base = self.tau[i][j]
        prev_der, next_der = self._neighbors_der(i, j, skip=True)
        lo, lls = self._lag_scan(i, base, prev_der, next_der, self.w[i])
        idx = self._sample_index(lls)
        cur_pos = self.der[i][j]
        old_pair = self._seg(i, prev_der, cur_pos) + self._seg(i, cur_pos, next_der)
        self.lags[i][j] = lo + idx
        self.der[i][j] = base + lo + idx
        self.loglik[i] += lls[idx] - old_pair

    def move_lag_update(self) -> bool:
        """Gibbs refresh of one uniformly chosen changepoint's lag."""
        c = self.counters["lag_update"]
        c["proposed"] += 1
        total = sum(len(row) for row in self.tau)
        if total == 0:
            c["skipped"] += 1
            return False
        r = int(self.rng.integers(total))
        for i in range(self.L):
            if r < len(self.tau[i]):
                self._gibbs_lag(i, r)
                break
            r -= len(self.tau[i])
        c["accepted"] += 1
        return True

    def move_aux_update(self) -> bool:
        """Joint exact draw of (delta, bonds) from their conditional given the
        latent configuration: delta from its prior, bonds column-wise from
        the bond conditional. Always accepted."""
        c = self.counters["aux_update"]
        c["proposed"] += 1
        dp = self.hyper.delta_prior
        if self.rng.random() < dp.spike:
            self.delta = 0.0
        else:
            self.delta = float(self.rng.beta(dp.a, dp.b))
        if self.delta == 0.0 or self.n_edges == 0:
            self.u[:] = False
        else:
            eq = self.S[self.edge_a, 2:] == self.S[self.edge_b, 2:]
            p_bond = (1.0 - np.exp(-self.delta * self.edge_w))[:, None] * eq
            self.u[:, 2:] = self.rng.random(eq.shape) < p_bond
        c["accepted"] += 1
        return True

    # -- window update -----------------------------------------------------

    def _walk_mass(self, a: int, b: int) -> float:
        """Proposal mass of moving the window from a to b under the
        reflected geometric random walk."""
        rho = self.config.rho

        def g(s: int) -> float:
            return rho * (1.0 - rho) ** (s - 1)

        m = 0.0
        if b > a:
            m += 0.5 * g(b - a)
        for sigma in {a - b, a + b}:
            if sigma >= 1:
                m += 0.5 * g(sigma)
        return m

    def move_window_update(self) -> bool:
        """Random-walk update of one geometric-prior window with a sequential
        re-draw of that series' lags from their conditionals. Draws, in
        order: the series, the geometric step, the direction uniform, one
        uniform per lag re-draw, the acceptance uniform."""
        c = self.counters["window_update"]
        c["proposed"] += 1
        if not self.geo_series:
            c["skipped"] += 1
            return False
        i = self.geo_series[int(self.rng.integers(len(self.geo_series)))]
        sigma = int(self.rng.geometric(self.config.rho))
        up = self.rng.random() < 0.5
        w_old = self.w[i]
        w_new = w_old + sigma if up else abs(w_old - sigma)

        tau = self.tau[i]
        d_old = self.lags[i]
        k = len(tau)
        d_new: list[int] = []
        log_fwd = 0.0
        log_rev = 0.0
        ll_delta = 0.0
        feasible = True
        for j in range(k):
            base = tau[j]
            prev_new = (tau[j - 1] + d_new[j - 1]) if j > 0 else 1
            next_old = (tau[j + 1] + d_old[j + 1]) if j + 1 < k else self.T + 1
            lo, lls = self._lag_scan(i, base, prev_new, next_old, w_new)
            idx = self._sample_index(lls)
            log_fwd += lls[idx] - _logsumexp(lls)
            old_pair = self._seg(i, prev_new, base + d_old[j]) + self._seg(
                i, base + d_old[j], next_old
            )
            ll_delta += lls[idx] - old_pair
            d_new.append(lo + idx)
        for j in range(k):
            base = tau[j]
            prev_old = (tau[j - 1] + d_old[j - 1]) if j > 0 else 1
            next_new = (tau[j + 1] + d_new[j + 1]) if j + 1 < k else self.T + 1
            lo, lls = self._lag_scan(i, base, prev_old, next_new, w_old)
            if lls is None or not lo <= d_old[j] <= lo + len(lls) - 1:
                feasible = False
                break
            log_rev += lls[d_old[j] - lo] - _logsumexp(lls)

        if not feasible:
            c["infeasible"] += 1
            return False
        eta = self.win_eta[i]
        log_ratio = ll_delta
        log_ratio += log_window_prior(w_new, eta) - log_window_prior(w_old, eta)
        if k > 0:
            if w_old > 0:
                log_ratio += log(lag_set_cardinality(w_old, k, tau, self.T))
            if w_new > 0:
                log_ratio -= log(lag_set_cardinality(w_new, k, tau, self.T))
        log_ratio += log(self._walk_mass(w_new, w_old)) - log(self._walk_mass(w_old, w_new))
        log_ratio += log_rev - log_fwd
        if log_ratio >= 0 or self.rng.random() < exp(log_ratio):
            self.w[i] = w_new
            self.lags[i] = d_new
            self.der[i] = [b + d for b, d in zip(tau, d_new)]
            self.loglik[i] += ll_delta
            c["accepted"] += 1
            return True
        return False

    # -- driving -----------------------------------------------------------

    def step(self) -> None:
        r = self.rng.random()
        idx = int(np.searchsorted(self.move_cum, r, side="right"))
        idx = min(idx, len(self.moves) - 1)
        name = self.moves[idx]
        getattr(self, f"move_{name}")()

    def snapshot(self) -> ChainState:
        latent = ChangepointState(tuple(tuple(row) for row in self.tau))
        lagged = LaggedState(
            latent, tuple(tuple(row) for row in self.lags), tuple(self.w)
        )
        aux = AuxiliaryField(self.edge_a, self.edge_b, self.u.copy(), self.delta)
        return ChainState(lagged, aux, tuple(self.loglik))

    def _record_tuple(self) -> tuple:
        return tuple(
            (tuple(self.der[i]), tuple(self.lags[i]), self.w[i]) for i in range(self.L)
        )

    def run(self) -> PosteriorSample:
        cfg = self.config
        records: list[tuple[int, tuple]] = []
        deltas = []
        last = None
        n_draws = 0
        total = cfg.burn_in + cfg.iterations
        for it in range(total):
            self.step()
            if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
                snap = self._record_tuple()
                if records and snap == last:
                    records[-1] = (records[-1][0] + 1, last)
                else:
                    records.append((1, snap))
                    last = snap
                deltas.append(self.delta)
                n_draws += 1
        return PosteriorSample(
            L=self.L,
            T=self.T,
            first_iteration=cfg.burn_in,
            thin=cfg.thin,
            n_draws=n_draws,
            records=records,
            delta_trace=np.array(deltas),
            acceptance={m: dict(v) for m, v in self.counters.items()},
            seed=cfg.seed,
            config=cfg,
        )

    def recomputed_loglik(self, i: int) -> float:
        """From-scratch series log likelihood, for coherence checks."""
        return self._series_loglik(i)


def _independent_fit_state(
    panel: SeriesPanel,
    model: ObservationModel,
    hyper: Hyperparameters,
    config: SamplerConfig,
    seed_seq: np.random.SeedSequence,
) -> LaggedState:
    """Per-series Bayes estimates under the uncoupled model, used to start the
    joint chain on the strong signals. Lags, windows and bonds start at zero
    (fixed windows keep their fixed value)."""
    from .estimator import bayes_estimate

    taus = []
    children = seed_seq.spawn(panel.L)
    single_cfg = SamplerConfig(
        iterations=config.init_iterations,
        burn_in=config.init_burn_in,
        thin=1,
        move_weights={"birth_death": 0.6, "shift": 0.4},
        seed=config.seed,
    )
    single_hyper = Hyperparameters(
        p_bar=hyper.p_bar,
        delta_prior=hyper.delta_prior,
        window_prior=WindowPrior(mode="zero"),
        gamma_loss=hyper.gamma_loss,
        varpi=hyper.varpi,
    )
    for i in range(panel.L):
        engine = ChainEngine(
            panel.series(i),
            model,
            DependencyGraph.empty(1),
            single_hyper,
            single_cfg,
            rng=np.random.Generator(np.random.PCG64(children[i])),
        )
        sample = engine.run()
        _, tau = bayes_estimate(sample, 0, hyper.gamma_loss)
        taus.append(tau)
    latent = ChangepointState(tuple(taus))
    wins = hyper.windows_for(panel.L)
    windows = tuple(wp.w if wp.mode == "fixed" else 0 for wp in wins)
    zero_lags = tuple(tuple(0 for _ in t) for t in latent.taus)
    return LaggedState(latent, zero_lags, windows)


def run_chain(
    panel: SeriesPanel,
    model: ObservationModel,
    graph: DependencyGraph,
    hyper: Hyperparameters,
    config: SamplerConfig,
) -> PosteriorSample:
    """Run one chain of the configured move mixture and return the thinned
    post-burn-in draws. Bit-reproducible for a fixed seed: the main chain and
    any initialisation chains derive their generators from a single seed
    sequence in a fixed order."""
    seed_seq = np.random.SeedSequence(config.seed)
    main_seq, init_seq = seed_seq.spawn(2)
    initial = None
    if config.init == "independent-fit":
        initial = _independent_fit_state(panel, model, hyper, config, init_seq)
    engine = ChainEngine(
        panel,
        model,
        graph,
        hyper,
        config,
        rng=np.random.Generator(np.random.PCG64(main_seq)),
        initial=initial,
    )
    return engine.run()
