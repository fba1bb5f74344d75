"""Shared domain types: series panels, changepoint configurations, lagged
configurations, dependency graphs, hyperparameters and the auxiliary bond field.

Time is discrete and 1-based: observations live at t = 1, ..., T and
changepoints at t in {2, ..., T}. A changepoint at t starts a new segment at t,
so segment j of series i covers the time points tau_{j-1}, ..., tau_j - 1 with
the conventions tau_0 = 1 and tau_{k+1} = T + 1.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np


class InvalidStateError(ValueError):
    """A changepoint configuration violates ordering or range constraints."""


class InvalidLagError(ValueError):
    """A lag vector breaks monotonicity of the derived changepoint positions."""


class ConfigurationError(ValueError):
    """A sampler or hyperparameter configuration is inconsistent."""


class IngestionError(ValueError):
    """An input file failed validation."""


# ---------------------------------------------------------------------------
# Observed data


@dataclass(frozen=True)
class SeriesPanel:
    """L time series of common length T.

    ``values`` has shape (L, T) for count data ("count" kind) or (L, T, M)
    for per-time count vectors over M shared categories ("vector" kind).
    ``categories`` optionally carries category labels for vector panels so
    file round trips are lossless.
    """

    values: np.ndarray
    kind: str = "count"
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.values)
        if self.kind == "count":
            if arr.ndim != 2:
                raise InvalidStateError("count panel requires a (L, T) array")
        elif self.kind == "vector":
            if arr.ndim != 3:
                raise InvalidStateError("vector panel requires a (L, T, M) array")
            if arr.shape[2] < 1:
                raise InvalidStateError("vector panel needs at least one category")
            if self.categories is not None and len(self.categories) != arr.shape[2]:
                raise InvalidStateError("category labels do not match M")
        else:
            raise InvalidStateError(f"unknown panel kind {self.kind!r}")
        if arr.shape[1] < 2:
            raise InvalidStateError("panel length must be at least 2")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.floor(arr)):
                raise InvalidStateError("panel cells must be integers")
            arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise InvalidStateError("panel cells must be nonnegative")
        arr = np.ascontiguousarray(arr, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def L(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @property
    def M(self) -> int:
        if self.kind != "vector":
            raise InvalidStateError("count panels have no category dimension")
        return self.values.shape[2]

    def series(self, i: int) -> "SeriesPanel":
        """Single-series view, used when fitting series independently."""
        return SeriesPanel(self.values[i : i + 1], kind=self.kind, categories=self.categories)


# ---------------------------------------------------------------------------
# Changepoint configurations


def _validate_positions(tau: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(v) for v in tau)
    for a, b in zip(out, out[1:]):
        if a >= b:
            raise InvalidStateError(f"positions must be strictly increasing, got {out}")
    if out and out[0] < 2:
        raise InvalidStateError(f"positions must be at least 2, got {out}")
    return out


@dataclass(frozen=True)
class ChangepointState:
    """Ordered changepoint positions per series, tau_i in {2, ..., T}."""

    taus: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(_validate_positions(t) for t in self.taus))

    @property
    def L(self) -> int:
        return len(self.taus)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.taus)

    def max_position(self) -> int:
        return max((t[-1] for t in self.taus if t), default=0)


def to_matrix(state: ChangepointState, T: int) -> np.ndarray:
    """Binary indicator matrix of shape (L, T-1); column j corresponds to t = j + 2.

    Boundary indicators at t = 0 and t = T + 1 are a notational convention of
    the segment bookkeeping and are never materialised here.
    """
    if T < 2:
        raise InvalidStateError("T must be at least 2")
    if state.max_position() > T:
        raise InvalidStateError("changepoint position beyond T")
    S = np.zeros((state.L, T - 1), dtype=np.uint8)
    for i, tau in enumerate(state.taus):
        for t in tau:
            S[i, t - 2] = 1
    return S


def from_matrix(S: np.ndarray) -> ChangepointState:
    """Inverse of :func:`to_matrix`; column j of ``S`` is time t = j + 2."""
    S = np.asarray(S)
    taus = tuple(tuple(int(j) + 2 for j in np.flatnonzero(row)) for row in S)
    return ChangepointState(taus)


def _derive_series(tau: Sequence[int], lags: Sequence[int]) -> tuple[int, ...]:
    if len(tau) != len(lags):
        raise InvalidLagError("one lag per latent changepoint required")
    out = tuple(int(t) + int(d) for t, d in zip(tau, lags))
    for a, b in zip(out, out[1:]):
        if a >= b:
            raise InvalidLagError(f"lags break ordering: derived positions {out}")
    return out


@dataclass(frozen=True)
class LaggedState:
    """Latent changepoints plus per-changepoint lags bounded by per-series windows.

    Derived positions are tau_{i,j} = latent_{i,j} + lag_{i,j} and must remain
    strictly increasing; with all windows zero the derived positions coincide
    with the latent ones.
    """

    latent: ChangepointState
    lags: tuple[tuple[int, ...], ...]
    windows: tuple[int, ...]

    def __post_init__(self):
        lags = tuple(tuple(int(d) for d in row) for row in self.lags)
        windows = tuple(int(w) for w in self.windows)
        if len(lags) != self.latent.L or len(windows) != self.latent.L:
            raise InvalidLagError("lags and windows must have one entry per series")
        for i, (tau, drow, w) in enumerate(zip(self.latent.taus, lags, windows)):
            if w < 0:
                raise InvalidLagError(f"window for series {i} is negative")
            if any(d < 0 or d > w for d in drow):
                raise InvalidLagError(f"lag outside [0, {w}] for series {i}")
            _derive_series(tau, drow)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "windows", windows)

    @classmethod
    def synchronous(cls, state: ChangepointState) -> "LaggedState":
        zero = tuple(tuple(0 for _ in t) for t in state.taus)
        return cls(state, zero, tuple(0 for _ in state.taus))


def derive_positions(lagged: LaggedState) -> ChangepointState:
    """Componentwise latent-plus-lag positions as a plain changepoint state."""
    return ChangepointState(
        tuple(_derive_series(tau, d) for tau, d in zip(lagged.latent.taus, lagged.lags))
    )


# ---------------------------------------------------------------------------
# Dependency graph


@dataclass(frozen=True)
class DependencyGraph:
    """Symmetric nonnegative edge weights over series indices; zero means no edge."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidStateError("weight matrix must be square")
        if np.any(w < 0):
            raise InvalidStateError("edge weights must be nonnegative")
        if not np.array_equal(w, w.T):
            raise InvalidStateError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise InvalidStateError("diagonal must be zero")
        w = np.ascontiguousarray(w)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def L(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        """Edges (i, j, weight) with i < j, ordered lexicographically."""
        ii, jj = np.nonzero(np.triu(self.weights, k=1))
        return tuple((int(a), int(b), float(self.weights[a, b])) for a, b in zip(ii, jj))

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.L)]
        for a, b, w in self.edges:
            adj[a].append((b, w))
            adj[b].append((a, w))
        return tuple(tuple(row) for row in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        return (self.weights > 0).sum(axis=1)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(j for j, _ in self.adjacency[i])

    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.L else 0

    def mean_degree(self) -> float:
        return float(self.degrees.mean()) if self.L else 0.0

    @classmethod
    def empty(cls, L: int) -> "DependencyGraph":
        return cls(np.zeros((L, L)))

    @classmethod
    def from_edges(cls, L: int, edges: Sequence[tuple[int, int, float]]) -> "DependencyGraph":
        w = np.zeros((L, L))
        for i, j, wt in edges:
            if i == j:
                raise InvalidStateError("self loops are not allowed")
            w[i, j] = wt
            w[j, i] = wt
        return cls(w)


# ---------------------------------------------------------------------------
# Hyperparameters


@dataclass(frozen=True)
class DeltaPrior:
    """Spike-and-Beta prior for the partial decoupling parameter: zero with
    probability ``spike``, otherwise Beta(a, b)."""

    spike: float = 0.5
    a: float = 1.0
    b: float = 30.0

    def __post_init__(self):
        if not 0.0 <= self.spike <= 1.0:
            raise ConfigurationError("spike mass must lie in [0, 1]")
        if self.a <= 0 or self.b <= 0:
            raise ConfigurationError("Beta shape parameters must be positive")


@dataclass(frozen=True)
class WindowPrior:
    """Lag-window model for one series: 'zero', 'fixed' (bound ``w``) or
    'geometric' (unknown bound with success rate ``eta``, support 0, 1, ...)."""

    mode: str = "zero"
    w: int = 0
    eta: float = 0.9

    def __post_init__(self):
        if self.mode not in ("zero", "fixed", "geometric"):
            raise ConfigurationError(f"unknown window mode {self.mode!r}")
        if self.mode == "fixed" and self.w < 0:
            raise ConfigurationError("fixed window must be nonnegative")
        if self.mode == "geometric" and not 0.0 < self.eta < 1.0:
            raise ConfigurationError("geometric rate must lie in (0, 1)")


@dataclass(frozen=True)
class Hyperparameters:
    """Model-level knobs shared by the prior, the sampler and the reporting.

    ``p_bar`` is the log-odds of the per-column changepoint probability.
    ``window_prior`` may be a single spec applied to every series or one spec
    per series. ``gamma_loss`` is the unmatched-changepoint cost of the
    matching loss and ``varpi`` the proximity window of the network scores.
    """

    p_bar: float
    delta_prior: DeltaPrior = DeltaPrior()
    window_prior: WindowPrior | tuple[WindowPrior, ...] = WindowPrior()
    gamma_loss: float = 40.0
    varpi: float = 24.0

    def __post_init__(self):
        if not np.isfinite(self.p_bar):
            raise ConfigurationError("p_bar must be finite")
        if self.gamma_loss < 0:
            raise ConfigurationError("gamma_loss must be nonnegative")
        if self.varpi < 0:
            raise ConfigurationError("varpi must be nonnegative")

    def windows_for(self, L: int) -> tuple[WindowPrior, ...]:
        if isinstance(self.window_prior, WindowPrior):
            return tuple(self.window_prior for _ in range(L))
        if len(self.window_prior) != L:
            raise ConfigurationError("one window prior per series required")
        return tuple(self.window_prior)


# ---------------------------------------------------------------------------
# Auxiliary bond field


@dataclass
class AuxiliaryField:
    """Binary bond variables per time column over the graph edges.

    ``bonds[e, t]`` is the bond for edge e = (edge_a[e], edge_b[e]) at column
    t; columns 2..T are meaningful. An active bond forces equal latent
    changepoint indicators at its endpoints.
    """

    edge_a: np.ndarray
    edge_b: np.ndarray
    bonds: np.ndarray
    delta: float = 0.0

    @classmethod
    def empty(cls, graph: DependencyGraph, T: int, delta: float = 0.0) -> "AuxiliaryField":
        ea = np.array([e[0] for e in graph.edges], dtype=np.int64)
        eb = np.array([e[1] for e in graph.edges], dtype=np.int64)
        return cls(ea, eb, np.zeros((len(ea), T + 1), dtype=bool), delta)

    @property
    def n_edges(self) -> int:
        return len(self.edge_a)

    @property
    def T(self) -> int:
        return self.bonds.shape[1] - 1

    def pairs_at(self, t: int) -> list[tuple[int, int]]:
        ids = np.flatnonzero(self.bonds[:, t])
        return [(int(self.edge_a[e]), int(self.edge_b[e])) for e in ids]

    def check_consistency(self, S: np.ndarray) -> bool:
        """Every active bond joins equal entries of the latent indicator matrix
        ``S`` (indexed as S[i, t])."""
        es, ts = np.nonzero(self.bonds)
        a = self.edge_a[es]
        b = self.edge_b[es]
        return bool(np.all(S[a, ts] == S[b, ts]))

    def copy(self) -> "AuxiliaryField":
        return AuxiliaryField(self.edge_a, self.edge_b, self.bonds.copy(), self.delta)
