"""File formats: panel CSVs, changepoint lists, posterior-sample CSVs with
their JSON run manifests, marginal tables, and the authentication event-log
ingestion path (hourly per-source logon vectors plus the shared-source
graph).

All CSVs carry headers and use 1-based series indices and 1-based times.
Hour and day bucketing of event timestamps is UTC floor division of the
integer epoch seconds.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .core import ChangepointState, DependencyGraph, IngestionError, SeriesPanel
from .estimator import MarginalSummaries
from .sampler import PosteriorSample

PAIR_EVENT_LIMIT = 5_000
USERS_PER_SOURCE_LIMIT = 300


# ---------------------------------------------------------------------------
# Panels


def ingest_panel(path: str | Path, format: str = "counts") -> SeriesPanel:
    """Read a long-format panel CSV.

    ``counts`` expects columns (series_id, t, value); ``vectors`` expects
    (series_id, t, category, value). Series ids must be 1..L and times 1..T
    with every cell present exactly once; vector panels must use one common
    category set. Validation failures name the offending row.
    """
    if format == "counts":
        expected = ["series_id", "t", "value"]
    elif format == "vectors":
        expected = ["series_id", "t", "category", "value"]
    else:
        raise IngestionError(f"unknown panel format {format!r}")
    cells: dict[tuple[int, int], object] = {}
    categories: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise IngestionError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                sid = int(row[0])
                t = int(row[1])
            except (ValueError, IndexError):
                raise IngestionError(f"{path}: row {lineno}: malformed row") from None
            if sid < 1 or t < 1:
                raise IngestionError(f"{path}: row {lineno}: indices are 1-based")
            try:
                value = int(row[-1])
            except ValueError:
                raise IngestionError(f"{path}: row {lineno}: non-integer count") from None
            if value < 0:
                raise IngestionError(f"{path}: row {lineno}: negative count")
            if format == "counts":
                if (sid, t) in cells:
                    raise IngestionError(f"{path}: row {lineno}: duplicate cell")
                cells[(sid, t)] = value
            else:
                cat = row[2]
                categories.add(cat)
                cell = cells.setdefault((sid, t), {})
                if cat in cell:
                    raise IngestionError(f"{path}: row {lineno}: duplicate category")
                cell[cat] = value
    if not cells:
        raise IngestionError(f"{path}: no data rows")
    L = max(s for s, _ in cells)
    T = max(t for _, t in cells)
    missing = [(s, t) for s in range(1, L + 1) for t in range(1, T + 1) if (s, t) not in cells]
    if missing:
        raise IngestionError(
            f"{path}: missing cells (ragged or sparse panel), first missing "
            f"series {missing[0][0]} t {missing[0][1]}"
        )
    if format == "counts":
        values = np.zeros((L, T), dtype=np.int64)
        for (s, t), v in cells.items():
            values[s - 1, t - 1] = v
        return SeriesPanel(values, kind="count")
    cats = tuple(sorted(categories))
    values = np.zeros((L, T, len(cats)), dtype=np.int64)
    index = {c: m for m, c in enumerate(cats)}
    for (s, t), cell in cells.items():
        if set(cell) != categories:
            raise IngestionError(
                f"{path}: inconsistent category set for series {s} t {t}"
            )
        for cname, v in cell.items():
            values[s - 1, t - 1, index[cname]] = v
    return SeriesPanel(values, kind="vector", categories=cats)


def write_panel_csv(panel: SeriesPanel, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if panel.kind == "count":
            writer.writerow(["series_id", "t", "value"])
            for i in range(panel.L):
                for t in range(panel.T):
                    writer.writerow([i + 1, t + 1, int(panel.values[i, t])])
        else:
            cats = panel.categories or tuple(str(m) for m in range(panel.M))
            writer.writerow(["series_id", "t", "category", "value"])
            for i in range(panel.L):
                for t in range(panel.T):
                    for m, cname in enumerate(cats):
                        writer.writerow([i + 1, t + 1, cname, int(panel.values[i, t, m])])


# ---------------------------------------------------------------------------
# Changepoint lists (truth files and Bayes estimates)


def write_changepoints_csv(state: ChangepointState, path: str | Path) -> None:
    """One row per changepoint; series with none contribute no rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "position"])
        for i, tau in enumerate(state.taus):
            for t in tau:
                writer.writerow([i + 1, t])


def read_changepoints_csv(path: str | Path, L: int) -> ChangepointState:
    taus: list[list[int]] = [[] for _ in range(L)]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["series_id", "position"]:
            raise IngestionError(f"{path}: expected header series_id,position")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                sid, pos = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise IngestionError(f"{path}: row {lineno}: malformed row") from None
            if not 1 <= sid <= L:
                raise IngestionError(f"{path}: row {lineno}: series id out of range")
            taus[sid - 1].append(pos)
    return ChangepointState(tuple(tuple(sorted(t)) for t in taus))


# ---------------------------------------------------------------------------
# Posterior samples and run manifests


def write_sample_csv(sample: PosteriorSample, path: str | Path) -> None:
    """One row per changepoint per stored draw: iteration, series, derived
    position, lag, window. Draws without changepoints contribute no rows and
    are recovered from the manifest bookkeeping."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "series", "position", "lag", "window"])
        for iteration, snap in sample.iter_draws():
            for i, (tau, lags, w) in enumerate(snap):
                for pos, lag in zip(tau, lags):
                    writer.writerow([iteration, i + 1, pos, lag, w])


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(sample: PosteriorSample, config_echo: dict, inputs: dict[str, str]) -> dict:
    """Everything needed to reproduce and reinterpret a run: the seed and
    config echo, input hashes, draw bookkeeping, acceptance counters and a
    summary of the decoupling-parameter trace."""
    deltas = sample.delta_trace
    return {
        "seed": sample.seed,
        "config": config_echo,
        "inputs": {name: {"path": p, "sha256": sha256_file(p)} for name, p in inputs.items()},
        "panel": {"L": sample.L, "T": sample.T},
        "draws": {
            "first_iteration": sample.first_iteration,
            "thin": sample.thin,
            "count": sample.n_draws,
        },
        "acceptance": sample.acceptance,
        "delta": {
            "mean": float(deltas.mean()) if deltas is not None and len(deltas) else 0.0,
            "fraction_zero": (
                float((deltas == 0.0).mean()) if deltas is not None and len(deltas) else 1.0
            ),
        },
    }


def write_manifest(manifest: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sample_csv(csv_path: str | Path, manifest_path: str | Path) -> PosteriorSample:
    """Rebuild a posterior sample from its CSV and manifest, including the
    draws that carried no changepoints."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    L = manifest["panel"]["L"]
    T = manifest["panel"]["T"]
    first = manifest["draws"]["first_iteration"]
    thin = manifest["draws"]["thin"]
    count = manifest["draws"]["count"]
    per_iter: dict[int, list[list]] = {}
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["iteration", "series", "position"]:
            raise IngestionError(f"{csv_path}: expected a posterior sample CSV")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                it, sid, pos, lag, w = (int(v) for v in row[:5])
            except ValueError:
                raise IngestionError(f"{csv_path}: row {lineno}: malformed row") from None
            per_iter.setdefault(it, [[[], [], 0] for _ in range(L)])
            entry = per_iter[it][sid - 1]
            entry[0].append(pos)
            entry[1].append(lag)
            entry[2] = w
    records: list[tuple[int, tuple]] = []
    last = None
    for m in range(count):
        it = first + m * thin
        if it in per_iter:
            snap = tuple(
                (tuple(e[0]), tuple(e[1]), e[2]) for e in per_iter[it]
            )
        else:
            snap = tuple(((), (), 0) for _ in range(L))
        if records and snap == last:
            records[-1] = (records[-1][0] + 1, last)
        else:
            records.append((1, snap))
            last = snap
    return PosteriorSample(
        L=L, T=T, first_iteration=first, thin=thin, n_draws=count, records=records,
        seed=manifest.get("seed"),
    )


# ---------------------------------------------------------------------------
# Marginal and score tables


def write_marginals_csv(summaries: MarginalSummaries, k_path: str | Path, pos_path: str | Path) -> None:
    with open(k_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "k", "probability"])
        L, kmax = summaries.k_probs.shape
        for i in range(L):
            for m in range(kmax):
                writer.writerow([i + 1, m, repr(float(summaries.k_probs[i, m]))])
    with open(pos_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "t", "probability"])
        L, width = summaries.position_probs.shape
        for i in range(L):
            for j in range(width):
                writer.writerow([i + 1, j + 2, repr(float(summaries.position_probs[i, j]))])


def write_scores_csv(scores, estimates: ChangepointState, m_path: str | Path, c_path: str | Path) -> None:
    with open(m_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "m_score"])
        for i, m in enumerate(scores.m):
            writer.writerow([i + 1, repr(float(m))])
    with open(c_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "position", "c_score"])
        for i, (tau, row) in enumerate(zip(estimates.taus, scores.c)):
            for t, cval in zip(tau, row):
                writer.writerow([i + 1, t, repr(float(cval))])


# ---------------------------------------------------------------------------
# Authentication event logs


def ingest_auth_events(
    path: str | Path,
    max_pair_events: int = PAIR_EVENT_LIMIT,
    max_users_per_source: int = USERS_PER_SOURCE_LIMIT,
) -> tuple[SeriesPanel, DependencyGraph, dict]:
    """Aggregate an authentication event log into per-user hourly logon
    vectors and the shared-source user graph.

    Input columns: (time, user, source, destination) with integer epoch
    seconds. High-frequency automation is filtered out first: user-source
    pairs seen more than ``max_pair_events`` times are dropped, then sources
    serving more than ``max_users_per_source`` distinct users. Each retained
    event increments the count of its user's (hour, source) cell; two users
    are joined by an edge when they logged on from a common source on a
    common day. Returns the panel, the graph and an info dict with skipped
    row and filtering counts.
    """
    events: list[tuple[int, str, str]] = []
    skipped = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["time", "user", "source"]:
            raise IngestionError(f"{path}: expected header time,user,source,destination")
        for row in reader:
            if not row:
                continue
            try:
                ts = int(row[0])
                user = row[1].strip()
                source = row[2].strip()
                if ts < 0 or not user or not source:
                    raise ValueError
            except (ValueError, IndexError):
                skipped += 1
                continue
            events.append((ts, user, source))
    pair_counts: dict[tuple[str, str], int] = {}
    for _, user, source in events:
        pair_counts[(user, source)] = pair_counts.get((user, source), 0) + 1
    noisy_pairs = {p for p, c in pair_counts.items() if c > max_pair_events}
    events = [e for e in events if (e[1], e[2]) not in noisy_pairs]
    source_users: dict[str, set[str]] = {}
    for _, user, source in events:
        source_users.setdefault(source, set()).add(user)
    noisy_sources = {s for s, us in source_users.items() if len(us) > max_users_per_source}
    events = [e for e in events if e[2] not in noisy_sources]
    if not events:
        raise IngestionError(f"{path}: no events left after filtering")

    users = sorted({u for _, u, _ in events})
    sources = sorted({s for _, _, s in events})
    uidx = {u: i for i, u in enumerate(users)}
    sidx = {s: m for m, s in enumerate(sources)}
    hours = [ts // 3600 for ts, _, _ in events]
    hour0 = min(hours)
    T = max(hours) - hour0 + 1
    if T < 2:
        raise IngestionError(f"{path}: events span fewer than two hourly buckets")
    values = np.zeros((len(users), T, len(sources)), dtype=np.int64)
    day_source_users: dict[tuple[int, str], set[str]] = {}
    for ts, user, source in events:
        values[uidx[user], ts // 3600 - hour0, sidx[source]] += 1
        day_source_users.setdefault((ts // 86400, source), set()).add(user)
    weights = np.zeros((len(users), len(users)))
    for members in day_source_users.values():
        idx = sorted(uidx[u] for u in members)
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                weights[idx[a], idx[b]] = 1.0
                weights[idx[b], idx[a]] = 1.0
    panel = SeriesPanel(values, kind="vector", categories=tuple(sources))
    info = {
        "skipped_rows": skipped,
        "users": users,
        "hour0": hour0,
        "dropped_pairs": len(noisy_pairs),
        "dropped_sources": len(noisy_sources),
    }
    return panel, DependencyGraph(weights), info
