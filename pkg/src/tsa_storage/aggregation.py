"""Typical-period selection by k-medoids clustering of candidate periods."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .timeseries import ProfileSet, normalize_attributes, reshape_to_periods

EXACT_MAX_CANDIDATES = 20
_CHUNK = 4096


@dataclass(frozen=True)
class CandidateMatrix:
    """Rows are candidate periods; columns concatenate normalized attributes."""

    rows: np.ndarray
    attribute_names: tuple
    steps_per_period: int

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValueError("candidate rows must form a 2-d array")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))

    @property
    def n_candidates(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class TypicalPeriodSet:
    medoids: np.ndarray
    assignment: np.ndarray
    cardinalities: np.ndarray
    medoid_source_indices: np.ndarray
    total_distance: float = 0.0

    @property
    def n_typical(self) -> int:
        return len(self.medoid_source_indices)

    @property
    def n_candidates(self) -> int:
        return len(self.assignment)

    def __post_init__(self):
        for name in ("medoids", "assignment", "cardinalities", "medoid_source_indices"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def build_candidates(profiles: ProfileSet, steps_per_period: int,
                     normalize: bool = True) -> CandidateMatrix:
    source = normalize_attributes(profiles)[0] if normalize else profiles
    blocks = [reshape_to_periods(source[name], steps_per_period).periods
              for name in profiles.names]
    return CandidateMatrix(np.hstack(blocks), profiles.names, steps_per_period)


def squared_distances(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    Y = X if Y is None else Y
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def assign_to_medoids(candidates: CandidateMatrix | np.ndarray, medoids: np.ndarray):
    """Nearest medoid per candidate; ties go to the lowest medoid index."""
    rows = candidates.rows if isinstance(candidates, CandidateMatrix) else np.asarray(candidates)
    medoids = np.atleast_2d(np.asarray(medoids, dtype=float))
    if medoids.shape[1] != rows.shape[1]:
        raise ValueError(
            f"dimension mismatch: candidates have {rows.shape[1]} columns, "
            f"medoids {medoids.shape[1]}")
    assignment = np.argmin(squared_distances(rows, medoids), axis=1)
    cardinalities = np.bincount(assignment, minlength=len(medoids))
    return assignment, cardinalities


def _cost(dist: np.ndarray, medoids) -> float:
    return float(dist[:, list(medoids)].min(axis=1).sum())


def _exact_medoids(dist: np.ndarray, k: int) -> tuple:
    n = dist.shape[0]
    best, best_cost = None, np.inf
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        costs = dist[:, chunk].min(axis=2).sum(axis=0)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost, best = costs[i], tuple(chunk[i])
    return best


def _pam_medoids(dist: np.ndarray, k: int) -> tuple:
    n = dist.shape[0]
    # BUILD: greedy additions, lowest index on ties
    medoids = [int(np.argmin(dist.sum(axis=0)))]
    nearest = dist[:, medoids[0]].copy()
    for _ in range(1, k):
        gain = np.maximum(nearest[:, None] - dist, 0.0).sum(axis=0)
        gain[medoids] = -np.inf
        h = int(np.argmax(gain))
        medoids.append(h)
        nearest = np.minimum(nearest, dist[:, h])
    # SWAP: steepest improving exchange until none remains
    current = _cost(dist, medoids)
    while True:
        best_delta, best_swap = 0.0, None
        for pos in range(k):
            others = medoids[:pos] + medoids[pos + 1:]
            base = dist[:, others].min(axis=1) if others else np.full(n, np.inf)
            costs = np.minimum(base[:, None], dist).sum(axis=0)
            costs[medoids] = np.inf
            h = int(np.argmin(costs))
            delta = costs[h] - current
            if delta < best_delta - 1e-12 * max(1.0, current):
                best_delta, best_swap = delta, (pos, h)
        if best_swap is None:
            break
        medoids[best_swap[0]] = best_swap[1]
        current = _cost(dist, medoids)
    return tuple(medoids)


def cluster_kmedoids(candidates: CandidateMatrix, n_clusters: int,
                     mode: str = "pam") -> TypicalPeriodSet:
    """Choose ``n_clusters`` candidate rows as typical periods.

    ``exact`` enumerates every medoid subset (at most 20 candidates);
    ``pam`` runs greedy BUILD followed by best-improvement SWAP.
    Clusters are numbered by ascending medoid source index.
    """
    rows = candidates.rows
    n = rows.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"number of typical periods must lie in [1, {n}], got {n_clusters}")
    dist = squared_distances(rows)
    if mode == "exact":
        if n > EXACT_MAX_CANDIDATES:
            raise ValueError(
                f"exact k-medoids supports at most {EXACT_MAX_CANDIDATES} candidates, got {n}")
        chosen = _exact_medoids(dist, n_clusters)
    elif mode == "pam":
        chosen = _pam_medoids(dist, n_clusters)
    else:
        raise ValueError(f"unknown clustering mode {mode!r}")
    source = np.array(sorted(chosen), dtype=int)
    medoids = rows[source].copy()
    assignment, cardinalities = assign_to_medoids(rows, medoids)
    # each medoid must represent itself even when a duplicate row sits earlier
    assignment[source] = np.arange(len(source))
    cardinalities = np.bincount(assignment, minlength=len(source))
    total = float(dist[np.arange(n), source[assignment]].sum())
    return TypicalPeriodSet(medoids, assignment, cardinalities, source, total)


def representation_error(candidates: CandidateMatrix, typ: TypicalPeriodSet) -> float:
    """RMS deviation between every candidate row and its representing medoid."""
    rows = candidates.rows
    if typ.medoids.shape[1] != rows.shape[1] or len(typ.assignment) != rows.shape[0]:
        raise ValueError("typical periods do not match the candidate matrix")
    diff = rows - typ.medoids[typ.assignment]
    return float(np.sqrt(np.mean(diff ** 2)))


def identity_periods(n_periods: int, rows: np.ndarray | None = None) -> TypicalPeriodSet:
    """Every candidate period is its own typical period."""
    idx = np.arange(n_periods)
    medoids = np.zeros((n_periods, 0)) if rows is None else np.asarray(rows)
    return TypicalPeriodSet(medoids, idx, np.ones(n_periods, dtype=int), idx, 0.0)


def typical_profiles(profiles: ProfileSet, typ: TypicalPeriodSet,
                     steps_per_period: int) -> dict[str, np.ndarray]:
    """Original (unscaled) values of each medoid period, per attribute."""
    out = {}
    for name in profiles.names:
        periods = reshape_to_periods(profiles[name], steps_per_period).periods
        out[name] = periods[typ.medoid_source_indices].copy()
    return out


def aggregate(profiles: ProfileSet, steps_per_period: int, n_clusters: int,
              mode: str = "pam"):
    """Cluster a profile set; returns ``(typical periods, candidates)``."""
    candidates = build_candidates(profiles, steps_per_period)
    return cluster_kmedoids(candidates, n_clusters, mode), candidates


def to_json(typ: TypicalPeriodSet, profiles: ProfileSet, steps_per_period: int) -> dict:
    medoid_values = typical_profiles(profiles, typ, steps_per_period)
    return {
        "n_typical_periods": int(typ.n_typical),
        "n_candidate_periods": int(typ.n_candidates),
        "steps_per_period": int(steps_per_period),
        "step_hours": profiles.step_hours,
        "assignment": [int(k) for k in typ.assignment],
        "cardinalities": [int(c) for c in typ.cardinalities],
        "medoid_source_indices": [int(i) for i in typ.medoid_source_indices],
        "total_distance": typ.total_distance,
        "medoids": {name: vals.tolist() for name, vals in medoid_values.items()},
    }


def write_json(typ: TypicalPeriodSet, profiles: ProfileSet, steps_per_period: int,
               path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_json(typ, profiles, steps_per_period), indent=1))
    return path


def from_json(doc: dict) -> tuple[TypicalPeriodSet, dict[str, np.ndarray]]:
    """Rebuild the assignment structure and per-attribute medoid values."""
    medoids = {name: np.array(v, dtype=float) for name, v in doc["medoids"].items()}
    flat = np.hstack([medoids[n] for n in medoids]) if medoids else np.zeros((0, 0))
    typ = TypicalPeriodSet(flat, np.array(doc["assignment"], dtype=int),
                           np.array(doc["cardinalities"], dtype=int),
                           np.array(doc["medoid_source_indices"], dtype=int),
                           float(doc.get("total_distance", math.nan)))
    return typ, medoids
