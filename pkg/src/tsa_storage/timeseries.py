"""Attribute time series: ingestion, reshaping into periods, scaling, synthesis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

CAPACITY_FACTOR = "-"
SYNTH_KINDS = ("seasonal_sine", "daily_sine", "flat", "noisy_mix")


class ProfileError(ValueError):
    """Raised with the full list of problems found in an input."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Profile:
    name: str
    values: np.ndarray
    unit: str = "kW"
    step_hours: float = 1.0

    def __post_init__(self):
        vals = _frozen(self.values)
        object.__setattr__(self, "values", vals)
        errors = []
        if vals.ndim != 1 or vals.size < 1:
            errors.append(f"profile {self.name!r} must be a non-empty 1-d series")
        elif not np.all(np.isfinite(vals)):
            errors.append(f"profile {self.name!r} has non-finite values")
        if not self.step_hours > 0:
            errors.append(f"profile {self.name!r} needs step_hours > 0")
        if self.unit == CAPACITY_FACTOR and vals.size and np.all(np.isfinite(vals)):
            if vals.min() < 0.0 or vals.max() > 1.0:
                errors.append(f"capacity-factor profile {self.name!r} leaves [0, 1]")
        if errors:
            raise ProfileError(errors)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class PeriodMatrix:
    periods: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "periods", _frozen(self.periods))

    @property
    def n_periods(self) -> int:
        return self.periods.shape[0]

    @property
    def steps_per_period(self) -> int:
        return self.periods.shape[1]

    def flatten(self) -> np.ndarray:
        return self.periods.reshape(-1)


@dataclass(frozen=True)
class ProfileSet:
    profiles: Mapping[str, Profile] = field(default_factory=dict)

    def __post_init__(self):
        profiles = dict(self.profiles)
        lengths = {len(p) for p in profiles.values()}
        steps = {p.step_hours for p in profiles.values()}
        if len(lengths) > 1:
            raise ProfileError([f"profiles differ in length: {sorted(lengths)}"])
        if len(steps) > 1:
            raise ProfileError([f"profiles differ in step_hours: {sorted(steps)}"])
        object.__setattr__(self, "profiles", profiles)

    @classmethod
    def from_profiles(cls, profiles: Iterable[Profile]) -> "ProfileSet":
        return cls({p.name: p for p in profiles})

    @property
    def aligned_length(self) -> int:
        return len(next(iter(self.profiles.values()))) if self.profiles else 0

    @property
    def step_hours(self) -> float:
        return next(iter(self.profiles.values())).step_hours if self.profiles else 1.0

    @property
    def names(self) -> list[str]:
        return list(self.profiles)

    def __getitem__(self, name: str) -> Profile:
        return self.profiles[name]

    def __contains__(self, name) -> bool:
        return name in self.profiles

    def __len__(self):
        return len(self.profiles)


@dataclass(frozen=True)
class ScalingRecord:
    minimum: float
    span: float


def ingest_profiles(path, expected_names: list[str], step_hours: float = 1.0,
                    units: Mapping[str, str] | None = None) -> ProfileSet:
    """Read requested columns from a headed CSV (row order is chronology).

    Every defect is collected before raising, with 1-based data row numbers.
    """
    units = units or {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ProfileError([f"{path}: empty file"])
    header = [h.strip() for h in rows[0]]
    errors = [f"missing column {name!r}" for name in expected_names if name not in header]
    if errors:
        raise ProfileError(errors)
    cols = {name: header.index(name) for name in expected_names}
    data = {name: [] for name in expected_names}
    for rowno, row in enumerate(rows[1:], 1):
        if not any(cell.strip() for cell in row):
            continue
        for name, c in cols.items():
            if c >= len(row):
                errors.append(f"ragged row {rowno}: column {name!r} missing")
                continue
            cell = row[c].strip()
            try:
                v = float(cell)
            except ValueError:
                errors.append(f"non-numeric value {cell!r} at row {rowno}, column {name!r}")
                continue
            if not math.isfinite(v):
                errors.append(f"non-finite value {cell!r} at row {rowno}, column {name!r}")
                continue
            data[name].append(v)
    if errors:
        raise ProfileError(errors)
    return ProfileSet.from_profiles(
        Profile(name, np.array(vals), units.get(name, "kW"), step_hours)
        for name, vals in data.items())


def write_profiles(profiles: ProfileSet, path) -> Path:
    path = Path(path)
    names = profiles.names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for t in range(profiles.aligned_length):
            writer.writerow([repr(float(profiles[n].values[t])) for n in names])
    return path


def reshape_to_periods(profile: Profile, steps_per_period: int) -> PeriodMatrix:
    n_t = len(profile)
    if steps_per_period < 1:
        raise ValueError("steps_per_period must be positive")
    if n_t % steps_per_period:
        raise ValueError(
            f"profile length {n_t} is not divisible by {steps_per_period} steps per period")
    return PeriodMatrix(profile.values.reshape(n_t // steps_per_period, steps_per_period))


def normalize_attributes(profiles: ProfileSet):
    """Min-max scale each profile to [0, 1]; constant profiles become 0."""
    scaled, records = [], {}
    for name, p in profiles.profiles.items():
        lo = float(p.values.min())
        span = float(p.values.max()) - lo
        vals = (p.values - lo) / span if span > 0 else np.zeros_like(p.values)
        records[name] = ScalingRecord(lo, span)
        scaled.append(Profile(name, vals, CAPACITY_FACTOR, p.step_hours))
    return ProfileSet.from_profiles(scaled), records


def denormalize(values: np.ndarray, record: ScalingRecord) -> np.ndarray:
    return np.asarray(values) * record.span + record.minimum


def denormalize_attributes(profiles: ProfileSet, records: Mapping[str, ScalingRecord],
                           units: Mapping[str, str] | None = None) -> ProfileSet:
    units = units or {}
    return ProfileSet.from_profiles(
        Profile(n, denormalize(p.values, records[n]), units.get(n, "kW"), p.step_hours)
        for n, p in profiles.profiles.items())


def synth_profile(kind: str, seed: int, length: int, name: str | None = None,
                  steps_per_day: int = 24, step_hours: float = 1.0) -> Profile:
    """Deterministic synthetic capacity-factor profile in [0, 1].

    ``seasonal_sine`` peaks mid-horizon, ``daily_sine`` repeats every
    ``steps_per_day`` steps, ``flat`` is constant 0.5, ``noisy_mix`` blends a
    seasonal and a daily cycle with seeded noise.
    """
    if length < 1:
        raise ValueError("length must be positive")
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTH_KINDS}")
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    season = 0.5 - 0.5 * np.cos(2 * np.pi * t / length)
    day = np.clip(np.sin(2 * np.pi * ((t % steps_per_day) / steps_per_day - 0.25)), 0, None)
    if kind == "flat":
        vals = np.full(length, 0.5)
    elif kind == "seasonal_sine":
        vals = 0.1 + 0.8 * season + rng.uniform(-0.05, 0.05, length)
    elif kind == "daily_sine":
        vals = day * (0.9 + rng.uniform(-0.1, 0.1, length))
    else:
        days = int(np.ceil(length / steps_per_day))
        weather = np.repeat(rng.uniform(0.3, 1.0, days), steps_per_day)[:length]
        vals = (0.4 * season + 0.6 * day) * weather + rng.normal(0.0, 0.03, length)
    return Profile(name or kind, np.clip(vals, 0.0, 1.0), CAPACITY_FACTOR, step_hours)
