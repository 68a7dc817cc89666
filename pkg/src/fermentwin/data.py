"""Observation ingestion, feature normalization, biological-growth
grouping, and deterministic grouped k-fold partitions.

CSV schema (exact header): duty_cycle,frequency_hz,duration_h,
temperature_c,n0_od600,t_h,od600. Records sharing the group key
(duty cycle, frequency, temperature, inoculum by default) form one
biological growth and are never split across train/test sides.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .growth import GrowthPoint

__all__ = [
    "CSV_COLUMNS",
    "RawRecord",
    "FeatureBounds",
    "GrowthGroup",
    "GrowthDataset",
    "FoldAssignment",
    "NormalizationClampWarning",
    "load_records",
    "save_records",
    "normalize",
    "round_robin_folds",
]

CSV_COLUMNS = [
    "duty_cycle",
    "frequency_hz",
    "duration_h",
    "temperature_c",
    "n0_od600",
    "t_h",
    "od600",
]

GROUP_KEY_MODES = ("four_field", "three_field")


class NormalizationClampWarning(UserWarning):
    """A condition fell outside the training bounds and was clamped."""


@dataclass(frozen=True)
class RawRecord:
    """One measured point with its full experimental condition."""

    duty_cycle: float
    frequency_hz: float
    duration_h: float
    temperature_c: float
    n0: float
    t: float
    od: float

    def __post_init__(self):
        for name in (
            "duty_cycle",
            "frequency_hz",
            "duration_h",
            "temperature_c",
            "n0",
            "t",
            "od",
        ):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if not 0.0 <= self.duty_cycle <= 1.0:
            raise ValueError(f"duty_cycle must lie in [0, 1], got {self.duty_cycle}")
        if self.frequency_hz <= 0.0:
            raise ValueError(f"frequency_hz must be positive, got {self.frequency_hz}")
        if self.n0 < 0.0:
            raise ValueError(f"n0_od600 must be non-negative, got {self.n0}")
        if self.t < 0.0:
            raise ValueError(f"t_h must be non-negative, got {self.t}")
        if self.od < 0.0:
            raise ValueError(f"od600 must be non-negative, got {self.od}")


@dataclass(frozen=True)
class FeatureBounds:
    """Per-feature (min, max) used for min-max normalization, stored in
    network input order: temperature, frequency, duty cycle."""

    temperature: tuple[float, float]
    frequency: tuple[float, float]
    duty: tuple[float, float]

    def normalize(
        self, temperature_c: float, frequency_hz: float, duty_cycle: float, clamp: bool = True
    ) -> np.ndarray:
        """Affine map into [0, 1]^3; a degenerate (constant) feature maps
        to 0.5. Out-of-bounds values are clamped with a warning."""
        raw = (temperature_c, frequency_hz, duty_cycle)
        out = np.empty(3)
        for i, ((lo, hi), value) in enumerate(
            zip((self.temperature, self.frequency, self.duty), raw)
        ):
            if hi == lo:
                out[i] = 0.5
                continue
            x = (value - lo) / (hi - lo)
            if clamp and not 0.0 <= x <= 1.0:
                warnings.warn(
                    f"condition value {value} outside training bounds [{lo}, {hi}]; "
                    "clamped to the unit interval",
                    NormalizationClampWarning,
                    stacklevel=2,
                )
                x = min(max(x, 0.0), 1.0)
            out[i] = x
        return out


@dataclass(frozen=True)
class GrowthGroup:
    """All observations sharing one experimental condition."""

    key: tuple
    features: np.ndarray
    n0: float
    observations: tuple[GrowthPoint, ...]

    def __post_init__(self):
        if len(self.observations) == 0:
            raise ValueError("a growth group needs at least one observation")
        ts = [p.t for p in self.observations]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("group observations must be sorted by time")

    @property
    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.observations])

    @property
    def ods(self) -> np.ndarray:
        return np.array([p.od for p in self.observations])


@dataclass(frozen=True)
class GrowthDataset:
    """Normalized groups plus the bounds needed to normalize new
    conditions at inference time."""

    groups: tuple[GrowthGroup, ...]
    bounds: FeatureBounds
    group_key_mode: str = "four_field"

    @property
    def n_observations(self) -> int:
        return sum(len(g.observations) for g in self.groups)

    def apply_normalization(
        self, temperature_c: float, frequency_hz: float, duty_cycle: float
    ) -> np.ndarray:
        """Reapply the stored training-time normalization (clamping)."""
        return self.bounds.normalize(temperature_c, frequency_hz, duty_cycle)

    def subset(self, group_indices: Iterable[int]) -> "GrowthDataset":
        """New dataset over a subset of groups, keeping the global bounds."""
        picked = tuple(self.groups[i] for i in group_indices)
        if not picked:
            raise ValueError("subset must contain at least one group")
        return GrowthDataset(groups=picked, bounds=self.bounds, group_key_mode=self.group_key_mode)


@dataclass(frozen=True)
class FoldAssignment:
    """Round-robin map from group position to fold index."""

    k: int
    assignment: tuple[int, ...]

    def fold_groups(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f == fold]

    def train_groups(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f != fold]


def _parse_row(row: list[str], lineno: int) -> RawRecord:
    if len(row) != len(CSV_COLUMNS):
        raise ValueError(
            f"line {lineno}: expected {len(CSV_COLUMNS)} cells, got {len(row)}"
        )
    values = []
    for name, cell in zip(CSV_COLUMNS, row):
        try:
            values.append(float(cell))
        except ValueError:
            raise ValueError(
                f"line {lineno}, column {name!r}: could not parse {cell!r} as a number"
            ) from None
    try:
        return RawRecord(*values)
    except ValueError as exc:
        raise ValueError(f"line {lineno}: {exc}") from None


def load_records(source) -> list[RawRecord]:
    """Parse the observation CSV from a path or text stream.

    Rejects a wrong header, non-numeric cells, and invariant violations,
    naming the offending line.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return load_records(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise ValueError("empty input: missing header line")
    if [h.strip() for h in header] != CSV_COLUMNS:
        raise ValueError(
            f"bad header: expected {','.join(CSV_COLUMNS)!r}, got {','.join(header)!r}"
        )
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        records.append(_parse_row(row, lineno))
    return records


def save_records(path_or_stream, records: Sequence[RawRecord]) -> None:
    """Write records in the documented CSV schema at full precision."""
    if isinstance(path_or_stream, (str, Path)):
        with open(path_or_stream, "w", newline="") as fh:
            save_records(fh, records)
        return
    writer = csv.writer(path_or_stream)
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            "%.17g" % v
            for v in (
                r.duty_cycle,
                r.frequency_hz,
                r.duration_h,
                r.temperature_c,
                r.n0,
                r.t,
                r.od,
            )
        )


def _group_key(record: RawRecord, mode: str) -> tuple:
    if mode == "four_field":
        return (record.duty_cycle, record.frequency_hz, record.temperature_c, record.n0)
    return (record.duty_cycle, record.frequency_hz, record.n0)


def normalize(
    records: Sequence[RawRecord],
    group_key: str = "four_field",
    bounds: FeatureBounds | None = None,
) -> GrowthDataset:
    """Min-max normalize features over the whole record set and form
    biological-growth groups by exact key equality.

    ``bounds`` overrides the computed bounds (inference-time reuse, e.g.
    when refitting on accumulated twin-loop data).
    """
    if not records:
        raise ValueError("cannot normalize an empty record set")
    if group_key not in GROUP_KEY_MODES:
        raise ValueError(f"group_key must be one of {GROUP_KEY_MODES}, got {group_key!r}")
    if bounds is None:
        temps = [r.temperature_c for r in records]
        freqs = [r.frequency_hz for r in records]
        duties = [r.duty_cycle for r in records]
        bounds = FeatureBounds(
            temperature=(min(temps), max(temps)),
            frequency=(min(freqs), max(freqs)),
            duty=(min(duties), max(duties)),
        )

    by_key: dict[tuple, list[RawRecord]] = {}
    for record in records:
        by_key.setdefault(_group_key(record, group_key), []).append(record)

    groups = []
    for key, members in by_key.items():
        members = sorted(members, key=lambda r: r.t)
        first = members[0]
        features = bounds.normalize(
            first.temperature_c, first.frequency_hz, first.duty_cycle
        )
        groups.append(
            GrowthGroup(
                key=key,
                features=features,
                n0=first.n0,
                observations=tuple(GrowthPoint(r.t, r.od) for r in members),
            )
        )
    return GrowthDataset(groups=tuple(groups), bounds=bounds, group_key_mode=group_key)


def round_robin_folds(dataset_or_groups, k: int) -> FoldAssignment:
    """Assign group i (in stable input order) to fold i mod k."""
    if isinstance(dataset_or_groups, GrowthDataset):
        n = len(dataset_or_groups.groups)
    else:
        n = len(dataset_or_groups)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} groups, got {n}")
    return FoldAssignment(k=k, assignment=tuple(i % k for i in range(n)))
