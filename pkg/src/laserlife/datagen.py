"""Synthetic dataset generation: sample conditions, derive features, attach MTTF."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .physics import (
    ConfigurationError,
    LaserCurveConfig,
    OperatingCondition,
    ReliabilityConfig,
    derive_state,
    mttf_two_stress,
    reference_state,
)

FIELDS = (
    "tc_c",
    "pop_mw",
    "ith_ma",
    "se_mw_per_ma",
    "v_v",
    "lambda_nm",
    "eta",
    "tj_k",
    "iop_ma",
    "mttf_years",
)
FEATURES = ("pop_mw", "ith_ma", "eta", "se_mw_per_ma", "v_v", "lambda_nm", "tj_k")
TARGET = "mttf_years"

_FEATURE_COLS = [FIELDS.index(name) for name in FEATURES]
_TARGET_COL = FIELDS.index(TARGET)


class DatasetParseError(ValueError):
    pass


class DegenerateColumnError(ValueError):
    pass


class DatasetRow(NamedTuple):
    tc_c: float
    pop_mw: float
    ith_ma: float
    se_mw_per_ma: float
    v_v: float
    lambda_nm: float
    eta: float
    tj_k: float
    iop_ma: float
    mttf_years: float


@dataclass
class Dataset:
    """Raw (unnormalized) rows stored as an ``(n, 10)`` array in ``FIELDS`` order."""

    values: np.ndarray
    feature_names: tuple[str, ...] = FEATURES

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1, len(FIELDS))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.feature_names == other.feature_names and np.array_equal(
            self.values, other.values
        )

    @property
    def rows(self) -> list[DatasetRow]:
        return [DatasetRow(*map(float, r)) for r in self.values]

    @property
    def features(self) -> np.ndarray:
        return self.values[:, _FEATURE_COLS]

    @property
    def targets(self) -> np.ndarray:
        return self.values[:, _TARGET_COL]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, FIELDS.index(name)]

    def subset(self, index) -> "Dataset":
        return Dataset(np.array(self.values[index], copy=True), self.feature_names)

    @classmethod
    def from_rows(cls, rows: Sequence[DatasetRow]) -> "Dataset":
        return cls(np.array(rows, dtype=np.float64).reshape(-1, len(FIELDS)))


def sample_conditions(
    n: int,
    seed: int,
    tc_range: tuple[float, float] = (25.0, 85.0),
    pop_range: tuple[float, float] = (5.0, 10.0),
) -> list[OperatingCondition]:
    """Draw ``n`` conditions, each coordinate i.i.d. uniform over its range.

    Uses numpy's PCG64 bit generator, so a given seed is reproducible across
    platforms for the same numpy major version.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    for name, (lo, hi) in (("tc_range", tc_range), ("pop_range", pop_range)):
        if not lo < hi:
            raise ValueError(f"{name} must satisfy low < high, got ({lo}, {hi})")
    # validates the range ends against the operating envelope
    OperatingCondition(tc_range[0], pop_range[1])
    OperatingCondition(tc_range[1], pop_range[1])
    if pop_range[0] < 0:
        raise ValueError(f"pop_range low end must be >= 0, got {pop_range[0]}")

    rng = np.random.Generator(np.random.PCG64(seed))
    tc = rng.uniform(tc_range[0], tc_range[1], size=n)
    pop = rng.uniform(pop_range[0], pop_range[1], size=n)
    # uniform() is half-open; an exact 0 mW draw is measure-zero but illegal
    pop = np.where(pop > 0, pop, pop_range[1])
    return [OperatingCondition(float(t), float(p)) for t, p in zip(tc, pop)]


def make_row(
    cond: OperatingCondition,
    curves: LaserCurveConfig,
    rel: ReliabilityConfig,
    ref_state=None,
) -> DatasetRow:
    if ref_state is None:
        ref_state = reference_state(curves, rel)
    s = derive_state(cond, curves, rel)
    mttf_years = mttf_two_stress(s, ref_state, rel) / rel.hours_per_year
    return DatasetRow(
        cond.tc_c,
        cond.pop_mw,
        s.ith_ma,
        s.se_mw_per_ma,
        s.v_v,
        s.lambda_nm,
        s.eta,
        s.tj_k,
        s.iop_ma,
        mttf_years,
    )


def build_dataset(
    conds: Sequence[OperatingCondition],
    curves: LaserCurveConfig = LaserCurveConfig(),
    rel: ReliabilityConfig = ReliabilityConfig(),
) -> Dataset:
    ref = reference_state(curves, rel)
    rows = []
    for i, cond in enumerate(conds):
        try:
            rows.append(make_row(cond, curves, rel, ref))
        except ConfigurationError as exc:
            raise ConfigurationError(exc.field_name, f"row {i}: {exc}") from exc
        except ValueError as exc:
            raise type(exc)(f"row {i}: {exc}") from exc
    return Dataset.from_rows(rows)


def split_indices(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded permutation split into (train, validation) index arrays."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    n_val = min(max(1, int(round(n * val_fraction))), n - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


# -- normalization --------------------------------------------------------


@dataclass(frozen=True)
class NormStats:
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float
    feature_names: tuple[str, ...] = FEATURES

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "feature_mean": [float(x) for x in self.feature_mean],
            "feature_std": [float(x) for x in self.feature_std],
            "target_mean": float(self.target_mean),
            "target_std": float(self.target_std),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(
            feature_mean=np.array(d["feature_mean"], dtype=np.float64),
            feature_std=np.array(d["feature_std"], dtype=np.float64),
            target_mean=float(d["target_mean"]),
            target_std=float(d["target_std"]),
            feature_names=tuple(d["feature_names"]),
        )


def _column_stats(X: np.ndarray, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population std
    for name, m, s in zip(names, mean, std):
        if not s > 1e-12 * max(1.0, abs(m)):
            raise DegenerateColumnError(
                f"column {name!r} is constant (std={s}); widen its sampling range"
            )
    return mean, std


def fit_norm(dataset: Dataset) -> NormStats:
    if len(dataset) == 0:
        raise ValueError("cannot fit normalization on an empty dataset")
    f_mean, f_std = _column_stats(dataset.features, dataset.feature_names)
    y = dataset.targets
    t_mean, t_std = float(y.mean()), float(y.std())
    if not t_std > 1e-12 * max(1.0, abs(t_mean)):
        # a constant target is learnable; only center it
        t_std = 1.0
    return NormStats(f_mean, f_std, t_mean, t_std, dataset.feature_names)


def normalize_features(X: np.ndarray, stats: NormStats) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - stats.feature_mean) / stats.feature_std


def normalize_targets(y: np.ndarray, stats: NormStats) -> np.ndarray:
    return (np.asarray(y, dtype=np.float64) - stats.target_mean) / stats.target_std


def apply_norm(dataset: Dataset, stats: NormStats) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(features, targets)`` z-scored with ``stats``."""
    if dataset.feature_names != stats.feature_names:
        raise ValueError(
            f"feature order {dataset.feature_names} does not match stats {stats.feature_names}"
        )
    return normalize_features(dataset.features, stats), normalize_targets(dataset.targets, stats)


def invert_norm(values, stats: NormStats, *, features: bool = False) -> np.ndarray:
    """Map normalized targets (or feature rows with ``features=True``) back."""
    values = np.asarray(values, dtype=np.float64)
    if features:
        return values * stats.feature_std + stats.feature_mean
    return values * stats.target_std + stats.target_mean


# -- CSV persistence -------------------------------------------------------


def write_csv(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELDS)
        for row in dataset.values:
            writer.writerow([repr(float(x)) for x in row])


def read_csv(path: str | Path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError(f"{path}:1: empty file, expected a header") from None
        missing = [name for name in FIELDS if name not in header]
        if missing:
            raise DatasetParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
        extra = [name for name in header if name not in FIELDS]
        if extra:
            raise DatasetParseError(f"{path}:1: unexpected column(s) {', '.join(extra)}")
        order = [header.index(name) for name in FIELDS]
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DatasetParseError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(record)}"
                )
            try:
                values = [float(record[j]) for j in order]
            except ValueError as exc:
                raise DatasetParseError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetParseError(f"{path}:{lineno}: non-finite value")
            rows.append(values)
    return Dataset(np.array(rows, dtype=np.float64).reshape(-1, len(FIELDS)))
