"""Patterns with missing-value masks, CSV I/O, class statistics and generators."""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .belief import Frame

MISSING = np.nan


class DatasetError(ValueError):
    """Malformed input data (bad cells, empty classes, incomplete training rows)."""


@dataclass(frozen=True, eq=False)
class Pattern:
    """Attribute vector with an explicit missing mask; missing entries hold NaN."""

    values: np.ndarray
    missing: np.ndarray
    label: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        missing = np.array(self.missing, dtype=bool)
        if values.ndim != 1 or values.shape != missing.shape:
            raise DatasetError("values and missing mask must be 1-D arrays of equal length")
        if missing.all():
            raise DatasetError("pattern has no available attribute")
        values[missing] = MISSING
        if np.isnan(values[~missing]).any():
            raise DatasetError("available attributes must be finite numbers")
        values.flags.writeable = False
        missing.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    @classmethod
    def from_values(cls, values: Sequence[float], label: int | None = None) -> Pattern:
        """Build a pattern whose NaN entries are treated as missing."""
        arr = np.asarray(values, dtype=float)
        return cls(arr, np.isnan(arr), label)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def available(self) -> np.ndarray:
        return ~self.missing

    @property
    def is_complete(self) -> bool:
        return not self.missing.any()

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())

    def filled(self, fill: np.ndarray) -> Pattern:
        """Complete copy taking missing entries from ``fill``; available values kept as-is."""
        values = np.where(self.missing, fill, self.values)
        return Pattern(values, np.zeros(self.p, dtype=bool), self.label)

    def __repr__(self) -> str:
        vals = ", ".join("?" if m else f"{v:g}" for v, m in zip(self.values, self.missing))
        return f"Pattern([{vals}], label={self.label})"


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    frame: Frame
    patterns: tuple[Pattern, ...]
    attribute_names: tuple[str, ...]

    def __post_init__(self):
        patterns = tuple(self.patterns)
        names = tuple(self.attribute_names)
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "attribute_names", names)
        for i, pat in enumerate(patterns):
            if pat.p != len(names):
                raise DatasetError(f"pattern {i} has {pat.p} attributes, expected {len(names)}")
            if pat.label is None or not 0 <= pat.label < self.frame.c:
                raise DatasetError(f"pattern {i} has invalid label {pat.label!r}")

    @property
    def p(self) -> int:
        return len(self.attribute_names)

    def __len__(self) -> int:
        return len(self.patterns)

    @cached_property
    def values(self) -> np.ndarray:
        """(n, p) matrix, NaN where missing."""
        if not self.patterns:
            return np.empty((0, self.p))
        return np.vstack([pat.values for pat in self.patterns])

    @cached_property
    def missing(self) -> np.ndarray:
        if not self.patterns:
            return np.empty((0, self.p), dtype=bool)
        return np.vstack([pat.missing for pat in self.patterns])

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([pat.label for pat in self.patterns], dtype=int)

    @property
    def is_complete(self) -> bool:
        return not self.missing.any()

    def class_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.frame.c).tolist()

    def subset(self, indices: Sequence[int]) -> LabeledDataset:
        return replace(self, patterns=tuple(self.patterns[i] for i in indices))

    @classmethod
    def from_arrays(cls, frame: Frame, values: np.ndarray, labels: Sequence[int],
                    attribute_names: Sequence[str] | None = None) -> LabeledDataset:
        values = np.asarray(values, dtype=float)
        if attribute_names is None:
            attribute_names = [f"x{j + 1}" for j in range(values.shape[1])]
        patterns = tuple(Pattern.from_values(row, int(lab)) for row, lab in zip(values, labels))
        return cls(frame, patterns, tuple(attribute_names))


@dataclass(frozen=True)
class ClassStats:
    """Per-class prototypes (c, p), dispersions (c, p) and sample counts."""

    prototypes: np.ndarray
    dispersions: np.ndarray
    counts: tuple[int, ...]
    global_mean: np.ndarray = field(default=None)

    @property
    def c(self) -> int:
        return self.prototypes.shape[0]

    @property
    def p(self) -> int:
        return self.prototypes.shape[1]

    def to_dict(self) -> dict:
        return {
            "prototypes": _round_rows(self.prototypes),
            "dispersions": _round_rows(self.dispersions),
            "counts": list(self.counts),
            "global_mean": _round_row(self.global_mean),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ClassStats:
        return cls(np.array(d["prototypes"], dtype=float), np.array(d["dispersions"], dtype=float),
                   tuple(int(n) for n in d["counts"]), np.array(d["global_mean"], dtype=float))


def _round_row(row) -> list[float]:
    return [float(f"{v:.12g}") for v in row]


def _round_rows(rows) -> list[list[float]]:
    return [_round_row(r) for r in rows]


# -- CSV ---------------------------------------------------------------------

def _parse_cell(cell: str, missing_token: str, row: int, col: str) -> float:
    cell = cell.strip()
    if cell == missing_token:
        return MISSING
    try:
        value = float(cell)
    except ValueError:
        raise DatasetError(f"row {row}, column {col!r}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(value):
        raise DatasetError(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return value


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row expected") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise DatasetError(f"{path}: duplicate header names {dupes}")
    return header, rows


def load_csv(path: str | Path, label_column: str, missing_token: str = "?") -> LabeledDataset:
    """Read a header-row CSV; class labels map to indices in first-appearance order.

    Row numbers in error messages count data rows from 1.
    """
    header, rows = _read_rows(path)
    if label_column not in header:
        raise DatasetError(f"{path}: label column {label_column!r} not in header {header}")
    li = header.index(label_column)
    attr_cols = [j for j in range(len(header)) if j != li]
    labels: list[str] = []
    index: dict[str, int] = {}
    patterns = []
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        lab = row[li].strip()
        if lab not in index:
            index[lab] = len(labels)
            labels.append(lab)
        vals = [_parse_cell(row[j], missing_token, r, header[j]) for j in attr_cols]
        arr = np.array(vals)
        if np.isnan(arr).all():
            raise DatasetError(f"{path}: row {r} has every attribute missing")
        patterns.append(Pattern.from_values(arr, index[lab]))
    if not labels:
        raise DatasetError(f"{path}: no data rows")
    return LabeledDataset(Frame(tuple(labels)), tuple(patterns), tuple(header[j] for j in attr_cols))


def read_patterns(path: str | Path, attribute_names: Sequence[str],
                  missing_token: str = "?") -> list[Pattern]:
    """Read unlabeled patterns, selecting ``attribute_names`` columns; extra columns ignored."""
    header, rows = _read_rows(path)
    absent = [a for a in attribute_names if a not in header]
    if absent:
        raise DatasetError(
            f"{path}: expected p={len(attribute_names)} attributes {list(attribute_names)}, "
            f"missing columns {absent}")
    cols = [header.index(a) for a in attribute_names]
    out = []
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        arr = np.array([_parse_cell(row[j], missing_token, r, header[j]) for j in cols])
        if np.isnan(arr).all():
            raise DatasetError(f"{path}: row {r} has every attribute missing")
        out.append(Pattern.from_values(arr))
    return out


def write_csv(dataset: LabeledDataset, path: str | Path, label_column: str = "label",
              missing_token: str = "?") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*dataset.attribute_names, label_column])
        for pat in dataset.patterns:
            cells = [missing_token if m else repr(float(v)) for v, m in zip(pat.values, pat.missing)]
            w.writerow([*cells, dataset.frame.labels[pat.label]])


# -- missingness ---------------------------------------------------------------

def inject_missing(dataset: LabeledDataset, n_missing: int, seed: int) -> LabeledDataset:
    """Mark exactly ``n_missing`` uniformly chosen dimensions of every pattern as missing."""
    p = dataset.p
    if n_missing < 0 or n_missing >= p:
        raise DatasetError(f"n_missing must be in [0, p-1] = [0, {p - 1}], got {n_missing}")
    if n_missing == 0:
        return dataset
    rng = np.random.default_rng(seed)
    patterns = []
    for pat in dataset.patterns:
        mask = pat.missing.copy()
        mask[rng.choice(p, size=n_missing, replace=False)] = True
        if mask.all():
            raise DatasetError("injection would leave a pattern with no available attribute")
        patterns.append(Pattern(pat.values, mask, pat.label))
    return replace(dataset, patterns=tuple(patterns))


def drop_dimensions(dataset: LabeledDataset, dims: Sequence[int]) -> LabeledDataset:
    """Mark the listed dimensions missing in every pattern."""
    patterns = []
    for pat in dataset.patterns:
        mask = pat.missing.copy()
        mask[list(dims)] = True
        patterns.append(Pattern(pat.values, mask, pat.label))
    return replace(dataset, patterns=tuple(patterns))


def split_by_completeness(dataset: LabeledDataset) -> tuple[LabeledDataset, LabeledDataset]:
    """(complete patterns, patterns with any missing value) -- for files that ship with gaps."""
    complete = [i for i, pat in enumerate(dataset.patterns) if pat.is_complete]
    partial = [i for i, pat in enumerate(dataset.patterns) if not pat.is_complete]
    return dataset.subset(complete), dataset.subset(partial)


# -- class statistics --------------------------------------------------------------

def compute_class_stats(training: LabeledDataset) -> ClassStats:
    """Prototype and per-dimension RMS deviation (population divisor) for each class.

    Zero dispersions are replaced by the smallest positive dispersion found
    over all classes and dimensions, or 1.0 when every dispersion is zero.
    """
    if not training.is_complete:
        bad = int(np.flatnonzero(training.missing.any(axis=1))[0])
        raise DatasetError(f"training pattern {bad} is incomplete; training data must be complete")
    X, y = training.values, training.labels
    c, p = training.frame.c, training.p
    protos = np.empty((c, p))
    disp = np.empty((c, p))
    counts = []
    for g in range(c):
        Xg = X[y == g]
        if len(Xg) == 0:
            raise DatasetError(f"class {training.frame.labels[g]!r} has no training samples")
        protos[g] = Xg.mean(axis=0)
        disp[g] = np.sqrt(((Xg - protos[g]) ** 2).mean(axis=0))
        counts.append(len(Xg))
    positive = disp[disp > 0]
    guard = positive.min() if positive.size else 1.0
    disp[disp <= 0] = guard
    return ClassStats(protos, disp, tuple(counts), X.mean(axis=0))


def normalized_distance(x: Pattern, g: int, stats: ClassStats) -> float:
    """Dispersion-normalized Euclidean distance over the available dimensions of ``x``,
    averaged by the number of available dimensions."""
    avail = x.available
    z = (x.values[avail] - stats.prototypes[g, avail]) / stats.dispersions[g, avail]
    return math.sqrt(float(z @ z) / z.size)


def normalized_distances(x: Pattern, stats: ClassStats) -> np.ndarray:
    """Distances from ``x`` to all class prototypes at once."""
    avail = x.available
    z = (x.values[avail] - stats.prototypes[:, avail]) / stats.dispersions[:, avail]
    return np.sqrt((z * z).sum(axis=1) / avail.sum())


# -- synthetic generators -----------------------------------------------------------

UNIFORM3_BOUNDS = (
    ((5.0, 65.0), (5.0, 25.0)),
    ((95.0, 155.0), (5.0, 25.0)),
    ((50.0, 110.0), (50.0, 70.0)),
)

GAUSSIAN3_MEANS = (
    (10.0, 50.0, 100.0, 100.0),
    (30.0, 40.0, 50.0, 90.0),
    (20.0, 80.0, 90.0, 130.0),
)
GAUSSIAN3_SPREADS = (10.0, 15.0, 12.0)


def _frame3() -> Frame:
    return Frame(("w1", "w2", "w3"))


def _uniform_draw(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    blocks, labels = [], []
    for g, bounds in enumerate(UNIFORM3_BOUNDS):
        cols = [rng.uniform(lo, hi, size=n) for lo, hi in bounds]
        blocks.append(np.column_stack(cols))
        labels.append(np.full(n, g))
    return np.vstack(blocks), np.concatenate(labels)


def generate_uniform3(n_per_class: int, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Three 2-D uniform classes on boxes; independent train and test draws."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    frame = _frame3()
    out = []
    for _ in ("train", "test"):
        X, y = _uniform_draw(rng, n_per_class)
        out.append(LabeledDataset.from_arrays(frame, X, y, ("x", "y")))
    return out[0], out[1]


def _gaussian_draw(rng: np.random.Generator, n: int, spread: str) -> tuple[np.ndarray, np.ndarray]:
    blocks, labels = [], []
    for g, (mu, k) in enumerate(zip(GAUSSIAN3_MEANS, GAUSSIAN3_SPREADS)):
        sd = k if spread == "std" else math.sqrt(k)
        blocks.append(rng.normal(loc=mu, scale=sd, size=(n, len(mu))))
        labels.append(np.full(n, g))
    return np.vstack(blocks), np.concatenate(labels)


def generate_gaussian3(n_per_class: int, seed: int,
                       spread: str = "std") -> tuple[LabeledDataset, LabeledDataset]:
    """Three 4-D isotropic Gaussian classes with per-class spread k in (10, 15, 12).

    ``spread="std"`` uses k as the per-dimension standard deviation,
    ``spread="variance"`` uses sqrt(k).
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if spread not in ("std", "variance"):
        raise ValueError(f"spread must be 'std' or 'variance', got {spread!r}")
    rng = np.random.default_rng(seed)
    frame = _frame3()
    out = []
    for _ in ("train", "test"):
        X, y = _gaussian_draw(rng, n_per_class, spread)
        out.append(LabeledDataset.from_arrays(frame, X, y, ("x1", "x2", "x3", "x4")))
    return out[0], out[1]


GENERATORS = {"uniform3": generate_uniform3, "gaussian3": generate_gaussian3}


def stratified_folds(labels: np.ndarray, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Split indices into ``folds`` groups, dealing each class's shuffled members round-robin."""
    labels = np.asarray(labels)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    out: list[list[int]] = [[] for _ in range(folds)]
    start = 0
    for g in np.unique(labels):
        members = np.flatnonzero(labels == g)
        if len(members) < folds:
            raise DatasetError(f"class {g} has {len(members)} samples, fewer than {folds} folds")
        members = rng.permutation(members)
        for k, i in enumerate(members):
            out[(start + k) % folds].append(int(i))
        # rotate so odd-sized classes do not always overfill fold 0
        start += len(members)
    return [np.array(sorted(f), dtype=int) for f in out]
