"""Kohonen self-organizing maps on a rectangular grid, with missing-aware queries."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Pattern


@dataclass(frozen=True)
class SomTrainingConfig:
    epochs: int = 100
    initial_learning_rate: float = 0.5
    final_learning_rate: float = 0.01
    initial_radius: float | None = None  # None -> max(M, N) / 2
    final_radius: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        for name in ("initial_learning_rate", "final_learning_rate"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.final_learning_rate > self.initial_learning_rate:
            raise ValueError("final learning rate exceeds initial learning rate")
        if self.final_radius <= 0 or (self.initial_radius is not None and self.initial_radius <= 0):
            raise ValueError("radii must be positive")
        if self.initial_radius is not None and self.final_radius > self.initial_radius:
            raise ValueError("final radius exceeds initial radius")

    def radius0(self, rows: int, cols: int) -> float:
        r = self.initial_radius if self.initial_radius is not None else max(rows, cols) / 2.0
        return max(r, self.final_radius)


@dataclass(frozen=True, eq=False)
class SomGrid:
    """Trained map; ``weights`` has shape (rows * cols, p) in row-major unit order."""

    rows: int
    cols: int
    weights: np.ndarray
    trained: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != self.rows * self.cols:
            raise ValueError(f"weights must have shape ({self.rows * self.cols}, p), got {w.shape}")
        if not np.isfinite(w).all():
            raise ValueError("weight vectors must be complete and finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n_units(self) -> int:
        return self.rows * self.cols

    @property
    def p(self) -> int:
        return self.weights.shape[1]

    def unit(self, index: int) -> tuple[int, int]:
        return divmod(index, self.cols)

    def index(self, unit: tuple[int, int]) -> int:
        return unit[0] * self.cols + unit[1]

    def to_dict(self) -> dict:
        return {
            "M": self.rows,
            "N": self.cols,
            "p": self.p,
            "weights": [[float(f"{v:.12g}") for v in row] for row in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> SomGrid:
        w = np.array(d["weights"], dtype=float).reshape(int(d["M"]) * int(d["N"]), int(d["p"]))
        return cls(int(d["M"]), int(d["N"]), w)


def grid_coordinates(rows: int, cols: int) -> np.ndarray:
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.column_stack([r, c]).astype(float)


def _schedule(start: float, end: float, steps: int) -> np.ndarray:
    if steps == 1:
        return np.array([start])
    t = np.arange(steps) / (steps - 1)
    return start * (end / start) ** t


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        X = np.asarray(data, dtype=float)
    else:
        data = list(data)
        if data and isinstance(data[0], Pattern):
            if any(not pat.is_complete for pat in data):
                raise ValueError("SOM training data must be complete patterns")
            X = np.vstack([pat.values for pat in data])
        else:
            X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("SOM training data must be a non-empty list of patterns")
    if not np.isfinite(X).all():
        raise ValueError("SOM training data must be complete patterns")
    return X


def train_som(data: Sequence[Pattern] | np.ndarray, rows: int, cols: int,
              config: SomTrainingConfig = SomTrainingConfig()) -> SomGrid:
    """Online Kohonen training with a Gaussian neighborhood.

    Weights start as samples drawn with replacement from ``data``. Learning
    rate and radius decay exponentially over the total number of
    presentations. Deterministic for a given ``config.seed``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    X = _as_matrix(data)
    n = X.shape[0]
    rng = np.random.default_rng(config.seed)
    W = X[rng.integers(0, n, size=rows * cols)].copy()

    coords = grid_coordinates(rows, cols)
    grid_d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    total = config.epochs * n
    lr = _schedule(config.initial_learning_rate, config.final_learning_rate, total)
    radius = _schedule(config.radius0(rows, cols), config.final_radius, total)
    inv_two_r2 = 1.0 / (2.0 * radius ** 2)

    order = np.concatenate([rng.permutation(n) for _ in range(config.epochs)])
    exp = np.exp
    for t, i in enumerate(order):
        x = X[i]
        diff = x - W
        b = int(np.einsum("ij,ij->i", diff, diff).argmin())
        step = lr[t] * exp(-grid_d2[b] * inv_two_r2[t])
        W += step[:, None] * diff
    return SomGrid(rows, cols, W)


def _sq_distances(grid: SomGrid, x: Pattern) -> np.ndarray:
    avail = x.available
    diff = grid.weights[:, avail] - x.values[avail]
    return np.einsum("ij,ij->i", diff, diff)


def bmu(grid: SomGrid, x: Pattern) -> tuple[int, int]:
    """Best matching unit over the available dimensions of ``x``; ties go to row-major order."""
    return grid.unit(int(np.argmin(_sq_distances(grid, x))))


def k_nearest_units(grid: SomGrid, x: Pattern, K: int) -> list[tuple[tuple[int, int], float]]:
    """The ``K`` closest units with their (unsquared) Euclidean distances, ascending."""
    if K < 1 or K > grid.n_units:
        raise ValueError(f"K must be in [1, {grid.n_units}] for a {grid.rows}x{grid.cols} grid, got {K}")
    d2 = _sq_distances(grid, x)
    idx = np.argsort(d2, kind="stable")[:K]
    return [(grid.unit(int(i)), math.sqrt(float(d2[i]))) for i in idx]


def quantization_error(grid: SomGrid, data) -> float:
    """Mean Euclidean distance from each sample to its best matching unit."""
    X = _as_matrix(data)
    d2 = ((X[:, None, :] - grid.weights[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min(axis=1)).mean())


def initial_grid(data, rows: int, cols: int, config: SomTrainingConfig = SomTrainingConfig()) -> SomGrid:
    """The untrained starting map ``train_som`` would use for the same seed."""
    X = _as_matrix(data)
    rng = np.random.default_rng(config.seed)
    return SomGrid(rows, cols, X[rng.integers(0, X.shape[0], size=rows * cols)], trained=False)


def config_to_dict(config: SomTrainingConfig) -> dict:
    return asdict(config)
