"""Missing-value estimators: per-class SOM + K-NN estimation and three baselines."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial.distance import pdist

from .dataset import ClassStats, LabeledDataset, Pattern
from .som import SomGrid, bmu, k_nearest_units


@dataclass(frozen=True, eq=False)
class ClassImputation:
    class_index: int
    edited: Pattern
    rho: float
    neighbor_weights: np.ndarray


@dataclass(frozen=True)
class LambdaScale:
    """Decay rate whose inverse is the mean pairwise distance between pooled SOM weights."""

    value: float

    def __post_init__(self):
        if not self.value > 0 or not math.isfinite(self.value):
            raise ValueError(f"lambda must be positive and finite, got {self.value}")


def compute_lambda(grids: Sequence[SomGrid]) -> LambdaScale:
    pooled = np.vstack([g.weights for g in grids])
    T = pooled.shape[0]
    if T < 2:
        raise ValueError("need at least two weighting vectors to compute lambda")
    total = float(pdist(pooled).sum())
    if total <= 0.0:
        raise ValueError("degenerate scale: all weighting vectors coincide")
    return LambdaScale(T * (T - 1) / (2.0 * total))


def som_knn_impute(x: Pattern, grid: SomGrid, lam: LambdaScale, K: int,
                   class_index: int = 0) -> ClassImputation:
    """Fill the missing entries of ``x`` with an exp(-lambda d)-weighted mean of its
    ``K`` nearest units in ``grid``; distances use the available dimensions only."""
    if x.is_complete:
        raise ValueError("som_knn_impute called on a complete pattern")
    nearest = k_nearest_units(grid, x, K)
    idx = np.array([grid.index(u) for u, _ in nearest])
    d = np.array([dist for _, dist in nearest])
    w = np.exp(-lam.value * d)
    rho = float(w.sum())
    if rho <= 0.0:
        raise ValueError("all neighbor weights underflowed to zero")
    estimate = w @ grid.weights[idx] / rho
    return ClassImputation(class_index, x.filled(estimate), rho, w)


def mean_impute(x: Pattern, stats: ClassStats, mode: Literal["global"] | int = "global") -> Pattern:
    """Fill with the global training mean, or with class ``mode``'s prototype."""
    if x.is_complete:
        return x
    fill = stats.global_mean if mode == "global" else stats.prototypes[int(mode)]
    return x.filled(fill)


def _nearest_rows(x: Pattern, X: np.ndarray, K: int) -> np.ndarray:
    avail = x.available
    diff = X[:, avail] - x.values[avail]
    d2 = np.einsum("ij,ij->i", diff, diff)
    # ties at the K-th distance go to the lower row index
    return np.argsort(d2, kind="stable")[:K]


def knni_impute(x: Pattern, training: LabeledDataset, K: int) -> Pattern:
    """Unweighted mean of the ``K`` nearest training patterns on the missing dimensions."""
    n = len(training)
    if K < 1 or K > n:
        raise ValueError(f"K must be in [1, {n}], got {K}")
    if x.is_complete:
        return x
    X = training.values
    idx = _nearest_rows(x, X, K)
    return x.filled(X[idx].mean(axis=0))


def activation_group(grid: SomGrid, unit: tuple[int, int]) -> list[int]:
    """The unit plus its 8-neighborhood, clipped at the grid borders."""
    r0, c0 = unit
    return [grid.index((r, c))
            for r in range(max(r0 - 1, 0), min(r0 + 2, grid.rows))
            for c in range(max(c0 - 1, 0), min(c0 + 2, grid.cols))]


def somi_impute(x: Pattern, global_grid: SomGrid) -> Pattern:
    """Fill from the mean weights of the BMU's activation group in a whole-dataset map."""
    if x.is_complete:
        return x
    group = activation_group(global_grid, bmu(global_grid, x))
    return x.filled(global_grid.weights[group].mean(axis=0))
