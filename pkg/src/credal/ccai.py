"""Credal classification with adaptive imputation.

A pattern is first classified from its available attributes alone: one
simple BBA per class from the distance to that class prototype, combined
with Dempster's rule. When the two best classes are too close to call
(distinguishability ratio above ``epsilon``) the missing values are
estimated once per class from that class's SOM, each edited pattern is
scored against its own class, the scores are discounted by the relative
reliability of their estimates and fused so that partial conflict lands
on meta-classes.
"""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np

from .belief import (
    Frame,
    MassFunction,
    cardinality,
    decide,
    ds_combine,
    fuse_supports,
    make_simple_bba,
    redistribute_ignorance,
    vacuous,
)
from .dataset import (
    ClassStats,
    LabeledDataset,
    Pattern,
    compute_class_stats,
    inject_missing,
    normalized_distances,
    stratified_folds,
)
from .imputation import LambdaScale, compute_lambda
from .som import SomGrid, SomTrainingConfig, train_som

Path_ = Literal["step1", "step2"]


class NoSupportError(ValueError):
    """Every class gives zero support to the pattern (an outlier)."""


@dataclass(frozen=True)
class CcaiConfig:
    eta: float = 0.7
    epsilon: float = 0.3
    K: int = 4
    M: int = 3
    N: int = 4
    redistribute_omega: bool = False
    som: SomTrainingConfig = field(default_factory=SomTrainingConfig)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.K < 1 or self.M < 1 or self.N < 1:
            raise ValueError("K, M and N must be positive")
        if self.M * self.N < self.K:
            raise ValueError(f"grid {self.M}x{self.N} has fewer than K={self.K} units")
        if not 0.5 <= self.eta <= 0.8:
            warnings.warn(f"eta={self.eta} is outside the recommended range [0.5, 0.8]", stacklevel=3)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> CcaiConfig:
        d = dict(d)
        som = SomTrainingConfig(**d.pop("som", {}))
        return cls(som=som, **d)


@dataclass(frozen=True, eq=False)
class CcaiModel:
    frame: Frame
    stats: ClassStats
    grids: tuple[SomGrid, ...]
    lam: LambdaScale
    config: CcaiConfig
    attribute_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.grids) != self.frame.c:
            raise ValueError(f"need one SOM grid per class, got {len(self.grids)} for {self.frame.c} classes")
        if len({g.weights.shape for g in self.grids}) != 1:
            raise ValueError("all class grids must share one size and dimension")

    @cached_property
    def stacked_weights(self) -> np.ndarray:
        """(c, M*N, p) view of every class map."""
        return np.stack([g.weights for g in self.grids])

    @property
    def p(self) -> int:
        return self.stats.p

    def with_config(self, **changes) -> CcaiModel:
        """Same trained state under different decision settings (eta, epsilon, ...)."""
        return replace(self, config=replace(self.config, **changes))

    def to_dict(self) -> dict:
        return {
            "frame": list(self.frame.labels),
            "attribute_names": list(self.attribute_names),
            "stats": self.stats.to_dict(),
            "grids": [g.to_dict() for g in self.grids],
            "lambda": float(f"{self.lam.value:.12g}"),
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CcaiModel:
        return cls(
            frame=Frame(tuple(d["frame"])),
            stats=ClassStats.from_dict(d["stats"]),
            grids=tuple(SomGrid.from_dict(g) for g in d["grids"]),
            lam=LambdaScale(float(d["lambda"])),
            config=CcaiConfig.from_dict(d["config"]),
            attribute_names=tuple(d.get("attribute_names", ())),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> CcaiModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class CredalResult:
    mass: MassFunction
    decision: int
    path: Path_
    chi: float
    per_class_alpha: tuple[float, ...] | None = None

    def to_record(self) -> dict:
        frame = self.mass.frame
        decision = "OMEGA" if self.decision == frame.omega else [frame.labels[i] for i in frame.members(self.decision)]
        return {
            "decision": decision,
            "path": self.path,
            "chi": float(f"{self.chi:.12g}"),
            "alpha": None if self.per_class_alpha is None else [float(f"{a:.12g}") for a in self.per_class_alpha],
            "mass": self.mass.to_records(),
        }


def fit(training: LabeledDataset, config: CcaiConfig = CcaiConfig()) -> CcaiModel:
    """Class statistics, one SOM per class, and the pooled lambda scale."""
    stats = compute_class_stats(training)
    X, y = training.values, training.labels
    grids = []
    for g in range(training.frame.c):
        # distinct but reproducible seed per class grid
        som_cfg = replace(config.som, seed=config.som.seed * 1009 + g)
        grids.append(train_som(X[y == g], config.M, config.N, som_cfg))
    lam = compute_lambda(grids)
    return CcaiModel(training.frame, stats, tuple(grids), lam, config, training.attribute_names)


def _bba_from_distance(frame: Frame, g: int, d: float, eta: float) -> MassFunction:
    return make_simple_bba(frame, g, math.exp(-eta * d))


def prototype_bbas(x: Pattern, stats: ClassStats, frame: Frame, eta: float) -> list[MassFunction]:
    """One simple BBA per class, ``exp(-eta * d)`` on the class and the rest on Omega."""
    d = normalized_distances(x, stats)
    return [_bba_from_distance(frame, g, float(d[g]), eta) for g in range(frame.c)]


def step1_bbas(x: Pattern, model: CcaiModel) -> list[MassFunction]:
    return prototype_bbas(x, model.stats, model.frame, model.config.eta)


def distinguishability(bbas: Sequence[MassFunction]) -> tuple[float, int, int]:
    """Ratio of the second-largest to the largest singleton mass, with both class indices."""
    if len(bbas) < 2:
        raise ValueError("distinguishability needs at least two classes")
    singles = [m[1 << g] for g, m in enumerate(bbas)]
    order = sorted(range(len(singles)), key=lambda g: (-singles[g], g))
    first, second = order[0], order[1]
    top = singles[first]
    if top <= 0.0:
        raise NoSupportError("no class gives positive support to the pattern")
    return singles[second] / top, first, second


def classify_step1(bbas: Sequence[MassFunction], config: CcaiConfig, chi: float | None = None) -> CredalResult:
    """Dempster combination of the per-class BBAs; optionally spread Omega onto singletons."""
    if chi is None:
        chi = distinguishability(bbas)[0] if len(bbas) > 1 else 0.0
    mass = ds_combine(list(bbas))
    # an outlier with every singleton pruned keeps its vacuous mass
    if config.redistribute_omega and any(cardinality(f) == 1 for f in mass.masses):
        mass = redistribute_ignorance(mass)
    return CredalResult(mass, decide(mass), "step1", chi)


def reliability_factors(rho: Sequence[float], epsilon: float) -> np.ndarray:
    """Discount factors rho / max(rho), zeroed where that ratio falls below ``epsilon``."""
    rho = np.asarray(rho, dtype=float)
    rho_max = rho.max()
    if not rho_max > 0:
        raise NoSupportError("all imputation reliabilities are zero")
    alpha_hat = rho / rho_max
    return np.where(alpha_hat < epsilon, 0.0, alpha_hat)


def classify_step2(x: Pattern, model: CcaiModel, chi: float = float("nan")) -> CredalResult:
    """Per-class imputation, reliability discounting and product-expansion fusion.

    All classes are processed at once on the stacked maps; a class whose
    neighbor weights all underflow gets zero reliability.
    """
    if x.is_complete:
        raise ValueError("step 2 needs a pattern with at least one missing value")
    cfg = model.config
    W = model.stacked_weights
    c = W.shape[0]
    avail = x.available
    diff = W[:, :, avail] - x.values[avail]
    d = np.sqrt(np.einsum("gup,gup->gu", diff, diff))
    nearest = np.argsort(d, axis=1, kind="stable")[:, :cfg.K]
    p = np.exp(-model.lam.value * np.take_along_axis(d, nearest, axis=1))
    rho = p.sum(axis=1)
    alpha = reliability_factors(rho, cfg.epsilon)

    live = rho > 0
    estimate = np.zeros((c, x.p))
    units = W[np.arange(c)[:, None], nearest]
    estimate[live] = np.einsum("gk,gkp->gp", p[live], units[live]) / rho[live, None]
    edited = np.where(x.missing, estimate, x.values)
    z = (edited - model.stats.prototypes) / model.stats.dispersions
    own = np.exp(-cfg.eta * np.sqrt((z * z).sum(axis=1) / x.p))
    supports = np.where(alpha > 0, alpha * own, 0.0)
    mass = fuse_supports(model.frame, supports.tolist())
    return CredalResult(mass, decide(mass), "step2", chi, tuple(float(a) for a in alpha))


def classify(x: Pattern, model: CcaiModel) -> CredalResult:
    """Adaptive two-step classification of a single pattern."""
    if x.p != model.p:
        raise ValueError(f"pattern has p={x.p} attributes, model expects p={model.p}")
    frame = model.frame
    if frame.c == 1:
        mass = vacuous(frame)
        return CredalResult(mass, frame.omega, "step1", 0.0)
    singles = np.exp(-model.config.eta * normalized_distances(x, model.stats))
    top2 = np.sort(singles)[-2:]
    if not top2[1] > 0:
        raise NoSupportError("no class gives positive support to the pattern")
    chi = float(top2[0] / top2[1])
    if x.is_complete or chi <= model.config.epsilon:
        bbas = [make_simple_bba(frame, g, float(a)) for g, a in enumerate(singles)]
        return classify_step1(bbas, model.config, chi)
    return classify_step2(x, model, chi)


def classify_all(patterns: Sequence[Pattern], model: CcaiModel) -> list[CredalResult]:
    return [classify(x, model) for x in patterns]


def tune_epsilon(training: LabeledDataset, config: CcaiConfig, epsilons: Sequence[float],
                 folds: int = 5, seed: int = 0, n_missing: int = 1) -> list[dict]:
    """Cross-validated (epsilon, Re, Ri_2) table on ``training`` with injected missing values.

    Each fold's model is fitted once and re-used for every epsilon; the
    caller chooses the error/imprecision trade-off.
    """
    from .eval import score

    for eps in epsilons:
        if not 0.0 < eps <= 1.0:
            raise ValueError(f"epsilon values must lie in (0, 1], got {eps}")
    ss = np.random.SeedSequence(seed)
    split_ss, *fold_ss = ss.spawn(folds + 1)
    parts = stratified_folds(training.labels, folds, np.random.default_rng(split_ss))
    decisions: dict[float, list[int]] = {eps: [] for eps in epsilons}
    truths: list[int] = []
    for k, held in enumerate(parts):
        rest = np.setdiff1d(np.arange(len(training)), held)
        inject_seed, som_seed = (int(s.generate_state(1)[0]) for s in fold_ss[k].spawn(2))
        model = fit(training.subset(rest), replace(config, som=replace(config.som, seed=som_seed % 2**31)))
        test = inject_missing(training.subset(held), n_missing, inject_seed)
        truths.extend(int(t) for t in test.labels)
        for eps in epsilons:
            m = model.with_config(epsilon=eps)
            decisions[eps].extend(classify(x, m).decision for x in test.patterns)
    table = []
    for eps in epsilons:
        rates = score(decisions[eps], truths, training.frame)
        table.append({"epsilon": eps, "Re": rates["Re"], "Ri_2": rates["Ri"].get(2, 0.0)})
    return table
