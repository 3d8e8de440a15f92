"""Scoring, baseline pipelines and the repeated 2-fold cross-validation protocol."""

from __future__ import annotations

import math
import os
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .belief import Frame, cardinality, decide, ds_combine, redistribute_ignorance
from .ccai import (
    CcaiConfig,
    CcaiModel,
    classify,
    classify_step1,
    classify_step2,
    fit,
    prototype_bbas,
    step1_bbas,
)
from .dataset import (
    LabeledDataset,
    Pattern,
    compute_class_stats,
    inject_missing,
    stratified_folds,
)
from .imputation import knni_impute, mean_impute, somi_impute
from .som import train_som

METHODS = ("ccai", "mean", "knni", "somi", "step1-only", "step2-only")


@dataclass(frozen=True)
class PipelineConfig:
    ccai: CcaiConfig = field(default_factory=CcaiConfig)
    knn_k: int = 9
    somi_M: int = 6
    somi_N: int = 8

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvalReport:
    method: str
    Re: float
    Ri: dict[int, float]
    correct: float
    n_test: int
    elapsed_seconds: float
    seed: int
    config: dict = field(default_factory=dict)
    dataset: str = ""
    n_missing: int = 0
    n_evaluations: int = 1

    @property
    def Ri_2(self) -> float:
        return self.Ri.get(2, 0.0)

    @property
    def Ri_other(self) -> float:
        return math.fsum(v for j, v in self.Ri.items() if j != 2)

    def partition_total(self) -> float:
        return self.correct + self.Re + math.fsum(self.Ri.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["Ri"] = {str(j): v for j, v in sorted(self.Ri.items())}
        return d

    CSV_FIELDS = ("method", "dataset", "n_missing", "Re", "Ri_2", "Ri_other", "seconds", "seed")

    def csv_row(self) -> dict:
        return {
            "method": self.method,
            "dataset": self.dataset,
            "n_missing": self.n_missing,
            "Re": f"{self.Re:.6f}",
            "Ri_2": f"{self.Ri_2:.6f}",
            "Ri_other": f"{self.Ri_other:.6f}",
            "seconds": f"{self.elapsed_seconds:.6f}",
            "seed": self.seed,
        }


def score(decisions: Sequence[int], truths: Sequence[int], frame: Frame | None = None) -> dict:
    """Error, correct and per-cardinality imprecision rates of hard credal decisions.

    A decision is an error when it excludes the true class, correct when it
    is exactly the true singleton, and imprecise at its cardinality
    otherwise (Omega counts at cardinality c).
    """
    if len(decisions) != len(truths):
        raise ValueError(f"{len(decisions)} decisions for {len(truths)} truths")
    T = len(truths)
    if T == 0:
        raise ValueError("nothing to score")
    errors = correct = 0
    imprecise: dict[int, int] = {}
    for a, t in zip(decisions, truths):
        if frame is not None and not 0 <= t < frame.c:
            raise ValueError(f"truth {t} is not a class of the frame")
        if not a >> t & 1:
            errors += 1
        elif a == 1 << t:
            correct += 1
        else:
            j = cardinality(a)
            imprecise[j] = imprecise.get(j, 0) + 1
    return {
        "Re": errors / T,
        "Ri": {j: n / T for j, n in sorted(imprecise.items())},
        "correct": correct / T,
        "T": T,
    }


def _decide_prototype(x: Pattern, stats, frame: Frame, eta: float) -> int:
    mass = ds_combine(prototype_bbas(x, stats, frame, eta))
    if any(cardinality(f) == 1 for f in mass.masses):
        mass = redistribute_ignorance(mass)
    return decide(mass)


def _som_seed(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0] % 2**31)


def build_decider(method: str, train: LabeledDataset, config: PipelineConfig, seed: int) -> Callable[[Pattern], int]:
    """Off-line training for ``method``; returns the per-pattern decision function."""
    ccfg = replace(config.ccai, som=replace(config.ccai.som, seed=_som_seed(seed)))
    frame = train.frame
    if method == "step1-only":
        # no imputation, so no maps to train
        stats = compute_class_stats(train)
        return lambda x: classify_step1(prototype_bbas(x, stats, frame, ccfg.eta), ccfg).decision
    if method in ("ccai", "step2-only"):
        model: CcaiModel = fit(train, ccfg)
        if method == "ccai":
            return lambda x: classify(x, model).decision

        def step2(x: Pattern) -> int:
            if x.is_complete:
                return classify_step1(step1_bbas(x, model), model.config).decision
            return classify_step2(x, model).decision
        return step2

    stats = compute_class_stats(train)
    eta = ccfg.eta
    if method == "mean":
        return lambda x: _decide_prototype(mean_impute(x, stats, "global"), stats, frame, eta)
    if method == "knni":
        k = min(config.knn_k, len(train))
        return lambda x: _decide_prototype(knni_impute(x, train, k), stats, frame, eta)
    if method == "somi":
        grid = train_som(train.values, config.somi_M, config.somi_N, ccfg.som)
        return lambda x: _decide_prototype(somi_impute(x, grid), stats, frame, eta)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def run_pipeline(method: str, train: LabeledDataset, test: LabeledDataset,
                 config: PipelineConfig = PipelineConfig(), seed: int = 0) -> EvalReport:
    """Train ``method`` on ``train`` and score it on ``test``.

    Only imputation and classification are timed; SOM training and
    statistics are off-line work.
    """
    if not train.is_complete:
        raise ValueError("training data must be complete")
    decide_one = build_decider(method, train, config, seed)
    t0 = time.perf_counter()
    decisions = [decide_one(x) for x in test.patterns]
    elapsed = time.perf_counter() - t0
    rates = score(decisions, test.labels.tolist(), test.frame)
    return EvalReport(method, rates["Re"], rates["Ri"], rates["correct"], rates["T"], elapsed, seed,
                      config.to_dict())


def average_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Mean rates and mean per-evaluation time over ``reports``."""
    if not reports:
        raise ValueError("no reports to average")
    n = len(reports)
    cards = sorted({j for r in reports for j in r.Ri})
    first = reports[0]
    return replace(
        first,
        Re=math.fsum(r.Re for r in reports) / n,
        Ri={j: math.fsum(r.Ri.get(j, 0.0) for r in reports) / n for j in cards},
        correct=math.fsum(r.correct for r in reports) / n,
        n_test=sum(r.n_test for r in reports),
        elapsed_seconds=math.fsum(r.elapsed_seconds for r in reports) / n,
        n_evaluations=sum(r.n_evaluations for r in reports),
    )


def worker_count(n_tasks: int) -> int:
    """Workers allowed by ``CREDAL_THREADS`` (unset or 0 means CPU count)."""
    raw = os.environ.get("CREDAL_THREADS", "0").strip() or "0"
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"CREDAL_THREADS must be an integer, got {raw!r}") from None
    if cap <= 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def parallel_map(fn, tasks: Sequence) -> list:
    workers = worker_count(len(tasks))
    if workers == 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def cv_splits(dataset: LabeledDataset, repeats: int, folds: int, seed: int) -> list[tuple]:
    """(train indices, test indices, injection seed, pipeline seed) for every evaluation.

    Seeds come from a fixed SeedSequence tree, so serial and parallel runs
    see the same tasks.
    """
    tasks = []
    for rep_ss in np.random.SeedSequence(seed).spawn(repeats):
        split_ss, *eval_ss = rep_ss.spawn(folds + 1)
        parts = stratified_folds(dataset.labels, folds, np.random.default_rng(split_ss))
        for k in range(folds):
            inject_seed, pipe_seed = (int(v) for v in eval_ss[k].generate_state(2) % 2**31)
            test_idx = parts[k]
            train_idx = np.concatenate([parts[j] for j in range(folds) if j != k])
            tasks.append((np.sort(train_idx), test_idx, inject_seed, pipe_seed))
    return tasks


def cross_validate(dataset: LabeledDataset, method: str, n_missing: int, repeats: int = 10,
                   folds: int = 2, seed: int = 0, config: PipelineConfig = PipelineConfig()) -> EvalReport:
    """Stratified ``folds``-fold CV repeated ``repeats`` times; rates averaged over all evaluations."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    tasks = cv_splits(dataset, repeats, folds, seed)

    def run(task) -> EvalReport:
        train_idx, test_idx, inject_seed, pipe_seed = task
        test = inject_missing(dataset.subset(test_idx), n_missing, inject_seed)
        return run_pipeline(method, dataset.subset(train_idx), test, config, pipe_seed)

    report = average_reports(parallel_map(run, tasks))
    return replace(report, seed=seed, n_missing=n_missing)
