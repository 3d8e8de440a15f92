"""Command-line entry point: generate, fit, classify, benchmark, tune.

Every command takes an optional JSON ``--config`` file; explicit flags win
over file values. Exit status is 0 on success, 2 for bad input or
configuration, and 1 when a pipeline stage fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .ccai import CcaiConfig, CcaiModel, classify, fit, tune_epsilon
from .dataset import (
    GENERATORS,
    DatasetError,
    LabeledDataset,
    drop_dimensions,
    generate_gaussian3,
    inject_missing,
    load_csv,
    read_patterns,
    split_by_completeness,
    write_csv,
)
from .eval import (
    METHODS,
    EvalReport,
    PipelineConfig,
    average_reports,
    cross_validate,
    parallel_map,
    run_pipeline,
)
from .som import SomTrainingConfig


class ConfigError(ValueError):
    """Invalid run configuration (unknown key, bad value, conflicting sources)."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage


@dataclass
class RunConfig:
    # data source: a generator name or a CSV file
    generator: str | None = None
    n_per_class: int = 500
    spread: str = "std"
    trials: int = 10
    drop_dims: list[int] = field(default_factory=list)
    csv: str | None = None
    label_column: str = "label"
    missing_token: str = "?"
    repeats: int = 10
    folds: int = 2
    n_missing: int = 0
    methods: list[str] = field(default_factory=lambda: ["ccai", "mean", "knni", "somi"])
    seed: int = 0
    eta: float = 0.7
    epsilon: float = 0.3
    K: int = 4
    M: int = 3
    N: int = 4
    redistribute_omega: bool = False
    som_epochs: int = 100
    knn_k: int = 9
    somi_M: int = 6
    somi_N: int = 8
    epsilon_grid: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    tune_folds: int = 5
    out: str = "results"

    def __post_init__(self):
        if self.generator is not None and self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}; expected one of {sorted(GENERATORS)}")
        if self.generator is not None and self.csv is not None:
            raise ConfigError("give either 'generator' or 'csv', not both")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; expected a subset of {list(METHODS)}")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        for name in ("n_per_class", "trials", "repeats", "som_epochs", "knn_k", "somi_M", "somi_N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.folds < 2 or self.tune_folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.n_missing < 0:
            raise ConfigError("n_missing must be >= 0")
        if self.spread not in ("std", "variance"):
            raise ConfigError(f"spread must be 'std' or 'variance', got {self.spread!r}")
        if not self.epsilon_grid or any(not 0.0 < e <= 1.0 for e in self.epsilon_grid):
            raise ConfigError("epsilon_grid values must lie in (0, 1]")
        try:
            self.ccai_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        return cls(**d)

    def ccai_config(self) -> CcaiConfig:
        return CcaiConfig(eta=self.eta, epsilon=self.epsilon, K=self.K, M=self.M, N=self.N,
                          redistribute_omega=self.redistribute_omega,
                          som=SomTrainingConfig(epochs=self.som_epochs, seed=self.seed))

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(self.ccai_config(), knn_k=self.knn_k, somi_M=self.somi_M, somi_N=self.somi_N)

    def to_dict(self) -> dict:
        return asdict(self)


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        m, n = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like MxN, got {text!r}") from None
    return m, n


def _csv_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig keys")
    common.add_argument("--seed", type=int)
    common.add_argument("--eta", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--k", type=int, dest="K", help="neighbors used by the per-class SOM estimate")
    common.add_argument("--grid", type=_parse_grid, help="per-class SOM size, e.g. 3x4")
    common.add_argument("--n-missing", type=int, dest="n_missing")
    common.add_argument("--methods", type=_csv_list, help="comma-separated subset of " + ",".join(METHODS))
    common.add_argument("--out")
    common.add_argument("--redistribute-omega", action="store_const", const=True, dest="redistribute_omega")
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--generator", choices=sorted(GENERATORS))
    data.add_argument("--n-per-class", type=int, dest="n_per_class")
    data.add_argument("--spread", choices=("std", "variance"))
    data.add_argument("--trials", type=int)
    data.add_argument("--drop-dims", type=_int_list, dest="drop_dims")
    data.add_argument("--csv")
    data.add_argument("--label-column", dest="label_column")
    data.add_argument("--missing-token", dest="missing_token")
    data.add_argument("--repeats", type=int)

    parser = argparse.ArgumentParser(prog="credal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common, data], help="write synthetic train/test CSVs")
    sub.add_parser("fit", parents=[common, data], help="train a model on a CSV and save it as JSON")
    p = sub.add_parser("classify", parents=[common], help="classify the rows of a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    sub.add_parser("benchmark", parents=[common, data], help="compare methods on synthetic or CSV data")
    p = sub.add_parser("tune", parents=[common, data], help="cross-validated epsilon table on training data")
    p.add_argument("--epsilon-grid", type=_float_list, dest="epsilon_grid")
    return parser


_NOT_CONFIG = {"command", "config", "grid", "model", "input"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(base, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG and v is not None}
    if getattr(args, "grid", None) is not None:
        overrides["M"], overrides["N"] = args.grid
    if "generator" in overrides:
        base.pop("csv", None)
    if "csv" in overrides:
        base.pop("generator", None)
    return RunConfig.from_dict({**base, **overrides})


# -- commands ------------------------------------------------------------------

def _generate(rc: RunConfig, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    if rc.generator == "gaussian3":
        return generate_gaussian3(rc.n_per_class, seed, spread=rc.spread)
    return GENERATORS[rc.generator](rc.n_per_class, seed)


def cmd_generate(rc: RunConfig) -> int:
    if rc.generator is None:
        raise ConfigError("generate needs --generator")
    train, test = _generate(rc, rc.seed)
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, ds in (("train", train), ("test", test)):
        path = out / f"{rc.generator}_{name}.csv"
        write_csv(ds, path)
        counts = ", ".join(f"{lab}={n}" for lab, n in zip(ds.frame.labels, ds.class_counts()))
        print(f"{path}: {len(ds)} rows ({counts})")
    return 0


def _load(rc: RunConfig) -> LabeledDataset:
    if rc.csv is None:
        raise ConfigError("this command needs --csv (and --label-column)")
    return load_csv(rc.csv, rc.label_column, rc.missing_token)


def cmd_fit(rc: RunConfig) -> int:
    data = _load(rc)
    train, _ = split_by_completeness(data) if not data.is_complete else (data, None)
    model = _stage("fit", fit, train, rc.ccai_config())
    out = Path(rc.out)
    path = out if out.suffix == ".json" else out / "model.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    model.save(path)
    print(f"{path}: {model.frame.c} classes, p={model.p}, {len(train)} training patterns, lambda={model.lam.value:.6g}")
    return 0


def cmd_classify(rc: RunConfig, model_path: str, input_path: str, overrides: dict | None = None) -> int:
    """Classify with the saved model's settings; ``overrides`` (eta, epsilon, ...) replace them."""
    try:
        model = CcaiModel.load(model_path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot load model {model_path}: {exc}") from None
    names = model.attribute_names or tuple(f"x{j + 1}" for j in range(model.p))
    if overrides:
        try:
            model = model.with_config(**overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    patterns = read_patterns(input_path, names, rc.missing_token)
    rows = []
    for i, x in enumerate(patterns, start=1):
        rec = _stage(f"classify row {i}", classify, x, model).to_record()
        rows.append({"row": i, **rec})
    out = Path(rc.out)
    path = out if out.suffix == ".json" else out / "classified.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"model": str(model_path), "input": str(input_path), "config": model.config.to_dict(), "results": rows}
    path.write_text(json.dumps(doc, indent=1))
    steps = sum(r["path"] == "step2" for r in rows)
    print(f"{path}: {len(rows)} patterns classified ({steps} via imputation)")
    return 0


def _trial_seeds(seed: int, trials: int) -> list[tuple[int, int, int]]:
    """(data seed, injection seed, pipeline seed) per trial."""
    out = []
    for ss in np.random.SeedSequence(seed).spawn(trials):
        a, b, c = (int(v) for v in ss.generate_state(3) % 2**31)
        out.append((a, b, c))
    return out


def run_benchmark(rc: RunConfig) -> list[EvalReport]:
    """Averaged report per method for the configured data source."""
    cfg = rc.pipeline_config()
    if rc.generator is not None:
        def trial(seeds):
            data_seed, inject_seed, pipe_seed = seeds
            train, test = _generate(rc, data_seed)
            test = drop_dimensions(test, rc.drop_dims) if rc.drop_dims else inject_missing(test, rc.n_missing, inject_seed)
            return [run_pipeline(m, train, test, cfg, pipe_seed) for m in rc.methods]

        per_trial = parallel_map(trial, _trial_seeds(rc.seed, rc.trials))
        reports = [average_reports([t[i] for t in per_trial]) for i in range(len(rc.methods))]
        n_missing = len(rc.drop_dims) if rc.drop_dims else rc.n_missing
        name = rc.generator
    else:
        data = _load(rc)
        name = Path(rc.csv).stem
        if not data.is_complete:
            # files that ship with gaps: complete rows train, incomplete rows test
            train, test = split_by_completeness(data)
            reports = [run_pipeline(m, train, test, cfg, rc.seed) for m in rc.methods]
            n_missing = -1
        else:
            reports = [cross_validate(data, m, rc.n_missing, rc.repeats, rc.folds, rc.seed, cfg) for m in rc.methods]
            n_missing = rc.n_missing
    return [replace(r, dataset=name, n_missing=n_missing, seed=rc.seed, config=rc.to_dict()) for r in reports]


def format_table(reports: Sequence[EvalReport]) -> str:
    lines = [f"{'method':<12} {'Re (%)':>8} {'Ri_2 (%)':>9} {'Ri_>2 (%)':>10} {'time (s)':>9}"]
    for r in reports:
        lines.append(f"{r.method:<12} {100 * r.Re:8.2f} {100 * r.Ri_2:9.2f} {100 * r.Ri_other:10.2f} "
                     f"{r.elapsed_seconds:9.3f}")
    return "\n".join(lines)


def write_reports(reports: Sequence[EvalReport], rc: RunConfig, out_dir: Path, stem: str = "benchmark") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{stem}.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=EvalReport.CSV_FIELDS)
        w.writeheader()
        for r in reports:
            w.writerow(r.csv_row())
    doc = {"config": rc.to_dict(), "reports": [{k: v for k, v in r.to_dict().items() if k != "config"} for r in reports]}
    (out_dir / f"{stem}.json").write_text(json.dumps(doc, indent=1))


def cmd_benchmark(rc: RunConfig) -> int:
    if rc.generator is None and rc.csv is None:
        raise ConfigError("benchmark needs --generator or --csv")
    reports = _stage("benchmark", run_benchmark, rc)
    write_reports(reports, rc, Path(rc.out))
    print(format_table(reports))
    print(f"reports written to {rc.out}/benchmark.csv and {rc.out}/benchmark.json")
    return 0


def cmd_tune(rc: RunConfig) -> int:
    if rc.generator is not None:
        train, _ = _generate(rc, rc.seed)
    else:
        data = _load(rc)
        train = split_by_completeness(data)[0] if not data.is_complete else data
    n_missing = rc.n_missing or 1
    table = _stage("tune", tune_epsilon, train, rc.ccai_config(), rc.epsilon_grid, rc.tune_folds, rc.seed, n_missing)
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "tune.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=("epsilon", "Re", "Ri_2"))
        w.writeheader()
        for row in table:
            w.writerow({"epsilon": row["epsilon"], "Re": f"{row['Re']:.6f}", "Ri_2": f"{row['Ri_2']:.6f}"})
    (out / "tune.json").write_text(json.dumps({"config": rc.to_dict(), "table": table}, indent=1))
    print(f"{'epsilon':>8} {'Re (%)':>8} {'Ri_2 (%)':>9}")
    for row in table:
        print(f"{row['epsilon']:8.2f} {100 * row['Re']:8.2f} {100 * row['Ri_2']:9.2f}")
    return 0


def _stage(stage: str, fn, *args):
    try:
        return fn(*args)
    except (ConfigError, DatasetError):
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = resolve_config(args)
        if args.command == "generate":
            return cmd_generate(rc)
        if args.command == "fit":
            return cmd_fit(rc)
        if args.command == "classify":
            given = {k: getattr(args, k) for k in ("eta", "epsilon", "K", "redistribute_omega")}
            return cmd_classify(rc, args.model, args.input, {k: v for k, v in given.items() if v is not None})
        if args.command == "benchmark":
            return cmd_benchmark(rc)
        return cmd_tune(rc)
    except (ConfigError, DatasetError, FileNotFoundError) as exc:
        print(f"credal {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (TypeError, ValueError) as exc:
        # bad value types in a config file surface here
        print(f"credal {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"credal {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
