"""End-to-end acceptance checks, one test per criterion, each logging a PASS/FAIL line.

Benchmark settings come from ``scripts/configs`` so that the CLI, the
experiment scripts and this suite run the same configurations.
"""

import json
import math
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from oracles import ds_enumerate, product_expansion, to_frozen

from credal.belief import Frame, ccai_fuse, ds_combine, make_simple_bba
from credal.cli import RunConfig, run_benchmark

ROOT = Path(__file__).parents[1]
CONFIGS = ROOT / "scripts" / "configs"


def load_config(name: str, **changes) -> RunConfig:
    d = json.loads((CONFIGS / name).read_text())
    if "csv" in d:
        d["csv"] = str(ROOT / d["csv"])
    return RunConfig.from_dict({**d, **changes})


def by_method(reports):
    return {r.method: r for r in reports}


def pct(v: float) -> str:
    return f"{100 * v:.2f}%"


@pytest.fixture
def check(acceptance_log):
    def record(tag: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        acceptance_log.append(line)
        print(line)
        assert ok, line
    return record


@pytest.fixture(scope="module")
def exp1():
    t0 = time.perf_counter()
    reports = run_benchmark(load_config("exp1_uniform.json"))
    return by_method(reports), time.perf_counter() - t0


@pytest.fixture(scope="module")
def exp2():
    runs, seconds = {}, {}
    for n in (1, 2, 3):
        t0 = time.perf_counter()
        runs[n] = by_method(run_benchmark(load_config("exp2_gaussian.json", n_missing=n)))
        seconds[n] = time.perf_counter() - t0
    return runs, seconds


@pytest.fixture(scope="module")
def iris():
    t0 = time.perf_counter()
    reports = run_benchmark(load_config("exp3_iris.json"))
    return by_method(reports), time.perf_counter() - t0


def random_simple_masses(rng, c):
    a = rng.uniform(0.0, 0.98, size=c)
    a[rng.random(c) < 0.15] = 0.0
    return a


def test_c1_algebra_matches_enumeration_oracles(check):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        c = (2, 3, 4)[i % 3]
        frame = Frame(tuple(f"w{g}" for g in range(c)))
        a = random_simple_masses(rng, c)
        bbas = [make_simple_bba(frame, g, float(v)) for g, v in enumerate(a)]
        ds = to_frozen(c, ds_combine(bbas).masses)
        ds_ref = ds_enumerate(c, [to_frozen(c, m.masses) for m in bbas])
        fused = to_frozen(c, ccai_fuse(bbas).masses)
        fused_ref = product_expansion(list(a))
        for got, want in ((ds, ds_ref), (fused, fused_ref)):
            for key in set(got) | set(want):
                worst = max(worst, abs(got.get(key, 0.0) - want.get(key, 0.0)))
    elapsed = time.perf_counter() - t0
    check("1 algebra oracles", worst < 1e-9 and elapsed < 5.0,
          f"max deviation {worst:.2e} (< 1e-9) over 1000 instances in {elapsed:.2f}s (< 5s)")


def test_c2_fusion_totals_one_without_normalization(check):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        c = int(rng.integers(1, 7))
        frame = Frame(tuple(f"w{g}" for g in range(c)))
        a = rng.random(c)
        a[rng.random(c) < 0.1] = rng.choice([0.0, 1.0, 1e-13, 1 - 1e-13])
        m = ccai_fuse([make_simple_bba(frame, g, float(v)) for g, v in enumerate(a)])
        worst = max(worst, abs(math.fsum(m.masses.values()) - 1.0))
    check("2 fusion total", worst <= 1e-12, f"max |sum - 1| = {worst:.2e} (<= 1e-12) over 10000 inputs")


def test_c3_experiment1_reproduction(check, exp1):
    r, elapsed = exp1
    ccai, s1, s2 = r["ccai"], r["step1-only"], r["step2-only"]
    ok = (ccai.Re <= 0.10 and 0.08 <= ccai.Ri_2 <= 0.30 and s1.Re > ccai.Re and s2.Ri_2 > ccai.Ri_2
          and elapsed < 30.0)
    check("3 experiment 1", ok,
          f"CCAI Re {pct(ccai.Re)} (<= 10%), Ri_2 {pct(ccai.Ri_2)} (in [8%, 30%]); "
          f"step1-only Re {pct(s1.Re)} > CCAI; step2-only Ri_2 {pct(s2.Ri_2)} > CCAI; {elapsed:.1f}s (< 30s)")


def test_c4_experiment2_reproduction(check, exp2):
    runs, seconds = exp2
    r = runs[1]
    ccai = r["ccai"]
    ok = (0.02 <= ccai.Re <= 0.09 and 0.01 <= ccai.Ri_2 <= 0.10 and ccai.Re < r["mean"].Re
          and ccai.Re < r["knni"].Re and seconds[1] < 180.0)
    check("4 experiment 2 (1500,1)", ok,
          f"CCAI Re {pct(ccai.Re)} (in [2%, 9%]), Ri_2 {pct(ccai.Ri_2)} (in [1%, 10%]); "
          f"mean Re {pct(r['mean'].Re)}, KNNI Re {pct(r['knni'].Re)} (both > CCAI); {seconds[1]:.1f}s (< 180s)")


def test_c5_experiment2_degradation(check, exp2):
    runs, _ = exp2
    rows, ok = [], True
    for method in runs[1]:
        res = [runs[n][method].Re for n in (1, 2, 3)]
        ok &= res[0] <= res[1] <= res[2]
        rows.append(f"{method} " + "/".join(f"{100 * v:.2f}" for v in res))
    check("5 degradation", ok, "Re% at n=1/2/3 non-decreasing: " + ", ".join(rows))


def test_c6_iris_cross_validation(check, iris):
    r, elapsed = iris
    ccai = r["ccai"]
    ok = ccai.Re <= 0.15 and ccai.Ri_2 <= 0.15 and elapsed < 30.0
    check("6 iris 2-fold x 10", ok,
          f"CCAI Re {pct(ccai.Re)} (<= 15%), Ri_2 {pct(ccai.Ri_2)} (<= 15%); {elapsed:.1f}s (< 30s)")


def test_c7_knni_slower_than_ccai(check, exp2):
    r = exp2[0][1]
    knni, ccai = r["knni"].elapsed_seconds, r["ccai"].elapsed_seconds
    check("7 relative timing", knni > ccai,
          f"mean classification time per 1500-pattern test set: KNNI {knni:.3f}s > CCAI {ccai:.3f}s")


def test_c8_property_suites(check):
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(ROOT / "tests"),
         "--ignore", str(ROOT / "tests" / "test_acceptance.py")],
        cwd=ROOT, capture_output=True, text=True, check=False)
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-300:]
    check("8 property suites", proc.returncode == 0 and elapsed < 120.0, f"{summary} ({elapsed:.1f}s, < 120s)")


def test_c9_no_wide_meta_classes(check, exp1, exp2, iris):
    reports = list(exp1[0].values()) + list(iris[0].values())
    reports += [rep for run in exp2[0].values() for rep in run.values()]
    worst = max(v for rep in reports for v in [0.0, *(r for j, r in rep.Ri.items() if j >= 3)])
    check("9 Ri_j>=3", worst == 0.0, f"max Ri_j for j >= 3 over {len(reports)} benchmark reports = {worst}")


def test_redistribution_flag_keeps_decisions(check):
    base = load_config("exp2_gaussian.json", trials=2, methods=["ccai"])
    off = run_benchmark(base)[0]
    on = run_benchmark(replace(base, redistribute_omega=True))[0]
    same = (off.Re, off.Ri, off.correct) == (on.Re, on.Ri, on.correct)
    check("Omega redistribution on/off", same,
          f"CCAI Re {pct(off.Re)} / {pct(on.Re)}, Ri_2 {pct(off.Ri_2)} / {pct(on.Ri_2)}")
