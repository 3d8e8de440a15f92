"""Gaussian three-class data with 1, 2 and 3 coordinates removed per test pattern."""

import argparse
from pathlib import Path

from _common import load_config

from credal.cli import format_table, run_benchmark, write_reports


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-missing", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()
    for n in args.n_missing:
        changes = {"n_missing": n} if args.trials is None else {"n_missing": n, "trials": args.trials}
        rc = load_config("exp2_gaussian.json", **changes)
        reports = run_benchmark(rc)
        write_reports(reports, rc, Path(rc.out), stem=f"benchmark_n{n}")
        print(f"\n(1500, {n})")
        print(format_table(reports))
    print(f"\nwritten to {rc.out}")


if __name__ == "__main__":
    main()
