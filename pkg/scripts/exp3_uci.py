"""Repeated stratified 2-fold cross-validation on a UCI table (Iris by default)."""

import argparse
from pathlib import Path

from _common import load_config

from credal.cli import format_table, run_benchmark, write_reports


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--csv", help="other UCI table; defaults to the bundled Iris file")
    ap.add_argument("--label-column")
    ap.add_argument("--n-missing", type=int)
    args = ap.parse_args()
    changes = {k: v for k, v in {"csv": args.csv, "label_column": args.label_column,
                                 "n_missing": args.n_missing}.items() if v is not None}
    rc = load_config("exp3_iris.json", **changes)
    reports = run_benchmark(rc)
    write_reports(reports, rc, Path(rc.out))
    print(format_table(reports))
    print(f"written to {rc.out}")


if __name__ == "__main__":
    main()
