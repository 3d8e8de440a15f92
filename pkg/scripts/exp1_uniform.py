"""Uniform three-class data with the second coordinate removed from every test pattern."""

from pathlib import Path

from _common import load_config

from credal.cli import format_table, run_benchmark, write_reports


def main():
    rc = load_config("exp1_uniform.json")
    reports = run_benchmark(rc)
    write_reports(reports, rc, Path(rc.out))
    print(format_table(reports))
    print(f"written to {rc.out}")


if __name__ == "__main__":
    main()
