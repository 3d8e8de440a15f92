import csv
import json
import math
from pathlib import Path

import pytest

from credal.cli import ConfigError, RunConfig, main

IRIS = Path(__file__).parents[1] / "data" / "iris.csv"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def uniform_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["generate", "--generator", "uniform3", "--n-per-class", "30", "--seed", "1", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def model_path(uniform_files):
    path = uniform_files / "model.json"
    assert main(["fit", "--csv", str(uniform_files / "uniform3_train.csv"), "--out", str(path)]) == 0
    return path


class TestGenerate:
    def test_row_counts(self, tmp_path):
        assert main(["generate", "--generator", "uniform3", "--n-per-class", "200", "--out", str(tmp_path)]) == 0
        assert len(rows(tmp_path / "uniform3_train.csv")) == 600
        assert len(rows(tmp_path / "uniform3_test.csv")) == 600

    def test_gaussian_sizes(self, tmp_path):
        assert main(["generate", "--generator", "gaussian3", "--n-per-class", "500", "--out", str(tmp_path)]) == 0
        assert len(rows(tmp_path / "gaussian3_test.csv")) == 1500

    def test_same_seed_same_files(self, tmp_path):
        for d in ("a", "b"):
            main(["generate", "--generator", "gaussian3", "--n-per-class", "20", "--seed", "4", "--out", str(tmp_path / d)])
        assert (tmp_path / "a/gaussian3_train.csv").read_bytes() == (tmp_path / "b/gaussian3_train.csv").read_bytes()

    def test_needs_generator(self, tmp_path, capsys):
        assert main(["generate", "--out", str(tmp_path)]) == 2
        assert "--generator" in capsys.readouterr().err


class TestClassify:
    def test_results(self, model_path, tmp_path):
        inp = tmp_path / "in.csv"
        inp.write_text("x,y\n10,12\n10,?\n58,?\n")
        out = tmp_path / "res.json"
        assert main(["classify", "--model", str(model_path), "--input", str(inp), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        res = doc["results"]
        assert [r["row"] for r in res] == [1, 2, 3]
        assert res[0]["path"] == "step1" and res[0]["decision"] == ["w1"]
        for r in res:
            assert math.isclose(sum(m["mass"] for m in r["mass"]), 1.0, abs_tol=1e-9)
        assert doc["config"]["eta"] == 0.7

    def test_flag_overrides_saved_config(self, model_path, tmp_path):
        inp = tmp_path / "in.csv"
        inp.write_text("x,y\n58,?\n")
        out = tmp_path / "res.json"
        assert main(["classify", "--model", str(model_path), "--input", str(inp), "--out", str(out),
                     "--epsilon", "1.0"]) == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["epsilon"] == 1.0 and doc["results"][0]["path"] == "step1"

    def test_all_missing_row(self, model_path, tmp_path, capsys):
        inp = tmp_path / "in.csv"
        inp.write_text("x,y\n1,2\n?,?\n")
        assert main(["classify", "--model", str(model_path), "--input", str(inp), "--out", str(tmp_path)]) == 2
        assert "row 2" in capsys.readouterr().err

    def test_dimension_mismatch(self, model_path, tmp_path, capsys):
        inp = tmp_path / "in.csv"
        inp.write_text("x\n1\n")
        assert main(["classify", "--model", str(model_path), "--input", str(inp), "--out", str(tmp_path)]) == 2
        assert "expected p=2" in capsys.readouterr().err

    def test_missing_model(self, tmp_path):
        inp = tmp_path / "in.csv"
        inp.write_text("x,y\n1,2\n")
        assert main(["classify", "--model", str(tmp_path / "nope.json"), "--input", str(inp)]) == 2


class TestBenchmark:
    ARGS = ("benchmark", "--generator", "gaussian3", "--n-per-class", "40", "--trials", "2", "--n-missing", "1")

    def test_four_methods(self, tmp_path, capsys):
        assert main([*self.ARGS, "--methods", "ccai,knni,mean,somi", "--out", str(tmp_path)]) == 0
        table = rows(tmp_path / "benchmark.csv")
        assert [r["method"] for r in table] == ["ccai", "knni", "mean", "somi"]
        doc = json.loads((tmp_path / "benchmark.json").read_text())
        assert doc["config"]["n_per_class"] == 40
        assert "Re (%)" in capsys.readouterr().out

    def test_same_seed_identical_csv(self, tmp_path):
        def run(d):
            main([*self.ARGS, "--methods", "ccai,mean", "--seed", "7", "--out", str(tmp_path / d)])
            return [{k: v for k, v in r.items() if k != "seconds"} for r in rows(tmp_path / d / "benchmark.csv")]
        assert run("a") == run("b")

    def test_missing_label_column(self, tmp_path, capsys):
        code = main(["benchmark", "--csv", str(IRIS), "--label-column", "kind", "--out", str(tmp_path)])
        assert code == 2
        assert "label column 'kind'" in capsys.readouterr().err

    def test_csv_cross_validation(self, tmp_path):
        code = main(["benchmark", "--csv", str(IRIS), "--label-column", "species", "--repeats", "1",
                     "--n-missing", "2", "--methods", "mean", "--out", str(tmp_path)])
        assert code == 0
        assert rows(tmp_path / "benchmark.csv")[0]["dataset"] == "iris"

    def test_csv_with_gaps_uses_complete_rows_for_training(self, tmp_path):
        src = tmp_path / "gappy.csv"
        lines = IRIS.read_text().splitlines()
        body = [ln if i % 5 else "?," + ln.split(",", 1)[1] for i, ln in enumerate(lines[1:])]
        src.write_text("\n".join([lines[0], *body]) + "\n")
        assert main(["benchmark", "--csv", str(src), "--label-column", "species", "--methods", "ccai,knni",
                     "--out", str(tmp_path / "o")]) == 0
        doc = json.loads((tmp_path / "o/benchmark.json").read_text())
        assert all(r["n_test"] == 30 for r in doc["reports"])

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"generator": "uniform3", "n_per_class": 20, "trials": 1, "drop_dims": [1],
                                   "methods": ["step1-only"], "eta": 0.6}))
        assert main(["benchmark", "--config", str(cfg), "--eta", "0.55", "--out", str(tmp_path / "o")]) == 0
        doc = json.loads((tmp_path / "o/benchmark.json").read_text())
        assert doc["config"]["eta"] == 0.55 and doc["config"]["n_per_class"] == 20

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"generator": "uniform3", "lamda": 2}))
        assert main(["benchmark", "--config", str(cfg)]) == 2
        assert "lamda" in capsys.readouterr().err

    def test_unknown_method(self, capsys):
        assert main(["benchmark", "--generator", "uniform3", "--methods", "enn"]) == 2
        assert "enn" in capsys.readouterr().err


class TestTune:
    def test_five_rows(self, tmp_path):
        args = ["tune", "--generator", "gaussian3", "--n-per-class", "30", "--epsilon-grid", "0.1,0.3,0.5,0.7,0.9",
                "--out", str(tmp_path)]
        assert main(args) == 0
        table = rows(tmp_path / "tune.csv")
        assert [float(r["epsilon"]) for r in table] == [0.1, 0.3, 0.5, 0.7, 0.9]
        assert main(args[:-1] + [str(tmp_path / "again")]) == 0
        assert rows(tmp_path / "again/tune.csv") == table

    def test_gate_open_row(self, tmp_path):
        assert main(["tune", "--generator", "gaussian3", "--n-per-class", "30", "--epsilon-grid", "1.0",
                     "--out", str(tmp_path)]) == 0
        assert float(rows(tmp_path / "tune.csv")[0]["Ri_2"]) == 0.0


class TestRunConfig:
    def test_rejects_both_sources(self):
        with pytest.raises(ConfigError, match="either"):
            RunConfig(generator="uniform3", csv="x.csv")

    def test_rejects_bad_ccai_values(self):
        with pytest.raises(ConfigError, match="epsilon"):
            RunConfig(epsilon=0.0)

    def test_bad_grid_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["benchmark", "--generator", "uniform3", "--grid", "3by4"])
        assert exc.value.code == 2
