import csv
import json
import subprocess

import numpy as np
import pytest

from npgraph.cli import main, parse_grid, prepare_data, read_data
from npgraph.errors import DataValidationError
from npgraph.precision import Hyper

FAST = ["--burn", "15", "--keep", "25", "--J", "5", "--grid", "0.02,1,1;0.005,10,30"]


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture
def toy_csv(tmp_path):
    assert main(["simulate", "--seed", "4", "--p", "5", "--n", "80", "--structure", "ar1",
                 "--out", str(tmp_path / "sim")]) == 0
    return tmp_path / "sim" / "X.csv"


class TestSimulate:
    def test_shapes(self, tmp_path):
        out = tmp_path / "c"
        assert main(["simulate", "--seed", "1", "--structure", "circle", "--p", "10", "--n", "200",
                     "--out", str(out)]) == 0
        for name in ("X.csv", "latent.csv"):
            rows = read_rows(out / name)
            assert len(rows) == 201 and all(len(r) == 10 for r in rows)
        truth = np.array(read_rows(out / "truth.csv")[1:], dtype=int)
        assert truth.shape == (10, 10) and truth.sum() == 20
        prov = json.loads((out / "provenance.json").read_text())
        assert prov["seed"] == 1 and prov["scenario"]["structure"] == "circle"
        assert len(prov["transform_params"]) == 10

    def test_byte_identical(self, tmp_path):
        args = ["simulate", "--seed", "8", "--structure", "percent:0.2", "--p", "6", "--n", "50",
                "--transforms", "logistic-cdf,gumbel-cdf,power:3"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("X.csv", "truth.csv", "latent.csv", "provenance.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_invalid_structure(self, tmp_path, capsys):
        assert main(["simulate", "--seed", "1", "--structure", "star", "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "ar1" in err and "circle" in err and "percent" in err

    def test_seed_required(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path)]) == 2
        assert "seed" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["simulate", "--seed", "1", "--out", str(blocker / "sub")]) == 1
        assert str(blocker / "sub") in capsys.readouterr().err

    def test_numbers_round_trip(self, tmp_path):
        assert main(["simulate", "--seed", "2", "--p", "3", "--n", "20", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "latent.csv")[1:]
        for row in rows:
            for cell in row:
                assert "%.17g" % float(cell) == cell


class TestFit:
    def test_outputs(self, toy_csv, tmp_path):
        out = tmp_path / "fit"
        assert main(["fit", str(toy_csv), "--seed", "3", "--out", str(out), *FAST]) == 0
        E = np.array(read_rows(out / "edges.csv")[1:], dtype=int)
        assert E.shape == (5, 5) and set(np.unique(E)) <= {0, 1}
        assert np.array_equal(E, E.T) and not np.diag(E).any()
        tr = read_rows(out / "transforms.csv")
        assert tr[0][0] == "x" and len(tr) == 102 and len(tr[0]) == 6
        bic = read_rows(out / "bic_table.csv")
        assert bic[0] == ["c0", "b0", "b1", "k", "deviance", "bic", "selected"]
        assert sum(int(r[-1]) for r in bic[1:]) == 1
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["seed"] == 3 and man["basis_sizes"] == [5] * 5
        assert man["software"]["version"]

    def test_byte_identical(self, toy_csv, tmp_path):
        for tag in ("a", "b"):
            assert main(["fit", str(toy_csv), "--seed", "9", "--out", str(tmp_path / tag), *FAST]) == 0
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == ["bic_table.csv", "edge_mean.csv", "edges.csv", "manifest.json",
                         "omega_mean.csv", "transforms.csv"]
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_config_file_and_override(self, toy_csv, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"seed": 5, "burn": 10, "keep": 10, "J": 5, "grid": [[0.02, 1, 1]],
                                   "input": str(toy_csv), "out": str(tmp_path / "o")}))
        assert main(["fit", "--config", str(cfg), "--keep", "12"]) == 0
        man = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert man["config"]["keep"] == 12 and man["config"]["burn"] == 10
        assert man["config"]["grid"] == [[0.02, 1.0, 1.0]]

    def test_missing_input(self, tmp_path, capsys):
        assert main(["fit", str(tmp_path / "nope.csv"), "--seed", "1", "--out", str(tmp_path)]) == 2
        assert "nope.csv" in capsys.readouterr().err

    @pytest.mark.parametrize("content,needle", [
        ("a,b\n0.1,0.2\n0.3,x\n", "row 3, column b"),
        ("a,b\n0.1,0.2\n0.3,nan\n", "row 3, column b"),
        ("a,b\n0.1,0.5\n0.3,0.5\n", "column b is constant"),
        ("a,b\n0.1,0.2\n1.3,0.4\n", "column a"),
    ])
    def test_data_validation(self, tmp_path, capsys, content, needle):
        f = tmp_path / "bad.csv"
        f.write_text(content)
        assert main(["fit", str(f), "--seed", "1", "--out", str(tmp_path / "o")]) == 2
        assert needle in capsys.readouterr().err

    def test_rescale(self, tmp_path):
        X = np.column_stack([np.linspace(3.1, 9.7, 40), np.linspace(0.1, 0.9, 40) ** 2])
        out = prepare_data(X, ["a", "b"], rescale=True)
        assert out[:, 0].min() == 0.0 and out[:, 0].max() == 1.0
        with pytest.raises(DataValidationError, match="column a"):
            prepare_data(X, ["a", "b"], rescale=False)
        f = tmp_path / "wide.csv"
        np.savetxt(f, X, delimiter=",", header="a,b", comments="")
        assert main(["fit", str(f), "--rescale", "--seed", "1", "--out", str(tmp_path / "o"), *FAST]) == 0

    def test_headerless_input(self, tmp_path):
        f = tmp_path / "plain.csv"
        f.write_text("0.1,0.2\n0.3,0.4\n")
        X, names = read_data(f)
        assert names == ["V1", "V2"] and X.shape == (2, 2)


class TestStudy:
    def test_counts_and_summary(self, tmp_path):
        cfg = tmp_path / "study.json"
        cfg.write_text(json.dumps({"scenarios": [
            {"p": 3, "n": 40, "structure": "ar1"},
            {"p": 4, "n": 40, "structure": "circle", "transforms": ["power:2"]},
        ]}))
        out = tmp_path / "s"
        assert main(["study", "--config", str(cfg), "--seed", "2", "--replications", "3",
                     "--out", str(out), *FAST, "--workers", "1"]) == 0
        rows = read_rows(out / "replications.csv")
        assert len(rows) == 7
        long = read_rows(out / "long.csv")
        assert long[0] == ["metric", "scenario", "value"] and len(long) == 1 + 3 * 6
        summary = json.loads((out / "summary.json").read_text())
        header = rows[0]
        for name, entry in summary["summary"].items():
            vals = [float(r[header.index("specificity")]) for r in rows[1:] if r[0] == name]
            q = entry["specificity"]
            assert min(vals) <= q["q1"] <= q["median"] <= q["q3"] <= max(vals)

    def test_empty_scenarios(self, tmp_path, capsys):
        cfg = tmp_path / "empty.json"
        cfg.write_text(json.dumps({"scenarios": []}))
        assert main(["study", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "o")]) == 2
        assert "empty" in capsys.readouterr().err


def test_select_basis(toy_csv, tmp_path):
    out = tmp_path / "aic"
    assert main(["select-basis", str(toy_csv), "--out", str(out)]) == 0
    chosen = read_rows(out / "selected_J.csv")
    assert chosen[0] == ["variable", "J"] and len(chosen) == 6
    assert read_rows(out / "aic.csv")[0] == ["variable", "J", "aic"]


def test_grid_parsing():
    assert parse_grid("0.02,1,1;0.005,10,30") == [Hyper(0.02, 1, 1), Hyper(0.005, 10, 30)]
    assert len(parse_grid(None)) == 4


def test_console_script(tmp_path):
    res = subprocess.run(["npgraph", "fit", str(tmp_path / "missing.csv"), "--seed", "1",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 2 and "not found" in res.stderr
    res = subprocess.run(["npgraph", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 2
