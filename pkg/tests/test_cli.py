import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lqrdp.cli import main
from lqrdp.config import ConfigError, ExperimentConfig, load_config, parse_config
from lqrdp.experiments import TRACE_COLUMNS, fmt

PSTAR = [[2604.8, 2877.2, 1643.4], [2877.2, 3178.1, 1815.3], [1643.4, 1815.3, 2036.9]]
NULL_PLANT = {"A": [[0, 0], [0, 0]], "B": [[0], [0]], "Q": [[1, 0], [0, 2]], "R": [[3]], "gamma": 0.9}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _block(text, name):
    lines = text.splitlines()
    i = next(j for j, ln in enumerate(lines) if ln.split()[0] == name)
    r, c = map(int, lines[i].split()[1:])
    return np.array([[float(v) for v in ln.split()] for ln in lines[i + 1:i + 1 + r]])


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({"algorithm": "solve"})
        assert cfg.plant == "example" and cfg.eps == [0.01, 0.05, 0.1]

    @pytest.mark.parametrize("doc", [
        {},
        {"algorithm": "newton"},
        {"algorithm": "qvi", "bogus": 1},
        {"algorithm": "qvi", "tol": -1},
        {"algorithm": "qvi", "plant": {"A": [[1, 0], [0]], "B": [[1], [0]], "Q": [[1, 0], [0, 1]], "R": [[1]]}},
        {"algorithm": "qvi", "plant": {"A": [[1, 0], [0, 1]], "B": [[1]], "Q": [[1, 0], [0, 1]], "R": [[1]]}},
        {"algorithm": "qpi", "init": "indefinite_ones"},
        {"algorithm": "qvi", "init": "optimal"},
        {"algorithm": "vi", "init": "lambda_min_scaled_identity"},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            parse_config(doc)

    def test_load_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(bad))
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "missing.json"))

    def test_roundtrip(self):
        cfg = ExperimentConfig("qvi", plant=NULL_PLANT, init="zero", eps=[0.05])
        assert parse_config(json.loads(cfg.dumps())) == cfg

    def test_fmt(self):
        assert fmt(-0.0) == "0" and fmt(True) == "1" and fmt(float("nan")) == "nan"
        assert float(fmt(1 / 3)) == 1 / 3


class TestRun:
    def test_solve(self, tmp_path, capsys):
        assert main(["solve", "--out", str(tmp_path / "s")]) == 0
        text = (tmp_path / "s_solution.txt").read_text()
        assert np.abs(_block(text, "Pstar") - PSTAR).max() <= 0.1
        assert all(r["passed"] == "1" for r in _rows(tmp_path / "s_report.csv"))
        assert str(tmp_path / "s_solution.txt") in capsys.readouterr().out

    def test_null_plant_qvi(self, tmp_path):
        path = _write(tmp_path, {"algorithm": "qvi", "plant": NULL_PLANT, "init": "zero",
                                 "output": str(tmp_path / "n")})
        assert main(["--config", path]) == 0
        rows = _rows(tmp_path / "n_trace.csv")
        assert list(rows[0]) == list(TRACE_COLUMNS)
        assert float(rows[1]["err2"]) == 0.0
        text = (tmp_path / "n_solution.txt").read_text()
        assert np.allclose(_block(text, "Pstar"), np.diag([1.0, 2.0, 3.0]))

    def test_csv_format(self, tmp_path):
        assert main(["qvi", "--out", str(tmp_path / "q")]) == 0
        raw = (tmp_path / "q_trace.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        rows = _rows(tmp_path / "q_trace.csv")
        assert [int(r["k"]) for r in rows] == list(range(len(rows)))
        mant = rows[1]["err2"].split("e")[0].replace(".", "").lstrip("0-")
        assert len(mant) >= 12

    @pytest.mark.parametrize("alg", ["qpi", "vi", "pi", "two_phase", "certify"])
    def test_algorithms(self, tmp_path, alg):
        assert main([alg, "--out", str(tmp_path / alg)]) == 0
        assert (tmp_path / f"{alg}_trace.csv").exists()
        assert (tmp_path / f"{alg}_report.csv").exists()

    def test_paper_example(self, tmp_path):
        assert main(["paper_example", "--out", str(tmp_path / "p")]) == 0
        for name in ("lambda_min_trace.csv", "lambda_max_trace.csv",
                     "indefinite_trace.csv", "solution.txt", "report.csv", "checks.csv"):
            assert (tmp_path / f"p_{name}").exists(), name
        assert all(r["passed"] == "1" for r in _rows(tmp_path / "p_checks.csv"))

    def test_deterministic(self, tmp_path):
        for tag in "ab":
            assert main(["certify", "--seed", "4", "--out", str(tmp_path / tag)]) == 0
        for name in ("trace.csv", "report.csv", "solution.txt"):
            assert (tmp_path / f"a_{name}").read_bytes() == (tmp_path / f"b_{name}").read_bytes()

    def test_echo_roundtrip(self, tmp_path):
        path = _write(tmp_path, {"algorithm": "qvi", "init": "lambda_max_scaled_identity", "eps": [0.1],
                                 "output": str(tmp_path / "first")})
        assert main(["--config", path, "--echo-config"]) == 0
        echoed = json.loads((tmp_path / "first_config.json").read_text())
        echoed["output"] = str(tmp_path / "second")
        assert main(["--config", _write(tmp_path, echoed, "echo.json")]) == 0
        assert (tmp_path / "first_trace.csv").read_bytes() == (tmp_path / "second_trace.csv").read_bytes()


class TestExitCodes:
    def test_schema_error(self, tmp_path, capsys):
        assert main(["--config", _write(tmp_path, {"algorithm": "qvi", "tol": "x"})]) == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("lqrdp: config error")

    def test_missing_everything(self):
        assert main([]) == 1

    def test_infeasible_plant(self, tmp_path, capsys):
        plant = {"A": [[2.0]], "B": [[0.0]], "Q": [[1.0]], "R": [[1.0]], "gamma": 1.0}
        assert main(["--config", _write(tmp_path, {"algorithm": "solve", "plant": plant})]) == 2
        assert "infeasible" in capsys.readouterr().err

    def test_indefinite_plant(self, tmp_path):
        plant = {"A": [[0.5]], "B": [[1.0]], "Q": [[-1.0]], "R": [[1.0]]}
        assert main(["--config", _write(tmp_path, {"algorithm": "solve", "plant": plant})]) == 2

    def test_unstable_gain(self, tmp_path):
        doc = {"algorithm": "qpi", "plant": "scalar", "init": [[0.0]], "output": str(tmp_path / "u")}
        assert main(["--config", _write(tmp_path, doc)]) == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence(self, tmp_path, capsys):
        doc = {"algorithm": "qvi", "plant": "scalar", "init": [[1e307, 0], [0, 1e307]],
               "output": str(tmp_path / "d")}
        assert main(["--config", _write(tmp_path, doc)]) == 3
        assert "diverged" in capsys.readouterr().err

    def test_max_iters_is_not_failure(self, tmp_path, capsys):
        doc = {"algorithm": "qvi", "max_iters": 3, "output": str(tmp_path / "m")}
        assert main(["--config", _write(tmp_path, doc)]) == 0
        assert "max_iters=3" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "lqrdp", "solve", "--out", str(tmp_path / "m")],
                             capture_output=True, text=True)
        assert res.returncode == 0 and (tmp_path / "m_solution.txt").exists()
