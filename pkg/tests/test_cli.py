import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from xicorr import __version__
from xicorr.cli import DatasetError, main, read_dataset
from xicorr.models import ModelSpec
from xicorr.rankcore import xi_n, xi_normalized
from xicorr.resample import confidence_interval
from xicorr.study import run_bias_mse


def write_csv(path, xs, ys, extra=False):
    with open(path, "w") as fh:
        fh.write("id,x,y\n" if extra else "x,y\n")
        for i, (x, y) in enumerate(zip(xs, ys)):
            x, y = float(x), float(y)
            fh.write(f"{i},{x!r},{y!r}\n" if extra else f"{x!r},{y!r}\n")
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def csv_records(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def twenty(tmp_path):
    x = np.random.default_rng(0).normal(size=20)
    return write_csv(tmp_path / "twenty.csv", x, x, extra=True)


@pytest.fixture
def noisy100(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 100)
    y = x + 0.4 * rng.normal(size=100)
    return write_csv(tmp_path / "noisy.csv", x, y), x, y


class TestReadDataset:
    @pytest.mark.parametrize("body, line", [
        ("x,y\n1,2\n2,nan\n", 3), ("x,y\n1,inf\n", 2), ("x,y\n1,2\n3\n", 3),
        ("x,y\n1,2\n3,abc\n", 3), ("x,y\n1,2,3\n", 2),
    ])
    def test_rejects_bad_rows(self, tmp_path, body, line):
        p = tmp_path / "bad.csv"
        p.write_text(body)
        with pytest.raises(DatasetError, match=f":{line}:"):
            read_dataset(str(p))

    def test_missing_column(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,z\n1,2\n")
        with pytest.raises(DatasetError, match="missing column"):
            read_dataset(str(p))

    def test_delimiter_and_extra_columns(self, tmp_path):
        p = tmp_path / "ok.tsv"
        p.write_text("y\tid\tx\n1.5\ta\t2\n\n-3e2\tb\t4\n")
        assert read_dataset(str(p), "\t") == ([2.0, 4.0], [1.5, -300.0])

    def test_parse_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("x,y\n1,2\n2,nan\n")
        code, _, err = run(capsys, "xi", p, "--seed", 1)
        assert code == 2 and "bad.csv:3" in err

    def test_missing_file(self, capsys):
        assert run(capsys, "xi", "/nonexistent/file.csv", "--seed", 1)[0] == 2


class TestXiCommand:
    def test_identity_sample(self, twenty, capsys):
        code, out, _ = run(capsys, "xi", twenty, "--seed", 5)
        assert code == 0
        rec = csv_records(out)[0]
        assert float(rec["xi"]) == 18 / 21 and rec["xi"].startswith("0.8571428")
        assert (rec["n"], rec["seed"], rec["estimator"], rec["version"]) == (
            "20", "5", "raw", __version__)
        code, out, _ = run(capsys, "xi", twenty, "--normalized", "--seed", 5)
        assert float(csv_records(out)[0]["xi"]) == 1.0

    def test_two_rows(self, tmp_path, capsys):
        code, out, _ = run(capsys, "xi", write_csv(tmp_path / "two.csv", [1, 2], [3, 4]),
                           "--seed", 1)
        assert code == 0 and float(csv_records(out)[0]["xi"]) == xi_n([1, 2], [3, 4])

    def test_normalized_needs_three(self, tmp_path, capsys):
        p = write_csv(tmp_path / "two.csv", [1, 2], [3, 4])
        assert run(capsys, "xi", p, "--normalized", "--seed", 1)[0] == 3

    def test_constant_y(self, tmp_path, capsys):
        code, _, err = run(capsys, "xi", write_csv(tmp_path / "c.csv", [1, 2, 3], [5, 5, 5]),
                           "--seed", 1)
        assert code == 3 and "Y is constant" in err

    def test_bit_identical_to_library(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        x = rng.integers(0, 5, 40).astype(float)
        y = rng.normal(size=40)
        p = write_csv(tmp_path / "d.csv", x, y)
        _, out, _ = run(capsys, "xi", p, "--format", "json", "--seed", 77)
        assert json.loads(out)["xi"] == xi_n(x, y, seed=77)
        _, out, _ = run(capsys, "xi", p, "--normalized", "--seed", 77)
        assert float(csv_records(out)[0]["xi"]) == xi_normalized(x, y, seed=77)

    def test_seed_from_entropy_is_reported(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        x = rng.integers(0, 3, 30).astype(float)
        p = write_csv(tmp_path / "d.csv", x, rng.normal(size=30))
        _, out, err = run(capsys, "xi", p, "--format", "json")
        rec = json.loads(out)
        assert f"seed: {rec['seed']}" in err
        _, again, _ = run(capsys, "xi", p, "--format", "json", "--seed", rec["seed"])
        assert json.loads(again) == rec


class TestCiCommand:
    def test_default_m_echoed(self, noisy100, capsys):
        path, x, y = noisy100
        code, out, _ = run(capsys, "ci", path, "-R", 200, "--seed", 3)
        rec = csv_records(out)[0]
        assert code == 0 and rec["m"] == "20" and rec["method"] == "m-out-of-n"
        iv = confidence_interval(x, y, "m-out-of-n", 0.9, 200, None, "normalized", 3)
        assert (float(rec["lower"]), float(rec["upper"]), float(rec["point"])) == (
            iv.lower, iv.upper, iv.point)

    def test_level_nesting(self, noisy100, capsys):
        path = noisy100[0]
        recs = {}
        for conf in (0.9, 0.95):
            _, out, _ = run(capsys, "ci", path, "--conf", conf, "-R", 300, "--seed", 8,
                            "--format", "json")
            recs[conf] = json.loads(out)
        assert recs[0.95]["lower"] <= recs[0.9]["lower"] <= recs[0.9]["upper"] <= recs[0.95][
            "upper"]

    @pytest.mark.parametrize("method", ["percentile", "bca"])
    def test_warns_on_continuous_y(self, noisy100, capsys, method):
        code, _, err = run(capsys, "ci", noisy100[0], "--method", method, "-R", 200,
                           "--seed", 1)
        assert code == 0 and "unreliable for continuous Y" in err

    def test_no_warning_with_y_ties(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        p = write_csv(tmp_path / "d.csv", rng.normal(size=40), rng.integers(0, 4, 40))
        _, _, err = run(capsys, "ci", p, "--method", "percentile", "-R", 200, "--seed", 1)
        assert "warning" not in err

    def test_invalid_combination(self, noisy100, capsys):
        assert run(capsys, "ci", noisy100[0], "--method", "bca", "--m", 10, "--seed", 1)[0] == 3
        assert run(capsys, "ci", noisy100[0], "--m", 100, "--seed", 1)[0] == 3


class TestTruthCommand:
    def test_model4(self, capsys):
        code, out, _ = run(capsys, "truth", "--model", 4, "--p", 0.4, "--pp", 0.5)
        rec = csv_records(out)[0]
        assert code == 0 and float(rec["xi"]) == pytest.approx(0.375, abs=1e-15)
        assert (rec["p"], rec["p_prime"]) == ("0.4", "0.5")

    def test_model8(self, capsys):
        _, out, _ = run(capsys, "truth", "--model", 8, "--format", "json")
        assert json.loads(out)["xi"] == 0.0

    def test_model1_both_paths(self, capsys):
        _, out, _ = run(capsys, "truth", "--model", 1, "--sigma", 0.5, "--format", "json")
        rec = json.loads(out)
        assert abs(rec["xi_symbolic"] - rec["xi_numeric"]) < 1e-6
        assert rec["abs_tol"] == 1e-9 and rec["truncation"] == 10.0
        assert list(rec)[:8] == ["model", "sigma", "m", "m_prime", "p", "p_prime", "a", "b"]

    def test_invalid_parameter(self, capsys):
        code, _, err = run(capsys, "truth", "--model", 8, "--sigma", 1)
        assert code == 3 and "no parameter" in err

    def test_numerical_failure(self, capsys):
        code, _, err = run(capsys, "truth", "--model", 1, "--abs-tol", 1e-300,
                           "--rel-tol", 1e-300)
        assert code == 4 and "numerical failure" in err

    def test_bad_usage(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["truth", "--model", "12"])
        assert info.value.code == 2


class TestSimulateCommand:
    def test_bias_byte_identical(self, tmp_path, capsys):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p, threads in zip(paths, (1, 3)):
            code, out, _ = run(capsys, "simulate", "bias", "--model", 1, "--sigma", 0.1,
                               "--n", 20, "-N", 1000, "--seed", 7, "--out", p,
                               "--threads", threads)
            assert code == 0 and out.startswith("bias model=1:")
        assert paths[0].read_bytes() == paths[1].read_bytes()
        rows = csv_records(paths[0].read_text())
        raw, norm = run_bias_mse(ModelSpec(1, sigma=0.1), 20, 1000, seed=7)
        assert [float(r["bias"]) for r in rows] == [raw.bias, norm.bias]
        assert [float(r["mse"]) for r in rows] == [raw.mse, norm.mse]

    def test_varfit(self, tmp_path, capsys):
        p = tmp_path / "v.csv"
        code, _, _ = run(capsys, "simulate", "varfit", "--model", 8, "--grid", "50..5000",
                         "-N", 300, "--seed", 2, "--out", p)
        rows = csv_records(p.read_text())
        assert code == 0
        assert [int(r["n"]) for r in rows] == [50, 100, 200, 500, 1000, 2000, 5000]
        assert abs(float(rows[0]["gamma"]) + 1) < 0.15

    def test_coverage_percentile(self, tmp_path, capsys):
        p = tmp_path / "c.csv"
        code, _, _ = run(capsys, "simulate", "coverage", "--model", 8, "--n", 50, "-N", 100,
                         "-R", 200, "--method", "percentile", "--seed", 4, "--out", p)
        row = csv_records(p.read_text())[0]
        assert code == 0 and float(row["coverage"]) < 0.05
        assert row["subsample"] == "50" and row["m"] == ""

    def test_json_lines(self, capsys):
        code, out, err = run(capsys, "simulate", "bias", "--model", 9, "--n", "20,30",
                             "-N", 100, "--seed", 1, "--format", "json")
        recs = [json.loads(line) for line in out.splitlines()]
        assert code == 0 and len(recs) == 4 and err.startswith("bias model=9")
        assert [r["n"] for r in recs] == [20, 20, 30, 30]

    def test_unwritable_path(self, capsys):
        code, _, err = run(capsys, "simulate", "bias", "--model", 1, "-N", 100, "--seed", 1,
                           "--out", "/nonexistent/dir/out.csv")
        assert code == 3 and "cannot write" in err

    def test_invalid_combination(self, capsys):
        assert run(capsys, "simulate", "bias", "--model", 1, "-N", 10, "--seed", 1)[0] == 3
        assert run(capsys, "simulate", "varfit", "--model", 8, "--grid", "50,60,70,80",
                   "-N", 100, "--seed", 1)[0] == 3


def test_module_entry_point(tmp_path):
    p = write_csv(tmp_path / "d.csv", [1, 2, 3, 4], [1, 3, 2, 4])
    res = subprocess.run([sys.executable, "-m", "xicorr", "xi", p, "--seed", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert float(csv_records(res.stdout)[0]["xi"]) == xi_n([1, 2, 3, 4], [1, 3, 2, 4])
