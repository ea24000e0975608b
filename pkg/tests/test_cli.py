import json

import numpy as np
import pytest

from monosindex.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, load_dataset, main


@pytest.fixture()
def linear_csv(tmp_path, rng):
    xs = rng.normal(size=(50, 3))
    coef = np.array([2.0, 1.0, -2.0])
    ys = xs @ coef
    path = tmp_path / "lin.csv"
    lines = ["X1,X2,X3,Y"] + [",".join(f"{v:.12g}" for v in [*x, y]) for x, y in zip(xs, ys)]
    path.write_text("\n".join(lines) + "\n")
    return path, coef


class TestLoadDataset:
    def test_roundtrip(self, linear_csv):
        path, _ = linear_csv
        s = load_dataset(str(path))
        assert s.n == 50 and s.d == 3

    def test_rejects_data_first_row(self, tmp_path):
        p = tmp_path / "noheader.csv"
        p.write_text("1.0,2.0,3.0,4.0\n5.0,6.0,7.0,8.0\n")
        from monosindex.cli import DataFileError

        with pytest.raises(DataFileError, match="header"):
            load_dataset(str(p))

    def test_rejects_ragged_rows(self, tmp_path):
        p = tmp_path / "ragged.csv"
        p.write_text("X1,X2,Y\n1.0,2.0,3.0\n1.0,2.0\n")
        from monosindex.cli import DataFileError

        with pytest.raises(DataFileError, match="fields"):
            load_dataset(str(p))


class TestFit:
    def test_linear_exact(self, linear_csv, capsys):
        path, coef = linear_csv
        assert main(["fit", "--data", str(path), "--estimator", "linear"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        expected = coef / np.linalg.norm(coef)
        np.testing.assert_allclose(report["alpha_hat"], expected, atol=1e-8)
        assert report["link"]["kind"] == "linear"

    def test_json_csv_numeric_parity(self, linear_csv, capsys):
        path, _ = linear_csv
        main(["fit", "--data", str(path), "--estimator", "linear", "--format", "json"])
        js = json.loads(capsys.readouterr().out)
        main(["fit", "--data", str(path), "--estimator", "linear", "--format", "csv"])
        lines = capsys.readouterr().out.strip().splitlines()
        header = lines[0].split(",")
        row = dict(zip(header, lines[1].split(",")))
        for i in range(3):
            assert float(row[f"alpha_{i + 1}"]) == js["alpha_hat"][i]
        assert float(row["criterion"]) == js["criterion"]

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--estimator", "linear"]) == EXIT_DATA

    def test_malformed_file_exit_2(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("X1,X2,Y\n1.0,oops,3.0\n" * 4)
        assert main(["fit", "--data", str(p), "--estimator", "linear"]) == EXIT_DATA

    def test_nonpositive_mu_exit_1(self, linear_csv):
        path, _ = linear_csv
        assert main(["fit", "--data", str(path), "--estimator", "plse", "--mu", "0"]) == EXIT_USAGE

    def test_unknown_estimator_exit_1(self, linear_csv):
        path, _ = linear_csv
        assert main(["fit", "--data", str(path), "--estimator", "bogus"]) == EXIT_USAGE

    def test_singular_design_exit_3(self, tmp_path, rng):
        x1 = rng.normal(size=30)
        xs = np.column_stack([x1, x1, rng.normal(size=30)])
        ys = xs.sum(axis=1)
        p = tmp_path / "sing.csv"
        lines = ["X1,X2,X3,Y"] + [",".join(f"{v:.12g}" for v in [*x, y]) for x, y in zip(xs, ys)]
        p.write_text("\n".join(lines) + "\n")
        assert main(["fit", "--data", str(p), "--estimator", "linear"]) == EXIT_NUMERIC

    def test_score_estimator_runs_with_warm_start(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        xs = rng.normal(size=(60, 3))
        a0 = np.full(3, 1.0 / np.sqrt(3.0))
        ys = (xs @ a0) ** 3 + 0.2 * rng.normal(size=60)
        p = tmp_path / "cubic.csv"
        lines = ["X1,X2,X3,Y"] + [",".join(f"{v:.12g}" for v in [*x, y]) for x, y in zip(xs, ys)]
        p.write_text("\n".join(lines) + "\n")
        assert main(["fit", "--data", str(p), "--estimator", "sse", "--starts", "4", "--seed", "2"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert abs(np.linalg.norm(report["alpha_hat"]) - 1.0) < 1e-9
        assert np.linalg.norm(np.array(report["alpha_hat"]) - a0) < 0.5
        assert report["link"]["kind"] == "step"

    def test_figure_rendered(self, linear_csv, tmp_path, capsys):
        path, _ = linear_csv
        fig = tmp_path / "fit.png"
        assert main(["fit", "--data", str(path), "--estimator", "linear", "--figure", str(fig)]) == EXIT_OK
        capsys.readouterr()
        assert fig.exists() and fig.stat().st_size > 0


class TestSimulate:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        args = [
            "simulate", "--n", "60", "--reps", "3", "--seed", "9",
            "--starts", "3", "--estimators", "lse,sse,linear",
        ]
        assert main(args + ["--workers", "1", "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--workers", "2", "--out", str(tmp_path / "b")]) == EXIT_OK
        capsys.readouterr()
        for name in ("replications.csv", "summary.csv", "summary.json", "boxplot_scaled_errors.png"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, f"{name} differs across worker counts"

    def test_summary_json_csv_parity(self, tmp_path, capsys):
        out = tmp_path / "sim"
        main([
            "simulate", "--n", "60", "--reps", "3", "--seed", "4",
            "--starts", "2", "--estimators", "linear,lse", "--workers", "1", "--out", str(out),
        ])
        capsys.readouterr()
        payload = json.loads((out / "summary.json").read_text())
        lines = (out / "summary.csv").read_text().strip().splitlines()
        header = lines[0].split(",")
        for row_line, est in zip(lines[1:], payload["estimators"]):
            row = dict(zip(header, row_line.split(",")))
            for key, val in est.items():
                if isinstance(val, float):
                    assert float(row[key]) == val, key

    def test_env_var_workers_default(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MONOSINDEX_WORKERS", "2")
        out = tmp_path / "env"
        assert main([
            "simulate", "--n", "60", "--reps", "2", "--seed", "4",
            "--starts", "2", "--estimators", "linear", "--out", str(out),
        ]) == EXIT_OK
        capsys.readouterr()
        assert (out / "summary.csv").exists()

    def test_bad_flags_exit_1(self, tmp_path):
        assert main(["simulate", "--n", "60", "--reps", "0", "--out", str(tmp_path)]) == EXIT_USAGE
        assert main(["simulate", "--n", "60", "--reps", "2", "--estimators", "zzz", "--out", str(tmp_path)]) == EXIT_USAGE


class TestAsymptotics:
    def test_sse_json(self, capsys):
        assert main(["asymptotics", "--estimator", "sse", "--mc", "200000", "--seed", "1"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        cov = np.array(payload["covariance"])
        assert cov.shape == (3, 3)
        assert cov[0, 0] == pytest.approx(2.0 / 27.0, abs=0.003)

    def test_linear_reports_constant(self, capsys):
        assert main([
            "asymptotics", "--estimator", "linear", "--variant", "sandwich", "--mc", "200000",
        ]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["constant"] == pytest.approx(3.0, abs=0.05)

    def test_json_csv_parity(self, capsys):
        main(["asymptotics", "--estimator", "ese", "--mc", "50000", "--seed", "3"])
        js = json.loads(capsys.readouterr().out)
        main(["asymptotics", "--estimator", "ese", "--mc", "50000", "--seed", "3", "--format", "csv"])
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "i,j,value"
        for line in lines[1:]:
            i, j, val = line.split(",")
            assert float(val) == js["covariance"][int(i) - 1][int(j) - 1]

    def test_mre_unsupported_exit_1(self):
        assert main(["asymptotics", "--estimator", "mre"]) == EXIT_USAGE

    def test_deterministic_given_seed(self, capsys):
        main(["asymptotics", "--estimator", "sse", "--mc", "30000", "--seed", "8"])
        first = capsys.readouterr().out
        main(["asymptotics", "--estimator", "sse", "--mc", "30000", "--seed", "8"])
        second = capsys.readouterr().out
        assert first == second
