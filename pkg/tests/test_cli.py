import csv
import json

import numpy as np
import pytest

from gammalasso.cli import main
from conftest import make_gaussian


@pytest.fixture
def csv_file(tmp_path, rng):
    d, X, y, _ = make_gaussian(rng, n=60, p=4, rho=0.3)
    path = tmp_path / "data.csv"
    header = "y," + ",".join(f"x{j}" for j in range(4))
    rows = [",".join([repr(float(y[i]))] + [repr(float(v)) for v in X[i]])
            for i in range(60)]
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return str(path)


def run_cli(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


class TestFit:
    def test_schema_and_exit(self, capsys, csv_file):
        code, out, err = run_cli(capsys, "fit", "--data", csv_file,
                                 "--response", "y", "--nlambda", "20")
        assert code == 0
        doc = json.loads(out)
        assert set(doc) == {"config", "lambda", "segments", "nullDeviance",
                            "truncated", "ic"}
        assert len(doc["lambda"]) == 20
        seg = doc["segments"][-1]
        assert set(seg) == {"lambda", "alpha", "beta", "df", "deviance",
                            "support", "converged"}
        assert set(doc["ic"]) == {"aic", "aicc", "bic", "selected"}
        assert doc["config"]["gamma"] == 0
        assert doc["config"]["seed"] == 0

    def test_gamma_default_matches_explicit_zero(self, capsys, csv_file):
        _, out1, _ = run_cli(capsys, "fit", "--data", csv_file,
                             "--response", "y", "--nlambda", "10")
        _, out2, _ = run_cli(capsys, "fit", "--data", csv_file,
                             "--response", "y", "--nlambda", "10",
                             "--gamma", "0")
        assert out1 == out2

    def test_single_segment(self, capsys, csv_file):
        code, out, _ = run_cli(capsys, "fit", "--data", csv_file,
                               "--response", "y", "--nlambda", "1")
        doc = json.loads(out)
        assert len(doc["segments"]) == 1
        assert doc["segments"][0]["support"] == 0

    def test_gamma_inf_accepted(self, capsys, csv_file):
        code, out, _ = run_cli(capsys, "fit", "--data", csv_file,
                               "--response", "y", "--nlambda", "15",
                               "--gamma", "inf")
        assert code == 0
        assert json.loads(out)["config"]["gamma"] == "inf"

    def test_free_columns_echoed(self, capsys, csv_file):
        code, out, _ = run_cli(capsys, "fit", "--data", csv_file,
                               "--response", "y", "--nlambda", "5",
                               "--free", "x1")
        assert code == 0
        assert json.loads(out)["config"]["free"] == [1]

    def test_triplet_input(self, capsys, tmp_path, rng):
        X = rng.standard_normal((20, 2))
        y = X[:, 0] + 0.2 * rng.standard_normal(20)
        tf = tmp_path / "t.txt"
        lines = [f"{i} {j} {float(X[i, j])!r}"
                 for i in range(20) for j in range(2)]
        tf.write_text("base=0\n" + "\n".join(lines) + "\n")
        yf = tmp_path / "y.txt"
        yf.write_text("\n".join(repr(float(v)) for v in y) + "\n")
        code, out, _ = run_cli(capsys, "fit", "--triplets", str(tf), "--y",
                               str(yf), "--n", "20", "--p", "2",
                               "--nlambda", "8")
        assert code == 0
        assert len(json.loads(out)["segments"]) == 8

    def test_input_error_exit_2(self, capsys, csv_file):
        code, _, err = run_cli(capsys, "fit", "--data", csv_file,
                               "--response", "nope")
        assert code == 2
        assert "error:" in err

    def test_missing_source_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "fit")
        assert code == 2

    def test_out_file(self, capsys, csv_file, tmp_path):
        dest = tmp_path / "fit.json"
        code, out, _ = run_cli(capsys, "fit", "--data", csv_file,
                               "--response", "y", "--nlambda", "5",
                               "--out", str(dest))
        assert code == 0 and out == ""
        json.loads(dest.read_text())


class TestCv:
    def test_schema_and_folds(self, capsys, tmp_path, rng):
        d, X, y, _ = make_gaussian(rng, n=10, p=2)
        f = tmp_path / "ten.csv"
        f.write_text("y,a,b\n" + "\n".join(
            f"{float(y[i])!r},{float(X[i,0])!r},{float(X[i,1])!r}"
            for i in range(10)) + "\n")
        code, out, _ = run_cli(capsys, "cv", "--data", str(f),
                               "--response", "y", "--folds", "2",
                               "--nlambda", "8", "--seed", "5")
        assert code == 0
        doc = json.loads(out)
        assert set(doc) == {"config", "lambda", "mean", "se", "idxMin",
                            "idx1se", "refit"}
        assert set(doc["refit"]) == {"atMin", "at1se"}
        assert doc["idx1se"] <= doc["idxMin"]
        assert doc["config"]["folds"] == 2

    def test_seed_reproducible_and_thread_invariant(self, capsys, csv_file):
        args = ("cv", "--data", csv_file, "--response", "y", "--folds", "3",
                "--nlambda", "10", "--seed", "7")
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        _, out3, _ = run_cli(capsys, *args, "--threads", "2")
        assert out1 == out2 == out3


class TestSimulate:
    def test_fig3_fixture_csv(self, capsys, tmp_path):
        dest = tmp_path / "fig3.csv"
        code, out, _ = run_cli(capsys, "simulate", "--fixture", "fig3",
                               "--n", "50", "--seed", "3", "--out", str(dest))
        assert code == 0
        rows = list(csv.reader(dest.read_text().splitlines()))
        assert rows[0] == ["y", "x1", "x2", "x3"]
        assert len(rows) == 51

    def test_small_run_csv_and_aggregate(self, capsys, tmp_path):
        agg = tmp_path / "agg.json"
        code, out, err = run_cli(
            capsys, "simulate", "--reps", "1", "--n", "100", "--p", "50",
            "--gammas", "0,2", "--selectors", "AICc,BIC", "--no-marginal-al",
            "--nlambda", "20", "--seed", "2", "--json-out", str(agg))
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["rep", "gamma", "selector", "r2", "fdr",
                           "sensitivity", "support", "seconds"]
        assert len(rows) == 1 + 4  # 2 gammas x 2 selectors
        doc = json.loads(agg.read_text())
        assert doc["failures"] == 0
        assert doc["config"]["reps"] == 1

    def test_one_rep_desk_scale_timing(self, capsys):
        import time
        t0 = time.perf_counter()
        code, out, _ = run_cli(capsys, "simulate", "--reps", "1", "--n", "100",
                               "--p", "50", "--seed", "1")
        wall = time.perf_counter() - t0
        assert code == 0
        assert wall < 5.0
        rows = list(csv.reader(out.splitlines()))
        assert len(rows) == 1 + 4 * 5  # four methods, five selectors

    def test_deterministic_across_threads(self, capsys):
        args = ("simulate", "--reps", "2", "--n", "60", "--p", "20",
                "--gammas", "0", "--selectors", "AICc", "--no-marginal-al",
                "--nlambda", "10", "--seed", "4")
        _, out1, _ = run_cli(capsys, *args, "--threads", "1")
        _, out2, _ = run_cli(capsys, *args, "--threads", "2")
        strip = lambda text: ["\t".join(r[:7]) for r in csv.reader(text.splitlines())]
        assert strip(out1) == strip(out2)  # seconds column may differ


class TestVerify:
    def test_lemma1_suite_passes(self, capsys):
        code, out, err = run_cli(capsys, "verify", "--suite", "lemma1",
                                 "--instances", "25", "--seed", "1")
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0][0] == "instance"
        assert len(rows) == 26
        assert "violation" not in out
        assert "suite=lemma1" in err

    def test_unknown_suite_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--suite", "nope"])
        assert exc.value.code == 2

    def test_exit_1_on_violation(self, capsys, monkeypatch):
        import gammalasso.cli as cli_mod
        from gammalasso.suites import VerificationReport

        def fake(name, instances, seed=0, restarts=40, n_jobs=1):
            return VerificationReport(suite=name, instances=1,
                                      rows=[{"instance": 0,
                                             "status": "violation"}],
                                      counts={"violation": 1})

        monkeypatch.setattr(cli_mod, "run_suite", fake)
        code, out, err = run_cli(capsys, "verify", "--suite", "lemma1",
                                 "--instances", "1")
        assert code == 1

    def test_thread_invariant(self, capsys):
        args = ("verify", "--suite", "prop1", "--instances", "8", "--seed", "2")
        _, out1, _ = run_cli(capsys, *args, "--threads", "1")
        _, out2, _ = run_cli(capsys, *args, "--threads", "2")
        assert out1 == out2


class TestOracle:
    def test_nested_prints_prefix_and_objective(self, capsys, tmp_path, rng):
        n, p = 40, 6
        X = rng.standard_normal((n, p))
        y = X[:, :2] @ np.array([2.0, -1.0]) + 0.3 * rng.standard_normal(n)
        f = tmp_path / "d.csv"
        hdr = "y," + ",".join(f"c{j}" for j in range(p))
        f.write_text(hdr + "\n" + "\n".join(
            ",".join([repr(float(y[i]))] + [repr(float(v)) for v in X[i]])
            for i in range(n)) + "\n")
        code, out, _ = run_cli(capsys, "oracle", "--data", str(f),
                               "--response", "y", "--nested",
                               "--sigma2", "0.09")
        assert code == 0
        doc = json.loads(out)
        assert doc["mode"] == "nested"
        assert doc["support"] == [0, 1]
        assert doc["objective"] > 0

    def test_exhaustive(self, capsys, tmp_path, rng):
        n, p = 30, 5
        X = rng.standard_normal((n, p))
        y = X[:, 3] * 2.0 + 0.2 * rng.standard_normal(n)
        f = tmp_path / "d.csv"
        hdr = "y," + ",".join(f"c{j}" for j in range(p))
        f.write_text(hdr + "\n" + "\n".join(
            ",".join([repr(float(y[i]))] + [repr(float(v)) for v in X[i]])
            for i in range(n)) + "\n")
        code, out, _ = run_cli(capsys, "oracle", "--data", str(f),
                               "--response", "y", "--exhaustive", "--nu",
                               "0.01")
        assert code == 0
        assert json.loads(out)["support"] == [3]

    def test_requires_mode(self, capsys, csv_file):
        code, _, err = run_cli(capsys, "oracle", "--data", csv_file,
                               "--response", "y")
        assert code == 2


class TestBinomial:
    def test_binomial_fit_end_to_end(self, capsys, tmp_path, rng):
        n = 120
        X = rng.standard_normal((n, 3))
        q = 1 / (1 + np.exp(-(0.4 + 1.5 * X[:, 0])))
        y = (rng.random(n) < q).astype(float)
        f = tmp_path / "b.csv"
        f.write_text("y,a,b,c\n" + "\n".join(
            ",".join([repr(float(y[i]))] + [repr(float(v)) for v in X[i]])
            for i in range(n)) + "\n")
        code, out, _ = run_cli(capsys, "fit", "--data", str(f),
                               "--response", "y", "--family", "binomial",
                               "--gamma", "2", "--nlambda", "25")
        assert code == 0
        doc = json.loads(out)
        last = doc["segments"][-1]
        coef = {j: v for j, v in last["beta"]}
        assert coef.get(0, 0.0) > 0.5
        assert doc["config"]["family"] == "binomial"

    def test_binomial_bad_response_exit_2(self, capsys, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("y,x\n1,0.3\n2,0.9\n0,1.1\n")
        code, _, err = run_cli(capsys, "fit", "--data", str(f),
                               "--response", "y", "--family", "binomial")
        assert code == 2
        assert "outside [0,1]" in err


class TestMisc:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        out, _ = capsys.readouterr()
        assert "gammalasso" in out

    def test_unknown_flag_rejected(self, capsys, csv_file):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--data", csv_file, "--response", "y", "--bogus"])
        assert exc.value.code == 2

    def test_fit_deterministic_bytes(self, capsys, csv_file):
        args = ("fit", "--data", csv_file, "--response", "y", "--gamma", "2",
                "--nlambda", "12", "--seed", "9")
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2
