"""Command-line interface: every subcommand, file format and exit code."""

import csv
import json
import subprocess
import sys

import pytest

from unseenkit.baselines import SBBParams
from unseenkit.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from unseenkit.errors import DataError
from unseenkit.featureset import read_sparse
from unseenkit.params import dumps_params, loads_params, read_params, write_params
from unseenkit.sbsp import SBSPParams, posterior_unseen


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "zipf.txt"
    assert main(["zipf", "--xi", "1.6", "--kmax", "500", "--l", "30", "--seed", "3", "--out", str(path)]) == EXIT_OK
    return path


class TestParamsFormat:
    def test_round_trip(self, tmp_path):
        for p in (SBSPParams(0.3, 2.0, 1.5), SBBParams(2.0, 0.4, -0.1)):
            assert loads_params(dumps_params(p, {"loglik": -3.0})) == p
            write_params(p, tmp_path / "p.json")
            assert read_params(tmp_path / "p.json") == p

    @pytest.mark.parametrize(
        "text",
        [
            "{",
            "[1, 2]",
            '{"model": "ibp", "sigma": 0.5}',
            '{"model": "sbsp", "sigma": 0.5, "c": 1.0}',
            '{"model": "sbsp", "sigma": "x", "c": 1.0, "beta": 1.0}',
            '{"model": "sbsp", "sigma": 1.5, "c": 1.0, "beta": 1.0}',
            '{"model": "sbsp", "sigma": 0.5, "c": true, "beta": 1.0}',
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(DataError):
            loads_params(text)


class TestSubcommands:
    def test_zipf(self, dataset):
        m = read_sparse(dataset)
        assert m.n_samples == 30

    def test_fit_and_predict(self, dataset, tmp_path):
        pfile = tmp_path / "p.json"
        assert main(["fit", "--input", str(dataset), "--model", "sbsp", "--starts", "3", "--out", str(pfile)]) == 0
        doc = json.loads(pfile.read_text())
        assert doc["model"] == "sbsp" and doc["optimizer"] == "nelder-mead" and doc["seed"] == 0
        params = read_params(pfile)

        out = tmp_path / "pred.json"
        args = ["predict", "--params", str(pfile), "--input", str(dataset), "--horizon", "100", "--ci", "0.9"]
        assert main(args + ["--out", str(out)]) == 0
        pred = json.loads(out.read_text())
        counts = read_sparse(dataset).counts()
        law = posterior_unseen(params, counts.n, counts.k, 100)
        assert pred["mean"] == law.mean and pred["law"]["family"] == "negative_binomial"
        assert pred["lo"] <= pred["mean"] <= pred["hi"]

        assert main(args[:-2] + ["--rare", "2", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["rare"] == 2

    def test_fit_sbb(self, dataset, tmp_path):
        pfile = tmp_path / "p.json"
        assert main(["fit", "--input", str(dataset), "--model", "sbb", "--starts", "2", "--out", str(pfile)]) == 0
        out = tmp_path / "pred.json"
        assert main(["predict", "--params", str(pfile), "--input", str(dataset), "--horizon", "5", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["law"]["family"] == "poisson"

    def test_sample(self, tmp_path):
        pfile = tmp_path / "p.json"
        write_params(SBSPParams(0.5, 3.0, 1.0), pfile)
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for path in (a, b):
            assert main(["sample", "--params", str(pfile), "--n", "20", "--seed", "5", "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert read_sparse(a).n_samples == 20

    def test_evaluate(self, dataset, tmp_path):
        out = tmp_path / "r.csv"
        args = ["evaluate", "--input", str(dataset), "--methods", "sbb,jackknife:1,gt:poisson",
                "--train", "0.5", "--replicates", "2", "--seed", "9", "--fit-starts", "2", "--ci", "0.8"]
        assert main(args + ["--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 3 * 2 * 15
        assert {r["status"] for r in rows} == {"ok"}

    def test_coverage(self, dataset, tmp_path):
        out = tmp_path / "c.csv"
        args = ["coverage", "--input", str(dataset), "--train", "10", "--replicates", "3",
                "--alpha-grid", "0.5,0.9", "--seed", "1", "--fit-starts", "2", "--out", str(out)]
        assert main(args) == 0
        rows = list(csv.DictReader(out.open()))
        assert [(r["method"], r["alpha"]) for r in rows] == [("sbsp", "0.5"), ("sbsp", "0.9"), ("sbb", "0.5"), ("sbb", "0.9")]

    def test_stdout(self, dataset, capsys):
        assert main(["evaluate", "--input", str(dataset), "--methods", "gt:none", "--train", "20", "--out", "-"]) == 0
        assert capsys.readouterr().out.startswith("method,replicate,N,m,")


class TestExitCodes:
    def test_usage(self, dataset, tmp_path, capsys):
        out = str(tmp_path / "x")
        assert main([]) == EXIT_USAGE
        assert main(["fit", "--input", str(dataset), "--model", "ibp", "--out", out]) == EXIT_USAGE
        assert main(["evaluate", "--input", str(dataset), "--methods", "bogus", "--train", "5", "--out", out]) == EXIT_USAGE
        assert main(["evaluate", "--input", str(dataset), "--methods", "sbsp", "--train", "30", "--out", out]) == EXIT_USAGE
        assert main(["zipf", "--xi", "-1", "--kmax", "5", "--l", "3", "--out", out]) == EXIT_USAGE
        assert main(["fit", "--bogus"]) == EXIT_USAGE

    def test_data(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 2\nx\n")
        out = str(tmp_path / "x")
        assert main(["fit", "--input", str(tmp_path / "missing"), "--model", "sbsp", "--out", out]) == EXIT_DATA
        assert main(["fit", "--input", str(bad), "--model", "sbsp", "--out", out]) == EXIT_DATA
        empty = tmp_path / "empty.txt"
        empty.write_text("\n\n\n")
        assert main(["fit", "--input", str(empty), "--model", "sbsp", "--out", out]) == EXIT_DATA
        params = tmp_path / "p.json"
        params.write_text('{"model": "sbsp"}')
        assert main(["sample", "--params", str(params), "--n", "3", "--out", out]) == EXIT_DATA

    def test_numeric(self, tmp_path):
        params = tmp_path / "p.json"
        write_params(SBSPParams(0.5, 1e15, 1e-3), params)
        assert main(["sample", "--params", str(params), "--n", "5", "--out", str(tmp_path / "x")]) == EXIT_NUMERIC

    def test_module_entry_point(self, dataset):
        proc = subprocess.run([sys.executable, "-m", "unseenkit", "evaluate", "--input", str(dataset),
                               "--methods", "gt:none", "--train", "x", "--out", "-"], capture_output=True)
        assert proc.returncode == EXIT_USAGE


class TestDeterminism:
    def test_evaluate_byte_identical(self, dataset, tmp_path):
        outs = []
        for i in range(2):
            out = tmp_path / f"r{i}.csv"
            main(["evaluate", "--input", str(dataset), "--methods", "sbsp,gt:binomial", "--train", "10",
                  "--replicates", "2", "--seed", "4", "--fit-starts", "2", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
