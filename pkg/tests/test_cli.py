import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from detlim import __version__
from detlim.cli import main
from detlim.distributions import bernoulli, make_pmf, make_space


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    paths = {
        "b50": write(tmp_path / "b50.json", bernoulli(0.5).to_dict()),
        "b25": write(tmp_path / "b25.json", bernoulli(0.25).to_dict()),
        "abc": write(tmp_path / "abc.json", make_pmf([0.2, 0.3, 0.5], "abc").to_dict()),
        "space": write(tmp_path / "space.json", make_space([0.0, 1.0], ["0", "1"]).to_dict()),
        "bad": str(tmp_path / "bad.json"),
    }
    (tmp_path / "bad.json").write_text("{not json")
    paths["hyp"] = write(tmp_path / "hyp.json", {
        "p_legit": bernoulli(0.5).to_dict(), "p_fake": bernoulli(0.25).to_dict(),
        "n_grid": [10, 20, 30, 40], "trials": 2000, "seed": 3,
    })
    paths["epi"] = write(tmp_path / "epi.json", {
        "graph": {"kind": "er", "nodes": 300, "edge_prob": 0.02},
        "beta_grid": [0.0, 0.1, 0.3], "gamma": 1.0, "runs_per_point": 10, "seed": 1,
    })
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDivergence:
    def test_bernoulli_pair(self, capsys, files):
        code, out, _ = run(capsys, "divergence", files["b50"], files["b25"], "--space", files["space"])
        assert code == 0
        data = json.loads(out)
        assert data["kl_forward"] == pytest.approx(0.143841, abs=1e-6)
        assert data["tv"] == 0.25 and data["wasserstein"] == 0.25
        assert data["inequalities"]["pinsker"]["slack"] == pytest.approx(0.009421, abs=1e-6)
        assert data["version"] == __version__

    def test_identical(self, capsys, files):
        code, out, _ = run(capsys, "divergence", files["abc"], files["abc"])
        data = json.loads(out)
        assert code == 0
        assert data["kl_forward"] == data["tv"] == data["js"] == data["chernoff"] == 0.0

    def test_mismatch(self, capsys, files):
        code, _, err = run(capsys, "divergence", files["b50"], files["abc"])
        assert code == 3 and "AlphabetMismatch" in err

    def test_parse_errors(self, capsys, files, tmp_path):
        assert run(capsys, "divergence", files["bad"], files["b25"])[0] == 2
        assert run(capsys, "divergence", str(tmp_path / "missing.json"), files["b25"])[0] == 2
        neg = write(tmp_path / "neg.json", {"labels": ["0", "1"], "probs": [-0.5, 1.5]})
        code, _, err = run(capsys, "divergence", neg, files["b25"])
        assert code == 2 and "p" in err

    def test_bad_subcommand(self, capsys):
        assert run(capsys, "frobnicate")[0] == 2


class TestTable:
    def _rows(self, text):
        return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))

    def test_kl_row(self, capsys):
        code, out, _ = run(capsys, "table", "--l-kind", "kl", "--regime", "general", "--test", "np",
                           "--opt", "0.1", "--n", "100")
        rows = self._rows(out)
        assert code == 0 and len(rows) == 1
        assert float(rows[0]["log_bound"]) == pytest.approx(-10.0)

    def test_zero_opt(self, capsys):
        code, out, _ = run(capsys, "table", "--l-kind", "all", "--opt", "0", "--n", "10,1000",
                           "--diam", "1", "--pg-star", "0.5")
        rows = self._rows(out)
        assert code == 0 and len(rows) == 4 * 2 * 2 * 2
        assert all(float(r["log_bound"]) == 0.0 for r in rows)

    def test_missing_diam(self, capsys):
        code, _, err = run(capsys, "table", "--l-kind", "wasserstein", "--opt", "0.1", "--n", "10")
        assert code == 4 and "MissingDiam" in err

    def test_missing_pg_star(self, capsys):
        code, _, err = run(capsys, "table", "--l-kind", "kl", "--test", "bayes", "--regime", "general",
                           "--opt", "0.1", "--n", "10")
        assert code == 4 and "MissingPgStar" in err

    def test_kl_without_pg_star_skips_general_bayes(self, capsys):
        code, out, err = run(capsys, "table", "--l-kind", "kl", "--opt", "0.1", "--n", "10")
        rows = self._rows(out)
        assert code == 0 and len(rows) == 3 and "skipping" in err

    def test_invalid_spec(self, capsys):
        assert run(capsys, "table", "--l-kind", "tv", "--opt", "1.5", "--n", "10")[0] == 2
        assert run(capsys, "table", "--l-kind", "tv", "--opt", "abc", "--n", "10")[0] == 2

    def test_json(self, capsys):
        code, out, _ = run(capsys, "table", "--l-kind", "tv", "--opt", "0.1", "--n", "50", "--format", "json")
        data = json.loads(out)
        assert code == 0 and len(data["rows"]) == 4


class TestHyptest:
    def test_json_report(self, capsys, files):
        code, out, _ = run(capsys, "hyptest", files["hyp"])
        data = json.loads(out)
        assert code == 0
        assert data["config"]["seed"] == 3 and data["version"] == __version__
        assert len(data["results"]) == 8
        assert set(data["fits"]) == {"np", "bayes"}

    def test_blind_pair(self, capsys, tmp_path):
        cfg = write(tmp_path / "same.json", {"p_legit": bernoulli(0.3).to_dict(),
                                             "p_fake": bernoulli(0.3).to_dict(), "n": 20})
        code, out, _ = run(capsys, "hyptest", cfg, "--test", "bayes")
        pe = json.loads(out)["results"][0]["pe_hat"]
        assert code == 0 and 0.48 <= pe <= 0.52

    def test_csv_columns(self, capsys, files):
        code, out, _ = run(capsys, "hyptest", files["hyp"], "--format", "csv", "--test", "np")
        lines = out.splitlines()
        assert lines[0].startswith("# detlim")
        assert "n,test,rate,halfwidth,predicted_log_bound,exponent" in lines

    def test_unknown_field(self, capsys, tmp_path):
        cfg = write(tmp_path / "x.json", {"p_legit": bernoulli(0.3).to_dict(),
                                          "p_fake": bernoulli(0.5).to_dict(), "n": 5, "colour": 1})
        code, _, err = run(capsys, "hyptest", cfg)
        assert code == 2 and "colour" in err

    def test_missing_pmf(self, capsys, tmp_path):
        cfg = write(tmp_path / "x.json", {"p_legit": bernoulli(0.3).to_dict(), "n": 5})
        code, _, err = run(capsys, "hyptest", cfg)
        assert code == 2 and "p_fake" in err

    def test_zero_rate_is_runtime_error(self, capsys, tmp_path):
        cfg = write(tmp_path / "x.json", {"p_legit": bernoulli(0.0).to_dict(),
                                          "p_fake": bernoulli(1.0).to_dict(),
                                          "n_grid": [1, 2, 3, 4], "trials": 100})
        code, _, err = run(capsys, "hyptest", cfg)
        assert code == 5 and "ZeroRateAtGridPoint" in err

    def test_alphabet_mismatch(self, capsys, tmp_path):
        cfg = write(tmp_path / "x.json", {"p_legit": bernoulli(0.3).to_dict(),
                                          "p_fake": make_pmf([0.5, 0.5], "ab").to_dict(), "n": 5})
        assert run(capsys, "hyptest", cfg)[0] == 3


class TestEpidemic:
    def test_csv(self, capsys, files):
        code, out, _ = run(capsys, "epidemic", files["epi"])
        lines = [l for l in out.splitlines() if not l.startswith("#")]
        assert code == 0 and lines[0] == "lambda,mean_fraction,stderr,runs"
        first = lines[1].split(",")
        # beta = 0: nothing beyond the seed node
        assert float(first[0]) == 0.0 and float(first[1]) == pytest.approx(1 / 300)
        assert "lambda_c" in out and "method hmf" in out

    def test_flags_only(self, capsys):
        code, out, _ = run(capsys, "epidemic", "--graph", "ba", "--nodes", "200", "--attach-m", "2",
                           "--beta", "0.1,0.2", "--gamma", "0.5", "--runs", "5",
                           "--lambda-c-method", "spectral", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["lambda_c_method"] == "spectral"
        assert [c["lambda"] for c in data["curve"]] == pytest.approx([0.2, 0.4])

    def test_missing_graph_parameter(self, capsys):
        assert run(capsys, "epidemic", "--graph", "er", "--nodes", "50", "--beta", "0.1")[0] == 4
        assert run(capsys, "epidemic", "--beta", "0.1")[0] == 4

    def test_edge_list_file(self, capsys, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\n1 2\n2 3\n3 0\n")
        code, out, _ = run(capsys, "epidemic", "--graph", "file", "--path", str(path),
                           "--beta", "0.5", "--runs", "3", "--format", "json")
        assert code == 0 and json.loads(out)["lambda_c"] == pytest.approx(1.0)

    def test_bad_method_in_config(self, capsys, tmp_path):
        cfg = write(tmp_path / "e.json", {"graph": {"kind": "er", "nodes": 20, "edge_prob": 0.2},
                                          "beta_grid": [0.1], "lambda_c_method": "guess"})
        assert run(capsys, "epidemic", cfg)[0] == 2


class TestInequalities:
    def test_small_run(self, capsys):
        code, out, _ = run(capsys, "inequalities", "--pairs", "300", "--seed", "5")
        data = json.loads(out)
        assert code == 0 and data["all_hold"] and data["evaluated"]["pinsker"] == 300


COMMANDS = {
    "divergence": lambda f: ["divergence", f["b50"], f["b25"], "--space", f["space"]],
    "table": lambda f: ["table", "--l-kind", "all", "--opt", "0.01,0.1", "--n", "10,100",
                        "--diam", "1", "--pg-star", "0.3"],
    "hyptest": lambda f: ["hyptest", f["hyp"]],
    "hyptest-csv": lambda f: ["hyptest", f["hyp"], "--format", "csv"],
    "epidemic": lambda f: ["epidemic", f["epi"]],
    "inequalities": lambda f: ["inequalities", "--pairs", "200"],
}


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_reruns_are_byte_identical(name, files, tmp_path, capsys):
    outputs = []
    for i in range(2):
        out = tmp_path / f"{name}-{i}.out"
        assert main(COMMANDS[name](files) + ["--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    capsys.readouterr()
    assert outputs[0] == outputs[1] and outputs[0]


def test_seed_environment_override(files, tmp_path, monkeypatch):
    outs = {}
    for label, env in (("a", "11"), ("b", "11"), ("c", "12")):
        monkeypatch.setenv("DETLIM_SEED", env)
        out = tmp_path / f"{label}.json"
        assert main(["hyptest", files["hyp"], "--seed", "999", "--out", str(out)]) == 0
        outs[label] = json.loads(out.read_text())
    assert outs["a"] == outs["b"] and outs["a"]["config"]["seed"] == 11
    assert outs["c"]["config"]["seed"] == 12


@pytest.mark.skipif(shutil.which("detlim") is None, reason="console script not installed")
def test_console_script(files):
    proc = subprocess.run(["detlim", "divergence", files["b50"], files["b50"]],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["tv"] == 0.0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "detlim", "--version"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and __version__ in proc.stdout
