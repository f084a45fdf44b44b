import csv
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import logsumexp

from mrlgp.cli import EXIT_INFERENCE, EXIT_INPUT, EXIT_OK, main, read_series
from mrlgp.config import ConfigError, load_config, parse_lines


def run(*argv):
    return main([str(a) for a in argv])


def read_table(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.DictReader(ln for ln in lines if not ln.startswith("#")))
    return comments, rows


def col(rows, name):
    return np.array([float(r[name]) for r in rows])


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def bias_csv(tmp_path):
    out = tmp_path / "sim"
    assert run("simulate", "--out", out, "--seed", 3, "--set", "n_points=40",
               "--set", "t0=10", "--set", "t1=25") == EXIT_OK
    return out / "simulate.csv"


# configuration ---------------------------------------------------------------------

def test_config_parsing(tmp_path):
    cfg = write_csv(tmp_path / "c.cfg", "# comment\nkind = drift  # trailing\nn = 50\n")
    c = load_config("remove", cfg, ["seed=4"])
    assert c["kind"] == "drift" and c["n"] == 50 and c["seed"] == 4
    assert c.echo().startswith("# mrl-gp v1 remove config\n")


@pytest.mark.parametrize("lines, where", [
    (["kind = bias", "kind = drift"], ":2"),
    (["just words"], ":1"),
    (["x ="], ":1"),
])
def test_config_syntax_errors(lines, where):
    with pytest.raises(ConfigError, match=where):
        parse_lines(lines, "f")


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError, match="unknown key"):
        load_config("remove", None, ["colour=red"])
    with pytest.raises(ConfigError, match="bad value"):
        load_config("remove", None, ["n=0"])
    with pytest.raises(ConfigError, match="bad value"):
        load_config("fit", None, ["mu=uniform(3, 1)"])


# input --------------------------------------------------------------------------------

def test_read_series_skips_comments_and_extra_columns(tmp_path):
    p = write_csv(tmp_path / "d.csv", "# note\ny,t,z\n1.5,0,9\n2.5,1,9\n")
    s = read_series(p)
    np.testing.assert_array_equal(s.t, [0, 1])
    np.testing.assert_array_equal(s.y, [1.5, 2.5])


@pytest.mark.parametrize("text, msg", [
    ("t,z\n0,1\n", "lacks column"),
    ("t,y\n0,1\n0,2\n", ":3: t must be strictly increasing"),
    ("t,y\n0,1\n1,abc\n", ":3: non-numeric"),
    ("t,y\n0,1\n1\n", ":3: expected 2 fields"),
    ("t,y\n0,nan\n", ":2: t and y must be finite"),
    ("t,y\n", "no data rows"),
    ("", "no header"),
])
def test_malformed_input_exits_2(tmp_path, capsys, text, msg):
    p = write_csv(tmp_path / "bad.csv", text)
    assert run("remove", p, "--out", tmp_path) == EXIT_INPUT
    assert msg in capsys.readouterr().err


def test_missing_file_and_bad_key_exit_2(tmp_path):
    assert run("fit", tmp_path / "nope.csv", "--out", tmp_path) == EXIT_INPUT
    assert run("simulate", "--out", tmp_path, "--set", "scenario=wedge", "--set", "t0=3") \
        == EXIT_INPUT
    assert run("remove", tmp_path / "x.csv", "--set", "k_b_link=1") == EXIT_INPUT


def test_inference_failure_exits_3(tmp_path):
    # every evidence underflows to zero
    p = write_csv(tmp_path / "d.csv", "t,y\n0,1e200\n1,-1e200\n2,1e200\n")
    assert run("remove", p, "--out", tmp_path, "--set", "n=5") == EXIT_INFERENCE


# commands ----------------------------------------------------------------------------------

def test_simulate_schema_and_zero_fault(tmp_path):
    assert run("simulate", "--out", tmp_path, "--set", "mu=0", "--plot") == EXIT_OK
    comments, rows = read_table(tmp_path / "simulate.csv")
    assert comments[0] == "# mrl-gp v1 simulate"
    assert list(rows[0]) == ["t", "y", "f_true", "e_true"]
    np.testing.assert_array_equal(col(rows, "e_true"), 0.0)
    assert (tmp_path / "simulate.svg").read_text().startswith("<svg")
    assert "mu = 0.0" in (tmp_path / "simulate.config").read_text()


@pytest.mark.parametrize("scenario", ["gibbs", "wedge", "separation"])
def test_simulate_other_scenarios(tmp_path, scenario):
    assert run("simulate", "--out", tmp_path, "--set", f"scenario={scenario}") == EXIT_OK
    _, rows = read_table(tmp_path / "simulate.csv")
    assert len(rows) >= 100


def test_remove_columns_and_sum(tmp_path, bias_csv):
    out = tmp_path / "rm"
    assert run("remove", bias_csv, "--out", out, "--set", "n=100", "--plot") == EXIT_OK
    comments, rows = read_table(out / "remove.csv")
    assert comments[0] == "# mrl-gp v1 remove"
    assert list(rows[0]) == ["t", "y", "f_mean", "f_std", "e_mean", "e_std", "s_mean"]
    assert len(rows) == 40
    s = col(rows, "s_mean")
    np.testing.assert_allclose(col(rows, "f_mean") + col(rows, "e_mean"), s,
                               atol=1e-9 * (1 + np.abs(s).max()))
    assert (out / "remove.svg").exists()


def test_remove_online_mode(tmp_path, bias_csv):
    out = tmp_path / "rm"
    assert run("remove", bias_csv, "--out", out, "--set", "n=30", "--set", "mode=online") == EXIT_OK
    _, rows = read_table(out / "remove.csv")
    assert col(rows, "f_mean")[0] == 0.0


def test_remove_null_round_trip(tmp_path):
    sim = tmp_path / "sim"
    assert run("simulate", "--out", sim, "--set", "kind=none", "--set", "n_points=60") == EXIT_OK
    out = tmp_path / "rm"
    assert run("remove", sim / "simulate.csv", "--out", out, "--set", "n=500") == EXIT_OK
    _, rows = read_table(out / "remove.csv")
    inside = np.abs(col(rows, "e_mean")) <= 2 * col(rows, "e_std") + 1e-12
    assert inside.mean() >= 0.95


def test_separate_closure_and_rows(tmp_path):
    sim = tmp_path / "sim"
    assert run("simulate", "--out", sim, "--set", "scenario=separation",
               "--set", "artifact=false") == EXIT_OK
    out = tmp_path / "sep"
    assert run("separate", sim / "simulate.csv", "--out", out, "--set", "n=300", "--plot") \
        == EXIT_OK
    comments, rows = read_table(out / "separate.csv")
    assert comments[0] == "# mrl-gp v1 separate"
    assert len(rows) == 100
    y = col(rows, "y")
    gap = col(rows, "sig_mean") + col(rows, "art_mean") - y
    # values are written with 12 significant digits
    assert np.all(np.abs(gap) <= 1e-10 * np.maximum(1, np.abs(y)) + 2e-12 * np.abs(y).max())
    np.testing.assert_allclose(col(rows, "diff"), y - col(rows, "sig_mean"), atol=1e-10)
    inside = np.abs(col(rows, "art_mean")) <= 2 * col(rows, "art_std")
    assert inside.mean() >= 0.95


def test_fit_outputs(tmp_path, bias_csv):
    out = tmp_path / "fit"
    assert run("fit", bias_csv, "--out", out, "--set", "n=200", "--set", "sigma2=fixed(0.001)",
               "--plot") == EXIT_OK
    _, samples = read_table(out / "fit_samples.csv")
    assert list(samples[0]) == ["mu", "L", "sigma2", "log_weight"]
    assert abs(logsumexp(col(samples, "log_weight"))) <= 1e-8
    comments, summary = read_table(out / "fit_summary.csv")
    assert any(c.startswith("# effective_sample_size") for c in comments)
    s2 = next(r for r in summary if r["param"] == "sigma2")
    assert float(s2["q05"]) == float(s2["q95"]) == 0.001
    assert (out / "fit.svg").exists()


@pytest.mark.parametrize("order", ["0", "1"])
def test_fit_two_region(tmp_path, bias_csv, order):
    out = tmp_path / "fit"
    assert run("fit", bias_csv, "--out", out, "--set", "n=50", "--set", "model=mrl",
               "--set", f"order={order}") == EXIT_OK
    _, samples = read_table(out / "fit_samples.csv")
    assert ("k_b_slope" in samples[0]) == (order == "1")


# determinism -----------------------------------------------------------------------------------

COMMAND_ARGS = {
    "simulate": ["--set", "kind=drift"],
    "fit": ["--set", "n=100"],
    "remove": ["--set", "n=100", "--set", "kind=drift"],
    "separate": ["--set", "n=100"],
}


@pytest.mark.parametrize("command", list(COMMAND_ARGS))
def test_echo_reproduces_bytes(tmp_path, bias_csv, command):
    files = {"simulate": ["simulate.csv"], "fit": ["fit_samples.csv", "fit_summary.csv"],
             "remove": ["remove.csv"], "separate": ["separate.csv"]}[command]
    src = [] if command == "simulate" else [bias_csv]
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run(command, *src, "--out", a, "--seed", 7, *COMMAND_ARGS[command]) == EXIT_OK
    assert run(command, *src, "--out", b, "--seed", 7, *COMMAND_ARGS[command]) == EXIT_OK
    assert run(command, *src, "--out", c, "--config", a / f"{command}.config") == EXIT_OK
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes() == (c / f).read_bytes()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mrlgp", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "mrl-gp" in r.stdout
