from __future__ import annotations

import csv
import json
import math
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tprior.cli import ParseError, UsageError, main, parse_number_list, prior_table, read_returns
from tprior.priors import NuDomain

RETURNS = str(resources.files("tprior") / "data" / "synthetic_returns.csv")


def test_parse_number_list():
    assert parse_number_list("1,3,10") == [1.0, 3.0, 10.0]
    assert parse_number_list("1..4", integer=True) == [1, 2, 3, 4]
    assert parse_number_list("1..3,10") == [1.0, 2.0, 3.0, 10.0]
    assert parse_number_list("0.5, 2.5") == [0.5, 2.5]
    for bad in ("", " , ", "5..2"):
        with pytest.raises(UsageError):
            parse_number_list(bad)


@given(st.integers(1, 30), st.integers(0, 30))
def test_range_syntax_length(lo, span):
    assert parse_number_list(f"{lo}..{lo + span}", integer=True) == list(range(lo, lo + span + 1))


def test_read_returns_crlf_and_lf(tmp_path):
    lf = tmp_path / "lf.csv"
    crlf = tmp_path / "crlf.csv"
    lf.write_bytes(b"r\n0.01\n-0.02\n0.005\n")
    crlf.write_bytes(b"r\r\n0.01\r\n-0.02\r\n0.005\r\n")
    assert np.array_equal(read_returns(lf), read_returns(crlf))
    assert read_returns(lf).tolist() == [0.01, -0.02, 0.005]


def test_read_returns_log_transform(tmp_path):
    p = tmp_path / "prices.csv"
    p.write_text("price\n100\n110\n99\n")
    assert np.allclose(read_returns(p, log_returns=True), [math.log(1.1), math.log(99 / 110)])


@pytest.mark.parametrize(
    "body, message",
    [
        ("r\n0.1\nabc\n0.2\n", ":3:"),
        ("r\n0.1\n", "at least 2"),
        ("", "empty"),
        ("r\n0.1\ninf\n", ":3:"),
    ],
)
def test_read_returns_errors(tmp_path, body, message):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(ParseError, match=message):
        read_returns(p)


def test_log_returns_need_two_prices(tmp_path):
    p = tmp_path / "prices.csv"
    p.write_text("price\n100\n101\n")
    with pytest.raises(ParseError, match="at least 2"):
        read_returns(p, log_returns=True)


def test_bundled_sample_is_heavy_tailed():
    from scipy import stats

    x = read_returns(RETURNS)
    assert x.size == 100
    assert stats.kurtosis(x) > 3


def test_fit_outputs_and_determinism(tmp_path, capsys):
    args = ["fit", "--input", RETURNS, "--prior", "2", "--seed", "42", "--iterations", "1500", "--burn-in", "500"]
    assert main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--output-dir", str(tmp_path / "b")]) == 0
    for name in ("chain.csv", "summary_mu.json", "summary_sigma2.json", "summary_nu.json", "hist_nu.csv"):
        assert (tmp_path / "a" / name).exists()
    assert (tmp_path / "a" / "chain.csv").read_bytes() == (tmp_path / "b" / "chain.csv").read_bytes()
    summary = json.loads((tmp_path / "a" / "summary_nu.json").read_text())
    assert set(summary) == {"mean", "median", "mode", "var", "ci", "level"}
    with open(tmp_path / "a" / "hist_nu.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert sum(int(r["count"]) for r in rows) == 1000
    assert "n=100" in capsys.readouterr().out


def test_fit_format_json_only(tmp_path):
    out = tmp_path / "j"
    rc = main(["fit", "--input", RETURNS, "--iterations", "200", "--burn-in", "50", "--format", "json", "--output-dir", str(out)])
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == ["summary_mu.json", "summary_nu.json", "summary_sigma2.json"]


def test_fit_exit_codes(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("r\n0.1\nx\n")
    assert main(["fit", "--input", str(bad), "--output-dir", str(tmp_path)]) == 2
    assert main(["fit", "--input", str(tmp_path / "missing.csv"), "--output-dir", str(tmp_path)]) == 2
    assert main(["fit"]) == 1
    const = tmp_path / "const.csv"
    const.write_text("r\n1\n1\n1\n")
    assert main(["fit", "--input", str(const), "--output-dir", str(tmp_path)]) == 3


def test_simulate_tables(tmp_path):
    rc = main(["simulate", "--nus", "1,3,10", "--priors", "1,2,5", "--reps", "10", "--n", "30", "--seed", "7",
               "--n-points", "300", "--triples", "--output-dir", str(tmp_path)])
    assert rc == 0
    for name in ("table_rmse.csv", "table_coverage.csv", "table_avglen.csv", "table_modelen.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == "nu,prior_1,prior_2,prior_5"
        assert len(lines) == 5 and lines[-1].startswith("Mean,")
    assert (tmp_path / "report.json").exists()
    assert len((tmp_path / "triples.csv").read_text().splitlines()) == 1 + 9 * 10


def test_simulate_usage_errors(tmp_path):
    assert main(["simulate", "--nus", "", "--output-dir", str(tmp_path)]) == 1
    assert main(["simulate", "--priors", "7", "--nus", "1", "--output-dir", str(tmp_path)]) == 1
    assert main(["bogus"]) == 1
    assert main([]) == 1
    assert main(["--help"]) == 0


def test_verify_pm_residual(capsys):
    assert main(["verify", "--check", "pm-residual", "--nu", "2", "--sigma", "1", "--n", "30"]) == 0
    out = capsys.readouterr().out
    row = [l for l in out.splitlines() if l.startswith("pm-residual")][0]
    assert float(row.split()[1]) <= 1e-6 and row.endswith("PASS")


def test_verify_negative_control(capsys):
    assert main(["verify", "--check", "pm-residual", "--prior", "5"]) == 4
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize("check", ["h1", "pm-order", "tail", "positivity", "propriety"])
def test_verify_individual_checks(check, capsys):
    assert main(["verify", "--check", check]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_default_all_pass(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 10 and "FAIL" not in out


def test_prior_table(tmp_path):
    assert main(["prior-table", "--output-dir", str(tmp_path)]) == 0
    data = np.loadtxt(tmp_path / "priors.csv", delimiter=",", skiprows=1)
    header = (tmp_path / "priors.csv").read_text().splitlines()[0]
    assert header == "nu,p1,p2,p3,p4,p5,p6"
    nu = data[:, 0]
    for j in range(1, 7):
        assert np.trapezoid(data[:, j], nu) == pytest.approx(1.0, abs=1e-6)
    assert nu[np.argmax(data[:, 6])] == pytest.approx(0.6, rel=0.01)
    k10 = int(np.argmin(np.abs(nu - 10.0)))
    assert data[k10, 5] / data[0, 5] == pytest.approx(math.exp(-0.1 * (nu[k10] - nu[0])), rel=1e-12)
    assert data[k10, 5] / data[0, 5] == pytest.approx(math.exp(-1.0), rel=0.01)


def test_prior_table_function_shape():
    grid, dens = prior_table(NuDomain(0.1, 10.0, 50))
    assert grid.shape == (50,) and dens.shape == (50, 6)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tprior", "verify", "--check", "h1"], capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout
