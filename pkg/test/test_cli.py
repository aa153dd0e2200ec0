import json
from pathlib import Path
from typing import List

import numpy as np

import pandas as pd

import pytest

from ramanujan.cli import EXIT_INVALID, EXIT_OK, build_parser, run_command


@pytest.fixture
def workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _run(config_path: str, *argv: str) -> int:
    args: List[str] = [*argv, "--config", config_path]
    return run_command(args)


def test_parser_subcommands() -> None:
    args = build_parser().parse_args(["master", "verify", "--symbol", "zero", "--p", "0.5"])
    assert (args.command, args.action, args.symbol, args.p) == ("master", "verify", "zero", 0.5)
    assert args.sigmas == "0,0.1,0.2"


def test_model_show(workdir: Path, config_path: str, capsys: pytest.CaptureFixture) -> None:
    assert _run(config_path, "model", "show", "--roots", "2", "--out", "-") == EXIT_OK
    info = json.loads(capsys.readouterr().out)
    assert info["roots"] == [2.0] and info["rho"] == 4.0
    assert np.isclose(info["kappa"], 2.0**-6 / 6)
    assert (workdir / "log" / "model.log").exists()


def test_spectrum_solve(workdir: Path, config_path: str) -> None:
    assert _run(config_path, "spectrum", "solve", "--nmax", "6") == EXIT_OK
    table = pd.read_csv(workdir / "results" / "spectrum" / "solve.csv")
    assert list(table.columns) == ["n", "nu", "mu", "c_n", "shoot_residual", "nu_liouville"]
    n = table["n"].to_numpy()
    assert np.allclose(table["mu"], 2 * n + 3, rtol=1e-9)
    assert np.allclose(table["nu"], (2 * n + 3) ** 2 - 9, rtol=1e-9, atol=1e-8)
    assert np.allclose(table["nu_liouville"], (2 * n + 3) ** 2 - 1.5, rtol=1e-9)
    # c_0 = P_0(1) / ||P_0|| with ||P_0||^2 = 1 / 12 for alpha = beta = 1
    assert np.isclose(table["c_n"][0], np.sqrt(12), rtol=1e-7)

    meta = json.loads((workdir / "results" / "spectrum" / "solve.meta.json").read_text())
    assert (meta["m0"], meta["n0"]) == (-1, 0)
    assert meta["tolerances"]["eigen_tol"] == 1e-10 and len(meta["config_hash"]) > 0


def test_cfunc_eval(workdir: Path, config_path: str) -> None:
    out = workdir / "c.json"
    code = _run(config_path, "cfunc", "eval", "--alpha", "0.5", "--beta", "0.5", "--format", "json", "--out", str(out))
    assert code == EXIT_OK
    rows = json.loads(out.read_text())
    for row in rows:
        # c(lambda) = -2i / lambda for alpha = beta = 1/2
        assert abs(row["c_re"]) < 1e-7 and np.isclose(row["c_im"], -2 / row["lam_re"], rtol=1e-8)
        assert np.isclose(row["plancherel_density"], row["lam_re"] ** 2 / 4, rtol=1e-8)
        assert row["method"] == "wronskian"


def test_cfunc_eval_single_lambda(workdir: Path, config_path: str, capsys: pytest.CaptureFixture) -> None:
    argv = ["cfunc", "eval", "--alpha", "0.5", "--beta", "0.5", "--lambda", "2,-0.2", "--method", "limit", "--out", "-"]
    assert _run(config_path, *argv) == EXIT_OK
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "lam_re,lam_im,c_re,c_im,est_error,method"
    row = lines[1].split(",")
    c = complex(float(row[2]), float(row[3]))
    assert np.isclose(c, -2j / (2 - 0.2j), rtol=1e-7) and row[-1] == "limit"


def test_phi_eval(workdir: Path, config_path: str, capsys: pytest.CaptureFixture) -> None:
    code = _run(config_path, "phi", "eval", "--alpha", "0.5", "--beta", "0.5", "--lam", "1.5", "--out", "-")
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "t,phi_re,phi_im,dphi_re,dphi_im,est_error"
    t, phi_re, _, dphi_re, _, est_error = (float(v) for v in lines[1].split(","))
    assert np.isclose(phi_re, 2 * np.sin(1.5 * t) / (1.5 * np.sinh(2 * t)), rtol=1e-7)
    numerator = 1.5 * np.cos(1.5 * t) * np.sinh(2 * t) - 2 * np.sin(1.5 * t) * np.cosh(2 * t)
    slope = 2 * numerator / (1.5 * np.sinh(2 * t) ** 2)
    assert np.isclose(dphi_re, slope, rtol=1e-6) and est_error < 1e-6


def test_phi_eval_imaginary_segment(workdir: Path, config_path: str, capsys: pytest.CaptureFixture) -> None:
    argv = ["phi", "eval", "--alpha", "0.5", "--beta", "0.5", "--lambda", "1.5,0", "--t", "0.3,0.9", "--imag"]
    argv += ["--out", "-"]
    assert _run(config_path, *argv) == EXIT_OK
    rows = [line.split(",") for line in capsys.readouterr().out.strip().split("\n")[1:]]
    assert [float(row[0]) for row in rows] == [0.3, 0.9]
    for row in rows:
        s = float(row[0])
        assert np.isclose(float(row[1]), 2 * np.sinh(1.5 * s) / (1.5 * np.sin(2 * s)), rtol=1e-7)


def test_sinetype_table(workdir: Path, config_path: str) -> None:
    assert _run(config_path, "sinetype", "table") == EXIT_OK
    table = pd.read_csv(workdir / "results" / "sinetype" / "table.csv")
    assert list(table.columns) == ["n", "mu", "d_re", "d_im", "ratio", "spectral_ratio"]
    window = table[(table["n"] >= 5) & (table["n"] <= 60)]
    mu = window["mu"].to_numpy()
    # ratio = |d_n| / mu_n^3 tends to 2 / pi^2 for alpha = beta = 1
    assert np.allclose(window["ratio"], 2 * (mu**2 - 1) / (np.pi**2 * mu**2), rtol=1e-6)
    meta = json.loads((workdir / "results" / "sinetype" / "table.meta.json").read_text())
    assert meta["branch"] == "generic" and meta["n0"] == 0
    assert meta["rho_0"] == 3 and meta["bounded"]


def test_master_verify_zero_symbol(workdir: Path, config_path: str) -> None:
    assert _run(config_path, "master", "verify", "--symbol", "zero", "--nmax", "10") == EXIT_OK
    table = pd.read_csv(workdir / "results" / "master" / "verify.csv")
    assert np.all(table["series_re"] == 0) and np.all(table["discrepancy"] == 0)
    assert (workdir / "results" / "master" / "verify_forward.csv").exists()
    summary = json.loads((workdir / "results" / "master" / "verify.meta.json").read_text())
    assert summary["passed"]


def test_regress_one_case(workdir: Path, config_path: str, capsys: pytest.CaptureFixture) -> None:
    code = _run(config_path, "regress", "--case", "gamma_anchor", "--baseline-dir", str(workdir / "baselines"))
    assert code == EXIT_OK
    assert capsys.readouterr().out == "gamma_anchor: frozen\n"
    assert (workdir / "results" / "regress" / "summary.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["model", "show", "--alpha", "-0.6"],
        ["spectrum", "solve", "--nmax", "500"],
        ["phi", "eval", "--lam", "not-a-number"],
        ["teleport"],
        ["master", "verify", "--symbol", "unknown"],
    ],
)
def test_invalid_input(workdir: Path, config_path: str, argv: List[str]) -> None:
    assert _run(config_path, *argv) == EXIT_INVALID
