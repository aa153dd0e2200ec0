from pathlib import Path

import pytest

from ramanujan.regression import CASES, compare_with_baseline, run_regression
from ramanujan.utils.utils import ToleranceSection


TOLERANCES = ToleranceSection(ode_tol=1e-10, eigen_tol=1e-10, quad_tol=1e-6, route_tol=2e-5)


@pytest.mark.parametrize(
    "values, broken",
    [
        (dict(gap_bound=1.4), []),
        (dict(gap_bound=1.6), ["gap_bound"]),
        (dict(gap_bound=1e-15), []),
        (dict(nu=2.0 + 1e-12), []),
        (dict(nu=2.001), ["nu"]),
        (dict(other=1.0), ["other"]),
    ],
)
def test_compare_with_baseline(values: dict, broken: list) -> None:
    baseline = dict(gap_bound=1.0, nu=2.0)
    assert compare_with_baseline(values, baseline) == broken


def test_unknown_case() -> None:
    with pytest.raises(KeyError):
        run_regression(TOLERANCES, names=["no_such_case"])


def test_first_run_freezes(tmp_path: Path) -> None:
    baseline_dir = str(tmp_path / "baselines")
    first = run_regression(TOLERANCES, baseline_dir, ["gamma_anchor"])
    assert first["gamma_anchor"]["frozen"] and first["gamma_anchor"]["passed"]
    assert (tmp_path / "baselines" / "gamma_anchor.json").exists()

    second = run_regression(TOLERANCES, baseline_dir, ["gamma_anchor"])
    assert not second["gamma_anchor"]["frozen"] and second["gamma_anchor"]["passed"]


def test_broken_baseline_fails(tmp_path: Path) -> None:
    (tmp_path / "gamma_anchor.json").write_text('{"renamed_bound": 1.0}')
    summary = run_regression(TOLERANCES, str(tmp_path), ["gamma_anchor"])
    assert not summary["gamma_anchor"]["frozen"]
    assert not summary["gamma_anchor"]["passed"]


def test_case_names() -> None:
    assert {"jacobi_eigenvalues", "master_identity", "empty_corrections", "interpolation"} <= set(CASES)


@pytest.mark.slow
def test_full_suite(tmp_path: Path) -> None:
    summary = run_regression(TOLERANCES, str(tmp_path))
    assert set(summary) == set(CASES)
    assert all(case["passed"] for case in summary.values())
