import numpy as np

import pytest

from hypothesis import given, settings
from hypothesis import strategies as st

from ramanujan.model import Model, build_model, eval_coefficient, eval_liouville_data, theta_constant
from ramanujan.utils.constants import HALF_PI


def test_jacobi_constants(jacobi_model: Model) -> None:
    assert jacobi_model.rho == 3.0
    assert jacobi_model.rho_0 == 3.0
    assert jacobi_model.kappa == 2.0**-6
    assert jacobi_model.liouville_shift == -7.5
    assert jacobi_model.theta == 1.5
    assert jacobi_model.to_dict() == dict(alpha=1.0, beta=1.0, roots=[], series_order=16)


def test_perturbed_constants(perturbed_model: Model) -> None:
    # one root adds b_0 = 1 to rho and 1 / (2 (1 + c)) to kappa
    assert np.isclose(perturbed_model.rho, 4.0)
    assert np.isclose(perturbed_model.kappa, 2.0**-6 / 6)
    assert np.isfinite(perturbed_model.theta)
    assert perturbed_model.theta == theta_constant(perturbed_model)


@pytest.mark.parametrize("model_name", ["jacobi_model", "perturbed_model", "half_model"])
def test_condition_report(model_name: str, request: pytest.FixtureRequest) -> None:
    report = request.getfixturevalue(model_name).condition_report
    assert all(val for key, val in report.items() if key.endswith("_ok"))
    assert report["B_min_abs_strip"] > 0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=-0.6, beta=1.0),
        dict(alpha=1.0, beta=float("nan")),
        dict(alpha=1.0, beta=1.0, perturbation_roots=(1.0,)),
        dict(alpha=1.0, beta=1.0, series_order=4),
    ],
)
def test_build_model_rejects(kwargs: dict) -> None:
    with pytest.raises(ValueError):
        build_model(**kwargs)


def test_coefficients_closed_form(jacobi_model: Model) -> None:
    t = np.linspace(0.1, 3.0, 7)
    assert np.allclose(eval_coefficient(jacobi_model, t, "A"), np.sinh(t) ** 3 * np.cosh(t) ** 3)
    s = np.linspace(0.1, 1.5, 7)
    assert np.allclose(eval_coefficient(jacobi_model, s, "A_tilde"), np.sin(s) ** 3 * np.cos(s) ** 3)
    assert np.allclose(eval_coefficient(jacobi_model, t, "logderiv_A"), 3 / np.tanh(t) + 3 * np.tanh(t))
    assert eval_coefficient(jacobi_model, 0.3 + 0.2j, "B") == 1


def test_coefficients_reject_outside_domain(jacobi_model: Model) -> None:
    with pytest.raises(ValueError):
        eval_coefficient(jacobi_model, 1.0 + 1.6j, "A")
    with pytest.raises(ValueError):
        eval_coefficient(jacobi_model, 2.0, "A_tilde")
    with pytest.raises(ValueError):
        eval_coefficient(jacobi_model, 0.0, "logderiv_A")


@settings(deadline=None, max_examples=50)
@given(st.floats(-5, 5), st.floats(-1.5, 1.5))
def test_B_is_even(x: float, y: float) -> None:
    model = build_model(1.0, 1.0, (2.0, 3.5))
    z = complex(x, y)
    assert np.isclose(eval_coefficient(model, z, "B"), eval_coefficient(model, -z, "B"), rtol=1e-12)


def test_expansion_matches_logderiv(perturbed_model: Model) -> None:
    t = 2.0
    coeffs = perturbed_model.expansion_coeffs(80)
    series = np.sum(coeffs * np.exp(-np.arange(coeffs.size) * t))
    assert coeffs[0] == 2 * perturbed_model.rho
    assert np.isclose(series, perturbed_model.weight.logderiv(t).real, rtol=1e-12)


def test_liouville_data_without_perturbation(jacobi_model: Model) -> None:
    t = np.linspace(0.1, 1.4, 9)
    assert np.allclose(eval_liouville_data(jacobi_model, t, "chi"), 0.0)
    assert np.allclose(eval_liouville_data(jacobi_model, t, "q"), 0.75 / np.tan(t) ** 2 + 0.75 * np.tan(t) ** 2)
    with pytest.raises(ValueError):
        eval_liouville_data(jacobi_model, HALF_PI, "q")
    with pytest.raises(ValueError):
        eval_liouville_data(jacobi_model, 0.0, "G")


def test_G_is_integrable(perturbed_model: Model) -> None:
    g = eval_liouville_data(perturbed_model, np.array([5.0, 10.0, 20.0]), "G")
    assert np.all(np.abs(g) < 1.0)
    assert abs(g[-1]) < abs(g[0])


def test_perturbation_coefficients() -> None:
    # 2 (1 - x^2) / (1 + 4x + x^2) = 2 - 8x + ... in x = e^{-2t}
    model = build_model(1.0, 1.0, (2.0,))
    assert model.exp_coeffs[0] == 1 and model.exp_coeffs[2] == -4
    assert all(b == 0 for b in model.exp_coeffs[1::2])
    assert model.rho == 4


@pytest.mark.parametrize("roots", [(), (2.0,)])
def test_G_matches_direct_formula(roots: tuple) -> None:
    model = build_model(1.0, 1.0, roots)
    t = np.array([0.5, 2.0, 4.0])
    logderiv = 3 / np.tanh(t) + 3 * np.tanh(t)
    slope = -3 / np.sinh(t) ** 2 + 3 / np.cosh(t) ** 2
    for c in roots:
        logderiv = logderiv + 2 * np.sinh(2 * t) / (np.cosh(2 * t) + c)
        slope = slope + (4 + 4 * c * np.cosh(2 * t)) / (np.cosh(2 * t) + c) ** 2

    direct = 0.25 * logderiv**2 + 0.5 * slope - model.rho**2 - 0.75 / t**2
    assert np.allclose(eval_liouville_data(model, t, "G"), direct, rtol=0, atol=1e-12)


def test_q_at_regular_endpoints() -> None:
    # alpha^2 = beta^2 = 1/4 leaves q = -chi, which stays finite at 0 and pi/2
    model = build_model(-0.5, 0.5, (2.0,))
    ends = eval_liouville_data(model, np.array([0.0, HALF_PI]), "q")
    near = eval_liouville_data(model, np.array([1e-6, HALF_PI - 1e-6]), "q")
    assert np.all(np.isfinite(ends))
    assert np.allclose(ends, near, atol=1e-5)
    assert eval_liouville_data(build_model(-0.5, -0.5), 0.0, "q") == 0
    with pytest.raises(ValueError):
        eval_liouville_data(model, HALF_PI + 0.1, "q")
