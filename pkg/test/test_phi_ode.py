import numpy as np

import pytest

from hypothesis import given, settings
from hypothesis import strategies as st

from ramanujan.model import Model, build_model
from ramanujan.phi_ode import (
    check_phi_envelope,
    eval_phi,
    eval_phi_grid,
    eval_phi_imag,
    eval_phi_ray,
    frobenius_start,
    ode_residual,
)
from ramanujan.utils.constants import IntegrationError, PathChoices


def _half_phi(lam: complex, z: complex) -> complex:
    return 2 * np.sin(lam * z) / (lam * np.sinh(2 * z))


@pytest.mark.parametrize("lam", [0.4, 1.3, 7.0, 1.2 - 0.3j, 2.0 + 1.0j])
def test_phi_closed_form(half_model: Model, lam: complex) -> None:
    t = np.linspace(0.05, 4.0, 12)
    phi = eval_phi(half_model, lam, t)
    expected = np.array([_half_phi(lam, x) for x in t])
    assert np.allclose(phi.values, expected, rtol=1e-7, atol=1e-12)
    assert phi.est_error < 1e-6


def test_phi_is_cosine_for_flat_weight() -> None:
    model = build_model(-0.5, -0.5)
    t = np.linspace(0.1, 6.0, 10)
    values, derivs = eval_phi_grid(model, [2.5, 0.3 - 0.2j], t)
    assert np.allclose(values[0], np.cos(2.5 * t), atol=1e-8)
    assert np.allclose(values[1], np.cos((0.3 - 0.2j) * t), atol=1e-8)
    assert np.allclose(derivs[0], -2.5 * np.sin(2.5 * t), atol=1e-7)


@pytest.mark.parametrize("xi", [0.4j, 1.2j, 0.3 + 0.2j, -0.8 + 0.5j, 1.0 - 0.6j])
def test_phi_ray_closed_form(half_model: Model, xi: complex) -> None:
    lams = np.array([1.5, 0.7 - 0.2j, 3.0j])
    values = eval_phi_ray(half_model, lams, xi)
    expected = np.array([_half_phi(lam, xi) for lam in lams])
    assert np.allclose(values, expected, rtol=1e-7)


def test_phi_ray_at_origin_and_outside(half_model: Model) -> None:
    assert np.all(eval_phi_ray(half_model, [1.0, 2.0], 0.0) == 1)
    with pytest.raises(ValueError):
        eval_phi_ray(half_model, [1.0], 1.6j)
    with pytest.raises(IntegrationError):
        eval_phi_ray(half_model, [1.0], 1.5707j)


def test_phi_imag_segment(half_model: Model) -> None:
    t = np.linspace(0.1, 1.5, 8)
    # nu = 5 gives mu = sqrt(nu + rho^2) = 3
    values = eval_phi_imag(half_model, 5.0, t)
    assert np.allclose(values, 2 * np.sin(3 * t) / (3 * np.sin(2 * t)), rtol=1e-7)


@settings(deadline=None, max_examples=20)
@given(st.floats(0.1, 8.0), st.floats(-1.0, 1.0))
def test_phi_even_and_conjugate(x: float, y: float) -> None:
    model = build_model(1.0, 1.0, (2.0,))
    lam = complex(x, y)
    t = np.linspace(0.2, 3.0, 5)
    values, _ = eval_phi_grid(model, [lam, -lam, np.conj(lam)], t)
    scale = np.max(np.abs(values[0])) + 1
    assert np.max(np.abs(values[0] - values[1])) < 1e-8 * scale
    assert np.max(np.abs(values[2] - np.conj(values[0]))) < 1e-8 * scale


def test_phi_at_origin(perturbed_model: Model) -> None:
    values, derivs = eval_phi_grid(perturbed_model, [0.5, 4.0], np.array([0.0, 0.01]))
    assert np.all(values[:, 0] == 1)
    assert np.all(derivs[:, 0] == 0)
    value, _ = frobenius_start(perturbed_model, 0.5, 0.01)
    assert np.isclose(value, values[0, 1], rtol=1e-14)


def test_ode_residual(perturbed_model: Model) -> None:
    residual = ode_residual(perturbed_model, 1.3 - 0.4j, np.linspace(0.1, 3.0, 6))
    assert np.max(residual) < 1e-5


@pytest.mark.parametrize("tol", [1e-3, 1e-15])
def test_tolerance_range(half_model: Model, tol: float) -> None:
    with pytest.raises(ValueError):
        eval_phi(half_model, 1.0, 1.0, tol)


def test_phi_rejects_nonpositive_t(half_model: Model) -> None:
    with pytest.raises(ValueError):
        eval_phi(half_model, 1.0, np.array([0.0, 1.0]))


def test_phi_envelope(half_model: Model) -> None:
    report = check_phi_envelope(half_model, [0.5, 2.0, 1.0 - 1.0j], [0.5, 1.0, 2.0, 4.0, 8.0])
    assert report["unit_bound_ok"]
    assert report["real_axis_constant"] < 10


def test_frobenius_start_leading_correction(jacobi_model: Model) -> None:
    # f = 1 - (lambda^2 + rho^2) eps^2 / (2 (2 alpha + 2)) + O(eps^4) with lambda^2 + rho^2 = 10
    value, deriv = frobenius_start(jacobi_model, 1.0, 0.02)
    assert abs(value - (1 - 10 / 8 * 4e-4)) < 1e-6
    assert abs(deriv - (-2 * 10 / 8 * 0.02)) < 1e-4


@pytest.mark.parametrize("model_name", ["jacobi_model", "perturbed_model", "half_model"])
def test_frobenius_start_at_i_rho(model_name: str, request: pytest.FixtureRequest) -> None:
    model = request.getfixturevalue(model_name)
    assert frobenius_start(model, 1j * model.rho, 0.02) == (1, 0)


def test_phi_on_imaginary_segment_with_derivative(half_model: Model) -> None:
    lam = 1.3 - 0.4j
    s = np.linspace(0.1, 1.4, 6)
    phi = eval_phi(half_model, lam, s, path=PathChoices.imaginary_segment)
    # phi_lambda(is) = 2 sinh(lambda s) / (lambda sin 2s)
    expected = 2 * np.sinh(lam * s) / (lam * np.sin(2 * s))
    slope = 2 * (lam * np.cosh(lam * s) * np.sin(2 * s) - 2 * np.sinh(lam * s) * np.cos(2 * s))
    slope = slope / (lam * np.sin(2 * s) ** 2)
    assert phi.path == PathChoices.imaginary_segment
    assert np.allclose(phi.values, expected, rtol=1e-7)
    assert np.allclose(phi.derivs, slope, rtol=1e-6)
    with pytest.raises(IntegrationError):
        eval_phi(half_model, lam, 1.5707, path=PathChoices.imaginary_segment)
