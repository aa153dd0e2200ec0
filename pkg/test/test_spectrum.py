import numpy as np

import pytest

from scipy.integrate import quad
from scipy.special import gammaln

from ramanujan.model import Model, build_model, eval_coefficient
from ramanujan.spectrum import (
    EigenData,
    asymptotic_coefficient,
    asymptotic_mu,
    eigenfunction_eval,
    jacobi_reference,
    liouville_residual,
    matching_constant,
    shoot_mismatch,
    shoot_mismatch_liouville,
    solve_eigen,
    sturm_count,
)
from ramanujan.utils.constants import HALF_PI


def test_jacobi_eigenvalues(jacobi_model: Model, jacobi_eigen: EigenData) -> None:
    n = np.arange(21)
    assert np.allclose(jacobi_eigen.nus, (2 * n + 3) ** 2 - 9, rtol=1e-9, atol=1e-9)
    assert np.allclose(jacobi_eigen.liouville_nus, (2 * n + 3) ** 2 - 1.5, rtol=1e-9)
    assert np.allclose(jacobi_eigen.mus, 2 * n + 3, rtol=1e-10)
    assert (jacobi_eigen.m0, jacobi_eigen.n0) == (-1, 0)
    assert np.all(jacobi_eigen.diagnostics["shoot_residual"] < 1e-6)


@pytest.mark.parametrize("alpha, beta", [(0.5, 0.5), (1.5, 0.5), (0.0, 2.0)])
def test_jacobi_eigenvalues_other_orders(alpha: float, beta: float) -> None:
    model = build_model(alpha, beta)
    data = solve_eigen(model, 8)
    n = np.arange(9)
    assert np.allclose(data.nus + model.rho**2, (2 * n + model.rho) ** 2, rtol=1e-9)


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_jacobi_eigenfunctions(jacobi_model: Model, jacobi_eigen: EigenData, n: int) -> None:
    t = np.linspace(0.05, HALF_PI - 0.05, 23)
    psi = eigenfunction_eval(jacobi_eigen, jacobi_model, n, t)
    assert np.allclose(psi, jacobi_reference(jacobi_model, n, t), atol=1e-6)


def test_eigenfunctions_orthonormal(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    for m in range(4):
        for n in range(m, 4):
            integrand = lambda t: (  # noqa: E731
                eigenfunction_eval(perturbed_eigen, perturbed_model, m, t)
                * eigenfunction_eval(perturbed_eigen, perturbed_model, n, t)
                * eval_coefficient(perturbed_model, t, "A_tilde").real
            )
            value = quad(integrand, 1e-9, HALF_PI - 1e-9, epsabs=1e-12, limit=200)[0]
            assert abs(value - float(m == n)) < 1e-7


def test_eigenfunction_sign_and_zeros(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    t = np.linspace(0.01, HALF_PI - 0.01, 2000)
    for n in range(8):
        values = eigenfunction_eval(perturbed_eigen, perturbed_model, n, t)
        assert values[0] > 0
        signs = np.sign(values)
        assert np.sum(signs[1:] != signs[:-1]) == n


def test_sturm_count(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    for n in (0, 3, 7):
        gap = perturbed_eigen.nus[n + 1] - perturbed_eigen.nus[n]
        assert sturm_count(perturbed_model, perturbed_eigen.nus[n] + 0.5 * gap) == n + 1


def test_mismatch_vanishes_at_eigenvalues(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    nu = perturbed_eigen.nus[5]
    scale = abs(shoot_mismatch(perturbed_model, nu + 1.0))
    assert abs(shoot_mismatch(perturbed_model, nu)) < 1e-7 * scale
    nu_l = perturbed_eigen.liouville_nus[5]
    assert abs(shoot_mismatch_liouville(perturbed_model, nu_l)) < 1e-7 * scale


def test_matching_constant(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    for n in (0, 2, 6):
        c_n = matching_constant(perturbed_eigen, perturbed_model, n)
        assert np.isfinite(c_n) and c_n > 0


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_matching_constant_closed_form(jacobi_model: Model, jacobi_eigen: EigenData, n: int) -> None:
    # w = P_n(cos 2t) / P_n(1) and Psi_n = P_n(cos 2t) / ||P_n||, so c_n = P_n(1) / ||P_n||
    a = b = 1.0
    log_value_at_one = gammaln(n + a + 1) - gammaln(n + 1) - gammaln(a + 1)
    if n == 0:
        log_norm2 = gammaln(a + 1) + gammaln(b + 1) - np.log(2) - gammaln(a + b + 2)
    else:
        log_norm2 = (
            gammaln(n + a + 1)
            + gammaln(n + b + 1)
            - np.log(2 * (2 * n + a + b + 1))
            - gammaln(n + a + b + 1)
            - gammaln(n + 1)
        )
    expected = np.exp(log_value_at_one - 0.5 * log_norm2)
    assert np.isclose(matching_constant(jacobi_eigen, jacobi_model, n), expected, rtol=1e-7)
    assert np.isclose(jacobi_eigen.matching[n], expected, rtol=1e-7)
    assert np.isclose(jacobi_reference(jacobi_model, n, 0.0), expected, rtol=1e-12)


def test_liouville_residual(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    t = np.linspace(0.2, 1.3, 6)
    residual = liouville_residual(perturbed_eigen, perturbed_model, 3, t)
    assert np.max(residual) < 1e-3


def test_asymptotic_law(perturbed_model: Model, perturbed_eigen: EigenData) -> None:
    n = np.arange(10, 21)
    deviation = np.abs(perturbed_eigen.mus[n] - asymptotic_mu(perturbed_model, n))
    assert np.all(deviation * n**2 < 200)
    # without the 1 / n term the deviation is of order k1 / n
    plain = np.abs(perturbed_eigen.mus[n] - 2 * n - perturbed_model.rho_0)
    if abs(asymptotic_coefficient(perturbed_model)) > 0.5:
        assert deviation[-1] < plain[-1]


def test_jacobi_asymptotics_are_exact(jacobi_model: Model) -> None:
    assert asymptotic_coefficient(jacobi_model) == 0
    assert np.allclose(asymptotic_mu(jacobi_model, np.arange(1, 5)), 2 * np.arange(1, 5) + 3)


@pytest.mark.parametrize("kwargs", [dict(n_max=201), dict(n_max=-1), dict(n_max=5, tol=1e-13)])
def test_solve_eigen_rejects(jacobi_model: Model, kwargs: dict) -> None:
    with pytest.raises(ValueError):
        solve_eigen(jacobi_model, **kwargs)


def test_eigenfunction_rejects(jacobi_model: Model, jacobi_eigen: EigenData) -> None:
    with pytest.raises(ValueError):
        eigenfunction_eval(jacobi_eigen, jacobi_model, 21, 0.5)
    with pytest.raises(ValueError):
        eigenfunction_eval(jacobi_eigen, jacobi_model, 1, HALF_PI)
    with pytest.raises(ValueError):
        jacobi_reference(build_model(1.0, 1.0, (2.0,)), 1, 0.5)


@pytest.mark.slow
def test_high_index_brackets(perturbed_model: Model) -> None:
    data = solve_eigen(perturbed_model, 60, workers=4)
    assert np.all(np.diff(data.nus) > 0)
    n = np.arange(40, 61)
    assert np.max(np.abs(data.mus[n] - asymptotic_mu(perturbed_model, n))) < 0.05
