import numpy as np

import pytest

from hypothesis import given, settings
from hypothesis import strategies as st

from ramanujan.symbols import (
    Certificate,
    build_symbol,
    cauchy_riemann_residual,
    check_certificate,
    exp_shift,
    rational_damped,
    user_grid,
    vanishing_product,
    zero_symbol,
)
from ramanujan.utils.constants import SymbolForms


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(A_bound=1.6, p=1.0, delta=0.5),
        dict(A_bound=0.0, p=0.0, delta=0.5),
        dict(A_bound=0.0, p=1.0, delta=1.5),
    ],
)
def test_certificate_rejects(kwargs: dict) -> None:
    with pytest.raises(ValueError):
        Certificate(**kwargs)


def test_exp_shift() -> None:
    a = exp_shift(0.8)
    assert np.isclose(a(2.0 - 0.5j), np.exp(0.8j * (2.0 - 0.5j)))
    assert a(np.array([0.0, 1.0])).shape == (2,)
    assert check_certificate(a)["constant"] <= 1 + 1e-12
    assert not a.is_zero


def test_zero_symbol() -> None:
    a = zero_symbol(0.5)
    assert a.is_zero
    assert np.all(a(np.array([1.0, 2.0j])) == 0)


def test_rational_damped() -> None:
    a = rational_damped(1.0, delta=0.5)
    assert a.params["offset"] == 1.5
    assert np.isclose(a(1.0), np.exp(1j) / (1.0 + 1.5j))
    with pytest.raises(ValueError):
        rational_damped(1.0, delta=0.5, offset=0.4)


def test_vanishing_product_zeros() -> None:
    nodes = [3j, 5j, 1.5]
    a = vanishing_product(nodes, p=1.0)
    assert np.allclose(a(np.array(nodes)), 0)
    report = check_certificate(a)
    assert report["constant"] <= 1 + 1e-12
    with pytest.raises(ValueError):
        vanishing_product([-1j])
    with pytest.raises(ValueError):
        vanishing_product([1j], delta=0.8)


@settings(deadline=None, max_examples=60)
@given(st.floats(-30, 30), st.floats(-0.5, 5.0))
def test_vanishing_product_envelope(x: float, y: float) -> None:
    a = vanishing_product([2j, 7j, 0.5], p=1.5)
    lam = complex(x, y)
    assert abs(a(lam)) <= np.exp(-1.5 * y) * (1 + 1e-12)


def test_user_grid() -> None:
    a = user_grid(lambda lam: np.exp(1j * lam) / (lam + 3j), A_bound=0.0, p=1.0, delta=0.5)
    assert a.form == SymbolForms.user_grid
    assert cauchy_riemann_residual(a) < 1e-6
    with pytest.raises(ValueError):
        user_grid(lambda lam: np.exp(1j * np.conj(lam)), A_bound=0.0, p=1.0, delta=0.5)


def test_build_symbol() -> None:
    assert build_symbol("exp_shift", p=0.7).certificate.p == 0.7
    assert build_symbol(SymbolForms.rational_damped, p=0.7).form == SymbolForms.rational_damped
    assert build_symbol("vanishing_product", nodes=[1j]).params["nodes"] == (1j,)
    with pytest.raises(ValueError):
        build_symbol("unknown_form")
