"""Truncated power-series arithmetic on dense coefficient arrays (index = power)."""
import numpy as np

from scipy.special import factorial, zeta


def series_multiply(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a[: order + 1], b[: order + 1])[: order + 1]


def series_divide(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    """
    Coefficients of num / den up to z^order.

    Args:
        num (np.ndarray): The numerator coefficients.
        den (np.ndarray): The denominator coefficients, den[0] must be nonzero.
        order (int): The highest power to keep.

    Returns:
        quotient (np.ndarray): The quotient coefficients of length order + 1.
    """
    if den[0] == 0:
        raise ValueError("The constant term of the denominator must be nonzero, but got 0")

    num = np.concatenate([num, np.zeros(max(0, order + 1 - num.size))])[: order + 1]
    den = np.concatenate([den, np.zeros(max(0, order + 1 - den.size))])[: order + 1]
    quotient = np.zeros(order + 1, dtype=np.result_type(num, den))
    for k in range(order + 1):
        quotient[k] = (num[k] - np.dot(den[1 : k + 1], quotient[k - 1 :: -1][:k])) / den[0]

    return quotient


def sinh_series(scale: float, order: int) -> np.ndarray:
    """sinh(scale * z)"""
    powers = np.arange(order + 1)
    coeffs = np.where(powers % 2 == 1, scale**powers / factorial(powers), 0.0)
    return coeffs


def cosh_series(scale: float, order: int) -> np.ndarray:
    """cosh(scale * z)"""
    powers = np.arange(order + 1)
    coeffs = np.where(powers % 2 == 0, scale**powers / factorial(powers), 0.0)
    return coeffs


def coth_odd_coefficients(n_terms: int) -> np.ndarray:
    """Coefficient of z^{2k-1} in coth(z) - 1/z for k = 1..n_terms."""
    k = np.arange(1, n_terms + 1)
    return (-1.0) ** (k + 1) * 2 * zeta(2 * k) / np.pi ** (2 * k)


def tanh_odd_coefficients(n_terms: int) -> np.ndarray:
    """Coefficient of z^{2k-1} in tanh(z) for k = 1..n_terms."""
    k = np.arange(1, n_terms + 1)
    return (-1.0) ** (k + 1) * 2 * zeta(2 * k) * ((2 / np.pi) ** (2 * k) - np.pi ** (-2.0 * k))


def coth_squared_regular(z: np.ndarray, n_terms: int = 6) -> np.ndarray:
    """coth(z)^2 - 1/z^2 near the origin, from the Laurent series of coth."""
    c = coth_odd_coefficients(n_terms)
    # coth = 1/z + C(z) with C(z) = sum c_k z^{2k-1}, hence coth^2 - 1/z^2 = 2C(z)/z + C(z)^2
    z2 = np.asarray(z) ** 2
    two_c_over_z = sum(2 * c[k] * z2**k for k in range(n_terms))
    c_of_z = sum(c[k] * np.asarray(z) ** (2 * k + 1) for k in range(n_terms))
    return two_c_over_z + c_of_z**2
