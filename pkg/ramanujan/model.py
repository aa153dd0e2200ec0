from dataclasses import dataclass, field, replace
from functools import lru_cache
from logging import getLogger
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from scipy.integrate import quad

from ramanujan.utils.constants import (
    DELTA_DECAY,
    HALF_PI,
    NEAR_ZERO_T,
    QUARTER_PI,
    CoefficientChoices,
    ConvergenceError,
    LiouvilleChoices,
)
from ramanujan.utils.series import (
    coth_odd_coefficients,
    coth_squared_regular,
    cosh_series,
    series_divide,
    sinh_series,
    tanh_odd_coefficients,
)


logger = getLogger(__name__)
ArrayLike = Union[complex, float, np.ndarray]


@dataclass(frozen=True)
class WeightFunction:
    """
    W(z) = sinh(z)^{2a+1} cosh(z)^{2b+1} prod_i (cosh 2z + s_i) up to a constant factor.

    The weight of the noncompact problem is WeightFunction(alpha, beta, roots).
    Seen from the endpoint pi/2 of the compact segment, the same operator has the
    weight WeightFunction(beta, alpha, -roots) along the imaginary direction.
    """

    a: float
    b: float
    shifts: Tuple[float, ...]

    def logderiv(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=complex)
        val = (2 * self.a + 1) / np.tanh(z) + (2 * self.b + 1) * np.tanh(z)
        for s in self.shifts:
            val = val + 2 * np.sinh(2 * z) / (np.cosh(2 * z) + s)
        return val

    def logderiv_prime(self, z: ArrayLike) -> ArrayLike:
        z = np.asarray(z, dtype=complex)
        val = -(2 * self.a + 1) / np.sinh(z) ** 2 + (2 * self.b + 1) / np.cosh(z) ** 2
        for s in self.shifts:
            val = val + (4 + 4 * s * np.cosh(2 * z)) / (np.cosh(2 * z) + s) ** 2
        return val

    @lru_cache(maxsize=None)
    def odd_taylor(self, n_terms: int) -> np.ndarray:
        """Coefficients h_j of z^{2j+1} in logderiv(z) - (2a+1)/z for j = 0..n_terms-1."""
        coeffs = (2 * self.a + 1) * coth_odd_coefficients(n_terms) + (2 * self.b + 1) * tanh_odd_coefficients(n_terms)
        order = 2 * n_terms
        for s in self.shifts:
            den = cosh_series(2.0, order)
            den[0] += s
            root_term = series_divide(2 * sinh_series(2.0, order), den, order)
            coeffs = coeffs + root_term[1::2][:n_terms]

        return coeffs

    @property
    def taylor_radius(self) -> float:
        radius = HALF_PI
        for s in self.shifts:
            if s <= -1:
                radius = min(radius, 0.5 * np.arccosh(-s))
            elif s >= 1:
                radius = min(radius, 0.5 * np.sqrt(np.arccosh(s) ** 2 + np.pi**2))
        return float(radius)


@dataclass(frozen=True)
class Model:
    alpha: float
    beta: float
    perturbation_roots: Tuple[float, ...]
    series_order: int
    rho: float
    delta_decay: float
    theta: float
    exp_coeffs: Tuple[float, ...]
    condition_report: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    @property
    def weight(self) -> WeightFunction:
        return WeightFunction(self.alpha, self.beta, self.perturbation_roots)

    @property
    def dual_weight(self) -> WeightFunction:
        return WeightFunction(self.beta, self.alpha, tuple(-c for c in self.perturbation_roots))

    @property
    def rho_0(self) -> float:
        """rho of the unperturbed weight, alpha + beta + 1."""
        return self.alpha + self.beta + 1

    @property
    def kappa(self) -> float:
        """lim A(t) e^{-2 rho t}"""
        val = 2.0 ** (-2 * (self.alpha + self.beta + 1))
        for c in self.perturbation_roots:
            val /= 2 * (1 + c)
        return val

    @property
    def liouville_shift(self) -> float:
        """Constant C with -L = -d^2/dt^2 + q + C after v = sqrt(A_tilde) u."""
        return 0.5 - 2 * (self.alpha + 1) * (self.beta + 1)

    @property
    def convergence_abscissa(self) -> float:
        """The expansion of A'/A in e^{-t} converges for t above this value."""
        if len(self.perturbation_roots) == 0:
            return 0.0
        return float(max(0.5 * np.arccosh(c) for c in self.perturbation_roots))

    def expansion_coeffs(self, n_terms: int) -> np.ndarray:
        """a_0..a_{n_terms} of A'/A = sum_k a_k e^{-kt}, with a_0 = 2 rho."""
        return _expansion_coeffs(self.alpha, self.beta, self.perturbation_roots, n_terms)

    def to_dict(self) -> Dict[str, Any]:
        return dict(
            alpha=self.alpha,
            beta=self.beta,
            roots=list(self.perturbation_roots),
            series_order=self.series_order,
        )


def _perturbation_exp_coeffs(roots: Tuple[float, ...], n_even: int) -> np.ndarray:
    """b_0, b_2, ..., b_{2 n_even} with B'/B = sum_k 2 b_{2k} e^{-2kt}."""
    coeffs = np.zeros(n_even + 1)
    for c in roots:
        # 2 sinh 2t / (cosh 2t + c) = 2 (1 - x^2) / (1 + 2cx + x^2) with x = e^{-2t}
        num = np.array([2.0, 0.0, -2.0])
        den = np.array([1.0, 2 * c, 1.0])
        coeffs += 0.5 * series_divide(num, den, n_even)

    return coeffs


@lru_cache(maxsize=64)
def _expansion_coeffs(alpha: float, beta: float, roots: Tuple[float, ...], n_terms: int) -> np.ndarray:
    coeffs = np.zeros(n_terms + 1)
    b_even = _perturbation_exp_coeffs(roots, n_terms // 2)
    k = np.arange(n_terms // 2 + 1)
    # coth t = 1 + 2 sum e^{-2kt}, tanh t = 1 + 2 sum (-1)^k e^{-2kt}
    coeffs[::2] = 2 * (2 * alpha + 1) + 2 * (2 * beta + 1) * (-1.0) ** k + 2 * b_even
    coeffs[0] = 2 * (alpha + beta + 1 + len(roots))
    coeffs.flags.writeable = False
    return coeffs


def _validate_parameters(alpha: float, beta: float, roots: Sequence[float], series_order: int) -> None:
    for name, val in (("alpha", alpha), ("beta", beta)):
        if not np.isfinite(val) or val < -0.5:
            raise ValueError(f"{name} must be a finite value >= -1/2, but got {val}")

    for c in roots:
        if not np.isfinite(c) or c <= 1:
            raise ValueError(f"every perturbation root must be > 1, but got {c}")

    if series_order < 8:
        raise ValueError(f"series_order must be >= 8, but got {series_order}")


def build_model(
    alpha: float, beta: float, perturbation_roots: Sequence[float] = (), series_order: int = 16
) -> Model:
    """
    Build the model of A(z) = sinh(z)^{2 alpha+1} cosh(z)^{2 beta+1} B(z).

    Args:
        alpha (float): The order at the origin, >= -1/2.
        beta (float): The order at the other end of the compact dual, >= -1/2.
        perturbation_roots (Sequence[float]):
            c_i > 1 of B(z) = prod(cosh 2z + c_i) / prod(1 + c_i). Empty means B = 1.
        series_order (int): b_j is computed up to j = 2 * series_order.

    Returns:
        model (Model): The immutable model with its condition report.
    """
    roots = tuple(float(c) for c in perturbation_roots)
    _validate_parameters(alpha, beta, roots, series_order)

    b_even = _perturbation_exp_coeffs(roots, series_order)
    exp_coeffs = np.zeros(2 * series_order + 1)
    exp_coeffs[::2] = b_even
    rho = alpha + beta + 1 + exp_coeffs[0]

    draft = Model(
        alpha=float(alpha),
        beta=float(beta),
        perturbation_roots=roots,
        series_order=series_order,
        rho=float(rho),
        delta_decay=DELTA_DECAY,
        theta=0.0,
        exp_coeffs=tuple(exp_coeffs.tolist()),
    )
    model = replace(draft, theta=theta_constant(draft))
    model.condition_report.update(_condition_report(model))

    failed = [key for key, val in model.condition_report.items() if key.endswith("_ok") and not val]
    if len(failed) > 0:
        logger.warning(f"Model conditions failed numerically: {failed}, report={model.condition_report}")

    logger.info(f"Built model alpha={alpha}, beta={beta}, roots={list(roots)}: rho={model.rho}, theta={model.theta}")
    return model


def _power(base: np.ndarray, exponent: float) -> np.ndarray:
    if exponent == 0:
        return np.ones_like(base)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(base == 0, 0.0, np.power(base, exponent))


def _B(model: Model, z: np.ndarray) -> np.ndarray:
    val = np.ones_like(z)
    for c in model.perturbation_roots:
        val = val * (np.cosh(2 * z) + c) / (1 + c)
    return val


def _B_tilde(model: Model, t: np.ndarray) -> np.ndarray:
    val = np.ones_like(t)
    for c in model.perturbation_roots:
        val = val * (np.cos(2 * t) + c) / (1 + c)
    return val


def _beta_tilde(model: Model, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """B_tilde'/B_tilde and its derivative."""
    val, deriv = np.zeros_like(t), np.zeros_like(t)
    for c in model.perturbation_roots:
        val = val - 2 * np.sin(2 * t) / (np.cos(2 * t) + c)
        deriv = deriv - (4 + 4 * c * np.cos(2 * t)) / (np.cos(2 * t) + c) ** 2
    return val, deriv


def _beta_B(model: Model, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """B'/B and its derivative."""
    val, deriv = np.zeros_like(z), np.zeros_like(z)
    for c in model.perturbation_roots:
        val = val + 2 * np.sinh(2 * z) / (np.cosh(2 * z) + c)
        deriv = deriv + (4 + 4 * c * np.cosh(2 * z)) / (np.cosh(2 * z) + c) ** 2
    return val, deriv


def eval_coefficient(model: Model, z: ArrayLike, which: Union[str, CoefficientChoices]) -> ArrayLike:
    """
    Evaluate A, A_tilde, B or the analytic logarithmic derivatives.

    Args:
        model (Model): The model.
        z (ArrayLike):
            A point of the open strip |Im z| < pi/2 for A, B and logderiv_A,
            or t in [0, pi/2] for A_tilde and logderiv_A_tilde.
        which (Union[str, CoefficientChoices]): The coefficient to evaluate.

    Returns:
        value (ArrayLike): The complex value(s).
    """
    which = CoefficientChoices(which)
    z_arr = np.asarray(z, dtype=complex)

    if which in (CoefficientChoices.A_tilde, CoefficientChoices.logderiv_A_tilde):
        if np.any(np.abs(z_arr.imag) > 0) or np.any(z_arr.real < 0) or np.any(z_arr.real > HALF_PI):
            raise ValueError(f"t must be real in [0, pi/2] for {which.value}, but got {z}")
        t = z_arr.real
        if which == CoefficientChoices.A_tilde:
            val = _power(np.sin(t), 2 * model.alpha + 1) * _power(np.cos(t), 2 * model.beta + 1) * _B_tilde(model, t)
        else:
            if np.any(t == 0) or np.any(t == HALF_PI):
                raise ValueError(f"logderiv_A_tilde has poles at 0 and pi/2, but got t={z}")
            val = (2 * model.alpha + 1) / np.tan(t) - (2 * model.beta + 1) * np.tan(t) + _beta_tilde(model, t)[0]
        return (val + 0j) if np.ndim(z) > 0 else complex(val)

    if np.any(np.abs(z_arr.imag) >= HALF_PI):
        raise ValueError(f"z must lie in the open strip |Im z| < pi/2, but got {z}")

    if which == CoefficientChoices.B:
        val = _B(model, z_arr)
    elif which == CoefficientChoices.A:
        val = (
            _power(np.sinh(z_arr), 2 * model.alpha + 1)
            * _power(np.cosh(z_arr), 2 * model.beta + 1)
            * _B(model, z_arr)
        )
    else:
        if np.any(z_arr == 0):
            raise ValueError(f"logderiv_A has a pole at z = 0, but got z={z}")
        val = model.weight.logderiv(z_arr)

    return val if np.ndim(z) > 0 else complex(val)


def _g_function(model: Model, z: np.ndarray) -> np.ndarray:
    """(1/4)(A'/A)^2 + (1/2)(A'/A)' - rho^2 - (alpha^2 - 1/4)/z^2 for complex z."""
    a2, b2 = model.alpha**2 - 0.25, model.beta**2 - 0.25
    small = np.abs(z) < NEAR_ZERO_T
    z_large = np.where(small, 1.0, z)
    coth_part = np.where(
        small, coth_squared_regular(np.where(small, z, 0.0)), 1 / np.tanh(z_large) ** 2 - 1 / z_large**2
    )

    beta_b, beta_b_prime = _beta_B(model, z)
    cross = (2 * model.alpha + 1) / np.tanh(z) + (2 * model.beta + 1) * np.tanh(z)
    cross_term = 0.5 * beta_b * cross

    return (
        a2 * coth_part
        + b2 * np.tanh(z) ** 2
        - model.liouville_shift
        - model.rho**2
        + 0.25 * beta_b**2
        + 0.5 * beta_b_prime
        + cross_term
    )


def _regular_endpoints(model: Model) -> bool:
    """alpha^2 = beta^2 = 1/4 removes the inverse-square terms of q at both ends of (0, pi/2)."""
    return abs(model.alpha**2 - 0.25) < 1e-14 and abs(model.beta**2 - 0.25) < 1e-14


def eval_liouville_data(model: Model, t: ArrayLike, which: Union[str, LiouvilleChoices]) -> ArrayLike:
    """
    Evaluate the Liouville potential q, the perturbation term chi, or G on the real axis.

    q and chi live on the compact segment (0, pi/2), closed when alpha^2 = beta^2 = 1/4; G on t > 0.
    """
    which = LiouvilleChoices(which)
    t_arr = np.asarray(t, dtype=float)

    if which == LiouvilleChoices.G:
        if np.any(t_arr <= 0):
            raise ValueError(f"t must be positive for G, but got {t}")
        val = _g_function(model, t_arr + 0j).real
        return val if np.ndim(t) > 0 else float(val)

    regular = _regular_endpoints(model)
    if regular and (np.any(t_arr < 0) or np.any(t_arr > HALF_PI)):
        raise ValueError(f"t must lie in [0, pi/2] for {which.value}, but got {t}")
    if not regular and (np.any(t_arr <= 0) or np.any(t_arr >= HALF_PI)):
        raise ValueError(f"t must lie in the open interval (0, pi/2) for {which.value}, but got {t}")

    at_zero, at_half = regular & (t_arr == 0), regular & (np.abs(t_arr - HALF_PI) < 1e-12)
    t_in = np.where(at_zero | at_half, QUARTER_PI, t_arr)
    beta_t, beta_t_prime = _beta_tilde(model, t_in)
    chi = (
        (model.beta + 0.5) * beta_t * np.tan(t_in)
        - (model.alpha + 0.5) * beta_t / np.tan(t_in)
        - 0.25 * beta_t**2
        - 0.5 * beta_t_prime
    )
    if np.any(at_zero | at_half):
        # beta_tilde vanishes at both ends: beta_tilde / tan -> beta_tilde'(0), beta_tilde tan -> -beta_tilde'(pi/2)
        _, end_slopes = _beta_tilde(model, np.array([0.0, HALF_PI]))
        chi = np.where(at_zero, -(model.alpha + 0.5) * end_slopes[0] - 0.5 * end_slopes[0], chi)
        chi = np.where(at_half, -(model.beta + 0.5) * end_slopes[1] - 0.5 * end_slopes[1], chi)

    if which == LiouvilleChoices.chi:
        val = chi
    elif regular:
        val = -chi
    else:
        val = (model.alpha**2 - 0.25) / np.tan(t_in) ** 2 + (model.beta**2 - 0.25) * np.tan(t_in) ** 2 - chi

    return val if np.ndim(t) > 0 else float(val)


def theta_constant(model: Model) -> float:
    """alpha^2 + beta^2 - 1/2 + (2/pi) int_0^{pi/2} chi(t) dt"""
    base = model.alpha**2 + model.beta**2 - 0.5
    if len(model.perturbation_roots) == 0:
        return base

    integral, abserr = quad(lambda t: eval_liouville_data(model, t, "chi"), 0, HALF_PI, epsabs=1e-10, limit=200)
    if abserr > 1e-8:
        raise ConvergenceError(f"quadrature of chi must reach 1e-8, but got the error estimate {abserr}")

    return base + 2 * integral / np.pi


def _decay_residual(model: Model, t: np.ndarray) -> np.ndarray:
    """A'/A - 2 rho in closed form, free of cancellation for large t."""
    x = np.exp(-2 * t)
    res = 2 * (2 * model.alpha + 1) * x / (1 - x) - 2 * (2 * model.beta + 1) * x / (1 + x)
    for c in model.perturbation_roots:
        res = res - 2 * (x + c) / (np.cosh(2 * t) + c)
    return res


def _abs_g_integral(model: Model, theta: float, r_max: float, n_panels: int) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0, r_max, n_panels + 1)
    total = 0.0
    direction = np.exp(1j * theta)
    for lo, hi in zip(edges[:-1], edges[1:]):
        r = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.sum(weights * np.abs(_g_function(model, r * direction)))
    return float(total)


def _condition_report(model: Model) -> Dict[str, Any]:
    report: Dict[str, Any] = {}
    t = np.linspace(0.05, 20, 400)
    report["A_positive_ok"] = bool(np.all(eval_coefficient(model, t, "A").real > 0))

    rng = np.random.RandomState(0)
    z = rng.uniform(-5, 5, 200) + 1j * rng.uniform(-HALF_PI + 0.05, HALF_PI - 0.05, 200)
    report["B_even_ok"] = bool(np.allclose(_B(model, z), _B(model, -z), rtol=1e-13, atol=0))
    w = rng.uniform(-0.3, 0.3, 50) + 1j * rng.uniform(-0.3, 0.3, 50)
    report["B_even_about_half_pi_ok"] = bool(
        np.allclose(_B(model, 1j * HALF_PI + w), _B(model, 1j * HALF_PI - w), rtol=1e-12, atol=0)
    )

    # cosh 2z + c vanishes on the strip boundary at Re z = +-arccosh(c)/2, so the grid stays inside
    x, y = np.meshgrid(np.linspace(-5, 5, 101), np.linspace(-HALF_PI + 0.02, HALF_PI - 0.02, 41))
    report["B_min_abs_strip"] = float(np.min(np.abs(_B(model, x + 1j * y))))
    report["B_nonvanishing_ok"] = report["B_min_abs_strip"] > 0

    t_fit = np.linspace(5, 15, 41)
    residual = np.abs(_decay_residual(model, t_fit))
    if np.all(residual < 1e-250):
        report["decay_slope"] = -np.inf
    else:
        mask = residual >= 1e-250
        report["decay_slope"] = float(np.polyfit(t_fit[mask], np.log(residual[mask]), 1)[0])
    report["decay_ok"] = bool(report["decay_slope"] <= -model.delta_decay + 0.1)
    report["logderiv_residual_at_20"] = float(np.abs(_decay_residual(model, np.array([20.0])))[0])

    integrals: List[float] = []
    g_stable = True
    for theta, r_max in ((0.0, 20.0), (np.pi / 6, 3.0), (-np.pi / 6, 3.0)):
        coarse = _abs_g_integral(model, theta, r_max, n_panels=64)
        fine = _abs_g_integral(model, theta, r_max, n_panels=128)
        g_stable &= bool(np.isfinite(fine) and abs(fine - coarse) <= 1e-6 * (1 + fine))
        integrals.append(fine)

    report["G_abs_integrals"] = integrals
    report["G_integrable_ok"] = g_stable
    return report
