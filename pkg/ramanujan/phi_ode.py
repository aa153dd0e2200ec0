from dataclasses import dataclass
from logging import getLogger
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from scipy.integrate import solve_ivp

from ramanujan.model import Model, WeightFunction
from ramanujan.utils.constants import (
    FROBENIUS_EPS,
    HALF_PI,
    IMAG_ENDPOINT_GAP,
    MAX_SERIES_TERMS,
    SERIES_TERM_TOL,
    ConvergenceError,
    IntegrationError,
    PathChoices,
)


logger = getLogger(__name__)
EnergyType = Union[complex, float, Sequence[complex], np.ndarray]


@dataclass(frozen=True)
class PhiEvaluation:
    lam: complex
    path: PathChoices
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    est_error: float


def _frobenius_coefficients(
    weight: WeightFunction, energies: np.ndarray, theta: float, radius: float
) -> np.ndarray:
    """
    Even power-series coefficients of the solution regular at r = 0.

    The radial equation along z = r e^{i theta} reads
        f'' + (e^{i theta} H(r e^{i theta})) f' + E f = 0,
    with H = W'/W = (2a+1)/z + sum_j h_j z^{2j+1}. Substituting f = sum f_{2k} r^{2k} gives
        2k (2k + 2a) f_{2k} = -E f_{2k-2} - sum_{m=1}^{k-1} 2m h~_{k-1-m} f_{2m}
    with h~_j = h_j e^{i (2j+2) theta}.

    Args:
        weight (WeightFunction): The weight of the equation.
        energies (np.ndarray): E for each solution, shape (m,).
        theta (float): The ray direction.
        radius (float): The largest r at which the series will be evaluated.

    Returns:
        coeffs (np.ndarray): f_0, f_2, ... with shape (m, K).
    """
    h = weight.odd_taylor(MAX_SERIES_TERMS)
    if theta != 0:
        h = h * np.exp(1j * (2 * np.arange(MAX_SERIES_TERMS) + 2) * theta)
        if abs(theta - HALF_PI) < 1e-15:
            h = h.real

    dtype = np.result_type(energies, h, float)
    coeffs = [np.ones(energies.size, dtype=dtype)]
    total = np.ones(energies.size, dtype=dtype)
    for k in range(1, MAX_SERIES_TERMS):
        acc = energies * coeffs[k - 1]
        for m in range(1, k):
            acc = acc + 2 * m * h[k - 1 - m] * coeffs[m]

        coeffs.append(-acc / (2 * k * (2 * k + 2 * weight.a)))
        term = np.abs(coeffs[k]) * radius ** (2 * k)
        total = total + coeffs[k] * radius ** (2 * k)
        if k >= 2 and np.all(term < SERIES_TERM_TOL * np.maximum(1.0, np.abs(total))):
            return np.stack(coeffs, axis=-1)

    raise ConvergenceError(
        f"Frobenius series must converge within {MAX_SERIES_TERMS} terms at r={radius}, "
        f"but the last term was {np.max(term)}"
    )


def _eval_series(coeffs: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    powers = 2 * np.arange(coeffs.shape[-1])
    r = np.asarray(r, dtype=float)[..., np.newaxis]
    values = coeffs[:, np.newaxis, :] * r[np.newaxis] ** powers
    with np.errstate(divide="ignore", invalid="ignore"):
        derivs = np.where(powers > 0, coeffs[:, np.newaxis, :] * powers * r[np.newaxis] ** (powers - 1), 0.0)
    return values.sum(axis=-1), derivs.sum(axis=-1)


class RadialSolution:
    """
    The solution regular at the origin of f'' + P(r) f' + E f = 0 along a ray, for many E at once.

    Below the handoff radius the Frobenius series is used; above it the dense output of a
    DOP853 integration of g = e^{s r} f, where s removes the exponential growth of the real axis.
    """

    def __init__(
        self,
        weight: WeightFunction,
        energies: EnergyType,
        theta: float,
        r_max: float,
        tol: float,
        eps: float = FROBENIUS_EPS,
        shift: complex = 0.0,
    ):
        self._weight = weight
        self._energies = np.atleast_1d(np.asarray(energies))
        self._direction = np.exp(1j * theta)
        self._real = abs(theta - HALF_PI) < 1e-15 or theta == 0
        self._real = self._real and np.isrealobj(self._energies) and np.imag(shift) == 0
        self._shift = np.real(shift) if self._real else complex(shift)
        if self._real:
            self._direction = self._direction.real if theta == 0 else 1j

        scale = np.sqrt(max(1.0, float(np.max(np.abs(self._energies)))))
        self._eps = min(eps, weight.taylor_radius / 4, 4 / scale)
        self._coeffs = _frobenius_coefficients(weight, self._energies, theta, self._eps)
        self._r_max = r_max
        self._sol: Optional[Any] = None
        if r_max > self._eps:
            self._sol = self._integrate(r_max, tol)

    @property
    def size(self) -> int:
        return self._energies.size

    def _coefficient(self, r: float) -> complex:
        val = self._direction * self._weight.logderiv(r * self._direction)
        if not np.isfinite(val):
            raise IntegrationError(f"The coefficient of the radial equation must be finite, but got {val} at r={r}")
        return val.real if self._real else val

    def _integrate(self, r_max: float, tol: float) -> Any:
        m, s, energies = self.size, self._shift, self._energies
        value, deriv = _eval_series(self._coeffs, np.array([self._eps]))
        growth = np.exp(s * self._eps)
        y0 = np.concatenate([growth * value[:, 0], growth * (deriv[:, 0] + s * value[:, 0])])
        y0 = y0.real if self._real else y0.astype(complex)

        def fun(r: float, y: np.ndarray) -> np.ndarray:
            p = self._coefficient(r)
            g, dg = y[:m], y[m:]
            return np.concatenate([dg, -(p - 2 * s) * dg - (s * s - s * p + energies) * g])

        sol = solve_ivp(
            fun, (self._eps, r_max), y0, method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=True
        )
        if not sol.success:
            raise IntegrationError(f"Radial integration to r={r_max} failed: {sol.message}")
        return sol

    def __call__(self, r: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Args:
            r (Union[float, np.ndarray]): Radii in [0, r_max].

        Returns:
            values, derivs (Tuple[np.ndarray, np.ndarray]):
                f and df/dr with shape (m, len(r)).
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < 0) or np.any(r > self._r_max * (1 + 1e-12) + 1e-15):
            raise ValueError(f"r must lie in [0, {self._r_max}], but got {r}")

        dtype = float if self._real else complex
        values, derivs = np.zeros((self.size, r.size), dtype=dtype), np.zeros((self.size, r.size), dtype=dtype)
        inner = r <= self._eps
        if np.any(inner):
            values[:, inner], derivs[:, inner] = _eval_series(self._coeffs, r[inner])
        if np.any(~inner):
            assert self._sol is not None
            y = self._sol.sol(r[~inner])
            decay = np.exp(-self._shift * r[~inner])
            g, dg = y[: self.size], y[self.size :]
            values[:, ~inner] = decay * g
            derivs[:, ~inner] = decay * (dg - self._shift * g)

        return values, derivs


def _validate_tol(tol: float) -> None:
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-13, 1e-6], but got {tol}")


def frobenius_start(model: Model, lam: complex, eps: float = FROBENIUS_EPS) -> Tuple[complex, complex]:
    """phi_lambda(eps) and phi_lambda'(eps) from the series at the origin."""
    if not 0 < eps <= 0.05:
        raise ValueError(f"eps must lie in (0, 0.05], but got {eps}")

    energy = np.array([lam**2 + model.rho**2], dtype=complex)
    coeffs = _frobenius_coefficients(model.weight, energy, 0.0, eps)
    value, deriv = _eval_series(coeffs, np.array([eps]))
    return complex(value[0, 0]), complex(deriv[0, 0])


def real_axis_solution(model: Model, lambdas: EnergyType, t_max: float, tol: float) -> RadialSolution:
    lambdas = np.atleast_1d(np.asarray(lambdas))
    return RadialSolution(model.weight, lambdas**2 + model.rho**2, 0.0, t_max, tol, shift=model.rho)


def imag_segment_solution(model: Model, mus: EnergyType, t_max: float, tol: float) -> RadialSolution:
    """w_mu on [0, t_max], the solution of u'' + (A_tilde'/A_tilde) u' + mu u = 0 with u(0) = 1."""
    if t_max > HALF_PI - IMAG_ENDPOINT_GAP:
        raise IntegrationError(f"t must be at most pi/2 - {IMAG_ENDPOINT_GAP}, but got {t_max}")
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    return RadialSolution(model.weight, mus, HALF_PI, t_max, tol)


def _error_estimate(build: Any, nodes: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray, float]:
    values, derivs = build(tol)(nodes)
    coarse, _ = build(min(10 * tol, 1e-5))(nodes)
    return values, derivs, float(np.max(np.abs(values - coarse)))


def _imag_energies(model: Model, lam: complex) -> np.ndarray:
    energy = -(complex(lam) ** 2 + model.rho**2)
    if abs(energy.imag) < 1e-14 * (1 + abs(energy)):
        return np.array([energy.real])
    return np.array([energy])


def eval_phi(
    model: Model,
    lam: complex,
    t: Union[float, np.ndarray],
    tol: float = 1e-10,
    path: PathChoices = PathChoices.real_axis,
) -> PhiEvaluation:
    """
    phi_lambda on the real axis, or s -> phi_lambda(is) on the imaginary segment.

    Args:
        model (Model): The model.
        lam (complex): The spectral parameter.
        t (Union[float, np.ndarray]): Positive node(s); at most pi/2 - 1e-4 on the imaginary segment.
        tol (float): Local error control of the integrator.
        path (PathChoices): real_axis or imaginary_segment.

    Returns:
        phi (PhiEvaluation): Values, derivatives in t and the difference to a run at 10 * tol.
    """
    _validate_tol(tol)
    nodes = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(nodes <= 0) or not np.all(np.isfinite(nodes)):
        raise ValueError(f"t must be positive and finite, but got {t}")
    if path not in (PathChoices.real_axis, PathChoices.imaginary_segment):
        raise ValueError(f"path must be real_axis or imaginary_segment, but got {path}")

    t_max = float(np.max(nodes))
    if path == PathChoices.real_axis:
        def build(tol_: float) -> RadialSolution:
            return real_axis_solution(model, [lam], t_max, tol_)
    else:
        if t_max > HALF_PI - IMAG_ENDPOINT_GAP:
            raise IntegrationError(f"t must be at most pi/2 - {IMAG_ENDPOINT_GAP}, but got {t_max}")
        energies = _imag_energies(model, lam)

        def build(tol_: float) -> RadialSolution:
            return RadialSolution(model.weight, energies, HALF_PI, t_max, tol_)

    values, derivs, est_error = _error_estimate(build, nodes, tol)
    return PhiEvaluation(
        lam=complex(lam),
        path=path,
        nodes=nodes,
        values=values[0].astype(complex),
        derivs=derivs[0].astype(complex),
        est_error=est_error,
    )


def eval_phi_grid(
    model: Model, lambdas: EnergyType, t_nodes: np.ndarray, tol: float = 1e-10
) -> Tuple[np.ndarray, np.ndarray]:
    """phi_lambda(t) and phi_lambda'(t) with shape (len(lambdas), len(t_nodes)) from one integration."""
    _validate_tol(tol)
    t_nodes = np.atleast_1d(np.asarray(t_nodes, dtype=float))
    if np.any(t_nodes < 0):
        raise ValueError(f"t_nodes must be nonnegative, but got {t_nodes}")
    return real_axis_solution(model, lambdas, float(np.max(t_nodes)), tol)(t_nodes)


def eval_phi_imag(model: Model, mu: float, t: Union[float, np.ndarray], tol: float = 1e-10) -> complex:
    """w_mu(t) = phi_{i sqrt(mu + rho^2)}(it) for t in (0, pi/2 - 1e-4]."""
    _validate_tol(tol)
    nodes = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(nodes <= 0):
        raise ValueError(f"t must lie in (0, pi/2), but got {t}")

    values, _ = imag_segment_solution(model, [mu], float(np.max(nodes)), tol)(nodes)
    if np.ndim(t) > 0:
        return values[0].astype(complex)
    return complex(values[0, 0])


def eval_phi_ray(model: Model, lambdas: EnergyType, xi: complex, tol: float = 1e-10) -> np.ndarray:
    """
    phi_lambda(xi) for complex xi in the strip, integrated along the segment from 0 to xi.

    phi_lambda is even, so xi with a negative real part is reflected first.
    """
    _validate_tol(tol)
    xi = complex(xi)
    if abs(xi.imag) >= HALF_PI:
        raise ValueError(f"xi must lie in the strip |Im xi| < pi/2, but got {xi}")
    if xi.real < 0 or (xi.real == 0 and xi.imag < 0):
        xi = -xi

    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    if abs(xi) == 0:
        return np.ones(lambdas.size, dtype=complex)

    theta = float(np.angle(xi))
    energies = np.exp(2j * theta) * (lambdas**2 + model.rho**2)
    if abs(theta - HALF_PI) < 1e-15:
        if abs(xi) > HALF_PI - IMAG_ENDPOINT_GAP:
            raise IntegrationError(f"xi on the imaginary axis must stay below pi/2 - 1e-4, but got {xi}")
        energies = energies.real if np.all(np.abs(energies.imag) < 1e-14 * (1 + np.abs(energies))) else energies
        solution = RadialSolution(model.weight, energies, HALF_PI, abs(xi), tol)
    else:
        solution = RadialSolution(model.weight, energies, theta, abs(xi), tol, shift=model.rho * np.exp(1j * theta))

    values, _ = solution(np.array([abs(xi)]))
    return values[:, 0].astype(complex)


def check_phi_envelope(
    model: Model, lambda_grid: Sequence[complex], xi_grid: Sequence[complex], tol: float = 1e-10
) -> Dict[str, Any]:
    """
    Empirical polynomial envelope of |phi_lambda(xi)| e^{-|Im(lambda xi)|}.

    For each degree d in {0, 1, 2, 3}, the ratio |phi_lambda(xi)| e^{-|Im(lambda xi)|} / (1 + |xi|)^d is
    called bounded when its maximum over the outer half of the |xi| range does not exceed
    its maximum over the inner half by more than 5%. The report also covers the real-axis bounds
    |phi_lambda(t)| <= 1 for |Im lambda| <= rho and |phi_lambda(t)| <= C (1 + t) e^{(|Im lambda| - rho) t}.
    """
    lambdas = np.asarray(lambda_grid, dtype=complex)
    xis = np.asarray(xi_grid, dtype=complex)
    abs_phi = np.array([np.abs(eval_phi_ray(model, lambdas, xi, tol)) for xi in xis])  # (n_xi, n_lambda)
    damping = np.exp(-np.abs((xis[:, np.newaxis] * lambdas[np.newaxis]).imag))

    order = np.argsort(np.abs(xis))
    half = max(1, xis.size // 2)
    ratios: Dict[int, float] = {}
    degree: Optional[int] = None
    for d in range(4):
        ratio = (abs_phi * damping / (1 + np.abs(xis[:, np.newaxis])) ** d).max(axis=1)
        ratios[d] = float(ratio.max())
        inner, outer = ratio[order[:half]].max(), ratio[order[half:]].max() if xis.size > 1 else 0.0
        if degree is None and outer <= 1.05 * inner + tol:
            degree = d

    real_mask = np.abs(xis.imag) == 0
    in_band = np.abs(lambdas.imag) <= model.rho + 1e-14
    unit_bound_ok = True
    decay_constant = 0.0
    if np.any(real_mask):
        t = np.abs(xis[real_mask].real)[:, np.newaxis]
        phi_real = abs_phi[real_mask]
        if np.any(in_band):
            unit_bound_ok = bool(np.all(phi_real[:, in_band] <= 1 + 1e3 * tol))
        envelope = (1 + t) * np.exp((np.abs(lambdas.imag)[np.newaxis] - model.rho) * t)
        decay_constant = float(np.max(phi_real / envelope))

    report = dict(ratios=ratios, degree=degree, unit_bound_ok=unit_bound_ok, real_axis_constant=decay_constant)
    logger.info(f"phi envelope report: {report}")
    return report


def ode_residual(model: Model, lam: complex, t: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """|phi'' + (A'/A) phi' + (lambda^2 + rho^2) phi| with phi'' from a centered difference of phi'."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    h = 1e-4 * np.maximum(1.0, t)
    nodes = np.sort(np.concatenate([t - h, t, t + h]))
    values, derivs = real_axis_solution(model, [lam], float(np.max(nodes)), tol)(nodes)
    index = {float(x): i for i, x in enumerate(nodes)}
    residuals: List[float] = []
    for x, step in zip(t, h):
        i, lo, hi = index[float(x)], index[float(x - step)], index[float(x + step)]
        second = (derivs[0, hi] - derivs[0, lo]) / (2 * step)
        p = model.weight.logderiv(x).real
        residuals.append(abs(second + p * derivs[0, i] + (lam**2 + model.rho**2) * values[0, i]))
    return np.asarray(residuals)
