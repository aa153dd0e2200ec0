from dataclasses import dataclass
from logging import getLogger
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ramanujan.model import Model, eval_coefficient
from ramanujan.phi_ode import real_axis_solution
from ramanujan.utils.constants import (
    EPS,
    LIMIT_T,
    MAX_GAMMA_TERMS,
    POLE_GUARD,
    WRONSKIAN_T_STAR,
    CMethodChoices,
    ConvergenceError,
    CrossCheckError,
)


logger = getLogger(__name__)
LambdaType = Union[complex, Sequence[complex], np.ndarray]


@dataclass(frozen=True)
class GammaSeries:
    lam: complex
    coeffs: np.ndarray
    N: int
    a_coeffs: np.ndarray

    @property
    def growth(self) -> Tuple[float, float]:
        """(K, t0) with |Gamma_n| <= K e^{n t0} for n <= N."""
        K, t0 = _fit_growth(self.coeffs[np.newaxis])
        return float(K[0]), float(t0[0])


def _check_poles(lams: np.ndarray, n_terms: int) -> None:
    m = np.arange(1, n_terms + 1)
    dist = np.abs(lams[:, np.newaxis] + 0.5j * m[np.newaxis])
    if np.any(dist < POLE_GUARD):
        bad = lams[np.any(dist < POLE_GUARD, axis=1)]
        raise ValueError(f"lambda must keep a distance {POLE_GUARD} from -im/2, but got {bad.tolist()}")


def _gamma_table(model: Model, lams: np.ndarray, n_terms: int) -> np.ndarray:
    """
    Gamma_0..Gamma_N for every lambda, shape (m, N+1), from
        n (n - 2 i lambda) Gamma_n = -sum_{k=1}^n a_k (i lambda - rho - (n - k)) Gamma_{n-k}.
    """
    if not 0 <= n_terms <= MAX_GAMMA_TERMS:
        raise ValueError(f"N must lie in [0, {MAX_GAMMA_TERMS}], but got {n_terms}")
    _check_poles(lams, n_terms)

    a = model.expansion_coeffs(n_terms)
    table = np.zeros((lams.size, n_terms + 1), dtype=complex)
    weighted = np.zeros_like(table)
    table[:, 0] = 1.0
    weighted[:, 0] = 1j * lams - model.rho
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_terms + 1):
            acc = weighted[:, :n] @ a[n:0:-1]
            table[:, n] = -acc / (n * (n - 2j * lams))
            weighted[:, n] = (1j * lams - model.rho - n) * table[:, n]

    if not np.all(np.isfinite(table)):
        raise ConvergenceError(f"Gamma coefficients overflowed for lambda in {lams.tolist()}")
    return table


def gamma_coeffs(model: Model, lam: complex, N: int = MAX_GAMMA_TERMS) -> GammaSeries:
    """Gamma_n(lambda) of Phi_lambda(t) = e^{(i lambda - rho) t} sum_n Gamma_n e^{-nt}."""
    table = _gamma_table(model, np.array([lam], dtype=complex), N)
    return GammaSeries(lam=complex(lam), coeffs=table[0], N=N, a_coeffs=model.expansion_coeffs(N))


def _fit_growth(table: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = np.arange(table.shape[1])
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(table))
    upper = n >= max(1, n.size // 4)
    rates = np.where(np.isfinite(logs[:, upper]), logs[:, upper] / n[upper], -np.inf)
    t0 = np.max(rates, axis=1) if np.any(upper) else np.full(table.shape[0], -np.inf)
    t0 = np.where(np.isfinite(t0), t0, 0.0)
    K = np.max(np.abs(table) * np.exp(-n[np.newaxis] * t0[:, np.newaxis]), axis=1)
    return K, t0


def _validate_t(model: Model, t: np.ndarray) -> None:
    lower = max(1.0, model.convergence_abscissa + 0.25)
    if np.any(t < lower):
        raise ValueError(f"t must be >= {lower} for the Phi series, but got {t}")


def eval_Phi_with_derivative(
    model: Model, lams: LambdaType, t: Union[float, np.ndarray], tol: float = 1e-14
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Phi_lambda(t), Phi_lambda'(t) and the tail bound of the truncated series.

    Returns:
        values, derivs, tails (Tuple[np.ndarray, np.ndarray, np.ndarray]):
            values and derivs with shape (len(lams), len(t)); tails with shape (len(lams),),
            the tail bound at the smallest t.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _validate_t(model, t)

    table = _gamma_table(model, lams, MAX_GAMMA_TERMS)
    K, t0 = _fit_growth(table)
    q = np.exp(t0 - np.min(t))
    if np.any(q >= 1):
        raise ConvergenceError(f"Gamma growth rate {np.max(t0)} leaves no convergence at t={np.min(t)}")

    with np.errstate(divide="ignore"):
        needed = np.log(tol * (1 - q) / np.maximum(K, EPS)) / np.log(q)
    n_terms = int(np.clip(np.ceil(np.max(needed)), 1, MAX_GAMMA_TERMS))
    tails = K * q ** (n_terms + 1) / (1 - q)
    if np.any(tails > tol):
        raise ConvergenceError(f"Phi series tail bound must be below {tol}, but got {np.max(tails)}")

    n = np.arange(n_terms + 1)
    damp = np.exp(-np.outer(t, n))  # (len(t), N+1)
    exponent = 1j * lams - model.rho
    series = table[:, : n_terms + 1] @ damp.T
    series_prime = (table[:, : n_terms + 1] * (exponent[:, np.newaxis] - n[np.newaxis])) @ damp.T
    prefactor = np.exp(np.outer(exponent, t))
    return prefactor * series, prefactor * series_prime, tails


def eval_Phi(model: Model, lam: complex, t: float, N: Optional[int] = None, tol: float = 1e-14) -> complex:
    """Phi_lambda(t) for t >= 1. With N given, the series is cut after N terms instead of adaptively."""
    if N is None:
        values, _, tails = eval_Phi_with_derivative(model, lam, t, tol)
        logger.debug(f"Phi tail bound at lambda={lam}, t={t}: {tails[0]}")
        return complex(values[0, 0])

    _validate_t(model, np.array([t]))
    coeffs = gamma_coeffs(model, lam, N).coeffs
    return complex(np.exp((1j * lam - model.rho) * t) * np.sum(coeffs * np.exp(-np.arange(N + 1) * t)))


def _validate_lambdas(lams: np.ndarray) -> None:
    if np.any(lams == 0):
        raise ValueError("lambda must be nonzero for the c-function, but got 0")
    m = np.arange(1, 2 * MAX_GAMMA_TERMS + 1)
    for sign in (1, -1):
        if np.any(np.abs(lams[:, np.newaxis] + sign * 0.5j * m) < POLE_GUARD):
            raise ValueError(f"lambda must keep a distance {POLE_GUARD} from +-im/2, but got {lams.tolist()}")


def _c_wronskian(model: Model, lams: np.ndarray, t_star: float, tol: float) -> np.ndarray:
    values, derivs = real_axis_solution(model, lams, t_star, tol)(np.array([t_star]))
    Phi, dPhi, _ = eval_Phi_with_derivative(model, -lams, t_star)
    A = eval_coefficient(model, t_star, "A").real
    wronskian = values[:, 0] * dPhi[:, 0] - derivs[:, 0] * Phi[:, 0]
    return 1j * A * wronskian / (2 * lams * model.kappa)


def _c_limit(model: Model, lams: np.ndarray, t_limit: float, tol: float) -> np.ndarray:
    if np.any(lams.imag >= 0):
        raise ValueError(f"the limit method needs Im lambda < 0, but got {lams.tolist()}")

    values, _ = real_axis_solution(model, lams, t_limit, tol)(np.array([t_limit]))
    Phi, _, _ = eval_Phi_with_derivative(model, lams, t_limit)
    # phi e^{(rho - i lambda) T} over the series factor of Phi_lambda, i.e. phi / Phi_lambda
    return values[:, 0] / Phi[:, 0]


def eval_c_grid(
    model: Model,
    lams: LambdaType,
    method: Union[str, CMethodChoices] = CMethodChoices.wronskian,
    tol: float = 1e-10,
    t_star: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    c(lambda) for many lambda from one integration, with the difference to a run at 10 * tol.

    Args:
        model (Model): The model.
        lams (LambdaType): Nonzero spectral parameters off +-im/2.
        method (Union[str, CMethodChoices]): wronskian (at t_star, default 5) or limit (at t_star, default 40).
        tol (float): Local error control of the integrator.
        t_star (Optional[float]): The evaluation point of the chosen method.

    Returns:
        values, est_errors (Tuple[np.ndarray, np.ndarray]): c(lambda) and its error estimate.
    """
    method = CMethodChoices(method)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    _validate_lambdas(lams)

    if method == CMethodChoices.wronskian:
        t_star = WRONSKIAN_T_STAR if t_star is None else t_star
        values = _c_wronskian(model, lams, t_star, tol)
        coarse = _c_wronskian(model, lams, t_star, min(10 * tol, 1e-5))
    else:
        t_star = LIMIT_T if t_star is None else t_star
        values = _c_limit(model, lams, t_star, tol)
        coarse = _c_limit(model, lams, t_star, min(10 * tol, 1e-5))

    return values, np.abs(values - coarse)


def eval_c(
    model: Model,
    lam: complex,
    method: Union[str, CMethodChoices] = CMethodChoices.wronskian,
    tol: float = 1e-10,
    t_star: Optional[float] = None,
) -> complex:
    values, _ = eval_c_grid(model, [lam], method, tol, t_star)
    return complex(values[0])


def cross_check_c(model: Model, lam: complex, rtol: float = 1e-5, tol: float = 1e-11) -> Tuple[complex, complex]:
    """c(lambda) from both methods; raises CrossCheckError when they disagree beyond rtol."""
    c_wronskian = eval_c(model, lam, CMethodChoices.wronskian, tol)
    c_limit = eval_c(model, lam, CMethodChoices.limit, tol)
    gap = abs(c_wronskian - c_limit) / max(abs(c_wronskian), EPS)
    if gap > rtol:
        raise CrossCheckError(
            f"c-function methods must agree to {rtol}, but got wronskian={c_wronskian}, limit={c_limit} at lambda={lam}"
        )
    logger.info(f"c({lam}) cross-check passed with relative gap {gap}")
    return c_wronskian, c_limit


def plancherel_density(model: Model, lam: Union[float, np.ndarray], tol: float = 1e-10) -> Union[float, np.ndarray]:
    """|c(lambda)|^{-2} for real nonzero lambda, using c(-lambda) = conj(c(lambda))."""
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lams == 0):
        raise ValueError("lambda must be real and nonzero, but got 0")

    values, _ = eval_c_grid(model, np.abs(lams), CMethodChoices.wronskian, tol)
    density = 1 / np.abs(values) ** 2
    return density if np.ndim(lam) > 0 else float(density[0])


def eval_phi_far(
    model: Model,
    lams: LambdaType,
    t: np.ndarray,
    c_plus: Optional[np.ndarray] = None,
    c_minus: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    phi_lambda(t) = c(lambda) Phi_lambda(t) + c(-lambda) Phi_{-lambda}(t) for t beyond the series threshold.

    For real lambda the second term is the conjugate of the first.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    c_plus = eval_c_grid(model, lams)[0] if c_plus is None else c_plus
    Phi_plus, _, _ = eval_Phi_with_derivative(model, lams, t)
    if np.all(lams.imag == 0):
        return 2 * np.real(c_plus[:, np.newaxis] * Phi_plus)

    c_minus = eval_c_grid(model, -lams)[0] if c_minus is None else c_minus
    Phi_minus, _, _ = eval_Phi_with_derivative(model, -lams, t)
    return c_plus[:, np.newaxis] * Phi_plus + c_minus[:, np.newaxis] * Phi_minus
