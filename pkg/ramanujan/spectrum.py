from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln

from ramanujan.model import Model, eval_coefficient, eval_liouville_data
from ramanujan.phi_ode import RadialSolution, eval_phi_imag, imag_segment_solution
from ramanujan.utils.constants import (
    EPS,
    HALF_PI,
    IMAG_ENDPOINT_GAP,
    QUARTER_PI,
    SHOOT_EPS,
    ZERO_BRANCH_TOL,
    BracketError,
    CrossCheckError,
    OscillationError,
)


logger = getLogger(__name__)
SCAN_STEP = 0.25
N_SCAN_MAX = 10
SAMPLES_PER_BRACKET = 9


@dataclass(frozen=True)
class _EigenShot:
    left: RadialSolution
    right: RadialSolution
    k_right: float


@dataclass(frozen=True)
class EigenData:
    """
    The spectrum of -L on (0, pi/2).

    nus holds the eigenvalues of -L = -(d^2/dt^2 + (A_tilde'/A_tilde) d/dt); liouville_nus holds the
    eigenvalues of -d^2/dt^2 + q, which differ by the constant model.liouville_shift.
    """

    nus: np.ndarray
    liouville_nus: np.ndarray
    norms: np.ndarray
    matching: np.ndarray
    m0: int
    n0: int
    rho: float
    diagnostics: Dict[str, np.ndarray]
    shots: List[_EigenShot] = field(default_factory=list, repr=False, compare=False)

    @property
    def n_max(self) -> int:
        return self.nus.size - 1

    @property
    def shifted_nus(self) -> np.ndarray:
        """nu_n + rho^2"""
        return self.nus + self.rho**2

    @property
    def mus(self) -> np.ndarray:
        """sqrt(|nu_n + rho^2|), i.e. mu_n for n > m0 and beta_n for n <= m0."""
        return np.sqrt(np.abs(self.shifted_nus))


def asymptotic_coefficient(model: Model) -> float:
    """k1 of sqrt(nu_n + rho^2) ~ 2n + rho_0 + k1 / n."""
    return (model.rho**2 + model.liouville_shift - model.theta) / 4


def asymptotic_mu(model: Model, n: Union[int, np.ndarray]) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        correction = np.where(n > 0, asymptotic_coefficient(model) / np.where(n > 0, n, 1.0), 0.0)
    return 2 * n + model.rho_0 + correction


def _shoot_solutions(model: Model, nus: np.ndarray, tol: float) -> Tuple[RadialSolution, RadialSolution]:
    """The regular solutions at t = 0 and at t = pi/2 (in s = pi/2 - t), each carried to pi/4."""
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    left = RadialSolution(model.weight, nus, HALF_PI, QUARTER_PI, tol, eps=SHOOT_EPS)
    right = RadialSolution(model.dual_weight, nus, HALF_PI, QUARTER_PI, tol, eps=SHOOT_EPS)
    return left, right


def _mismatch(model: Model, left: RadialSolution, right: RadialSolution) -> np.ndarray:
    u_left, du_left = left(QUARTER_PI)
    u_right, du_right = right(QUARTER_PI)
    a_tilde = eval_coefficient(model, QUARTER_PI, "A_tilde").real
    # d/dt = -d/ds on the right shot
    return a_tilde * (u_left * (-du_right) - du_left * u_right)[:, 0]


def shoot_mismatch(model: Model, nu: Union[float, np.ndarray], tol: float = 1e-12) -> Union[float, np.ndarray]:
    """
    Wronskian at pi/4 of the two endpoint-regular solutions of -L u = nu u.

    Args:
        model (Model): The model.
        nu (Union[float, np.ndarray]): Eigenvalue candidate(s) of -L.
        tol (float): Local error control of the two shots.

    Returns:
        mismatch (Union[float, np.ndarray]): Zero exactly at the eigenvalues.
    """
    values = _mismatch(model, *_shoot_solutions(model, np.atleast_1d(nu), tol))
    return values if np.ndim(nu) > 0 else float(values[0])


def shoot_mismatch_liouville(
    model: Model, nu: Union[float, np.ndarray], tol: float = 1e-12
) -> Union[float, np.ndarray]:
    """shoot_mismatch for an eigenvalue of -d^2/dt^2 + q."""
    return shoot_mismatch(model, np.asarray(nu) + model.liouville_shift, tol)


def _sign_brackets(nus: np.ndarray, values: np.ndarray) -> List[Tuple[float, float]]:
    brackets: List[Tuple[float, float]] = []
    for i in range(nus.size):
        if values[i] == 0:
            brackets.append((nus[i], nus[i]))
        elif i + 1 < nus.size and values[i] * values[i + 1] < 0:
            brackets.append((nus[i], nus[i + 1]))
    return brackets


def _scan_low(model: Model, n_low: int, tol: float) -> List[Tuple[float, float]]:
    """Dense scan over y = nu + rho^2 in [-5, 0), then over mu = sqrt(y) up to the n_low prediction."""
    mu_top = float(asymptotic_mu(model, n_low)) + 1.5
    y_grid = np.concatenate(
        [np.arange(-5.0, 0.0, SCAN_STEP), (0.13 + np.arange(0.0, mu_top, SCAN_STEP)) ** 2]
    )
    nus = y_grid - model.rho**2
    values = _mismatch(model, *_shoot_solutions(model, nus, tol))
    brackets = _sign_brackets(nus, values)
    if len(brackets) < n_low + 1:
        raise BracketError(f"The low scan must isolate {n_low + 1} eigenvalues, but found {len(brackets)}")
    return brackets[: n_low + 1]


def _bracket_high(model: Model, indices: np.ndarray, tol: float) -> List[Tuple[float, float]]:
    """Brackets mu_pred(n) +- margin; halved on multiple sign changes, rescanned on none."""
    brackets: Dict[int, Tuple[float, float]] = {}
    pending = indices.copy()
    for margin in (0.5, 0.25):
        if pending.size == 0:
            break
        mu_pred = asymptotic_mu(model, pending)
        offsets = np.linspace(-margin, margin, SAMPLES_PER_BRACKET)
        nus = ((mu_pred[:, np.newaxis] + offsets[np.newaxis]) ** 2 - model.rho**2).ravel()
        values = _mismatch(model, *_shoot_solutions(model, nus, tol)).reshape(pending.size, -1)
        retry = []
        for row, n in enumerate(pending):
            found = _sign_brackets(nus.reshape(pending.size, -1)[row], values[row])
            if len(found) == 1:
                brackets[int(n)] = found[0]
            else:
                logger.warning(f"Bracket of nu_{n} with margin {margin} holds {len(found)} sign changes, retrying")
                retry.append(n)
        pending = np.asarray(retry, dtype=int)

    for n in pending:
        mu_pred = float(asymptotic_mu(model, n))
        mus = mu_pred + np.linspace(-1.0, 1.0, 33)
        nus = mus**2 - model.rho**2
        found = _sign_brackets(nus, _mismatch(model, *_shoot_solutions(model, nus, tol)))
        if len(found) == 0:
            raise BracketError(f"No sign change of the mismatch within mu_pred +- 1 for n={n}")
        centers = np.array([np.sqrt(max(0.5 * (lo + hi) + model.rho**2, 0.0)) for lo, hi in found])
        brackets[int(n)] = found[int(np.argmin(np.abs(centers - mu_pred)))]

    return [brackets[int(n)] for n in indices]


def _refine(model: Model, bracket: Tuple[float, float], tol: float, ode_tol: float) -> float:
    lo, hi = bracket
    if lo == hi:
        return lo
    return float(
        brentq(
            lambda nu: shoot_mismatch(model, nu, ode_tol),
            lo,
            hi,
            xtol=1e-14,
            rtol=max(4 * np.finfo(float).eps, 0.1 * tol),
            maxiter=200,
        )
    )


def _glue(model: Model, nu: float, ode_tol: float) -> _EigenShot:
    left, right = _shoot_solutions(model, np.array([nu]), ode_tol)
    u_left, du_left = left(QUARTER_PI)
    u_right, du_right = right(QUARTER_PI)
    scale = np.sqrt(abs(nu) + 1)
    if abs(u_right[0, 0]) * scale >= abs(du_right[0, 0]):
        k_right = u_left[0, 0] / u_right[0, 0]
    else:
        k_right = -du_left[0, 0] / du_right[0, 0]
    return _EigenShot(left=left, right=right, k_right=float(k_right))


def _eval_shot(shot: _EigenShot, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values, derivs = np.zeros_like(t), np.zeros_like(t)
    inner = t <= QUARTER_PI
    if np.any(inner):
        u, du = shot.left(t[inner])
        values[inner], derivs[inner] = u[0], du[0]
    if np.any(~inner):
        u, du = shot.right(HALF_PI - t[~inner])
        values[~inner], derivs[~inner] = shot.k_right * u[0], -shot.k_right * du[0]
    return values, derivs


def _norm(model: Model, shot: _EigenShot) -> float:
    def integrand(t: float) -> float:
        value, _ = _eval_shot(shot, np.array([t]))
        return float(value[0] ** 2 * eval_coefficient(model, t, "A_tilde").real)

    total = 0.0
    for lo, hi in ((0.0, QUARTER_PI), (QUARTER_PI, HALF_PI)):
        total += quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    return float(np.sqrt(total))


def _count_sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values[values != 0])
    return int(np.sum(signs[1:] != signs[:-1]))


def _index_markers(nus: np.ndarray, rho: float) -> Tuple[int, int]:
    shifted = nus + rho**2
    negative = np.flatnonzero(shifted < -ZERO_BRANCH_TOL * max(1.0, rho**2))
    m0 = int(negative[-1]) if negative.size > 0 else -1
    below = np.flatnonzero(nus < -ZERO_BRANCH_TOL)
    n0 = int(below[-1]) + 1 if below.size > 0 else 0
    return m0, n0


def solve_eigen(
    model: Model, n_max: int, tol: float = 1e-10, ode_tol: float = 1e-12, workers: Optional[int] = None
) -> EigenData:
    """
    Eigenvalues nu_0 < ... < nu_{n_max} of -L with normalized eigenfunctions.

    Args:
        model (Model): The model.
        n_max (int): The largest eigenvalue index.
        tol (float): Relative tolerance of the eigenvalue refinement.
        ode_tol (float): Local error control of the shots.
        workers (Optional[int]): Threads for the per-eigenvalue refinement.

    Returns:
        eigendata (EigenData): The spectrum with matching constants and index markers.
    """
    if not 0 <= n_max <= 200:
        raise ValueError(f"n_max must lie in [0, 200], but got {n_max}")
    if tol < 1e-12:
        raise ValueError(f"tol must be >= 1e-12, but got {tol}")

    n_low = min(n_max, N_SCAN_MAX - 1)
    brackets = _scan_low(model, n_low, ode_tol)
    if n_max >= N_SCAN_MAX:
        brackets += _bracket_high(model, np.arange(N_SCAN_MAX, n_max + 1), ode_tol)

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            nus = np.array(list(executor.map(lambda b: _refine(model, b, tol, ode_tol), brackets)))
    else:
        nus = np.array([_refine(model, b, tol, ode_tol) for b in brackets])

    if np.any(np.diff(nus) <= 0):
        raise BracketError(f"eigenvalues must be strictly increasing, but got {nus.tolist()}")

    shots, norms, residuals = [], np.zeros(nus.size), np.zeros(nus.size)
    for n, nu in enumerate(nus):
        shot = _glue(model, nu, ode_tol)
        t_grid = np.linspace(1e-3, HALF_PI - 1e-3, 50 * (n + 2))
        n_zeros = _count_sign_changes(_eval_shot(shot, t_grid)[0])
        if n_zeros != n:
            raise OscillationError(f"eigenfunction {n} must have {n} interior zeros, but got {n_zeros} at nu={nu}")

        lo, hi = brackets[n]
        scale = max(abs(shoot_mismatch(model, lo, ode_tol)), abs(shoot_mismatch(model, hi, ode_tol)), EPS)
        residuals[n] = abs(shoot_mismatch(model, nu, ode_tol)) / scale if lo != hi else 0.0
        norms[n] = _norm(model, shot)
        shots.append(shot)

    m0, n0 = _index_markers(nus, model.rho)
    data = EigenData(
        nus=nus,
        liouville_nus=nus - model.liouville_shift,
        norms=norms,
        matching=1 / norms,
        m0=m0,
        n0=n0,
        rho=model.rho,
        diagnostics=dict(shoot_residual=residuals),
        shots=shots,
    )
    logger.info(f"Solved {nus.size} eigenvalues: nu_0={nus[0]}, nu_{n_max}={nus[-1]}, m0={m0}, n0={n0}")
    return data


def _check_index(data: EigenData, n: int) -> None:
    if not 0 <= n <= data.n_max:
        raise ValueError(f"n must lie in [0, {data.n_max}], but got {n}")


def eigenfunction_eval(
    data: EigenData, model: Model, n: int, t: Union[float, np.ndarray], derivative: bool = False
) -> Union[float, np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """Psi_n(t) on (0, pi/2), positive near 0; with derivative=True also Psi_n'(t)."""
    _check_index(data, n)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0) or np.any(t_arr >= HALF_PI):
        raise ValueError(f"t must lie in (0, pi/2), but got {t}")

    values, derivs = _eval_shot(data.shots[n], t_arr)
    values, derivs = data.matching[n] * values, data.matching[n] * derivs
    if derivative:
        return values, derivs
    return values if np.ndim(t) > 0 else float(values[0])


def matching_constant(data: EigenData, model: Model, n: int, tol: float = 1e-11, rtol: float = 1e-7) -> float:
    """
    c_n with Psi_n(t) = c_n w_{nu_n}(t), taken at pi/4 and checked at pi/8 and 3 pi/8.

    For n <= m0 the same w is phi_{beta_n}(it) with beta_n = sqrt(-(nu_n + rho^2)).
    """
    _check_index(data, n)
    t_check = np.array([np.pi / 8, QUARTER_PI, 3 * np.pi / 8])
    psi = eigenfunction_eval(data, model, n, t_check)
    w = np.real(eval_phi_imag(model, float(data.nus[n]), t_check, tol))
    c_n = float(psi[1] / w[1])

    deviation = np.max(np.abs(psi - c_n * w)) / np.max(np.abs(psi))
    if deviation > rtol:
        raise CrossCheckError(f"Psi_n / w must be constant to {rtol}, but got deviation {deviation} for n={n}")
    return c_n


def jacobi_reference(model: Model, n: int, t: Union[float, np.ndarray]) -> np.ndarray:
    """
    P_n^{alpha,beta}(cos 2t) normalized in L^2((0, pi/2), A_tilde dt) for B = 1.

    The three-term recurrence
        2n (n+a+b) (2n+a+b-2) P_n = (2n+a+b-1) ((2n+a+b)(2n+a+b-2) x + a^2 - b^2) P_{n-1}
                                    - 2 (n+a-1) (n+b-1) (2n+a+b) P_{n-2}
    starts from P_0 = 1 and P_1 = (a+1) + (a+b+2)(x-1)/2.
    """
    if len(model.perturbation_roots) > 0:
        raise ValueError("jacobi_reference needs B = 1, but got perturbation roots")

    a, b = model.alpha, model.beta
    x = np.cos(2 * np.asarray(t, dtype=float))
    p_prev, p_cur = np.ones_like(x), (a + 1) + (a + b + 2) * (x - 1) / 2
    if n == 0:
        p_cur = p_prev
    for k in range(2, n + 1):
        s = 2 * k + a + b
        lead = 2 * k * (k + a + b) * (s - 2)
        p_next = ((s - 1) * (s * (s - 2) * x + a**2 - b**2) * p_cur - 2 * (k + a - 1) * (k + b - 1) * s * p_prev) / lead
        p_prev, p_cur = p_cur, p_next

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
    return p_cur / np.exp(0.5 * log_norm2)


def sturm_count(model: Model, nu: float, tol: float = 1e-11) -> int:
    """Number of eigenvalues below nu from the zeros of the regular solution at 0."""
    t_end = HALF_PI - IMAG_ENDPOINT_GAP
    solution = imag_segment_solution(model, [nu], t_end, tol)
    n_points = 200 * (int(np.sqrt(abs(nu) + 1)) + 2)
    values, _ = solution(np.linspace(1e-3, t_end, n_points))
    return _count_sign_changes(values[0])


def liouville_residual(data: EigenData, model: Model, n: int, t: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """|-v'' + q v - nu_l v| for v = sqrt(A_tilde) Psi_n, with v'' from a centered difference of v'."""
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def v_prime(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        psi, dpsi = eigenfunction_eval(data, model, n, x, derivative=True)  # type: ignore
        root = np.sqrt(eval_coefficient(model, x, "A_tilde").real)
        logderiv = eval_coefficient(model, x, "logderiv_A_tilde").real
        return root * psi, root * (dpsi + 0.5 * logderiv * psi)

    v, _ = v_prime(t)
    second = (v_prime(t + step)[1] - v_prime(t - step)[1]) / (2 * step)
    q = eval_liouville_data(model, t, "q")
    return np.abs(-second + q * v - data.liouville_nus[n] * v)
