from dataclasses import dataclass
from logging import getLogger
from typing import Optional, Sequence, Tuple, Union

import numpy as np

import pandas as pd

from ramanujan.cfunc import eval_c_grid, eval_phi_far, plancherel_density
from ramanujan.model import Model, eval_coefficient
from ramanujan.phi_ode import eval_phi_grid, eval_phi_ray
from ramanujan.sinetype import S1, SineTypeData, b_eval
from ramanujan.spectrum import EigenData
from ramanujan.symbols import SymbolFunction
from ramanujan.utils.constants import (
    GL_NODES,
    HALF_PI,
    REALLINE_T_STAR,
    SMALL_LAMBDA,
    T_OUT_CAP,
    T_SWITCH,
    BranchChoices,
    ConvergenceError,
    RegimeError,
)


logger = getLogger(__name__)
TimeLike = Union[complex, float, Sequence[complex], np.ndarray]
PANEL_WIDTH = 0.5
N_GRADED = 8


@dataclass(frozen=True)
class ReconstructionResult:
    """
    f(it) on real nodes t from every route.

    f_contour has one row per sigma. correction_terms holds the finite sums over the
    eigenvalues below n0, which enter the series only; the set is empty whenever nu_0 = 0.
    """

    t_nodes: np.ndarray
    sigmas: np.ndarray
    f_series: np.ndarray
    f_contour: np.ndarray
    f_realline: np.ndarray
    correction_terms: np.ndarray
    route_discrepancies: np.ndarray

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.route_discrepancies)) if self.route_discrepancies.size else 0.0

    def to_frame(self) -> pd.DataFrame:
        data = dict(t=self.t_nodes, series_re=self.f_series.real, series_im=self.f_series.imag)
        for sigma, row in zip(self.sigmas, self.f_contour):
            data[f"contour_{sigma:g}_re"] = row.real
            data[f"contour_{sigma:g}_im"] = row.imag
        data.update(
            realline_re=self.f_realline.real,
            realline_im=self.f_realline.imag,
            correction_re=self.correction_terms.real,
            correction_im=self.correction_terms.imag,
            discrepancy=self.route_discrepancies,
        )
        return pd.DataFrame(data)


@dataclass(frozen=True)
class ForwardTransformResult:
    lambdas: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residuals: np.ndarray
    t_out: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            dict(
                lam=self.lambdas,
                lhs_re=self.lhs.real,
                lhs_im=self.lhs.imag,
                rhs_re=self.rhs.real,
                rhs_im=self.rhs.imag,
                residual=self.residuals,
            )
        )


def transform_normalisation(model: Model) -> float:
    """The constant 4 pi kappa of the forward identity over the whole real line."""
    return 4 * np.pi * model.kappa


def _gl_panels(edges: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    lo, hi = edges[:-1, np.newaxis], edges[1:, np.newaxis]
    nodes = 0.5 * (hi - lo) * x[np.newaxis] + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w[np.newaxis]
    return nodes.ravel(), weights.ravel()


def _uniform_edges(start: float, stop: float, breaks: Sequence[float] = ()) -> np.ndarray:
    edges = np.arange(start, stop + 1e-12, PANEL_WIDTH)
    if edges[-1] < stop:
        edges = np.append(edges, stop)
    return np.unique(np.concatenate([edges, np.asarray(breaks, dtype=float)]))


def _graded_edges(stop: float) -> np.ndarray:
    """Panels on [0, stop], the first one split geometrically towards 0 for the t^{2 alpha + 1} endpoint."""
    graded = PANEL_WIDTH * 2.0 ** -np.arange(N_GRADED, 0, -1)
    return np.concatenate([[0.0], graded, _uniform_edges(PANEL_WIDTH, stop)])


def _truncation(a: SymbolFunction, rho_0: float, growth: float, sigma: float, tol: float) -> float:
    """Smallest T with T^{rho_0 + 2} e^{(A + growth - pi/2) T} e^{p sigma} < tol / 10 from T on."""
    rate = HALF_PI - a.certificate.A_bound - growth
    if rate <= 0:
        raise ConvergenceError(
            f"The contour integrand does not decay: A + |Im t| must be < pi/2, but got {HALF_PI - rate}"
        )

    xs = np.arange(1.0, T_OUT_CAP + PANEL_WIDTH, PANEL_WIDTH)
    envelope = xs ** (rho_0 + 2) * np.exp(-rate * xs + a.certificate.p * sigma)
    failing = np.flatnonzero(envelope >= tol / 10)
    if failing.size == 0:
        return float(xs[0])
    if failing[-1] == xs.size - 1:
        raise ConvergenceError(f"The truncation bound {tol / 10} is unachievable within |Re lambda| <= {T_OUT_CAP}")
    return float(xs[failing[-1] + 1])


def _check_strip(a: SymbolFunction, t: np.ndarray) -> None:
    if np.any(np.abs(t.real) >= a.certificate.p):
        raise ValueError(f"|Re t| must be < p={a.certificate.p}, but got {t.tolist()}")


def _phi_on_nodes(model: Model, lams: np.ndarray, t: np.ndarray, tol: float) -> np.ndarray:
    """phi_lambda(t) with shape (len(lams), len(t)); one integration when every t is real."""
    if np.all(t.imag == 0):
        return eval_phi_grid(model, lams, np.abs(t.real), tol)[0].astype(complex)
    return np.stack([eval_phi_ray(model, lams, ti, tol) for ti in t], axis=1)


def _series_terms(
    sinedata: SineTypeData, a: SymbolFunction, grow: float, tol: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes i mu_n and weights d_n of the series, cut where |d_n a(i mu_n)| e^{grow mu_n} (1 + mu_n)^2 < tol / 1000."""
    count = sinedata.residues.size
    mus = sinedata.mus[:count]
    nodes = 1j * mus
    weights = sinedata.residues
    bounds = np.abs(weights * a(nodes)) * np.exp(grow * mus) * (1 + mus) ** 2
    active = np.flatnonzero(bounds >= tol * 1e-3)
    if active.size > 0 and active[-1] >= count - 3:
        raise ConvergenceError(
            f"The series terms must decay below {tol} within {count} residues, but the last bound is {bounds[-1]}"
        )
    last = active[-1] + 1 if active.size > 0 else 0
    nodes, weights = nodes[:last], weights[:last]

    if sinedata.branch == BranchChoices.zero_at_origin:
        # the zero at the origin contributes half a residue of S1, Res_0 S1 = 1 / pi
        nodes = np.concatenate([[0j], nodes])
        weights = np.concatenate([[1 / (2 * np.pi)], weights])
    return nodes, weights


def _weighted_sum(
    model: Model, a: SymbolFunction, nodes: np.ndarray, weights: np.ndarray, xi: np.ndarray, tol: float
) -> np.ndarray:
    """2 pi i sum_k w_k a(z_k) phi_{z_k}(xi)"""
    if nodes.size == 0 or a.is_zero:
        return np.zeros(xi.size, dtype=complex)
    phi = _phi_on_nodes(model, nodes, xi, tol)
    return 2j * np.pi * (weights * a(nodes)) @ phi


def _check_compatible(eigendata: EigenData, sinedata: SineTypeData) -> None:
    if eigendata.n0 != sinedata.n0:
        raise ValueError(f"sinedata must be built from eigendata, but got n0={sinedata.n0} vs {eigendata.n0}")


def _series_parts(
    model: Model, sinedata: SineTypeData, a: SymbolFunction, taus: np.ndarray, tol: float, ode_tol: float
) -> Tuple[np.ndarray, np.ndarray]:
    if np.any(np.abs(taus.real) >= HALF_PI) or np.any(np.abs(taus.imag) >= a.certificate.p):
        raise ValueError(
            f"t must lie in Omega_p = {{|Re t| < pi/2, |Im t| < {a.certificate.p}}}, but got {taus.tolist()}"
        )

    # Psi_m(tau) / c_m = phi_{i mu_m}(i tau)
    xi = 1j * taus
    nodes, weights = _series_terms(sinedata, a, float(np.max(np.abs(taus.imag))), tol)
    main = _weighted_sum(model, a, nodes, weights, xi, ode_tol)
    corrections = _weighted_sum(model, a, sinedata.correction_nodes, sinedata.correction_weights, xi, ode_tol)
    return main, corrections


def series_reconstruct(
    model: Model,
    eigendata: EigenData,
    sinedata: SineTypeData,
    a: SymbolFunction,
    t: TimeLike,
    tol: float = 1e-6,
    ode_tol: float = 1e-10,
) -> Union[complex, np.ndarray]:
    """
    f(t) = 2 pi i sum_m (d_m / c_m) a(i mu_m) Psi_m(t) on Omega_p.

    t is the variable of the compact picture, so f(it) for real t is obtained from t -> it.
    The terms below n0 enter with a(i mu_m) or a(beta_m).

    Args:
        model (Model): The model.
        eigendata (EigenData): The spectrum the sine-type data was built from.
        sinedata (SineTypeData): Zeros and residues.
        a (SymbolFunction): The symbol.
        t (TimeLike): Point(s) of Omega_p.
        tol (float): Truncation tolerance of the series.
        ode_tol (float): Local error control of the phi integrations.

    Returns:
        f (Union[complex, np.ndarray]): The partial sum.
    """
    _check_compatible(eigendata, sinedata)
    taus = np.atleast_1d(np.asarray(t, dtype=complex))
    main, corrections = _series_parts(model, sinedata, a, taus, tol, ode_tol)
    values = main + corrections
    return values if np.ndim(t) > 0 else complex(values[0])


def _grouped_integrand(sinedata: SineTypeData, a: SymbolFunction, lams: np.ndarray) -> np.ndarray:
    """S1(lambda) (a(lambda) - a(-lambda)), the regular form of (a b + a(-) b(-)) / (c c(-))."""
    return np.atleast_1d(S1(sinedata, lams)) * (a(lams) - a(-lams))


def _contour_values(
    model: Model, sinedata: SineTypeData, a: SymbolFunction, t: np.ndarray, sigma: float, tol: float, ode_tol: float
) -> np.ndarray:
    T = _truncation(a, sinedata.offset, float(np.max(np.abs(t.imag))), sigma, tol)
    x, w = _gl_panels(_uniform_edges(-T, T))
    lams = x - 1j * sigma
    integrand = _grouped_integrand(sinedata, a, lams)[:, np.newaxis] * _phi_on_nodes(model, lams, t, ode_tol)
    return 0.5 * (w @ integrand)


def contour_reconstruct(
    model: Model,
    sinedata: SineTypeData,
    a: SymbolFunction,
    t: TimeLike,
    sigma: float = 0.0,
    tol: float = 1e-6,
    ode_tol: float = 1e-10,
) -> Union[complex, np.ndarray]:
    """
    f(it) as the integral over Im lambda = -sigma of the grouped integrand times phi_lambda(t).

    The grouped form is regular at lambda = 0, so sigma = 0 is allowed. Complex t = t_r + is
    is accepted for |s| < pi/2 - A.
    """
    if not 0 <= sigma < a.certificate.delta:
        raise ValueError(f"sigma must lie in [0, {a.certificate.delta}), but got {sigma}")
    ts = np.atleast_1d(np.asarray(t, dtype=complex))
    _check_strip(a, ts)
    if a.is_zero:
        values = np.zeros(ts.size, dtype=complex)
    else:
        values = _contour_values(model, sinedata, a, ts, sigma, tol, ode_tol)
    return values if np.ndim(t) > 0 else complex(values[0])


def realline_reconstruct(
    model: Model,
    sinedata: SineTypeData,
    a: SymbolFunction,
    t: TimeLike,
    tol: float = 1e-6,
    ode_tol: float = 1e-10,
) -> Union[complex, np.ndarray]:
    """
    f(it) = int_0^infty (a b + a(-) b(-))(lambda) phi_lambda(t) |c(lambda)|^{-2} d lambda.

    Above SMALL_LAMBDA the integrand is b(lambda) (a(lambda) - a(-lambda)) times the Plancherel
    density. b takes c(lambda) and c(-lambda) from Wronskians at REALLINE_T_STAR while the density
    takes |c(lambda)| from plancherel_density, so the product checks c(-lambda) = conj(c(lambda)).
    Below SMALL_LAMBDA the grouped form is used.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    _check_strip(a, ts.astype(complex))
    if a.is_zero:
        values = np.zeros(ts.size, dtype=complex)
        return values if np.ndim(t) > 0 else complex(values[0])

    T = _truncation(a, sinedata.offset, 0.0, 0.0, tol)
    x, w = _gl_panels(_uniform_edges(0.0, T, breaks=[SMALL_LAMBDA]))
    small = x < SMALL_LAMBDA
    symmetric = a(x + 0j) - a(-x + 0j)
    spectral = np.zeros(x.size, dtype=complex)
    spectral[small] = np.atleast_1d(S1(sinedata, x[small] + 0j)) * symmetric[small]

    density = np.atleast_1d(plancherel_density(model, x[~small], tol=ode_tol))
    b_values = np.atleast_1d(b_eval(model, sinedata, x[~small] + 0j, tol=ode_tol, t_star=REALLINE_T_STAR))
    spectral[~small] = b_values * symmetric[~small] * density

    phi = eval_phi_grid(model, x, np.abs(ts), ode_tol)[0]
    values = w @ (spectral[:, np.newaxis] * phi)
    return values if np.ndim(t) > 0 else complex(values[0])


def _phi_profile(model: Model, lams: np.ndarray, t: np.ndarray, tol: float) -> np.ndarray:
    """phi_lambda(t) for real lambda >= 0 on [0, T_OUT_CAP]: ODE up to T_SWITCH, connection formula beyond."""
    values = np.zeros((lams.size, t.size), dtype=complex)
    near = t <= T_SWITCH
    values[:, near] = eval_phi_grid(model, lams, t[near], tol)[0]
    if not np.any(~near):
        return values

    small = lams < SMALL_LAMBDA
    far_t = t[~near]
    if np.any(small):
        values[np.ix_(small, ~near)] = eval_phi_grid(model, lams[small], far_t, tol)[0]
    if np.any(~small):
        c_plus, _ = eval_c_grid(model, lams[~small], tol=tol)
        values[np.ix_(~small, ~near)] = eval_phi_far(model, lams[~small], far_t, c_plus=c_plus)
    return values


def _f_profile(
    model: Model, sinedata: SineTypeData, a: SymbolFunction, t: np.ndarray, tol: float, ode_tol: float
) -> np.ndarray:
    """f(it) for real t >= 0 from the sigma = 0 integral, which holds on the whole real line."""
    T = _truncation(a, sinedata.offset, 0.0, 0.0, tol)
    x, w = _gl_panels(_uniform_edges(0.0, T))
    integrand = _grouped_integrand(sinedata, a, x + 0j)[:, np.newaxis] * _phi_profile(model, x, t, ode_tol)
    return w @ integrand


def forward_transform_grid(
    model: Model,
    sinedata: SineTypeData,
    a: SymbolFunction,
    lambdas: Sequence[float],
    tol: float = 1e-6,
    ode_tol: float = 1e-10,
) -> ForwardTransformResult:
    """
    int_R f(it) phi_lambda(t) A(|t|) dt against 4 pi kappa (a(lambda) b(lambda) + a(-lambda) b(-lambda)).

    One profile of f(it) on [0, T_out] serves every lambda. T_out is the first panel edge after
    which |f(it)| A(t) e^{-rho t} (1 + t) stays below tol / 10.

    Args:
        model (Model): The model.
        sinedata (SineTypeData): Zeros and residues.
        a (SymbolFunction): The symbol.
        lambdas (Sequence[float]): Real nonzero spectral parameters.
        tol (float): Tolerance of the truncations.
        ode_tol (float): Local error control of the phi integrations.

    Returns:
        result (ForwardTransformResult): Both sides and |LHS - RHS| / (1 + |RHS|).
    """
    lams = np.abs(np.asarray(lambdas, dtype=float))
    if np.any(lams == 0):
        raise ValueError(f"lambda must be real and nonzero, but got {list(lambdas)}")
    if abs(model.beta) > model.alpha + 1:
        logger.warning(f"|beta| > alpha + 1 (alpha={model.alpha}, beta={model.beta}): L has discrete spectrum")

    if a.is_zero:
        zeros = np.zeros(lams.size, dtype=complex)
        return ForwardTransformResult(lams, zeros, zeros, np.zeros(lams.size), 0.0)

    edges = _graded_edges(T_OUT_CAP)
    t, w = _gl_panels(edges)
    f_values = _f_profile(model, sinedata, a, t, tol, ode_tol)
    A = eval_coefficient(model, t, "A").real
    envelope = np.abs(f_values) * A * np.exp(-model.rho * t) * (1 + t)
    loud = np.flatnonzero(envelope >= tol / 10)
    t_out = float(edges[np.searchsorted(edges, t[loud[-1]])]) if loud.size > 0 else float(edges[1])
    if t_out >= T_OUT_CAP:
        raise ConvergenceError(f"f(it) A(t) must decay below {tol / 10} before t={T_OUT_CAP}, but got {envelope[-1]}")

    keep = t <= t_out
    phi = _phi_profile(model, lams, t[keep], ode_tol)
    lhs = 2 * phi @ (w[keep] * f_values[keep] * A[keep])
    b_values = np.atleast_1d(b_eval(model, sinedata, lams + 0j, tol=ode_tol))
    rhs = transform_normalisation(model) * b_values * (a(lams + 0j) - a(-lams + 0j))
    residuals = np.abs(lhs - rhs) / (1 + np.abs(rhs))
    logger.info(f"Forward transform with T_out={t_out}: max residual {np.max(residuals)}")
    return ForwardTransformResult(lams, lhs, rhs, residuals, t_out)


def forward_transform(
    model: Model, sinedata: SineTypeData, a: SymbolFunction, lam: float, tol: float = 1e-6
) -> Tuple[complex, complex]:
    result = forward_transform_grid(model, sinedata, a, [lam], tol)
    return complex(result.lhs[0]), complex(result.rhs[0])


def _pairwise_gap(routes: np.ndarray) -> np.ndarray:
    """Largest |f_i - f_j| over pairs of routes, per node; routes has shape (n_routes, n_t)."""
    return np.max(np.abs(routes[:, np.newaxis] - routes[np.newaxis]), axis=(0, 1))


def verify_routes(
    model: Model,
    eigendata: EigenData,
    sinedata: SineTypeData,
    a: SymbolFunction,
    t_grid: Sequence[float],
    sigmas: Sequence[float] = (0.0, 0.1, 0.2),
    tol: float = 1e-6,
    ode_tol: float = 1e-10,
) -> ReconstructionResult:
    """
    Series, contour (one per sigma) and real-line values of f(it) on real t, with pairwise discrepancies.

    The series carries the terms below n0 as correction_terms; the two integral routes do not.
    """
    _check_compatible(eigendata, sinedata)
    t = np.asarray(t_grid, dtype=float)
    sigmas_arr = np.asarray(sigmas, dtype=float)
    main, corrections = _series_parts(model, sinedata, a, 1j * t, tol, ode_tol)
    f_series = main + corrections
    f_contour = np.array(
        [contour_reconstruct(model, sinedata, a, t, float(s), tol, ode_tol) for s in sigmas_arr]
    ).reshape(sigmas_arr.size, t.size)
    f_realline = np.atleast_1d(realline_reconstruct(model, sinedata, a, t, tol, ode_tol))

    routes = np.vstack([f_series[np.newaxis], f_contour, f_realline[np.newaxis]])
    result = ReconstructionResult(
        t_nodes=t,
        sigmas=sigmas_arr,
        f_series=f_series,
        f_contour=f_contour,
        f_realline=f_realline,
        correction_terms=corrections,
        route_discrepancies=_pairwise_gap(routes),
    )
    logger.info(f"Routes evaluated on {t.size} nodes and {sigmas_arr.size} contours: max gap {result.max_discrepancy}")
    return result


def reconstruct_general(
    model: Model,
    eigendata: EigenData,
    sinedata: SineTypeData,
    a: SymbolFunction,
    t: Sequence[float],
    sigma: float = 0.1,
    tol: float = 1e-6,
    sigmas: Optional[Sequence[float]] = None,
) -> ReconstructionResult:
    """
    The identity for alpha <= 0 or beta <= 0.

    -L is nonnegative with nu_0 = 0 (the constants), so nu_n + rho^2 >= 0, m0 = -1, n0 = 0 and the
    finite sums over the eigenvalues below n0 are empty. The routes are then compared as in
    verify_routes. Spectra with terms below n0 are rejected.
    """
    if model.alpha > 0 and model.beta > 0:
        raise RegimeError(
            f"alpha or beta must be <= 0 for the general identity, but got alpha={model.alpha}, beta={model.beta}"
        )
    if eigendata.m0 != -1 or eigendata.n0 != 0 or sinedata.correction_nodes.size > 0:
        raise RegimeError(
            f"the correction sums must be empty, but got m0={eigendata.m0}, n0={eigendata.n0} "
            f"and {sinedata.correction_nodes.size} correction nodes"
        )

    logger.info(f"nu_0={eigendata.nus[0]}: no eigenvalue lies below n0, the correction sums are empty")
    sigmas = (sigma,) if sigmas is None else sigmas
    return verify_routes(model, eigendata, sinedata, a, t, sigmas, tol)
