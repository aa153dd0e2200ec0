from dataclasses import dataclass, field
from logging import getLogger
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ramanujan.cfunc import cross_check_c, eval_c, gamma_coeffs
from ramanujan.master import forward_transform_grid, reconstruct_general, series_reconstruct, verify_routes
from ramanujan.model import Model, build_model, eval_coefficient
from ramanujan.phi_ode import eval_phi_grid, ode_residual
from ramanujan.sinetype import (
    SineTypeData,
    b_eval,
    build_sine_type,
    decay_envelope,
    residue_d,
    residue_ratio_growth,
    sine_S,
    synthetic_sine_type,
)
from ramanujan.spectrum import EigenData, eigenfunction_eval, jacobi_reference, solve_eigen
from ramanujan.symbols import exp_shift, vanishing_product
from ramanujan.utils.constants import ENVELOPE_SPREAD_MAX, EPS, HALF_PI, RESIDUE_GROWTH_MAX, CrossCheckError
from ramanujan.utils.utils import ToleranceSection, load_or_store_baseline


logger = getLogger(__name__)
BOUND_FACTOR = 1.5
VALUE_RTOL = 1e-9
T_GRID = np.arange(1, 10) * 0.05
LAMBDA_GRID = np.arange(1, 13) * 0.5
CaseOutput = Tuple[Dict[str, float], bool]


@dataclass
class RegressionContext:
    tolerances: ToleranceSection
    _models: Dict[Tuple[float, float, Tuple[float, ...]], Model] = field(default_factory=dict)
    _spectra: Dict[Tuple[Any, int], EigenData] = field(default_factory=dict)
    _sines: Dict[Tuple[Any, int], SineTypeData] = field(default_factory=dict)

    def model(self, alpha: float, beta: float, roots: Tuple[float, ...] = ()) -> Model:
        key = (alpha, beta, roots)
        if key not in self._models:
            self._models[key] = build_model(alpha, beta, roots)
        return self._models[key]

    def eigen(self, model: Model, n_max: int) -> EigenData:
        key = ((model.alpha, model.beta, model.perturbation_roots), n_max)
        if key not in self._spectra:
            self._spectra[key] = solve_eigen(model, n_max, self.tolerances["eigen_tol"], self.tolerances["ode_tol"])
        return self._spectra[key]

    def sine(self, model: Model, n_max: int) -> SineTypeData:
        key = ((model.alpha, model.beta, model.perturbation_roots), n_max)
        if key not in self._sines:
            self._sines[key] = build_sine_type(model, self.eigen(model, n_max))
        return self._sines[key]


def _gl(lo: float, hi: float, n_panels: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(lo, hi, n_panels + 1)
    nodes = 0.5 * (edges[1:, None] - edges[:-1, None]) * x + 0.5 * (edges[1:, None] + edges[:-1, None])
    weights = 0.5 * (edges[1:, None] - edges[:-1, None]) * w
    return nodes.ravel(), weights.ravel()


def case_jacobi_eigenvalues(ctx: RegressionContext) -> CaseOutput:
    values: Dict[str, float] = {}
    worst = 0.0
    for alpha, beta in [(1.0, 1.0), (0.5, 0.5), (1.5, 0.5)]:
        model = ctx.model(alpha, beta)
        data = ctx.eigen(model, 20)
        n = np.arange(21)
        exact = (2 * n + model.rho) ** 2 - alpha**2 - beta**2 + 0.5
        worst = max(worst, float(np.max(np.abs(data.liouville_nus - exact) / np.abs(exact))))
        values[f"nu20_{alpha:g}_{beta:g}"] = float(data.liouville_nus[20])

    values["rel_error_bound"] = worst
    return values, worst < 1e-8


def case_jacobi_eigenfunctions(ctx: RegressionContext) -> CaseOutput:
    model = ctx.model(1.0, 1.0)
    data = ctx.eigen(model, 20)
    t, w = _gl(0.0, HALF_PI, 16)
    weight = eval_coefficient(model, t, "A_tilde").real
    worst = 0.0
    for n in range(9):
        gap = eigenfunction_eval(data, model, n, t) - jacobi_reference(model, n, t)
        worst = max(worst, float(np.sqrt(np.sum(w * weight * gap**2))))
    return dict(l2_distance_bound=worst), worst < 1e-6


def case_asymptotic_law(ctx: RegressionContext) -> CaseOutput:
    model = ctx.model(1.0, 1.0, (2.0,))
    data = ctx.eigen(model, 60)
    n = np.arange(10, 61)
    deviation = np.abs(np.sqrt(data.liouville_nus[n]) - (2 * n + model.rho_0) + model.theta / (4 * n)) * n**2
    return dict(asymptotic_bound=float(np.max(deviation)), theta=model.theta), True


def case_gamma_anchor(ctx: RegressionContext) -> CaseOutput:
    """Gamma_1..Gamma_3 in closed form through b_1, b_2, b_3 of B'/B = sum 2 b_j e^{-jt}."""
    rng = np.random.RandomState(0)
    worst = 0.0
    for model in (ctx.model(1.0, 1.0), ctx.model(1.0, 1.0, (2.0,))):
        b = model.exp_coeffs
        a2 = 2 * model.alpha - 2 * model.beta + b[2]
        for lam in rng.uniform(-5, 5, 20) + 1j * rng.uniform(-0.4, 2, 20):
            z, rho = 1j * lam, model.rho
            g1 = -2 * b[1] * (z - rho) / (1 - 2 * z)
            g2 = (-2 * a2 * (z - rho) - 2 * b[1] * (z - rho - 1) * g1) / (4 * (1 - z))
            g3 = (-2 * a2 * (z - rho - 1) * g1 - 2 * b[3] * (z - rho) - 2 * b[1] * (z - rho - 2) * g2) / (
                3 * (3 - 2 * z)
            )
            coeffs = gamma_coeffs(model, lam, 3).coeffs[1:]
            closed = np.array([g1, g2, g3])
            worst = max(worst, float(np.max(np.abs(coeffs - closed) / np.maximum(np.abs(closed), EPS))))
    return dict(gamma_rel_error_bound=worst), worst < 1e-12


def case_c_function(ctx: RegressionContext) -> CaseOutput:
    gap_worst, t_star_worst, passed = 0.0, 0.0, True
    for model in (ctx.model(1.0, 1.0), ctx.model(1.0, 1.0, (2.0,))):
        for x in (0.5, 1.0, 2.0, 5.0, 10.0):
            lam = x - 0.2j
            try:
                c_w, c_l = cross_check_c(model, lam)
            except CrossCheckError as err:
                logger.warning(str(err))
                passed = False
                continue
            gap_worst = max(gap_worst, abs(c_w - c_l) / abs(c_w))
            spread = [eval_c(model, lam, t_star=t_star, tol=1e-12) for t_star in (3.0, 5.0, 8.0)]
            t_star_worst = max(t_star_worst, max(abs(c - c_w) / abs(c_w) for c in spread))

    passed = passed and t_star_worst < 1e-8
    return dict(method_gap_bound=gap_worst, t_star_bound=t_star_worst), passed


def case_sine_type(ctx: RegressionContext) -> CaseOutput:
    rng = np.random.RandomState(1)
    synthetic = synthetic_sine_type(np.arange(1, 401, dtype=float))
    z = rng.uniform(0, 2, 20) * np.exp(2j * np.pi * rng.uniform(0, 1, 20))
    euler = float(np.max(np.abs(sine_S(synthetic, z) - np.sinh(np.pi * z)) / np.abs(np.sinh(np.pi * z))))

    sine_perturbed = ctx.sine(ctx.model(1.0, 1.0, (2.0,)), 20)
    passed = euler < 1e-10
    try:
        residue_d(sine_perturbed, 10)
    except CrossCheckError as err:
        logger.warning(str(err))
        passed = False

    values = dict(euler_rel_error_bound=euler)
    for label, sine in (("jacobi", ctx.sine(ctx.model(1.0, 1.0), 20)), ("perturbed", sine_perturbed)):
        growth = residue_ratio_growth(sine)
        low, high = decay_envelope(sine)
        values[f"{label}_residue_growth_bound"] = growth
        values[f"{label}_envelope_spread_bound"] = high / low
        passed = passed and growth < RESIDUE_GROWTH_MAX and 0 < low and high / low < ENVELOPE_SPREAD_MAX
    return values, passed


def case_master_identity(ctx: RegressionContext) -> CaseOutput:
    tol, route_tol = ctx.tolerances["quad_tol"], ctx.tolerances["route_tol"]
    a = exp_shift(1.0)
    values: Dict[str, float] = {}
    passed = True
    for roots in ((), (2.0,)):
        model = ctx.model(1.0, 1.0, roots)
        data, sine = ctx.eigen(model, 20), ctx.sine(model, 20)
        routes = verify_routes(model, data, sine, a, T_GRID, (0.0, 0.1, 0.2), tol)
        forward = forward_transform_grid(model, sine, a, LAMBDA_GRID, tol)
        label = "jacobi" if len(roots) == 0 else "perturbed"
        values[f"{label}_route_gap_bound"] = routes.max_discrepancy
        values[f"{label}_forward_residual_bound"] = float(np.max(forward.residuals))
        passed = passed and routes.max_discrepancy < route_tol and bool(np.max(forward.residuals) < 1e-4)
    return values, passed


def case_empty_corrections(ctx: RegressionContext) -> CaseOutput:
    model = ctx.model(-0.25, 1.0)
    data, sine = ctx.eigen(model, 20), ctx.sine(model, 20)
    result = reconstruct_general(model, data, sine, exp_shift(1.0), T_GRID, 0.1, ctx.tolerances["quad_tol"])
    n_corrections = float(sine.correction_nodes.size)
    values = dict(
        nonpositive_gap_bound=result.max_discrepancy,
        nu_0_bound=abs(float(data.nus[0])),
        n_corrections=n_corrections,
    )
    passed = n_corrections == 0 and not np.any(result.correction_terms) and abs(data.nus[0]) < 1e-8
    return values, passed and result.max_discrepancy < 5e-5


def case_interpolation(ctx: RegressionContext) -> CaseOutput:
    model = ctx.model(1.0, 1.0)
    data, sine = ctx.eigen(model, 20), ctx.sine(model, 20)
    a = vanishing_product(1j * sine.mus[:40], p=1.0)
    f = series_reconstruct(model, data, sine, a, 1j * T_GRID, ctx.tolerances["quad_tol"])
    worst = float(np.max(np.abs(f)))
    return dict(interpolation_bound=worst), worst < 1e-6


def case_properties(ctx: RegressionContext) -> CaseOutput:
    model = ctx.model(1.0, 1.0, (2.0,))
    t = np.linspace(0.1, 3.0, 12)
    lam = 1.3 - 0.4j
    phi = eval_phi_grid(model, [lam, -lam, np.conj(lam)], t)[0]
    evenness = float(np.max(np.abs(phi[0] - phi[1])))
    conjugation = float(np.max(np.abs(phi[2] - np.conj(phi[0]))))
    residual = float(np.max(ode_residual(model, lam, t)))

    data = ctx.eigen(model, 20)
    nodes, w = _gl(0.0, HALF_PI, 16)
    weight = eval_coefficient(model, nodes, "A_tilde").real
    psi = np.array([eigenfunction_eval(data, model, n, nodes) for n in range(16)])
    gram = (psi * w * weight) @ psi.T
    orthonormality = float(np.max(np.abs(gram - np.eye(16))))

    sine = ctx.sine(model, 20)
    lams = np.array([0.7, 2.5 - 0.3j, 4.0 + 0.2j])
    b_plus = np.atleast_1d(b_eval(model, sine, lams))
    b_minus = np.atleast_1d(b_eval(model, sine, -lams))
    oddness = float(np.max(np.abs(b_plus + b_minus) / np.abs(b_plus)))

    a = exp_shift(1.0)
    routes = verify_routes(model, data, sine, a, [0.3], (0.05, 0.15, 0.25, 0.35, 0.45), ctx.tolerances["quad_tol"])
    sigma_spread = float(np.max(np.abs(routes.f_contour[:, 0] - routes.f_contour[0, 0])))

    values = dict(
        evenness_bound=evenness,
        conjugation_bound=conjugation,
        ode_residual_bound=residual,
        orthonormality_bound=orthonormality,
        b_oddness_bound=oddness,
        sigma_spread_bound=sigma_spread,
    )
    passed = orthonormality < 1e-7 and oddness < 1e-9 and sigma_spread < 3 * ctx.tolerances["quad_tol"]
    return values, passed and evenness < 1e-8 and conjugation < 1e-8


CASES: Dict[str, Callable[[RegressionContext], CaseOutput]] = {
    "jacobi_eigenvalues": case_jacobi_eigenvalues,
    "jacobi_eigenfunctions": case_jacobi_eigenfunctions,
    "asymptotic_law": case_asymptotic_law,
    "gamma_anchor": case_gamma_anchor,
    "c_function": case_c_function,
    "sine_type": case_sine_type,
    "master_identity": case_master_identity,
    "empty_corrections": case_empty_corrections,
    "interpolation": case_interpolation,
    "properties": case_properties,
}


def compare_with_baseline(values: Dict[str, float], baseline: Dict[str, float]) -> List[str]:
    """Names of the values that broke their baseline: *_bound may grow up to 1.5x, the rest must match to 1e-9."""
    broken = []
    for key, value in values.items():
        if key not in baseline:
            broken.append(key)
            continue

        frozen = baseline[key]
        if key.endswith("_bound"):
            ok = value <= BOUND_FACTOR * frozen + EPS or value <= 1e-14
        else:
            ok = abs(value - frozen) <= VALUE_RTOL * max(1.0, abs(frozen))
        if not ok:
            broken.append(key)
    return broken


def run_regression(
    tolerances: ToleranceSection, baseline_dir: str = "baselines", names: Optional[List[str]] = None
) -> Dict[str, Dict[str, Any]]:
    """
    Run the golden suite. The first run of a case freezes its values as the baseline.

    Returns:
        summary (Dict[str, Dict[str, Any]]):
            Per case: values, passed (own acceptance and baseline), frozen (True if the baseline was just written).
    """
    names = list(CASES.keys()) if names is None else names
    unknown = [name for name in names if name not in CASES]
    if len(unknown) > 0:
        raise KeyError(f"regression cases must be in {list(CASES.keys())}, but got {unknown}")

    ctx = RegressionContext(tolerances)
    summary: Dict[str, Dict[str, Any]] = {}
    for name in names:
        values, accepted = CASES[name](ctx)
        baseline = load_or_store_baseline(baseline_dir, name, values)
        broken = [] if baseline is None else compare_with_baseline(values, baseline)
        summary[name] = dict(values=values, passed=bool(accepted and len(broken) == 0), frozen=baseline is None)
        if broken:
            logger.warning(f"{name} broke its baseline at {broken}")
        logger.info(f"Regression case {name}: {summary[name]}")

    return summary
