from ramanujan.cfunc import cross_check_c, eval_c, eval_c_grid, eval_Phi, gamma_coeffs, plancherel_density
from ramanujan.master import (
    contour_reconstruct,
    forward_transform,
    forward_transform_grid,
    realline_reconstruct,
    reconstruct_general,
    series_reconstruct,
    verify_routes,
)
from ramanujan.model import Model, build_model, eval_coefficient, eval_liouville_data
from ramanujan.phi_ode import eval_phi, eval_phi_grid, eval_phi_imag, eval_phi_ray
from ramanujan.sinetype import S1, SineTypeData, b_eval, build_sine_type, residue_d, sine_S, synthetic_sine_type
from ramanujan.spectrum import EigenData, eigenfunction_eval, matching_constant, solve_eigen
from ramanujan.symbols import SymbolFunction, build_symbol, exp_shift, rational_damped, vanishing_product


__licence__ = "Apache-2.0 License"


__all__ = [
    "EigenData",
    "Model",
    "S1",
    "SineTypeData",
    "SymbolFunction",
    "b_eval",
    "build_model",
    "build_sine_type",
    "build_symbol",
    "contour_reconstruct",
    "cross_check_c",
    "eigenfunction_eval",
    "eval_Phi",
    "eval_c",
    "eval_c_grid",
    "eval_coefficient",
    "eval_liouville_data",
    "eval_phi",
    "eval_phi_grid",
    "eval_phi_imag",
    "eval_phi_ray",
    "exp_shift",
    "forward_transform",
    "forward_transform_grid",
    "gamma_coeffs",
    "matching_constant",
    "plancherel_density",
    "rational_damped",
    "realline_reconstruct",
    "reconstruct_general",
    "residue_d",
    "series_reconstruct",
    "sine_S",
    "solve_eigen",
    "synthetic_sine_type",
    "vanishing_product",
    "verify_routes",
]
