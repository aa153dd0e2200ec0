from enum import Enum
from typing import Final, Union

import numpy as np


EPS = 1.0e-300
NumericType = Union[float, int]
HALF_PI: Final = np.pi / 2
QUARTER_PI: Final = np.pi / 4

# Frobenius handoff radii: phi on the noncompact side, and the two shots of the eigenproblem
FROBENIUS_EPS: Final = 0.01
SHOOT_EPS: Final = 0.02
SERIES_TERM_TOL: Final = 1.0e-16
MAX_SERIES_TERMS: Final = 80

# Closest approach of the imaginary-segment integration to pi/2
IMAG_ENDPOINT_GAP: Final = 1.0e-4

# c-function
WRONSKIAN_T_STAR: Final = 5.0
# Wronskian point of b on the real-line route, away from WRONSKIAN_T_STAR
REALLINE_T_STAR: Final = 3.0
LIMIT_T: Final = 40.0
POLE_GUARD: Final = 1.0e-3
MAX_GAMMA_TERMS: Final = 200
# Below this |lambda| downstream integrands use the grouped regular form instead of c(lambda)
SMALL_LAMBDA: Final = 0.25

# B family: the slowest term of B'/B - 2 * #roots is e^{-2t}
DELTA_DECAY: Final = 2.0
NEAR_ZERO_T: Final = 1.0e-3

# Sine-type function
TRUNCATION_N: Final = 400
TAIL_TERM_TOL: Final = 1.0e-15
ZERO_BRANCH_TOL: Final = 1.0e-10
N_RESIDUES_MIN: Final = 80
# Acceptance of the residue and S1 envelope estimates
RESIDUE_GROWTH_MAX: Final = 1.25
ENVELOPE_SPREAD_MAX: Final = 50.0

# Quadrature
GL_NODES: Final = 16
T_OUT_CAP: Final = 40.0
T_SWITCH: Final = 5.0


class CoefficientChoices(Enum):
    A = "A"
    A_tilde = "A_tilde"
    B = "B"
    logderiv_A = "logderiv_A"
    logderiv_A_tilde = "logderiv_A_tilde"


class LiouvilleChoices(Enum):
    q = "q"
    chi = "chi"
    G = "G"


class PathChoices(Enum):
    real_axis = "real_axis"
    imaginary_segment = "imaginary_segment"
    ray = "ray"


class CMethodChoices(Enum):
    wronskian = "wronskian"
    limit = "limit"


class BranchChoices(Enum):
    generic = "generic"
    zero_at_origin = "zero_at_origin"


class SymbolForms(Enum):
    exp_shift = "exp_shift"
    rational_damped = "rational_damped"
    vanishing_product = "vanishing_product"
    user_grid = "user_grid"


class OutputFormat(Enum):
    csv = "csv"
    json = "json"


class NumericalError(RuntimeError):
    """Raised when a numerical stage cannot reach its accuracy contract."""


class IntegrationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class OscillationError(NumericalError):
    pass


class CrossCheckError(NumericalError):
    pass


class RegimeError(NumericalError):
    pass
