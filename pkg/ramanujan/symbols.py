from dataclasses import dataclass, field
from logging import getLogger
from typing import Any, Callable, Dict, Optional, Sequence, Union

import numpy as np

from ramanujan.utils.constants import HALF_PI, SymbolForms


logger = getLogger(__name__)
ComplexLike = Union[complex, np.ndarray]
CR_STEP = 1e-5


@dataclass(frozen=True)
class Certificate:
    """|a(lambda)| <= C e^{-p Im lambda + A |Re lambda|} on Im lambda > -delta."""

    A_bound: float
    p: float
    delta: float

    def __post_init__(self) -> None:
        if not 0 <= self.A_bound < HALF_PI:
            raise ValueError(f"A_bound must lie in [0, pi/2), but got {self.A_bound}")
        if self.p <= 0:
            raise ValueError(f"p must be positive, but got {self.p}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], but got {self.delta}")

    def envelope(self, lam: np.ndarray) -> np.ndarray:
        return np.exp(-self.p * lam.imag + self.A_bound * np.abs(lam.real))


@dataclass(frozen=True)
class SymbolFunction:
    form: SymbolForms
    certificate: Certificate
    params: Dict[str, Any] = field(default_factory=dict)
    amplitude: float = 1.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0

    def __call__(self, lam: ComplexLike) -> ComplexLike:
        lams = np.atleast_1d(np.asarray(lam, dtype=complex))
        p = self.certificate.p
        if self.form == SymbolForms.exp_shift:
            values = np.exp(1j * p * lams)
        elif self.form == SymbolForms.rational_damped:
            values = np.exp(1j * p * lams) / (lams + 1j * self.params["offset"])
        elif self.form == SymbolForms.vanishing_product:
            values = np.exp(1j * p * lams)
            for node in self.params["nodes"]:
                values = values * (lams - node) / (lams - np.conj(node) + 1j)
        else:
            assert self.func is not None
            values = np.asarray(self.func(lams), dtype=complex)

        values = self.amplitude * values
        return values if np.ndim(lam) > 0 else complex(values[0])


def exp_shift(p: float = 1.0, delta: float = 1.0, amplitude: float = 1.0) -> SymbolFunction:
    """a(lambda) = e^{i p lambda}"""
    return SymbolFunction(SymbolForms.exp_shift, Certificate(0.0, p, delta), amplitude=amplitude)


def zero_symbol(p: float = 1.0, delta: float = 1.0) -> SymbolFunction:
    return exp_shift(p, delta, amplitude=0.0)


def rational_damped(p: float = 1.0, delta: float = 0.5, offset: Optional[float] = None) -> SymbolFunction:
    """a(lambda) = e^{i p lambda} / (lambda + i offset), offset = delta + 1 by default."""
    offset = delta + 1 if offset is None else offset
    if offset <= delta:
        raise ValueError(f"offset must exceed delta={delta} to keep the pole below the strip, but got {offset}")
    return SymbolFunction(SymbolForms.rational_damped, Certificate(0.0, p, delta), params=dict(offset=offset))


def vanishing_product(nodes: Sequence[complex], p: float = 1.0, delta: float = 0.5) -> SymbolFunction:
    """
    a(lambda) = e^{i p lambda} prod_k (lambda - w_k) / (lambda - conj(w_k) + i).

    The factors vanish at the nodes w_k (i mu_m or real beta_m), have their poles at
    conj(w_k) - i below the strip, and are bounded by 1 on Im lambda >= -1/2.
    """
    if delta > 0.5:
        raise ValueError(f"delta must be at most 0.5 for vanishing products, but got {delta}")
    nodes = tuple(complex(w) for w in nodes)
    if any(w.imag < 0 for w in nodes):
        raise ValueError(f"nodes must lie in the closed upper half-plane, but got {nodes}")
    return SymbolFunction(SymbolForms.vanishing_product, Certificate(0.0, p, delta), params=dict(nodes=nodes))


def user_grid(
    func: Callable[[np.ndarray], np.ndarray], A_bound: float, p: float, delta: float, check: bool = True
) -> SymbolFunction:
    """Wrap a user callable; holomorphy is checked by Cauchy-Riemann residuals unless check is False."""
    symbol = SymbolFunction(SymbolForms.user_grid, Certificate(A_bound, p, delta), func=func)
    if check:
        residual = cauchy_riemann_residual(symbol)
        if residual > 1e-4:
            raise ValueError(f"func must be holomorphic on Im lambda > -delta, but the CR residual is {residual}")
    return symbol


def build_symbol(form: Union[str, SymbolForms], **kwargs: Any) -> SymbolFunction:
    form = SymbolForms(form)
    if form == SymbolForms.exp_shift:
        return exp_shift(**kwargs)
    if form == SymbolForms.rational_damped:
        return rational_damped(**kwargs)
    if form == SymbolForms.vanishing_product:
        return vanishing_product(**kwargs)
    return user_grid(**kwargs)


def cauchy_riemann_residual(symbol: SymbolFunction, n_grid: int = 7) -> float:
    """Largest |d_x a - d_y a / i| relative to |a| on a small grid inside the strip."""
    delta = symbol.certificate.delta
    x, y = np.meshgrid(np.linspace(-3, 3, n_grid), np.linspace(-0.5 * delta, 2.0, n_grid))
    lam = (x + 1j * y).ravel()
    dx = (symbol(lam + CR_STEP) - symbol(lam - CR_STEP)) / (2 * CR_STEP)
    dy = (symbol(lam + 1j * CR_STEP) - symbol(lam - 1j * CR_STEP)) / (2j * CR_STEP)
    scale = np.maximum(np.abs(symbol(lam)), 1e-12) + np.abs(dx)
    return float(np.max(np.abs(dx - dy) / scale))


def check_certificate(symbol: SymbolFunction, x_max: float = 50.0, n_x: int = 401) -> Dict[str, float]:
    """
    Sample |a(lambda)| / e^{-p Im lambda + A |Re lambda|} on the boundary line Im lambda = -delta
    and on a few heights above it, |Re lambda| <= x_max.

    Returns:
        report (Dict[str, float]):
            constant, the largest sampled ratio, and boundary_constant, its value on the boundary line.
    """
    cert = symbol.certificate
    x = np.linspace(-x_max, x_max, n_x)
    heights = np.array([-cert.delta, 0.0, 0.5, 1.0, 2.0])
    lam = (x[np.newaxis] + 1j * heights[:, np.newaxis]).ravel()
    ratio = (np.abs(symbol(lam)) / cert.envelope(lam)).reshape(heights.size, x.size)
    if not np.all(np.isfinite(ratio)):
        raise ValueError(f"symbol must be finite on Im lambda >= -{cert.delta}, but got a non-finite value")

    report = dict(constant=float(ratio.max()), boundary_constant=float(ratio[0].max()))
    logger.info(f"Certificate check of {symbol.form.value}: {report}")
    return report
