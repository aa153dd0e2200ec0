from dataclasses import dataclass
from logging import getLogger
from typing import Dict, Optional, Tuple, Union

import numpy as np

from scipy.special import loggamma, zeta

from ramanujan.cfunc import eval_c_grid
from ramanujan.model import Model
from ramanujan.spectrum import EigenData, asymptotic_coefficient
from ramanujan.utils.constants import (
    N_RESIDUES_MIN,
    TAIL_TERM_TOL,
    TRUNCATION_N,
    ZERO_BRANCH_TOL,
    BranchChoices,
    ConvergenceError,
    CrossCheckError,
)


logger = getLogger(__name__)
ComplexLike = Union[complex, np.ndarray]
TAIL_BLOCK = 4096
MAX_TAIL_TERMS = 2**20
Z_CHUNK = 256


@dataclass(frozen=True)
class SineTypeData:
    """
    S(z) = pi z^p prod_n (1 + z^2 / mu_n^2), p = 1 (generic) or 3 (zero at the origin).

    mus holds the zeros of the head product (indices n0..truncation_N, the origin excluded).
    Zeros past n_computed follow mu_n = spacing * n + offset + kappa1 / n, and so does
    the infinite tail past truncation_N.
    """

    mus: np.ndarray
    indices: np.ndarray
    n_computed: int
    branch: BranchChoices
    residues: np.ndarray
    truncation_N: int
    spacing: float
    offset: float
    kappa1: float
    n0: int
    correction_indices: np.ndarray
    correction_nodes: np.ndarray
    correction_weights: np.ndarray

    @property
    def power(self) -> int:
        return 3 if self.branch == BranchChoices.zero_at_origin else 1

    @property
    def residue_indices(self) -> np.ndarray:
        return self.indices[: self.residues.size]


def _asymptotic_zeros(n: np.ndarray, spacing: float, offset: float, kappa1: float) -> np.ndarray:
    return spacing * n + offset + kappa1 / n


def _log_tail(data: SineTypeData, z: np.ndarray) -> np.ndarray:
    """log prod_{n > N} (1 + z^2 / mu_n^2): closed form for the kappa1 = 0 zeros, plus the log-ratio sum."""
    s, r, k1 = data.spacing, data.offset, data.kappa1
    first = int(data.indices[-1]) + 1
    b = first + r / s
    x = z / s
    log_tail = 2 * loggamma(b) - loggamma(b + 1j * x) - loggamma(b - 1j * x)
    if k1 == 0:
        return log_tail

    z2 = z[:, np.newaxis] ** 2
    total = np.zeros(z.shape, dtype=complex)
    previous: Optional[np.ndarray] = None
    start = first
    while start - first < MAX_TAIL_TERMS:
        n = np.arange(start, start + TAIL_BLOCK, dtype=float)
        m = s * n + r
        mu = m + k1 / n
        total = total + np.sum(np.log1p(z2 * (m**2 - mu**2) / (mu**2 * (m**2 + z2))), axis=1)
        # the remaining terms behave as -2 k1 z^2 / (s^3 n^4)
        estimate = total - 2 * k1 * z**2 / s**3 * zeta(4, start + TAIL_BLOCK)
        tail_tol = TAIL_TERM_TOL * (1 + np.max(np.abs(estimate)))
        if previous is not None and np.max(np.abs(estimate - previous)) < tail_tol:
            return log_tail + estimate
        previous = estimate
        start += TAIL_BLOCK

    raise ConvergenceError(f"The tail correction of S did not converge within {MAX_TAIL_TERMS} terms")


def _log_product(data: SineTypeData, z: np.ndarray) -> np.ndarray:
    """log of prod_n (1 + z^2/mu_n^2) over head and tail; any branch, only its exponential is used."""
    out = np.zeros(z.shape, dtype=complex)
    for start in range(0, z.size, Z_CHUNK):
        chunk = z[start : start + Z_CHUNK]
        head = np.sum(np.log(1 + (chunk[:, np.newaxis] / data.mus[np.newaxis]) ** 2 + 0j), axis=1)
        out[start : start + Z_CHUNK] = head + _log_tail(data, chunk)
    return out


def sine_S(data: SineTypeData, z: ComplexLike) -> ComplexLike:
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    values = np.pi * z_arr**data.power * np.exp(_log_product(data, z_arr))
    return values if np.ndim(z) > 0 else complex(values[0])


def S1(data: SineTypeData, z: ComplexLike) -> ComplexLike:
    """z^2 / S(z)"""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    with np.errstate(divide="ignore", invalid="ignore"):
        values = z_arr ** (2 - data.power) * np.exp(-_log_product(data, z_arr)) / np.pi
    return values if np.ndim(z) > 0 else complex(values[0])


def _removed_products(data: SineTypeData, count: int) -> np.ndarray:
    """R_k = prod_{n != k} (1 - mu_k^2 / mu_n^2), tail included, for the first count head zeros."""
    mu_k = data.mus[:count]
    ratio = 1 - (mu_k[:, np.newaxis] / data.mus[np.newaxis]) ** 2
    np.fill_diagonal(ratio, 1.0)
    return np.exp(np.sum(np.log(ratio + 0j), axis=1) + _log_tail(data, 1j * mu_k))


def _product_residues(data: SineTypeData, count: int) -> np.ndarray:
    """Residues of z^2 / S at i mu_k from the differentiated product."""
    removed = _removed_products(data, count)
    if data.branch == BranchChoices.zero_at_origin:
        return -1 / (2 * np.pi * removed)
    return data.mus[:count] ** 2 / (2 * np.pi * removed)


def _assemble(
    head_mus: np.ndarray,
    head_indices: np.ndarray,
    n_computed: int,
    branch: BranchChoices,
    spacing: float,
    offset: float,
    kappa1: float,
    n_residues: int,
    n0: int,
    corrections: Tuple[np.ndarray, np.ndarray, np.ndarray],
) -> SineTypeData:
    draft = SineTypeData(
        mus=head_mus,
        indices=head_indices,
        n_computed=n_computed,
        branch=branch,
        residues=np.zeros(0, dtype=complex),
        truncation_N=int(head_indices[-1]),
        spacing=spacing,
        offset=offset,
        kappa1=kappa1,
        n0=n0,
        correction_indices=corrections[0],
        correction_nodes=corrections[1],
        correction_weights=corrections[2],
    )
    count = int(np.sum(head_indices <= n_residues))
    residues = _product_residues(draft, count)
    return SineTypeData(**{**draft.__dict__, "residues": residues})


def synthetic_sine_type(
    mus: np.ndarray,
    first_index: int = 1,
    spacing: float = 1.0,
    offset: float = 0.0,
    kappa1: float = 0.0,
    branch: Union[str, BranchChoices] = BranchChoices.generic,
) -> SineTypeData:
    """Sine-type data from given positive zeros mu_{first_index}, ...; the tail continues spacing * n + offset."""
    mus = np.asarray(mus, dtype=float)
    if np.any(mus <= 0) or np.any(np.diff(mus) <= 0):
        raise ValueError(f"mus must be positive and strictly increasing, but got {mus.tolist()}")

    branch = BranchChoices(branch)
    indices = first_index + np.arange(mus.size)
    # on the zero branch the origin carries index n0 and mus starts right after it
    n0 = first_index - 1 if branch == BranchChoices.zero_at_origin else first_index
    empty = (np.zeros(0, dtype=int), np.zeros(0, dtype=complex), np.zeros(0, dtype=complex))
    return _assemble(mus, indices, int(indices[-1]), branch, spacing, offset, kappa1, int(indices[-1]), n0, empty)


def _correction_terms(
    base: SineTypeData, eigendata: EigenData
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Nodes and weights of the eigenvalues below n0: residues of z^2 / S_ext with
    S_ext(z) = S(z) prod_{m < n0} (1 + z^2 / (nu_m + rho^2)), at i mu_m (m0 < m < n0) or beta_m (m <= m0).
    """
    shifted = eigendata.shifted_nus[: eigendata.n0]
    if shifted.size == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=complex), np.zeros(0, dtype=complex)

    nodes = np.where(shifted > 0, 1j * np.sqrt(np.abs(shifted)), np.sqrt(np.abs(shifted)) + 0j)
    s_values = np.atleast_1d(sine_S(base, nodes))
    weights = np.zeros(shifted.size, dtype=complex)
    for m, node in enumerate(nodes):
        others = np.delete(np.arange(shifted.size), m)
        rest = np.prod(1 + node**2 / shifted[others]) if others.size > 0 else 1.0
        if shifted[m] > 0:
            mu = node.imag
            weights[m] = 1j * mu**3 / (2 * s_values[m] * rest)
        else:
            beta = node.real
            weights[m] = -(beta**3) / (2 * s_values[m] * rest)

    return np.arange(shifted.size), nodes, weights


def build_sine_type(
    model: Model, eigendata: EigenData, truncation_N: int = TRUNCATION_N, n_residues: Optional[int] = None
) -> SineTypeData:
    """
    Build S from the computed spectrum.

    Args:
        model (Model): The model the spectrum belongs to.
        eigendata (EigenData): nu_0..nu_{n_max}.
        truncation_N (int): The last zero of the explicit product.
        n_residues (Optional[int]): Residues are computed for n0 <= n <= n_residues; default max(n_max, 80).

    Returns:
        sinedata (SineTypeData): Zeros, branch, residues and the weights of the eigenvalues below n0.
    """
    n_max, n0 = eigendata.n_max, eigendata.n0
    if truncation_N < n_max:
        raise ValueError(f"truncation_N must be >= n_max={n_max}, but got {truncation_N}")
    if n0 > n_max:
        raise ValueError(f"n_max must reach n0={n0}, but got {n_max}")

    n_residues = max(n_max, N_RESIDUES_MIN) if n_residues is None else n_residues
    n_residues = min(n_residues, truncation_N)
    shifted = eigendata.shifted_nus
    is_zero = abs(shifted[n0]) <= ZERO_BRANCH_TOL * max(1.0, model.rho**2)
    branch = BranchChoices.zero_at_origin if is_zero else BranchChoices.generic
    first = n0 + 1 if is_zero else n0

    kappa1 = asymptotic_coefficient(model)
    computed = np.sqrt(shifted[first : n_max + 1])
    extra = np.arange(n_max + 1, truncation_N + 1, dtype=float)
    head_mus = np.concatenate([computed, _asymptotic_zeros(extra, 2.0, model.rho_0, kappa1)])
    head_indices = np.arange(first, truncation_N + 1)

    empty = (np.zeros(0, dtype=int), np.zeros(0, dtype=complex), np.zeros(0, dtype=complex))
    base = _assemble(head_mus, head_indices, n_max, branch, 2.0, model.rho_0, kappa1, n_residues, n0, empty)
    indices, nodes, weights = _correction_terms(base, eigendata)
    data = SineTypeData(
        **{**base.__dict__, "correction_indices": indices, "correction_nodes": nodes, "correction_weights": weights}
    )
    logger.info(
        f"Built S with branch={branch.value}, n0={n0}, {head_mus.size} head zeros, "
        f"{data.residues.size} residues, {indices.size} correction terms"
    )
    return data


def _M(data: SineTypeData, z: np.ndarray) -> np.ndarray:
    """S(iz) / (pi z) on the generic branch, S(iz) / z^3 on the zero branch."""
    scale = 1j if data.branch == BranchChoices.generic else -1j * np.pi
    return scale * np.exp(_log_product(data, 1j * z))


def residue_d(data: SineTypeData, n: int, rtol: float = 1e-7) -> complex:
    """
    d_n, the residue of S1 at i mu_n.

    The stored value from the differentiated product is cross-checked against
    mu^2 / (i pi mu M'(mu)) (generic) or 1 / (i mu M'(mu)) (zero branch) with M' from a
    5-point stencil along the imaginary direction.
    """
    if n == data.n0 and data.branch == BranchChoices.zero_at_origin:
        raise ValueError(f"the zero at the origin has no residue of the form d_n, but got n={n}")
    positions = np.flatnonzero(data.residue_indices == n)
    if positions.size == 0:
        raise ValueError(f"n must lie in [{data.residue_indices[0]}, {data.residue_indices[-1]}], but got {n}")

    k = int(positions[0])
    mu = data.mus[k]
    h = 1e-6 * (1 + mu)
    stencil = mu + 1j * h * np.array([2.0, 1.0, -1.0, -2.0])
    m_values = _M(data, stencil)
    m_prime = (-m_values[0] + 8 * m_values[1] - 8 * m_values[2] + m_values[3]) / (12 * 1j * h)
    if data.branch == BranchChoices.zero_at_origin:
        d_stencil = 1 / (1j * mu * m_prime)
    else:
        d_stencil = mu**2 / (1j * np.pi * mu * m_prime)

    d_product = data.residues[k]
    gap = abs(d_stencil - d_product) / abs(d_product)
    if gap > rtol:
        raise CrossCheckError(f"residue methods must agree to {rtol}, but got {d_stencil} vs {d_product} for n={n}")
    return complex(d_product)


def b_eval(
    model: Model, data: SineTypeData, lam: ComplexLike, tol: float = 1e-10, t_star: Optional[float] = None
) -> ComplexLike:
    """b(lambda) = c(lambda) c(-lambda) S1(lambda), with c from Wronskians at t_star when given"""
    lams = np.atleast_1d(np.asarray(lam, dtype=complex))
    poles = 1j * np.concatenate([data.mus, -data.mus])
    if np.any(np.min(np.abs(lams[:, np.newaxis] - poles[np.newaxis]), axis=1) < 1e-8):
        raise ValueError(f"lambda must avoid the poles +-i mu_n of S1, but got {lams.tolist()}")

    c_values, _ = eval_c_grid(model, np.concatenate([lams, -lams]), tol=tol, t_star=t_star)
    values = c_values[: lams.size] * c_values[lams.size :] * np.atleast_1d(S1(data, lams))
    return values if np.ndim(lam) > 0 else complex(values[0])


def decay_envelope(
    data: SineTypeData, x_max: float = 30.0, y_max: float = 3.0, n_x: int = 121, n_y: int = 13
) -> Tuple[float, float]:
    """
    Range of |S1(z)| e^{pi |x| / 2} / (1 + |z|)^{rho_0} over the grid |x| <= x_max, |y| <= y_max.

    For rho_0 = 2 this is the (1 + |z|^2) envelope up to a bounded factor.
    Points with |z| < 1 or within 0.25 of a pole are left out.
    """
    x, y = np.meshgrid(np.linspace(-x_max, x_max, n_x), np.linspace(-y_max, y_max, n_y))
    z = (x + 1j * y).ravel()
    poles = 1j * np.concatenate([data.mus, -data.mus])
    keep = (np.abs(z) >= 1) & (np.min(np.abs(z[:, np.newaxis] - poles[np.newaxis]), axis=1) >= 0.25)
    z = z[keep]
    ratio = np.abs(S1(data, z)) * np.exp(np.pi * np.abs(z.real) / 2) / (1 + np.abs(z)) ** data.offset
    return float(np.min(ratio)), float(np.max(ratio))


def residue_bound_ratios(data: SineTypeData) -> Dict[str, np.ndarray]:
    """
    |d_n| / mu_n^{rho_0} and |d_n| / (nu_n + rho^2) for every stored residue.

    |d_n| grows like mu_n^{rho_0}, so only the first ratio stays bounded in general.
    The two ratios coincide when rho_0 = 2.
    """
    mus = data.mus[: data.residues.size]
    return dict(
        n=data.residue_indices,
        mu=mus,
        power_ratio=np.abs(data.residues) / mus**data.offset,
        spectral_ratio=np.abs(data.residues) / mus**2,
    )


def residue_ratio_growth(data: SineTypeData, n_lo: int = 5, n_hi: int = 60, key: str = "power_ratio") -> float:
    """Largest ratio over the upper half of [n_lo, n_hi] divided by the largest over the lower half."""
    ratios = residue_bound_ratios(data)
    n = ratios["n"]
    window = (n >= n_lo) & (n <= n_hi)
    if np.count_nonzero(window) < 4:
        raise ValueError(f"[{n_lo}, {n_hi}] must hold at least 4 stored residues, but got {np.count_nonzero(window)}")

    values, middle = ratios[key][window], (n_lo + n_hi) / 2
    lower, upper = values[n[window] <= middle], values[n[window] > middle]
    return float(np.max(upper) / np.max(lower))
