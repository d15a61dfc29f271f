"""Homogeneous Littlewood-Paley decomposition on periodic grids.

The dyadic multipliers are built from the smooth step
``S(x) = f(x) / (f(x) + f(1 - x))`` with ``f(x) = exp(-1/x)`` on the
logarithmic frequency axis ``x = log2 |xi|``:

    phi_k(xi) = S(x - k + 1) - S(x - k)

Each ``phi_k`` is supported in ``2**(k-1) < |xi| < 2**(k+1)`` and the sum
over ``k`` telescopes to one away from the origin.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import UnresolvedBandError
from .grid import SpectralGrid


@dataclass(frozen=True)
class BandConstants:
    r0: float
    k0: int
    k1: int
    R0: float


def derive_band_constants(r0: float = 1 / 40) -> BandConstants:
    """``k0 = floor(log2 r0) - 1``; ``k1`` is the least positive integer with ``2**(2k1-4) > 25``."""
    k0 = math.floor(math.log2(r0)) - 1
    k1 = 1
    while not 2 ** (2 * k1 - 4) > 25:
        k1 += 1
    return BandConstants(r0=r0, k0=k0, k1=k1, R0=float(2 ** (k1 + 1)))


BAND_CONSTANTS = derive_band_constants()


def smooth_step(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        y = 1.0 - x
        g = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
        return f / (f + g)


def _log2_radius(kmag):
    kmag = np.asarray(kmag, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(kmag > 0, np.log2(np.where(kmag > 0, kmag, 1.0)), -np.inf)


def phi_hat(k: int, kmag) -> np.ndarray:
    x = _log2_radius(kmag)
    return np.where(np.isfinite(x), smooth_step(x - k + 1) - smooth_step(x - k), 0.0)


def low_multiplier(kmag, k0: int) -> np.ndarray:
    """Sum of ``phi_k`` for ``k < k0``."""
    x = _log2_radius(kmag)
    return np.where(np.isfinite(x), 1.0 - smooth_step(x - k0 + 1), 0.0)


def high_multiplier(kmag, k1: int) -> np.ndarray:
    """Sum of ``phi_k`` for ``k > k1``."""
    x = _log2_radius(kmag)
    return np.where(np.isfinite(x), smooth_step(x - k1), 0.0)


def resolved_range(grid: SpectralGrid) -> tuple[int, int]:
    """Lowest and highest ``k`` whose annulus contains at least one grid mode."""
    k_lo = math.floor(math.log2(grid.fundamental))
    if 2.0 ** (k_lo + 1) <= grid.fundamental:
        k_lo += 1
    k_hi = math.ceil(math.log2(grid.kmax))
    if 2.0 ** (k_hi - 1) >= grid.kmax:
        k_hi -= 1
    return k_lo, k_hi


def dyadic_project(field_hat: np.ndarray, grid: SpectralGrid, k: int) -> np.ndarray:
    k_lo, k_hi = resolved_range(grid)
    if not k_lo <= k <= k_hi:
        raise UnresolvedBandError(f"band k={k} outside the resolved range [{k_lo}, {k_hi}] of this grid")
    return field_hat * phi_hat(k, grid.kmag)


@dataclass
class BandDecomposition:
    components: dict
    low: np.ndarray
    medium: np.ndarray
    high: np.ndarray
    k_lo: int
    k_hi: int
    lumped_low: bool
    constants: BandConstants = field(default=BAND_CONSTANTS)


def band_split(field_hat: np.ndarray, grid: SpectralGrid, constants: BandConstants = BAND_CONSTANTS):
    """Long, medium and short wave parts; they sum to the input minus its mean."""
    kmag = grid.kmag
    lo = field_hat * low_multiplier(kmag, constants.k0)
    hi = field_hat * high_multiplier(kmag, constants.k1)
    mean_free = field_hat * (kmag > 0)
    return lo, mean_free - lo - hi, hi


def decompose(field_hat: np.ndarray, grid: SpectralGrid, constants: BandConstants = BAND_CONSTANTS) -> BandDecomposition:
    k_lo, k_hi = resolved_range(grid)
    comps = {k: field_hat * phi_hat(k, grid.kmag) for k in range(k_lo, k_hi + 1)}
    lo, me, hi = band_split(field_hat, grid, constants)
    return BandDecomposition(comps, lo, me, hi, k_lo, k_hi, constants.k0 < k_lo, constants)


def _band_range(band: str, k_lo: int, k_hi: int, constants: BandConstants) -> range:
    if band == "all":
        return range(k_lo, k_hi + 1)
    if band == "L":
        return range(k_lo, min(constants.k0 - 1, k_hi) + 1)
    if band == "M":
        return range(max(constants.k0, k_lo), min(constants.k1, k_hi) + 1)
    if band == "S":
        return range(max(constants.k1 + 1, k_lo), k_hi + 1)
    raise ValueError(f"band must be one of all, L, M, S; got {band!r}")


def besov_norm(field_hat: np.ndarray, grid: SpectralGrid, s: float, band: str = "all",
               constants: BandConstants = BAND_CONSTANTS) -> float:
    """``(sum_k 2**(2sk) ||Delta_k f||^2)**0.5`` over the band's resolved ``k``."""
    k_lo, k_hi = resolved_range(grid)
    power = np.abs(field_hat) ** 2
    if power.ndim > grid.dim:
        power = power.reshape(-1, *grid.shape).sum(axis=0)
    total = 0.0
    for k in _band_range(band, k_lo, k_hi, constants):
        total += 2.0 ** (2 * s * k) * grid.norm_weight * float(np.sum(phi_hat(k, grid.kmag) ** 2 * power))
    return math.sqrt(total)


@lru_cache(maxsize=16)
def _multi_indices(dim: int, order: int) -> tuple:
    return tuple(a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) <= order)


def derivative_weights(grid: SpectralGrid, order: int) -> tuple[tuple, np.ndarray]:
    """Multi-indices ``|alpha| <= order`` and the spectral weights ``prod xi_i**(2 alpha_i)``."""
    alphas = _multi_indices(grid.dim, order)
    k2 = grid.k ** 2
    W = np.empty((len(alphas),) + grid.shape)
    for n, a in enumerate(alphas):
        w = np.ones(grid.shape)
        for axis, p in enumerate(a):
            if p:
                w = w * k2[axis] ** p
        W[n] = w
    return alphas, W


def sobolev_norm(field_hat: np.ndarray, grid: SpectralGrid, k: int, weights: np.ndarray | None = None) -> float:
    """``sum_{|alpha| <= k} ||d^alpha f||_{L^2}``; vector fields are normed over components."""
    if k < 0:
        raise ValueError("Sobolev order must be >= 0")
    if weights is None:
        weights = derivative_weights(grid, k)[1]
    power = np.abs(field_hat) ** 2
    if power.ndim > grid.dim:
        power = power.reshape(-1, *grid.shape).sum(axis=0)
    per_alpha = grid.norm_weight * np.tensordot(weights, power, axes=grid.dim)
    return float(np.sum(np.sqrt(per_alpha)))


def overlap_constants(samples: int = 20001) -> tuple[float, float]:
    """Range of ``sum_k phi_k(xi)**2`` over ``xi != 0``.

    At most two neighbouring multipliers overlap and they sum to one, so the
    range lies in ``[1/2, 1]``; it is evaluated on one dyadic period.
    """
    x = np.linspace(0.0, 1.0, samples)
    a = smooth_step(x)
    total = a ** 2 + (1 - a) ** 2
    return float(total.min()), float(total.max())


def besov_l2_bracket() -> tuple[float, float]:
    """Bounds for ``||f||_{B^0_{2,2}} / ||f||_{L^2}`` implied by the chosen filter."""
    lo, hi = overlap_constants()
    return math.sqrt(lo), math.sqrt(hi)


def bernstein_constant(constants: BandConstants = BAND_CONSTANTS) -> float:
    """Lower edge of the support of the short-wave multiplier.

    ``S(x - k1)`` vanishes exactly for ``x <= k1``, so the edge is ``2**k1``
    and the filter tail slack relative to ``2**(k1 - 1)`` is zero.
    """
    return float(2.0 ** constants.k1)
