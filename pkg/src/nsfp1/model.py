"""Perturbation state, model parameters, nonlinear terms and Helmholtz split.

The unknowns are the deviations ``(rho, u, theta, n0, n1)`` from the
equilibrium ``(1, 0, 1, 1, 0)`` of the Navier-Stokes-Fourier-P1 system with
all transport coefficients normalised to one.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import RepresentationError, ShapeMismatchError, VacuumError
from .grid import SpectralGrid

EPS_VAC = 1e-6

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class ModelParams:
    c_v: float = 1.0
    R: float = 1.0
    mu: float = 1.0
    lam: float = 1.0
    kappa: float = 1.0
    dimension: int = 3

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ValueError(f"dimension must be 1 or 3, got {self.dimension}")
        if not (self.mu > 0 and self.kappa > 0 and self.c_v > 0 and self.R > 0):
            raise ValueError("mu, kappa, c_v and R must be positive")
        if 3 * self.lam + 2 * self.mu < 0:
            raise ValueError("need 3*lambda + 2*mu >= 0")

    @property
    def normalized(self) -> bool:
        return (self.c_v, self.R, self.mu, self.lam, self.kappa) == (1, 1, 1, 1, 1)


@dataclass
class PerturbationState:
    """The five perturbation fields on a common grid.

    Vector fields carry their components on the leading axis, so ``u`` has
    shape ``(dim, *grid_shape)``.
    """

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise RepresentationError(f"unknown representation {self.representation!r}")
        shape = np.shape(self.rho)
        dim = len(shape)
        for name in ("theta", "n0"):
            if np.shape(getattr(self, name)) != shape:
                raise ShapeMismatchError(f"{name} has shape {np.shape(getattr(self, name))}, expected {shape}")
        for name in ("u", "n1"):
            if np.shape(getattr(self, name)) != (dim, *shape):
                raise ShapeMismatchError(
                    f"{name} has shape {np.shape(getattr(self, name))}, expected {(dim, *shape)}"
                )

    @property
    def dim(self) -> int:
        return np.ndim(self.rho)

    @property
    def shape(self) -> tuple[int, ...]:
        return np.shape(self.rho)

    @classmethod
    def zeros(cls, grid: SpectralGrid, representation: str = PHYSICAL) -> "PerturbationState":
        dtype = complex if representation == SPECTRAL else float
        s, d = grid.shape, grid.dim
        return cls(np.zeros(s, dtype), np.zeros((d, *s), dtype), np.zeros(s, dtype),
                   np.zeros(s, dtype), np.zeros((d, *s), dtype), representation)

    def pack(self) -> np.ndarray:
        """Stack into one array of ``3 + 2*dim`` channels: rho, u.., theta, n0, n1.."""
        return np.concatenate([self.rho[None], self.u, self.theta[None], self.n0[None], self.n1])

    @classmethod
    def unpack(cls, data: np.ndarray, representation: str) -> "PerturbationState":
        dim = (data.shape[0] - 3) // 2
        return cls(data[0], data[1:1 + dim], data[1 + dim], data[2 + dim], data[3 + dim:], representation)

    def to_spectral(self, grid: SpectralGrid) -> "PerturbationState":
        if self.representation == SPECTRAL:
            return self
        return PerturbationState.unpack(grid.forward(self.pack()), SPECTRAL)

    def to_physical(self, grid: SpectralGrid) -> "PerturbationState":
        if self.representation == PHYSICAL:
            return self
        return PerturbationState.unpack(grid.inverse(self.pack()), PHYSICAL)

    def scaled(self, factor: float) -> "PerturbationState":
        return PerturbationState.unpack(factor * self.pack(), self.representation)

    def with_fields(self, **fields) -> "PerturbationState":
        return replace(self, **fields)


@dataclass
class NonlinearTerms:
    N1: np.ndarray
    N2: np.ndarray
    N3: np.ndarray
    N4: np.ndarray


@dataclass
class HelmholtzSplit:
    """Potential parts ``d``, ``M`` and divergence-free parts of ``u`` and ``n1`` (spectral)."""

    d: np.ndarray
    M: np.ndarray
    u_transverse: np.ndarray
    n1_transverse: np.ndarray


def _check_density(rho, guard=0.0):
    rho = np.asarray(rho, dtype=float)
    if np.any(1.0 + rho <= guard):
        raise VacuumError(f"1 + rho reached {float(np.min(1.0 + rho)):.3e} (vacuum)")
    return rho


def g_of_rho(rho):
    """``1/(1+rho) - 1``."""
    rho = _check_density(rho)
    return 1.0 / (1.0 + rho) - 1.0


def h_of_rho(rho):
    """``1/(1+rho)``."""
    rho = _check_density(rho)
    return 1.0 / (1.0 + rho)


def nonlinear_spectral(state_hat: PerturbationState, grid: SpectralGrid, dealias: bool = True) -> NonlinearTerms:
    """Nonlinear terms from a spectral state, returned as spectra.

    Inputs are truncated by the 2/3 rule before the pointwise products are
    formed and the resulting spectra are truncated again.
    """
    if state_hat.representation != SPECTRAL:
        raise RepresentationError("nonlinear_spectral expects a spectral state")
    if state_hat.shape != grid.shape:
        raise ShapeMismatchError(f"state shape {state_hat.shape} does not match grid {grid.shape}")
    mask = grid.dealias_mask if dealias else np.ones(grid.shape, bool)
    dim = grid.dim
    ik = 1j * grid.k
    phys = grid.inverse

    rho_h = state_hat.rho * mask
    u_h = state_hat.u * mask
    th_h = state_hat.theta * mask
    n0_h = state_hat.n0 * mask
    n1_h = state_hat.n1 * mask

    fields = phys(np.concatenate([rho_h[None], u_h, th_h[None], n0_h[None], n1_h]))
    rho, u = fields[0], fields[1:1 + dim]
    theta, n0, n1 = fields[1 + dim], fields[2 + dim], fields[3 + dim:]
    if np.any(1.0 + rho <= EPS_VAC):
        raise VacuumError(f"1 + rho reached {float(np.min(1.0 + rho)):.3e} (vacuum guard {EPS_VAC})")

    div_u_h = np.sum(ik * u_h, axis=0)
    derivs = phys(np.concatenate([
        ik * rho_h,                                     # grad rho
        (ik[None, :] * u_h[:, None]).reshape(dim * dim, *grid.shape),  # du[i, j] = d_j u_i
        -grid.k2 * u_h,                                 # lap u
        ik * div_u_h,                                   # grad div u
        ik * th_h,                                      # grad theta
        (-grid.k2 * th_h)[None],                        # lap theta
    ]))
    o = 0
    grad_rho = derivs[o:o + dim]; o += dim
    du = derivs[o:o + dim * dim].reshape(dim, dim, *grid.shape); o += dim * dim
    lap_u = derivs[o:o + dim]; o += dim
    grad_div_u = derivs[o:o + dim]; o += dim
    grad_theta = derivs[o:o + dim]; o += dim
    lap_theta = derivs[o]

    h = 1.0 / (1.0 + rho)
    g = h - 1.0
    div_u = np.einsum("ii...->...", du)
    strain = 0.5 * (du + np.swapaxes(du, 0, 1))
    DD = np.sum(strain ** 2, axis=(0, 1))
    th2 = theta * theta
    radiative = th2 * th2 + 4 * th2 * theta + 6 * th2

    N1 = -rho * div_u - np.sum(grad_rho * u, axis=0)
    advect_u = np.einsum("j...,ij...->i...", u, du)
    N2 = -advect_u - (g + h * theta) * grad_rho + g * (lap_u + 2 * grad_div_u + n1)
    N3 = (g * (lap_theta + n0 - 4 * theta) - theta * div_u - np.sum(u * grad_theta, axis=0)
          + h * (div_u ** 2 + 2 * DD - radiative))
    N4 = radiative

    out = grid.forward(np.concatenate([N1[None], N2, N3[None], N4[None]])) * mask
    return NonlinearTerms(out[0], out[1:1 + dim], out[1 + dim], out[2 + dim])


def eval_nonlinear(state: PerturbationState, params: ModelParams, grid: SpectralGrid,
                   dealias: bool = True) -> NonlinearTerms:
    """Nonlinear terms ``N1..N4`` in physical space for a physical state."""
    if state.representation != PHYSICAL:
        raise RepresentationError("eval_nonlinear expects a physical state")
    if not params.normalized:
        raise ValueError("the nonlinear terms are defined for unit transport coefficients only")
    if params.dimension != grid.dim:
        raise ShapeMismatchError(f"params dimension {params.dimension} != grid dimension {grid.dim}")
    if state.shape != grid.shape:
        raise ShapeMismatchError(f"state shape {state.shape} does not match grid {grid.shape}")
    _check_density(state.rho, EPS_VAC)
    terms = nonlinear_spectral(state.to_spectral(grid), grid, dealias)
    inv = grid.inverse
    return NonlinearTerms(inv(terms.N1), inv(terms.N2), inv(terms.N3), inv(terms.N4))


def helmholtz_split(field_hat: np.ndarray, grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    """Split a spectral vector field into ``Lambda^{-1} div`` and a divergence-free part.

    The zero mode belongs to the transverse part. In one dimension the
    transverse part therefore only carries the mean.
    """
    e = grid.unit_k
    potential = 1j * np.sum(e * field_hat, axis=0)
    transverse = field_hat + 1j * e * potential
    return potential, transverse


def helmholtz_reconstruct(potential: np.ndarray, transverse: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Inverse of :func:`helmholtz_split`: ``-Lambda^{-1} grad d + transverse``."""
    return -1j * grid.unit_k * potential + transverse


def split_state(state_hat: PerturbationState, grid: SpectralGrid) -> HelmholtzSplit:
    if state_hat.representation != SPECTRAL:
        raise RepresentationError("split_state expects a spectral state")
    d, ut = helmholtz_split(state_hat.u, grid)
    M, nt = helmholtz_split(state_hat.n1, grid)
    return HelmholtzSplit(d, M, ut, nt)


def reconstruct(split: HelmholtzSplit, grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    """Recover ``(u, n1)`` spectra from their Helmholtz parts."""
    return (helmholtz_reconstruct(split.d, split.u_transverse, grid),
            helmholtz_reconstruct(split.M, split.n1_transverse, grid))
