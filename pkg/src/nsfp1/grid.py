"""Periodic spectral grids.

Spectral arrays use the unnormalised numpy convention ``F = fftn(f)``; the
Plancherel weight ``L**d / N**(2d)`` turns sums over modes into physical
``L^2`` norms, so norms are stable under grid refinement.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid with ``n`` points per axis on a box of side ``length``."""

    dim: int
    n: int
    length: float = 2 * np.pi
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def fundamental(self) -> float:
        return 2 * np.pi / self.length

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers, shape ``(dim, *shape)``."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64)
        return np.stack(np.meshgrid(*([m] * self.dim), indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Wave vectors, shape ``(dim, *shape)``."""
        return self.fundamental * self.mode_index

    @cached_property
    def shell(self) -> np.ndarray:
        """Integer shell label ``sum(m_i**2)``; modes on one shell share ``|k|``."""
        return (self.mode_index ** 2).sum(axis=0)

    @cached_property
    def k2(self) -> np.ndarray:
        return self.fundamental ** 2 * self.shell

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def unit_k(self) -> np.ndarray:
        """``k/|k|`` with the zero mode mapped to the zero vector."""
        with np.errstate(invalid="ignore", divide="ignore"):
            e = np.where(self.kmag > 0, self.k / self.kmag, 0.0)
        return e

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.mode_index) <= self.n // 3
        return np.all(keep, axis=0)

    @property
    def kmax(self) -> float:
        return float(self.kmag.max())

    @property
    def norm_weight(self) -> float:
        return self.length ** self.dim / float(self.n) ** (2 * self.dim)

    @property
    def coords(self) -> np.ndarray:
        x = np.arange(self.n) * (self.length / self.n)
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def forward(self, f: np.ndarray) -> np.ndarray:
        return sfft.fftn(f, axes=self.axes, workers=self.workers)

    def inverse(self, F: np.ndarray) -> np.ndarray:
        return sfft.ifftn(F, axes=self.axes, workers=self.workers).real

    def l2_norm(self, F: np.ndarray) -> float:
        """Physical L^2 norm of a spectral field (vector fields: leading axes summed)."""
        return float(np.sqrt(self.norm_weight * np.sum(np.abs(F) ** 2)))

    def reflect(self, F: np.ndarray) -> np.ndarray:
        """``F(-k)`` on the discrete grid."""
        out = np.flip(F, axis=self.axes)
        return np.roll(out, 1, axis=self.axes)

    def hermitian_defect(self, F: np.ndarray) -> float:
        """Relative size of ``F(k) - conj(F(-k))``; zero for spectra of real fields."""
        scale = np.max(np.abs(F))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(F - np.conj(self.reflect(F)))) / scale)
