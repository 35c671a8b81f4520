"""Periodic lattice on [0, 2pi)^d.

Fields throughout the package are plain ``numpy`` arrays of shape ``(n,)*d``
stored in C (row-major) order; the grid they live on is recoverable from the
shape alone via :func:`grid_of`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    d: int
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n > 4096 or (n & (n - 1)):
            raise ValueError(f"n must be a power of two in [8, 4096], got {n}")

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def volume(self) -> float:
        return TWO_PI**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell(self) -> float:
        """Quadrature weight h^d."""
        return self.h**self.d

    @cached_property
    def k1d(self) -> np.ndarray:
        # native FFT layout: 0, 1, ..., n/2-1, -n/2, ..., -1
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)

    @cached_property
    def kaxes(self) -> tuple[np.ndarray, ...]:
        """Per-axis integer wavenumbers, broadcastable against a field."""
        out = []
        for ax in range(self.d):
            shp = [1] * self.d
            shp[ax] = self.n
            out.append(self.k1d.reshape(shp))
        return tuple(out)

    @cached_property
    def ksq(self) -> np.ndarray:
        k2 = np.zeros(self.shape)
        for k in self.kaxes:
            k2 = k2 + k.astype(float) ** 2
        return k2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays x_1, ..., x_d of shape ``(n,)*d``."""
        x = np.arange(self.n) * self.h
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))


def make_grid(d: int, n: int) -> Grid:
    return Grid(int(d), int(n))


def grid_of(u: np.ndarray) -> Grid:
    """Grid implied by a field's shape."""
    u = np.asarray(u)
    if u.ndim not in (1, 2) or len(set(u.shape)) != 1:
        raise ValueError(f"field must be shaped (n,) or (n, n), got {u.shape}")
    return Grid(u.ndim, u.shape[0])


def sample_points(g: Grid) -> np.ndarray:
    """Row-major list of collocation points, shape ``(n**d, d)``."""
    return np.stack([x.ravel() for x in g.mesh()], axis=1)


def wavenumbers(g: Grid) -> np.ndarray:
    """Integer wavevectors in the forward transform's layout, shape ``(n**d, d)``."""
    ks = np.meshgrid(*([g.k1d] * g.d), indexing="ij")
    return np.stack([k.ravel() for k in ks], axis=1)
