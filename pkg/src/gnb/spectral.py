"""Fourier-series transforms, multipliers, fractional Laplacians and
Littlewood-Paley / Sobolev seminorms on the periodic grid.

Convention: ``forward`` returns Fourier-series coefficients
``c_k = n^-d sum_j f(x_j) exp(-i k.x_j)``, so a multiplier's eigenvalue
statements hold exactly as written.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, grid_of

HERMITIAN_RTOL = 1e-12


def forward(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    g = grid_of(f)
    return np.fft.fftn(f) / g.size


def reflect(c: np.ndarray) -> np.ndarray:
    """Array indexed so that out[k] = c[-k] in FFT layout."""
    axes = tuple(range(c.ndim))
    return np.roll(np.flip(c, axis=axes), 1, axis=axes)


def hermitian_defect(c: np.ndarray) -> float:
    scale = max(np.abs(c).max(), np.finfo(float).tiny)
    return float(np.abs(c - np.conj(reflect(c))).max() / scale)


def inverse(c: np.ndarray, check: bool = True) -> np.ndarray:
    c = np.asarray(c)
    g = grid_of(c)
    if check:
        defect = hermitian_defect(c)
        if defect > HERMITIAN_RTOL:
            raise ValueError(f"coefficients are not Hermitian (defect {defect:.3e}); "
                             "state does not represent a real field")
    return np.fft.ifftn(c).real * g.size


def apply_multiplier(c: np.ndarray, m) -> np.ndarray:
    """Multiply coefficients by an even real symbol.

    ``m`` is either an array in transform layout or a callable taking the
    per-axis wavenumber arrays and returning such an array.
    """
    g = grid_of(c)
    if callable(m):
        m = m(*g.kaxes)
    m = np.broadcast_to(np.asarray(m, dtype=float), g.shape)
    if not np.all(np.isfinite(m)):
        raise ValueError("multiplier has non-finite entries")
    if not np.allclose(m, reflect(m), rtol=1e-14, atol=0.0):
        raise ValueError("multiplier is not even in k; realness would be lost")
    return c * m


def _check_order(s: float):
    if not (0.0 < s <= 1.0):
        raise ValueError(f"order s must lie in (0, 1], got {s}")


def frac_symbol(g: Grid, s: float) -> np.ndarray:
    """|k|^s with the k=0 entry equal to 0."""
    _check_order(s)
    return g.ksq ** (0.5 * s)


def frac_symbol_delta(g: Grid, s: float, delta: float) -> np.ndarray:
    """(1 - exp(-delta |k|^s)) / delta."""
    if not delta > 0:
        raise ValueError("delta must be positive; use frac_laplacian for delta = 0")
    return -np.expm1(-delta * frac_symbol(g, s)) / delta


def _filtered(f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(np.fft.fftn(f) * symbol).real


def frac_laplacian(f: np.ndarray, s: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return _filtered(f, frac_symbol(grid_of(f), s))


def frac_laplacian_delta(f: np.ndarray, s: float, delta: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return _filtered(f, frac_symbol_delta(grid_of(f), s, delta))


def derivative(f: np.ndarray, axis: int = 0) -> np.ndarray:
    """Spectral partial derivative; the Nyquist coefficient is dropped."""
    f = np.asarray(f, dtype=float)
    g = grid_of(f)
    if axis not in range(g.d):
        raise ValueError(f"axis {axis} invalid for d={g.d}")
    k = g.kaxes[axis]
    sym = np.where(k == -g.n // 2, 0.0, 1j * k)
    return np.fft.ifftn(np.fft.fftn(f) * sym).real


def gradient_norm(f: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean norm of the spectral gradient."""
    f = np.asarray(f, dtype=float)
    sq = sum(derivative(f, ax) ** 2 for ax in range(f.ndim))
    return np.sqrt(sq)


def dealias_mask(g: Grid) -> np.ndarray:
    """2/3-rule mask: keep modes with |k_i| <= n/3 on every axis."""
    keep = np.ones(g.shape, dtype=bool)
    for k in g.kaxes:
        keep = keep & (np.abs(k) <= g.n // 3)
    return keep


def project(f: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(np.fft.fftn(f) * mask).real


# -- Littlewood-Paley ------------------------------------------------------

def shell_index(g: Grid) -> np.ndarray:
    """Dyadic shell label of each mode; -1 for k = 0.

    Shell 0 holds 0 < |k| <= 1, shell j >= 1 holds 2^(j-1) < |k| <= 2^j.
    """
    kabs = g.kabs
    j = np.full(g.shape, -1, dtype=int)
    nz = kabs > 0
    # ceil(log2 |k|) with exact handling of powers of two
    j[nz] = np.maximum(0, np.ceil(np.log2(kabs[nz]) - 1e-12)).astype(int)
    return j


def lp_blocks(f: np.ndarray):
    """Yield ``(j, Delta_j f)`` for every non-empty dyadic shell."""
    f = np.asarray(f, dtype=float)
    g = grid_of(f)
    c = np.fft.fftn(f)
    labels = shell_index(g)
    for j in range(labels.max() + 1):
        mask = labels == j
        if mask.any():
            yield j, np.fft.ifftn(c * mask).real


def besov_seminorm(f: np.ndarray, r: float, q: float = np.inf) -> float:
    """Discrete homogeneous B^r_{inf,q} seminorm over sharp dyadic shells."""
    if q not in (1, np.inf):
        raise ValueError("q must be 1 or inf")
    terms = np.array([2.0 ** (j * r) * np.abs(block).max() for j, block in lp_blocks(f)])
    if terms.size == 0:
        return 0.0
    return float(terms.sum() if q == 1 else terms.max())


def sobolev_seminorm(f: np.ndarray, sigma: float) -> float:
    """Homogeneous H^sigma seminorm, (2pi)^d sum_{k != 0} |k|^{2 sigma} |c_k|^2."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    f = np.asarray(f, dtype=float)
    g = grid_of(f)
    c = forward(f)
    w = g.ksq**sigma
    w.flat[0] = 0.0
    return float(np.sqrt(g.volume * np.sum(w * np.abs(c) ** 2)))


def inner(f: np.ndarray, g_: np.ndarray) -> float:
    """Discrete L2 inner product h^d sum f g."""
    return float(grid_of(f).cell * np.sum(f * g_))
