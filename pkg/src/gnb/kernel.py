"""Real-space kernels of the fractional Laplacian on the torus.

K^s(z) = c_{d,s} |z|^{-d-s} is periodized by summing over the lattice
2 pi Z^d.  Tables are indexed by grid displacement (same layout as a field);
the z = 0 entry is the singular cell and is stored as 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .grid import TWO_PI, Grid
from .nonlinearity import Nonlinearity, fprime_bounds
from .spectral import reflect

DEFAULT_J = 20
DEFAULT_NQ = 16


def cds(d: int, s: float) -> float:
    """Normalization making p.v. int (f(x)-f(y)) c|x-y|^{-d-s} dy have symbol |xi|^s."""
    if d not in (1, 2):
        raise ValueError("d must be 1 or 2")
    if not (0.0 < s <= 1.0):
        raise ValueError(f"s must lie in (0, 1], got {s}")
    return float(2.0**s * special.gamma(0.5 * (d + s))
                 / (np.pi ** (0.5 * d) * abs(special.gamma(-0.5 * s))))


def _reject_s1(s: float):
    if s >= 1.0:
        raise ValueError("s = 1 needs a Hadamard finite-part quadrature, which is not "
                         "provided; use the spectral evaluator at s = 1")
    if not s > 0:
        raise ValueError(f"s must lie in (0, 1), got {s}")


def min_image(g: Grid) -> tuple[np.ndarray, ...]:
    """Displacement coordinates of each table entry, mapped into [-pi, pi)."""
    z = g.k1d * g.h  # index j -> j h for j < n/2, (j - n) h otherwise
    return tuple(np.meshgrid(*([z] * g.d), indexing="ij"))


def _lattice(d: int, J: int) -> np.ndarray:
    r = np.arange(-J, J + 1)
    return np.stack([a.ravel() for a in np.meshgrid(*([r] * d), indexing="ij")], axis=1)


def _tail_bound(d: int, s: float, J: int) -> float:
    """Upper bound (without c_{d,s}) on sum_{|j|_inf > J} |z + 2 pi j|^{-d-s}, |z|_inf <= pi."""
    # shell m = |j|_inf has 2 (d = 1) or 8m (d = 2) points, each at distance >= 2 pi (m - 1/2)
    if d == 1:
        return 2.0 / TWO_PI * (TWO_PI * (J - 0.5)) ** (-s) / s
    val, _ = integrate.quad(lambda t: 8.0 * t * (TWO_PI * (t - 0.5)) ** (-2.0 - s), J, np.inf)
    return val


def _tail_estimate(g: Grid, s: float, J: int, zs) -> np.ndarray:
    """Estimate (without c_{d,s}) of the dropped lattice shells at each displacement."""
    if g.d == 1:
        # exact via the Hurwitz zeta function
        a = zs[0] / TWO_PI
        p = 1.0 + s
        return TWO_PI ** (-p) * (special.zeta(p, J + 1 + a) + special.zeta(p, J + 1 - a))
    # cell-averaged integral of |y|^{-2-s} outside the square of half-width 2pi(J + 1/2)
    R = TWO_PI * (J + 0.5)
    ang, _ = integrate.quad(lambda th: np.cos(th) ** s, 0.0, np.pi / 4)
    outside = 8.0 * R ** (-s) / s * ang
    return np.full(g.shape, outside / TWO_PI**2)


@dataclass(frozen=True)
class KernelTable:
    grid: Grid
    s: float
    values: np.ndarray          # truncated lattice sum, includes c_{d,s}
    J: int
    tail_bound: float           # bound on the dropped shells, includes c_{d,s}
    tail: np.ndarray = field(repr=False)  # estimate of the dropped shells
    corrected: bool = True
    singular_index: tuple = ()

    @property
    def c(self) -> float:
        return cds(self.grid.d, self.s)

    @cached_property
    def effective(self) -> np.ndarray:
        """Table used by the quadrature evaluators."""
        out = self.values + self.tail if self.corrected else self.values.copy()
        out[self.singular_index] = 0.0
        return out

    @cached_property
    def shape_only(self) -> np.ndarray:
        """Periodized |z|^{-d-s} without the constant c_{d,s}."""
        return self.effective / self.c

    def rows(self, idx: np.ndarray) -> np.ndarray:
        """Dense block K(x_i - x_j) for flat row indices ``idx`` and all j."""
        return kernel_rows(self.effective, idx)

    def lattice_ratio_min(self) -> float:
        """min over z != 0 of K(z) |z|^{d+s}, z the minimal image (>= c_{d,s})."""
        zs = min_image(self.grid)
        r = np.sqrt(sum(z**2 for z in zs))
        ratio = self.effective * r ** (self.grid.d + self.s)
        mask = r > 0
        return float(ratio[mask].min())

    def dump_csv(self, path):
        zs = min_image(self.grid)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z_index", "displacement", "value"])
            flat_z = [z.ravel() for z in zs]
            for i, v in enumerate(self.values.ravel()):
                disp = ";".join(repr(float(z[i])) for z in flat_z)
                w.writerow([i, disp, repr(float(v))])


def periodic_kernel(g: Grid, s: float, J: int = DEFAULT_J, corrected: bool = True) -> KernelTable:
    """c_{d,s} sum_{|j|_inf <= J} |z + 2 pi j|^{-d-s} on grid displacements.

    ``values`` holds the truncated sum; ``tail`` an estimate of the rest,
    which the evaluators add when ``corrected`` is set.
    """
    _reject_s1(s)
    if J < 1:
        raise ValueError("truncation radius J must be >= 1")
    c = cds(g.d, s)
    zs = min_image(g)
    acc = np.zeros(g.shape)
    p = 0.5 * (g.d + s)
    for j in _lattice(g.d, J):
        r2 = sum((z + TWO_PI * jj) ** 2 for z, jj in zip(zs, j))
        with np.errstate(divide="ignore"):
            acc += r2 ** (-p)
    origin = (0,) * g.d
    acc[origin] = 0.0
    # z and -z accumulate the same terms in different order; average to make the table exactly even
    acc = 0.5 * (acc + reflect(acc))
    tail = c * _tail_estimate(g, s, J, zs)
    tail = 0.5 * (tail + reflect(tail))
    tail[origin] = 0.0
    return KernelTable(g, s, c * acc, J, c * _tail_bound(g.d, s, J), tail, corrected, origin)


def kernel_rows(table: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Gather K(x_i - x_j) for flat indices i in ``idx`` from a displacement table."""
    n = table.shape[0]
    idx = np.asarray(idx)
    if table.ndim == 1:
        j = np.arange(n)
        return table[(idx[:, None] - j[None, :]) % n]
    i1, i2 = np.divmod(idx, n)
    j1, j2 = np.divmod(np.arange(n * n), n)
    return table[(i1[:, None] - j1[None, :]) % n, (i2[:, None] - j2[None, :]) % n]


# -- regularized kernel at s = 1 ------------------------------------------

def poisson_kernel_1d(y, delta: float):
    """K^1_delta(y) = c_{1,1} / (delta^2 + y^2); its transform is exp(-delta|xi|)/delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    y = np.asarray(y, dtype=float)
    return cds(1, 1.0) / (delta**2 + y**2)


def periodic_poisson_table(g: Grid, delta: float, J: int = DEFAULT_J) -> np.ndarray:
    """Lattice-summed K^1_delta on 1D grid displacements (z = 0 included, it is finite)."""
    if g.d != 1:
        raise ValueError("the Poisson closed form is used in d = 1 only")
    (z,) = min_image(g)
    out = sum(poisson_kernel_1d(z + TWO_PI * j, delta) for j in range(-J, J + 1))
    # remaining shells: c/(2pi)^2 * 2 * sum_{m > J} m^-2 to leading order
    out = out + cds(1, 1.0) * 2.0 / TWO_PI**2 * special.polygamma(1, J + 1)
    return out


# -- active kernel of the energy-density equation --------------------------

def _midpoints(nq: int) -> np.ndarray:
    return (np.arange(nq) + 0.5) / nq


def mean_fprime(a, b, F: Nonlinearity, nq: int = DEFAULT_NQ):
    """Midpoint rule for int_0^1 F'((1 - l) a + l b) dl, symmetric in (a, b)."""
    if nq < 2:
        raise ValueError("nq must be >= 2")
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    lam = _midpoints(nq)
    # pair node l with 1 - l so swapping (a, b) permutes identical terms
    vals = 0.5 * (F.dF((1 - lam) * a + lam * b) + F.dF(lam * a + (1 - lam) * b))
    return vals.mean(axis=-1)


def active_kernel_m(a, b, F: Nonlinearity, nq: int = DEFAULT_NQ, d: int = 1, s: float = 0.5):
    """m(a, b) = c_{d,s} 2ab/(a+b) int_0^1 F'((1-l)a + l b) dl."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("active kernel needs strictly positive states")
    return cds(d, s) * (2.0 * a * b / (a + b)) * mean_fprime(a, b, F, nq)


def ellipticity_lambda(umin0: float, umax0: float, F: Nonlinearity, d: int, s: float,
                       uniform_scale: bool = False) -> float:
    """Ellipticity constant of the active kernel over [umin0, umax0].

    Returns max(c umax0 max F', 1/(c umin0 min F')), so that
    1/Lambda <= m(a, b) <= Lambda for all a, b in the interval.  With
    ``uniform_scale`` the constant c_{d,s} multiplies both branches instead,
    which only brackets m/c_{d,s} when c_{d,s} < 1.
    """
    if not (0 < umin0 <= umax0):
        raise ValueError("need 0 < umin0 <= umax0")
    mn, mx = fprime_bounds(F, umin0, umax0)
    c = cds(d, s)
    if uniform_scale:
        return c * max(umax0 * mx, 1.0 / (umin0 * mn))
    return max(c * umax0 * mx, 1.0 / (c * umin0 * mn))
