"""Tracked functionals, decay-rate estimation and stability bounds."""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np
from scipy import integrate

from . import spectral
from .grid import grid_of
from .kernel import KernelTable, cds
from .nonlinearity import Nonlinearity, fprime_bounds, sup_fprime_gap
from .parallel import map_rows

CSV_COLUMNS = ("t", "energy", "momentum", "umin", "umax", "amplitude", "grad_inf",
               "besov_1_inf_inf", "hs2_sq", "flux", "lp3_cumulative", "bkm_accum")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: float
    momentum: float
    umin: float
    umax: float
    amplitude: float
    grad_inf: float
    besov_1_inf_inf: float
    hs2_sq: float
    flux: float
    lp3: float            # ||u||_3^3 + accumulated dissipation; nan without a kernel
    bkm_accum: float
    lp3_rate: float = np.nan   # instantaneous L^3 dissipation rate
    lp3_diss: float = np.nan   # accumulated dissipation int_0^t lp3_rate

    def row(self) -> list[float]:
        return [self.t, self.energy, self.momentum, self.umin, self.umax, self.amplitude,
                self.grad_inf, self.besov_1_inf_inf, self.hs2_sq, self.flux, self.lp3,
                self.bkm_accum]


def lp_norm_p(u, p: float) -> float:
    """||u||_{L^p}^p on the grid."""
    return float(grid_of(u).cell * np.sum(np.abs(u) ** p))


def lp_functional_increment(u, p: float, s: float, F: Nonlinearity, K: KernelTable) -> float:
    """Instantaneous dissipation rate of ||u||_p^p under the quadrature flow.

    (p/2) h^{2d} sum_{i != j} (|u_i|^{p-2} - |u_j|^{p-2}) (F(u_i) - F(u_j)) u_i u_j K_ij
    """
    if not p > 2:
        raise ValueError("p must exceed 2")
    u = np.asarray(u, dtype=float)
    if grid_of(u) != K.grid or not np.isclose(K.s, s):
        raise ValueError("kernel table does not match the field's grid or order")
    flat = u.ravel()
    a = np.abs(flat) ** (p - 2)
    Fu = F.F(flat)

    def rows(idx):
        Kb = K.rows(idx)
        t = (a[idx][:, None] - a[None, :]) * (Fu[idx][:, None] - Fu[None, :]) * flat[None, :] * Kb
        return flat[idx] * t.sum(axis=1)

    return float(0.5 * p * K.grid.cell**2 * map_rows(rows, flat.size).sum())


def record(u, t: float, s: float, F: Nonlinearity, prev: DiagnosticsRecord | None = None,
           kernel: KernelTable | None = None) -> DiagnosticsRecord:
    u = np.asarray(u, dtype=float)
    g = grid_of(u)
    cell = g.cell
    umin, umax = float(u.min()), float(u.max())
    grad = float(spectral.gradient_norm(u).max())
    flux = float(cell * np.sum(F.F(u) * spectral.frac_laplacian(u, s)))
    if kernel is not None:
        rate = lp_functional_increment(u, 3.0, s, F, kernel)
    else:
        rate = np.nan
    if prev is None:
        diss = 0.0 if kernel is not None else np.nan
        bkm = 0.0
    else:
        dt = t - prev.t
        diss = prev.lp3_diss + 0.5 * dt * (prev.lp3_rate + rate)
        bkm = prev.bkm_accum + 0.5 * dt * (prev.grad_inf + grad)
    lp3 = lp_norm_p(u, 3.0) + diss
    return DiagnosticsRecord(
        t=float(t),
        energy=float(np.sqrt(cell * np.sum(u**2))),
        momentum=float(cell * np.sum(u)),
        umin=umin,
        umax=umax,
        amplitude=umax - umin,
        grad_inf=grad,
        besov_1_inf_inf=spectral.besov_seminorm(u, 1.0, np.inf),
        hs2_sq=spectral.sobolev_seminorm(u, 0.5 * s) ** 2,
        flux=flux,
        lp3=float(lp3),
        bkm_accum=float(bkm),
        lp3_rate=float(rate),
        lp3_diss=float(diss),
    )


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(["%.17g" % v for v in r.row()])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, i] for i, name in enumerate(head)}


def trapezoid(y, t) -> float:
    y, t = np.asarray(y, float), np.asarray(t, float)
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


# -- a-priori bounds --------------------------------------------------------

def hs2_budget_check(traj, u0, F: Nonlinearity, K: KernelTable) -> tuple[float, float]:
    """(int ||u||^2_{H^{s/2}} dt, (2/3) ||u0||_3^3 / M_min).

    M_min = umin0^2 min F' min_z K(z)|z|^{d+s}; the last factor is >= c_{d,s}.
    """
    u0 = np.asarray(u0, dtype=float)
    lhs = trapezoid(traj.series("hs2_sq"), traj.times)
    umin0, umax0 = float(u0.min()), float(u0.max())
    mn, _ = fprime_bounds(F, umin0, umax0)
    m_min = umin0**2 * mn * K.lattice_ratio_min()
    bound = (2.0 / 3.0) * lp_norm_p(u0, 3.0) / m_min
    return lhs, bound


def radial_tail_integral(d: int, s: float) -> float:
    """int_{|y| >= 1 + 2 sqrt(d) pi} c_{d,s} (|y| + 2 sqrt(d) pi)^{-d-s} dy in closed form."""
    a = 2.0 * np.sqrt(d) * np.pi
    c = cds(d, s)
    t0 = 1.0 + 2.0 * a  # substitute t = r + a
    if d == 1:
        return 2.0 * c * t0 ** (-s) / s
    # int_{t0}^inf (t - a) t^{-2-s} dt, times the circle length 2 pi
    return 2.0 * np.pi * c * (t0 ** (-s) / s - a * t0 ** (-1.0 - s) / (1.0 + s))


def radial_tail_quadrature(d: int, s: float) -> float:
    """Same integral by adaptive quadrature; independent check of the closed form."""
    a = 2.0 * np.sqrt(d) * np.pi
    surface = 2.0 if d == 1 else 2.0 * np.pi
    f = (lambda r: (r + a) ** (-1.0 - s)) if d == 1 else (lambda r: r * (r + a) ** (-2.0 - s))
    val, _ = integrate.quad(f, 1.0 + a, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return surface * cds(d, s) * val


def eta_lower_bound(umin0: float, umax0: float, F: Nonlinearity, d: int, s: float) -> float:
    """Guaranteed exponential decay rate of the amplitude."""
    if not (0 < umin0 <= umax0):
        raise ValueError("need 0 < umin0 <= umax0")
    mn, _ = fprime_bounds(F, umin0, umax0)
    return umin0 * mn * radial_tail_integral(d, s)


# -- decay fits -------------------------------------------------------------

def fit_decay_rate(t, values, window: tuple[float, float] | None = None) -> tuple[float, float]:
    """Least-squares rate of log(values) vs t; returns (rate, r^2)."""
    t = np.asarray(t, float)
    y = np.asarray(values, float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    if t.size < 8:
        raise ValueError(f"need at least 8 samples in the fit window, got {t.size}")
    if np.any(y <= 0):
        raise ValueError("non-positive values in the fit window; shrink the window")
    ly = np.log(y)
    slope, icpt = np.polyfit(t, ly, 1)
    resid = ly - (slope * t + icpt)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return float(-slope), float(r2)


def amplitude_window(t, A, floor: float = 1e-8) -> tuple[float, float]:
    """From the first time A <= A(0)/2 to the last time A >= floor A(0)."""
    t, A = np.asarray(t, float), np.asarray(A, float)
    A0 = A[0]
    start = t[np.argmax(A <= 0.5 * A0)] if np.any(A <= 0.5 * A0) else t[0]
    above = np.nonzero(A >= floor * A0)[0]
    stop = t[above[-1]] if above.size else t[-1]
    return float(start), float(stop)


def gradient_onset(t, G, floor: float = 1e-8) -> tuple[float, float]:
    """Window where ||grad u|| decays monotonically, ending at the noise floor.

    The onset is the earliest record after which the series never increases
    again (up to the floor), and not before G has halved.
    """
    t, G = np.asarray(t, float), np.asarray(G, float)
    above = np.nonzero(G >= floor * G[0])[0]
    last = above[-1] if above.size else len(G) - 1
    inc = np.nonzero(np.diff(G[: last + 1]) > 0)[0]
    first = inc[-1] + 1 if inc.size else 0
    halved = np.nonzero(G <= 0.5 * G[0])[0]
    if halved.size:
        first = max(first, halved[0])
    return float(t[first]), float(t[last])


# -- stability --------------------------------------------------------------

def stability_check(traj1, traj2, F1: Nonlinearity, F2: Nonlinearity):
    """Per common snapshot: (t, L2 gap, Linf gap, Linf bound), plus the fitted C0 of the L2 growth.

    Linf bound = 2 sqrt(d) pi (||grad u1|| + ||grad u2||) + | ||u1_0|| - ||u2_0|| | / sqrt(|T^d|)
    """
    s1 = traj1.snapshots
    s2 = traj2.snapshots
    if len(s1) != len(s2) or any(not np.isclose(a[0], b[0]) for a, b in zip(s1, s2)):
        raise ValueError("trajectories do not share snapshot times")
    u10, u20 = s1[0][1], s2[0][1]
    g = grid_of(u10)
    if grid_of(u20) != g:
        raise ValueError("trajectories live on different grids")
    cell = g.cell
    e1 = np.sqrt(cell * np.sum(u10**2))
    e2 = np.sqrt(cell * np.sum(u20**2))
    energy_term = abs(e1 - e2) / np.sqrt(g.volume)
    rows = []
    for (t, a), (_, b) in zip(s1, s2):
        gap2 = float(np.sqrt(cell * np.sum((a - b) ** 2)))
        gapi = float(np.abs(a - b).max())
        grads = spectral.gradient_norm(a).max() + spectral.gradient_norm(b).max()
        bound = float(2.0 * np.sqrt(g.d) * np.pi * grads + energy_term)
        rows.append((float(t), gap2, gapi, bound))
    lo = min(u10.min(), u20.min())
    hi = max(u10.max(), u20.max())
    fgap = sup_fprime_gap(F1, F2, lo, hi)
    d0 = rows[0][1] + fgap
    c0 = np.nan
    if d0 > 0:
        rates = [np.log(r[1] / d0) / r[0] for r in rows[1:] if r[0] > 0 and r[1] > 0]
        c0 = float(max(rates)) if rates else np.nan
    return rows, {"C0_fit": c0, "fprime_gap": fgap, "energy_term": float(energy_term)}


def record_field_names() -> list[str]:
    return [f.name for f in fields(DiagnosticsRecord)]
