"""Right-hand sides of du/dt = [F(u), |grad|^s] u and RK4 time integration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import spectral
from .diagnostics import DiagnosticsRecord, record
from .grid import grid_of
from .kernel import DEFAULT_NQ, KernelTable, kernel_rows, mean_fprime
from .nonlinearity import Nonlinearity
from .parallel import map_rows

log = logging.getLogger(__name__)

RHS_MODES = ("spectral", "quadrature")
STEPPERS = ("rk4_fixed", "rk4_adaptive")
DEALIAS = ("auto", "none", "two_thirds")


class BlowUp(FloatingPointError):
    """A Runge-Kutta stage produced non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    s: float = 0.5
    delta: float = 0.0
    rhs_mode: str = "spectral"
    stepper: str = "rk4_adaptive"
    dt: float = 1e-2
    t_end: float = 1.0
    cfl_safety: float = 0.5
    dealias: str = "auto"
    diag_every: int = 1

    def __post_init__(self):
        if not (0 < self.s <= 1):
            raise ValueError(f"s must lie in (0, 1], got {self.s}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.rhs_mode not in RHS_MODES:
            raise ValueError(f"rhs_mode must be one of {RHS_MODES}")
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}")
        if self.dealias not in DEALIAS:
            raise ValueError(f"dealias must be one of {DEALIAS}")
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")
        if not (0 < self.cfl_safety <= 1):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")
        if self.rhs_mode == "quadrature" and self.s >= 1:
            raise ValueError("quadrature mode requires s < 1")
        if self.rhs_mode == "quadrature" and self.delta > 0:
            raise ValueError("the regularized operator is only available in spectral mode")

    def resolved_dealias(self, F: Nonlinearity) -> str:
        if self.dealias == "auto":
            return "two_thirds" if F.is_power else "none"
        return self.dealias


# -- right-hand sides -------------------------------------------------------

def _commutator(u, symbol, F: Nonlinearity, dealias: str):
    c = np.fft.fftn(u)
    if dealias == "two_thirds":
        mask = spectral.dealias_mask(grid_of(u))
        c = c * mask
        u = np.fft.ifftn(c).real
    Lu = np.fft.ifftn(c * symbol).real
    Fu = F.F(u)
    a = np.fft.fftn(Fu * Lu)
    b = np.fft.fftn(u * Fu)
    out = a - symbol * b
    if dealias == "two_thirds":
        out = out * mask
    return np.fft.ifftn(out).real


def rhs_spectral(u, s: float, F: Nonlinearity, dealias: str = "none") -> np.ndarray:
    """F(u) |grad|^s u - |grad|^s (u F(u)), products on the collocation grid.

    With ``two_thirds`` the state is first projected on the retained modes
    and both products are truncated, which keeps <u, rhs> = 0 exact.
    """
    u = np.asarray(u, dtype=float)
    return _commutator(u, spectral.frac_symbol(grid_of(u), s), F, dealias)


def rhs_delta(u, s: float, delta: float, F: Nonlinearity, dealias: str = "none") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return _commutator(u, spectral.frac_symbol_delta(grid_of(u), s, delta), F, dealias)


def _check_table(u, K: KernelTable, s: float | None = None):
    g = grid_of(u)
    if g != K.grid:
        raise ValueError(f"kernel built on {K.grid}, field lives on {g}")
    if s is not None and not np.isclose(s, K.s):
        raise ValueError(f"kernel order {K.s} differs from s = {s}")


def rhs_quadrature(u, s: float, F: Nonlinearity, K: KernelTable) -> np.ndarray:
    """h^d sum_{j != i} (F(u_j) - F(u_i)) u_j K(x_i - x_j)."""
    u = np.asarray(u, dtype=float)
    _check_table(u, K, s)
    flat = u.ravel()
    Fu = F.F(flat)

    def rows(idx):
        # difference form: exactly zero wherever F(u) is locally constant
        Kb = K.rows(idx)
        return np.sum((Fu[None, :] - Fu[idx][:, None]) * flat[None, :] * Kb, axis=1)

    return (K.grid.cell * map_rows(rows, flat.size)).reshape(u.shape)


def rhs_w(u, s: float, F: Nonlinearity, K: KernelTable, nq: int = DEFAULT_NQ) -> np.ndarray:
    """h^d sum_{j != i} (w_j - w_i) m(u_i, u_j) |x_i - x_j|_per^{-d-s} with w = u^2."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("the energy-density form needs a strictly positive state")
    _check_table(u, K, s)
    flat = u.ravel()
    w = flat**2
    c = K.c
    shape_tab = K.shape_only

    def rows(idx):
        Kb = kernel_rows(shape_tab, idx)
        a = flat[idx][:, None]
        m = c * (2.0 * a * flat[None, :] / (a + flat[None, :])) * mean_fprime(a, flat[None, :], F, nq)
        return np.sum((w[None, :] - w[idx][:, None]) * m * Kb, axis=1)

    return (K.grid.cell * map_rows(rows, flat.size)).reshape(u.shape)


def fluctuation_split(u) -> tuple[float, np.ndarray]:
    u = np.asarray(u, dtype=float)
    p = float(u.mean())
    v = u - p
    return p, v - v.mean()


def momentum_derivative_check(u, s: float, F: Nonlinearity) -> tuple[float, float]:
    """(h^d sum rhs_spectral(u), h^d sum F(u) |grad|^s u)."""
    u = np.asarray(u, dtype=float)
    cell = grid_of(u).cell
    lhs = cell * np.sum(rhs_spectral(u, s, F))
    rhs = cell * np.sum(F.F(u) * spectral.frac_laplacian(u, s))
    return float(lhs), float(rhs)


def momentum_rate_fluctuation(u, s: float, F: Nonlinearity) -> float:
    """h^d sum G_p(v) |grad|^s v with G_p(v) = F(v + p) - F(p)."""
    p, v = fluctuation_split(u)
    G = F.F(v + p) - F.F(p)
    return float(grid_of(v).cell * np.sum(G * spectral.frac_laplacian(v, s)))


def momentum_flux_quadrature(u, F: Nonlinearity, K: KernelTable) -> float:
    """h^{2d} sum_{i<j} (F(u_i) - F(u_j)) (u_i - u_j) K(x_i - x_j)."""
    u = np.asarray(u, dtype=float)
    _check_table(u, K)
    flat = u.ravel()
    Fu = F.F(flat)

    def rows(idx):
        Kb = K.rows(idx)
        t = (Fu[idx][:, None] - Fu[None, :]) * (flat[idx][:, None] - flat[None, :]) * Kb
        return t.sum(axis=1)

    per_row = map_rows(rows, flat.size)
    return float(0.5 * K.grid.cell**2 * per_row.sum())


# -- time stepping ----------------------------------------------------------

def step_rk4(u, dt: float, rhs) -> np.ndarray:
    """One classical four-stage Runge-Kutta step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        out = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise BlowUp("non-finite values in RK4 update")
    return out


def make_rhs(cfg: SolverConfig, F: Nonlinearity, kernel: KernelTable | None = None):
    dealias = cfg.resolved_dealias(F)
    if cfg.rhs_mode == "quadrature":
        if kernel is None:
            raise ValueError("quadrature mode needs a kernel table")
        return lambda u: rhs_quadrature(u, cfg.s, F, kernel)
    if cfg.delta > 0:
        return lambda u: rhs_delta(u, cfg.s, cfg.delta, F, dealias)
    return lambda u: rhs_spectral(u, cfg.s, F, dealias)


def cfl_dt(u, cfg: SolverConfig, F: Nonlinearity) -> float:
    """cfl_safety / (Lambda_F max|symbol|), Lambda_F = max|F(u)| + max|d(uF)/du|."""
    g = grid_of(u)
    if cfg.resolved_dealias(F) == "two_thirds":
        kmax = g.kabs[spectral.dealias_mask(g)].max()
    else:
        kmax = g.kabs.max()
    sym = kmax**cfg.s
    if cfg.delta > 0:
        sym = min(sym, 1.0 / cfg.delta)
    lam = np.abs(F.F(u)).max() + np.abs(F.F(u) + u * F.dF(u)).max()
    if lam == 0:
        return np.inf
    return cfg.cfl_safety / (lam * sym)


def stable_dt(u0, cfg: SolverConfig, F: Nonlinearity) -> float:
    """Fixed step honouring the CFL bound of the initial state."""
    return float(min(cfg.dt, cfl_dt(np.asarray(u0, float), cfg, F)))


def default_snapshot_times(t_end: float, count: int = 40) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-3 * t_end, t_end, count)])


@dataclass
class Trajectory:
    config: SolverConfig
    F: Nonlinearity
    records: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)
    blowup: bool = False
    blowup_time: float | None = None
    witness: np.ndarray | None = None
    steps: int = 0
    final: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def snapshot_at(self, t: float) -> np.ndarray:
        for ts, u in self.snapshots:
            if np.isclose(ts, t, rtol=1e-12, atol=1e-14):
                return u
        raise KeyError(f"no snapshot at t = {t}")


def evolve(u0, cfg: SolverConfig, F: Nonlinearity, kernel: KernelTable | None = None,
           snapshot_times=None, dt_fixed: float | None = None) -> Trajectory:
    """Integrate from t = 0 to ``cfg.t_end`` or until a stage goes non-finite.

    ``kernel`` (s < 1) enables the cumulative L^3 functional in the records.
    ``dt_fixed`` overrides the step policy (used to align paired runs).
    """
    u = np.array(u0, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("initial state has non-finite values")
    rhs = make_rhs(cfg, F, kernel)
    targets = set(default_snapshot_times(cfg.t_end).tolist())
    if snapshot_times is not None:
        targets.update(float(t) for t in snapshot_times if 0 <= t <= cfg.t_end)
    targets = np.array(sorted(targets | {cfg.t_end}))

    with np.errstate(over="ignore", invalid="ignore"):
        # overflow near a singularity is reported through the blow-up flag
        return _integrate(u, cfg, F, kernel, rhs, targets, dt_fixed)


def _integrate(u, cfg, F, kernel, rhs, targets, dt_fixed) -> Trajectory:
    traj = Trajectory(cfg, F)
    rec = record(u, 0.0, cfg.s, F, None, kernel)
    traj.records.append(rec)
    traj.snapshots.append((0.0, u.copy()))
    t, it, ti = 0.0, 0, 1
    while t < cfg.t_end and ti < len(targets):
        if dt_fixed is not None:
            dt = dt_fixed
        elif cfg.stepper == "rk4_adaptive":
            dt = min(cfg.dt, cfl_dt(u, cfg, F))
        else:
            dt = cfg.dt
        nxt = targets[ti]
        if t + dt >= nxt - 1e-12 * max(1.0, nxt):
            dt = nxt - t
        if dt < 1e-12:
            raise RuntimeError(f"time step underflow at t = {t}")
        try:
            u_new = step_rk4(u, dt, rhs)
        except BlowUp:
            traj.blowup, traj.blowup_time, traj.witness = True, t, u.copy()
            log.info("blow-up flag raised at t = %.6g", t)
            break
        u = u_new
        it += 1
        if np.isclose(t + dt, nxt, rtol=0, atol=1e-12 * max(1.0, nxt)):
            t = float(nxt)
            ti += 1
            traj.snapshots.append((t, u.copy()))
        else:
            t = t + dt
        if it % cfg.diag_every == 0 or t >= cfg.t_end:
            rec = record(u, t, cfg.s, F, rec, kernel)
            traj.records.append(rec)
    if traj.records[-1].t < t:
        traj.records.append(record(u, t, cfg.s, F, rec, kernel))
    traj.steps = it
    traj.final = u
    return traj


def evolve_delta_pair(u0, cfg: SolverConfig, F: Nonlinearity, delta: float, epsilon: float,
                      dt: float | None = None):
    """Run the regularized flow at ``delta`` and ``epsilon`` on a common step.

    Returns ``(traj_delta, traj_epsilon, times, gaps)`` with gaps the L2
    distance at every shared record.
    """
    for v in (delta, epsilon):
        if not (0 < v <= 1):
            raise ValueError("regularization parameters must lie in (0, 1]")
    if dt is None:
        dt = stable_dt(u0, replace(cfg, delta=min(delta, epsilon)), F)
    a = evolve(u0, replace(cfg, delta=delta), F, dt_fixed=dt)
    b = evolve(u0, replace(cfg, delta=epsilon), F, dt_fixed=dt)
    cell = grid_of(np.asarray(u0)).cell
    gaps = np.array([np.sqrt(cell * np.sum((ua - ub) ** 2))
                     for (_, ua), (_, ub) in zip(a.snapshots, b.snapshots)])
    return a, b, np.array([ts for ts, _ in a.snapshots]), gaps
