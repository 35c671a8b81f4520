"""Scenario runners that turn the structural laws of the flow into pass/fail reports."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import optimize

from . import diagnostics as dg
from .dynamics import SolverConfig, Trajectory, evolve, evolve_delta_pair, rhs_quadrature, rhs_spectral, stable_dt
from .grid import Grid, make_grid
from .io import write_snapshot
from .kernel import DEFAULT_J, periodic_kernel
from .nonlinearity import Nonlinearity, make_nonlinearity, odd_reflection

log = logging.getLogger(__name__)

U0_KINDS = ("constant_plus_modes", "random_positive")
LP3_MAX_POINTS = 512  # O(N^2) L^3 increments at every record are only done below this size


@dataclass(frozen=True)
class U0Spec:
    kind: str = "constant_plus_modes"
    base: float = 2.0
    amplitudes: tuple = ()
    freqs: tuple = ()    # one integer tuple of length d per mode
    phases: tuple = ()
    seed: int = 0
    lo: float = 1.0
    hi: float = 2.0
    smoothness: int = 8  # random_positive keeps |k| <= n / smoothness

    def __post_init__(self):
        if self.kind not in U0_KINDS:
            raise ValueError(f"u0.kind must be one of {U0_KINDS}")
        if self.kind == "constant_plus_modes":
            if len(self.amplitudes) != len(self.freqs):
                raise ValueError("u0.amplitudes and u0.freqs differ in length")
            if self.phases and len(self.phases) != len(self.amplitudes):
                raise ValueError("u0.phases must match u0.amplitudes in length")
        elif not (self.lo <= self.hi) or self.smoothness < 1:
            raise ValueError("random_positive needs min <= max and smoothness >= 1")


def build_u0(spec: U0Spec, g: Grid) -> np.ndarray:
    if spec.kind == "constant_plus_modes":
        xs = g.mesh()
        u = np.full(g.shape, float(spec.base))
        phases = spec.phases or (0.0,) * len(spec.amplitudes)
        for a, k, ph in zip(spec.amplitudes, spec.freqs, phases):
            if len(k) != g.d:
                raise ValueError(f"frequency {k} does not match d = {g.d}")
            u += a * np.cos(sum(kk * x for kk, x in zip(k, xs)) + ph)
        return u
    rng = np.random.default_rng(spec.seed)
    c = np.fft.fftn(rng.uniform(size=g.shape))
    keep = np.ones(g.shape, dtype=bool)
    for k in g.kaxes:
        keep &= np.abs(k) <= g.n // spec.smoothness
    r = np.fft.ifftn(c * keep).real
    span = r.max() - r.min()
    r = (r - r.min()) / span if span > 0 else np.zeros_like(r)
    return spec.lo + (spec.hi - spec.lo) * r


@dataclass(frozen=True)
class Scenario:
    name: str
    d: int
    n: int
    F: Nonlinearity
    u0: U0Spec
    solver: SolverConfig
    params: dict = field(default_factory=dict, hash=False)

    @property
    def grid(self) -> Grid:
        return make_grid(self.d, self.n)

    @property
    def s(self) -> float:
        return self.solver.s

    def initial(self) -> np.ndarray:
        return build_u0(self.u0, self.grid)

    def describe(self) -> dict:
        return {"name": self.name, "d": self.d, "n": self.n, "F": self.F.describe(),
                "u0": asdict(self.u0), "solver": asdict(self.solver), "params": dict(self.params)}


@dataclass
class Check:
    name: str
    measured: float
    tol: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return f"[{flag}] {self.name}: measured={self.measured:.6g} tol={self.tol:.3g}{extra}"


@dataclass
class RunReport:
    scenario: dict
    checks: list[Check] = field(default_factory=list)
    measured: dict = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    trajectories: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, measured, tol, passed, note="") -> Check:
        c = Check(name, float(measured), float(tol), bool(passed), note)
        self.checks.append(c)
        return c

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"scenario": self.scenario,
                "assertions": [{"name": c.name, "measured": c.measured, "tol": c.tol,
                                "pass": c.passed, "note": c.note} for c in self.checks],
                "measured": self.measured,
                "artifacts": list(self.artifacts)}


# -- named scenarios --------------------------------------------------------

def standard_scenario(**solver) -> Scenario:
    """d = 1, n = 128, s = 1/2, F = u^2, u0 = 2 + cos(x)/2 up to t = 5."""
    cfg = SolverConfig(**{"s": 0.5, "t_end": 5.0, "dt": 1e-3, "cfl_safety": 0.5, **solver})
    return Scenario("standard", 1, 128, make_nonlinearity("power_int", 2),
                    U0Spec(base=2.0, amplitudes=(0.5,), freqs=((1,),)), cfg)


def decay_2d_scenario(**solver) -> Scenario:
    cfg = SolverConfig(**{"s": 0.7, "t_end": 10.0, "dt": 1e-2, **solver})
    return Scenario("decay_2d", 2, 64, make_nonlinearity("identity"),
                    U0Spec(base=2.0, amplitudes=(0.3, 0.2), freqs=((1, 0), (0, 1))), cfg)


def blowup_scenario(t_star: float = 0.1, **solver) -> Scenario:
    cfg = SolverConfig(**{"s": 1.0, "t_end": t_star if t_star > 0 else 1.0, "dt": 1e-2, **solver})
    return Scenario("blowup", 1, 256, make_nonlinearity("identity"),
                    U0Spec(kind="random_positive", seed=7, lo=2.0, hi=2.8, smoothness=8),
                    cfg, {"t_star": t_star})


def delta_scenario(**solver) -> Scenario:
    sc = standard_scenario(**{"t_end": 1.0, "dt": 1e-2, **solver})
    return replace(sc, name="delta_cauchy", params={"deltas": (0.2, 0.1, 0.05, 0.025)})


def perturb_mode(sc: Scenario, k: int = 3, rel: float = 0.01) -> Scenario:
    """Same scenario with an extra cosine of amplitude ``rel * base`` along x1."""
    if sc.u0.kind != "constant_plus_modes":
        raise ValueError("mode perturbation needs a constant_plus_modes initial state")
    u = sc.u0
    kk = (k,) + (0,) * (sc.d - 1)
    phases = u.phases + (0.0,) if u.phases else ()
    u2 = replace(u, amplitudes=u.amplitudes + (rel * u.base,), freqs=u.freqs + (kk,), phases=phases)
    return replace(sc, name=sc.name + "_perturbed", u0=u2)


# -- decay ------------------------------------------------------------------

def _kernel_for(sc: Scenario):
    if sc.s < 1 and sc.grid.size <= LP3_MAX_POINTS:
        return periodic_kernel(sc.grid, sc.s, int(sc.params.get("J", DEFAULT_J)))
    return None


def write_artifacts(traj: Trajectory, outdir, stem: str = "run") -> list[str]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}_diagnostics.csv"]
    dg.write_csv(traj.records, paths[0])
    for i, (t, u) in enumerate(traj.snapshots):
        p = out / f"{stem}_snap_{i:03d}.gnbf"
        write_snapshot(p, u, traj.config.s, t)
        paths.append(p)
    return [str(p) for p in paths]


def trajectory_checks(rep: RunReport, traj: Trajectory, u0, F: Nonlinearity, kernel=None):
    """Conservation, max/min, momentum and L^3 laws along a positive trajectory."""
    t = traj.times
    E = traj.series("energy")
    rep.add("energy_drift", np.abs(E - E[0]).max() / E[0], 1e-8,
            np.abs(E - E[0]).max() <= 1e-8 * E[0])

    umax, umin, A = traj.series("umax"), traj.series("umin"), traj.series("amplitude")
    up = float(np.diff(umax).max(initial=0.0))
    down = max(0.0, float(-np.diff(umin).min(initial=0.0)))
    rep.add("umax_nonincreasing", up, 1e-10, up <= 1e-10)
    rep.add("umin_nondecreasing", down, 1e-10, down <= 1e-10)
    # strictness is only observable while the amplitude is above roundoff
    live = A[:-1] > 1e-6 * A[0] if A[0] > 0 else np.zeros(len(A) - 1, bool)
    strict_max = bool(np.all(np.diff(umax)[live] < 0))
    strict_min = bool(np.all(np.diff(umin)[live] > 0))
    rep.add("umax_strictly_decreasing", int(live.sum()), 0, strict_max, "records with A > 1e-6 A(0)")
    rep.add("umin_strictly_increasing", int(live.sum()), 0, strict_min, "records with A > 1e-6 A(0)")

    flux, M = traj.series("flux"), traj.series("momentum")
    scale = max(abs(M[0]), 1e-300)
    rep.add("flux_nonnegative", flux.min(), -1e-12 * scale, flux.min() >= -1e-12 * scale)
    closure = abs(M[-1] - M[0] - dg.trapezoid(flux, t)) / scale
    rep.add("momentum_identity", closure, 1e-6, closure < 1e-6)
    rep.measured["momentum_gain"] = float(M[-1] - M[0])

    if kernel is not None:
        L = traj.series("lp3")
        l3 = abs(L[-1] - L[0]) / L[0]
        rep.add("lp3_closure", l3, 1e-4, l3 < 1e-4)
        lhs, bound = dg.hs2_budget_check(traj, u0, F, kernel)
        rep.add("hs2_budget", lhs / bound, 1.0, lhs <= bound, f"lhs={lhs:.4g} bound={bound:.4g}")
    rep.add("no_blowup_flag", float(traj.blowup), 0, not traj.blowup)


def run_decay(sc: Scenario, outdir=None) -> RunReport:
    u0 = sc.initial()
    if np.any(u0 <= 0):
        raise ValueError("decay experiments need a strictly positive initial state")
    g = sc.grid
    kernel = _kernel_for(sc)
    traj = evolve(u0, sc.solver, sc.F, kernel=kernel)
    rep = RunReport(sc.describe(), trajectories={"main": traj})
    trajectory_checks(rep, traj, u0, sc.F, kernel)

    t, A, G = traj.times, traj.series("amplitude"), traj.series("grad_inf")
    eta = dg.eta_lower_bound(float(u0.min()), float(u0.max()), sc.F, sc.d, sc.s)
    rep.measured["eta"] = eta
    if A[0] == 0:
        for name in ("amplitude_envelope", "amplitude_rate", "gradient_decay_fit"):
            rep.add(name, 0.0, 0.0, True, "vacuous: constant initial state")
    else:
        env = float(np.max(A / (A[0] * np.exp(-eta * t))))
        rep.add("amplitude_envelope", env, 1 + 1e-6, env <= 1 + 1e-6)
        win = dg.amplitude_window(t, A)
        rate, r2 = dg.fit_decay_rate(t, A, win)
        rep.measured.update(amplitude_rate=rate, amplitude_r2=r2, amplitude_window=win)
        rep.add("amplitude_rate", rate / eta, 1 - 1e-3, rate >= eta * (1 - 1e-3), f"rate={rate:.5g}")
        gwin = dg.gradient_onset(t, G)
        grate, gr2 = dg.fit_decay_rate(t, G, gwin)
        rep.measured.update(gradient_rate=grate, gradient_r2=gr2, gradient_onset=gwin[0])
        rep.add("gradient_decay_fit", gr2, 0.99, grate > 0 and gr2 > 0.99, f"slope={-grate:.5g}")

    e0 = float(np.sqrt(g.cell * np.sum(u0**2)))
    target = e0 / np.sqrt(g.volume)
    reached = A[-1] < 1e-6 * A[0] or A[0] == 0
    rep.add("terminal_reached", A[-1] / A[0] if A[0] else 0.0, 1e-6, reached)
    term = float(np.abs(traj.final - target).max() / e0)
    rep.measured["terminal_constant"] = target
    rep.add("terminal_constant", term, 1e-5, reached and term < 1e-5)
    if outdir is not None:
        rep.artifacts += write_artifacts(traj, outdir, sc.name)
    return rep


# -- time reversal and blow-up ----------------------------------------------

def reverse_roundtrip(u0, cfg: SolverConfig, F: Nonlinearity, t: float, dt: float | None = None):
    """Evolve for t, negate, evolve with the reflected F for t; returns (forward, reversed, end).

    ``end`` is the negated final state of the reversed run, which should be u0.
    """
    u0 = np.asarray(u0, dtype=float)
    if t == 0:
        return None, None, -(-u0)
    c = replace(cfg, t_end=t)
    fwd = evolve(u0, c, F, dt_fixed=dt)
    if fwd.blowup:
        return fwd, None, None
    back = evolve(-fwd.final, c, odd_reflection(F), dt_fixed=dt)
    end = None if back.blowup else -back.final
    return fwd, back, end


def run_blowup(sc: Scenario, t_star: float | None = None) -> RunReport:
    if not sc.F.is_odd:
        raise ValueError(f"time-reversal blow-up needs an odd nonlinearity, got {sc.F.kind}")
    t_star = float(sc.params.get("t_star", 0.1) if t_star is None else t_star)
    if t_star < 0:
        raise ValueError("t_star must be >= 0")
    u0 = sc.initial()
    rep = RunReport(sc.describe())
    rep.measured["t_star"] = t_star
    if t_star == 0:
        _, _, end = reverse_roundtrip(u0, sc.solver, sc.F, 0.0)
        err = float(np.abs(end - u0).max())
        rep.add("rereversal_identity", err, 1e-10, err <= 1e-10)
        return rep
    fwd = evolve(u0, replace(sc.solver, t_end=t_star), sc.F)
    rep.trajectories["forward"] = fwd
    rep.add("forward_no_blowup", float(fwd.blowup), 0, not fwd.blowup)
    if fwd.blowup:
        return rep
    back = evolve(-fwd.final, replace(sc.solver, t_end=t_star), odd_reflection(sc.F))
    rep.trajectories["reversed"] = back
    G = back.series("grad_inf")
    growth = float(G.max() / G[0]) if G[0] > 0 else np.inf
    flagged = back.blowup and back.blowup_time <= t_star
    rep.measured.update(gradient_growth=growth, flagged=bool(back.blowup),
                        blowup_time=back.blowup_time, bkm_accum=float(back.records[-1].bkm_accum),
                        bkm_forward=float(fwd.records[-1].bkm_accum))
    witness = []
    if growth >= 10:
        witness.append("gradient_growth")
    if flagged:
        witness.append("nonfinite_flag")
    rep.measured["witness"] = witness
    rep.add("blowup_witness", growth, 10.0, bool(witness), "fired: " + (", ".join(witness) or "none"))
    if not back.blowup:
        rep.measured["reversal_error"] = float(np.abs(back.final + u0).max())
    return rep


# -- stability --------------------------------------------------------------

def run_stability(sc1: Scenario, sc2: Scenario) -> RunReport:
    if sc1.grid != sc2.grid:
        raise ValueError(f"mismatched grids {sc1.grid} and {sc2.grid}")
    if sc1.solver.t_end != sc2.solver.t_end:
        raise ValueError("stability runs need a common horizon")
    u1, u2 = sc1.initial(), sc2.initial()
    a = evolve(u1, sc1.solver, sc1.F)
    b = evolve(u2, sc2.solver, sc2.F)
    rows, info = dg.stability_check(a, b, sc1.F, sc2.F)
    rep = RunReport({"name": f"{sc1.name}_vs_{sc2.name}", "first": sc1.describe(),
                     "second": sc2.describe()},
                    trajectories={"first": a, "second": b})
    ratio = max(r[2] / r[3] if r[3] > 0 else (0.0 if r[2] == 0 else np.inf) for r in rows)
    rep.add("linf_bound_every_stamp", ratio, 1.0, ratio <= 1.0, f"{len(rows)} stamps")
    rep.measured.update(info)
    rep.measured["series"] = [list(r) for r in rows]
    rep.measured["max_l2_gap"] = max(r[1] for r in rows)
    return rep


# -- delta-Cauchy -----------------------------------------------------------

def fit_cauchy_constant(t, curve) -> float:
    """Solve curve(T) = C (e^{C T} - 1) for C > 0 at the last stamp."""
    T, y = float(t[-1]), float(curve[-1])
    if y <= 0 or T <= 0:
        return 0.0
    f = lambda C: C * np.expm1(C * T) - y
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return float(optimize.brentq(f, 0.0, hi))


def run_delta_cauchy(sc: Scenario, deltas=None) -> RunReport:
    deltas = tuple(sc.params.get("deltas", (0.2, 0.1, 0.05, 0.025)) if deltas is None else deltas)
    if len(deltas) < 3 or any(not (0 < x <= 1) for x in deltas):
        raise ValueError("need at least three deltas in (0, 1]")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly descending")
    u0 = sc.initial()
    dt = stable_dt(u0, replace(sc.solver, delta=min(deltas)), sc.F)
    curves, times = [], None
    for d1, d2 in zip(deltas, deltas[1:]):
        _, _, times, gaps = evolve_delta_pair(u0, sc.solver, sc.F, d1, d2, dt=dt)
        curves.append(gaps / abs(d1 - d2))
    C = np.array(curves)
    top = float(np.abs(C).max())
    spread = 0.0
    for i in range(len(C)):
        for j in range(i + 1, len(C)):
            spread = max(spread, float(np.abs(C[i] - C[j]).max()))
    rel = spread / top if top > 0 else 0.0
    rep = RunReport(sc.describe())
    rep.measured.update(deltas=list(deltas), dt=dt, times=times, curves=C,
                        C_fit=fit_cauchy_constant(times, C.mean(axis=0)))
    rep.add("delta_collapse", rel, 0.1, rel <= 0.1, "sup-distance / sup of curves")
    rep.add("gap_zero_at_start", float(np.abs(C[:, 0]).max()), 0.0, np.all(C[:, 0] == 0))
    return rep


# -- cross-validation -------------------------------------------------------

def _rel_inf(a, b) -> float:
    top = np.abs(a).max()
    if top == 0:
        return 0.0 if np.abs(b).max() == 0 else np.inf
    return float(np.abs(a - b).max() / top)


def crossval_error(sc: Scenario, n: int, J: int = DEFAULT_J) -> float:
    """Max relative sup-norm gap between spectral and quadrature RHS on u0 and u(t_mid)."""
    g = make_grid(sc.d, n)
    u0 = build_u0(sc.u0, g)
    K = periodic_kernel(g, sc.s, J)
    t_mid = float(sc.params.get("t_mid", min(0.25, 0.5 * sc.solver.t_end)))
    mid = evolve(u0, replace(sc.solver, t_end=t_mid, dealias="none", delta=0.0,
                             rhs_mode="spectral", diag_every=10**9), sc.F).final
    errs = []
    for u in (u0, mid):
        errs.append(_rel_inf(rhs_spectral(u, sc.s, sc.F, "none"), rhs_quadrature(u, sc.s, sc.F, K)))
    return max(errs)


def run_crossval(sc: Scenario, ns=None, J: int | None = None) -> RunReport:
    if sc.s >= 1:
        raise ValueError("cross-validation needs s < 1")
    ns = tuple(int(x) for x in (sc.params.get("ns", (64, 128, 256)) if ns is None else ns))
    J = int(sc.params.get("J", DEFAULT_J) if J is None else J)
    errs = [crossval_error(sc, n, J) for n in ns]
    rep = RunReport(sc.describe())
    rep.measured.update(ns=list(ns), errors=errs, J=J,
                        constant=max(e * n ** (1 - sc.s) for e, n in zip(errs, ns)))
    mid = ns[len(ns) // 2]
    e_mid = errs[len(ns) // 2]
    rep.add(f"agreement_n{mid}", e_mid, 0.05, e_mid < 0.05)
    mono = all(b < a for a, b in zip(errs, errs[1:])) or max(errs) == 0
    rep.add("monotone_in_n", float(np.max(np.diff(errs))) if len(errs) > 1 else 0.0, 0.0, mono)
    return rep


# -- symmetries -------------------------------------------------------------

def _fixed(cfg: SolverConfig, t: float) -> SolverConfig:
    return replace(cfg, t_end=t, stepper="rk4_fixed")


def step_halving_tol(u0, cfg: SolverConfig, F: Nonlinearity, t: float, dt: float) -> float:
    a = evolve(u0, _fixed(cfg, t), F, dt_fixed=dt).final
    b = evolve(u0, _fixed(cfg, t), F, dt_fixed=0.5 * dt).final
    return float(np.abs(a - b).max())


def dilate(u, lam: int) -> np.ndarray:
    """Samples of u(lam x) on the same grid."""
    u = np.asarray(u)
    n = u.shape[0]
    idx = (lam * np.arange(n)) % n
    return u[np.ix_(*([idx] * u.ndim))]


def scaling_check(sc: Scenario, t: float = 0.5, lam: int = 2) -> RunReport:
    """u0(lam x) evolved for t against u(lam^s t, lam x)."""
    u0 = sc.initial()
    v0 = dilate(u0, lam)
    dt = stable_dt(v0, sc.solver, sc.F)
    f = lam**sc.s
    v = evolve(v0, _fixed(sc.solver, t), sc.F, dt_fixed=dt).final
    u = evolve(u0, _fixed(sc.solver, f * t), sc.F, dt_fixed=f * dt).final
    tol = step_halving_tol(v0, sc.solver, sc.F, t, dt)
    err = float(np.abs(v - dilate(u, lam)).max())
    lim = 10 * max(tol, 1e-12)
    rep = RunReport(sc.describe())
    rep.measured.update(solver_tol=tol, lam=lam, t=t)
    rep.add("scaling_invariance", err, lim, err <= lim)
    return rep


def reversal_check(sc: Scenario, t: float = 0.2) -> RunReport:
    if not sc.F.is_odd:
        raise ValueError("the reversal identity is checked for odd nonlinearities")
    u0 = sc.initial()
    dt = stable_dt(u0, sc.solver, sc.F)
    _, back, end = reverse_roundtrip(u0, _fixed(sc.solver, t), sc.F, t, dt)
    tol = step_halving_tol(u0, sc.solver, sc.F, t, dt)
    rep = RunReport(sc.describe())
    lim = 10 * max(tol, 1e-12)
    err = np.inf if end is None else float(np.abs(end - u0).max())
    rep.measured.update(solver_tol=tol, t=t)
    rep.add("time_reversal", err, lim, err <= lim)
    return rep
