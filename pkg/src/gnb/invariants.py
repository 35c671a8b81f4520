"""Randomized property checks behind ``gnb verify``."""

from __future__ import annotations

import numpy as np

from . import spectral
from .diagnostics import eta_lower_bound, lp_functional_increment, radial_tail_integral, radial_tail_quadrature
from .dynamics import momentum_flux_quadrature, rhs_delta, rhs_quadrature, rhs_spectral, rhs_w
from .experiments import RunReport
from .grid import make_grid
from .kernel import active_kernel_m, cds, ellipticity_lambda, periodic_kernel
from .nonlinearity import make_nonlinearity


def smooth_random(g, rng, lo=None, hi=None, kmax=None):
    """Random band-limited field; mapped to [lo, hi] when both are given."""
    kmax = g.n // 4 if kmax is None else kmax
    c = np.fft.fftn(rng.standard_normal(g.shape))
    keep = np.ones(g.shape, bool)
    for k in g.kaxes:
        keep &= np.abs(k) <= kmax
    u = np.fft.ifftn(c * keep).real
    if lo is not None:
        u = lo + (hi - lo) * (u - u.min()) / (u.max() - u.min())
    return u


def check_cosine_symbol(rep: RunReport):
    worst = 0.0
    for d in (1, 2):
        g = make_grid(d, 32)
        x = g.mesh()[0]
        for k in (1, 2, 4, 8):
            f = np.cos(k * x)
            for s in (0.3, 0.5, 1.0):
                err = np.abs(spectral.frac_laplacian(f, s) - k**s * f).max() / k**s
                worst = max(worst, float(err))
    rep.add("cosine_symbol", worst, 1e-12, worst < 1e-12)


def check_delta_domination(rep: RunReport):
    g = make_grid(2, 64)
    excess = 0.0
    for s in (0.3, 0.5, 1.0):
        full = spectral.frac_symbol(g, s)
        for delta in np.geomspace(1e-3, 1.0, 7):
            excess = max(excess, float((spectral.frac_symbol_delta(g, s, delta) - full).max()))
    rep.add("delta_symbol_dominated", excess, 0.0, excess <= 0.0)
    g = make_grid(1, 128)
    x = g.mesh()[0]
    u = 2 + 0.5 * np.cos(x) + 0.1 * np.sin(3 * x)
    F = make_nonlinearity("power_int", 2)
    deltas = np.geomspace(1e-4, 1e-2, 6)
    base = rhs_spectral(u, 0.5, F)
    gaps = [np.sqrt(g.cell * np.sum((rhs_delta(u, 0.5, dl, F) - base) ** 2)) for dl in deltas]
    slope = float(np.polyfit(np.log(deltas), np.log(gaps), 1)[0])
    rep.add("delta_rate_slope", slope, 0.1, abs(slope - 1) <= 0.1)


def check_energy_orthogonality(rep: RunReport, trials: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    kinds = [make_nonlinearity("power_int", 2), make_nonlinearity("identity"),
             make_nonlinearity("exp_minus_one"), make_nonlinearity("u_minus_sin")]
    for i in range(trials):
        d = 1 + i % 2
        g = make_grid(d, 64 if d == 1 else 16)
        u = rng.standard_normal(g.shape) + (2.0 if i % 4 < 2 else 0.0)
        F = kinds[i % len(kinds)]
        s = rng.uniform(0.1, 1.0)
        for r in (rhs_spectral(u, s, F, "two_thirds" if F.is_power else "none"),
                  rhs_delta(u, s, rng.uniform(1e-3, 1.0), F)):
            scale = np.sqrt(np.sum(u**2) * np.sum(r**2))
            if scale > 0:
                worst = max(worst, abs(float(np.sum(u * r))) / scale)
    rep.add("energy_orthogonality", worst, 1e-12, worst < 1e-12)


def check_sign_law(rep: RunReport, trials: int = 100, seed: int = 1):
    rng = np.random.default_rng(seed)
    g = make_grid(1, 64)
    K = periodic_kernel(g, 0.5)
    F = make_nonlinearity("power_int", 2)
    bad = 0
    for _ in range(trials):
        u = smooth_random(g, rng, 1.0, 3.0)
        Fu = F.F(u)
        for i, sign in ((int(np.argmax(u)), 1.0), (int(np.argmin(u)), -1.0)):
            terms = (Fu - Fu[i]) * u * K.rows(np.array([i]))[0]
            if np.any(sign * terms > 0):
                bad += 1
        r = rhs_quadrature(u, 0.5, F, K)
        if r[np.argmax(u)] >= 0 or r[np.argmin(u)] <= 0:
            bad += 1
        if momentum_flux_quadrature(u, F, K) < 0:
            bad += 1
    rep.add("quadrature_sign_law", bad, 0, bad == 0)


def check_chain_rule(rep: RunReport, seed: int = 2):
    rng = np.random.default_rng(seed)
    g = make_grid(1, 64)
    K = periodic_kernel(g, 0.5)
    F = make_nonlinearity("power_int", 2)
    u = smooth_random(g, rng, 1.0, 3.0)
    a = 2 * u * rhs_quadrature(u, 0.5, F, K)
    b = rhs_w(u, 0.5, F, K)
    err = float(np.abs(a - b).max() / np.abs(a).max())
    rep.add("chain_rule_w", err, 1e-10, err <= 1e-10)
    inc = lp_functional_increment(u, 3.0, 0.5, F, K)
    rep.add("lp3_increment_positive", inc, 0.0, inc > 0)


def check_ellipticity(rep: RunReport, pairs: int = 1000, seed: int = 3):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in ("identity", "power_int", "exp_minus_one"):
        F = make_nonlinearity(kind)
        for d, s in ((1, 0.5), (2, 0.7)):
            lo, hi = 0.5, 3.0
            lam = ellipticity_lambda(lo, hi, F, d, s)
            a, b = rng.uniform(lo, hi, (2, pairs))
            m = active_kernel_m(a, b, F, d=d, s=s)
            # ratio > 1 means the sandwich fails
            worst = max(worst, float(np.max(m / lam)), float(np.max(1.0 / (lam * m))))
    rep.add("ellipticity_sandwich", worst, 1.0, worst <= 1.0)


def check_besov(rep: RunReport, seed: int = 4):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in (1, 2):
        g = make_grid(d, 64)
        f = smooth_random(g, rng, kmax=g.n // 2 - 1)
        rec = sum(b for _, b in spectral.lp_blocks(f))
        worst = max(worst, float(np.abs(rec - (f - f.mean())).max()))
    rep.add("lp_reconstruction", worst, 1e-12, worst < 1e-12)


def check_eta(rep: RunReport):
    worst = 0.0
    for d in (1, 2):
        for s in (0.3, 0.5, 0.7, 0.9):
            a, b = radial_tail_integral(d, s), radial_tail_quadrature(d, s)
            worst = max(worst, abs(a - b) / b)
    rep.add("eta_closed_form", worst, 1e-10, worst < 1e-10)
    F = make_nonlinearity("identity")
    expect = 2 * cds(1, 0.5) * (1 + 4 * np.pi) ** -0.5 / 0.5
    got = eta_lower_bound(1.0, 2.0, F, 1, 0.5)
    rep.add("eta_identity_1d", abs(got - expect) / expect, 1e-14, abs(got - expect) <= 1e-14 * expect)


SUITE = (check_cosine_symbol, check_delta_domination, check_energy_orthogonality, check_sign_law,
         check_chain_rule, check_ellipticity, check_besov, check_eta)


def run_invariants() -> RunReport:
    rep = RunReport({"name": "invariants"})
    for fn in SUITE:
        fn(rep)
    return rep
