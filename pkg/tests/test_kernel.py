import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from gnb import kernel as kn
from gnb import spectral
from gnb.grid import make_grid
from gnb.nonlinearity import make_nonlinearity


def c_by_quadrature(s):
    """1 / int_R (1 - cos y) |y|^{-1-s} dy, the constant giving symbol |xi|^s in d = 1."""
    near, _ = integrate.quad(lambda y: (1 - np.cos(y)) * y ** (-1 - s), 0, 1, limit=200)
    far_a, _ = integrate.quad(lambda y: y ** (-1 - s), 1, np.inf)
    far_b, _ = integrate.quad(lambda y: y ** (-1 - s), 1, np.inf, weight="cos", wvar=1.0)
    return 1.0 / (2 * (near + far_a - far_b))


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_cds_matches_independent_quadrature(s):
    assert kn.cds(1, s) == pytest.approx(c_by_quadrature(s), rel=1e-8)


def test_cds_values():
    assert kn.cds(1, 1.0) == pytest.approx(1 / np.pi, rel=1e-14)
    trend = [abs(kn.cds(1, s) * np.pi - 1) for s in (0.9, 0.99, 0.999)]
    assert trend[0] > trend[1] > trend[2]
    for bad in (0.0, 1.2, -0.5):
        with pytest.raises(ValueError):
            kn.cds(1, bad)
    with pytest.raises(ValueError):
        kn.cds(3, 0.5)


def test_kernel_ops_reject_s1():
    with pytest.raises(ValueError, match="Hadamard"):
        kn.periodic_kernel(make_grid(1, 32), 1.0)


@pytest.mark.parametrize("d,n", [(1, 64), (2, 16)])
def test_table_symmetry_and_positivity(d, n):
    g = make_grid(d, n)
    K = kn.periodic_kernel(g, 0.5, J=6)
    v = K.values
    assert np.array_equal(v, spectral.reflect(v))
    mask = np.ones(g.shape, bool)
    mask[(0,) * d] = False
    assert np.all(v[mask] > 0)
    assert v[(0,) * d] == 0
    assert K.tail_bound >= 0
    zs = kn.min_image(g)
    r = np.sqrt(sum(z**2 for z in zs))
    assert np.all(v[mask] >= kn.cds(d, 0.5) * r[mask] ** (-d - 0.5))


def test_doubling_J_never_decreases():
    g = make_grid(1, 64)
    a = kn.periodic_kernel(g, 0.4, J=5)
    b = kn.periodic_kernel(g, 0.4, J=10)
    assert np.all(b.values >= a.values)
    assert b.tail_bound < a.tail_bound
    # the dropped shells between J = 5 and 10 are covered by the bound
    assert (b.values - a.values).max() <= a.tail_bound


def test_tail_bound_2d():
    g = make_grid(2, 8)
    a = kn.periodic_kernel(g, 0.5, J=3)
    b = kn.periodic_kernel(g, 0.5, J=12)
    assert (b.values - a.values).max() <= a.tail_bound


def test_tail_estimate_1d_is_exact():
    g = make_grid(1, 32)
    a = kn.periodic_kernel(g, 0.5, J=4)
    b = kn.periodic_kernel(g, 0.5, J=400)
    np.testing.assert_allclose(a.effective, b.effective, rtol=1e-9)


def test_tail_estimate_2d_reasonable():
    g = make_grid(2, 8)
    a = kn.periodic_kernel(g, 0.5, J=8)
    b = kn.periodic_kernel(g, 0.5, J=40)
    trunc_err = np.abs(a.values - b.effective).max()
    corr_err = np.abs(a.effective - b.effective).max()
    assert corr_err < 0.1 * trunc_err


def test_quadrature_reproduces_symbol():
    g = make_grid(1, 128)
    K = kn.periodic_kernel(g, 0.5, J=20)
    (x,) = g.mesh()
    (z,) = kn.min_image(g)
    approx = np.array([g.h * np.sum((np.cos(xi + z) - np.cos(xi)) * K.effective) for xi in x[:8]])
    exact = -spectral.frac_laplacian(np.cos(x), 0.5)[:8]
    assert np.abs(approx - exact).max() < 0.02


def test_kernel_rows_2d_matches_direct():
    g = make_grid(2, 8)
    K = kn.periodic_kernel(g, 0.5, J=2)
    i = np.array([0, 9, 63])
    rows = K.rows(i)
    zs = kn.min_image(g)
    for a, ii in enumerate(i):
        i1, i2 = divmod(ii, 8)
        for jj in (0, 5, 17, 40):
            j1, j2 = divmod(jj, 8)
            assert rows[a, jj] == K.effective[(i1 - j1) % 8, (i2 - j2) % 8]


def test_dump_csv(tmp_path):
    K = kn.periodic_kernel(make_grid(2, 8), 0.5, J=2)
    p = tmp_path / "k.csv"
    K.dump_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["z_index", "displacement", "value"]
    assert len(rows) == 65
    assert ";" in rows[2][1]


def test_poisson_examples():
    c = kn.cds(1, 1.0)
    assert kn.poisson_kernel_1d(0.0, 1.0) == pytest.approx(c)
    y = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(kn.poisson_kernel_1d(y, 0.3), kn.poisson_kernel_1d(-y, 0.3))
    with pytest.raises(ValueError):
        kn.poisson_kernel_1d(0.0, 0.0)


def test_poisson_convolution_matches_multiplier():
    g = make_grid(1, 256)
    delta = 0.5
    tab = kn.periodic_poisson_table(g, delta)
    (x,) = g.mesh()
    (z,) = kn.min_image(g)
    conv = np.array([g.h * np.sum(np.cos(xi - z) * tab) for xi in x[:16]])
    assert np.abs(delta * conv - np.exp(-delta) * np.cos(x[:16])).max() < 0.01


def test_poisson_regularized_operator_at_s1():
    # (1/delta) f - T f with T the Poisson convolution is the delta-regularized |grad|
    g = make_grid(1, 256)
    delta = 0.5
    tab = kn.periodic_poisson_table(g, delta)
    (x,) = g.mesh()
    f = np.cos(x) + 0.5 * np.sin(2 * x)
    Tf = np.real(np.fft.ifft(np.fft.fft(f) * np.fft.fft(tab))) * g.h
    ref = spectral.frac_laplacian_delta(f, 1.0, delta)
    assert np.abs(f / delta - Tf - ref).max() < 0.01


def test_active_kernel_examples():
    F1, F2 = make_nonlinearity("identity"), make_nonlinearity("power_int", 2)
    c = kn.cds(1, 0.5)
    assert kn.active_kernel_m(1.0, 1.0, F1) == pytest.approx(c)
    assert kn.active_kernel_m(1.0, 3.0, F1) == pytest.approx(1.5 * c)
    assert kn.active_kernel_m(1.0, 2.0, F2) == pytest.approx(4 * c, rel=1e-14)
    with pytest.raises(ValueError):
        kn.active_kernel_m(0.0, 1.0, F1)
    with pytest.raises(ValueError):
        kn.mean_fprime(1.0, 2.0, F1, nq=1)


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.sampled_from(["identity", "power_int", "exp_minus_one", "u_minus_sin"]))
def test_active_kernel_symmetric(a, b, kind):
    F = make_nonlinearity(kind)
    assert kn.active_kernel_m(a, b, F) == kn.active_kernel_m(b, a, F)


def test_lambda_quadrature_second_order():
    F = make_nonlinearity("exp_minus_one")
    exact = (np.exp(3.0) - np.exp(0.5)) / 2.5
    errs = [abs(kn.mean_fprime(0.5, 3.0, F, nq) - exact) for nq in (8, 16, 32)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_ellipticity_uniform_scale_examples():
    F1, F2 = make_nonlinearity("identity"), make_nonlinearity("power_int", 2)
    c = kn.cds(1, 0.5)
    assert kn.ellipticity_lambda(1, 1, F1, 1, 0.5, uniform_scale=True) == pytest.approx(c)
    assert kn.ellipticity_lambda(1, 2, F2, 1, 0.5, uniform_scale=True) == pytest.approx(8 * c)


def test_uniform_scale_does_not_bracket_when_c_below_one():
    # with c < 1 the literal constant misses the lower end of the kernel range
    F = make_nonlinearity("identity")
    lam = kn.ellipticity_lambda(1, 1, F, 1, 0.5, uniform_scale=True)
    assert kn.active_kernel_m(1.0, 1.0, F) < 1 / lam


@given(st.floats(0.2, 2.0), st.floats(1.0, 3.0), st.sampled_from(["identity", "power_int", "exp_minus_one"]),
       st.sampled_from([(1, 0.3), (1, 0.5), (2, 0.7)]))
def test_ellipticity_sandwich(lo, width, kind, ds):
    d, s = ds
    hi = lo * width
    F = make_nonlinearity(kind)
    lam = kn.ellipticity_lambda(lo, hi, F, d, s)
    grid = np.linspace(lo, hi, 9)
    a, b = np.meshgrid(grid, grid)
    m = kn.active_kernel_m(a, b, F, d=d, s=s)
    assert np.all(m <= lam * (1 + 1e-12))
    assert np.all(m >= (1 - 1e-12) / lam)


def test_lattice_ratio_floor():
    for d, n in ((1, 64), (2, 16)):
        K = kn.periodic_kernel(make_grid(d, n), 0.5, J=4)
        assert K.lattice_ratio_min() >= K.c
