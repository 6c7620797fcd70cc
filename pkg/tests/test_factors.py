import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from levyroot import GaussFactor, GridFactor, ParameterError
from levyroot.factors import ClosedMultiplier, SpectralGrid, factor_from_dict, hat_loads

centers = st.floats(-2, 2)
widths = st.floats(0.3, 2.0)
freqs = st.floats(-0.5, 0.5)
coef = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


@st.composite
def gauss_factors(draw):
    poly = draw(st.lists(coef, min_size=1, max_size=3))
    if abs(poly[0]) < 0.1:
        poly[0] = 1.0
    return GaussFactor(draw(centers), draw(widths), draw(freqs), poly)


def cquad(f, lo=-np.inf, hi=np.inf):
    re = quad(lambda x: complex(f(x)).real, lo, hi, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    im = quad(lambda x: complex(f(x)).imag, lo, hi, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    return complex(re, im)


def test_positive_factor_is_normal_density():
    g = GaussFactor.gaussian(0.7, 1.3, 2.0)
    xs = np.linspace(-3, 4, 9)
    dens = 4.0 * np.exp(-(xs - 0.7) ** 2 / (2 * 1.3 ** 2)) / math.sqrt(2 * math.pi * 1.3 ** 2)
    np.testing.assert_allclose(np.abs(g(xs)) ** 2, dens, rtol=1e-13)
    assert g.is_positive and g.mean == 0.7 and g.sd == 1.3


def test_gaussian_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        GaussFactor.gaussian(0.0, -1.0)
    with pytest.raises(ParameterError):
        GaussFactor.gaussian(0.0, 1.0, -0.5)


@pytest.mark.parametrize("a,s,b,t", [(0.0, 1.0, 0.0, 1.0), (0.3, 0.7, -1.1, 1.6), (2.0, 0.5, -2.0, 0.5)])
def test_overlap_closed_form_against_quadrature(a, s, b, t):
    f, g = GaussFactor.gaussian(a, s), GaussFactor.gaussian(b, t)
    closed = math.sqrt(2 * s * t / (s * s + t * t)) * math.exp(-(a - b) ** 2 / (4 * (s * s + t * t)))
    oracle = quad(lambda x: float(f(x).real * g(x).real), -np.inf, np.inf, epsabs=1e-15, epsrel=1e-13)[0]
    assert abs(closed - oracle) < 1e-10
    assert abs(f.inner(g) - oracle) < 1e-10


@given(gauss_factors(), gauss_factors())
def test_inner_against_quadrature(f, g):
    assert abs(f.inner(g) - cquad(lambda x: f(x) * np.conj(g(x)))) < 1e-9


@given(gauss_factors())
def test_integral_against_quadrature(f):
    assert abs(f.integral() - cquad(f)) < 1e-9


@given(gauss_factors())
def test_derivative_against_finite_difference(f):
    d = f.derivative()
    h = 1e-5
    for x in (-0.7, 0.1, 1.3):
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert abs(d(x) - fd) < 1e-6 * (1 + abs(fd))


@pytest.mark.parametrize("xi", [0.0, 0.5, 1.0])
def test_self_dual_gaussian(xi):
    # exp(-pi x^2) has width 1/(2 sqrt(pi)) and amplitude 1
    s = 1 / (2 * math.sqrt(math.pi))
    g = GaussFactor(0.0, s, 0.0, [(2 * math.pi * s * s) ** 0.25])
    assert g(0.37) == pytest.approx(math.exp(-math.pi * 0.37 ** 2))
    oracle = cquad(lambda x: math.exp(-math.pi * x * x) * np.exp(2j * math.pi * x * xi))
    assert abs(g.fourier()(xi) - oracle) < 1e-12
    assert abs(g.fourier()(xi) - math.exp(-math.pi * xi * xi)) < 1e-14


@given(gauss_factors(), st.floats(-1.5, 1.5))
def test_fourier_against_quadrature(f, xi):
    oracle = cquad(lambda x: f(x) * np.exp(2j * math.pi * x * xi))
    assert abs(f.fourier()(xi) - oracle) < 1e-8


@given(gauss_factors())
def test_fourier_twice_reflects(f):
    ff = f.fourier().fourier()
    for x in (-1.0, 0.2, 0.9):
        assert abs(ff(x) - f(-x)) < 1e-12


@given(gauss_factors(), st.floats(-2, 2))
def test_translate_and_modulate(f, h):
    assert abs(f.translate(h)(0.4) - f(0.4 - h)) < 1e-13
    assert abs(f.modulate(h)(0.4) - np.exp(2j * math.pi * h * 0.4) * f(0.4)) < 1e-12


@given(gauss_factors(), gauss_factors())
def test_product_pointwise(f, g):
    p = f.multiply(g)
    for x in (-1.0, 0.0, 0.8):
        assert abs(p(x) - f(x) * g(x)) < 1e-12 * (1 + abs(f(x) * g(x)))


@given(gauss_factors(), st.floats(-1, 1), st.floats(0.05, 2.0), st.floats(0.2, 2.0))
def test_gaussian_convolution_against_quadrature(f, m, v, w):
    c = f.convolve_gaussian(m, v, w)
    sd = math.sqrt(v)
    for x in (-0.5, 0.6):
        oracle = cquad(lambda y: f(x - y) * w * math.exp(-(y - m) ** 2 / (2 * v)) / (sd * math.sqrt(2 * math.pi)))
        assert abs(c(x) - oracle) < 1e-9


def test_grid_inner_is_exact_for_piecewise_linear():
    a = GridFactor(-1.0, 0.25, np.array([0.0, 1.0, 2.0, 0.5, -1.0, 0.3, 0.0, 1.0, 0.0]))
    b = GridFactor(-0.5, 0.25, np.array([1.0, 0.5, 0.0, 2.0, 1.0]))
    oracle = sum(quad(lambda x: a(x) * b(x), lo, lo + 0.25)[0] for lo in np.arange(-1.25, 1.25, 0.25))
    assert a.inner(b) == pytest.approx(oracle, abs=1e-14)
    c = GridFactor(-0.4, 0.3, np.array([1.0, -0.5, 0.0, 2.0]))
    pts = np.union1d(a.breaks(), c.breaks())
    oracle = sum(quad(lambda x: a(x) * c(x), lo, hi)[0] for lo, hi in zip(pts[:-1], pts[1:]))
    assert a.inner(c) == pytest.approx(oracle, abs=1e-13)


def test_grid_from_gaussian_converges():
    g = GaussFactor.gaussian(0.2, 0.9)
    grid = g.to_grid()
    assert abs(grid.inner(grid) - 1) < 1e-5
    assert abs(grid.inner(g) - 1) < 1e-5


def test_grid_fourier_parseval_exact():
    rng = np.random.default_rng(1)
    a = GridFactor(-2.0, 0.1, rng.normal(size=41) + 1j * rng.normal(size=41))
    spec = a.fourier()
    assert isinstance(spec, SpectralGrid)
    assert abs(spec.inner(spec) - a.inner(a)) < 1e-12
    xi = 0.37
    oracle = sum(cquad(lambda x: a(x) * np.exp(2j * math.pi * x * xi), lo, lo + 0.1)
                 for lo in np.arange(-2.1, 2.1 - 1e-9, 0.1))
    assert abs(spec(xi) - oracle) < 1e-12


def test_grid_gaussian_convolution_exact_at_nodes():
    a = GridFactor(-1.0, 0.2, np.array([0.0, 1.0, 0.5, 2.0, 0.0, -0.4, 0.0]))
    c = a.convolve_gaussian(0.1, 0.09, 0.8)
    pts = a.breaks()
    for x in c.nodes[::5]:
        oracle = 0.8 * sum(quad(lambda y: a(y) * math.exp(-(x - y - 0.1) ** 2 / 0.18) / math.sqrt(0.18 * math.pi),
                                lo, hi)[0] for lo, hi in zip(pts[:-1], pts[1:]))
        assert c(x) == pytest.approx(oracle, abs=1e-12)


@given(st.floats(0.2, 3.0), st.floats(-1, 1))
def test_grid_multiply_by_constant_is_exact(c, x0):
    rng = np.random.default_rng(3)
    a = GridFactor(x0, 0.05, rng.normal(size=60))
    np.testing.assert_allclose(a.multiply(lambda x: np.full(x.shape, c)).values, c * a.values, atol=1e-13)


def test_grid_multiply_is_self_adjoint():
    rng = np.random.default_rng(5)
    a = GridFactor(-1.0, 0.05, rng.normal(size=41) + 1j * rng.normal(size=41))
    b = GridFactor(-1.0, 0.05, rng.normal(size=41))
    u = ClosedMultiplier(0.5 + 0.5j, 0.7, 0.3)
    lhs = u.apply(a).inner(b)
    rhs = a.inner(u.conj().apply(b))
    assert abs(lhs - rhs) < 1e-15


def test_hat_loads_against_quadrature():
    g = GaussFactor.gaussian(0.1, 0.5)
    loads = hat_loads(-1.0, 0.25, 9, g)
    for j in (0, 4, 8):
        x0 = -1.0 + 0.25 * j
        oracle = quad(lambda x: max(0.0, 1 - abs(x - x0) / 0.25) * g(x).real, x0 - 0.25, x0 + 0.25)[0]
        assert loads[j] == pytest.approx(oracle, abs=1e-14)


def test_closed_multiplier_rejects_growth():
    with pytest.raises(ParameterError):
        ClosedMultiplier(1.0, 0.0, -0.1)


def test_characteristic_of_gaussian():
    u = ClosedMultiplier.gaussian_characteristic(0.3, 0.5, 2.0)
    xi = 0.8
    oracle = cquad(lambda y: 2.0 * np.exp(2j * math.pi * y * xi) * math.exp(-(y - 0.3) ** 2 / 1.0) / math.sqrt(math.pi))
    assert abs(u(xi) - oracle) < 1e-12


@given(gauss_factors())
def test_dict_round_trip(f):
    g = factor_from_dict(f.to_dict())
    assert abs(g(0.3) - f(0.3)) < 1e-15
    grid = GridFactor(0.0, 0.5, np.array([1.0, 2.0, 0.5]))
    assert factor_from_dict(grid.to_dict()).inner(grid) == grid.inner(grid)


def test_moment_inner_against_quadrature():
    a = GridFactor(-1.0, 0.25, np.array([0.0, 1.0, 2.0, 0.5, -1.0, 0.3, 0.0, 1.0, 0.0]))
    c = GridFactor(-0.4, 0.3, np.array([1.0, -0.5, 0.0, 2.0]))
    x = np.linspace(-1.5, 1.5, 600001)
    oracle = np.trapezoid(x ** 2 * a(x) * c(x), x)
    assert a.moment_inner(c, 2) == pytest.approx(oracle, abs=1e-9)
