import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gammaln, jv

from levyroot import (DomainError, NonConvergenceError, ParameterError, Path, PathEnsemble,
                      ResolutionError, cesaro_qv, coefficient_sequence, generate_path,
                      laplacian_difference_quotient, levy_symbol, qv_limit_dyadic, riemann_sandwich,
                      spherical_kernel, spherical_mean, symbol_convergence)
from levyroot.levy import gaussian_spectral_ensemble, synthesize_paths, wallis_ratio

FOUR_PI_SQ = 4 * math.pi ** 2


def bessel_kernel(n, omega):
    # int_0^1 (1-x^2)^(nu-1/2) cos(w x) dx normalized at w = 0, nu = (n-1)/2
    nu = (n - 1) / 2
    return math.exp(gammaln(nu + 1) + nu * math.log(2 / omega)) * jv(nu, omega)


def test_symbol_smooth_path_is_zero():
    p = generate_path("smooth_fourier", 1.0, 1 << 12, coeffs=[0.0, 1.0, -0.4])
    assert levy_symbol(p) == 0.0


def test_symbol_brownian(bm42):
    assert levy_symbol(bm42) == pytest.approx(-FOUR_PI_SQ, rel=0.05)


def test_symbol_scaled_brownian():
    p = generate_path("scaled_brownian", 1.0, 1 << 16, 3, sigma=1.5)
    assert levy_symbol(p) == pytest.approx(-FOUR_PI_SQ * 2.25, rel=0.05)


@pytest.mark.parametrize("sigma", [0.5, 2.0, 3.0])
def test_symbol_scaling_identity(bm42, sigma):
    base = levy_symbol(bm42)
    v = levy_symbol(bm42.scale(sigma))
    if sigma in (0.5, 2.0):
        assert v == sigma * sigma * base
    else:
        # rounding of sigma * phi(t) before differencing
        assert abs(v - sigma * sigma * base) <= 4 * math.ulp(sigma * sigma * base)


def test_symbol_gate():
    v = np.zeros(65)
    v[1::2] = 1.0
    with pytest.raises(NonConvergenceError):
        levy_symbol(Path(1.0, np.linspace(0, 1, 65), v))


def test_symbol_convergence_smooth():
    c = [0.0, 0.8, -0.5, 0.3]
    ens = PathEnsemble(synthesize_paths([c], M=1 << 14))
    rep = symbol_convergence(ens, [16, 64, 256])
    e = sum(x * x for x in c)
    np.testing.assert_allclose(rep.errors, [(e / n) ** 2 for n in (16, 64, 256)], rtol=1e-7)
    assert rep.decreasing


def test_symbol_convergence_brownian(bm42):
    rep = symbol_convergence(PathEnsemble([bm42]), [256, 1024, 4096])
    assert rep.decreasing
    q = qv_limit_dyadic(bm42).qv
    assert rep.errors[-1] == pytest.approx((cesaro_qv(bm42, 4096) - q) ** 2, rel=1e-12)


def test_symbol_convergence_weighted_mean(bm42):
    smooth = generate_path("smooth_fourier", 1.0, 1 << 16, coeffs=[0.0, 1.0])
    ens = PathEnsemble([bm42, smooth], [0.5, 0.5])
    rep = symbol_convergence(ens, [256, 1024])
    np.testing.assert_array_equal(np.array(rep.errors), 0.5 * rep.per_path[0] + 0.5 * rep.per_path[1])


def test_symbol_convergence_gate_lists_paths():
    v = np.zeros(65)
    v[1::2] = 1.0
    bad = Path(1.0, np.linspace(0, 1, 65), v)
    good = generate_path("linear", 1.0, 64)
    with pytest.raises(NonConvergenceError, match=r"\[1\]"):
        symbol_convergence(PathEnsemble([good, bad]), [8])


def test_ensemble_validation_and_json(bm42):
    with pytest.raises(ParameterError):
        PathEnsemble([])
    with pytest.raises(ParameterError):
        PathEnsemble([bm42], [-1.0])
    with pytest.raises(ParameterError):
        PathEnsemble([bm42, generate_path("linear", 2.0, 8)])
    ens = PathEnsemble([generate_path("linear", 1.0, 8)], [0.25])
    back = PathEnsemble.from_json(ens.to_json())
    assert back.weights.tolist() == [0.25]
    np.testing.assert_array_equal(back.paths[0].values, ens.paths[0].values)


def test_wallis_ratio():
    assert wallis_ratio(2) == pytest.approx(math.gamma(1) ** 2 / (math.gamma(1.5) * math.gamma(0.5)))
    assert abs(wallis_ratio(10 ** 6) - 1) < 1e-5
    with pytest.raises(DomainError):
        wallis_ratio(1)


def test_spherical_kernel_at_zero():
    k = spherical_kernel(50, 0.0, 3.0)
    assert k.value == 1.0 and k.value_quadrature == 1.0
    assert spherical_kernel(50, 0.7, 0.0).value == 1.0


@pytest.mark.parametrize("n", [10, 50, 200])
@pytest.mark.parametrize("rho", [0.1, 1.0])
def test_spherical_kernel_against_bessel(n, rho):
    k = spherical_kernel(n, rho, float(n))
    omega = 2 * math.pi * rho * math.sqrt(n)
    ref = bessel_kernel(n, omega)
    assert abs(k.value_quadrature - ref) < 1e-10
    assert abs(k.value_series - ref) < 1e-10
    assert abs(k.value - math.exp(k.x_n)) <= k.error_bound


def test_spherical_kernel_documented_point():
    k = spherical_kernel(200, 0.5, 200.0)
    assert k.x_n == pytest.approx(-math.pi ** 2 / 2)
    assert k.error_bound == pytest.approx((math.pi ** 2 / 2 + 1) * math.exp(math.pi ** 2 / 2) / 200)
    assert abs(k.value - math.exp(-math.pi ** 2 / 2)) <= k.error_bound


@given(st.integers(3, 400), st.floats(0.0, 2.0), st.floats(0.0, 500.0))
def test_spherical_kernel_bounded_and_consistent(n, rho, r2):
    k = spherical_kernel(n, rho, r2)
    assert abs(k.value) <= 1 + 1e-12
    assert abs(k.value_quadrature - k.value_series) < 1e-8
    assert abs(k.value - math.exp(k.x_n)) <= k.error_bound * (1 + 1e-12)


def test_spherical_kernel_domain():
    with pytest.raises(DomainError):
        spherical_kernel(2, 1.0, 1.0)
    with pytest.raises(DomainError):
        spherical_kernel(5, 1.0, -1.0)


def test_spherical_mean_rho_zero(bm42):
    ens = PathEnsemble([bm42, generate_path("linear", 1.0, 1 << 16)], [0.3, 0.7])
    out = spherical_mean(ens, 0.0, 64)
    np.testing.assert_array_equal(out.ensemble.weights, ens.weights)


def test_spherical_mean_smooth_path_tends_to_one():
    p = generate_path("smooth_fourier", 1.0, 1 << 14, coeffs=[0.0, 1.0, 0.5])
    ens = PathEnsemble([p])
    mults = [spherical_mean(ens, 0.5, n).multipliers[0] for n in (256, 4096)]
    # bounded energy gives 1 - multiplier of order 1/n
    assert abs(1 - mults[1]) < abs(1 - mults[0]) / 12
    assert abs(1 - mults[1]) < 2e-3


def test_spherical_mean_brownian_limit(bm42):
    rho, n = 0.1, 4096
    out = spherical_mean(PathEnsemble([bm42]), rho, n)
    r2 = float(np.sum(coefficient_sequence(bm42, n).energy))
    assert out.r_n_sq[0] == pytest.approx(r2)
    k = spherical_kernel(n, rho, r2)
    assert out.multipliers[0] == k.value
    q = qv_limit_dyadic(bm42).qv
    assert out.multipliers[0] ** 2 == pytest.approx(math.exp(-FOUR_PI_SQ * rho ** 2 * q), rel=0.02)


def test_difference_quotient_zero():
    assert laplacian_difference_quotient(0.0, 0.1) == 0.0


@pytest.mark.parametrize("q", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("rho", [1e-1, 1e-2, 1e-3])
def test_difference_quotient_taylor(q, rho):
    v = laplacian_difference_quotient(q, rho)
    assert abs(v + FOUR_PI_SQ * q) <= 4 * math.pi ** 4 * q * q * rho * rho * 1.01


def test_difference_quotient_documented_point():
    assert abs(laplacian_difference_quotient(1.0, 1e-3) + FOUR_PI_SQ) < 1e-4 * FOUR_PI_SQ


def test_difference_quotient_domain():
    with pytest.raises(ParameterError):
        laplacian_difference_quotient(1.0, 0.0)
    with pytest.raises(ParameterError):
        laplacian_difference_quotient(-1.0, 0.1)


def test_sandwich_constant_path():
    rep = riemann_sandwich(generate_path("constant_zero", 1.0, 1 << 10), 4, 8)
    assert rep.i_mn == rep.lower == rep.upper == 0.0
    assert rep.holds


@pytest.mark.parametrize("seed", range(3))
def test_sandwich_brownian(seed):
    rep = riemann_sandwich(generate_path("brownian", 1.0, 1 << 16, seed), 8, 14)
    assert rep.holds
    # identity between the reordered sum and the partition sums
    s = 1 << 6
    boundary = generate_path("brownian", 1.0, 1 << 16, seed).evaluate(np.array([2.0 ** -8]))[0] ** 2
    assert rep.scaled == pytest.approx(np.mean(rep.j_r) + boundary / s, rel=1e-12)


def test_sandwich_resolution():
    with pytest.raises(ResolutionError):
        riemann_sandwich(generate_path("brownian", 1.0, 1 << 10, 0), 4, 12)
    with pytest.raises(ParameterError):
        riemann_sandwich(generate_path("brownian", 1.0, 1 << 10, 0), 5, 5)


def test_gaussian_spectral_ensemble():
    ens = gaussian_spectral_ensemble([0.0, 0.5, 0.2], 200, seed=1)
    assert len(ens) == 200 and ens.total_mass == pytest.approx(1.0)
    c1 = [coefficient_sequence(p, 2).coeffs[1] for p in ens.paths]
    assert np.std(c1) == pytest.approx(0.5, rel=0.15)


@pytest.mark.parametrize("n", [10, 50])
def test_spherical_kernel_decreasing_until_first_zero(n):
    import mpmath
    j1 = float(mpmath.besseljzero((n - 1) / 2, 1))
    rho = 1.0
    r2_zero = (j1 / (2 * math.pi * rho)) ** 2
    vals = [spherical_kernel(n, rho, r2).value for r2 in np.linspace(0, r2_zero, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1]) < 1e-10
    # past the zero the kernel changes sign, so it is not monotone on all of r2 >= 0
    assert spherical_kernel(n, rho, 1.2 * r2_zero).value < 0
