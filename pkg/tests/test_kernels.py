import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from levyroot import (DomainError, abel_energy_decomposition, generate_path, kernel_moment_integrals,
                      p1_delta_action, poisson_eval, theta_x)
from levyroot.kernels import p1_unit_closed_form, poisson_eval_precise


def p0_ref(x, s):
    return (1 - x * x) / (math.pi * (1 - 2 * x * math.cos(s) + x * x))


@given(st.floats(0.01, 0.99), st.floats(0.01, 3.1))
def test_kernel_orders_are_derivatives(x, s):
    h = 1e-5
    d0 = (p0_ref(x, s + h) - p0_ref(x, s - h)) / (2 * h)
    assert poisson_eval(0, x, s) == pytest.approx(p0_ref(x, s), rel=1e-12)
    assert poisson_eval(1, x, s) == pytest.approx(-(1 - x) * d0, rel=1e-5, abs=1e-9)
    d1 = (poisson_eval(1, x, s + h) - poisson_eval(1, x, s - h)) / (2 * h)
    assert poisson_eval(2, x, s) == pytest.approx(d1, rel=1e-4, abs=1e-6)


def test_p0_has_unit_mass_on_half_period():
    assert quad(lambda s: poisson_eval(0, 0.9, s), 0, math.pi, points=[0.0])[0] == pytest.approx(1.0)


def test_bad_order():
    with pytest.raises(Exception):
        poisson_eval(3, 0.5, 0.1)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9, 0.999])
def test_theta_is_root(x):
    th = theta_x(x)
    assert 0 < th < math.pi
    assert abs(poisson_eval_precise(2, x, th)) < 1e-10


def test_theta_limits():
    assert theta_x(0.999) < 0.15
    assert theta_x(1 - 1e-8) < theta_x(0.999)
    # oracle: numeric root of P2 near x = 0
    x = 1e-4
    ref = brentq(lambda s: poisson_eval_precise(2, x, s), 0.5, 3.0)
    assert theta_x(x) == pytest.approx(ref, rel=1e-10)
    assert abs(theta_x(x) - math.pi / 2) < 1e-3


def test_theta_domain():
    for x in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            theta_x(x)


@pytest.mark.parametrize("x", [0.5, 0.9, 0.99])
def test_moments_against_quadrature(x):
    m = kernel_moment_integrals(x, 0.5)
    f = lambda v: v * poisson_eval(2, x, v)
    th = theta_x(x)
    signed = quad(f, 0, math.pi, points=[th], limit=400, epsabs=1e-13)[0]
    absm = quad(lambda v: abs(f(v)), 0, math.pi, points=[th], limit=400, epsabs=1e-13)[0]
    pts = [th] if th > 0.5 else None
    tail = quad(lambda v: abs(f(v)), 0.5, math.pi, points=pts, limit=400, epsabs=1e-13)[0]
    assert m.signed_moment == pytest.approx(signed, abs=1e-10)
    assert m.abs_moment == pytest.approx(absm, abs=1e-10)
    assert m.tail_abs_moment == pytest.approx(tail, abs=1e-10)


def test_moment_limits():
    m = kernel_moment_integrals(1 - 1e-4, 0.5)
    assert abs(m.abs_moment - 5 / (2 * math.pi)) < 1e-2
    assert abs(m.signed_moment + 2 / math.pi) < 1e-3
    assert m.tail_abs_moment < 1e-3


def test_moment_domain():
    with pytest.raises(DomainError):
        kernel_moment_integrals(1.0)
    with pytest.raises(DomainError):
        kernel_moment_integrals(0.5, 4.0)


def test_delta_action_unit_closed_form():
    for x in (0.3, 0.9, 1 - 1e-4):
        assert p1_delta_action(np.ones(513), x) == pytest.approx(p1_unit_closed_form(x), abs=1e-10)
    ref = quad(lambda s: poisson_eval(1, 0.7, s), 0, math.pi)[0]
    assert p1_unit_closed_form(0.7) == pytest.approx(ref, rel=1e-12)


def test_delta_action_limits():
    s = np.linspace(0, math.pi, 4097)
    for x in (1 - 1e-3, 1 - 1e-4):
        assert abs(p1_delta_action(np.cos(s), x) - 2 / math.pi) < 5 * (1 - x) * 10
    lin = [p1_delta_action(s, x) for x in (1 - 1e-3, 1 - 1e-4)]
    assert abs(lin[1]) < abs(lin[0])


def test_decomposition_zero_path():
    d = abel_energy_decomposition(generate_path("constant_zero", 1.0, 256), 0.9)
    assert d.total == d.boundary_term == d.i1 == d.j2 == d.k1 == d.k2 == 0.0


@pytest.mark.parametrize("kind,kw", [("linear", {}), ("smooth_fourier", {"coeffs": [0.4, 0.7, -0.3]}),
                                     ("brownian", {})])
def test_decomposition_assembles(kind, kw):
    p = generate_path(kind, 1.0, 512, 3, **kw)
    d = abel_energy_decomposition(p, 0.99)
    assert abs(d.residual) < 1e-9 * max(1.0, abs(d.total))


def test_decomposition_limits_linear():
    p = generate_path("linear", 2.0, 256, slope=0.5)
    beta = 1.0
    d = abel_energy_decomposition(p, 1 - 1e-4)
    assert d.i1 == pytest.approx(-(4 / 2.0) * beta ** 2, rel=1e-3)
    assert d.j2 == pytest.approx((2 / 2.0) * beta ** 2, rel=1e-3)
    assert abs(d.k1) < 1e-3
    assert abs(d.k2) < 1e-3
