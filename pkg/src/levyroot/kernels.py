"""Poisson kernels on [0, pi] and the Abel decomposition of path energies.

With D = 1 - 2x cos s + x^2 = (1-x)^2 + 4x sin^2(s/2):

    P0 = (1/pi) (1 - x^2) / D
    P1 = -(1-x) dP0/ds = (2/pi) x (1-x)(1-x^2) sin s / D^2
    P2 = dP1/ds      = (2/pi) x (1-x)(1-x^2) [cos s / D^2 - 4x sin^2 s / D^3]

D is always formed from (1-x)^2 and sin^2(s/2), so no cancellation occurs
near s = 0 as x -> 1.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError, ParameterError
from .paths import Path, _sq_diff_integral
from .summation import path_abel

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _check_x(x):
    if np.any(np.asarray(x) < 0) or np.any(np.asarray(x) >= 1):
        raise DomainError("x must lie in [0, 1)")


def _denominator(x, s):
    h = np.sin(0.5 * s)
    return (1 - x) ** 2 + 4 * x * h * h


def poisson_eval(order: int, x, s):
    """P_order(x, s); s may be any real (the kernels are 2 pi periodic)."""
    _check_x(x)
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    D = _denominator(x, s)
    if order == 0:
        return (1 - x) * (1 + x) / (math.pi * D)
    c = (2 / math.pi) * x * (1 - x) * (1 - x * x)
    if order == 1:
        return c * np.sin(s) / (D * D)
    if order == 2:
        # cos s * D - 4x sin^2 s, written in u = sin^2(s/2) to keep it exact near the root
        u = np.sin(0.5 * s) ** 2
        b = (1 - x) ** 2 - u * (12 * x + 2 * (1 - x) ** 2) + 8 * x * u * u
        return c * b / (D * D * D)
    raise ParameterError("order must be 0, 1 or 2")


def theta_x(x: float) -> float:
    """The zero of P2(x, .) in (0, pi); P2 >= 0 exactly on [0, theta_x].

    Solves 8x u^2 - (12x + 2(1-x)^2) u + (1-x)^2 = 0 for u = sin^2(theta/2),
    which is cos(theta) = (sqrt((1+x^2)^2 + 32x^2) - (1+x^2)) / (4x) in
    cancellation-free form.  The root is evaluated with 40 digits and then
    rounded, since near x = 1 the slope of P2 at the root is ~1/(1-x)^3 and
    one ulp of theta already moves P2 by ~1e-10.
    """
    if not 0 < x < 1:
        raise DomainError("theta_x needs 0 < x < 1")
    with mpmath.workdps(40):
        xm = mpmath.mpf(x)
        q = (1 - xm) ** 2
        B = 12 * xm + 2 * q
        u = 2 * q / (B + mpmath.sqrt(B * B - 32 * xm * q))
        return float(2 * mpmath.asin(mpmath.sqrt(u)))


def poisson_eval_precise(order: int, x: float, s: float, dps: int = 50) -> float:
    """Scalar kernel value in extended precision, free of double rounding in D."""
    _check_x(x)
    with mpmath.workdps(dps):
        xm, sm = mpmath.mpf(x), mpmath.mpf(s)
        D = (1 - xm) ** 2 + 4 * xm * mpmath.sin(sm / 2) ** 2
        if order == 0:
            return float((1 - xm * xm) / (mpmath.pi * D))
        c = 2 / mpmath.pi * xm * (1 - xm) * (1 - xm * xm)
        if order == 1:
            return float(c * mpmath.sin(sm) / D ** 2)
        if order == 2:
            return float(c * (mpmath.cos(sm) / D ** 2 - 4 * xm * mpmath.sin(sm) ** 2 / D ** 3))
    raise ParameterError("order must be 0, 1 or 2")


def _primitive(x, v):
    """F(v) = v P1(x, v) + (1 - x) P0(x, v), a primitive of v P2(x, v)."""
    return v * poisson_eval(1, x, v) + (1 - x) * poisson_eval(0, x, v)


@dataclass(frozen=True)
class KernelMoments:
    x: float
    theta: float
    abs_moment: float
    signed_moment: float
    tail_abs_moment: float
    delta: float


def kernel_moment_integrals(x: float, delta: float = 0.5) -> KernelMoments:
    """int v|P2|, int v P2 over [0, pi] and int v|P2| over [delta, pi], in closed form."""
    if not 0 < x < 1:
        raise DomainError("x must lie in (0, 1)")
    if not 0 <= delta <= math.pi:
        raise DomainError("delta must lie in [0, pi]")
    th = theta_x(x)
    F0, Fth, Fpi, Fd = (float(_primitive(x, v)) for v in (0.0, th, math.pi, delta))
    abs_m = 2 * Fth - F0 - Fpi
    signed = Fpi - F0
    tail = Fd - Fpi if delta >= th else (Fth - Fd) + (Fth - Fpi)
    return KernelMoments(x, th, abs_m, signed, tail, delta)


def p0_primitive(x, s):
    """G(s) = int_0^s P0(x, t) dt on [0, pi]; G(pi) = 1."""
    return (2 / math.pi) * np.arctan2((1 + x) * np.sin(0.5 * s), (1 - x) * np.cos(0.5 * s))


def _graded_cells(nodes, x, ends=(True, False)):
    """Refine ``nodes`` geometrically towards 0 (and/or pi) on the kernel scale 1 - x."""
    scale = max(1 - x, 1e-300)
    extra = []
    g = scale * 2.0 ** np.arange(-6, 60, 0.5)
    g = g[g < nodes[-1] - nodes[0]]
    if ends[0]:
        extra.append(nodes[0] + g)
    if ends[1]:
        extra.append(nodes[-1] - g)
    return np.unique(np.concatenate([nodes] + extra))


def _gl_cells(edges):
    """Gauss-Legendre nodes and weights on each cell; returns (points, weights), shape (cells, 10)."""
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + b) * 0.5 + half * _GL_X, half * _GL_W


def p1_integral(x: float, s, y, bubble=None) -> float:
    """int P1(x, s) psi(s) ds over [s_0, s_M] for psi piecewise linear through (s, y).

    ``bubble[j]`` adds bubble[j] * (s - s_j)(s - s_{j+1}) on segment j, which
    makes psi piecewise quadratic.  The linear part uses the exact primitive
    -(1-x) P0 psi + (1-x) b G; the bubbles use graded Gauss-Legendre cells.
    """
    _check_x(x)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    b = np.diff(y) / np.diff(s)
    G = p0_primitive(x, s)
    P0 = poisson_eval(0, x, s)
    val = -(1 - x) * (P0[-1] * y[-1] - P0[0] * y[0]) + (1 - x) * float(np.sum(b * np.diff(G)))
    if bubble is not None and np.any(bubble):
        edges = _graded_cells(s, x)
        pts, wts = _gl_cells(edges)
        seg = np.clip(np.searchsorted(s, 0.5 * (edges[:-1] + edges[1:])) - 1, 0, s.size - 2)
        bub = bubble[seg, None] * (pts - s[seg, None]) * (pts - s[seg + 1, None])
        val += float(np.sum(wts * bub * poisson_eval(1, x, pts)))
    return float(val)


def p1_delta_action(phi, x: float, s=None) -> float:
    """int_0^pi P1(x, s) phi(s) ds for phi sampled on [0, pi] (uniform unless ``s`` is given)."""
    phi = np.asarray(phi, dtype=float)
    if s is None:
        s = np.linspace(0.0, math.pi, phi.size)
    return p1_integral(x, s, phi)


def p1_unit_closed_form(x: float) -> float:
    """int_0^pi P1(x, s) ds = (1+x)/pi - (1-x)^2 / ((1+x) pi)."""
    return (1 + x) / math.pi - (1 - x) ** 2 / ((1 + x) * math.pi)


@dataclass(frozen=True)
class AbelDecomposition:
    x: float
    total: float
    boundary_term: float
    e0_term: float
    i1: float
    j2: float
    k1: float
    k2: float
    truncation_bound: float

    @property
    def assembled(self) -> float:
        return self.boundary_term + self.e0_term + self.i1 + self.j2 + self.k1 + self.k2

    @property
    def residual(self) -> float:
        return self.total - self.assembled


def _outer_cells(x, period, width, both_ends):
    base = np.arange(0.0, period + 0.5 * width, width)
    base[-1] = period
    return _graded_cells(base, x, (True, both_ends))


def abel_energy_decomposition(path: Path, x: float, eps: float = 1e-13) -> AbelDecomposition:
    """Split (1-x) sum <phi,e_n>^2 x^n into the boundary, P1 and P2 pieces.

    With beta = phi(T), f(s) = phi(Ts/pi):
      boundary = (2/T) beta^2,  e0 = -(1-x) beta^2 / T
      i1 = -(2 pi/T) beta int P1(x, pi - s) f(s) ds
      j2 = (pi/T) int (P1(x, s) + P1(x, pi - s)) f(s)^2 ds
      k1 = (pi/4T) int_0^{2pi} P2(x, u) H(u) du,  H(u) = int |f(u-t) - f(t)|^2 dt
      k2 = -(pi/2T) int_0^pi P2(x, v) E(v) dv,   E(v) = int_0^{pi-v} |f(t+v) - f(t)|^2 dt
    """
    if not 0 < x < 1:
        raise DomainError("x must lie in (0, 1)")
    T = path.T
    s = path.grid * (math.pi / T)
    f = path.values
    beta = float(f[-1])
    res = path_abel(path, x, eps)
    boundary = 2 * beta * beta / T
    e0 = -(1 - x) * beta * beta / T
    # reversed variable u = pi - s keeps the kernel peak at u = 0
    u = (math.pi - s)[::-1]
    fr = f[::-1]
    i1 = -(2 * math.pi / T) * beta * p1_integral(x, u, fr)
    slope = np.diff(f) / np.diff(s)
    sq = f * f
    j2 = (math.pi / T) * (p1_integral(x, s, sq, slope * slope)
                          + p1_integral(x, u, sq[::-1], (slope * slope)[::-1]))
    width = float(np.min(np.diff(s)))
    # E(v) has kinks where v is a difference of nodes, H(u) where u is a sum of nodes
    pts, wts = _gl_cells(_outer_cells(x, math.pi, width, False))
    pts, wts = pts.ravel(), wts.ravel()
    E = np.array([_sq_diff_integral(s, f, v, 1.0, 0.0, math.pi - v) for v in pts])
    k2 = -(math.pi / (2 * T)) * float(np.sum(wts * poisson_eval(2, x, pts) * E))
    pts, wts = _gl_cells(_outer_cells(x, 2 * math.pi, width, True))
    pts, wts = pts.ravel(), wts.ravel()
    H = np.array([_sq_diff_integral(s, f, w, -1.0, max(0.0, w - math.pi), min(math.pi, w))
                  for w in pts])
    k1 = (math.pi / (4 * T)) * float(np.sum(wts * poisson_eval(2, x, pts) * H))
    return AbelDecomposition(x, res.value, boundary, e0, i1, j2, k1, k2, res.truncation_bound)


def kernel_check_csv(rows) -> str:
    """rows of (x, quantity, value, target)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "quantity", "value", "target", "abs_error"])
    for x, name, value, target in rows:
        w.writerow([f"{x:.17g}", name, f"{value:.17g}", f"{target:.17g}",
                    f"{abs(value - target):.17g}"])
    return buf.getvalue()
