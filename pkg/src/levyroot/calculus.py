"""Operations on square roots of measures at finite truncation.

Coordinates are 0-based throughout: rho[0] is the direction component along
the first coordinate.  The translation is (tau_h f)(x) = f(x - h), the
Fourier transform is int f(x) exp(2 pi i <x, xi>) dx, and the directional
derivative is d/dt tau_{t rho} f at t = 0, so F(d_rho f) = 2 pi i <xi, rho> fhat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PreconditionError, UnsupportedMethodError
from .factors import (BlockFactor, ClosedMultiplier, GaussFactor, GridFactor, SpectralGrid,
                      factor_box, factor_inner, factor_moment)
from .systems import (MixtureSystem, ProductSystem, _tail_inner, as_mixture, factor_mass,
                      hellinger_distance, hellinger_inner, norm)

_TWO_PI = 2 * math.pi


def _vector(h, level: int, name: str) -> np.ndarray:
    h = np.asarray(h, dtype=float).ravel()
    if h.size > level:
        if np.any(h[level:]):
            raise ParameterError(f"{name} is supported beyond level {level}")
        h = h[:level]
    return np.pad(h, (0, level - h.size))


def _map_terms(f, fn) -> MixtureSystem:
    f = as_mixture(f)
    return MixtureSystem([(a, fn(s)) for a, s in f.terms], f.level)


# structure of positive systems

@dataclass(frozen=True)
class SuperprojectiveReport:
    holds: bool
    worst_slack: float
    slacks: tuple


def _single_positive(f) -> ProductSystem:
    if isinstance(f, ProductSystem):
        s, c = f, 1.0
    else:
        f = as_mixture(f)
        if len(f.terms) != 1:
            raise TypeError("the compatibility condition is stated for a single positive system")
        c, s = f.terms[0]
        if c.imag != 0 or c.real < 0:
            raise TypeError("complex or negative coefficient: not a positive system")
        c = c.real
    if not s.is_positive:
        raise TypeError("the compatibility condition is stated for positive systems")
    if any(g.dim != 1 for g in s.factors):
        raise UnsupportedMethodError("blocks do not reduce to per-coordinate masses")
    return s if c == 1.0 else s.replace(0, s.factors[0].scaled(c))


def check_superprojective(f, tol: float = 1e-12) -> SuperprojectiveReport:
    """Slack 1 - m_{n+1}^2 of int |f_{n+1}|^2 dx' <= |f_n|^2 at every level n >= 1.

    For a product system the marginal of |f_{n+1}|^2 is |f_n|^2 m_{n+1}^2, so
    the condition is m_{n+1} <= 1 for the level coordinates beyond the first
    and for every tail mass.
    """
    s = _single_positive(f)
    masses = list(s.masses[1:]) + list(s.tail)
    slacks = tuple(1 - m * m for m in masses)
    worst = min(slacks) if slacks else 0.0
    return SuperprojectiveReport(worst >= -tol, worst, slacks)


def _canonical(s: ProductSystem):
    """(prod of all masses, system with unit-mass factors and projective tail)."""
    out, c = [], 1.0
    for g in s.factors:
        m = factor_mass(g)
        c *= m
        if isinstance(g, GaussFactor) and g.is_positive:
            out.append(GaussFactor.gaussian(g.center, g.width, 1.0) if m else g)
        else:
            out.append(g.scaled(1 / m) if m else g)
    return c * math.prod(s.tail), ProductSystem(out)


@dataclass(frozen=True)
class Projectivized:
    system: ProductSystem
    distance: float


def projectivize(f) -> Projectivized:
    """g_n = f_n * prod_{k>n} m_k: the first factor carries every later mass, the rest are normalized."""
    s = _single_positive(f)
    if not check_superprojective(s).holds:
        raise PreconditionError("the system is not superprojective")
    c, unit = _canonical(s)
    g0 = unit.factors[0]
    first = GaussFactor.gaussian(g0.center, g0.width, c) if isinstance(g0, GaussFactor) else g0.scaled(c)
    out = unit.replace(0, first)
    cf, uf = _canonical(s)
    cg, ug = _canonical(out)
    dist = hellinger_distance(MixtureSystem.of(uf, cf), MixtureSystem.of(ug, cg))
    return Projectivized(out, dist)


@dataclass(frozen=True)
class Decomposition:
    h1: MixtureSystem
    h2: MixtureSystem
    h3: MixtureSystem
    h4: MixtureSystem
    sources: tuple = ()  # per part, the index of the input term behind each output term
    systems: tuple = ()  # the input terms' systems

    def parts(self):
        return self.h1, self.h2, self.h3, self.h4

    def recombine(self) -> MixtureSystem:
        """h1 - h2 + i (h3 - h4), term by term in the input order."""
        re = [0.0] * len(self.systems)
        im = [0.0] * len(self.systems)
        for (target, sign), part, src in zip(((re, 1), (re, -1), (im, 1), (im, -1)), self.parts(), self.sources):
            for (c, _), j in zip(part.terms, src):
                target[j] += sign * c.real
        return MixtureSystem([(complex(a, b), s) for a, b, s in zip(re, im, self.systems)], self.h1.level)


def decompose(f) -> Decomposition:
    """f = h1 - h2 + i (h3 - h4) with positive h's, splitting each coefficient a + bi."""
    f = as_mixture(f)
    for _, s in f.terms:
        if not s.is_positive:
            raise PreconditionError("decomposition needs positive product terms")
    parts = ([], [], [], [])
    sources = ([], [], [], [])
    for j, (c, s) in enumerate(f.terms):
        for bucket, src, v in zip(parts, sources, (max(c.real, 0.0), max(-c.real, 0.0),
                                                   max(c.imag, 0.0), max(-c.imag, 0.0))):
            if v > 0:
                bucket.append((v, s))
                src.append(j)
    return Decomposition(*(MixtureSystem(p, f.level) for p in parts),
                         tuple(tuple(s) for s in sources), tuple(s for _, s in f.terms))


# marginals

@dataclass(frozen=True)
class Marginal:
    """Level-n density of f * conj(g) as a sum of product densities."""
    n: int
    terms: tuple  # (coefficient, ((f_i, g_i), ...))
    tail_masses: tuple  # total mass after truncating at n, n+1, ..., N
    monotone: bool | None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1], dtype=complex)
        for c, pairs in self.terms:
            v = np.full(x.shape[:-1], c, dtype=complex)
            start = 0
            for a, b in pairs:
                xa = x[..., start] if a.dim == 1 else x[..., start:start + a.dim]
                v *= a(xa) * np.conj(b(xa))
                start += a.dim
            out += v
        return out

    def total(self) -> complex:
        out = 0j
        for c, pairs in self.terms:
            out += c * math.prod(factor_inner(a, b) for a, b in pairs)
        return out

    def box(self, lo, hi) -> complex:
        """Measure of the box prod [lo_i, hi_i]."""
        out = 0j
        for c, pairs in self.terms:
            v = c
            for i, (a, b) in enumerate(pairs):
                if a.dim != 1:
                    raise UnsupportedMethodError("box integrals over blocks")
                v *= factor_box(a, b, lo[i], hi[i])
            out += v
        return out


def _split(s: ProductSystem, n: int) -> int:
    count = 0
    for k, (start, d) in enumerate(s.spans):
        if start == n:
            return k
        if start < n < start + d:
            raise ParameterError(f"level {n} cuts through a block")
        count = k + 1
    return count


def product_marginal(f, g, n: int) -> Marginal:
    """prod_{i<=n} f_i conj(g_i) * prod_{i>n} <f_i, g_i>, extended bilinearly over terms."""
    f, g = as_mixture(f), as_mixture(g)
    f._check(g)
    if not 0 <= n <= f.level:
        raise ParameterError(f"n must lie in [0, {f.level}]")
    terms = []
    for a, s in f.terms:
        for b, t in g.terms:
            if s.spans != t.spans:
                raise UnsupportedMethodError("marginals need matching layouts")
            k = _split(s, n)
            tail = math.prod(factor_inner(x, y) if x.dim == 1 else x.inner(y)
                             for x, y in zip(s.factors[k:], t.factors[k:]))
            coef = a * np.conj(b) * tail * _tail_inner(s, t)
            terms.append((coef, tuple(zip(s.factors[:k], t.factors[:k]))))
    masses = _marginal_masses(f, g, n)
    positive = all(s.is_positive and a.imag == 0 and a.real >= 0 for a, s in f.terms + g.terms)
    mono = bool(np.all(np.diff(masses) <= 1e-14 * max(1.0, abs(masses[0])))) if positive else None
    return Marginal(n, tuple(terms), tuple(masses), mono)


def _marginal_masses(f, g, n):
    """Total mass of the level-n marginal built from truncations at n, n+1, ..., N.

    Truncating at level n + k keeps the overlaps of coordinates n+1..n+k and
    drops the rest, which is the finite analogue of the sequence h_k^n.
    """
    out = []
    for m in range(n, f.level + 1):
        total = 0j
        for a, s in f.terms:
            for b, t in g.terms:
                k = _split(s, m)
                total += a * np.conj(b) * math.prod(
                    factor_inner(x, y) if x.dim == 1 else x.inner(y)
                    for x, y in zip(s.factors[:k], t.factors[:k]))
        out.append(total.real)
    return np.array(out)


# transforms

def translate(f, h) -> MixtureSystem:
    """(tau_h f)(x) = f(x - h); norms are preserved exactly."""
    f = as_mixture(f)
    h = _vector(h, f.level, "h")

    def move(s):
        return s.with_factors([g.translate(h[i] if g.dim == 1 else h[i:i + g.dim])
                               for g, (i, _) in zip(s.factors, s.spans)])
    return _map_terms(f, move)


def _factor_fourier(g):
    if isinstance(g, BlockFactor):
        raise UnsupportedMethodError("Fourier transform of grid blocks")
    return g.fourier()


def fourier(f) -> MixtureSystem:
    """Componentwise transform with kernel exp(+2 pi i x xi)."""
    return _map_terms(f, lambda s: s.with_factors([_factor_fourier(g) for g in s.factors]))


@dataclass(frozen=True)
class ProductMeasure:
    """prod_i weights_i Normal(means_i, variances_i) on the first len(means) coordinates.

    A zero variance is a point mass; all-zero means and variances with unit
    weights is the identity for convolution.
    """
    means: tuple
    variances: tuple
    weights: tuple

    def __init__(self, means, variances, weights=None):
        means = tuple(float(m) for m in means)
        variances = tuple(float(v) for v in variances)
        weights = tuple(float(w) for w in (weights if weights is not None else [1.0] * len(means)))
        if not len(means) == len(variances) == len(weights):
            raise ParameterError("means, variances and weights differ in length")
        if any(v < 0 for v in variances) or any(w < 0 for w in weights):
            raise ParameterError("variances and weights must be nonnegative")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_system(cls, s: ProductSystem) -> "ProductMeasure":
        """The measure |s|^2 of a positive Gaussian product system."""
        if not all(isinstance(g, GaussFactor) and g.is_positive for g in s.factors):
            raise PreconditionError("measure systems must be positive Gaussian products")
        return cls([g.center for g in s.factors], [g.width ** 2 for g in s.factors],
                   [factor_mass(g) ** 2 for g in s.factors])

    @property
    def dim(self) -> int:
        return len(self.means)

    @property
    def total_mass(self) -> float:
        return math.prod(self.weights)

    def characteristic(self):
        """Per-coordinate multipliers whose product is int exp(2 pi i <x, xi>) mu(dx)."""
        return [ClosedMultiplier.gaussian_characteristic(m, v, w)
                for m, v, w in zip(self.means, self.variances, self.weights)]


def _as_measure(mu) -> ProductMeasure:
    if isinstance(mu, ProductMeasure):
        return mu
    if isinstance(mu, ProductSystem):
        return ProductMeasure.from_system(mu)
    if isinstance(mu, MixtureSystem) and len(mu.terms) == 1 and mu.terms[0][0] == 1:
        return ProductMeasure.from_system(mu.terms[0][1])
    raise TypeError("mu must be a ProductMeasure or a positive Gaussian product system")


def convolve(mu, f) -> MixtureSystem:
    """(mu * f)(x) = int f(x - y) mu(dy), coordinatewise on the coordinates mu covers."""
    mu = _as_measure(mu)
    f = as_mixture(f)
    if mu.dim > f.level:
        raise ParameterError(f"measure covers {mu.dim} coordinates, system has level {f.level}")

    def conv(s):
        out = list(s.factors)
        for k, g in enumerate(s.factors):
            start, d = s.spans[k]
            if start >= mu.dim:
                break
            if d != 1 or isinstance(g, SpectralGrid):
                raise UnsupportedMethodError(f"convolution of {type(g).__name__}")
            out[k] = g.convolve_gaussian(mu.means[start], mu.variances[start], mu.weights[start])
        return s.with_factors(out)
    return _map_terms(f, conv)


class CylinderFunction:
    """Bounded function w(x_1, ..., x_m) evaluated on arrays of shape (..., m)."""

    def __init__(self, func, m: int, bound: float):
        if not (bound >= 0 and math.isfinite(bound)):
            raise PreconditionError("the multiplier must be bounded")
        self.func, self.m, self.bound = func, int(m), float(bound)

    @classmethod
    def constant(cls, c, m: int = 1) -> "CylinderFunction":
        return cls(lambda x: np.full(np.shape(x)[:-1], c, dtype=complex), m, abs(c))

    @classmethod
    def from_grid(cls, lo, step, values) -> "CylinderFunction":
        """Piecewise-(multi)linear interpolant of grid values, zero outside the grid."""
        values = np.asarray(values)
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        step = np.atleast_1d(np.asarray(step, dtype=float))
        if values.ndim == 1:
            nodes = lo[0] + step[0] * np.arange(values.size)

            def func(x):
                x = np.asarray(x)[..., 0]
                re = np.interp(x, nodes, values.real, 0.0, 0.0)
                return re + 1j * np.interp(x, nodes, values.imag, 0.0, 0.0) if np.iscomplexobj(values) else re
            return cls(func, 1, float(np.max(np.abs(values))))
        from scipy.interpolate import RegularGridInterpolator
        axes = [lo[i] + step[i] * np.arange(values.shape[i]) for i in range(values.ndim)]
        interp = RegularGridInterpolator(axes, values, bounds_error=False, fill_value=0.0)
        return cls(interp, values.ndim, float(np.max(np.abs(values))))

    def __call__(self, x):
        return self.func(x)

    def conj(self) -> "CylinderFunction":
        return CylinderFunction(lambda x: np.conj(self.func(x)), self.m, self.bound)

    def __add__(self, other):
        return CylinderFunction(lambda x: self.func(x) + other.func(x), max(self.m, other.m),
                                self.bound + other.bound)

    def __mul__(self, other):
        return CylinderFunction(lambda x: self.func(x) * other.func(x), max(self.m, other.m),
                                self.bound * other.bound)


def _to_grid(g, half_width: float, points: int) -> GridFactor:
    if isinstance(g, GridFactor):
        return g
    if isinstance(g, GaussFactor):
        return g.to_grid(half_width, points)
    raise UnsupportedMethodError(f"no grid representation for {type(g).__name__}")


def multiply_cylinder(w, f, *, half_width: float = 8.0, points: int = 4096,
                      block_points: int = 513) -> MixtureSystem:
    """w x f for a bounded multiplier w of the first m coordinates.

    ``w`` is either a list of ClosedMultiplier (one per coordinate, applied in
    closed form where the factor family allows it) or a CylinderFunction.  A
    general CylinderFunction acts by L2 projection of the pointwise product:
    for m = 1 the first factor is converted to a grid of ``points`` nodes over
    center +- ``half_width`` widths, for m > 1 the first m factors become one
    grid block.
    """
    f = as_mixture(f)
    if isinstance(w, ClosedMultiplier):
        w = [w]
    if isinstance(w, (list, tuple)):
        if len(w) > f.level:
            raise ParameterError("multiplier covers more coordinates than the level")

        def sep(s):
            out = list(s.factors)
            for k, (start, d) in enumerate(s.spans):
                if start >= len(w):
                    break
                if d != 1:
                    raise UnsupportedMethodError("separable multipliers on blocks")
                out[k] = w[start].apply(out[k])
            return s.with_factors(out)
        return _map_terms(f, sep)
    if not isinstance(w, CylinderFunction):
        raise PreconditionError("the multiplier must be a CylinderFunction with a finite bound")
    m = w.m
    if m > f.level:
        raise ParameterError("multiplier covers more coordinates than the level")

    def checked(X):
        vals = w(X)
        if np.any(np.abs(vals) > w.bound * (1 + 1e-12)):
            raise PreconditionError("the multiplier exceeds its stated bound")
        return vals

    def apply(s):
        if m == 1 and s.factors[0].dim == 1:
            g = _to_grid(s.factors[0], half_width, points)
            return s.replace(0, g.multiply(lambda x: checked(x[..., None])))
        if s.factors[0].dim == m and isinstance(s.factors[0], BlockFactor):
            return s.replace(0, s.factors[0].multiply(checked))
        if any(d != 1 for _, d in s.spans[:m]) or s.spans[m - 1][0] != m - 1:
            raise UnsupportedMethodError("the first m coordinates must be 1-D factors or one block")
        grids = [_to_grid(g, half_width, block_points) for g in s.factors[:m]]
        vals = grids[0].values.astype(complex)
        for g in grids[1:]:
            vals = np.multiply.outer(vals, g.values)
        block = BlockFactor([g.lo for g in grids], [g.step for g in grids], vals)
        return ProductSystem((block.multiply(checked),) + s.factors[m:], s.tail)
    return _map_terms(f, apply)


# derivatives and moments

def _support(rho):
    return [(k, float(r)) for k, r in enumerate(rho) if r != 0]


def directional_derivative(f, rho, method: str = "closed_form", t: float = 1e-3) -> MixtureSystem:
    """d/dt tau_{t rho} f at t = 0.

    closed_form applies the product rule with each Gaussian factor replaced by
    -rho_k g_k'.  finite_difference uses central differences at steps t and
    t/2 (both scaled by 1/max|rho|) combined by Richardson extrapolation.
    """
    f = as_mixture(f)
    rho = _vector(rho, f.level, "rho")
    supp = _support(rho)
    if not supp:
        return MixtureSystem.zero(f.level)
    if method == "closed_form":
        terms = []
        for a, s in f.terms:
            for k, r in supp:
                idx, _ = s.coordinate(k)
                g = s.factors[idx]
                if not isinstance(g, GaussFactor):
                    raise UnsupportedMethodError(f"closed-form derivative of {type(g).__name__}")
                terms.append((-r * a, s.replace(idx, g.derivative())))
        return MixtureSystem(terms, f.level)
    if method == "finite_difference":
        if not t > 0:
            raise ParameterError("t must be positive")
        t = t / float(np.max(np.abs(rho)))
        out = (translate(f, t * rho).scaled(-1 / (6 * t)) + translate(f, -t * rho).scaled(1 / (6 * t))
               + translate(f, 0.5 * t * rho).scaled(4 / (3 * t)) + translate(f, -0.5 * t * rho).scaled(-4 / (3 * t)))
        return out
    raise ParameterError(f"unknown method {method!r}")


def symbol_multiply(fhat, rho) -> MixtureSystem:
    """2 pi i <xi, rho> x fhat, in closed form on Gaussian factors."""
    fhat = as_mixture(fhat)
    rho = _vector(rho, fhat.level, "rho")
    terms = []
    for a, s in fhat.terms:
        for k, r in _support(rho):
            idx, _ = s.coordinate(k)
            g = s.factors[idx]
            if not isinstance(g, (GaussFactor, GridFactor)):
                raise UnsupportedMethodError(f"symbol multiplication of {type(g).__name__}")
            terms.append((1j * _TWO_PI * r * a, s.replace(idx, g.times_x_power(1))))
    return MixtureSystem(terms, fhat.level)


def _spectral_moment(fhat: MixtureSystem, powers: dict) -> complex:
    total = 0j
    for a, s in fhat.terms:
        for b, t in fhat.terms:
            v = a * np.conj(b) * _tail_inner(s, t)
            for k, (x, y) in enumerate(zip(s.factors, t.factors)):
                if x.dim != 1:
                    raise UnsupportedMethodError("moments of grid blocks")
                p = powers.get(s.spans[k][0], 0)
                v *= factor_moment(x, y, p) if p else factor_inner(x, y)
            total += v
    return total


def cross_moment(f, i: int, j: int) -> float:
    """int xi_i xi_j d|fhat|^2 (0-based coordinates)."""
    f = as_mixture(f)
    if not (0 <= i < f.level and 0 <= j < f.level):
        raise ParameterError("coordinate beyond level")
    powers = {i: 2} if i == j else {i: 1, j: 1}
    return float(_spectral_moment(fourier(f), powers).real)


@dataclass(frozen=True)
class FrechetReport:
    lhs: float
    rhs: float
    sup_term: float
    rho_norm_sq: float
    identity_full: float
    identity_diagonal: float
    holds: bool


def frechet_bound_check(f, a, rho) -> FrechetReport:
    """||d_rho f||^2 <= sup_n (4 pi^2 / a_n^2) int xi_n^2 d|fhat|^2 * sum_n a_n^2 rho_n^2.

    Also returns the exact value 4 pi^2 int <xi, rho>^2 d|fhat|^2 (identity_full)
    and its diagonal part, which agree when the cross moments vanish.
    """
    f = as_mixture(f)
    if not f.is_real:
        raise PreconditionError("the bound is stated for real-valued systems")
    a = np.asarray(a, dtype=float).ravel()
    if a.size < f.level or np.any(a[:f.level] <= 0):
        raise ParameterError("need positive weights a_n for every coordinate")
    rho = _vector(rho, f.level, "rho")
    fh = fourier(f)
    second = np.array([_spectral_moment(fh, {k: 2}).real for k in range(f.level)])
    lhs = norm(directional_derivative(f, rho)) ** 2 if np.any(rho) else 0.0
    scale = 4 * math.pi ** 2
    sup = float(np.max(scale * second / a[:f.level] ** 2))
    rn = float(np.sum(a[:f.level] ** 2 * rho ** 2))
    supp = _support(rho)
    full = 0.0
    for k, rk in supp:
        for l, rl in supp:
            m = second[k] if k == l else _spectral_moment(fh, {k: 1, l: 1}).real
            full += scale * rk * rl * m
    diag = float(scale * np.sum(rho ** 2 * second))
    return FrechetReport(lhs, sup * rn, sup, rn, full, diag, lhs <= sup * rn * (1 + 1e-12) + 1e-300)


def shift_characteristic(f, x) -> complex:
    """<tau_x f, f>, the characteristic function of |fhat|^2 at x."""
    return hellinger_inner(translate(f, x), f)


def truncated_metric(x, y, N: int):
    """(sum_{n<=N} 2^-n |x_n - y_n| / (1 + |x_n - y_n|), tail bound 2^-N)."""
    if N < 0:
        raise ParameterError("N must be nonnegative")
    x = np.asarray(x, dtype=float)[:N]
    y = np.asarray(y, dtype=float)[:N]
    if x.size < N or y.size < N:
        raise ParameterError(f"sequences must have at least {N} entries")
    d = np.abs(x - y)
    w = 0.5 ** np.arange(1, N + 1)
    return float(np.sum(w * d / (1 + d))), 0.5 ** N


@dataclass(frozen=True)
class ConvolutionTheoremReport:
    distance: float
    lhs_norm: float
    rhs_norm: float


def convolution_theorem_check(mu, f) -> ConvolutionTheoremReport:
    """Hellinger distance between F(mu * f) and muhat x fhat."""
    mu = _as_measure(mu)
    lhs = fourier(convolve(mu, f))
    rhs = multiply_cylinder(mu.characteristic(), fourier(f))
    return ConvolutionTheoremReport(hellinger_distance(lhs, rhs), norm(lhs), norm(rhs))
