"""Product systems, finite mixtures of them, and their L2 inner products.

A ProductSystem of level N is a tensor product of factors covering
coordinates 1..N (a BlockFactor covers several consecutive coordinates).
Beyond N the system is described by ``tail``: an empty tail means the
projective convention (unit masses), otherwise the masses of coordinates
N+1, N+2, ...  Inner products of tails are only defined when both sides
carry the same tail, in which case they contribute prod m_k^2.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import ParameterError, UnsupportedMethodError
from .factors import (BlockFactor, GaussFactor, GridFactor, SpectralGrid, SumFactor,
                      factor_from_dict, factor_inner)


def factor_mass(f) -> float:
    """L2 norm of a factor; exact for positive Gaussians."""
    if isinstance(f, GaussFactor) and f.is_positive:
        return float(f.poly[0].real)
    return math.sqrt(max(factor_inner(f, f).real, 0.0)) if f.dim == 1 else math.sqrt(max(f.inner(f).real, 0.0))


class ProductSystem:
    __slots__ = ("factors", "tail")

    def __init__(self, factors, tail=()):
        self.factors = tuple(factors)
        if not self.factors:
            raise ParameterError("a product system needs at least one factor")
        self.tail = tuple(float(m) for m in tail)
        if any(m < 0 for m in self.tail):
            raise ParameterError("tail masses must be nonnegative")

    @classmethod
    def gaussian(cls, means, sds, masses=None, tail=()) -> "ProductSystem":
        masses = np.ones(len(means)) if masses is None else masses
        return cls([GaussFactor.gaussian(m, s, w) for m, s, w in zip(means, sds, masses)], tail)

    @property
    def level(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def spans(self):
        out, start = [], 0
        for f in self.factors:
            out.append((start, f.dim))
            start += f.dim
        return tuple(out)

    @property
    def masses(self):
        return tuple(factor_mass(f) for f in self.factors)

    @property
    def is_positive(self) -> bool:
        return all(getattr(f, "is_positive", False) for f in self.factors)

    @property
    def is_real(self) -> bool:
        return all(getattr(f, "is_real", False) for f in self.factors)

    def coordinate(self, i: int):
        """(factor index, offset inside that factor) for 0-based coordinate i."""
        for n, (start, d) in enumerate(self.spans):
            if start <= i < start + d:
                return n, i - start
        raise ParameterError(f"coordinate {i} beyond level {self.level}")

    def replace(self, index: int, factor) -> "ProductSystem":
        f = list(self.factors)
        f[index] = factor
        return ProductSystem(f, self.tail)

    def with_factors(self, factors) -> "ProductSystem":
        return ProductSystem(factors, self.tail)

    def keys(self):
        return tuple(f.key() for f in self.factors)

    def __call__(self, x):
        """Density value at points x of shape (..., level)."""
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1], dtype=complex)
        for f, (start, d) in zip(self.factors, self.spans):
            out *= f(x[..., start]) if d == 1 else f(x[..., start:start + d])
        return out

    def to_dict(self) -> dict:
        d = {"factors": [f.to_dict() for f in self.factors]}
        if self.tail:
            d["tail"] = list(self.tail)
        return d

    @classmethod
    def from_dict(cls, d) -> "ProductSystem":
        return cls([factor_from_dict(f) for f in d["factors"]], d.get("tail", ()))

    def __repr__(self):
        return f"ProductSystem(level={self.level}, factors={list(self.factors)!r}, tail={self.tail!r})"


def _tail_inner(a: ProductSystem, b: ProductSystem) -> float:
    if a.tail != b.tail:
        raise ParameterError("tail conventions differ; the inner product is not determined")
    return math.prod(m * m for m in a.tail)


def system_inner(a: ProductSystem, b: ProductSystem) -> complex:
    """int a conj(b) over R^N (times the tail contribution)."""
    if a.level != b.level:
        raise ParameterError(f"level mismatch: {a.level} vs {b.level}")
    out = complex(_tail_inner(a, b))
    if a.spans == b.spans:
        for fa, fb in zip(a.factors, b.factors):
            out *= factor_inner(fa, fb) if fa.dim == 1 else fa.inner(fb)
        return out
    ia = ib = 0
    while ia < len(a.factors):
        fa, fb = a.factors[ia], b.factors[ib]
        if fa.dim == fb.dim:
            out *= factor_inner(fa, fb) if fa.dim == 1 else fa.inner(fb)
            ia, ib = ia + 1, ib + 1
        elif fa.dim > 1 and fb.dim == 1:
            out *= fa.inner_factors(b.factors[ib:ib + fa.dim])
            ia, ib = ia + 1, ib + fa.dim
        elif fb.dim > 1 and fa.dim == 1:
            out *= np.conj(fb.inner_factors(a.factors[ia:ia + fb.dim]))
            ia, ib = ia + fb.dim, ib + 1
        else:
            raise UnsupportedMethodError("overlapping blocks of different shapes")
    return out


class MixtureSystem:
    """sum_j alpha_j f^j with product systems f^j of a common level."""
    __slots__ = ("terms", "level")

    def __init__(self, terms, level: int | None = None):
        self.terms = tuple((complex(c), s) for c, s in terms)
        levels = {s.level for _, s in self.terms}
        if len(levels) > 1:
            raise ParameterError(f"terms have different levels {sorted(levels)}")
        if level is None:
            if not levels:
                raise ParameterError("an empty mixture needs an explicit level")
            level = levels.pop()
        elif levels and levels != {level}:
            raise ParameterError("terms do not match the stated level")
        self.level = int(level)

    @classmethod
    def of(cls, system, coef=1.0) -> "MixtureSystem":
        return cls([(coef, system)])

    @classmethod
    def zero(cls, level: int) -> "MixtureSystem":
        return cls([], level)

    def __len__(self):
        return len(self.terms)

    def _check(self, other):
        if other.level != self.level:
            raise ParameterError(f"level mismatch: {self.level} vs {other.level}")

    def __add__(self, other):
        other = as_mixture(other)
        self._check(other)
        return MixtureSystem(self.terms + other.terms, self.level)

    def __sub__(self, other):
        return self + as_mixture(other).scaled(-1)

    def __neg__(self):
        return self.scaled(-1)

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__

    def scaled(self, c) -> "MixtureSystem":
        return MixtureSystem([(c * a, s) for a, s in self.terms], self.level)

    def conj(self) -> "MixtureSystem":
        return MixtureSystem([(np.conj(a), s.with_factors([f.conj() for f in s.factors]))
                              for a, s in self.terms], self.level)

    @property
    def is_real(self) -> bool:
        return all(a.imag == 0 and s.is_real for a, s in self.terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1], dtype=complex)
        for a, s in self.terms:
            out += a * s(x)
        return out

    def to_dict(self) -> dict:
        return {"level": self.level,
                "terms": [{"re": a.real, "im": a.imag, **s.to_dict()} for a, s in self.terms]}

    @classmethod
    def from_dict(cls, d) -> "MixtureSystem":
        return cls([(complex(t["re"], t["im"]), ProductSystem.from_dict(t)) for t in d["terms"]], d["level"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MixtureSystem":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"MixtureSystem(level={self.level}, terms={len(self.terms)})"


def as_mixture(f) -> MixtureSystem:
    if isinstance(f, MixtureSystem):
        return f
    if isinstance(f, ProductSystem):
        return MixtureSystem.of(f)
    raise TypeError(f"expected a ProductSystem or MixtureSystem, got {type(f).__name__}")


def hellinger_inner(f, g) -> complex:
    """<f, g> = sum over term pairs of alpha conj(beta) prod_i <f_i, g_i>, reduced in term order."""
    f, g = as_mixture(f), as_mixture(g)
    f._check(g)
    total = 0j
    for a, s in f.terms:
        for b, t in g.terms:
            total += a * np.conj(b) * system_inner(s, t)
    return total


def norm(f) -> float:
    return math.sqrt(max(hellinger_inner(f, f).real, 0.0))


def _align_grids(a: GridFactor, b: GridFactor, ca, cb):
    off = a.aligned_with(b)
    if off is None:
        return None
    lo = min(0, off)
    hi = max(a.size, off + b.size)
    v = np.zeros(hi - lo, dtype=complex)
    v[-lo:-lo + a.size] += ca * a.values
    v[off - lo:off - lo + b.size] += cb * b.values
    return GridFactor(a.lo + lo * a.step, a.step, v)


def combine(ca, a, cb, b):
    """A single factor equal to ca * a + cb * b, exact in-family when possible."""
    if isinstance(a, GaussFactor) and isinstance(b, GaussFactor) and \
            (a.center, a.width, a.freq) == (b.center, b.width, b.freq):
        n = max(a.poly.size, b.poly.size)
        p = np.zeros(n, dtype=complex)
        p[:a.poly.size] += ca * a.poly
        p[:b.poly.size] += cb * b.poly
        return GaussFactor(a.center, a.width, a.freq, p)
    if isinstance(a, GridFactor) and isinstance(b, GridFactor):
        g = _align_grids(a, b, ca, cb)
        if g is not None:
            return g
    if isinstance(a, SpectralGrid) and isinstance(b, SpectralGrid):
        g = _align_grids(a.source, b.source, ca, cb)
        if g is not None:
            return SpectralGrid(g)
    if isinstance(a, BlockFactor) and isinstance(b, BlockFactor):
        if a.same_grid(b):
            return BlockFactor(a.lo, a.step, ca * a.values + cb * b.values)
        raise UnsupportedMethodError("blocks on different grids")
    if a.dim != 1 or b.dim != 1:
        raise UnsupportedMethodError("cannot combine factors of different dimension")
    parts = []
    for c, f in ((ca, a), (cb, b)):
        parts.extend((c * d, g) for d, g in f.parts) if isinstance(f, SumFactor) else parts.append((c, f))
    return SumFactor(parts)


def _pair_pieces(a, s: ProductSystem, b, t: ProductSystem):
    """Telescope a*s - b*t into terms that each differ from zero in one factor."""
    if s.spans != t.spans or s.tail != t.tail:
        return None
    ks, kt = list(s.keys()), list(t.keys())
    fs, ft = list(s.factors), list(t.factors)
    coef = a
    if a != b:
        # fold the coefficients into a factor that differs anyway, so equal
        # factors elsewhere still cancel exactly
        diff = [c for c in range(len(fs)) if ks[c] != kt[c]]
        if not diff:
            return [(a - b, s)]
        c = diff[0]
        fs[c], ft[c] = fs[c].scaled(a), ft[c].scaled(b)
        ks[c], kt[c] = fs[c].key(), ft[c].key()
        coef = 1.0
    pieces = []
    for c in range(len(fs)):
        if ks[c] == kt[c]:
            continue
        diff = combine(1.0, fs[c], -1.0, ft[c])
        pieces.append((coef, ProductSystem(ft[:c] + [diff] + fs[c + 1:], s.tail)))
    return pieces


def _merge(terms):
    """Merge terms that differ in at most one factor (pointwise-exact linear combination)."""
    out = []
    for c, s in terms:
        if c == 0:
            continue
        for n, (d, t) in enumerate(out):
            if t.spans != s.spans or t.tail != s.tail:
                continue
            kt, ks = t.keys(), s.keys()
            diff = [i for i in range(len(kt)) if kt[i] != ks[i]]
            if not diff:
                out[n] = (d + c, t)
                break
            if len(diff) == 1:
                i = diff[0]
                out[n] = (1.0, t.replace(i, combine(d, t.factors[i], c, s.factors[i])))
                break
        else:
            out.append((c, s))
    return out


def _gram(terms) -> float:
    total = 0j
    for a, s in terms:
        for b, t in terms:
            total += a * np.conj(b) * system_inner(s, t)
    return total.real


def hellinger_distance(f, g) -> float:
    """||f - g|| evaluated without cancellation between nearly equal mixtures.

    Terms of f and g are paired in order and telescoped when their layouts
    agree; the remaining pieces differ from zero in single factors, whose
    differences are evaluated pointwise.  Otherwise terms of f - g that differ
    in at most one factor are merged before the Gram sum.
    """
    f, g = as_mixture(f), as_mixture(g)
    f._check(g)
    pieces = None
    if len(f.terms) == len(g.terms):
        pieces = []
        for (a, s), (b, t) in zip(f.terms, g.terms):
            p = _pair_pieces(a, s, b, t)
            if p is None:
                pieces = None
                break
            pieces.extend(p)
    if pieces is None:
        pieces = _merge(list(f.terms) + [(-b, t) for b, t in g.terms])
    return math.sqrt(max(_gram(pieces), 0.0))
