"""One-dimensional factors of product systems.

GaussFactor is the closed-form family

    g(x) = P(x - c) (2 pi s^2)^(-1/4) exp(-(x - c)^2 / (4 s^2) + 2 pi i k (x - c))

with P a complex polynomial.  It contains the positive Gaussian square-root
densities (P constant, k = 0) and is closed under products, translation,
modulation, differentiation, the Fourier transform with kernel
exp(+2 pi i x xi) and convolution with Gaussian measures, so all of those
are evaluated exactly.

GridFactor is a piecewise-linear function sum_j v_j hat_j(x) on equally
spaced nodes; hats at the end nodes reach one step beyond the node range.
Its Fourier transform is kept exactly as a SpectralGrid.  Products with a
bounded function are L2 projections back onto the same hats.
BlockFactor is its multilinear analogue on a tensor grid in m coordinates.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.special import ndtr

from .errors import ParameterError, UnsupportedMethodError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
_TWO_PI = 2 * math.pi


def _shift_poly(p, d):
    """Coefficients of p(y + d) in powers of y."""
    if d == 0 or p.size == 1:
        return p.copy()
    q = np.array([p[-1]], dtype=complex)
    for c in p[-2::-1]:
        q = npoly.polyadd(npoly.polymul(q, [d, 1.0]), [c])
    return np.asarray(q, dtype=complex)


def _trim(p):
    p = np.asarray(p, dtype=complex).ravel()
    n = p.size
    while n > 1 and p[n - 1] == 0:
        n -= 1
    return p[:n] if n else np.zeros(1, complex)


def _gauss_moments(mu, var, n):
    """E[Z^j], j = 0..n, for Z ~ N(mu, var) with complex mean."""
    m = np.empty(n + 1, dtype=complex)
    m[0] = 1.0
    if n >= 1:
        m[1] = mu
    for j in range(1, n):
        m[j + 1] = mu * m[j] + j * var * m[j - 1]
    return m


class GaussFactor:
    dim = 1
    __slots__ = ("center", "width", "freq", "poly")

    def __init__(self, center, width, freq=0.0, poly=(1.0,)):
        if not width > 0 or not math.isfinite(width):
            raise ParameterError(f"width must be positive, got {width}")
        self.center = float(center)
        self.width = float(width)
        self.freq = float(freq)
        self.poly = _trim(poly)

    @classmethod
    def gaussian(cls, mean: float, sd: float, mass: float = 1.0) -> "GaussFactor":
        """mass * (2 pi sd^2)^(-1/4) exp(-(x-mean)^2 / (4 sd^2)); |g|^2 = mass^2 Normal(mean, sd^2)."""
        if mass < 0:
            raise ParameterError("mass must be nonnegative")
        return cls(mean, sd, 0.0, (float(mass),))

    # descriptors of the positive subfamily
    @property
    def is_positive(self) -> bool:
        p = self.poly
        return self.freq == 0 and p.size == 1 and p[0].imag == 0 and p[0].real >= 0

    @property
    def is_real(self) -> bool:
        return self.freq == 0 and bool(np.all(self.poly.imag == 0))

    @property
    def mean(self) -> float:
        return self.center

    @property
    def sd(self) -> float:
        return self.width

    @property
    def norm_const(self) -> float:
        return (_TWO_PI * self.width ** 2) ** -0.25

    def key(self):
        return ("gauss", self.center, self.width, self.freq, self.poly.tobytes())

    def __repr__(self):
        return (f"GaussFactor(center={self.center!r}, width={self.width!r}, "
                f"freq={self.freq!r}, poly={self.poly.tolist()!r})")

    def __call__(self, x):
        y = np.asarray(x, dtype=float) - self.center
        env = np.exp(-y * y / (4 * self.width ** 2) + 1j * _TWO_PI * self.freq * y)
        return npoly.polyval(y, self.poly) * self.norm_const * env

    def breaks(self):
        step = self.width / 2
        if self.freq:
            step = min(step, 0.25 / abs(self.freq))
        half = 16 * self.width + 2 * self.width * math.sqrt(self.poly.size)
        n = int(math.ceil(2 * half / step))
        return self.center - half + np.arange(n + 1) * (2 * half / n)

    # linear structure
    def scaled(self, c) -> "GaussFactor":
        return GaussFactor(self.center, self.width, self.freq, self.poly * c)

    def conj(self) -> "GaussFactor":
        return GaussFactor(self.center, self.width, -self.freq, np.conj(self.poly))

    def translate(self, h: float) -> "GaussFactor":
        return self if h == 0 else GaussFactor(self.center + h, self.width, self.freq, self.poly)

    def modulate(self, a: float) -> "GaussFactor":
        """Multiply by exp(2 pi i a x)."""
        if a == 0:
            return self
        phase = np.exp(1j * _TWO_PI * a * self.center)
        return GaussFactor(self.center, self.width, self.freq + a, self.poly * phase)

    # closed-form algebra
    def multiply(self, other: "GaussFactor") -> "GaussFactor":
        """Pointwise product."""
        a1 = 1 / (4 * self.width ** 2)
        a2 = 1 / (4 * other.width ** 2)
        A = a1 + a2
        c = (a1 * self.center + a2 * other.center) / A
        K = -(self.center - other.center) ** 2 * a1 * a2 / A
        s = 0.5 / math.sqrt(A)
        phase = _TWO_PI * (self.freq * (c - self.center) + other.freq * (c - other.center))
        const = self.norm_const * other.norm_const / (_TWO_PI * s * s) ** -0.25
        p = npoly.polymul(_shift_poly(self.poly, c - self.center), _shift_poly(other.poly, c - other.center))
        return GaussFactor(c, s, self.freq + other.freq, p * (const * np.exp(K + 1j * phase)))

    def integral(self) -> complex:
        """int g(x) dx."""
        s2 = self.width ** 2
        k = self.freq
        m = _gauss_moments(4j * math.pi * k * s2, 2 * s2, self.poly.size - 1)
        scale = self.norm_const * math.sqrt(4 * math.pi * s2) * math.exp(-4 * math.pi ** 2 * k * k * s2)
        return complex(scale * np.dot(self.poly, m))

    def inner(self, other: "GaussFactor") -> complex:
        """int self * conj(other)."""
        return self.multiply(other.conj()).integral()

    def times_x_power(self, p: int) -> "GaussFactor":
        """Multiply by x^p."""
        if p == 0:
            return self
        lin = npoly.polypow([self.center, 1.0], p)
        return GaussFactor(self.center, self.width, self.freq, npoly.polymul(self.poly, lin))

    def derivative(self) -> "GaussFactor":
        p = self.poly
        dp = npoly.polyder(p) if p.size > 1 else np.zeros(1, complex)
        yp = npoly.polymul([0.0, 1.0], p) / (2 * self.width ** 2)
        q = npoly.polyadd(npoly.polysub(dp, yp), 1j * _TWO_PI * self.freq * p)
        return GaussFactor(self.center, self.width, self.freq, q)

    def fourier(self) -> "GaussFactor":
        """ghat(xi) = int g(x) exp(2 pi i x xi) dx, in closed form.

        The transform of y^n times the normalized envelope is L^n[1] times the
        dual normalized envelope of width 1/(4 pi s), where
        L[Q](eta) = (Q'(eta) - eta Q(eta) / (2 s'^2)) / (2 pi i).
        """
        s_dual = 1 / (4 * math.pi * self.width)
        out = np.zeros(self.poly.size, dtype=complex)
        q = np.ones(1, dtype=complex)
        for n, c in enumerate(self.poly):
            if n:
                dq = npoly.polyder(q) if q.size > 1 else np.zeros(1, complex)
                q = npoly.polysub(dq, npoly.polymul([0.0, 1.0], q) / (2 * s_dual ** 2)) / (1j * _TWO_PI)
            out[: q.size] += c * q
        phase = np.exp(-1j * _TWO_PI * self.center * self.freq)
        return GaussFactor(-self.freq, s_dual, self.center, out * phase)

    def reflect(self) -> "GaussFactor":
        """x -> g(-x)."""
        sign = (-1.0) ** np.arange(self.poly.size)
        return GaussFactor(-self.center, self.width, -self.freq, self.poly * sign)

    def convolve_gaussian(self, mean: float, var: float, weight: float = 1.0) -> "GaussFactor":
        """(mu * g)(x) = int g(x - z) mu(dz) for mu = weight * Normal(mean, var), computed directly."""
        if var < 0:
            raise ParameterError("variance must be nonnegative")
        if var == 0:
            return self.translate(mean).scaled(weight)
        s2 = self.width ** 2
        k = self.freq
        sp2 = s2 + var / 2
        alpha = 1 / (4 * s2) + 1 / (2 * var)
        lam = s2 / sp2
        delta = 1j * math.pi * k / alpha
        # Q(z) = E[P(z - W)], W ~ N(0, 1/(2 alpha)), then substitute z = lam u + delta
        wm = _gauss_moments(0.0, 1 / (2 * alpha), self.poly.size - 1)
        q = np.zeros(self.poly.size, dtype=complex)
        for n, c in enumerate(self.poly):
            for j in range(0, n + 1, 2):
                q[n - j] += c * math.comb(n, j) * wm[j]
        r = _shift_poly(q, delta) * lam ** np.arange(q.size)
        pref = (self.norm_const * math.sqrt(math.pi / alpha) / math.sqrt(_TWO_PI * var)
                * math.exp(-math.pi ** 2 * k * k / alpha) / (_TWO_PI * sp2) ** -0.25)
        return GaussFactor(self.center + mean, math.sqrt(sp2), k * lam, r * (weight * pref))

    def to_grid(self, L: float = 8.0, M: int = 4096) -> "GridFactor":
        """Sample on M nodes spanning center +- L widths."""
        lo = self.center - L * self.width
        step = 2 * L * self.width / (M - 1)
        return GridFactor(lo, step, self(lo + step * np.arange(M)))

    def to_dict(self) -> dict:
        if self.is_positive:
            return {"type": "gauss", "mean": self.center, "sd": self.width, "mass": float(self.poly[0].real)}
        return {"type": "gausspoly", "center": self.center, "width": self.width, "freq": self.freq,
                "poly_re": self.poly.real.tolist(), "poly_im": self.poly.imag.tolist()}


class ClosedMultiplier:
    """const * exp(2 pi i freq x - curv x^2), bounded because curv >= 0."""
    __slots__ = ("const", "freq", "curv")

    def __init__(self, const=1.0, freq=0.0, curv=0.0):
        if curv < 0 or not math.isfinite(curv):
            raise ParameterError("an exp(+c x^2) multiplier is unbounded")
        self.const = complex(const)
        self.freq = float(freq)
        self.curv = float(curv)

    @classmethod
    def gaussian_characteristic(cls, mean=0.0, var=0.0, weight=1.0) -> "ClosedMultiplier":
        """xi -> weight * exp(2 pi i mean xi - 2 pi^2 var xi^2), the transform of weight * Normal(mean, var)."""
        return cls(weight, mean, 2 * math.pi ** 2 * var)

    @property
    def bound(self) -> float:
        return abs(self.const)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.const * np.exp(1j * _TWO_PI * self.freq * x - self.curv * x * x)

    def __mul__(self, other):
        if isinstance(other, ClosedMultiplier):
            return ClosedMultiplier(self.const * other.const, self.freq + other.freq, self.curv + other.curv)
        return NotImplemented

    def conj(self):
        return ClosedMultiplier(np.conj(self.const), -self.freq, self.curv)

    def apply(self, f):
        if isinstance(f, GaussFactor):
            g = f.modulate(self.freq)
            if self.curv:
                env = GaussFactor(0.0, 0.5 / math.sqrt(self.curv))
                g = g.multiply(env.scaled(1 / env.norm_const))
            return g.scaled(self.const)
        return f.multiply(self)


def _hat_expectation(mu, sigma, h):
    """E[max(0, 1 - |Z|/h)] for Z ~ N(mu, sigma^2), vectorized in mu."""
    def A(t):
        return ndtr((t - mu) / sigma)

    def B(t):
        z = (t - mu) / sigma
        return mu * ndtr(z) - sigma * np.exp(-0.5 * z * z) / math.sqrt(_TWO_PI)

    return A(h) - A(-h) - (B(h) - 2 * B(0.0) + B(-h)) / h


class GridFactor:
    dim = 1
    __slots__ = ("lo", "step", "values")

    def __init__(self, lo, step, values):
        if not step > 0:
            raise ParameterError("grid step must be positive")
        v = np.asarray(values)
        v = v.astype(complex if np.iscomplexobj(v) else float)
        if v.ndim != 1 or v.size < 2:
            raise ParameterError("grid factors need at least two nodes")
        if not np.all(np.isfinite(v)):
            raise ParameterError("grid values must be finite")
        self.lo = float(lo)
        self.step = float(step)
        self.values = v

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.size)

    @property
    def hi(self) -> float:
        return self.lo + self.step * (self.size - 1)

    @property
    def is_positive(self) -> bool:
        return not np.iscomplexobj(self.values) and bool(np.all(self.values >= 0))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or bool(np.all(self.values.imag == 0))

    def key(self):
        return ("grid", self.lo, self.step, self.values.tobytes())

    def __repr__(self):
        return f"GridFactor(lo={self.lo!r}, step={self.step!r}, size={self.size})"

    def breaks(self):
        return self.lo + self.step * np.arange(-1, self.size + 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xp = self.breaks()
        v = np.concatenate(([0], self.values, [0]))
        if np.iscomplexobj(v):
            return np.interp(x, xp, v.real, 0, 0) + 1j * np.interp(x, xp, v.imag, 0, 0)
        return np.interp(x, xp, v, 0.0, 0.0)

    def scaled(self, c) -> "GridFactor":
        return GridFactor(self.lo, self.step, self.values * c)

    def conj(self) -> "GridFactor":
        return GridFactor(self.lo, self.step, np.conj(self.values))

    def translate(self, h: float) -> "GridFactor":
        return self if h == 0 else GridFactor(self.lo + h, self.step, self.values)

    def multiply(self, w) -> "GridFactor":
        """L2 projection of w * self onto the hats of this grid; w maps points to values."""
        v = galerkin_product([self.lo], [self.step], self.values, lambda X: w(X[..., 0]))
        return GridFactor(self.lo, self.step, v)

    def times_x_power(self, p: int) -> "GridFactor":
        return self if p == 0 else GridFactor(self.lo, self.step, self.values * self.nodes ** p)

    def aligned_with(self, other: "GridFactor") -> int | None:
        """Node offset of ``other`` relative to self when both share step and lattice."""
        if abs(self.step - other.step) > 1e-12 * self.step:
            return None
        d = (other.lo - self.lo) / self.step
        r = round(d)
        return int(r) if abs(d - r) < 1e-9 else None

    def inner(self, other) -> complex:
        """int self * conj(other), exact for piecewise-linear pairs."""
        if isinstance(other, GaussFactor):
            return _gl_inner(self, other, self.breaks())
        off = self.aligned_with(other)
        if off is not None:
            lo = min(0, off)
            hi = max(self.size, off + other.size)
            a = np.zeros(hi - lo, dtype=complex)
            b = np.zeros(hi - lo, dtype=complex)
            a[-lo:-lo + self.size] = self.values
            b[off - lo:off - lo + other.size] = other.values
            bc = np.conj(b)
            diag = np.sum(a * bc)
            off_diag = np.sum(a[:-1] * bc[1:]) + np.sum(a[1:] * bc[:-1])
            return complex(self.step * (2 * diag + 0.5 * off_diag) / 3)
        return _simpson_inner(self, other)

    def moment_inner(self, other, p: int) -> complex:
        """int x^p self conj(other)."""
        own = self.breaks()
        pts = np.union1d(own, other.breaks() if isinstance(other, GridFactor) else own)
        pts = pts[(pts >= own[0]) & (pts <= own[-1])]
        a, b = pts[:-1, None], pts[1:, None]
        half = 0.5 * (b - a)
        x = 0.5 * (a + b) + half * _GL_X
        w = half * _GL_W
        return complex(np.sum(w * x ** p * self(x) * np.conj(other(x))))

    def reflect(self) -> "GridFactor":
        """x -> g(-x)."""
        return GridFactor(-self.hi, self.step, self.values[::-1].copy())

    def fourier(self) -> "SpectralGrid":
        """Exact transform h sinc^2(h xi) sum_j v_j exp(2 pi i x_j xi), kept symbolically."""
        return SpectralGrid(self)

    def convolve_gaussian(self, mean: float, var: float, weight: float = 1.0) -> "GridFactor":
        """Exact nodal values of weight * Normal(mean, var) convolved with the hat expansion."""
        if var < 0:
            raise ParameterError("variance must be nonnegative")
        if var == 0:
            return self.translate(mean).scaled(weight)
        h = self.step
        sig = math.sqrt(var)
        lmin = int(math.floor((mean - 10 * sig) / h)) - 1
        lmax = int(math.ceil((mean + 10 * sig) / h)) + 1
        ell = np.arange(lmin, lmax + 1)
        kern = _hat_expectation(ell * h - mean, sig, h)
        out = np.convolve(self.values, kern) * weight
        return GridFactor(self.lo + lmin * h, h, out)

    def to_dict(self) -> dict:
        v = self.values
        d = {"type": "grid", "lo": self.lo, "step": self.step}
        if np.iscomplexobj(v):
            d["values_re"] = v.real.tolist()
            d["values_im"] = v.imag.tolist()
        else:
            d["values"] = v.tolist()
        return d


class SpectralGrid:
    """Fourier transform of a GridFactor, evaluated from its source.

    Inner products with other transforms go through Plancherel and with
    closed-form factors through the inverse transform, so both are exact.
    """
    dim = 1
    __slots__ = ("source",)

    def __init__(self, source: GridFactor):
        self.source = source

    is_positive = False

    @property
    def is_real(self) -> bool:
        return False

    def key(self):
        return ("spectral",) + self.source.key()

    def __repr__(self):
        return f"SpectralGrid({self.source!r})"

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        flat = xi.ravel()
        g = self.source
        out = np.empty(flat.size, dtype=complex)
        rows = max(1, (1 << 22) // g.size)
        for lo in range(0, flat.size, rows):
            x = flat[lo:lo + rows]
            out[lo:lo + rows] = np.exp(1j * _TWO_PI * np.outer(x, g.nodes)) @ g.values
        out *= g.step * np.sinc(g.step * flat) ** 2
        return out.reshape(xi.shape)

    def breaks(self):
        g = self.source
        half = 1 / g.step
        n = 8 * g.size
        return np.linspace(-half, half, n + 1)

    def scaled(self, c) -> "SpectralGrid":
        return SpectralGrid(self.source.scaled(c))

    def conj(self) -> "SpectralGrid":
        # conj(F g)(xi) = F(conj g)(-xi) = F(reflected conj g)(xi)
        return SpectralGrid(self.source.conj().reflect())

    def reflect(self) -> "SpectralGrid":
        return SpectralGrid(self.source.reflect())

    def fourier(self) -> GridFactor:
        # F F g = g(-x)
        return self.source.reflect()

    def inner(self, other) -> complex:
        if isinstance(other, SpectralGrid):
            return self.source.inner(other.source)
        if isinstance(other, GaussFactor):
            # <F g, G> = <g, F^* G> with (F^* G)(x) = (F G)(-x)
            return self.source.inner(other.fourier().reflect())
        return quad_inner(self, other)

    def to_grid(self, half_width: float, n: int) -> GridFactor:
        """Sampled piecewise-linear representation on [-half_width, half_width]."""
        xi = np.linspace(-half_width, half_width, n)
        return GridFactor(-half_width, xi[1] - xi[0], self(xi))

    def multiply(self, w):
        raise UnsupportedMethodError("multiply a sampled representation (to_grid) instead")

    def to_dict(self) -> dict:
        return {"type": "spectral_grid", "source": self.source.to_dict()}


def _gl_inner(a, b, edges, sub_width=None):
    """Composite Gauss-Legendre value of int a conj(b) over cells ``edges``."""
    if sub_width is None and isinstance(b, GaussFactor):
        sub_width = b.width / 2
        lo, hi = b.center - 40 * b.width, b.center + 40 * b.width
        edges = edges[(edges >= lo) & (edges <= hi)]
        if edges.size < 2:
            return 0j
    a0, a1 = edges[:-1], edges[1:]
    nsub = np.maximum(1, np.ceil((a1 - a0) / sub_width).astype(int)) if sub_width else np.ones(a0.size, int)
    if np.any(nsub > 1):
        edges = np.concatenate([np.linspace(x0, x1, n + 1)[:-1] for x0, x1, n in zip(a0, a1, nsub)] + [edges[-1:]])
    c0, c1 = edges[:-1, None], edges[1:, None]
    half = 0.5 * (c1 - c0)
    x = 0.5 * (c0 + c1) + half * _GL_X
    return complex(np.sum(half * _GL_W * a(x) * np.conj(b(x))))


def _simpson_inner(a: GridFactor, b: GridFactor) -> complex:
    """Exact int a conj(b) for two piecewise-linear functions on unrelated grids."""
    ba, bb = a.breaks(), b.breaks()
    # endpoints taken from the break arrays themselves so rounding cannot drop an end cell
    lo = max(ba[0], bb[0])
    hi = min(ba[-1], bb[-1])
    pts = np.union1d(ba, bb)
    pts = pts[(pts >= lo) & (pts <= hi)]
    if pts.size < 2:
        return 0j
    mid = 0.5 * (pts[:-1] + pts[1:])
    f = a(pts) * np.conj(b(pts))
    fm = a(mid) * np.conj(b(mid))
    return complex(np.sum(np.diff(pts) * (f[:-1] + 4 * fm + f[1:])) / 6)


def quad_inner(a, b) -> complex:
    """int a conj(b) by composite Gauss-Legendre on the union of both break sets.

    Works for any 1-D factor or linear combination of factors and evaluates
    the integrand pointwise, so differences of nearly equal factors keep
    their full relative accuracy.
    """
    pts = np.union1d(a.breaks(), b.breaks())
    lo = max(a.breaks()[0], b.breaks()[0])
    hi = min(a.breaks()[-1], b.breaks()[-1])
    pts = pts[(pts >= lo) & (pts <= hi)]
    if pts.size < 2:
        return 0j
    return _gl_inner(a, b, pts, sub_width=np.inf)


class SumFactor:
    """A finite linear combination of 1-D factors, evaluated pointwise."""
    dim = 1

    def __init__(self, parts):
        self.parts = tuple((complex(c), f) for c, f in parts)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for c, f in self.parts:
            out += c * f(x)
        return out

    def breaks(self):
        return np.unique(np.concatenate([f.breaks() for _, f in self.parts]))

    def key(self):
        return ("sum", id(self))

    def scaled(self, c) -> "SumFactor":
        return SumFactor([(c * a, f) for a, f in self.parts])

    def conj(self) -> "SumFactor":
        return SumFactor([(np.conj(a), f.conj()) for a, f in self.parts])


def factor_inner(a, b) -> complex:
    """L^2(R) inner product int a conj(b) of two 1-D factors."""
    if isinstance(a, SumFactor) or isinstance(b, SumFactor):
        return quad_inner(a, b)
    if isinstance(a, GaussFactor):
        if isinstance(b, GaussFactor):
            return a.inner(b)
        return complex(np.conj(b.inner(a)))
    if isinstance(b, SpectralGrid) and not isinstance(a, SpectralGrid):
        return complex(np.conj(b.inner(a)))
    return a.inner(b)


def factor_moment(a, b, p: int) -> complex:
    """int x^p a conj(b)."""
    if isinstance(a, GaussFactor) and isinstance(b, GaussFactor):
        return a.times_x_power(p).inner(b)
    if isinstance(a, GridFactor):
        return a.moment_inner(b, p) if isinstance(b, GridFactor) else _gl_inner(a.times_x_power(p), b, a.breaks())
    return complex(np.conj(factor_moment(b, a, p)))


def factor_box(a, b, lo: float, hi: float) -> complex:
    """int_lo^hi a conj(b)."""
    pts = np.union1d(a.breaks(), b.breaks())
    pts = np.concatenate(([lo], pts[(pts > lo) & (pts < hi)], [hi]))
    if hi <= lo:
        return 0j
    sub = min(getattr(a, "width", np.inf), getattr(b, "width", np.inf)) / 2
    return _gl_inner(a, b, pts, sub_width=sub if math.isfinite(sub) else np.inf)


def _mass_apply(v, axis, h):
    """Apply the 1-D piecewise-linear mass matrix h/6 * tridiag(1, 4, 1) along ``axis``."""
    v = np.moveaxis(v, axis, 0)
    out = 4 * v
    out[1:] += v[:-1]
    out[:-1] += v[1:]
    return np.moveaxis(out * (h / 6), 0, axis)


def _cell_interp(n: int):
    """Sparse map from hat coefficients to values at the 4-point Gauss nodes of every cell.

    Cell c = 0..n spans [lo + (c-1) h, lo + c h]; hats c-1 and c touch it.
    """
    r = 0.5 * (_GL4_X + 1)
    q = r.size
    cells = np.repeat(np.arange(n + 1), q)
    rr = np.tile(r, n + 1)
    rows = np.arange(cells.size)
    left = cells - 1 >= 0
    right = cells < n
    data = np.concatenate(((1 - rr)[left], rr[right]))
    ri = np.concatenate((rows[left], rows[right]))
    ci = np.concatenate((cells[left] - 1, cells[right]))
    E = sparse.csr_matrix((data, (ri, ci)), shape=(cells.size, n))
    return E, cells - 1 + rr, np.tile(0.5 * _GL4_W, n + 1)


def _along(op, v, axis):
    v = np.moveaxis(v, axis, 0)
    shape = v.shape
    out = op(v.reshape(shape[0], -1))
    return np.moveaxis(out.reshape((out.shape[0],) + shape[1:]), 0, axis)


def _mass_solve(v, axis, h):
    n = v.shape[axis]
    ab = np.empty((3, n))
    ab[0] = ab[2] = h / 6
    ab[1] = 2 * h / 3
    return _along(lambda m: solve_banded((1, 1), ab, m), v, axis)


def galerkin_product(lo, step, values, w) -> np.ndarray:
    """Coefficients c with M c = int w * B * hat_J, M the (tensor) mass matrix.

    The load integrals use 4-point Gauss rules per cell, so with the mass
    matrix solve the product satisfies <w x f, g> = <f, conj(w) x g> exactly
    for g on the same grid, and w = 1 returns B unchanged.
    """
    v = np.asarray(values)
    lo = np.atleast_1d(lo)
    step = np.atleast_1d(step)
    mats, pts, wts = [], [], []
    for ax in range(v.ndim):
        E, t, wt = _cell_interp(v.shape[ax])
        mats.append(E)
        pts.append(lo[ax] + step[ax] * t)
        wts.append(step[ax] * wt)
    B = v
    for ax, E in enumerate(mats):
        B = _along(lambda m, E=E: E @ m, B, ax)
    mesh = np.stack(np.meshgrid(*pts, indexing="ij"), axis=-1)
    F = B * w(mesh)
    for ax, wt in enumerate(wts):
        shape = [1] * v.ndim
        shape[ax] = wt.size
        F = F * wt.reshape(shape)
    for ax, E in enumerate(mats):
        F = _along(lambda m, E=E: E.T @ m, F, ax)
    for ax in range(v.ndim):
        F = _mass_solve(F, ax, step[ax])
    return F


class BlockFactor:
    """Multilinear function on a tensor grid in ``dim`` coordinates."""

    def __init__(self, lo, step, values):
        self.values = np.asarray(values, dtype=complex)
        self.lo = np.asarray(lo, dtype=float).ravel()
        self.step = np.asarray(step, dtype=float).ravel()
        if not (self.values.ndim == self.lo.size == self.step.size):
            raise ParameterError("block dimensions disagree")
        if not np.all(self.step > 0):
            raise ParameterError("block steps must be positive")

    @property
    def dim(self) -> int:
        return self.values.ndim

    def key(self):
        return ("block", self.lo.tobytes(), self.step.tobytes(), self.values.tobytes())

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.values.imag == 0) and np.all(self.values.real >= 0))

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0))

    def axes(self):
        return [self.lo[i] + self.step[i] * np.arange(self.values.shape[i]) for i in range(self.dim)]

    def __call__(self, x):
        from scipy.interpolate import RegularGridInterpolator
        ax = [np.concatenate(([a[0] - s], a, [a[-1] + s])) for a, s in zip(self.axes(), self.step)]
        v = np.pad(self.values, 1)
        interp = RegularGridInterpolator(ax, v, bounds_error=False, fill_value=0.0)
        return interp(np.asarray(x, dtype=float))

    def scaled(self, c) -> "BlockFactor":
        return BlockFactor(self.lo, self.step, self.values * c)

    def conj(self) -> "BlockFactor":
        return BlockFactor(self.lo, self.step, np.conj(self.values))

    def translate(self, h) -> "BlockFactor":
        h = np.asarray(h, dtype=float)
        return self if not np.any(h) else BlockFactor(self.lo + h, self.step, self.values)

    def multiply(self, w) -> "BlockFactor":
        """L2 projection of w * self; w takes points of shape (..., dim)."""
        return BlockFactor(self.lo, self.step, galerkin_product(self.lo, self.step, self.values, w))

    def same_grid(self, other) -> bool:
        return (self.values.shape == other.values.shape and np.allclose(self.lo, other.lo, rtol=0, atol=1e-12)
                and np.allclose(self.step, other.step, rtol=1e-12, atol=0))

    def inner(self, other) -> complex:
        if isinstance(other, BlockFactor):
            if not self.same_grid(other):
                raise UnsupportedMethodError("blocks on different grids")
            m = other.values.conj()
            for ax in range(self.dim):
                m = _mass_apply(m, ax, self.step[ax])
            return complex(np.sum(self.values * m))
        return self.inner_factors(other)

    def inner_factors(self, factors) -> complex:
        """int B(x) prod_i conj(f_i(x_i)) dx."""
        t = self.values
        for ax, f in enumerate(factors):
            load = hat_loads(self.lo[ax], self.step[ax], self.values.shape[ax], f)
            t = np.tensordot(t, load, axes=([0], [0]))
        return complex(t)

    def to_dict(self) -> dict:
        return {"type": "block", "lo": self.lo.tolist(), "step": self.step.tolist(),
                "shape": list(self.values.shape), "values_re": self.values.real.ravel().tolist(),
                "values_im": self.values.imag.ravel().tolist()}


def hat_loads(lo: float, step: float, n: int, f) -> np.ndarray:
    """int hat_j(x) conj(f(x)) dx for the n hats of a grid, by Gauss-Legendre per cell."""
    sub = 1
    if isinstance(f, GaussFactor):
        sub = max(1, int(math.ceil(2 * step / f.width)))
    elif isinstance(f, GridFactor):
        sub = max(1, int(math.ceil(2 * step / f.step)))
    # cell c spans [lo + (c-1) h, lo + c h], c = 0..n; hats j = c-1 and j = c touch it
    edges = lo + step * (np.arange(n + 1)[:, None] - 1 + np.arange(sub + 1) / sub)
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _GL_X
    w = half * _GL_W * np.conj(f(x))
    r = (x - (lo + step * (np.arange(n + 1)[:, None, None] - 1))) / step
    right = np.sum(w * r, axis=(1, 2))        # rising part of hat c
    left = np.sum(w * (1 - r), axis=(1, 2))   # falling part of hat c-1
    return right[:n] + left[1:]


def factor_from_dict(d: dict):
    t = d["type"]
    if t == "gauss":
        return GaussFactor.gaussian(d["mean"], d["sd"], d["mass"])
    if t == "gausspoly":
        return GaussFactor(d["center"], d["width"], d["freq"],
                           np.asarray(d["poly_re"]) + 1j * np.asarray(d["poly_im"]))
    if t == "grid":
        v = np.asarray(d["values"]) if "values" in d else np.asarray(d["values_re"]) + 1j * np.asarray(d["values_im"])
        return GridFactor(d["lo"], d["step"], v)
    if t == "spectral_grid":
        return SpectralGrid(factor_from_dict(d["source"]))
    if t == "block":
        v = (np.asarray(d["values_re"]) + 1j * np.asarray(d["values_im"])).reshape(d["shape"])
        return BlockFactor(d["lo"], d["step"], v)
    raise ParameterError(f"unknown factor type {t!r}")
