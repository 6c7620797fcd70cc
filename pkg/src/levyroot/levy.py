"""The Levy Laplacian through its Fourier-side symbol.

On the Fourier side the operator multiplies by -4 pi^2 <phi>_T / T, where
<phi>_T is the quadratic variation of the path phi.  The spectral measure
|fhat|^2 is represented empirically by a weighted ensemble of paths.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.special import betaln, gammaln

from .cons import coefficient_sequence
from .errors import DomainError, NonConvergenceError, ParameterError, ResolutionError
from .paths import Path, PartitionSpec, generate_path, max_dyadic_level, qv_limit_dyadic, qv_sup_inf
from .summation import cesaro_mean

FOUR_PI_SQ = 4 * math.pi ** 2


class PathEnsemble:
    """Weighted paths on a common [0, T]."""

    def __init__(self, paths, weights=None):
        self.paths = tuple(paths)
        if not self.paths:
            raise ParameterError("an ensemble needs at least one path")
        w = np.ones(len(self.paths)) if weights is None else np.asarray(weights, dtype=float).ravel()
        if w.size != len(self.paths):
            raise ParameterError("one weight per path")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ParameterError("weights must be finite and nonnegative")
        Ts = {p.T for p in self.paths}
        if len(Ts) != 1:
            raise ParameterError("paths must share T")
        self.weights = w
        self.weights.setflags(write=False)
        self.T = Ts.pop()

    def __len__(self):
        return len(self.paths)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def reweighted(self, weights) -> "PathEnsemble":
        return PathEnsemble(self.paths, weights)

    def to_dict(self) -> dict:
        return {"T": self.T, "paths": [p.to_dict() for p in self.paths], "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PathEnsemble":
        paths = [Path.from_dict(p) for p in d["paths"]]
        ens = cls(paths, d["weights"])
        if not math.isclose(ens.T, d["T"], rel_tol=0, abs_tol=0):
            raise ParameterError("T disagrees with the paths")
        return ens

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PathEnsemble":
        return cls.from_dict(json.loads(text))


def _gated_qv(path: Path, threshold: float = 0.02) -> float:
    est = qv_limit_dyadic(path, threshold=threshold)
    if not est.converged:
        raise NonConvergenceError(
            f"dyadic quadratic variation did not settle (relative change {est.rel_change:.3g}); "
            "the path lies outside the operator's domain")
    return est.qv


def levy_symbol(path: Path, threshold: float = 0.02) -> float:
    """-4 pi^2 <phi>_T / T with the dyadic quadratic-variation estimate."""
    return -FOUR_PI_SQ * _gated_qv(path, threshold) / path.T


@dataclass(frozen=True)
class SymbolConvergence:
    n_schedule: tuple
    errors: tuple
    per_path: np.ndarray  # squared Cesaro errors, shape (paths, len(n_schedule))
    targets: tuple
    decreasing: bool


def symbol_convergence(ensemble: PathEnsemble, n_schedule, threshold: float = 0.02) -> SymbolConvergence:
    """sum_i w_i |cesaro_qv(phi_i, n) - <phi_i>_T / T|^2 along ``n_schedule``."""
    n_schedule = tuple(int(n) for n in n_schedule)
    if not n_schedule or min(n_schedule) < 1:
        raise ParameterError("n_schedule must hold positive integers")
    targets, bad = [], []
    for i, p in enumerate(ensemble.paths):
        try:
            targets.append(_gated_qv(p, threshold) / p.T)
        except NonConvergenceError:
            bad.append(i)
    if bad:
        raise NonConvergenceError(f"paths {bad} fail the quadratic-variation gate")
    nmax = max(n_schedule)
    per = np.empty((len(ensemble), len(n_schedule)))
    for i, p in enumerate(ensemble.paths):
        energy = coefficient_sequence(p, nmax).energy
        for j, n in enumerate(n_schedule):
            per[i, j] = (cesaro_mean(energy, n) - targets[i]) ** 2
    errors = tuple(float(v) for v in ensemble.weights @ per)
    dec = all(b <= a for a, b in zip(errors, errors[1:]))
    return SymbolConvergence(n_schedule, errors, per, tuple(targets), dec)


def wallis_ratio(n: int) -> float:
    """Gamma(n/2)^2 / (Gamma((n+1)/2) Gamma((n-1)/2)), through log-gamma."""
    if n < 2:
        raise DomainError("n must be >= 2")
    return math.exp(2 * gammaln(n / 2) - gammaln((n + 1) / 2) - gammaln((n - 1) / 2))


@dataclass(frozen=True)
class SphericalKernelEval:
    n: int
    rho: float
    r_n_sq: float
    x_n: float
    value_quadrature: float
    value_series: float
    error_bound: float

    @property
    def value(self) -> float:
        return self.value_series


def _kernel_series(n: int, x: float, dps: int) -> float:
    """sum_k b_k x^k / k! with b_k = prod_{j<=k} (1 + (2j-1)/n)^-1."""
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        k = 0
        while True:
            k += 1
            term *= xm / k / (1 + mpmath.mpf(2 * k - 1) / n)
            total += term
            if abs(term) < mpmath.mpf(10) ** -(dps - 4) * max(abs(total), mpmath.mpf(10) ** -300) and k > abs(x):
                break
        return float(total)


def spherical_kernel(n: int, rho: float, r_n_sq: float) -> SphericalKernelEval:
    """I_n = int_0^1 (1-x^2)^(n/2-1) cos(2 pi rho r_n x) dx / int_0^1 (1-x^2)^(n/2-1) dx.

    value_quadrature uses QUADPACK's cosine-weighted rule, value_series the
    entire power series in x_n = -2 pi^2 rho^2 r_n^2 / n summed in extended
    precision (the terms alternate and reach e^|x_n| in size).  error_bound
    is (1/n)(|x_n| + 1) e^|x_n|, a bound on |I_n - e^x_n| (inf past the float
    range).
    """
    if n < 3:
        raise DomainError("n must be >= 3")
    if r_n_sq < 0:
        raise DomainError("r_n_sq must be nonnegative")
    x = -2 * math.pi ** 2 * rho * rho * r_n_sq / n
    log_bound = math.log1p(abs(x)) + abs(x) - math.log(n)
    bound = math.exp(log_bound) if log_bound < 709 else math.inf
    omega = 2 * math.pi * abs(rho) * math.sqrt(r_n_sq)
    if omega == 0:
        return SphericalKernelEval(n, rho, r_n_sq, x, 1.0, 1.0, bound)
    a = n / 2 - 1
    norm = 0.5 * math.exp(betaln(0.5, n / 2))
    val, err = quad(lambda t: (1 - t * t) ** a, 0.0, 1.0, weight="cos", wvar=omega,
                    epsabs=1e-15, epsrel=1e-13, limit=200)
    dps = 30 + int(abs(x) / math.log(10))
    return SphericalKernelEval(n, rho, r_n_sq, x, val / norm, _kernel_series(n, x, dps), bound)


@dataclass(frozen=True)
class SphericalMean:
    ensemble: PathEnsemble
    multipliers: tuple
    r_n_sq: tuple


def spherical_mean(ensemble: PathEnsemble, rho: float, n: int) -> SphericalMean:
    """Reweight w_i -> w_i I_n(phi_i)^2 with r_n^2 = sum_{k=0}^{n} <phi_i, e_k>^2."""
    if n < 3:
        raise DomainError("n must be >= 3")
    mult, rs = [], []
    for p in ensemble.paths:
        r2 = float(np.sum(coefficient_sequence(p, n).energy))
        rs.append(r2)
        mult.append(spherical_kernel(n, rho, r2).value)
    w = ensemble.weights * np.square(mult)
    return SphericalMean(ensemble.reweighted(w), tuple(mult), tuple(rs))


def laplacian_difference_quotient(q: float, rho: float) -> float:
    """2 (exp(-2 pi^2 rho^2 q) - 1) / rho^2, the symbol of 2 (M_rho - 1) / rho^2."""
    if not rho > 0:
        raise ParameterError("rho must be positive")
    if q < 0:
        raise ParameterError("q must be nonnegative")
    return 2 * math.expm1(-2 * math.pi ** 2 * rho * rho * q) / (rho * rho)


@dataclass(frozen=True)
class SandwichReport:
    N: int
    M: int
    i_mn: float
    scaled: float  # -(2T/pi) I_{M,N}
    j_r: np.ndarray
    sup_qv: float
    inf_qv: float
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.scaled <= self.upper


def riemann_sandwich(path: Path, N: int, M: int, trials: int = 16, seed: int = 0) -> SandwichReport:
    """Reordered Riemann sum I_{M,N} of the increment energy at lag T/2^N and its bounds.

    With s = 2^(M-N),
        -(2T/pi) I_{M,N} = (1/s) sum_r J_r + (1/s) |phi(T/2^N)|^2,
    where J_r sums squared increments along rT/2^M + pT/2^N, p = 0..2^N-1.
    Completing that partition with 0 and T gives a partition of mesh <= T/2^N,
    so J_r <= sup Q and J_r >= inf Q - sup_v |phi(v)|^2 - sup_v |phi(T) - phi(T-v)|^2
    over v <= T/2^N.  The sup and inf are taken over a family that contains
    every such partition, random partitions and the dyadic one.
    """
    if not 0 <= N < M:
        raise ParameterError("need 0 <= N < M")
    if (1 << M) > path.steps or (path.uniform and M > max_dyadic_level(path)):
        raise ResolutionError(f"2^{M} exceeds the path resolution ({path.steps} steps)")
    T = path.T
    s = 1 << (M - N)
    big = 1 << N
    k = np.arange((big - 1) * s + 1)
    fine = path.evaluate(np.minimum(k * T / (1 << M), T))
    lag = path.evaluate(np.minimum(k * T / (1 << M) + T / big, T))
    d = lag - fine
    i_mn = -(math.pi / (2 * T)) * float(np.sum(d * d)) * big / (1 << M)
    parts, j_r = [], np.empty(s)
    for r in range(1, s + 1):
        pts = r * T / (1 << M) + np.arange(big) * T / big
        v = path.evaluate(pts)
        j_r[r - 1] = float(np.sum(np.diff(v) ** 2))
        parts.append(PartitionSpec(np.unique(np.concatenate(([0.0], pts, [T])))))
    sup_q, inf_q = qv_sup_inf(path, T / big, trials=trials, seed=seed, extra_partitions=parts)
    edge = T / big
    head = path.grid[path.grid <= edge]
    head = np.append(head, edge)
    tail = np.append(T - path.grid[path.grid <= edge], T - edge)
    slack = float(np.max(path.evaluate(head) ** 2)) + \
        float(np.max((path.values[-1] - path.evaluate(np.clip(tail, 0, T))) ** 2))
    boundary = float(path.evaluate(np.array([edge]))[0] ** 2) / s
    return SandwichReport(N, M, i_mn, -(2 * T / math.pi) * i_mn, j_r, sup_q, inf_q,
                          inf_q - slack, sup_q + boundary)


def synthesize_paths(coeffs, T: float = 1.0, M: int = 1 << 12):
    """Paths phi = sum_k c_k e_k, one per row of ``coeffs`` (modes 0..n-1)."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    return [generate_path("smooth_fourier", T, M, coeffs=row) for row in coeffs]


def gaussian_spectral_ensemble(sds, count: int, seed: int, T: float = 1.0, M: int = 1 << 12) -> PathEnsemble:
    """Equal-weight sample of paths whose mode coefficients are independent Normal(0, sd_k^2).

    For a product of centered Gaussian square roots of widths s_k the
    spectral measure |fhat|^2 is the product of Normal(0, (4 pi s_k)^-2), so
    ``sds = 1 / (4 pi s_k)`` draws from it.
    """
    rng = np.random.default_rng(seed)
    sds = np.asarray(sds, dtype=float)
    c = rng.standard_normal((count, sds.size)) * sds
    return PathEnsemble(synthesize_paths(c, T, M), np.full(count, 1.0 / count))
