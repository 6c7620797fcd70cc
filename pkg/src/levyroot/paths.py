"""Sampled paths on [0, T], partitions, and quadratic variation.

A path is a list of samples ``values[i] = phi(grid[i])`` with ``phi(0) = 0``,
interpolated linearly between samples.  Every integral taken against a
path is evaluated segment by segment in closed form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, ResolutionError

KINDS = ("brownian", "scaled_brownian", "smooth_fourier", "linear", "constant_zero")


@dataclass(frozen=True, eq=False)
class Path:
    T: float
    grid: np.ndarray
    values: np.ndarray
    kind: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        grid = np.ascontiguousarray(self.grid, dtype=float)
        values = np.ascontiguousarray(self.values, dtype=float)
        T = float(self.T)
        if not T > 0:
            raise ParameterError(f"horizon must be positive, got {T}")
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ParameterError("grid and values must be 1-D arrays of equal length >= 2")
        if grid[0] != 0.0 or grid[-1] != T:
            raise ParameterError("grid must start at 0 and end at T")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError("grid must be strictly increasing")
        if values[0] != 0.0:
            raise ParameterError("paths start at the origin: values[0] must be 0")
        if not np.all(np.isfinite(values)):
            raise ParameterError("path values must be finite")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def steps(self) -> int:
        return self.grid.size - 1

    @property
    def uniform(self) -> bool:
        h = np.diff(self.grid)
        return bool(np.all(np.abs(h - self.T / self.steps) <= 1e-12 * self.T))

    def evaluate(self, t) -> np.ndarray:
        """Piecewise-linear interpolation, exact at grid nodes."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.T):
            raise DomainError(f"evaluation point outside [0, {self.T}]")
        g, v = self.grid, self.values
        i = np.clip(np.searchsorted(g, t, side="right") - 1, 0, g.size - 2)
        w = (t - g[i]) / (g[i + 1] - g[i])
        out = v[i] + w * (v[i + 1] - v[i])
        out = np.where(w == 0.0, v[i], out)
        return np.where(w == 1.0, v[i + 1], out)

    def dyadic_values(self, level: int) -> np.ndarray:
        """Samples at k T / 2^level, k = 0..2^level."""
        n = 1 << level
        if self.uniform and self.steps % n == 0:
            return self.values[:: self.steps // n].copy()
        return self.evaluate(np.arange(n + 1) * (self.T / n))

    def scale(self, sigma: float) -> "Path":
        return Path(self.T, self.grid, sigma * self.values, self.kind, self.seed)

    def __add__(self, other: "Path") -> "Path":
        if other.T != self.T or not np.array_equal(other.grid, self.grid):
            raise ParameterError("paths must share a grid")
        return Path(self.T, self.grid, self.values + other.values)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "meta": {"kind": self.kind, "seed": self.seed},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Path":
        meta = d.get("meta", {})
        return cls(d["T"], d["grid"], d["values"], meta.get("kind", "custom"), meta.get("seed"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Path":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class PartitionSpec:
    points: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ParameterError("a partition needs at least two points")
        if np.any(np.diff(p) <= 0):
            raise ParameterError("partition points must be strictly increasing")
        object.__setattr__(self, "points", p)

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.points)))

    @classmethod
    def uniform(cls, T: float, n: int) -> "PartitionSpec":
        return cls(np.linspace(0.0, T, n + 1))

    @classmethod
    def dyadic(cls, T: float, level: int) -> "PartitionSpec":
        return cls(np.arange((1 << level) + 1) * (T / (1 << level)))

    @classmethod
    def random(cls, T: float, mesh_bound: float, rng: np.random.Generator) -> "PartitionSpec":
        """Random steps in [mesh_bound/20, mesh_bound]; the last step is clipped at T."""
        pts = [np.zeros(1)]
        last = 0.0
        while last < T:
            n = int(2.2 * (T - last) / mesh_bound) + 8
            steps = mesh_bound * rng.uniform(0.05, 1.0, size=n)
            cum = last + np.cumsum(steps)
            pts.append(cum[cum < T])
            last = cum[-1]
        p = np.concatenate(pts + [np.array([T])])
        return cls(p)


def generate_path(kind: str, T: float = 1.0, M: int = 1 << 16, seed: int = 0, *,
                  sigma: float = 1.0, slope: float = 1.0, coeffs=()) -> Path:
    """Build a test path on the uniform grid t_i = i T / M.

    brownian: Gaussian random walk with increments of variance T/M.
    scaled_brownian: sigma times the brownian path of the same seed.
    smooth_fourier: sum of coeffs[k] * e_k with the orthonormal basis e_k.
    linear: slope * t.  constant_zero: 0.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown path kind {kind!r}")
    M = int(M)
    if M < 2:
        raise ParameterError("M must be at least 2")
    if not T > 0:
        raise ParameterError("T must be positive")
    grid = np.linspace(0.0, T, M + 1)
    grid[-1] = T
    if kind in ("brownian", "scaled_brownian"):
        if M & (M - 1):
            raise ParameterError("brownian paths need M a power of two")
        if kind == "scaled_brownian" and not sigma > 0:
            raise ParameterError("sigma must be positive")
        rng = np.random.default_rng(seed)
        inc = rng.standard_normal(M) * math.sqrt(T / M)
        if kind == "scaled_brownian":
            inc = sigma * inc
        values = np.concatenate(([0.0], np.cumsum(inc)))
    elif kind == "smooth_fourier":
        from .cons import basis_eval
        values = np.zeros(M + 1)
        for k, c in enumerate(coeffs):
            if c:
                values += c * basis_eval(k, grid, T)
        values[0] = 0.0
    elif kind == "linear":
        values = slope * grid
    else:
        values = np.zeros(M + 1)
    return Path(T, grid, values, kind, seed)


def _points(path: Path, partition) -> np.ndarray:
    pts = partition.points if isinstance(partition, PartitionSpec) else np.asarray(partition, float)
    if np.any(pts < 0) or np.any(pts > path.T):
        raise DomainError(f"partition point outside [0, {path.T}]")
    return pts


def quadratic_variation(path: Path, partition) -> float:
    """Sum of squared increments of the path along the partition."""
    d = np.diff(path.evaluate(_points(path, partition)))
    return float(np.sum(d * d))


@dataclass(frozen=True)
class QvEstimate:
    levels: tuple
    values: tuple
    limit: float
    rel_change: float
    threshold: float
    status: str  # "converged", "converging_to_zero" or "not_converged"

    @property
    def converged(self) -> bool:
        return self.status != "not_converged"

    @property
    def qv(self) -> float:
        """The identified limit: zero when the per-level values decay geometrically."""
        if self.status == "not_converged":
            raise ValueError("quadratic variation did not converge")
        return 0.0 if self.status == "converging_to_zero" else self.limit


def max_dyadic_level(path: Path) -> int:
    if not path.uniform:
        return int(math.floor(math.log2(path.steps)))
    m, lev = path.steps, 0
    while m % 2 == 0:
        m //= 2
        lev += 1
    return lev


def qv_limit_dyadic(path: Path, levels=None, threshold: float = 0.02) -> QvEstimate:
    """Quadratic variation along dyadic partitions {k T / 2^l}.

    The limit is the finest-level value.  Convergence is declared when the
    relative change between the two finest levels is at most ``threshold``;
    values shrinking by a factor <= 0.75 per level over the last three levels
    are reported as converging to zero.
    """
    top = max_dyadic_level(path)
    if levels is None:
        levels = range(max(0, top - 6), top + 1)
    levels = tuple(int(l) for l in levels)
    if not levels:
        raise ParameterError("need at least one level")
    if max(levels) > top:
        raise ResolutionError(f"level {max(levels)} exceeds the path resolution (max {top})")
    vals = []
    for lev in levels:
        d = np.diff(path.dyadic_values(lev))
        vals.append(float(np.sum(d * d)))
    last = vals[-1]
    prev = vals[-2] if len(vals) > 1 else last
    if last == 0.0:
        rel = 0.0 if prev == 0.0 else math.inf
    else:
        rel = abs(last - prev) / last
    if last == 0.0 and prev == 0.0:
        status = "converged"
    elif rel <= threshold:
        status = "converged"
    elif len(vals) >= 3 and vals[-1] <= 0.75 * vals[-2] and vals[-2] <= 0.75 * vals[-3]:
        status = "converging_to_zero"
    else:
        status = "not_converged"
    return QvEstimate(levels, tuple(vals), last, rel, threshold, status)


def finest_dyadic_level(T: float, mesh_bound: float) -> int:
    lev = 0
    while T / (1 << lev) > mesh_bound:
        lev += 1
    return lev


def qv_sup_inf(path: Path, mesh_bound: float, trials: int = 16, seed: int = 0,
               extra_partitions=()) -> tuple:
    """Max and min of the quadratic variation over admissible partitions.

    The family holds ``trials`` random partitions with mesh <= mesh_bound,
    the finest dyadic partition of that mesh and any ``extra_partitions``.
    This approximates sup/inf over all partitions from the inside.
    """
    if not 0 < mesh_bound <= path.T:
        raise ParameterError("mesh_bound must lie in (0, T]")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    lev = finest_dyadic_level(path.T, mesh_bound)
    if (1 << lev) <= path.steps:
        d = np.diff(path.dyadic_values(lev))
        qs = [float(np.sum(d * d))]
    else:
        qs = [quadratic_variation(path, PartitionSpec.dyadic(path.T, lev))]
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        qs.append(quadratic_variation(path, PartitionSpec.random(path.T, mesh_bound, rng)))
    for p in extra_partitions:
        p = p if isinstance(p, PartitionSpec) else PartitionSpec(p)
        if p.mesh > mesh_bound * (1 + 1e-12):
            raise ParameterError("extra partition exceeds the mesh bound")
        qs.append(quadratic_variation(path, p))
    return max(qs), min(qs)


def _sq_diff_integral(s, y, shift, sign, lo, hi) -> float:
    """Exact integral over [lo, hi] of (y(shift + sign*t) - y(t))^2, y piecewise linear on s."""
    if hi <= lo:
        return 0.0
    cand = np.concatenate(([lo, hi], s, sign * (s - shift)))
    b = np.unique(cand[(cand >= lo) & (cand <= hi)])
    g = np.interp(shift + sign * b, s, y) - np.interp(b, s, y)
    return float(np.sum(np.diff(b) * (g[:-1] ** 2 + g[:-1] * g[1:] + g[1:] ** 2)) / 3.0)


def increment_energy(path: Path, v: float) -> float:
    """I(v) = -(pi / 2T) * (1/v) * int_0^{pi-v} |phi(T(t+v)/pi) - phi(Tt/pi)|^2 dt."""
    if not 0 < v < math.pi:
        raise DomainError("v must lie in (0, pi)")
    s = path.grid * (math.pi / path.T)
    e = _sq_diff_integral(s, path.values, v, 1.0, 0.0, math.pi - v)
    return -(math.pi / (2 * path.T)) * e / v
