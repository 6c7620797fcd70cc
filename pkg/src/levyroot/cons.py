"""Orthonormal basis of H_0^1[0, T] and path coefficients.

e_0(s) = s / sqrt(T),  e_k(s) = sqrt(2T)/(k pi) sin(k pi s / T).

For a piecewise-linear path the coefficient is

    <phi, e_k> = sqrt(2/T) (-1)^k phi(T) + sqrt(2/T) int_0^pi phi(Ts/pi) k sin(ks) ds.

Integrating each linear piece in closed form, the boundary term cancels
against the telescoped -(a + b s) cos(ks) parts, leaving

    <phi, e_k> = sqrt(2/T) / k * sum_j b_j (sin(k s_{j+1}) - sin(k s_j)),

with b_j the slope of phi(Ts/pi) on [s_j, s_{j+1}].  That sum is evaluated
directly ("exact"), or through a type-II DCT of the increments when the grid
is uniform ("fast").
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .errors import DomainError, ParameterError
from .paths import Path

_CHUNK_ELEMS = 1 << 22


def basis_eval(k: int, s, T: float):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > T):
        raise DomainError(f"s outside [0, {T}]")
    if k < 0:
        raise ParameterError("k must be nonnegative")
    if k == 0:
        return s / math.sqrt(T)
    return math.sqrt(2 * T) / (k * math.pi) * np.sin(k * math.pi * s / T)


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    T: float
    coeffs: np.ndarray
    nyquist: int

    @property
    def energy(self) -> np.ndarray:
        return self.coeffs * self.coeffs

    @property
    def n_max(self) -> int:
        return self.coeffs.size - 1

    @property
    def resolution_limited(self) -> np.ndarray:
        """Mask of modes above the grid's Nyquist index, where interpolation bias dominates."""
        return np.arange(self.coeffs.size) > self.nyquist

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "coeff", "energy"])
        for k, (c, e) in enumerate(zip(self.coeffs, self.energy)):
            w.writerow([k, f"{c:.17g}", f"{e:.17g}"])
        return buf.getvalue()


def _slope_jumps(path: Path):
    s = path.grid * (math.pi / path.T)
    b = np.diff(path.values) / np.diff(s)
    jumps = np.concatenate(([0.0], b)) - np.concatenate((b, [0.0]))
    return s, jumps


def _exact(path: Path, ks: np.ndarray) -> np.ndarray:
    # sum_j b_j (sin k s_{j+1} - sin k s_j) = sum_j sin(k s_j) (b_{j-1} - b_j)
    s, jumps = _slope_jumps(path)
    out = np.empty(ks.size)
    rows = max(1, _CHUNK_ELEMS // s.size)
    for lo in range(0, ks.size, rows):
        kk = ks[lo:lo + rows].astype(float)
        out[lo:lo + rows] = np.sum(np.sin(np.outer(kk, s)) * jumps, axis=1) / kk
    return out * math.sqrt(2 / path.T)


def _fast(path: Path, ks: np.ndarray) -> np.ndarray:
    M = path.steps
    c = dct(np.diff(path.values), type=2) / 2  # c[r] = sum_j d_j cos(r pi (j + 1/2) / M)
    r = ks % (2 * M)
    flip = ks // (2 * M) % 2 == 1
    upper = r > M
    idx = np.where(upper, 2 * M - r, r)
    ext = np.append(c, 0.0)
    C = ext[idx]
    C = np.where(upper != flip, -C, C)
    kk = ks.astype(float)
    pref = (M / (kk * math.pi)) * 2 * np.sin(kk * math.pi / (2 * M))
    return math.sqrt(2 / path.T) * pref * C


def _sine_coefficients(path: Path, ks: np.ndarray, method: str) -> np.ndarray:
    if method == "auto":
        method = "fast" if path.uniform else "exact"
    if method == "fast":
        if not path.uniform:
            raise ParameterError("the fast route needs a uniform grid")
        return _fast(path, ks)
    if method == "exact":
        return _exact(path, ks)
    raise ParameterError(f"unknown method {method!r}")


def coefficient_sequence(path: Path, n_max: int, method: str = "auto") -> CoefficientSequence:
    """Coefficients <phi, e_k> for k = 0..n_max."""
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    out = np.empty(n_max + 1)
    out[0] = path.values[-1] / math.sqrt(path.T)
    if n_max:
        out[1:] = _sine_coefficients(path, np.arange(1, n_max + 1), method)
    return CoefficientSequence(path.T, out, path.steps // 2)


def cons_coefficient(path: Path, k: int, method: str = "auto") -> float:
    """Single coefficient <phi, e_k>; bit-identical to the batched routine."""
    if k < 0:
        raise ParameterError("k must be nonnegative")
    if k == 0:
        return float(path.values[-1] / math.sqrt(path.T))
    return float(_sine_coefficients(path, np.array([k]), method)[0])
