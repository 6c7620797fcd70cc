"""Cesaro and Abel means of real sequences and the path-energy driver."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .cons import coefficient_sequence
from .errors import ParameterError, TruncationError
from .paths import Path


@dataclass(frozen=True)
class SummationResult:
    method: str
    parameter: float
    value: float
    truncation_bound: float = 0.0
    terms: int = 0


def _as_seq(seq) -> np.ndarray:
    return np.ascontiguousarray(seq, dtype=float)


def cesaro_mean(seq, n: int) -> float:
    """(1/n) * sum_{k=0}^{n} seq[k]; np.sum reduces pairwise."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    s = _as_seq(seq)
    if s.size < n + 1:
        raise ParameterError(f"need {n + 1} entries, got {s.size}")
    return float(np.sum(s[: n + 1]) / n)


def abel_terms(sup: float, x: float, eps: float) -> int:
    """Smallest N with sup * x^(N+1) < eps."""
    if sup == 0.0 or x == 0.0:
        return 0
    return max(0, int(math.floor(math.log(eps / sup) / math.log(x))))


def abel_sum(seq, x: float, eps: float = 1e-12) -> SummationResult:
    """(1 - x) * sum_n seq[n] x^n, truncated where sup|seq| x^(N+1) < eps."""
    if not 0 <= x < 1:
        raise ParameterError("x must lie in [0, 1)")
    s = _as_seq(seq)
    if s.size == 0:
        raise ParameterError("empty sequence")
    sup = float(np.max(np.abs(s)))
    N = abel_terms(sup, x, eps)
    while sup * x ** (N + 1) >= eps and sup > 0:
        N += 1
    if N + 1 > s.size:
        achievable = sup * x ** s.size
        raise TruncationError(
            f"x={x} needs {N + 1} terms but only {s.size} are available "
            f"(achievable tail bound {achievable:.3g})", achievable)
    w = x ** np.arange(N + 1, dtype=float)
    value = (1 - x) * float(np.sum(s[: N + 1] * w))
    return SummationResult("abel", x, value, sup * x ** (N + 1), N + 1)


@dataclass(frozen=True)
class TauberianReport:
    x_schedule: tuple
    n_schedule: tuple
    abel: tuple
    cesaro: tuple
    gaps: tuple
    nonnegative: bool

    @property
    def final_gap(self) -> float:
        return self.gaps[-1]


def schedules(j_max: int, j_min: int = 1):
    js = range(j_min, j_max + 1)
    return tuple(1 - 2.0 ** -j for j in js), tuple(1 << j for j in js)


def tauberian_check(seq, x_schedule=None, n_schedule=None, eps: float = 1e-12) -> TauberianReport:
    """Abel and Cesaro trajectories on matched scales x_j = 1 - 1/n_j.

    A negative entry voids the Tauberian hypothesis; it is reported in
    ``nonnegative`` and the trajectories are still computed.
    """
    s = _as_seq(seq)
    if x_schedule is None or n_schedule is None:
        j_max = int(math.log2(max(2, s.size // 40)))
        x_schedule, n_schedule = schedules(j_max)
    if len(x_schedule) != len(n_schedule):
        raise ParameterError("schedules must have equal length")
    ab = tuple(abel_sum(s, x, eps).value for x in x_schedule)
    ce = tuple(cesaro_mean(s, n) for n in n_schedule)
    gaps = tuple(abs(a - c) for a, c in zip(ab, ce))
    return TauberianReport(tuple(x_schedule), tuple(n_schedule), ab, ce, gaps,
                           bool(np.all(s >= 0)))


def cesaro_qv(path: Path, n: int, method: str = "auto") -> float:
    """(<phi,e_0>^2 + ... + <phi,e_n>^2) / n."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return cesaro_mean(coefficient_sequence(path, n, method).energy, n)


def path_abel(path: Path, x: float, eps: float = 1e-12, method: str = "auto") -> SummationResult:
    """Abel mean of the energy sequence, fetching as many modes as the tolerance needs."""
    seq = coefficient_sequence(path, 64, method).energy
    while True:
        try:
            return abel_sum(seq, x, eps)
        except TruncationError:
            n = max(2 * seq.size, int(1.2 * abel_terms(float(np.max(seq)), x, eps)) + 64)
            seq = coefficient_sequence(path, n, method).energy


def convergence_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "parameter", "value", "bound"])
    for r in results:
        w.writerow([r.method, f"{r.parameter:.17g}", f"{r.value:.17g}", f"{r.truncation_bound:.17g}"])
    return buf.getvalue()
