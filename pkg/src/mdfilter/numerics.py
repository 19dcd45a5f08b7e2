"""Exact and log-space combinatorial kernels.

Everything cancellation-prone lives here: alternating binomial double sums
are evaluated exactly over Python integers, and all real prefactors are kept
as (sign, log-magnitude) pairs so that factorials of order 2000 never leave
log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

LN2 = math.log(2.0)

# Factorial log table: exact-ish cumulative summation (extended precision)
# up to the cache bound, loggamma beyond.
FACT_CACHE_BOUND = 100_000
_fact_table = np.zeros(1)


def _grow_fact_table(n: int) -> None:
    global _fact_table
    size = len(_fact_table)
    if n < size:
        return
    new = max(2 * size, n + 1, 1024)
    new = min(new, FACT_CACHE_BOUND + 1)
    t = np.zeros(new, dtype=np.longdouble)
    t[1:] = np.cumsum(np.log(np.arange(1, new, dtype=np.longdouble)))
    _fact_table = t.astype(np.float64)


def log_factorial(n: int) -> float:
    """ln(n!) for n >= 0; table lookup below the cache bound, lgamma beyond."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n <= FACT_CACHE_BOUND:
        if n >= len(_fact_table):
            _grow_fact_table(n)
        return float(_fact_table[n])
    return math.lgamma(n + 1.0)


def log_factorial_array(n_max: int) -> np.ndarray:
    """View of the table [0..n_max]; n_max must stay below the cache bound."""
    if n_max > FACT_CACHE_BOUND:
        raise ValueError("array form only supported up to the cache bound")
    if n_max >= len(_fact_table):
        _grow_fact_table(n_max)
    return _fact_table[: n_max + 1]


def log_binomial(n: int, k: int) -> float:
    """ln C(n,k); -inf (the zero representation) outside 0 <= k <= n."""
    if k < 0 or k > n:
        return -math.inf
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def bigint_log_abs(x: int) -> float:
    """ln|x| for arbitrary-precision integers, -inf for zero."""
    x = abs(x)
    if x == 0:
        return -math.inf
    b = x.bit_length()
    if b <= 900:
        return math.log(float(x))
    s = b - 60
    return math.log(float(x >> s)) + s * LN2


def krawtchouk_sum(v: int, w: int, K: int) -> int:
    """Exact alternating balanced-splitter sum.

    Returns ``sum_{p+q=K} (-1)^(v-p) C(v,p) C(w,q)`` as a Python integer,
    i.e. the coefficient of ``x^K`` in ``(x-1)^v (x+1)^w``.  The variant with
    ``(-1)^p`` attached to the other binomial equals this up to a global sign
    ``(-1)^v``, which drops out of every squared amplitude.
    """
    if v < 0 or w < 0 or K < 0 or K > v + w:
        return 0
    lo = max(0, K - w)
    hi = min(v, K)
    acc = 0
    for p in range(lo, hi + 1):
        term = math.comb(v, p) * math.comb(w, K - p)
        acc += term if ((v - p) & 1) == 0 else -term
    return acc


def krawtchouk_row(v: int, w: int) -> list[int]:
    """All coefficients of (x-1)^v (x+1)^w, index K = 0..v+w, exactly."""
    poly = [1]
    for _ in range(v):
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] -= c
            nxt[i + 1] += c
        poly = nxt
    for _ in range(w):
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] += c
            nxt[i + 1] += c
        poly = nxt
    return poly


@dataclass(frozen=True)
class LogAmplitude:
    """Signed real amplitude as (sign, ln|x|); sign 0 encodes exact zero."""

    sign: int
    log_mag: float

    @staticmethod
    def zero() -> "LogAmplitude":
        return LogAmplitude(0, 0.0)

    @staticmethod
    def from_real(x: float) -> "LogAmplitude":
        if x == 0.0:
            return LogAmplitude(0, 0.0)
        return LogAmplitude(1 if x > 0 else -1, math.log(abs(x)))

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    def __mul__(self, other: "LogAmplitude") -> "LogAmplitude":
        s = self.sign * other.sign
        if s == 0:
            return LogAmplitude.zero()
        return LogAmplitude(s, self.log_mag + other.log_mag)

    def __neg__(self) -> "LogAmplitude":
        return LogAmplitude(-self.sign, self.log_mag)

    def scaled(self, log_factor: float) -> "LogAmplitude":
        if self.sign == 0:
            return self
        return LogAmplitude(self.sign, self.log_mag + log_factor)


def signed_logsum(terms: Iterable[LogAmplitude],
                  precision_bits: int | None = None) -> LogAmplitude:
    """Signed sum of log-amplitudes.

    The default path subtracts the running maximum log-magnitude and uses
    compensated (``math.fsum``) accumulation.  ``precision_bits`` switches to
    an mpmath evaluation with that mantissa width, intended for validation
    runs against the float path.
    """
    items = [t for t in terms if t.sign != 0]
    if not items:
        return LogAmplitude.zero()
    top = max(t.log_mag for t in items)
    if precision_bits is not None:
        import mpmath

        with mpmath.workprec(precision_bits):
            total = mpmath.fsum(
                t.sign * mpmath.exp(mpmath.mpf(t.log_mag) - top) for t in items
            )
            if total == 0:
                return LogAmplitude.zero()
            return LogAmplitude(1 if total > 0 else -1,
                                float(mpmath.log(abs(total)) + top))
    total = math.fsum(t.sign * math.exp(t.log_mag - top) for t in items)
    if total == 0.0:
        return LogAmplitude.zero()
    return LogAmplitude(1 if total > 0 else -1, top + math.log(abs(total)))


def signed_logsum_arrays(log_mags: Sequence[float], signs: Sequence[int],
                         precision_bits: int | None = None) -> LogAmplitude:
    """Array-friendly wrapper around :func:`signed_logsum`."""
    return signed_logsum(
        (LogAmplitude(int(s), float(l)) for l, s in zip(log_mags, signs) if s != 0),
        precision_bits=precision_bits,
    )
