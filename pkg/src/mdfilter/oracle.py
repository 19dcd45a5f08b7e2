"""Brute-force reference implementations for the test suite.

Everything here evolves explicit state dictionaries through beam-splitter
expansions, without Krawtchouk shortcuts, factorised sums or log-space
tricks, so it can serve as an independent oracle for the fast paths.
Matrix elements of a two-port splitter are available with exact
rational-with-square-root bookkeeping for small photon numbers.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .numerics import LogAmplitude
from .states import StateEnsemble, TwoModeFockState

EXACT_PHOTON_LIMIT = 20
PIPELINE_PHOTON_LIMIT = 12

# below this, a detection probability is indistinguishable from the roundoff
# residue of an algebraically cancelled amplitude (genuine probabilities in
# the <= 12 photon regime stay far above it)
ZERO_PROB_FLOOR = 1e-24


# ---------------------------------------------------------------------------
# exact sums of rationals times square roots of square-free integers
# ---------------------------------------------------------------------------

_factor_cache: dict[int, dict[int, int]] = {}


def _factorize(n: int) -> dict[int, int]:
    if n in _factor_cache:
        return dict(_factor_cache[n])
    original = n
    out: dict[int, int] = {}
    for p in (2, 3, 5, 7, 11, 13, 17, 19):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    d = 23
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    _factor_cache[original] = dict(out)
    return out


def _split_square(n: int) -> tuple[int, int]:
    """n = s^2 * d with d square-free; returns (s, d)."""
    if n == 0:
        return 0, 1
    s = 1
    d = 1
    for p, e in _factorize(n).items():
        s *= p ** (e // 2)
        if e % 2:
            d *= p
    return s, d


class RadicalSum:
    """Exact value of the form sum_i q_i * sqrt(d_i), q_i rational,
    d_i distinct square-free positive integers."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = {d: q for d, q in (terms or {}).items() if q != 0}

    @staticmethod
    def zero() -> "RadicalSum":
        return RadicalSum()

    @staticmethod
    def from_rational(q) -> "RadicalSum":
        return RadicalSum({1: Fraction(q)})

    @staticmethod
    def sqrt_of(q) -> "RadicalSum":
        """Exact square root of a non-negative rational."""
        q = Fraction(q)
        if q < 0:
            raise ValueError("radicand must be non-negative")
        if q == 0:
            return RadicalSum.zero()
        s_num, d_num = _split_square(q.numerator)
        s_den, d_den = _split_square(q.denominator)
        # sqrt(a/b) = sqrt(a*b)/b
        coeff = Fraction(s_num, s_den * d_den)
        return RadicalSum({d_num * d_den: coeff})

    def __add__(self, other: "RadicalSum") -> "RadicalSum":
        out = dict(self.terms)
        for d, q in other.terms.items():
            out[d] = out.get(d, Fraction(0)) + q
        return RadicalSum(out)

    def __sub__(self, other: "RadicalSum") -> "RadicalSum":
        return self + (-other)

    def __neg__(self) -> "RadicalSum":
        return RadicalSum({d: -q for d, q in self.terms.items()})

    def __mul__(self, other: "RadicalSum") -> "RadicalSum":
        out: dict[int, Fraction] = {}
        for d1, q1 in self.terms.items():
            for d2, q2 in other.terms.items():
                s, d = _split_square(d1 * d2)
                key = d
                out[key] = out.get(key, Fraction(0)) + q1 * q2 * s
        return RadicalSum(out)

    def scale(self, q) -> "RadicalSum":
        q = Fraction(q)
        return RadicalSum({d: c * q for d, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, RadicalSum) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def to_float(self) -> float:
        return math.fsum(float(q) * math.sqrt(d) for d, q in self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "RadicalSum(0)"
        bits = " + ".join(f"{q}*sqrt({d})" for d, q in sorted(self.terms.items()))
        return f"RadicalSum({bits})"


# ---------------------------------------------------------------------------
# two-port splitter matrix elements by direct polynomial expansion
# ---------------------------------------------------------------------------

def _bs_element_exact(n: int, m: int, K: int, L: int, r: Fraction) -> RadicalSum:
    t = 1 - r
    acc = RadicalSum.zero()
    for j in range(max(0, K - m), min(n, K) + 1):
        i = K - j
        radicand = t ** (j + m - i) * r ** (n - j + i)
        term = RadicalSum.sqrt_of(radicand).scale(
            Fraction(math.comb(n, j) * math.comb(m, i)))
        if (m - i) % 2:
            term = -term
        acc = acc + term
    pref = RadicalSum.sqrt_of(
        Fraction(math.factorial(K) * math.factorial(L),
                 math.factorial(n) * math.factorial(m)))
    return acc * pref


def bs_matrix_element(n: int, m: int, K: int, L: int, r) -> LogAmplitude:
    """Amplitude <K,L| U(r) |n,m> of a two-port beam splitter.

    Convention: in1 -> sqrt(1-r) out1 + sqrt(r) out2,
                in2 -> sqrt(r) out1 - sqrt(1-r) out2.
    Photon number is conserved; a zero amplitude is returned when
    K + L != n + m.  Up to ``EXACT_PHOTON_LIMIT`` photons the value is
    assembled in exact radical arithmetic before conversion.
    """
    if min(n, m, K, L) < 0 or K + L != n + m:
        return LogAmplitude.zero()
    if not (0.0 <= float(r) <= 1.0):
        raise ValueError("reflectivity must lie in [0, 1]")
    if n + m <= EXACT_PHOTON_LIMIT:
        exact = _bs_element_exact(n, m, K, L, Fraction(r).limit_denominator(10**9)
                                  if not isinstance(r, Fraction) else r)
        return LogAmplitude.from_real(exact.to_float())
    rv = float(r)
    tv = 1.0 - rv
    acc = []
    for j in range(max(0, K - m), min(n, K) + 1):
        i = K - j
        mag = math.comb(n, j) * math.comb(m, i) * math.sqrt(
            tv ** (j + m - i) * rv ** (n - j + i))
        acc.append(-mag if (m - i) % 2 else mag)
    total = math.fsum(acc) * math.sqrt(
        math.factorial(K) * math.factorial(L)
        / (math.factorial(n) * math.factorial(m)))
    return LogAmplitude.from_real(total)


def bs_element_exact(n: int, m: int, K: int, L: int, r) -> RadicalSum:
    """Exact radical form of the splitter element (small photon numbers)."""
    if min(n, m, K, L) < 0 or K + L != n + m:
        return RadicalSum.zero()
    if n + m > EXACT_PHOTON_LIMIT:
        raise ValueError("exact form limited to small photon numbers")
    return _bs_element_exact(n, m, K, L, Fraction(r))


def _pbs_monomial_table(v: int, w: int) -> dict[int, float]:
    """Coefficients over 'photons in the symmetric port' after pushing
    |v, w> through the balanced splitter, by iterated polynomial products.

    Built without binomial shortcuts: multiply (x_sym - x_anti)/sqrt(2) in
    v times and (x_sym + x_anti)/sqrt(2) w times.
    """
    coeffs = [1.0]
    for _ in range(v):
        nxt = [0.0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] -= c
        coeffs = [c / math.sqrt(2.0) for c in nxt]
    for _ in range(w):
        nxt = [0.0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] += c
        coeffs = [c / math.sqrt(2.0) for c in nxt]
    return {p: c for p, c in enumerate(coeffs) if c != 0.0}


def pbs_amplitude(v: int, w: int, K: int, L: int) -> float:
    """<K,L| U_pbs |v,w> with the symmetric port first, K + L = v + w."""
    if K + L != v + w or min(v, w, K, L) < 0:
        return 0.0
    table = _pbs_monomial_table(v, w)
    c = table.get(K, 0.0)
    if c == 0.0:
        return 0.0
    # monomial (sym)^K (anti)^L |0> has norm sqrt(K! L!); inputs carry 1/sqrt(v! w!)
    return c * math.sqrt(math.factorial(K) * math.factorial(L)
                         / (math.factorial(v) * math.factorial(w)))


def pbs_outcome_probs(v: int, w: int) -> dict[tuple[int, int], float]:
    """All |<K,L|U_pbs|v,w>|^2 for the balanced splitter."""
    out = {}
    S = v + w
    for K in range(S + 1):
        a = pbs_amplitude(v, w, K, S - K)
        if a != 0.0:
            out[(K, S - K)] = a * a
    return out


# ---------------------------------------------------------------------------
# dense staged evolution of the full tap + splitter + detection pipeline
# ---------------------------------------------------------------------------

class DenseState:
    """Sparse dictionary over mode-occupation tuples with float amplitudes."""

    def __init__(self, amps: dict[tuple, float]):
        self.amps = {k: a for k, a in amps.items() if a != 0.0}

    def norm_sq(self) -> float:
        return math.fsum(a * a for a in self.amps.values())


def _tap_coeff(v: int, n: int, r: float) -> float:
    if v < 0 or v > n:
        return 0.0
    return math.sqrt(math.comb(n, v) * r ** v * (1.0 - r) ** (n - v))


def _state_terms(obj) -> list[tuple[float, dict[tuple[int, int], float]]]:
    comps = list(obj) if isinstance(obj, StateEnsemble) else [(1.0, obj)]
    out = []
    for w, st in comps:
        amps = {}
        for (n, m), a in st.items():
            if a.sign != 0:
                amps[(n, m)] = a.sign * math.exp(a.log_mag)
        out.append((w, amps))
    return out


def full_pipeline_oracle(obj, r: float, R: float, outcome) -> tuple[float, np.ndarray]:
    """Dense reference for the conditioned transmitted distribution.

    Evolves every component through the tap (both modes), the balanced
    splitter on the reflected pair, projection on the detected pair, an
    explicit loss splitter on each transmitted mode and a trace over the
    loss modes.  Returns (detection probability, normalised (k, l) grid).
    Instances above ``PIPELINE_PHOTON_LIMIT`` photons are rejected.
    """
    K = outcome.k_sym
    L = outcome.l_anti
    comps = _state_terms(obj)
    n_top = max((n for _, amps in comps for (n, _) in amps), default=0)
    m_top = max((m for _, amps in comps for (_, m) in amps), default=0)
    total_top = max((n + m for _, amps in comps for (n, m) in amps), default=0)
    if total_top > PIPELINE_PHOTON_LIMIT:
        raise ValueError("photon budget exceeded for the dense oracle")
    grid = np.zeros((n_top + 1, m_top + 1))
    z_total = 0.0
    for weight, amps in comps:
        # amplitude of transmitted |k,l> given detectors (K, L), coherently
        trans: dict[tuple[int, int], float] = {}
        for (n, m), xi in amps.items():
            for v in range(0, n + 1):
                w = K + L - v
                if w < 0 or w > m:
                    continue
                amp = xi * _tap_coeff(v, n, r) * _tap_coeff(w, m, r) \
                    * pbs_amplitude(v, w, K, L)
                if amp == 0.0:
                    continue
                key = (n - v, m - w)
                trans[key] = trans.get(key, 0.0) + amp
        if not trans:
            continue
        if R == 0.0:
            z = math.fsum(a * a for a in trans.values())
            z_total += weight * z
            for (k, l), a in trans.items():
                grid[k, l] += weight * a * a
            continue
        # explicit loss splitters: amplitudes over (kept, lost) tuples, then
        # trace the lost modes (a kept/lost pair fixes its pre-loss source,
        # so the trace is a plain sum of squares)
        z = 0.0
        lossy: dict[tuple[int, int, int, int], float] = {}
        for (k, l), a in trans.items():
            for x in range(k + 1):
                for y in range(l + 1):
                    amp = a * _tap_coeff(x, k, R) * _tap_coeff(y, l, R)
                    if amp == 0.0:
                        continue
                    key = (k - x, l - y, x, y)
                    lossy[key] = lossy.get(key, 0.0) + amp
        for (k, l, _x, _y), amp in lossy.items():
            grid[k, l] += weight * amp * amp
            z += amp * amp
        z_total += weight * z
    if z_total <= ZERO_PROB_FLOOR:
        raise ValueError("outcome has probability zero in the oracle")
    return z_total, grid / grid.sum()
