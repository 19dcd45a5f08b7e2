import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdfilter.numerics import (LogAmplitude, bigint_log_abs, krawtchouk_row,
                               krawtchouk_sum, log_binomial, log_factorial,
                               signed_logsum)


def exact_log(n: int) -> float:
    return float(mpmath.log(mpmath.mpf(n)))


class TestLogFactorial:
    def test_trivial(self):
        assert log_factorial(0) == 0.0
        assert log_factorial(5) == pytest.approx(math.log(120.0), rel=1e-15)

    def test_against_exact_bigint(self):
        for n in (170, 1000, 2500):
            exact = exact_log(math.factorial(n))
            assert abs(log_factorial(n) - exact) <= 1e-13 * exact

    def test_beyond_cache_bound(self):
        exact = float(mpmath.loggamma(150_001))
        assert abs(log_factorial(150_000) - exact) <= 1e-12 * exact

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            log_factorial(-1)


class TestLogBinomial:
    def test_trivial(self):
        assert log_binomial(10, 0) == 0.0
        assert log_binomial(4, 2) == pytest.approx(math.log(6.0), rel=1e-14)

    def test_out_of_range_is_zero_representation(self):
        assert log_binomial(5, -1) == -math.inf
        assert log_binomial(5, 6) == -math.inf

    def test_against_exact_bigint(self):
        exact = exact_log(math.comb(200, 100))
        assert abs(log_binomial(200, 100) - exact) <= 1e-13 * exact

    def test_matches_factorial_identity_up_to_500(self):
        for n in range(0, 501):
            for k in range(0, n + 1, max(1, n // 7)):
                lhs = log_binomial(n, k)
                rhs = log_factorial(n) - log_factorial(k) - log_factorial(n - k)
                assert abs(lhs - rhs) <= 1e-12


class TestKrawtchouk:
    def test_examples(self):
        assert krawtchouk_sum(0, 0, 0) == 1
        assert krawtchouk_sum(1, 1, 1) == 0          # two paths cancel
        assert krawtchouk_sum(2, 0, 1) == -2

    def test_out_of_range(self):
        assert krawtchouk_sum(2, 2, 5) == 0
        assert krawtchouk_sum(2, 2, -1) == 0

    def test_row_matches_pointwise(self):
        for v, w in ((0, 0), (3, 2), (7, 7), (12, 5)):
            row = krawtchouk_row(v, w)
            assert len(row) == v + w + 1
            for K in range(v + w + 1):
                assert row[K] == krawtchouk_sum(v, w, K)

    def test_swap_symmetry_exhaustive(self):
        # (x-1)^v (x+1)^w = (-1)^(v+w) * [(x-1)^w (x+1)^v at -x], hence
        # coefficient K picks up (-1)^(v+w+K) under swapping v and w
        rows = {}
        for v in range(41):
            for w in range(41):
                rows[(v, w)] = krawtchouk_row(v, w)
        for v in range(41):
            for w in range(41):
                a = rows[(v, w)]
                b = rows[(w, v)]
                for K in range(v + w + 1):
                    sign = -1 if (v + w + K) % 2 else 1
                    assert a[K] == sign * b[K]

    def test_row_unitarity_exact(self):
        # sum_K ksum^2 K! (v+w-K)! == 2^(v+w) v! w!  (integer identity)
        for total in range(0, 61):
            for v in range(total + 1):
                w = total - v
                row = krawtchouk_row(v, w)
                lhs = sum(c * c * math.factorial(K) * math.factorial(total - K)
                          for K, c in enumerate(row))
                assert lhs == (1 << total) * math.factorial(v) * math.factorial(w)


class TestBigintLog:
    def test_small_and_huge(self):
        assert bigint_log_abs(0) == -math.inf
        assert bigint_log_abs(-7) == pytest.approx(math.log(7.0), rel=1e-15)
        x = math.factorial(500)
        assert abs(bigint_log_abs(x) - exact_log(x)) <= 1e-14 * exact_log(x)


class TestLogAmplitude:
    def test_zero_and_sign(self):
        z = LogAmplitude.from_real(0.0)
        assert z.sign == 0 and z.to_real() == 0.0
        assert (z * LogAmplitude.from_real(3.0)).sign == 0

    def test_round_trip_grid(self):
        for exp10 in range(-300, 301, 25):
            for s in (1.0, -1.0):
                x = s * 10.0 ** exp10
                y = LogAmplitude.from_real(x).to_real()
                assert abs(y - x) <= 1e-12 * abs(x)

    @given(st.floats(min_value=1e-300, max_value=1e300),
           st.sampled_from([-1.0, 1.0]))
    def test_round_trip_hypothesis(self, mag, s):
        x = s * mag
        y = LogAmplitude.from_real(x).to_real()
        assert abs(y - x) <= 1e-12 * abs(x)

    def test_mul(self):
        a = LogAmplitude.from_real(-3.0)
        b = LogAmplitude.from_real(2.0)
        assert (a * b).to_real() == pytest.approx(-6.0, rel=1e-14)


class TestSignedLogsum:
    def test_empty_is_zero(self):
        assert signed_logsum([]).sign == 0

    def test_exact_cancellation(self):
        x = LogAmplitude(1, 12.34)
        assert signed_logsum([x, -x]).sign == 0

    def test_plain_sum(self):
        vals = [3.5, -1.25, 0.75]
        got = signed_logsum([LogAmplitude.from_real(v) for v in vals])
        assert got.to_real() == pytest.approx(sum(vals), rel=1e-14)

    def test_large_random_set_against_high_precision(self):
        rng = np.random.default_rng(20240811)
        logs = rng.normal(0.0, 80.0, size=10_000)
        signs = rng.choice([-1, 1], size=10_000)
        terms = [LogAmplitude(int(s), float(l)) for s, l in zip(signs, logs)]
        fast = signed_logsum(terms)
        precise = signed_logsum(terms, precision_bits=200)
        # meaningful comparison only away from total cancellation
        assert precise.log_mag - max(logs) > math.log(1e-6)
        assert fast.sign == precise.sign
        assert abs(fast.log_mag - precise.log_mag) <= 1e-9

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(-50, 50), st.sampled_from([-1, 1])),
                    min_size=1, max_size=60))
    def test_hypothesis_against_high_precision(self, raw):
        terms = [LogAmplitude(s, l) for l, s in raw]
        fast = signed_logsum(terms)
        precise = signed_logsum(terms, precision_bits=300)
        if precise.sign == 0:
            # float path may keep a residual at roundoff scale
            if fast.sign != 0:
                assert fast.log_mag - max(l for l, _ in raw) < math.log(1e-9)
            return
        top = max(l for l, _ in raw)
        if precise.log_mag - top > math.log(1e-6):
            assert fast.sign == precise.sign
            assert abs(fast.log_mag - precise.log_mag) <= 1e-9
