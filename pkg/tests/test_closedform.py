"""Closed-form solutions cross-checked against the matrix iteration."""

from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from phantomdecay.closedform import (
    ConvolutionProfile,
    hyp_ratio_q2,
    inner_sum_identity,
    jordan_closed,
    leading_term_checks,
    otoc_closed_q2,
    r1_catalan,
    rate_closed_q2,
    spectral_sum_obc,
)
from phantomdecay.numerics import BackendSpec, DomainError, RATIONAL, rates_from_q
from phantomdecay.transfer import (
    TridiagToeplitz,
    VectorPair,
    build_jordan,
    build_markov_walk,
    iterate_series,
)

RB = BackendSpec(RATIONAL)
Q2 = rates_from_q(2)


class TestConvolutionProfile:
    def test_constant(self):
        c = ConvolutionProfile.constant()
        assert c(0) == c(7) == 1

    def test_exponential(self):
        c = ConvolutionProfile.exponential(Fraction(5, 4))
        assert c(2) == Fraction(16, 25)
        with pytest.raises(DomainError):
            ConvolutionProfile.exponential(0)

    def test_tabulated(self):
        c = ConvolutionProfile.tabulated([1, 2, 3])
        assert c(2) == 3
        with pytest.raises(DomainError):
            c(3)


class TestJordanClosed:
    def test_matches_iteration_exponential(self):
        dim = 12
        delta, sigma = Fraction(3, 10), Fraction(1, 2)
        mu = Fraction(5, 4)
        A = build_jordan(dim, delta, sigma, RB)
        p = tuple(mu ** (1 - k) for k in range(1, dim + 1))
        v = tuple([Fraction(1)] + [Fraction(0)] * (dim - 1))
        series = iterate_series(A, VectorPair(p, v), 20)
        prof = ConvolutionProfile.exponential(mu)
        for t, val in series.values:
            assert val == jordan_closed(t, dim, delta, sigma, prof)

    def test_geometric_identity_below_dim(self):
        """sum_r binom(t,r) delta^{t-r} (sigma/mu)^r = (delta + sigma/mu)^t
        as long as the binomial sum is not truncated (t < dim)."""
        delta, sigma, mu = Fraction(3, 10), Fraction(1, 2), Fraction(2)
        prof = ConvolutionProfile.exponential(mu)
        for t in range(12):
            assert jordan_closed(t, 30, delta, sigma, prof) == (delta + sigma / mu) ** t

    @given(st.integers(min_value=0, max_value=25))
    @settings(max_examples=15, deadline=None)
    def test_constant_profile_binomial_theorem(self, t):
        delta, sigma = Fraction(1, 3), Fraction(1, 5)
        val = jordan_closed(t, t + 1, delta, sigma, ConvolutionProfile.constant())
        assert val == (delta + sigma) ** t

    def test_domain(self):
        with pytest.raises(DomainError):
            jordan_closed(-1, 5, Fraction(1, 2), Fraction(1, 2),
                          ConvolutionProfile.constant())


class TestR1Catalan:
    def test_matches_markov_walk(self):
        d, ta, s = Q2
        W = build_markov_walk(25, d, ta, s, RB)
        x = [Fraction(0)] * W.dim
        x[1] = Fraction(1)
        for t in range(21):
            assert x[0] == r1_catalan(t, d, ta, s)
            x = W.matvec(x)

    def test_first_steps(self):
        d, ta, s = Q2
        assert r1_catalan(0, d, ta, s) == 0
        assert r1_catalan(1, d, ta, s) == ta
        assert r1_catalan(2, d, ta, s) == ta + ta * d

    def test_limit_value(self):
        """r1(inf) = (1 - tau/sigma) / (1 - (tau/sigma)^{m+1}) -> for the
        half-infinite walk at q=2 the absorbed-left fraction tends to the
        t -> inf partial sums from below, bounded by 1/16 + tail."""
        d, ta, s = Q2
        vals = [r1_catalan(t, d, ta, s) for t in (10, 20, 30)]
        assert vals[0] < vals[1] < vals[2] < Fraction(1, 15)


class TestOtocClosedQ2:
    def test_t0_value(self):
        # O(0) = <p|v> = q^4/(q^4-1) = 16/15
        val = otoc_closed_q2(0)
        with gmpy2.context(precision=256):
            assert abs(val - gmpy2.mpfr(16) / 15) < 1e-70

    def test_asymptote(self):
        assert abs(otoc_closed_q2(300) - 1) < 1e-20

    def test_rate_consistency(self):
        """rate_closed_q2 equals the ratio of successive deflated values."""
        with gmpy2.context(precision=256):
            for t in (0, 5, 17):
                ratio = (otoc_closed_q2(t + 1) - 1) / (otoc_closed_q2(t) - 1)
                assert abs(ratio - rate_closed_q2(t)) < 1e-60

    def test_rate_approaches_asymptotic(self):
        r100 = float(rate_closed_q2(100))
        r1000 = float(rate_closed_q2(1000))
        assert abs(r1000 - 0.64) < abs(r100 - 0.64)
        # algebraic 1 - 3/(2t) approach, never within 1e-3 at t = 20
        assert abs(float(rate_closed_q2(20)) - 0.64) > 0.02

    def test_hyp_ratio_decays_to_one(self):
        assert abs(float(hyp_ratio_q2(400)) - 1.0) < 1e-2
        assert float(hyp_ratio_q2(5)) > float(hyp_ratio_q2(50)) > 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            otoc_closed_q2(-1)


class TestSpectralSum:
    def test_matches_iteration(self):
        n = 10
        d, ta, s = Q2
        be = BackendSpec()
        T = TridiagToeplitz(be.convert(d), be.convert(ta), be.convert(s), n - 1, be)
        one, zero = be.one(), be.zero()
        p = tuple([one] * (n - 1))
        v = tuple([one] + [zero] * (n - 2))
        series = iterate_series(T, VectorPair(p, v), 15)
        with be.context():
            for t, val in series.values:
                ref = spectral_sum_obc(t, n, d, ta, s)
                assert abs(val - ref) < 1e-60

    def test_identity_agrees(self):
        d, ta, s = Q2
        for t in (0, 3, 9):
            a = spectral_sum_obc(t, 12, d, ta, s, use_identity=False)
            b = spectral_sum_obc(t, 12, d, ta, s, use_identity=True)
            assert abs(a - b) < 1e-60

    def test_inner_sum_identity(self):
        d, ta, s = Q2
        with gmpy2.context(precision=256):
            pi = gmpy2.const_pi()
            rho = gmpy2.sqrt(gmpy2.mpfr(s) / gmpy2.mpfr(ta))
            for h in (1, 4, 11):
                n = 12
                direct = sum(rho ** k * gmpy2.sin(h * k * pi / n) for k in range(1, n))
                assert abs(direct - inner_sum_identity(h, n, s, ta)) < 1e-60

    def test_degenerate_rates_rejected(self):
        with pytest.raises(DomainError):
            spectral_sum_obc(3, 8, Fraction(1, 2), 0, Fraction(1, 2))


class TestLeadingTermChecks:
    def test_plateau_value(self):
        d, ta, s = Q2
        lead, _ = leading_term_checks(16, d, ta, s, 5)
        # plateau is 1 + (tau/sigma)^n exactly while t <= n-2
        assert abs(float(lead - 1) - (1.0 / 16.0) ** 16) < 1e-25

    def test_t_independence_until_boundary(self):
        d, ta, s = Q2
        vals = [leading_term_checks(16, d, ta, s, t)[0] for t in (0, 7, 14)]
        assert abs(vals[0] - vals[1]) < 1e-60 and abs(vals[1] - vals[2]) < 1e-60

    def test_interior_resonance(self):
        d, ta, s = Q2
        small = abs(leading_term_checks(16, d, ta, s, 10)[1])
        first = abs(leading_term_checks(16, d, ta, s, 14)[1])
        assert small < 1e-70 < first

    def test_domain(self):
        with pytest.raises(DomainError):
            leading_term_checks(10, Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), 3)
