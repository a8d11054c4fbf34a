"""Closed-form and semi-analytic evaluations of O(t).

These serve as independent oracles against the transfer-matrix iteration:
the Jordan-block binomial sum, the Catalan/Dyck-path absorption series of
the biased walk, its q=2 hypergeometric closed form, and the spectral-sum
form of the open-boundary iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from .numerics import (
    DEFAULT_PREC,
    DomainError,
    binomial,
    catalan,
    gamma_ratio_3half_3,
    hyp2f1,
)

CONSTANT = "Constant"
EXPONENTIAL = "Exponential"
TABULATED = "Tabulated"


@dataclass(frozen=True)
class ConvolutionProfile:
    """Convolution C(r) of the initial vectors in the Jordan-block sum."""

    kind: str
    mu: object | None = None
    values: tuple | None = None

    @classmethod
    def constant(cls):
        return cls(CONSTANT)

    @classmethod
    def exponential(cls, mu):
        if mu <= 0:
            raise DomainError("mu must be positive")
        return cls(EXPONENTIAL, mu=mu)

    @classmethod
    def tabulated(cls, values):
        return cls(TABULATED, values=tuple(values))

    def __call__(self, r):
        if self.kind == CONSTANT:
            return 1
        if self.kind == EXPONENTIAL:
            mu = Fraction(self.mu) if not isinstance(self.mu, gmpy2.mpfr) else self.mu
            return mu ** (-r)
        if r >= len(self.values):
            raise DomainError(f"tabulated profile has no value at r={r}")
        return self.values[r]


def jordan_closed(t, n, delta, sigma, profile):
    """O(t) = sum_{r=0}^{min(t, n-1)} binom(t, r) delta^{t-r} sigma^r C(r).

    Exact when the inputs are exact (rationals / integers).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    total = 0
    for r in range(min(t, n - 1) + 1):
        total += binomial(t, r) * delta ** (t - r) * sigma ** r * profile(r)
    return total


def r1_catalan(t, delta, tau, sigma):
    """Exact left-bath occupation probability of the biased walk at time t.

    r1(t) = tau * sum_{T=0}^{t-1} sum_{k=0}^{T//2}
            Cat(k) (tau sigma)^k delta^{T-2k} binom(T, 2k).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    delta, tau, sigma = Fraction(delta), Fraction(tau), Fraction(sigma)
    total = Fraction(0)
    for big_t in range(t):
        for k in range(big_t // 2 + 1):
            total += (
                catalan(k)
                * (tau * sigma) ** k
                * delta ** (big_t - 2 * k)
                * binomial(big_t, 2 * k)
            )
    return tau * total


def otoc_closed_q2(t, prec=DEFAULT_PREC, max_terms=10000):
    """Closed-form OTOC for q = 2 (open boundary, j = 1 vectors):

    O(t) = 1 + (64 / (375 sqrt(pi))) (16/25)^t Gamma(3/2+t)/Gamma(3+t)
               * 2F1(1, 3/2+t, 3+t; 16/25).

    The normalization prefactor already encodes v_1 = 16/15, so this equals
    the transfer-matrix iteration with the physical vectors (which is the
    ground truth it is validated against).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    with gmpy2.context(precision=prec):
        z = gmpy2.mpfr(16) / 25
        pref = gmpy2.mpfr(64) / (375 * gmpy2.sqrt(gmpy2.const_pi()))
        g = gamma_ratio_3half_3(t, prec)
        f = hyp2f1(1, Fraction(3, 2) + t, 3 + t, Fraction(16, 25), prec, max_terms)
        return 1 + pref * z ** t * g * f


def rate_closed_q2(t, prec=DEFAULT_PREC, max_terms=10000):
    """Effective decay rate of the q = 2 closed form:

    lambda_eff(t) = (16/25) (3/2+t)/(3+t)
                    * 2F1(1, 5/2+t, 4+t; 16/25) / 2F1(1, 3/2+t, 3+t; 16/25).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    with gmpy2.context(precision=prec):
        z = Fraction(16, 25)
        num = hyp2f1(1, Fraction(5, 2) + t, 4 + t, z, prec, max_terms)
        den = hyp2f1(1, Fraction(3, 2) + t, 3 + t, z, prec, max_terms)
        return (
            gmpy2.mpfr(16) / 25
            * (gmpy2.mpfr(3) / 2 + t)
            / (3 + t)
            * num
            / den
        )


def hyp_ratio_q2(t, prec=DEFAULT_PREC):
    """The hypergeometric ratio appearing in rate_closed_q2 (decays to 1)."""
    with gmpy2.context(precision=prec):
        z = Fraction(16, 25)
        return hyp2f1(1, Fraction(5, 2) + t, 4 + t, z, prec) / hyp2f1(
            1, Fraction(3, 2) + t, 3 + t, z, prec
        )


def spectral_sum_obc(t, n, delta, tau, sigma, prec=DEFAULT_PREC, use_identity=False):
    """<1| T^t |e_1> for the open-boundary bulk via the spectral decomposition:

    O(t) = (2/n) sum_h lambda_h^t (tau/sigma)^{1/2} sin(h pi / n)
                 * sum_k (sigma/tau)^{k/2} sin(h k pi / n).

    With ``use_identity`` the inner sum over k is replaced by its closed
    geometric-sum form.
    """
    if t < 0 or n < 2:
        raise DomainError("need t >= 0 and n >= 2")
    if sigma == 0 or tau == 0:
        raise DomainError("spectral sum requires sigma*tau > 0")
    with gmpy2.context(precision=prec):
        d = gmpy2.mpfr(delta)
        ta = gmpy2.mpfr(tau)
        s = gmpy2.mpfr(sigma)
        pi = gmpy2.const_pi()
        rho = gmpy2.sqrt(s / ta)  # (sigma/tau)^{1/2}
        root = gmpy2.sqrt(s * ta)
        total = gmpy2.mpfr(0)
        for h in range(1, n):
            lam = d + 2 * root * gmpy2.cos(h * pi / n)
            sin_h = gmpy2.sin(h * pi / n)
            if use_identity:
                inner = inner_sum_identity(h, n, sigma, tau, prec)
            else:
                inner = gmpy2.mpfr(0)
                for k in range(1, n):
                    inner += rho ** k * gmpy2.sin(h * k * pi / n)
            total += lam ** t * sin_h / rho * inner
        return 2 * total / n


def inner_sum_identity(h, n, sigma, tau, prec=DEFAULT_PREC):
    """Closed form of sum_{k=1}^{n-1} (sigma/tau)^{k/2} sin(h k pi / n):

    sqrt(sigma/tau) (1 - (-1)^h (sigma/tau)^{n/2}) sin(h pi / n)
      / (1 + sigma/tau - 2 sqrt(sigma/tau) cos(h pi / n)).
    """
    with gmpy2.context(precision=prec):
        pi = gmpy2.const_pi()
        ratio = gmpy2.mpfr(sigma) / gmpy2.mpfr(tau)
        rho = gmpy2.sqrt(ratio)
        sign = -1 if h % 2 else 1
        num = rho * (1 - sign * rho ** n) * gmpy2.sin(h * pi / n)
        den = 1 + ratio - 2 * rho * gmpy2.cos(h * pi / n)
        return num / den


def leading_term_checks(n, delta, tau, sigma, t, prec=DEFAULT_PREC):
    """Two numerical probes of the leading-term cancellation argument.

    Returns (leading, interior):

    * ``leading`` -- the alternating-sign part of the one-sum form of O(t),
      normalized by sigma/(sigma-tau) * (2 tau / n) * (sigma/tau)^{n/2} so
      that its plateau value is 1 + O((tau/sigma)^n).  The alternating sum
      is exactly t-independent for t <= n-2: the part of O(t) that cancels
      against the asymptote does not move until near-extensive times.
    * ``interior`` -- sum_h (-1)^h sin^2(h pi / n) (lambda_h / lambda_ps)^k
      at k = t.  It vanishes for k < n-2; the first resonance, at k = n-2,
      has magnitude of order (tau/sigma)^{n/2}.
    """
    if sigma <= tau:
        raise DomainError("probes assume sigma > tau")
    if t < 0:
        raise DomainError("t must be nonnegative")
    with gmpy2.context(precision=prec):
        d = gmpy2.mpfr(delta)
        ta = gmpy2.mpfr(tau)
        s = gmpy2.mpfr(sigma)
        pi = gmpy2.const_pi()
        root = gmpy2.sqrt(s * ta)
        lam_ps = d + s + ta
        norm = s / (s - ta) * (2 * ta / n) * gmpy2.sqrt(s / ta) ** n
        leading = gmpy2.mpfr(0)
        interior = gmpy2.mpfr(0)
        for h in range(1, n):
            lam = d + 2 * root * gmpy2.cos(h * pi / n)
            sin2 = gmpy2.sin(h * pi / n) ** 2
            sign = -1 if h % 2 else 1
            leading += lam ** t * sin2 * (-sign) / (lam_ps - lam)
            interior += sign * sin2 * (lam / lam_ps) ** t
        return norm * leading, interior
