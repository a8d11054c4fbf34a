"""Numeric backends and special functions shared by the whole package.

Two scalar backends are supported:

* ``rational`` -- exact ``fractions.Fraction`` arithmetic.  This is the
  ground-truth oracle backend; every structured matrix iteration can be run
  on it for moderate sizes.
* ``float`` -- arbitrary-precision binary floats (``gmpy2.mpfr``), default
  256 bits.  Deflated decay series span many tens of decades, far below
  what double precision can represent relative to O(t) ~ 1, which is why
  53-bit doubles are only the floor, not the default.

Complex high-precision values use ``gmpy2.mpc`` with the same precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2


class DomainError(ValueError):
    """Input outside an operation's stated domain."""


class ConvergenceError(RuntimeError):
    """An iterative computation failed to converge within its budget."""

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class NumericalError(RuntimeError):
    """A numerical step failed (singular system, lost accuracy, ...)."""


class DefectiveMatrixError(NumericalError):
    """The analytic eigensystem does not exist (defective matrix)."""


class EstimationError(RuntimeError):
    """A rate/plateau estimator found no admissible data window."""


RATIONAL = "rational"
FLOAT = "float"

DEFAULT_PREC = 256


@dataclass(frozen=True)
class BackendSpec:
    """Scalar backend selector: exact rationals or mpfr floats of ``prec`` bits."""

    kind: str = FLOAT
    prec: int = DEFAULT_PREC

    def __post_init__(self):
        if self.kind not in (RATIONAL, FLOAT):
            raise DomainError(f"unknown backend kind {self.kind!r}")
        if self.kind == FLOAT and self.prec < 53:
            raise DomainError("float backend precision must be >= 53 bits")

    def context(self):
        """gmpy2 context manager pinning this backend's precision."""
        return gmpy2.context(precision=self.prec)

    def convert(self, x):
        """Convert an int/Fraction/float/mpfr to this backend's scalar type."""
        if self.kind == RATIONAL:
            if isinstance(x, Fraction):
                return x
            if isinstance(x, int):
                return Fraction(x)
            if isinstance(x, float):
                return Fraction(x)
            if isinstance(x, gmpy2.mpfr):
                raise DomainError("cannot convert an mpfr into the rational backend")
            return Fraction(x)
        with self.context():
            return gmpy2.mpfr(x)

    def zero(self):
        return Fraction(0) if self.kind == RATIONAL else self.convert(0)

    def one(self):
        return Fraction(1) if self.kind == RATIONAL else self.convert(1)

    def eps(self):
        """Unit roundoff of the float backend (rational backend has none)."""
        if self.kind == RATIONAL:
            raise DomainError("rational backend has no machine epsilon")
        with self.context():
            return gmpy2.mpfr(2) ** (1 - self.prec)


RATIONAL_BACKEND = BackendSpec(RATIONAL, DEFAULT_PREC)
FLOAT_BACKEND = BackendSpec(FLOAT, DEFAULT_PREC)


def rates_from_q(q):
    """Exact bulk hopping rates (delta, tau, sigma) for local dimension q.

    delta = 2q^2/(1+q^2)^2, tau = 1/(1+q^2)^2, sigma = q^4/(1+q^2)^2;
    they sum to 1 exactly because 2q^2 + 1 + q^4 = (1+q^2)^2.
    """
    if not isinstance(q, int) or q < 2:
        raise DomainError("q must be an integer >= 2")
    den = (1 + q * q) ** 2
    return (
        Fraction(2 * q * q, den),
        Fraction(1, den),
        Fraction(q ** 4, den),
    )


def binomial(n, k):
    """Exact n-choose-k for nonnegative integers, k <= n."""
    if n < 0 or k < 0:
        raise DomainError("binomial arguments must be nonnegative")
    if k > n:
        raise DomainError(f"binomial requires k <= n, got ({n}, {k})")
    return math.comb(n, k)


def catalan(k):
    """k-th Catalan number binom(2k, k) / (k + 1), exact."""
    if k < 0:
        raise DomainError("catalan argument must be nonnegative")
    return math.comb(2 * k, k) // (k + 1)


def _is_nonpositive_int(x):
    if isinstance(x, int):
        return x <= 0
    if isinstance(x, Fraction):
        return x.denominator == 1 and x <= 0
    return x == int(x) and x <= 0 if isinstance(x, float) else False


def hyp2f1(a, b, c, z, prec=DEFAULT_PREC, max_terms=10000):
    """Gauss series sum_k (a)_k (b)_k / ((c)_k k!) z^k for |z| < 1.

    The series is truncated when the running term drops below the backend
    epsilon times the current partial sum.  Raises ConvergenceError if that
    does not happen within ``max_terms`` terms.
    """
    if _is_nonpositive_int(c):
        raise DomainError("c must not be a non-positive integer")
    with gmpy2.context(precision=prec):
        za = gmpy2.mpfr(z)
        if abs(za) >= 1:
            raise DomainError("hyp2f1 series requires |z| < 1")
        aa, bb, cc = gmpy2.mpfr(a), gmpy2.mpfr(b), gmpy2.mpfr(c)
        eps = gmpy2.mpfr(2) ** (1 - prec)
        term = gmpy2.mpfr(1)
        total = gmpy2.mpfr(1)
        for k in range(max_terms):
            term = term * (aa + k) * (bb + k) / ((cc + k) * (k + 1)) * za
            total += term
            if abs(term) < eps * abs(total):
                return total
        raise ConvergenceError(
            f"hyp2f1 series did not converge in {max_terms} terms",
            best_estimate=total,
        )


def gamma_ratio_3half_3(t, prec=DEFAULT_PREC):
    """Gamma(3/2+t) / Gamma(3+t) via the stable product recurrence.

    Starts from Gamma(3/2)/Gamma(3) = sqrt(pi)/4 and applies
    G(s+1) = G(s) * (3/2+s)/(3+s); never evaluates two Gammas separately.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    with gmpy2.context(precision=prec):
        g = gmpy2.sqrt(gmpy2.const_pi()) / 4
        for s in range(t):
            g = g * (gmpy2.mpfr(3) / 2 + s) / (3 + s)
        return g


def mpfr_str(x):
    """Deterministic decimal string for a backend scalar (CSV output)."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    return str(x)
