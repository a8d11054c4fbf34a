"""Transfer matrices, initial-vector pairs and the O(t) = <p|A^t|v> iteration.

Every matrix variant implements ``matvec`` straight from its structural
parameters; dense materialization exists only for small-dimension oracle
checks.  All vectors are plain Python lists of backend scalars, so the same
code runs exactly on Fractions and at arbitrary mpfr precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from .numerics import (
    BackendSpec,
    DomainError,
    FLOAT,
    NumericalError,
    RATIONAL,
    rates_from_q,
)

OBC = "OBC"
PBC = "PBC"
MARKOV_WALK = "MarkovWalk"
JORDAN = "Jordan"
CUSTOM = "Custom"


@dataclass(frozen=True)
class ModelParams:
    """Model definition: boundary type, size, and rates (from q or explicit)."""

    boundary: str
    n: int
    q: int | None = None
    rates: tuple | None = None  # (delta, tau, sigma)
    mu: object | None = None
    j: int | None = None

    def __post_init__(self):
        if self.boundary not in (OBC, PBC, MARKOV_WALK, JORDAN, CUSTOM):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.n < 1:
            raise DomainError("n must be positive")
        if self.q is None and self.rates is None:
            raise DomainError("either q or explicit rates are required")

    def resolved_rates(self):
        """(delta, tau, sigma) as exact Fractions where possible."""
        if self.q is not None:
            return rates_from_q(self.q)
        delta, tau, sigma = self.rates
        if any(r < 0 for r in (delta, tau, sigma)):
            raise DomainError("rates must be nonnegative")
        return delta, tau, sigma


class TransferMatrix:
    """Base class: a linear operator with a structured matvec."""

    dim = 0
    backend: BackendSpec | None = None

    def matvec(self, x):
        raise NotImplementedError

    def to_dense(self):
        """Materialize as a list of rows (oracle use; O(dim^2) memory)."""
        zero = self.backend.zero() if self.backend else 0
        cols = []
        for j in range(self.dim):
            e = [zero] * self.dim
            e[j] = self.backend.one() if self.backend else 1
            cols.append(self.matvec(e))
        return [[cols[j][i] for j in range(self.dim)] for i in range(self.dim)]


def _mv_tridiag(delta, tau, sigma, x, zero):
    n = len(x)
    y = []
    for i in range(n):
        acc = delta * x[i]
        if i > 0:
            acc += sigma * x[i - 1]
        if i < n - 1:
            acc += tau * x[i + 1]
        y.append(acc)
    return y


@dataclass(frozen=True)
class TridiagToeplitz(TransferMatrix):
    """Tridiagonal Toeplitz matrix: diagonal delta, super tau, sub sigma."""

    delta: object
    tau: object
    sigma: object
    dim: int
    backend: BackendSpec = None

    def matvec(self, x):
        return _mv_tridiag(self.delta, self.tau, self.sigma, x, self.backend.zero())


@dataclass(frozen=True)
class TwoDiagonal(TransferMatrix):
    """Transposed Jordan block: diagonal delta, subdiagonal sigma."""

    delta: object
    sigma: object
    dim: int
    backend: BackendSpec = None

    def matvec(self, x):
        y = []
        for i in range(self.dim):
            acc = self.delta * x[i]
            if i > 0:
                acc += self.sigma * x[i - 1]
            y.append(acc)
        return y


@dataclass(frozen=True)
class ObcFull(TransferMatrix):
    """Open-boundary transfer matrix: inner (n-1) tridiagonal Toeplitz block
    plus the absorbing sink row (0, ..., 0, sigma, 1)."""

    n: int
    delta: object
    tau: object
    sigma: object
    backend: BackendSpec = None

    @property
    def dim(self):
        return self.n

    def matvec(self, x):
        bulk = _mv_tridiag(self.delta, self.tau, self.sigma, x[:-1], self.backend.zero())
        bulk.append(self.sigma * x[-2] + x[-1])
        return bulk

    def inner(self):
        return TridiagToeplitz(self.delta, self.tau, self.sigma, self.n - 1, self.backend)


@dataclass(frozen=True)
class MarkovWalk(TransferMatrix):
    """Column-stochastic biased walk on m bulk sites with two absorbing baths."""

    m: int
    delta: object
    tau: object
    sigma: object
    backend: BackendSpec = None

    @property
    def dim(self):
        return self.m + 2

    def matvec(self, x):
        m = self.m
        y = [x[0] + self.tau * x[1]]
        bulk = _mv_tridiag(self.delta, self.tau, self.sigma, x[1 : m + 1], self.backend.zero())
        y.extend(bulk)
        y.append(self.sigma * x[m] + x[m + 1])
        return y


@dataclass(frozen=True)
class PbcBlockCirculant(TransferMatrix):
    """Periodic-boundary transfer matrix of n x n blocks (each (n-1) x (n-1))
    C on the diagonal, U above, D below (cyclically), plus the absorption
    row b and the fixed-point last coordinate."""

    n: int
    q: int
    delta: object
    tau: object
    sigma: object
    backend: BackendSpec = None

    @property
    def dim(self):
        return self.n * (self.n - 1) + 1

    def _coeffs(self):
        d, t, s = self.delta, self.tau, self.sigma
        return {
            "c_diag": 4 * t * s,
            "c_corner": 3 * t * s,
            "c_super": d * t,
            "c_sub": d * s,
            "u_diag": t * s,
            "u_sub": d * s,
            "u_subsub": s * s,
            "d_diag": t * s,
            "d_super": d * t,
            "d_supsup": t * t,
        }

    def _block_C(self, x, y, off):
        w = self.n - 1
        co = self._coeffs()
        for k in range(w):
            diag = co["c_corner"] if k in (0, w - 1) else co["c_diag"]
            acc = diag * x[k]
            if k > 0:
                acc += co["c_sub"] * x[k - 1]
            if k < w - 1:
                acc += co["c_super"] * x[k + 1]
            y[off + k] += acc

    def _block_U(self, x, y, off):
        w = self.n - 1
        co = self._coeffs()
        for k in range(w):
            acc = co["u_diag"] * x[k]
            if k > 0:
                acc += co["u_sub"] * x[k - 1]
            if k > 1:
                acc += co["u_subsub"] * x[k - 2]
            y[off + k] += acc

    def _block_D(self, x, y, off):
        w = self.n - 1
        co = self._coeffs()
        for k in range(w):
            acc = co["d_diag"] * x[k]
            if k < w - 1:
                acc += co["d_super"] * x[k + 1]
            if k < w - 2:
                acc += co["d_supsup"] * x[k + 2]
            y[off + k] += acc

    def bulk_matvec(self, x):
        """Apply the block-circulant bulk T (dimension n(n-1))."""
        n, w = self.n, self.n - 1
        zero = x[0] - x[0]
        y = [zero] * (n * w)
        blocks = [x[i * w : (i + 1) * w] for i in range(n)]
        for i in range(n):
            off = i * w
            self._block_D(blocks[(i - 1) % n], y, off)
            self._block_C(blocks[i], y, off)
            self._block_U(blocks[(i + 1) % n], y, off)
        return y

    def absorption_row(self):
        """Nonzero entries of the final absorption row b over the bulk, as a
        dict {flat 0-based index: value}."""
        w = self.n - 1
        s, d = self.sigma, self.delta
        qq = self.q * self.q
        b = {}
        for i in range(1, self.n + 1):
            b[w * i - 1 - 1] = b.get(w * i - 2, self.backend.zero()) + s * s
            b[w * i - 1] = b.get(w * i - 1, self.backend.zero()) + d * s + qq * s
        return b

    def matvec(self, x):
        y = self.bulk_matvec(x[:-1])
        acc = x[-1]
        for idx, val in self.absorption_row().items():
            acc += val * x[idx]
        y.append(acc)
        return y


@dataclass(frozen=True)
class Rescaled(TransferMatrix):
    """Similarity rescale D^{-1} T D with D = diag(mu^k); same spectrum,
    different pseudospectrum.  Only tridiagonal-type bases are supported."""

    base: TransferMatrix
    mu: object

    @property
    def dim(self):
        return self.base.dim

    @property
    def backend(self):
        return self.base.backend

    def equivalent(self):
        """The rescaled matrix is again of the base's structured type."""
        b = self.base
        if isinstance(b, TridiagToeplitz):
            return TridiagToeplitz(b.delta, b.tau * self.mu, b.sigma / self.mu, b.dim, b.backend)
        if isinstance(b, TwoDiagonal):
            return TwoDiagonal(b.delta, b.sigma / self.mu, b.dim, b.backend)
        raise DomainError("rescale supports TridiagToeplitz and TwoDiagonal only")

    def matvec(self, x):
        return self.equivalent().matvec(x)


@dataclass(frozen=True)
class DenseMatrix(TransferMatrix):
    """Custom dense matrix (tests and small experiments only)."""

    rows: tuple
    backend: BackendSpec = None

    @property
    def dim(self):
        return len(self.rows)

    def matvec(self, x):
        return [sum(r[j] * x[j] for j in range(self.dim)) for r in self.rows]

    def to_dense(self):
        return [list(r) for r in self.rows]


# ---------------------------------------------------------------------------
# builders


def _converted_rates(params, backend):
    delta, tau, sigma = params.resolved_rates()
    return backend.convert(delta), backend.convert(tau), backend.convert(sigma)


def build_obc(params, backend=None):
    backend = backend or BackendSpec()
    if params.n < 2:
        raise DomainError("OBC model needs n >= 2")
    d, t, s = _converted_rates(params, backend)
    return ObcFull(params.n, d, t, s, backend)


def build_pbc(params, backend=None):
    backend = backend or BackendSpec()
    if params.n < 3:
        raise DomainError("PBC model needs n >= 3")
    if params.q is None:
        raise DomainError("PBC absorption row requires q")
    d, t, s = _converted_rates(params, backend)
    return PbcBlockCirculant(params.n, params.q, d, t, s, backend)


def build_markov_walk(m, delta, tau, sigma, backend=None):
    backend = backend or BackendSpec()
    if m < 1:
        raise DomainError("walk needs at least one bulk site")
    if Fraction(delta) + Fraction(tau) + Fraction(sigma) != 1:
        raise DomainError("walk rates must sum to 1 exactly")
    return MarkovWalk(m, backend.convert(delta), backend.convert(tau), backend.convert(sigma), backend)


def build_jordan(dim, delta, sigma, backend=None):
    backend = backend or BackendSpec()
    if dim < 1:
        raise DomainError("dimension must be >= 1")
    return TwoDiagonal(backend.convert(delta), backend.convert(sigma), dim, backend)


def rescale(matrix, mu):
    if not isinstance(matrix, (TridiagToeplitz, TwoDiagonal)):
        raise DomainError("rescale supports TridiagToeplitz and TwoDiagonal only")
    mu = matrix.backend.convert(mu)
    if mu <= 0:
        raise DomainError("mu must be positive")
    return Rescaled(matrix, mu)


# ---------------------------------------------------------------------------
# vector pairs


@dataclass(frozen=True)
class VectorPair:
    """The row vector <p| and column vector |v> with provenance metadata."""

    p: tuple
    v: tuple
    provenance: str = CUSTOM
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.p) != len(self.v):
            raise DomainError("p and v must have equal dimension")

    @property
    def dim(self):
        return len(self.p)

    def overlap(self):
        return sum(a * b for a, b in zip(self.p, self.v))


def otoc_vectors_obc(n, q, j, backend=None):
    """Physical OTOC vectors for the OBC chain: v = (q^4/(q^4-1), 0, ...),
    p_k = 1 for k >= ceil(j/2) (qudit index j in 1..2n)."""
    backend = backend or BackendSpec()
    if not 1 <= j <= 2 * n:
        raise DomainError("qudit index j out of range")
    one, zero = backend.one(), backend.zero()
    v = [zero] * n
    v[0] = backend.convert(Fraction(q ** 4, q ** 4 - 1))
    thr = -(-j // 2)  # ceil(j/2); the half-step rounding is a convention, see docs
    p = [one if k >= thr else zero for k in range(1, n + 1)]
    return VectorPair(tuple(p), tuple(v), "OtocObc", {"n": n, "q": q, "j": j})


def otoc_vectors_pbc(n, q, j, backend=None, zero_last=False):
    """Physical OTOC vectors for the PBC chain (initial operator on spin n).

    The iterated column vector is the membership staircase of qudit j over
    all (start, width) domains plus the full-cover component; the row vector
    holds the three-component half-step seed of the initial operator.  Only
    this pairing cancels the unit pseudospectral transient and exposes the
    phantom rate; the reversed pairing decays at the pseudospectral rate 1
    like any generic vector choice.

    ``zero_last`` removes the full-cover component of the staircase.  Paired
    with the physical row this leaves the phantom intact (the full-cover
    weight only shifts the asymptote); it matters when the staircase itself
    is used as the observation row over a generic iterated vector, where the
    zeroed variant exhibits the clean pseudospectral transient.
    """
    backend = backend or BackendSpec()
    if n < 3:
        raise DomainError("PBC vectors need n >= 3")
    if not 1 <= j <= n:
        raise DomainError("site index j out of range")
    w = n - 1
    dim = n * w + 1
    one, zero = backend.one(), backend.zero()
    p = [zero] * dim
    p[0] = backend.convert(q * q)
    p[w * w] = backend.convert(q * q)  # component (n-1)^2 + 1, 1-based
    p[w * w - 1] = backend.convert(q ** 4)  # component (n-1)^2
    v = [zero] * dim
    for i in range(1, n + 1):
        # a domain starting at spin i with width k covers spin j iff
        # k >= ((j - i) mod n) + 1; widths stop at n-1, the width-n domain
        # is the separate last component
        start = (j - i) % n + 1
        for k in range(start, w + 1):
            v[w * (i - 1) + k - 1] = one
    v[dim - 1] = zero if zero_last else one
    return VectorPair(
        tuple(p), tuple(v), "OtocPbc", {"n": n, "q": q, "j": j, "zero_last": zero_last}
    )


def exp_localized_pair(dim, mu, backend=None):
    """p_k = mu^{1-k} (so p_1 = 1 and the convolution profile is mu^{-r}),
    v = e_1."""
    backend = backend or BackendSpec()
    mu_c = backend.convert(mu)
    if mu_c <= 0:
        raise DomainError("mu must be positive")
    one, zero = backend.one(), backend.zero()
    with backend.context():
        p = [one]
        for _ in range(dim - 1):
            p.append(p[-1] / mu_c)
    v = [zero] * dim
    v[0] = one
    return VectorPair(tuple(p), tuple(v), "ExpLocalized", {"mu": mu})


def random_stochastic_vector(dim, seed, backend=None):
    """Random nonnegative vector with sum exactly 1, derived from a Philox
    counter-based stream so results are reproducible bit-for-bit."""
    backend = backend or BackendSpec()
    rng = np.random.Generator(np.random.Philox(seed))
    raw = [Fraction(int(x), 2 ** 53) + Fraction(1, 2 ** 60) for x in
           rng.integers(0, 2 ** 53, size=dim)]
    total = sum(raw)
    return [backend.convert(x / total) for x in raw]


# ---------------------------------------------------------------------------
# stationary left vector and the iteration


def _thomas_solve(sub, diag, sup, rhs):
    """Tridiagonal solve; sub[i] multiplies x[i-1] in row i."""
    n = len(rhs)
    d = list(diag)
    r = list(rhs)
    for i in range(1, n):
        if d[i - 1] == 0:
            raise NumericalError("zero pivot in tridiagonal solve")
        m = sub[i] / d[i - 1]
        d[i] = d[i] - m * sup[i - 1]
        r[i] = r[i] - m * r[i - 1]
    if d[n - 1] == 0:
        raise NumericalError("singular tridiagonal system")
    x = [None] * n
    x[n - 1] = r[n - 1] / d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (r[i] - sup[i] * x[i + 1]) / d[i]
    return x


def _dense_solve(rows, rhs):
    """Dense LU solve with partial pivoting over any exact/inexact field."""
    n = len(rhs)
    a = [list(r) for r in rows]
    b = list(rhs)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            raise NumericalError("singular dense system")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f == 0:
                continue
            for c in range(col, n):
                a[r][c] -= f * a[col][c]
            b[r] -= f * b[col]
    x = [None] * n
    for i in range(n - 1, -1, -1):
        s = b[i]
        for c in range(i + 1, n):
            s -= a[i][c] * x[c]
        x[i] = s / a[i][i]
    return x


def _pbc_fourier_apply(vec_blocks, n, prec, inverse=False):
    """Apply the block DFT (or its inverse) across the n blocks."""
    with gmpy2.context(precision=prec):
        pi2 = 2 * gmpy2.const_pi()
        w = len(vec_blocks[0])
        sqrt_n = gmpy2.sqrt(gmpy2.mpfr(n))
        sign = -1 if inverse else 1
        out = []
        for l in range(1, n + 1):
            acc = [gmpy2.mpc(0)] * w
            for jb in range(1, n + 1):
                ph = gmpy2.exp(gmpy2.mpc(0, sign) * pi2 * l * jb / n)
                blk = vec_blocks[jb - 1]
                for mdx in range(w):
                    acc[mdx] += ph * blk[mdx]
            out.append([a / sqrt_n for a in acc])
        return out


def _pbc_left_bulk(A):
    """Solve x (I - T) = b for the PBC bulk via the block Fourier transform."""
    n, w = A.n, A.n - 1
    prec = A.backend.prec if A.backend.kind == FLOAT else 256
    from .spectral import pbc_fourier_block_mp  # local import avoids a cycle

    with gmpy2.context(precision=prec):
        # the absorption-row products must also be formed at full precision
        b = [A.backend.zero()] * (n * w)
        for idx, val in A.absorption_row().items():
            b[idx] += val
        b_blocks = [[gmpy2.mpc(x) for x in b[i * w : (i + 1) * w]] for i in range(n)]
        u = _pbc_fourier_apply(b_blocks, n, prec)
        solved = []
        for k in range(1, n + 1):
            tk = pbc_fourier_block_mp(n, A.q, k, prec)
            # (I - T_k)^T  s = u_k
            rows = [
                [(1 if r == c else 0) - tk[c][r] for c in range(w)] for r in range(w)
            ]
            solved.append(_dense_solve(rows, u[k - 1]))
        x = _pbc_fourier_apply(solved, n, prec, inverse=True)
        flat = [c for blk in x for c in blk]
        worst = max(abs(c.imag) for c in flat)
        if worst > gmpy2.mpfr(2) ** (40 - prec):
            raise NumericalError(f"left vector has imaginary residue {worst}")
        return [gmpy2.mpfr(c.real) for c in flat]


def stationary_left_vector(A):
    """Row vector l with l A = l, normalized so the last component is 1.

    For the Markov walk the left bath is also fixed; there the returned
    vector has l_first = 0, making l_k the right-bath absorption probability.
    """
    be = A.backend
    if isinstance(A, ObcFull):
        with be.context():
            nb = A.n - 1
            sub = [be.zero()] + [A.tau] * (nb - 1)  # (T^T)_{i,i-1} = tau
            diag = [A.delta - be.one()] * nb
            sup = [A.sigma] * (nb - 1) + [be.zero()]
            rhs = [be.zero()] * nb
            rhs[nb - 1] = -A.sigma
            x = _thomas_solve(sub, diag, sup, rhs)
            return x + [be.one()]
    if isinstance(A, MarkovWalk):
        with be.context():
            m = A.m
            sub = [be.zero()] + [A.tau] * (m - 1)
            diag = [A.delta - be.one()] * m
            sup = [A.sigma] * (m - 1) + [be.zero()]
            rhs = [be.zero()] * m
            rhs[m - 1] = -A.sigma
            x = _thomas_solve(sub, diag, sup, rhs)
            return [be.zero()] + x + [be.one()]
    if isinstance(A, PbcBlockCirculant):
        if be.kind == RATIONAL:
            nw = A.n * (A.n - 1)
            dense = A.to_dense()
            rows = [
                [(dense[i][j] - (1 if i == j else 0)) for i in range(nw)]
                for j in range(nw)
            ]  # (T - I)^T restricted to bulk
            rhs = [-dense[nw][j] for j in range(nw)]
            return _dense_solve(rows, rhs) + [be.one()]
        return _pbc_left_bulk(A) + [be.one()]
    raise DomainError("stationary left vector defined for OBC, PBC and MarkovWalk")


@dataclass(frozen=True)
class DecaySeries:
    """t -> O(t) samples (deflated or raw), the asymptote, and backend metadata."""

    values: tuple  # ((t, O_t), ...)
    o_infinity: object
    deflated: bool
    backend: BackendSpec

    def as_list(self):
        return [val for _, val in self.values]


def iterate_series(A, pair, t_max, deflate=True):
    """O(t) = <p|A^t|v> for t = 0..t_max by repeated structured matvec.

    With ``deflate`` the eigenvalue-1 component is removed from |v> first, so
    the stored values are O(t) - O(infinity) with no catastrophic subtraction.
    Matrices without a unit eigenvalue (pure tridiagonal / Jordan blocks)
    have O(infinity) = 0 and deflation is a no-op.
    """
    if pair.dim != A.dim:
        raise DomainError(f"vector dim {pair.dim} != matrix dim {A.dim}")
    if t_max < 0:
        raise DomainError("t_max must be nonnegative")
    be = A.backend
    has_sink = isinstance(A, (ObcFull, MarkovWalk, PbcBlockCirculant))
    if has_sink:
        left = stationary_left_vector(A)
    with be.context():
        if has_sink:
            coeff = sum(a * b for a, b in zip(left, pair.v))
            o_inf = pair.p[-1] * coeff
        else:
            coeff = be.zero()
            o_inf = be.zero()
        x = list(pair.v)
        if deflate and has_sink:
            x[-1] = x[-1] - coeff
        values = []
        for t in range(t_max + 1):
            ot = sum(a * b for a, b in zip(pair.p, x))
            values.append((t, ot))
            if t < t_max:
                x = A.matvec(x)
    return DecaySeries(tuple(values), o_inf, bool(deflate), be)


def simulate_walk(m, delta, tau, sigma, t_max, trials, seed, chunk=100_000):
    """Monte Carlo left-bath occupation probability r_1(t) for t = 0..t_max.

    Trials are processed in fixed-size chunks, each drawing from its own
    Philox counter stream derived from (seed, chunk index), so the result is
    bit-reproducible and independent of any parallel schedule.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if Fraction(delta) + Fraction(tau) + Fraction(sigma) != 1:
        raise DomainError("walk rates must sum to 1 exactly")
    tau_f, delta_f = float(tau), float(delta)
    left_counts = np.zeros(t_max + 1, dtype=np.int64)
    done = 0
    chunk_idx = 0
    while done < trials:
        size = min(chunk, trials - done)
        rng = np.random.Generator(np.random.Philox(key=seed, counter=[chunk_idx, 0, 0, 0]))
        pos = np.ones(size, dtype=np.int64)  # leftmost bulk site
        absorbed_left = np.zeros(size, dtype=bool)
        absorbed_right = np.zeros(size, dtype=bool)
        for t in range(1, t_max + 1):
            u = rng.random(size)
            active = ~(absorbed_left | absorbed_right)
            go_left = active & (u < tau_f)
            go_right = active & (u >= tau_f + delta_f)
            pos[go_left] -= 1
            pos[go_right] += 1
            absorbed_left |= pos == 0
            absorbed_right |= pos == m + 1
            left_counts[t] += int(np.count_nonzero(absorbed_left))
        done += size
        chunk_idx += 1
    return left_counts / trials
