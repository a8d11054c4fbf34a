"""Analytic eigensystems, epsilon-pseudospectra and pseudospectral curves.

Closed-form spectra exist for every matrix in scope: the tridiagonal
Toeplitz bulk (open boundary) and the block-circulant bulk (periodic
boundary, diagonalized by a block Fourier transform).  Dense eigensolvers
appear only as small-size oracles in the tests.

Eigensystem construction runs at mpfr precision (default 256 bits) because
the eigenvector envelope (sigma/tau)^{j/2} overflows doubles for n beyond
~50.  Pseudospectrum grids run in double precision; their tolerances
(1e-8 relative on sigma_min) are comfortably representable there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import gmpy2
import numpy as np
import scipy.linalg

from .numerics import (
    ConvergenceError,
    DEFAULT_PREC,
    DefectiveMatrixError,
    DomainError,
    NumericalError,
    rates_from_q,
)
from .transfer import (
    ObcFull,
    PbcBlockCirculant,
    TridiagToeplitz,
    TwoDiagonal,
    stationary_left_vector,
)

ANALYTIC_OBC = "AnalyticObc"
ANALYTIC_PBC = "AnalyticPbc"
EXTENDED = "Extended"


@dataclass
class EigenSystem:
    eigenvalues: list
    right: list | None
    left: list | None
    source: str
    prec: int = DEFAULT_PREC


def obc_eigensystem(n, delta, tau, sigma, prec=DEFAULT_PREC):
    """All n-1 eigenpairs of the open-boundary tridiagonal Toeplitz bulk.

    lambda_k = delta + 2 sqrt(sigma tau) cos(k pi / n),
    [r_k]_j = (sigma/tau)^{j/2} sin(k j pi / n),
    [l_k]_j = (2/n) (tau/sigma)^{j/2} sin(k j pi / n).
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    if tau == 0 or sigma == 0:
        raise DefectiveMatrixError(
            "sigma*tau = 0: the matrix is defective, use the Jordan-block path"
        )
    with gmpy2.context(precision=prec):
        d = gmpy2.mpfr(delta)
        t = gmpy2.mpfr(tau)
        s = gmpy2.mpfr(sigma)
        pi = gmpy2.const_pi()
        root = gmpy2.sqrt(s * t)
        ratio = gmpy2.sqrt(s / t)  # (sigma/tau)^{1/2}
        eigenvalues, right, left = [], [], []
        for k in range(1, n):
            eigenvalues.append(d + 2 * root * gmpy2.cos(k * pi / n))
            rk, lk = [], []
            env = gmpy2.mpfr(1)
            for j in range(1, n):
                env = env * ratio if j > 1 else ratio
                sval = gmpy2.sin(k * j * pi / n)
                rk.append(env * sval)
                lk.append(2 * sval / (env * n))
            right.append(rk)
            left.append(lk)
        return EigenSystem(eigenvalues, right, left, ANALYTIC_OBC, prec)


def extend_to_A(eig, A):
    """Extend bulk eigenvectors to the full transfer matrix with its sink.

    For each bulk pair (lambda, r) the extra component of the right vector
    is (last-row coupling . r) / (lambda - 1); left vectors gain a zero.
    The exact fixed-point pair (e_last, stationary left vector) is appended.
    """
    prec = eig.prec
    with gmpy2.context(precision=prec):
        if isinstance(A, ObcFull):
            couple = lambda r: A.sigma * r[-1]
        elif isinstance(A, PbcBlockCirculant):
            row = A.absorption_row()
            couple = lambda r: sum(val * r[idx] for idx, val in row.items())
        else:
            raise DomainError("extension defined for ObcFull and PbcBlockCirculant")
        eigenvalues, right, left = [], [], []
        for lam, r, l in zip(eig.eigenvalues, eig.right, eig.left):
            if lam == 1:
                raise NumericalError("eigenvalue 1 in the bulk: extension degenerate")
            eigenvalues.append(lam)
            right.append(list(r) + [couple(r) / (lam - 1)])
            left.append(list(l) + [gmpy2.mpfr(0)])
        zero = gmpy2.mpfr(0)
        e_last = [zero] * (A.dim - 1) + [gmpy2.mpfr(1)]
        eigenvalues.append(gmpy2.mpfr(1))
        right.append(e_last)
        left.append([gmpy2.mpfr(x) for x in stationary_left_vector(A)])
        return EigenSystem(eigenvalues, right, left, EXTENDED, prec)


def pbc_eigenvalues(n, q, prec=DEFAULT_PREC, with_vectors=True):
    """Analytic eigensystem of the periodic block-circulant bulk.

    lambda_{j,k} = delta^2 (cos(pi j / n) + cos(pi k / n))^2 for
    j in 1..n-1 (mode inside a momentum sector) and k in 1..n (momentum).
    """
    if n < 3:
        raise DomainError("n must be >= 3")
    delta, _, _ = rates_from_q(q)
    with gmpy2.context(precision=prec):
        d = gmpy2.mpfr(delta.numerator) / delta.denominator
        pi = gmpy2.const_pi()
        w = n - 1
        eigenvalues, right, left = [], [], []
        sqrt2_over_n = gmpy2.sqrt(gmpy2.mpfr(2)) / n
        for k in range(1, n + 1):
            for j in range(1, n):
                c = gmpy2.cos(pi * j / n) + gmpy2.cos(pi * k / n)
                eigenvalues.append(d * d * c * c)
                if not with_vectors:
                    continue
                rv = [None] * (n * w)
                lv = [None] * (n * w)
                for l in range(1, n + 1):
                    bphase = gmpy2.exp(gmpy2.mpc(0, 2) * pi * k * l / n)
                    for m in range(1, n):
                        amp = sqrt2_over_n * gmpy2.mpfr(q) ** (2 * m)
                        ph = gmpy2.exp(gmpy2.mpc(0, 1) * pi * k * m / n)
                        sval = gmpy2.sin(j * m * pi / n)
                        idx = (l - 1) * w + (m - 1)
                        rv[idx] = amp * bphase * ph * sval
                        lv[idx] = (
                            sqrt2_over_n * gmpy2.mpfr(q) ** (-2 * m)
                            / bphase / ph * sval
                        )
                right.append(rv)
                left.append(lv)
        return EigenSystem(
            eigenvalues, right if with_vectors else None,
            left if with_vectors else None, ANALYTIC_PBC, prec,
        )


def _pbc_block_entries(n, q, k):
    """The five diagonals (as complex numbers) of the momentum-k block, and
    the sigma*tau prefactor, in double precision."""
    omega = np.exp(2j * np.pi * k / n)
    d_m2 = q ** 4 * omega
    d_m1 = 2 * q ** 2 * (1 + omega)
    d_0 = 2 * np.cos(2 * np.pi * k / n)
    # the commuting factorization forces 1/q^2 here (a1*b2 + b1*a2)
    d_1 = 2 / q ** 2 * (1 + np.conj(omega))
    d_2 = q ** -4 * np.conj(omega)
    st = q ** 4 / (1 + q * q) ** 4  # sigma * tau
    return d_m2, d_m1, d_0, d_1, d_2, st


def pbc_fourier_block(n, q, k):
    """Dense (n-1)x(n-1) momentum block T_k of the block-circulant bulk."""
    if not 1 <= k <= n:
        raise DomainError("momentum index k must be in 1..n")
    d_m2, d_m1, d_0, d_1, d_2, st = _pbc_block_entries(n, q, k)
    w = n - 1
    T = np.zeros((w, w), dtype=complex)
    for i in range(w):
        T[i, i] = (3 if i in (0, w - 1) else 4) + d_0
        if i + 1 < w:
            T[i, i + 1] = d_1
            T[i + 1, i] = d_m1
        if i + 2 < w:
            T[i, i + 2] = d_2
            T[i + 2, i] = d_m2
    return st * T


def pbc_fourier_block_mp(n, q, k, prec=DEFAULT_PREC):
    """Momentum block T_k as a list of mpc rows at the requested precision."""
    with gmpy2.context(precision=prec):
        pi = gmpy2.const_pi()
        omega = gmpy2.exp(gmpy2.mpc(0, 2) * pi * k / n)
        conj = gmpy2.exp(gmpy2.mpc(0, -2) * pi * k / n)
        d_m2 = q ** 4 * omega
        d_m1 = 2 * q * q * (1 + omega)
        d_0 = 2 * gmpy2.cos(2 * pi * k / n)
        d_1 = gmpy2.mpfr(2) / (q * q) * (1 + conj)
        d_2 = conj / q ** 4
        st = gmpy2.mpfr(q ** 4) / (1 + q * q) ** 4
        w = n - 1
        rows = [[gmpy2.mpc(0)] * w for _ in range(w)]
        for i in range(w):
            rows[i][i] = st * ((3 if i in (0, w - 1) else 4) + d_0)
            if i + 1 < w:
                rows[i][i + 1] = st * d_1
                rows[i + 1][i] = st * d_m1
            if i + 2 < w:
                rows[i][i + 2] = st * d_2
                rows[i + 2][i] = st * d_m2
        return rows


def pbc_commuting_factors(n, q, k):
    """The tridiagonal Toeplitz factors of T_k = sigma*tau * A_k B_k."""
    omega = np.exp(2j * np.pi * k / n)
    w = n - 1
    a1, b1, c1 = q ** 2 * (1 + omega), 1.0, q ** 4 * omega
    a2, b2, c2 = q ** -2 * (1 + np.conj(omega)), q ** -4 * np.conj(omega), 1.0
    def tri(a, b, c):
        m = np.zeros((w, w), dtype=complex)
        np.fill_diagonal(m, a)
        for i in range(w - 1):
            m[i, i + 1] = b
            m[i + 1, i] = c
        return m
    return tri(a1, b1, c1), tri(a2, b2, c2)


# ---------------------------------------------------------------------------
# pseudospectra


def dense_of(A):
    """Double-precision dense matrix of a structured operator (oracle use)."""
    if isinstance(A, np.ndarray):
        return A
    rows = A.to_dense()
    return np.array([[float(x) for x in r] for r in rows], dtype=float)


def sigma_min(mat, z, tol=1e-8, maxiter=2000, seed=7):
    """Smallest singular value of (z I - mat) by inverse power iteration on
    (zI-A)^H (zI-A), using one LU factorization of (zI-A).

    Returns a (0-clamped) float.  Raises ConvergenceError with the best
    estimate attached if the relative tolerance is not met in ``maxiter``
    iterations.
    """
    mat = np.asarray(mat)
    n = mat.shape[0]
    B = z * np.eye(n, dtype=complex) - mat
    with np.errstate(all="ignore"), warnings.catch_warnings():
        # an exactly singular factor just means z is an eigenvalue
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
    diag = np.abs(np.diag(lu))
    if not np.all(np.isfinite(lu)) or np.min(diag) == 0.0:
        return 0.0
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    prev = None
    with np.errstate(all="ignore"):
        for _ in range(maxiter):
            y = scipy.linalg.lu_solve((lu, piv), x, trans=2, check_finite=False)
            m_x = scipy.linalg.lu_solve((lu, piv), y, trans=0, check_finite=False)
            if not np.all(np.isfinite(m_x)):
                return 0.0
            nu = float(np.real(np.vdot(x, m_x)))
            if nu <= 0:
                return 0.0
            est = 1.0 / np.sqrt(nu)
            nrm = np.linalg.norm(m_x)
            if nrm == 0 or not np.isfinite(nrm):
                return 0.0
            x = m_x / nrm
            if prev is not None and abs(est - prev) <= tol * est:
                return max(est, 0.0)
            prev = est
    raise ConvergenceError(
        f"sigma_min iteration did not reach tol={tol}", best_estimate=prev
    )


def _grid_operator_blocks(A):
    """Matrices whose per-z sigma_min minimum gives the field value."""
    if isinstance(A, np.ndarray):
        return [A]
    if isinstance(A, ObcFull):
        A = A.inner()
    if isinstance(A, (TridiagToeplitz, TwoDiagonal)):
        return [dense_of(A)]
    if isinstance(A, PbcBlockCirculant):
        # unitary block-Fourier invariance: sigma_min over T equals the
        # minimum of sigma_min over the momentum blocks
        return [pbc_fourier_block(A.n, A.q, k) for k in range(1, A.n + 1)]
    raise DomainError(f"unsupported operator {type(A).__name__}")


@dataclass
class PseudospectrumField:
    re: np.ndarray  # 1D axis
    im: np.ndarray  # 1D axis
    sigma: np.ndarray  # 2D, sigma[i_im, j_re]
    epsilon: float
    flags: np.ndarray  # sigma <= epsilon
    errors: list = field(default_factory=list)

    def rightmost_flagged(self):
        """Largest real part among flagged grid points (None if empty)."""
        if not self.flags.any():
            return None
        cols = np.nonzero(self.flags.any(axis=0))[0]
        return float(self.re[cols.max()])


DEFAULT_REGION = (-0.2, 1.2, -0.8, 0.8)


def pseudospectrum_grid(A, epsilon, region=None, resolution=201, tol=1e-8):
    """sigma_min sampled over a rectangular complex grid.

    Non-convergence at a grid point is recorded (best estimate used), not
    fatal.
    """
    if resolution < 2:
        raise DomainError("resolution must be >= 2 per axis")
    re_lo, re_hi, im_lo, im_hi = region if region is not None else DEFAULT_REGION
    res = np.linspace(re_lo, re_hi, resolution)
    ims = np.linspace(im_lo, im_hi, resolution)
    blocks = _grid_operator_blocks(A)
    sig = np.empty((resolution, resolution))
    errors = []
    for i, yy in enumerate(ims):
        for j, xx in enumerate(res):
            z = complex(xx, yy)
            best = np.inf
            for blk in blocks:
                try:
                    val = sigma_min(blk, z, tol=tol)
                except ConvergenceError as err:
                    val = err.best_estimate if err.best_estimate is not None else np.inf
                    errors.append((z, str(err)))
                best = min(best, val)
            sig[i, j] = best
    eps = float(epsilon)
    return PseudospectrumField(res, ims, sig, eps, sig <= eps, errors)


@dataclass
class CurveSamples:
    phi: np.ndarray
    values: np.ndarray  # complex samples
    max_real: float
    momentum: np.ndarray | None = None  # k/n fractions for the PBC family


def obc_pseudo_curve(delta, tau, sigma, mu=None, samples=401):
    """Limit pseudospectral ellipse delta + e^{i phi} tau' + e^{-i phi} sigma'
    with tau' = tau*mu, sigma' = sigma/mu (mu defaults to 1).

    Also reports the real maximum delta + sigma/mu + tau*mu.
    """
    mu = 1.0 if mu is None else float(mu)
    if mu <= 0:
        raise DomainError("mu must be positive")
    d, t, s = float(delta), float(tau) * mu, float(sigma) / mu
    phi = np.linspace(0.0, 2.0 * np.pi, samples)
    values = d + t * np.exp(1j * phi) + s * np.exp(-1j * phi)
    return CurveSamples(phi, values, d + t + s)


def pbc_pseudo_conjecture(q, k_over_n, phi):
    """Conjectured thermodynamic-limit pseudospectrum boundary value for the
    periodic bulk: the product of the two commuting-factor symbol curves at
    momentum fraction k/n, restored to T's normalization by sigma*tau."""
    if not 0 <= k_over_n <= 1:
        raise DomainError("k_over_n must be in [0, 1]")
    omega = np.exp(2j * np.pi * k_over_n)
    a1, b1, c1 = q ** 2 * (1 + omega), 1.0, q ** 4 * omega
    a2, c2, b2 = q ** -2 * (1 + np.conj(omega)), 1.0, q ** -4 * np.conj(omega)
    st = q ** 4 / (1 + q * q) ** 4
    e_p, e_m = np.exp(1j * phi), np.exp(-1j * phi)
    return st * (c1 * e_p + a1 + b1 * e_m) * (c2 * e_p + a2 + b2 * e_m)


def lambda2_obc(n, delta, tau, sigma):
    """Largest non-unit eigenvalue of the OBC transfer matrix (float)."""
    return float(delta) + 2.0 * np.sqrt(float(sigma) * float(tau)) * np.cos(np.pi / n)


def lambda2_pbc(n, q):
    """Largest non-unit eigenvalue of the PBC transfer matrix (float).

    The maximum of delta^2 (cos(pi j / n) + cos(pi k / n))^2 over the mode
    and momentum indices is reached at |cos j pi/n + cos k pi/n| =
    1 + cos(pi/n), not at 2 cos(pi/n)."""
    delta, _, _ = rates_from_q(q)
    return float(delta) ** 2 * (1.0 + np.cos(np.pi / n)) ** 2
