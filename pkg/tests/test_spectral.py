"""Eigensystem and pseudospectrum tests against dense numpy/scipy oracles."""

from fractions import Fraction

import gmpy2
import numpy as np
import pytest

from phantomdecay.numerics import (
    BackendSpec,
    DefectiveMatrixError,
    DomainError,
    rates_from_q,
)
from phantomdecay.spectral import (
    dense_of,
    extend_to_A,
    lambda2_obc,
    lambda2_pbc,
    obc_eigensystem,
    obc_pseudo_curve,
    pbc_commuting_factors,
    pbc_eigenvalues,
    pbc_fourier_block,
    pbc_pseudo_conjecture,
    pseudospectrum_grid,
    sigma_min,
)
from phantomdecay.transfer import ModelParams, build_obc, build_pbc

FB = BackendSpec()
Q2 = rates_from_q(2)


class TestObcEigensystem:
    def test_eigenvalues_match_dense(self):
        n = 10
        eig = obc_eigensystem(n, *Q2)
        T = dense_of(build_obc(ModelParams(boundary="OBC", n=n, q=2), FB).inner())
        dense_ev = np.sort(np.linalg.eigvals(T).real)
        ours = np.sort([float(x) for x in eig.eigenvalues])
        assert np.max(np.abs(dense_ev - ours)) < 1e-10

    def test_eigenpair_residuals(self):
        n = 12
        d, t, s = Q2
        eig = obc_eigensystem(n, d, t, s)
        T = dense_of(build_obc(ModelParams(boundary="OBC", n=n, q=2), FB).inner())
        for lam, r in zip(eig.eigenvalues, eig.right):
            rv = np.array([float(x) for x in r])
            res = np.max(np.abs(T @ rv - float(lam) * rv)) / np.max(np.abs(rv))
            assert res < 1e-12

    def test_biorthogonality(self):
        n = 9
        eig = obc_eigensystem(n, *Q2)
        with gmpy2.context(precision=256):
            for i, l in enumerate(eig.left):
                for j, r in enumerate(eig.right):
                    dot = sum(a * b for a, b in zip(l, r))
                    target = 1 if i == j else 0
                    assert abs(dot - target) < 1e-60

    def test_defective_rejected(self):
        with pytest.raises(DefectiveMatrixError):
            obc_eigensystem(8, Fraction(1, 2), 0, Fraction(1, 2))

    def test_extend_to_full(self):
        n = 8
        A = build_obc(ModelParams(boundary="OBC", n=n, q=2), FB)
        ext = extend_to_A(obc_eigensystem(n, *Q2), A)
        assert len(ext.eigenvalues) == n
        assert float(ext.eigenvalues[-1]) == 1.0
        with gmpy2.context(precision=256):
            for lam, r in zip(ext.eigenvalues, ext.right):
                Ar = A.matvec(list(r))
                res = max(abs(a - lam * b) for a, b in zip(Ar, r))
                assert float(res / max(abs(x) for x in r)) < 1e-60


class TestPbcEigensystem:
    @pytest.mark.parametrize("n", [4, 6, 8])
    def test_eigenvalues_match_dense(self, n):
        A = build_pbc(ModelParams(boundary="PBC", n=n, q=2), FB)
        dim = n * (n - 1)
        T = dense_of(A)[:dim, :dim]
        dense_ev = np.sort_complex(np.linalg.eigvals(T))
        eig = pbc_eigenvalues(n, 2, with_vectors=False)
        ours = np.sort_complex(np.array([complex(float(x), 0.0) for x in eig.eigenvalues]))
        assert np.max(np.abs(dense_ev - ours)) < 1e-10

    def test_right_eigenvectors(self):
        n = 5
        A = build_pbc(ModelParams(boundary="PBC", n=n, q=2), FB)
        dim = n * (n - 1)
        T = dense_of(A)[:dim, :dim].astype(complex)
        eig = pbc_eigenvalues(n, 2)
        for lam, r in zip(eig.eigenvalues, eig.right):
            rv = np.array([complex(x) for x in r])
            res = np.max(np.abs(T @ rv - complex(float(lam), 0) * rv))
            assert res / np.max(np.abs(rv)) < 1e-10

    def test_fourier_blocks_cover_spectrum(self):
        n = 6
        A = build_pbc(ModelParams(boundary="PBC", n=n, q=2), FB)
        dim = n * (n - 1)
        T = dense_of(A)[:dim, :dim]
        dense_ev = np.sort_complex(np.linalg.eigvals(T))
        block_ev = np.concatenate(
            [np.linalg.eigvals(pbc_fourier_block(n, 2, k)) for k in range(1, n + 1)]
        )
        assert np.max(np.abs(np.sort_complex(block_ev) - dense_ev)) < 1e-10

    def test_commuting_factors(self):
        n, q = 7, 2
        for k in (1, 3, n):
            A1, A2 = pbc_commuting_factors(n, q, k)
            assert np.max(np.abs(A1 @ A2 - A2 @ A1)) < 1e-12
            st = q ** 4 / (1 + q * q) ** 4
            assert np.max(np.abs(st * A1 @ A2 - pbc_fourier_block(n, q, k))) < 1e-12

    def test_block_domain(self):
        with pytest.raises(DomainError):
            pbc_fourier_block(6, 2, 0)


class TestSigmaMin:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_against_svd(self, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        M = rng.standard_normal((12, 12))
        for z in (0.5 + 0.2j, -0.1 + 0.0j, 1.5 - 0.7j):
            ref = np.linalg.svd(z * np.eye(12) - M, compute_uv=False)[-1]
            assert abs(sigma_min(M, z) - ref) <= 1e-7 * max(ref, 1e-30)

    def test_exact_eigenvalue_is_zero(self):
        M = np.diag([0.3, 0.7, 0.9])
        assert sigma_min(M, 0.7) == 0.0


class TestPseudospectrumGrid:
    def test_flags_monotone_in_epsilon(self):
        A = build_obc(ModelParams(boundary="OBC", n=10, q=2), FB)
        f1 = pseudospectrum_grid(A, 1e-6, resolution=41)
        f2 = pseudospectrum_grid(A, 1e-3, resolution=41)
        assert np.array_equal(f1.sigma, f2.sigma)
        assert np.all(f2.flags[f1.flags])  # smaller eps set is contained

    def test_rightmost_flagged(self):
        A = build_obc(ModelParams(boundary="OBC", n=10, q=2), FB)
        f = pseudospectrum_grid(A, 1e-4, resolution=41)
        r = f.rightmost_flagged()
        assert r is not None and 0.0 < r < 1.2

    def test_resolution_domain(self):
        A = build_obc(ModelParams(boundary="OBC", n=6, q=2), FB)
        with pytest.raises(DomainError):
            pseudospectrum_grid(A, 1e-5, resolution=1)


class TestCurves:
    def test_obc_curve_max_real(self):
        d, t, s = Q2
        c = obc_pseudo_curve(d, t, s)
        assert abs(c.max_real - 1.0) < 1e-14  # delta + tau + sigma = 1
        assert abs(np.max(c.values.real) - 1.0) < 1e-4

    def test_obc_curve_rescaled(self):
        d, t, s = Q2
        mu = 1.35
        c = obc_pseudo_curve(d, t, s, mu)
        expected = float(d) + float(s) / mu + float(t) * mu
        assert abs(c.max_real - expected) < 1e-14

    def test_pbc_conjecture_normalization(self):
        # at momentum fraction 0 and phi = 0 the symbol product is exactly 1
        val = pbc_pseudo_conjecture(2, 0.0, 0.0)
        assert abs(val - 1.0) < 1e-14

    def test_pbc_conjecture_domain(self):
        with pytest.raises(DomainError):
            pbc_pseudo_conjecture(2, 1.5, 0.0)


class TestLambda2:
    def test_obc_matches_eigensystem(self):
        n = 14
        eig = obc_eigensystem(n, *Q2)
        assert abs(lambda2_obc(n, *Q2) - float(max(eig.eigenvalues))) < 1e-14

    @pytest.mark.parametrize("n", [5, 8, 12])
    def test_pbc_matches_bruteforce(self, n):
        eig = pbc_eigenvalues(n, 2, with_vectors=False)
        assert abs(lambda2_pbc(n, 2) - max(float(x) for x in eig.eigenvalues)) < 1e-14
