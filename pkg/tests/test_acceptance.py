"""End-to-end acceptance checks A1-A11.

Each test evaluates one criterion at its stated tolerance, prints a single
PASS/FAIL line (visible with ``pytest -s`` or on failure), and then asserts.
Criteria that the implementation genuinely cannot meet are asserted at face
value and left failing; the analysis lives with the project notes, not here.
"""

import math
import time
from fractions import Fraction

import gmpy2
import numpy as np
import pytest

from phantomdecay import (
    BackendSpec,
    ModelParams,
    RATIONAL,
    VectorPair,
    build_markov_walk,
    build_obc,
    build_pbc,
    compare_report,
    effective_rate,
    extend_to_A,
    iterate_series,
    obc_eigensystem,
    otoc_vectors_obc,
    otoc_vectors_pbc,
    pbc_eigenvalues,
    plateau_rate,
    pseudospectrum_grid,
    rates_from_q,
    sigma_min,
    simulate_walk,
    transition_time,
)
from phantomdecay.closedform import (
    leading_term_checks,
    otoc_closed_q2,
    r1_catalan,
)
from phantomdecay.report import figure_7
from phantomdecay.spectral import dense_of, pbc_fourier_block
from phantomdecay.transfer import build_jordan

FB = BackendSpec()
RB = BackendSpec(RATIONAL)
Q2 = rates_from_q(2)


def report(name, ok, detail):
    print(f"{name}: {'PASS' if ok else 'FAIL'} — {detail}")
    return ok


def geometric_mean(values):
    return math.exp(sum(math.log(v) for v in values) / len(values))


def test_A1_obc_otoc_plateau():
    t0 = time.time()
    n = 40
    A = build_obc(ModelParams(boundary="OBC", n=n, q=2, j=1), FB)
    series = iterate_series(A, otoc_vectors_obc(n, 2, 1, FB), 42)
    profile = effective_rate(series)
    plat = float(plateau_rate(profile, 10, t_max=42))  # search over t in [10, 32]
    elapsed = time.time() - t0
    ok = abs(plat - 0.64) <= 0.01 and elapsed < 1.0
    assert report("A1", ok, f"plateau={plat:.4f} target 0.64±0.01, {elapsed:.2f}s")


def test_A2_closed_form_equivalence():
    t0 = time.time()
    n = 80
    A = build_obc(ModelParams(boundary="OBC", n=n, q=2, j=1), FB)
    series = iterate_series(A, otoc_vectors_obc(n, 2, 1, FB), 60)
    worst = 0.0
    with FB.context():
        for t, val in series.values:
            closed = otoc_closed_q2(t)
            rel = abs((val + series.o_infinity) - closed) / abs(closed)
            worst = max(worst, float(rel))
    d, ta, s = Q2
    W = build_markov_walk(45, d, ta, s, RB)
    x = [Fraction(0)] * W.dim
    x[1] = Fraction(1)
    exact_ok = True
    for t in range(41):
        if x[0] != r1_catalan(t, d, ta, s):
            exact_ok = False
        x = W.matvec(x)
    elapsed = time.time() - t0
    ok = worst <= 1e-20 and exact_ok and elapsed < 10.0
    assert report("A2", ok,
                  f"worst rel={worst:.2e} (tol 1e-20), catalan exact={exact_ok}, "
                  f"{elapsed:.1f}s")


def test_A3_jordan_arbitrary_rate():
    delta, sigma, n = Fraction(3, 10), Fraction(1, 2), 30
    ok = True
    for mu in (Fraction(1), Fraction(5, 4), Fraction(2)):
        A = build_jordan(n, delta, sigma, RB)
        p = tuple(mu ** (1 - k) for k in range(1, n + 1))
        v = tuple([Fraction(1)] + [Fraction(0)] * (n - 1))
        series = iterate_series(A, VectorPair(p, v), n - 1)
        lam = delta + sigma / mu
        ok = ok and all(val == lam ** t for t, val in series.values)
    assert report("A3", ok, f"O(t) = (delta + sigma/mu)^t exact for t < {n}")


def test_A4_rescaled_obc_phantom():
    t0 = time.time()
    params = ModelParams(boundary="OBC", n=40, q=2, mu=Fraction(27, 20))
    rep = compare_report(params, "exp")
    elapsed = time.time() - t0
    target = float(Q2[0]) + float(Q2[2]) / 1.35 + float(Q2[1]) * 1.35
    ok = (abs(rep["lambda_ph"] - target) <= 0.005
          and rep["lambda_2"] < rep["lambda_ph"] < 1.0
          and elapsed < 1.0)
    assert report("A4", ok,
                  f"plateau={rep['lambda_ph']:.5f} target {target:.5f}±0.005, "
                  f"lambda_2={rep['lambda_2']:.4f}, {elapsed:.2f}s")


def test_A5_pbc_phantom_ordering():
    t0 = time.time()
    details = []
    ok = True
    tcs = []
    for n in (16, 24, 32, 40, 48):
        A = build_pbc(ModelParams(boundary="PBC", n=n, q=2, j=1), FB)
        series = iterate_series(A, otoc_vectors_pbc(n, 2, 1, FB), 4 * n)
        profile = effective_rate(series)
        tc = transition_time(profile, 0.55)
        tcs.append((n, tc))
        if n in (24, 40):
            plat = float(plateau_rate(profile, 10, t_max=n + 10))
            tail = [float(lam) for _, lam in profile.rates[-10:]]
            late = geometric_mean(tail)
            plat_ok = abs(plat - 0.64) <= 0.01
            late_ok = abs(late - 0.4096) <= 0.02
            ok = ok and plat_ok and late_ok
            details.append(f"n={n}: plateau={plat:.4f} late={late:.4f}")
    ns = np.array([x for x, _ in tcs], dtype=float)
    ts = np.array([float(y) for _, y in tcs])
    corr = float(np.corrcoef(ns, ts)[0, 1])
    mono = all(a < b for a, b in zip(ts, ts[1:]))
    elapsed = time.time() - t0
    ok = ok and mono and corr >= 0.99 and elapsed < 60.0
    assert report("A5", ok,
                  "; ".join(details) + f"; t_c corr={corr:.5f}, {elapsed:.1f}s")


def test_A6_generic_vector_pseudospectral_decay():
    plats = {}
    for boundary in ("OBC", "PBC"):
        params = ModelParams(boundary=boundary, n=40, q=2)
        rep = compare_report(params, "random", seed=12345)
        plats[boundary] = rep["lambda_ph"]
    ok = all(p >= 0.98 for p in plats.values())
    assert report(
        "A6", ok,
        f"OBC plateau={plats['OBC']:.4f}, PBC plateau={plats['PBC']:.4f} "
        f"(required >= 0.98)")


def test_A7_analytic_spectra():
    worst_obc = 0.0
    for n in (10, 30, 60):
        A = build_obc(ModelParams(boundary="OBC", n=n, q=2), FB)
        ext = extend_to_A(obc_eigensystem(n, *Q2), A)
        with gmpy2.context(precision=256):
            for lam, r in zip(ext.eigenvalues, ext.right):
                Ar = A.matvec(list(r))
                num = max(abs(a - lam * b) for a, b in zip(Ar, r))
                den = max(abs(b) for b in r)
                worst_obc = max(worst_obc, float(num / den))
    worst_pbc = 0.0
    for n in (6, 10, 12):
        A = build_pbc(ModelParams(boundary="PBC", n=n, q=2), FB)
        dim = n * (n - 1)
        dense_ev = np.sort_complex(np.linalg.eigvals(dense_of(A)[:dim, :dim]))
        eig = pbc_eigenvalues(n, 2, with_vectors=False)
        ours = np.sort_complex(
            np.array([complex(float(x), 0.0) for x in eig.eigenvalues]))
        worst_pbc = max(worst_pbc, float(np.max(np.abs(dense_ev - ours))))
    ok = worst_obc < 1e-12 and worst_pbc < 1e-10
    assert report("A7", ok,
                  f"OBC residual={worst_obc:.2e} (<1e-12), "
                  f"PBC eig dev={worst_pbc:.2e} (<1e-10)")


def test_A8_pseudospectrum_fields():
    t0 = time.time()
    d, ta, s = (float(x) for x in Q2)
    rightmost = {}
    contained = True
    for n in (10, 20, 30):
        A = build_obc(ModelParams(boundary="OBC", n=n, q=2), FB)
        fld = pseudospectrum_grid(A, 1e-5, resolution=201)
        rightmost[n] = fld.rightmost_flagged()
        if n == 30:
            a = ta + s + 0.05
            b = abs(s - ta) + 0.05
            for i, yy in enumerate(fld.im):
                for j, xx in enumerate(fld.re):
                    if fld.flags[i, j] and \
                            ((xx - d) / a) ** 2 + (yy / b) ** 2 > 1.0:
                        contained = False
    increasing = rightmost[10] < rightmost[20] < rightmost[30]
    A = build_pbc(ModelParams(boundary="PBC", n=10, q=2), FB)
    dense = dense_of(A)[:90, :90]
    worst = 0.0
    for z in (0.5 + 0.1j, 0.2 - 0.3j, 1.0 + 0.0j, 0.05 + 0.05j):
        blk = min(sigma_min(pbc_fourier_block(10, 2, k), z) for k in range(1, 11))
        worst = max(worst, abs(blk - sigma_min(dense, z)))
    elapsed = time.time() - t0
    ok = contained and increasing and worst < 1e-8 and elapsed < 300.0
    assert report("A8", ok,
                  f"contained={contained}, rightmost={rightmost}, "
                  f"block dev={worst:.2e} (<1e-8), {elapsed:.0f}s")


def test_A9_leading_term_probes():
    n = 16
    d, ta, s = Q2
    lead_dev = max(abs(float(leading_term_checks(n, d, ta, s, t)[0] - 1))
                   for t in range(n))
    interior_dev = max(abs(float(leading_term_checks(n, d, ta, s, k)[1]))
                       for k in range(n))
    at_n2 = abs(float(leading_term_checks(n, d, ta, s, n + 2)[1]))
    ok = lead_dev < 1e-10 and interior_dev < 1e-10 and at_n2 > 1e-10
    assert report("A9", ok,
                  f"max|leading-1|={lead_dev:.2e} (t<n), "
                  f"max|interior|={interior_dev:.2e} (k<n), "
                  f"interior(n+2)={at_n2:.2e} (tol 1e-10)")


def test_A10_hermitian_finite_size():
    datasets = figure_7(sizes=(10, 20, 30, 40))
    o0 = datasets[1].rows
    decreasing = all(a[1] > b[1] for a, b in zip(o0, o0[1:]))
    ns = np.array([r[0] for r in o0], dtype=float)
    logs = np.log([r[1] for r in o0])
    slope = float(np.polyfit(ns, logs, 1)[0])
    corr = float(np.corrcoef(ns, logs)[0, 1])
    vals = [r[4] for r in datasets[0].rows]  # n = 40 column
    rates = [(t, vals[t + 1] / vals[t]) for t in range(len(vals) - 1)]
    from phantomdecay.analysis import RateProfile
    plat = float(plateau_rate(RateProfile(rates=rates), 10, t_max=50))
    ok = decreasing and slope < 0 and corr < -0.999 and plat >= 0.72 + 0.05
    assert report("A10", ok,
                  f"O(0) decreasing={decreasing}, slope={slope:.3f}, "
                  f"corr={corr:.4f}, plateau={plat:.4f} (>= 0.77)")


def test_A11_monte_carlo_cross_check():
    d, ta, s = Q2
    trials = 1_000_000
    mc = simulate_walk(30, d, ta, s, 20, trials, 424242)
    worst_z = 0.0
    ok = True
    for t in range(21):
        exact = float(r1_catalan(t, d, ta, s))
        se = math.sqrt(max(exact * (1.0 - exact), 0.0) / trials)
        dev = abs(float(mc[t]) - exact)
        if se == 0.0:
            ok = ok and dev == 0.0
        else:
            worst_z = max(worst_z, dev / se)
            ok = ok and dev <= 4.0 * se
    assert report("A11", ok, f"worst |dev|/SE={worst_z:.2f} (<= 4)")
