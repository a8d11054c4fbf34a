"""Rate extraction and plateau/transition analysis of decay series.

A deflated series O(t) - O(inf) decays through up to three regimes: an
initial plateau at the phantom rate lambda_ph, a crossover near t ~ n, and
the true asymptotic rate lambda_2.  The estimators here quantify what one
would otherwise eyeball on a log plot: the pointwise effective rate, the
flattest plateau stretch, and the time at which the rate drops through a
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from .numerics import BackendSpec, DomainError, EstimationError, RATIONAL
from .spectral import (
    lambda2_obc,
    lambda2_pbc,
    obc_pseudo_curve,
    pbc_pseudo_conjecture,
)
from .transfer import (
    ObcFull,
    PbcBlockCirculant,
    build_obc,
    build_pbc,
    exp_localized_pair,
    iterate_series,
    otoc_vectors_obc,
    otoc_vectors_pbc,
    random_stochastic_vector,
    VectorPair,
)

DEFAULT_FLOOR = Fraction(1, 10 ** 60)


@dataclass
class RateProfile:
    """Pointwise effective decay rates of a deflated series.

    ``rates`` holds (t, lambda_eff(t)) pairs; entries where the series
    magnitude fell below the floor are omitted and their times recorded in
    ``skipped``.  ``plateau`` and ``t_c`` are filled in by plateau_rate and
    transition_time.  ``references`` carries analytic comparison rates.
    """

    rates: list
    skipped: list = field(default_factory=list)
    plateau: dict | None = None
    t_c: object | None = None
    references: dict = field(default_factory=dict)

    def rate_at(self, t):
        for tt, lam in self.rates:
            if tt == t:
                return lam
        raise DomainError(f"no rate entry at t={t}")


def effective_rate(series, floor=DEFAULT_FLOOR):
    """lambda_eff(t) = (O(t+1) - O(inf)) / (O(t) - O(inf)) for each valid t.

    The series must be deflated (its stored values are already relative to
    the asymptote).  Ratios whose denominator magnitude is below ``floor``
    are omitted rather than amplified into noise.
    """
    if not series.deflated:
        raise DomainError("effective_rate needs a deflated series")
    vals = list(series.values)
    if len(vals) < 2:
        raise DomainError("need at least two time steps")
    be = series.backend
    rates, skipped = [], []
    if be.kind == RATIONAL:
        for (t, cur), (_, nxt) in zip(vals[:-1], vals[1:]):
            if abs(cur) <= floor:
                skipped.append(t)
                continue
            rates.append((t, nxt / cur))
    else:
        with be.context():
            fl = gmpy2.mpfr(floor)
            for (t, cur), (_, nxt) in zip(vals[:-1], vals[1:]):
                if abs(cur) <= fl:
                    skipped.append(t)
                    continue
                rates.append((t, nxt / cur))
    return RateProfile(rates=rates, skipped=skipped)


def plateau_rate(profile, window=10, t_max=None):
    """Geometric-mean rate over the flattest length-``window`` stretch.

    Flatness of a candidate stretch is max - min of log lambda_eff; the
    search runs over consecutive runs of ``window`` entries within
    t in [window, t_max - window], keeping the estimate away from both the
    t=0 transient and the crossover tail.  ``t_max`` defaults to the last
    profile time; passing the system size restricts the search to the
    pre-crossover phantom region.  Stores {"estimate", "window"} on the
    profile and returns the estimate (exact when the flattest stretch is
    exactly constant).
    """
    if window < 5:
        raise DomainError("window must be >= 5")
    entries = [(t, lam) for t, lam in profile.rates if lam > 0]
    if not entries:
        raise EstimationError("no positive rate entries")
    t_hi = (t_max if t_max is not None else entries[-1][0]) - window
    candidates = []
    for i in range(len(entries) - window + 1):
        run = entries[i : i + window]
        if run[0][0] < window or run[-1][0] > t_hi:
            continue
        if run[-1][0] - run[0][0] != window - 1:
            continue  # gap from a skipped entry
        candidates.append(run)
    if not candidates:
        raise EstimationError("no admissible plateau window")
    logs = [[math.log(float(lam)) for _, lam in run] for run in candidates]
    best = min(range(len(candidates)), key=lambda i: max(logs[i]) - min(logs[i]))
    run = candidates[best]
    values = [lam for _, lam in run]
    if all(v == values[0] for v in values):
        estimate = values[0]
    else:
        estimate = math.exp(sum(logs[best]) / window)
    profile.plateau = {"estimate": estimate, "window": (run[0][0], run[-1][0])}
    return estimate


def transition_time(profile, threshold):
    """Smallest t where lambda_eff drops below ``threshold``.

    Linearly interpolates between the bracketing integer steps; returns None
    (and stores it) when the profile never crosses.
    """
    thr = float(threshold)
    prev = None
    for t, lam in profile.rates:
        lv = float(lam)
        if lv < thr:
            if prev is None or prev[0] != t - 1:
                profile.t_c = float(t)
            else:
                pt, pv = prev
                profile.t_c = pt + (pv - thr) / (pv - lv)
            return profile.t_c
        prev = (t, lv)
    profile.t_c = None
    return None


# ---------------------------------------------------------------------------
# model-level comparison report

OTOC = "otoc"
RANDOM_V = "random"
EXP_LOCALIZED = "exp"

ORDER_EQUAL_LOW = "equal-low"
ORDER_PSEUDOSPECTRAL = "pseudospectral"
ORDER_STRICT = "strict"
ORDER_OUTSIDE = "outside"


def _build_pair(A, params, pair_kind, seed, mu, backend):
    if pair_kind == OTOC:
        j = params.j if params.j is not None else 1
        if isinstance(A, ObcFull):
            return otoc_vectors_obc(params.n, params.q, j, backend)
        if isinstance(A, PbcBlockCirculant):
            return otoc_vectors_pbc(params.n, params.q, j, backend, zero_last=False)
        raise DomainError("otoc vectors exist for OBC and PBC models")
    if pair_kind == RANDOM_V:
        one, zero = backend.one(), backend.zero()
        rand = tuple(random_stochastic_vector(A.dim, seed, backend))
        if isinstance(A, PbcBlockCirculant):
            # physical staircase row with its full-cover component removed,
            # observing a random iterated vector: generic pseudospectral decay
            j = params.j if params.j is not None else 1
            stair = otoc_vectors_pbc(params.n, params.q, j, backend, zero_last=True)
            return VectorPair(tuple(stair.v), rand, "RandomStochastic", {"seed": seed})
        p = tuple([one] * (A.dim - 1) + [zero])  # p_k = 1 - delta_{k,last}
        return VectorPair(p, rand, "RandomStochastic", {"seed": seed})
    if pair_kind == EXP_LOCALIZED:
        if mu is None:
            raise DomainError("exp-localized pair needs mu")
        return exp_localized_pair(A.dim, mu, backend)
    raise DomainError(f"unknown pair kind {pair_kind!r}")


def compare_report(params, pair_kind, backend=None, t_max=None, seed=12345,
                   window=10, tolerance=0.02):
    """Measured plateau rate versus the analytic references.

    Builds the model and vector pair, iterates the deflated series, and
    returns a dict with lambda_2 (largest non-unit eigenvalue), lambda_ps
    (real maximum of the limiting pseudospectral curve, with the similarity
    parameter mu applied when the pair is exponentially localized), the
    measured plateau lambda_ph, and an ordering verdict:

    * "equal-low"       -- lambda_ph matches lambda_2 within tolerance,
    * "pseudospectral"  -- lambda_ph matches lambda_ps within tolerance,
    * "strict"          -- lambda_2 < lambda_ph < lambda_ps strictly,
    * "outside"         -- anything else (flags a broken configuration).
    """
    backend = backend or BackendSpec()
    d, ta, s = params.resolved_rates()
    mu = params.mu
    if params.boundary == "OBC":
        A = build_obc(params, backend)
        lam2 = lambda2_obc(params.n, d, ta, s)
        mu_eff = mu if (pair_kind == EXP_LOCALIZED and mu is not None) else None
        lam_ps = obc_pseudo_curve(d, ta, s, mu_eff).max_real
    elif params.boundary == "PBC":
        A = build_pbc(params, backend)
        lam2 = lambda2_pbc(params.n, params.q)
        lam_ps = float(
            np.max(
                [
                    pbc_pseudo_conjecture(params.q, f, ph).real
                    for f in np.linspace(0, 1, 257)
                    for ph in (0.0,)
                ]
            )
        )
    else:
        raise DomainError("compare_report supports OBC and PBC models")
    pair = _build_pair(A, params, pair_kind, seed, mu, backend)
    if t_max is None:
        t_max = 2 * params.n
    series = iterate_series(A, pair, t_max)
    profile = effective_rate(series)
    lam_ph = float(plateau_rate(profile, window, t_max=params.n + window))
    if abs(lam_ph - lam2) <= tolerance:
        verdict = ORDER_EQUAL_LOW
    elif abs(lam_ph - lam_ps) <= tolerance:
        verdict = ORDER_PSEUDOSPECTRAL
    elif lam2 < lam_ph < lam_ps:
        verdict = ORDER_STRICT
    else:
        verdict = ORDER_OUTSIDE
    return {
        "lambda_2": lam2,
        "lambda_ps": lam_ps,
        "lambda_ph": lam_ph,
        "verdict": verdict,
        "plateau_window": profile.plateau["window"],
        "pair": pair.provenance,
    }
