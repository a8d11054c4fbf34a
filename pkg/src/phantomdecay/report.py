"""Figure datasets and their rendering.

Each ``figure_N`` builder returns a list of Dataset objects: plain column
tables carrying the numbers behind one reference figure, with enough
metadata to reproduce the run.  ``render_dataset`` draws a quick-look PNG
per dataset with matplotlib (Agg backend); the CSV remains the data
authority and is what the acceptance checks consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .analysis import effective_rate
from .closedform import hyp_ratio_q2, r1_catalan, rate_closed_q2
from .numerics import BackendSpec, DomainError, FLOAT_BACKEND, rates_from_q
from .spectral import (
    lambda2_obc,
    lambda2_pbc,
    obc_pseudo_curve,
    pbc_pseudo_conjecture,
    pseudospectrum_grid,
)
from .transfer import (
    ModelParams,
    TridiagToeplitz,
    VectorPair,
    build_obc,
    build_pbc,
    iterate_series,
    otoc_vectors_obc,
    otoc_vectors_pbc,
    random_stochastic_vector,
    rescale,
    simulate_walk,
)

SEMILOGY_T = "semilogy_t"
LINES_T = "lines_t"
XY = "xy"
GRID = "grid"


@dataclass
class Dataset:
    """One column table behind a figure panel."""

    name: str
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)
    plot: str = LINES_T


def _abs_series(series):
    """|O(t) - O(inf)| column of a deflated series, as floats."""
    return [abs(float(v)) for _, v in series.values]


def _rate_column(series):
    """Pointwise rate aligned with the t axis (None where undefined)."""
    profile = effective_rate(series)
    by_t = {t: float(lam) for t, lam in profile.rates}
    return [by_t.get(t) for t, _ in series.values]


def figure_1(n=16, q=2, t_max=None, backend=None):
    """Periodic-chain OTOC decay: phantom plateau, crossover, asymptote."""
    backend = backend or FLOAT_BACKEND
    t_max = t_max if t_max is not None else 3 * n
    params = ModelParams(boundary="PBC", n=n, q=q, j=1)
    A = build_pbc(params, backend)
    pair = otoc_vectors_pbc(n, q, 1, backend)
    series = iterate_series(A, pair, t_max)
    vals = _abs_series(series)
    rates = _rate_column(series)
    rows = [(t, vals[t], rates[t]) for t in range(t_max + 1)]
    meta = {
        "n": n,
        "q": q,
        "lambda_ph": 0.64,
        "lambda_2": lambda2_pbc(n, q),
    }
    return [Dataset("otoc", ["t", "abs_deflated", "rate"], rows, meta, SEMILOGY_T)]


def figure_2(n=24, q=2, t_max=None, seed=12345, backend=None):
    """Periodic chain: OTOC for several observed sites, and the generic
    staircase-row/random-vector variant decaying at the pseudospectral rate."""
    backend = backend or FLOAT_BACKEND
    t_max = t_max if t_max is not None else 2 * n
    params = ModelParams(boundary="PBC", n=n, q=q)
    A = build_pbc(params, backend)
    sites = sorted({1, n // 2, n})
    cols = ["t"]
    series_list = []
    for j in sites:
        pair = otoc_vectors_pbc(n, q, j, backend)
        series_list.append(iterate_series(A, pair, t_max))
        cols.append(f"abs_deflated_j{j}")
    tables = [_abs_series(s) for s in series_list]
    rows = [tuple([t] + [tab[t] for tab in tables]) for t in range(t_max + 1)]
    meta = {"n": n, "q": q, "sites": sites, "lambda_ph": 0.64,
            "lambda_2": lambda2_pbc(n, q)}
    otoc = Dataset("otoc", cols, rows, meta, SEMILOGY_T)

    stair = otoc_vectors_pbc(n, q, 1, backend, zero_last=True)
    rand = tuple(random_stochastic_vector(A.dim, seed, backend))
    pair = VectorPair(tuple(stair.v), rand, "RandomStochastic", {"seed": seed})
    series = iterate_series(A, pair, t_max)
    rows = [
        (t, v, r)
        for (t, v, r) in zip(
            range(t_max + 1), _abs_series(series), _rate_column(series)
        )
    ]
    random_ds = Dataset(
        "random",
        ["t", "abs_deflated", "rate"],
        rows,
        {"n": n, "q": q, "seed": seed, "lambda_ps": 1.0},
        SEMILOGY_T,
    )
    return [otoc, random_ds]


def figure_3(n=40, q=2, t_max=None, seed=12345, backend=None):
    """Open chain: physical OTOC vectors versus a random stochastic vector."""
    backend = backend or FLOAT_BACKEND
    t_max = t_max if t_max is not None else 2 * n
    params = ModelParams(boundary="OBC", n=n, q=q, j=1)
    A = build_obc(params, backend)
    otoc = iterate_series(A, otoc_vectors_obc(n, q, 1, backend), t_max)
    one, zero = backend.one(), backend.zero()
    p = tuple([one] * (n - 1) + [zero])
    rand = tuple(random_stochastic_vector(n, seed, backend))
    generic = iterate_series(
        A, VectorPair(p, rand, "RandomStochastic", {"seed": seed}), t_max
    )
    ov, rv = _abs_series(otoc), _abs_series(generic)
    rows = [(t, ov[t], rv[t]) for t in range(t_max + 1)]
    meta = {
        "n": n,
        "q": q,
        "seed": seed,
        "rate_otoc": 0.64,
        "rate_random": 1.0,
        "lambda_2": lambda2_obc(n, *rates_from_q(q)),
    }
    return [Dataset("series", ["t", "otoc_deflated", "random_deflated"], rows,
                    meta, SEMILOGY_T)]


def figure_4(n=40, q=2, mu=1.35, t_max=None, backend=None):
    """Similarity-rescaled open chain: tunable phantom rate and its limiting
    pseudospectral ellipse."""
    backend = backend or FLOAT_BACKEND
    t_max = t_max if t_max is not None else 2 * n
    d, ta, s = rates_from_q(q)
    bulk = TridiagToeplitz(
        backend.convert(d), backend.convert(ta), backend.convert(s), n, backend
    )
    R = rescale(bulk, mu)
    one, zero = backend.one(), backend.zero()
    p = tuple([one] * n)
    v = tuple([one] + [zero] * (n - 1))
    series = iterate_series(R, VectorPair(p, v, "Uniform"), t_max)
    vals = _abs_series(series)
    rates = _rate_column(series)
    rows = [(t, vals[t], rates[t]) for t in range(t_max + 1)]
    lam_mu = float(d) + float(s) / mu + float(ta) * mu
    meta = {"n": n, "q": q, "mu": mu, "lambda_mu": lam_mu,
            "lambda_2": lambda2_obc(n, d, ta, s)}
    series_ds = Dataset("series", ["t", "abs_value", "rate"], rows, meta, SEMILOGY_T)

    curve_mu = obc_pseudo_curve(d, ta, s, mu)
    curve_1 = obc_pseudo_curve(d, ta, s, None)
    rows = [
        (float(ph), float(a.real), float(a.imag), float(b.real), float(b.imag))
        for ph, a, b in zip(curve_mu.phi, curve_mu.values, curve_1.values)
    ]
    ellipse = Dataset(
        "ellipse",
        ["phi", "re_rescaled", "im_rescaled", "re_unit", "im_unit"],
        rows,
        {"mu": mu, "max_real_rescaled": curve_mu.max_real,
         "max_real_unit": curve_1.max_real},
        XY,
    )
    return [series_ds, ellipse]


def figure_5(m=30, q=2, t_max=20, trials=100_000, seed=20240101):
    """Biased-walk absorption: Monte Carlo versus the exact Catalan series."""
    d, ta, s = rates_from_q(q)
    mc = simulate_walk(m, d, ta, s, t_max, trials, seed)
    rows = []
    for t in range(t_max + 1):
        exact = float(r1_catalan(t, d, ta, s))
        stderr = float(np.sqrt(max(exact * (1 - exact), 0.0) / trials))
        rows.append((t, float(mc[t]), exact, stderr))
    meta = {"m": m, "q": q, "trials": trials, "seed": seed}
    return [Dataset("walk", ["t", "mc_r1", "exact_r1", "stderr"], rows, meta,
                    LINES_T)]


def figure_6(n=10, q=2, epsilon=1e-5, resolution=81, region=None):
    """Periodic-bulk pseudospectrum field and the thermodynamic-limit
    boundary conjecture curves."""
    params = ModelParams(boundary="PBC", n=n, q=q)
    A = build_pbc(params, BackendSpec())
    fld = pseudospectrum_grid(A, epsilon, region=region, resolution=resolution)
    rows = []
    for i, yy in enumerate(fld.im):
        for j, xx in enumerate(fld.re):
            rows.append((float(xx), float(yy), float(fld.sigma[i, j]),
                         int(fld.flags[i, j])))
    grid = Dataset(
        "grid",
        ["re", "im", "sigma_min", "in_set"],
        rows,
        {"n": n, "q": q, "epsilon": epsilon, "resolution": resolution,
         "rightmost": fld.rightmost_flagged()},
        GRID,
    )
    phi = np.linspace(0.0, 2.0 * np.pi, 181)
    rows = []
    for frac in (0.0, 0.25, 0.5):
        vals = pbc_pseudo_conjecture(q, frac, phi)
        rows.extend(
            (frac, float(ph), float(v.real), float(v.imag))
            for ph, v in zip(phi, vals)
        )
    conj = Dataset("conjecture", ["k_over_n", "phi", "re", "im"], rows,
                   {"q": q}, XY)
    return [grid, conj]


def figure_7(sizes=(10, 20, 30, 40), mu=0.4, t_max=60, backend=None):
    """Hermitian bulk (tau = sigma) with a normalized exponentially localized
    row vector: the transient amplitude O(0) vanishes with system size even
    though the plateau rate still exceeds the spectral bound."""
    backend = backend or FLOAT_BACKEND
    if backend.kind != "float":
        raise DomainError("unit-norm normalization needs the float backend")
    d = Fraction(8, 25)
    ta = s = Fraction(5, 25)
    series_by_n = {}
    o0 = []
    for n in sizes:
        bulk = TridiagToeplitz(
            backend.convert(d), backend.convert(ta), backend.convert(s), n, backend
        )
        with backend.context():
            mu_c = backend.convert(mu)
            p = [backend.one()]
            for _ in range(n - 1):
                p.append(p[-1] / mu_c)
            norm = gmpy2.sqrt(sum(x * x for x in p))
            p = [x / norm for x in p]
        v = [backend.zero()] * n
        v[0] = backend.one()
        series = iterate_series(bulk, VectorPair(tuple(p), tuple(v), "ExpLocalized"),
                                t_max)
        series_by_n[n] = _abs_series(series)
        o0.append((n, series_by_n[n][0]))
    cols = ["t"] + [f"abs_value_n{n}" for n in sizes]
    rows = [tuple([t] + [series_by_n[n][t] for n in sizes])
            for t in range(t_max + 1)]
    lam2 = float(d) + 2.0 * float(ta)  # tau = sigma: spectral bound delta + 2 tau
    meta = {"sizes": list(sizes), "mu": mu, "lambda_2_limit": lam2,
            "lambda_mu": float(d) + float(s) / mu + float(ta) * mu}
    series_ds = Dataset("series", cols, rows, meta, SEMILOGY_T)
    o0_ds = Dataset("amplitude", ["n", "o_zero"], o0, dict(meta), SEMILOGY_T)
    return [series_ds, o0_ds]


def figure_8(t_max=60, prec=256):
    """Effective rate of the q = 2 closed form and its hypergeometric ratio:
    the approach to the asymptotic rate 16/25 is algebraic, not exponential."""
    rows = []
    for t in range(t_max + 1):
        rows.append((t, float(rate_closed_q2(t, prec)), float(hyp_ratio_q2(t, prec))))
    meta = {"q": 2, "lambda_2_limit": 0.64}
    return [Dataset("rates", ["t", "lambda_eff", "hyp_ratio"], rows, meta,
                    LINES_T)]


FIGURES = {
    1: figure_1,
    2: figure_2,
    3: figure_3,
    4: figure_4,
    5: figure_5,
    6: figure_6,
    7: figure_7,
    8: figure_8,
}


def build_figure(number, **kwargs):
    """Datasets behind figure ``number`` (1..8); kwargs override defaults."""
    if number not in FIGURES:
        raise DomainError(f"figure number must be in 1..8, got {number}")
    return FIGURES[number](**kwargs)


def render_dataset(ds, path):
    """Quick-look PNG for one dataset, dispatched on its plot hint."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if ds.plot in (SEMILOGY_T, LINES_T):
            xs = [row[0] for row in ds.rows]
            for col_idx in range(1, len(ds.columns)):
                ys = [row[col_idx] for row in ds.rows]
                pairs = [(x, y) for x, y in zip(xs, ys)
                         if y is not None and np.isfinite(y)]
                if not pairs:
                    continue
                px, py = zip(*pairs)
                if ds.plot == SEMILOGY_T:
                    pos = [(x, y) for x, y in pairs if y > 0]
                    if not pos:
                        continue
                    px, py = zip(*pos)
                    ax.semilogy(px, py, label=ds.columns[col_idx])
                else:
                    ax.plot(px, py, label=ds.columns[col_idx])
            ax.set_xlabel(ds.columns[0])
            ax.legend(fontsize=8)
        elif ds.plot == XY:
            # group rows on the leading column when it has few distinct values
            re_i = [i for i, c in enumerate(ds.columns) if c.startswith("re")]
            im_i = [i for i, c in enumerate(ds.columns) if c.startswith("im")]
            if re_i and im_i and len(re_i) == len(im_i):
                groups = {}
                for row in ds.rows:
                    groups.setdefault(row[0] if len(set(r[0] for r in ds.rows)) <= 8
                                      else None, []).append(row)
                for key, rows in groups.items():
                    for r_c, i_c in zip(re_i, im_i):
                        lbl = ds.columns[r_c][3:] or "curve"
                        if key is not None:
                            lbl = f"{lbl} @ {key}"
                        ax.plot([r[r_c] for r in rows], [r[i_c] for r in rows],
                                label=lbl)
                ax.set_xlabel("Re")
                ax.set_ylabel("Im")
                ax.set_aspect("equal", adjustable="datalim")
                ax.legend(fontsize=8)
        elif ds.plot == GRID:
            res = sorted(set(row[0] for row in ds.rows))
            ims = sorted(set(row[1] for row in ds.rows))
            sig = np.full((len(ims), len(res)), np.nan)
            ri = {v: i for i, v in enumerate(res)}
            ii = {v: i for i, v in enumerate(ims)}
            for re_v, im_v, s_v, _ in ds.rows:
                sig[ii[im_v], ri[re_v]] = s_v
            with np.errstate(divide="ignore"):
                levels = np.arange(-8, 1)
                cs = ax.contour(res, ims, np.log10(sig), levels=levels)
            ax.clabel(cs, fontsize=7, fmt="%d")
            ax.set_xlabel("Re")
            ax.set_ylabel("Im")
        ax.set_title(ds.name)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path
