"""Reproducible experiment runner: CSV/JSON emitter for every model in the
package.

Every output file starts with '#'-prefixed metadata lines recording the tool
version, backend, precision, seed and resolved parameters, so a run can be
reproduced from its own artifacts.  Re-running a command with an identical
configuration produces byte-identical files: all randomness is counter-based
(Philox) and all formatting is deterministic.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import gmpy2

from . import __version__
from .analysis import (
    EXP_LOCALIZED,
    OTOC,
    RANDOM_V,
    compare_report,
    effective_rate,
    transition_time,
)
from .closedform import ConvolutionProfile, jordan_closed, r1_catalan
from .numerics import (
    BackendSpec,
    ConvergenceError,
    DEFAULT_PREC,
    DomainError,
    EstimationError,
    FLOAT,
    NumericalError,
    RATIONAL,
    mpfr_str,
    rates_from_q,
)
from .report import build_figure, render_dataset
from .spectral import (
    obc_eigensystem,
    pbc_eigenvalues,
    pseudospectrum_grid,
)
from .transfer import (
    ModelParams,
    TridiagToeplitz,
    VectorPair,
    build_jordan,
    build_obc,
    build_pbc,
    iterate_series,
    otoc_vectors_obc,
    otoc_vectors_pbc,
    rescale,
    simulate_walk,
)

OUTPUT_DIR_ENV = "PHANTOMDECAY_OUTPUT_DIR"


def _fmt(x):
    """Deterministic cell formatting for CSV output."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, Fraction)) or isinstance(x, gmpy2.mpfr):
        return mpfr_str(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _meta_lines(args, extra=None):
    meta = {
        "version": __version__,
        "backend": getattr(args, "backend", FLOAT),
        "precision_bits": getattr(args, "precision", DEFAULT_PREC),
        "seed": getattr(args, "seed", None),
    }
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "output_dir", "format") and v is not None
    }
    if extra:
        params.update(sorted(extra.items()))
    lines = [f"# {k} = {_fmt(v)}" for k, v in meta.items()]
    lines.append("# params = " + json.dumps(params, sort_keys=True, default=_fmt))
    return lines


def _out_path(args, filename):
    out_dir = os.environ.get(OUTPUT_DIR_ENV) or args.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, filename)


def _write_csv(path, columns, rows, header_lines):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def _write_json(path, columns, rows, header_lines):
    doc = {
        "meta": [line[2:] for line in header_lines],
        "columns": columns,
        "rows": [[_fmt(x) for x in row] for row in rows],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _emit(args, stem, columns, rows, extra_meta=None):
    header = _meta_lines(args, extra_meta)
    if args.format == "json":
        path = _out_path(args, stem + ".json")
        _write_json(path, columns, rows, header)
    else:
        path = _out_path(args, stem + ".csv")
        _write_csv(path, columns, rows, header)
    print(path)
    return path


def _backend(args):
    return BackendSpec(args.backend, args.precision)


def _series_rows(series):
    profile = effective_rate(series)
    by_t = {t: lam for t, lam in profile.rates}
    return [(t, val, by_t.get(t)) for t, val in series.values]


# ---------------------------------------------------------------------------
# subcommands


def cmd_obc_otoc(args):
    be = _backend(args)
    params = ModelParams(boundary="OBC", n=args.n, q=args.q, j=args.j)
    A = build_obc(params, be)
    pair = otoc_vectors_obc(args.n, args.q, args.j, be)
    series = iterate_series(A, pair, args.t_max)
    rows = _series_rows(series)
    return _emit(args, "obc_otoc", ["t", "deflated", "rate"], rows,
                 {"o_infinity": series.o_infinity})


def cmd_pbc_otoc(args):
    be = _backend(args)
    params = ModelParams(boundary="PBC", n=args.n, q=args.q, j=args.j)
    A = build_pbc(params, be)
    pair = otoc_vectors_pbc(args.n, args.q, args.j, be)
    series = iterate_series(A, pair, args.t_max)
    rows = _series_rows(series)
    return _emit(args, "pbc_otoc", ["t", "deflated", "rate"], rows,
                 {"o_infinity": series.o_infinity})


def cmd_random_walk(args):
    d, ta, s = rates_from_q(args.q)
    mc = simulate_walk(args.m, d, ta, s, args.t_max, args.trials, args.seed)
    rows = []
    for t in range(args.t_max + 1):
        exact = r1_catalan(t, d, ta, s)
        rows.append((t, float(mc[t]), exact))
    return _emit(args, "random_walk", ["t", "mc_r1", "exact_r1"], rows)


def cmd_jordan(args):
    be = _backend(args)
    A = build_jordan(args.dim, args.delta, args.sigma, be)
    one, zero = be.one(), be.zero()
    profile = ConvolutionProfile.exponential(Fraction(args.mu))
    with be.context():
        mu_c = be.convert(Fraction(args.mu))
        p = [one]
        for _ in range(args.dim - 1):
            p.append(p[-1] / mu_c)
    v = [zero] * args.dim
    v[0] = one
    series = iterate_series(A, VectorPair(tuple(p), tuple(v), "ExpLocalized"),
                            args.t_max)
    rows = []
    for t, val in series.values:
        closed = jordan_closed(t, args.dim, Fraction(args.delta),
                               Fraction(args.sigma), profile)
        rows.append((t, val, closed))
    return _emit(args, "jordan", ["t", "value", "closed_form"], rows)


def cmd_rescaled(args):
    be = _backend(args)
    d, ta, s = rates_from_q(args.q)
    bulk = TridiagToeplitz(be.convert(d), be.convert(ta), be.convert(s),
                           args.n, be)
    mu = Fraction(args.mu)
    R = rescale(bulk, mu)
    one, zero = be.one(), be.zero()
    p = tuple([one] * args.n)
    v = tuple([one] + [zero] * (args.n - 1))
    series = iterate_series(R, VectorPair(p, v, "Uniform"), args.t_max)
    rows = _series_rows(series)
    lam_mu = float(d) + float(s) / float(mu) + float(ta) * float(mu)
    return _emit(args, "rescaled", ["t", "value", "rate"], rows,
                 {"lambda_mu": lam_mu})


def cmd_spectrum(args):
    if args.model == "obc":
        d, ta, s = rates_from_q(args.q)
        eig = obc_eigensystem(args.n, d, ta, s, args.precision)
        rows = [(k + 1, lam) for k, lam in enumerate(eig.eigenvalues)]
        return _emit(args, "spectrum", ["k", "eigenvalue"], rows)
    eig = pbc_eigenvalues(args.n, args.q, args.precision, with_vectors=False)
    rows = []
    idx = 0
    for k in range(1, args.n + 1):
        for j in range(1, args.n):
            rows.append((j, k, eig.eigenvalues[idx]))
            idx += 1
    return _emit(args, "spectrum", ["j", "k", "eigenvalue"], rows)


def cmd_pseudospectrum(args):
    be = BackendSpec()
    if args.model == "obc":
        params = ModelParams(boundary="OBC", n=args.n, q=args.q)
        A = build_obc(params, be)
    else:
        params = ModelParams(boundary="PBC", n=args.n, q=args.q)
        A = build_pbc(params, be)
    region = tuple(args.region) if args.region else None
    fld = pseudospectrum_grid(A, args.eps, region=region,
                              resolution=args.resolution)
    rows = []
    for i, yy in enumerate(fld.im):
        for j, xx in enumerate(fld.re):
            rows.append((float(xx), float(yy), float(fld.sigma[i, j]),
                         int(fld.flags[i, j])))
    return _emit(args, "pseudospectrum", ["re", "im", "sigma_min", "in_set"],
                 rows, {"rightmost": fld.rightmost_flagged()})


def cmd_rates(args):
    be = _backend(args)
    boundary = args.model.upper()
    params = ModelParams(boundary=boundary, n=args.n, q=args.q, j=args.j,
                         mu=Fraction(args.mu) if args.mu is not None else None)
    kind = {"otoc": OTOC, "random": RANDOM_V, "exp": EXP_LOCALIZED}[args.pair]
    rep = compare_report(params, kind, backend=be, t_max=args.t_max,
                         seed=args.seed, window=args.window)
    if args.threshold is not None:
        A = build_obc(params, be) if boundary == "OBC" else build_pbc(params, be)
        pair = (otoc_vectors_obc(args.n, args.q, args.j or 1, be)
                if boundary == "OBC"
                else otoc_vectors_pbc(args.n, args.q, args.j or 1, be))
        series = iterate_series(A, pair, args.t_max or 2 * args.n)
        rep["t_c"] = transition_time(effective_rate(series), args.threshold)
    doc = {k: _fmt(v) if not isinstance(v, (int, float, str, type(None), tuple, list))
           else v for k, v in rep.items()}
    doc["meta"] = [line[2:] for line in _meta_lines(args)]
    path = _out_path(args, "rates.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=_fmt)
        fh.write("\n")
    print(path)
    return path


def cmd_figure(args):
    kwargs = {}
    if args.n is not None:
        if args.number == 7:
            kwargs["sizes"] = (args.n // 4, args.n // 2, 3 * args.n // 4, args.n)
        elif args.number in (5,):
            kwargs["m"] = args.n
        else:
            kwargs["n"] = args.n
    if args.q is not None and args.number not in (7, 8):
        kwargs["q"] = args.q
    if args.t_max is not None and args.number != 6:
        kwargs["t_max"] = args.t_max
    if args.seed is not None and args.number in (2, 3, 5):
        kwargs["seed"] = args.seed
    if args.trials is not None and args.number == 5:
        kwargs["trials"] = args.trials
    if args.resolution is not None and args.number == 6:
        kwargs["resolution"] = args.resolution
    datasets = build_figure(args.number, **kwargs)
    paths = []
    for ds in datasets:
        stem = f"figure{args.number}_{ds.name}"
        header = _meta_lines(args, ds.meta)
        if args.format == "json":
            path = _write_json(_out_path(args, stem + ".json"), ds.columns,
                               ds.rows, header)
        else:
            path = _write_csv(_out_path(args, stem + ".csv"), ds.columns,
                              ds.rows, header)
        png = render_dataset(ds, _out_path(args, stem + ".png"))
        paths.extend([path, png])
        print(path)
        print(png)
    return paths


# ---------------------------------------------------------------------------
# parser


def _add_common(sp, seed=False):
    sp.add_argument("--backend", choices=[RATIONAL, FLOAT], default=FLOAT)
    sp.add_argument("--precision", type=int, default=DEFAULT_PREC,
                    help="mpfr precision in bits")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--output-dir", default=None,
                    help=f"output directory (env {OUTPUT_DIR_ENV} overrides)")
    if seed:
        sp.add_argument("--seed", type=int, default=12345)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="phantomdecay",
        description="Transfer-matrix decay experiments: phantom relaxation "
                    "rates, spectra, pseudospectra and walk cross-checks.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("obc-otoc", help="open-chain OTOC decay series")
    sp.add_argument("--n", type=int, default=40)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--t-max", type=int, default=80)
    _add_common(sp)
    sp.set_defaults(func=cmd_obc_otoc)

    sp = sub.add_parser("pbc-otoc", help="periodic-chain OTOC decay series")
    sp.add_argument("--n", type=int, default=24)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--t-max", type=int, default=48)
    _add_common(sp)
    sp.set_defaults(func=cmd_pbc_otoc)

    sp = sub.add_parser("random-walk", help="Monte Carlo biased walk vs exact")
    sp.add_argument("--m", type=int, default=30)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--t-max", type=int, default=20)
    sp.add_argument("--trials", type=int, default=100_000)
    _add_common(sp, seed=True)
    sp.set_defaults(func=cmd_random_walk)

    sp = sub.add_parser("jordan", help="defective two-diagonal iteration")
    sp.add_argument("--dim", type=int, default=30)
    sp.add_argument("--delta", default="3/10")
    sp.add_argument("--sigma", default="1/2")
    sp.add_argument("--mu", default="1")
    sp.add_argument("--t-max", type=int, default=40)
    _add_common(sp)
    sp.set_defaults(func=cmd_jordan)

    sp = sub.add_parser("rescaled", help="similarity-rescaled open bulk")
    sp.add_argument("--n", type=int, default=40)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--mu", default="27/20")
    sp.add_argument("--t-max", type=int, default=80)
    _add_common(sp)
    sp.set_defaults(func=cmd_rescaled)

    sp = sub.add_parser("spectrum", help="analytic eigenvalues")
    sp.add_argument("--model", choices=["obc", "pbc"], required=True)
    sp.add_argument("--n", type=int, default=40)
    sp.add_argument("--q", type=int, default=2)
    _add_common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("pseudospectrum", help="sigma_min grid scan")
    sp.add_argument("--model", choices=["obc", "pbc"], required=True)
    sp.add_argument("--n", type=int, default=30)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--eps", type=float, default=1e-5)
    sp.add_argument("--resolution", type=int, default=201)
    sp.add_argument("--region", type=float, nargs=4, default=None,
                    metavar=("RE_LO", "RE_HI", "IM_LO", "IM_HI"))
    _add_common(sp)
    sp.set_defaults(func=cmd_pseudospectrum)

    sp = sub.add_parser("rates", help="plateau/asymptote comparison report")
    sp.add_argument("--model", choices=["obc", "pbc"], required=True)
    sp.add_argument("--n", type=int, default=24)
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--j", type=int, default=None)
    sp.add_argument("--pair", choices=["otoc", "random", "exp"], default="otoc")
    sp.add_argument("--mu", default=None)
    sp.add_argument("--t-max", type=int, default=None)
    sp.add_argument("--window", type=int, default=10)
    sp.add_argument("--threshold", type=float, default=None)
    _add_common(sp, seed=True)
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("figure", help="dataset + PNG behind a figure (1..8)")
    sp.add_argument("number", type=int, choices=range(1, 9))
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--q", type=int, default=None)
    sp.add_argument("--t-max", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--resolution", type=int, default=None)
    _add_common(sp, seed=True)
    sp.set_defaults(func=cmd_figure)

    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        args.func(args)
    except (DomainError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ConvergenceError, EstimationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
