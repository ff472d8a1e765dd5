"""Command-line front end: ``fklab <command> [flags]``.

Tabular results are written as CSV and structured results as JSON, either
to ``--out`` or to standard output.  A JSON run-config passed with ``--json``
supplies defaults for any flag; flags given explicitly take precedence.

Exit codes: 0 success, 1 computational or verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .lattice import Configuration, PeriodicPattern, build_lattice
from .spectral import EigensolverError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers

def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _lattice(args, n_sites: int | None = None):
    d = args.d
    if d not in (1, 2):
        raise UsageError(f"--d must be 1 or 2, got {d}")
    lengths = args.L
    if not lengths:
        if n_sites is None:
            raise UsageError("--L is required")
        if d == 1:
            lengths = [n_sites]
        else:
            side = math.isqrt(n_sites)
            if side * side != n_sites:
                raise UsageError("cannot infer a square box from --config; pass --L")
            lengths = [side, side]
    if len(lengths) == 1:
        lengths = lengths * d
    if len(lengths) != d:
        raise UsageError(f"--L given {len(lengths)} times for d={d}")
    return build_lattice(d, lengths, args.bc)


def _config(args):
    if not args.config:
        raise UsageError("--config is required")
    bits = args.config.strip()
    if set(bits) - {"0", "1"}:
        raise UsageError(f"--config must be a bit string, got {bits!r}")
    lat = _lattice(args, len(bits))
    if len(bits) != lat.n_sites:
        raise UsageError(f"--config has {len(bits)} bits but the box has {lat.n_sites} sites")
    return Configuration.from_string(lat, bits)


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return value


def _pattern(text: str, d: int) -> PeriodicPattern:
    text = text.strip()
    if ":" in text:
        shape, bits = text.split(":", 1)
        cell = tuple(int(v) for v in shape.split("x"))
    else:
        bits = text
        cell = (len(bits),) if d == 1 else None
    if cell is None or len(cell) != d or set(bits) - {"0", "1"} or not bits:
        raise UsageError(f"cannot read candidate pattern {text!r} for d={d}")
    return PeriodicPattern.from_string(bits, cell)


def _candidates(args):
    from .phase_diagram import basic_candidates, default_candidates

    if args.candidate:
        out = [_pattern(t, args.d) for t in args.candidate]
    elif args.candidates == "default":
        out = default_candidates(args.d)
    elif args.candidates == "basic":
        out = basic_candidates(args.d)
    else:
        out = []
    if not out:
        raise UsageError("the candidate set is empty")
    return out


def _volume(args):
    if not args.volume:
        return None
    return args.volume[0] if len(args.volume) == 1 else tuple(args.volume)


def _grid(spec, name):
    lo, hi, n = spec
    n = int(n)
    if n < 1:
        raise UsageError(f"{name} needs at least one point")
    return np.linspace(float(lo), float(hi), n)


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(args) -> int:
    from .spectral import build_one_body, eigenvalues

    conf = _config(args)
    U = _need(args, "U")
    spec = eigenvalues(build_one_body(conf.lattice, conf, U), check_residual=True)
    _emit(spec.to_csv(), args.out)
    if U >= 0:
        bad = spec.window_violations(1e-9)
        verdict = "window check: pass" if not bad else f"window check: FAIL ({len(bad)} eigenvalues outside)"
    else:
        bad = []
        verdict = "window check: skipped (U < 0)"
    print(verdict, file=sys.stdout if args.out else sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_energy(args) -> int:
    from .spectral import EnsemblePoint, canonical_energy, free_energy, gc_energy, spectrum_of

    conf = _config(args)
    U = _need(args, "U")
    spec = spectrum_of(conf, U)
    out = {"n_c": conf.n_c, "n_sites": conf.lattice.n_sites, "U": float(U)}
    if args.Ne is not None:
        E = canonical_energy(spec, args.Ne)
        out.update(n_e=args.Ne, canonical_energy=E, canonical_energy_per_site=E / conf.lattice.n_sites)
    if args.mu_e is not None or args.mu_c is not None:
        me, mc = _need(args, "mu_e"), _need(args, "mu_c")
        out.update(mu_e=me, mu_c=mc, gc_energy=gc_energy(spec, conf.n_c, me, mc))
        if args.beta is not None:
            out.update(beta=args.beta, free_energy=free_energy(spec, conf.n_c, EnsemblePoint(args.beta, me, mc)))
    if len(out) == 3:
        raise UsageError("give --Ne or --mu-e/--mu-c")
    _emit(_json_text(out), args.out)
    return EXIT_OK


def cmd_gc_scan(args) -> int:
    from .phase_diagram import gc_scan, scan_to_csv

    U = _need(args, "U")
    cands = _candidates(args)
    me = _grid(args.mu_e_range or (-U - 3, 3, 61), "--mu-e-range")
    mc = _grid(args.mu_c_range or (-U - 3, 3, 61), "--mu-c-range")
    cells = gc_scan(me, mc, cands, U, _volume(args), jobs=args.jobs)
    _emit(scan_to_csv(cells), args.out)
    return EXIT_OK


def cmd_hull(args) -> int:
    from .phase_diagram import canonical_hull, equal_mu_split

    U = _need(args, "U")
    rho_e, rho_c = float(Fraction(_need(args, "rho_e"))), float(Fraction(_need(args, "rho_c")))
    cands = _candidates(args)
    vol = _volume(args)
    hull = canonical_hull(rho_e, rho_c, cands, U, vol)
    data = hull.to_json()
    split = equal_mu_split([(c.alpha, c.pattern) for c in hull.components], rho_e, U, vol)
    data["equal_mu"] = {"mu_e": split.mu_e, "energy": split.energy, "rho_e": list(split.rho_e)}
    _emit(_json_text(data), args.out)
    return EXIT_OK


def cmd_staircase(args) -> int:
    from . import homogeneous as hom

    if args.molecule:
        L = args.L[0] if args.L else 400
        U_star = hom.molecule_threshold(L)
        _emit(_json_text({"chain_length": L, "threshold": U_star, "reference": 2 / math.sqrt(3)}), args.out)
        return EXIT_OK
    if args.max_q is not None:
        fracs = [(p, q, p) for q in range(2, args.max_q + 1) for p in range(1, q) if math.gcd(p, q) == 1]
    else:
        p, q = _need(args, "p"), _need(args, "q")
        fracs = [(p, q, args.r if args.r is not None else p)]
    U = args.U if args.U is not None else 1000.0
    rows = [hom.staircase_row(p, q, r, args.theorem2, U, args.periods) for p, q, r in fracs]
    _emit(_csv_text(hom.StaircaseRow.HEADER, [r.values() for r in rows]), args.out)
    if args.theorem2 and not all(r.match for r in rows):
        return EXIT_FAIL
    return EXIT_OK


def cmd_large_u(args) -> int:
    from .large_u import expansion_terms, remainder_bound
    from .spectral import canonical_energy, spectrum_of

    conf = _config(args)
    U = _need(args, "U")
    terms = expansion_terms(conf, U, args.kmax, backend=args.backend)
    rows = [row for t in terms for row in t.rows()]
    _emit(_csv_text(("k", "m", "walk_count", "contribution"), rows), args.out)
    exact = canonical_energy(spectrum_of(conf, U), conf.n_c)
    series = -U * conf.n_c + sum(t.contribution for t in terms)
    summary = {"exact": exact, "expansion": series, "error": abs(exact - series),
               "bound": remainder_bound(U, conf.lattice.d, conf.n_c)}
    print(json.dumps(summary, sort_keys=True), file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_segregation(args) -> int:
    from .phase_diagram import segregation_check

    lat = _lattice(args)
    U = _need(args, "U")
    res = segregation_check(lat, _need(args, "Ne"), _need(args, "Nc"), U)
    data = {
        "n_sites": lat.n_sites, "n_e": res.n_e, "n_c": res.n_c, "U": res.U,
        "energy": res.energy, "minimizer": res.minimizer.to_string(),
        "minimizers": [c.to_string() for c in res.minimizers],
        "segregated": res.segregated, "degenerate": res.degenerate,
        "margin_nonsegregated": _finite(res.margin_nonsegregated),
        "margin_periodic": _finite(res.margin_periodic),
    }
    _emit(_json_text(data), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import report, run_suite

    rep = report(run_suite(args.only, args.seedless))
    _emit(_json_text(rep), args.out)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--d", type=int, default=1, help="dimension (1 or 2)")
    p.add_argument("--L", type=int, action="append", help="extent; repeat once per dimension")
    p.add_argument("--bc", choices=("periodic", "open"), default="periodic")
    p.add_argument("--U", type=float, help="coupling")
    p.add_argument("--config", help="occupations as a bit string, row-major")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--json", dest="run_config", metavar="PATH", help="JSON run-config supplying defaults")
    return p


def _candidate_flags(p):
    p.add_argument("--candidates", choices=("default", "basic", "none"), default="default")
    p.add_argument("--candidate", action="append", help="candidate cell, e.g. 001 or 2x2:0110; repeatable")
    p.add_argument("--volume", type=int, action="append", help="box extent(s) for every candidate")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="fklab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fklab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    subs = {}

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(handler=fn)
        subs[name] = sp
        return sp

    add("spectrum", cmd_spectrum, "eigenvalues of the one-body matrix")

    sp = add("energy", cmd_energy, "canonical, grand-canonical and free energies of a configuration")
    sp.add_argument("--Ne", type=int)
    sp.add_argument("--mu-e", type=float)
    sp.add_argument("--mu-c", type=float)
    sp.add_argument("--beta", type=float)

    sp = add("gc-scan", cmd_gc_scan, "grand-canonical phase diagram over a candidate set")
    sp.add_argument("--mu-e-range", nargs=3, type=float, metavar=("LO", "HI", "N"))
    sp.add_argument("--mu-c-range", nargs=3, type=float, metavar=("LO", "HI", "N"))
    _candidate_flags(sp)

    sp = add("hull", cmd_hull, "canonical convex envelope at given densities")
    sp.add_argument("--rho-e")
    sp.add_argument("--rho-c")
    _candidate_flags(sp)

    sp = add("staircase", cmd_staircase, "most-homogeneous patterns and exhaustive checks")
    sp.add_argument("--p", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--max-q", type=int)
    sp.add_argument("--theorem2", action="store_true")
    sp.add_argument("--periods", type=int)
    sp.add_argument("--molecule", action="store_true")

    sp = add("large-u", cmd_large_u, "strong-coupling expansion terms")
    sp.add_argument("--kmax", type=int, default=6)
    sp.add_argument("--backend", choices=("cython", "python"))

    sp = add("segregation", cmd_segregation, "exhaustive minimizer at fixed particle numbers")
    sp.add_argument("--Ne", type=int)
    sp.add_argument("--Nc", type=int)

    from .verify import GROUPS
    sp = add("verify", cmd_verify, "run the invariant suite")
    sp.add_argument("--only", action="append", choices=GROUPS)
    sp.add_argument("--seedless", action="store_true")
    return parser, subs


def _apply_run_config(subparser: argparse.ArgumentParser, path: str):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read run-config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("run-config must be a JSON object")
    known = {a.dest for a in subparser._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items() if k != "command"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown run-config keys: {', '.join(unknown)}")
    if isinstance(cfg.get("L"), int):
        cfg["L"] = [cfg["L"]]
    subparser.set_defaults(**cfg)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.run_config:
            _apply_run_config(subs[args.command], args.run_config)
            args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be positive")
        return args.handler(args)
    except UsageError as exc:
        print(f"fklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"fklab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EigensolverError, ArithmeticError, RuntimeError) as exc:
        print(f"fklab: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
