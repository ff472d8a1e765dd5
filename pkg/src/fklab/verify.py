"""Self-check suite run by ``fklab verify``.

Each check is small enough to finish in well under a second and returns a
verdict together with the largest deviation it saw.  Random samples come from
a fixed-seed generator; ``seedless`` replaces them with a deterministic
multiplicative-hash sweep so that no generator is involved at all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import homogeneous as hom
from .large_u import expansion_energy, remainder_bound
from .lattice import Configuration, PeriodicPattern, SymmetryKind, build_lattice, symmetry_transform
from .phase_diagram import equal_mu_split, segregated_energy
from .spectral import (EnsemblePoint, canonical_energy, canonical_minimizers, free_energy, gc_energy,
                       spectrum_of)

SEED = 20240101
GROUPS = ("trace", "windows", "symmetry", "homogeneous", "large_u", "ground_states", "thermo", "hull")


@dataclass(frozen=True)
class CheckResult:
    name: str
    group: str
    passed: bool
    worst: float
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "group": self.group, "passed": self.passed,
                "worst": self.worst, "detail": self.detail}


class _Sampler:
    def __init__(self, seedless: bool):
        self.seedless = seedless
        self.rng = None if seedless else np.random.default_rng(SEED)
        self.counter = 0

    def bits(self, n):
        if self.rng is not None:
            return tuple(int(v) for v in self.rng.integers(0, 2, n))
        self.counter += 1
        code = (self.counter * 2654435761) % (1 << n)
        return tuple((code >> (n - 1 - i)) & 1 for i in range(n))

    def uniform(self, lo, hi):
        if self.rng is not None:
            return float(self.rng.uniform(lo, hi))
        self.counter += 1
        frac = (self.counter * 0.6180339887498949) % 1.0
        return lo + (hi - lo) * frac

    def integer(self, lo, hi):
        return min(hi, lo + int(self.uniform(0, hi - lo + 1)))


def _lattices():
    return [build_lattice(1, 12), build_lattice(2, 4)]


def _trace(sampler):
    worst = 0.0
    for lat in _lattices():
        for _ in range(20):
            c = Configuration(lat, sampler.bits(lat.n_sites))
            U = sampler.uniform(0.5, 10)
            lam = spectrum_of(c, U).eigenvalues
            worst = max(worst, abs(lam.sum() + U * c.n_c) / lat.n_sites,
                        abs((lam ** 2).sum() - 2 * lat.n_bonds - U * U * c.n_c) / lat.n_sites)
    return worst <= 1e-9, worst


def _windows(sampler):
    bad = 0
    for lat in _lattices():
        for _ in range(20):
            c = Configuration(lat, sampler.bits(lat.n_sites))
            bad += len(spectrum_of(c, sampler.uniform(0.5, 10)).window_violations(1e-9))
    return bad == 0, float(bad)


def _symmetry(sampler):
    worst = 0.0
    for lat in (build_lattice(1, 6), build_lattice(1, 8), build_lattice(2, 4)):
        for _ in range(8):
            c = Configuration(lat, sampler.bits(lat.n_sites))
            U = sampler.uniform(-8, 8)
            me, mc = sampler.uniform(-6, 6), sampler.uniform(-6, 6)
            ne = sampler.integer(0, lat.n_sites)
            s0 = spectrum_of(c, U)
            for kind in SymmetryKind:
                im = symmetry_transform(kind, c, U, me, mc, ne)
                s1 = spectrum_of(im.config, im.U)
                worst = max(worst,
                            abs(canonical_energy(s1, im.n_e) - canonical_energy(s0, ne) - im.canonical_shift),
                            abs(gc_energy(s1, im.config.n_c, im.mu_e, im.mu_c)
                                - gc_energy(s0, c.n_c, me, mc) - im.gc_shift))
    return worst <= 1e-10, worst


def _homogeneous(sampler):
    failures = 0
    for q in range(2, 31):
        for p in range(1, q):
            if math.gcd(p, q) != 1:
                continue
            pat = hom.most_homogeneous_config(p, q, p)
            f = hom.Filling(p, q)
            ok = hom.is_most_homogeneous(pat)
            if f.s is not None:
                prof = hom.gap_profile(pat)
                ok = ok and prof.count(f.ell) == f.s and prof.count(f.ell + 1) == p - f.s
            failures += not ok
    return failures == 0, float(failures)


def _large_u(sampler):
    lat = build_lattice(1, 12)
    c = Configuration.chessboard(lat)
    worst = 0.0
    for U in (6.0, 10.0, 20.0):
        exact = canonical_energy(spectrum_of(c, U), c.n_c)
        err = abs(exact - expansion_energy(c, U, 4))
        worst = max(worst, err / remainder_bound(U, 1, c.n_c))
    return worst <= 1.0, worst


def _ground_states(sampler):
    lat = build_lattice(1, 10)
    search = canonical_minimizers(lat, 5, 5, 2.0)
    chess = Configuration.chessboard(lat).canonical()
    ok = [c.occ for c in search.minimizers] == [chess.occ]
    ok = ok and hom.theorem2_check(1, 3, 1000.0, 4).match
    return bool(ok), 0.0


def _thermo(sampler):
    lat = build_lattice(1, 6)
    worst = 0.0
    for _ in range(5):
        c = Configuration(lat, sampler.bits(6))
        U = sampler.uniform(0.5, 6)
        spec = spectrum_of(c, U)
        me, mc = sampler.uniform(-4, 2), sampler.uniform(-4, 2)
        lam = spec.eigenvalues
        if np.min(np.abs(lam - me)) < 0.1:
            me += 0.25
        e = gc_energy(spec, c.n_c, me, mc)
        worst = max(worst, abs(free_energy(spec, c.n_c, EnsemblePoint(200.0, me, mc)) - e))
    return worst < 1e-6, worst


def _hull(sampler):
    worst = 0.0
    full, empty = PeriodicPattern.from_string("1"), PeriodicPattern.from_string("0")
    for rho_c, rho_e in ((0.5, 0.25), (0.75, 0.25), (0.4, 0.1)):
        split = equal_mu_split([(rho_c, full), (1 - rho_c, empty)], rho_e, 30.0, 240)
        worst = max(worst, abs(split.energy - segregated_energy(rho_e, rho_c, 30.0, 1)))
    return worst < 1e-3, worst


_CHECKS = {
    "trace": [("trace_identities", _trace)],
    "windows": [("spectral_windows", _windows)],
    "symmetry": [("particle_hole_identities", _symmetry)],
    "homogeneous": [("homogeneous_gap_counts", _homogeneous)],
    "large_u": [("expansion_remainder", _large_u)],
    "ground_states": [("exhaustive_ground_states", _ground_states)],
    "thermo": [("zero_temperature_limit", _thermo)],
    "hull": [("segregated_split", _hull)],
}


def run_suite(only=None, seedless: bool = False) -> list[CheckResult]:
    groups = list(GROUPS) if not only else list(only)
    unknown = [g for g in groups if g not in _CHECKS]
    if unknown:
        raise ValueError(f"unknown check group(s): {', '.join(unknown)}")
    sampler = _Sampler(seedless)
    out = []
    for group in GROUPS:
        if group not in groups:
            continue
        for name, fn in _CHECKS[group]:
            passed, worst = fn(sampler)
            # three significant digits keep reports stable across BLAS builds
            out.append(CheckResult(name, group, bool(passed), float(f"{worst:.3g}")))
    return out


def report(results) -> dict:
    return {"passed": all(r.passed for r in results), "checks": [r.to_json() for r in results]}


__all__ = ["GROUPS", "CheckResult", "run_suite", "report"]
