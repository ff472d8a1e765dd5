"""Ground-state phase diagrams over finite candidate sets.

Every candidate is a periodic pattern whose spectrum is computed once on a
periodic box that the cell tiles.  Grand-canonical energies at any
``(mu_e, mu_c)`` then follow from a cumulative sum of the sorted
eigenvalues, and canonical energies at any electron count from prefix sums,
so scans over large grids cost almost nothing beyond the eigensolves.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .lattice import (Configuration, Lattice, PeriodicPattern, boundary_count, build_lattice,
                      tile_pattern)
from .spectral import batch_eigenvalues, canonical_minimizers, free_electron_energy_density

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-9
NONE_PERIODIC = "none-periodic"
DEFAULT_TARGETS = {1: (60, 120), 2: (12, 24)}
EIGENSOLVE_CAP = 1600

# Square-lattice ground states at the densities listed by key, as (rows, cols, cell),
# the cell read row by row.
SQUARE_LATTICE_GROUND_STATES = {
    "1/2": (2, 2, "0110"),
    "2/5": (5, 5, "1001001001101000101000101"),
    "1/3": (3, 3, "100010001"),
    "1/4": (4, 2, "01001000"),
    "2/9": (6, 6, "101000000010010000000101010000000010"),
    "1/5": (5, 5, "0001010000001000000101000"),
    "2/11": (11, 11, "0010000100010000100000000100000100100000100000000100001000100001"
                     "000100001000000001000001001000001001000001000000001000010"),
    "1/6": (12, 12, "00001001000010000000010000100100000000000001001010010000000000000100100"
                    "0010000000010000100100000000000001001010010000000000000100100001000000001"),
}


def square_lattice_ground_states() -> dict[str, PeriodicPattern]:
    return {k: PeriodicPattern.from_string(bits, (a, b)) for k, (a, b, bits) in SQUARE_LATTICE_GROUND_STATES.items()}


# ---------------------------------------------------------------------------
# candidate sets

def one_dimensional_candidates(max_period: int = 6) -> list[PeriodicPattern]:
    """Primitive patterns of period at most ``max_period``, one per translation/reflection class."""
    seen = {}
    for q in range(1, max_period + 1):
        for bits in itertools.product((0, 1), repeat=q):
            pat = PeriodicPattern((q,), bits)
            if pat.primitive().volume != q:
                continue
            key = pat.canonical().occ
            seen.setdefault((q, key), pat.canonical())
    return sorted(seen.values(), key=lambda p: (p.volume, p.occ))


def two_dimensional_candidates(max_cell: int = 3, include_known: bool = True) -> list[PeriodicPattern]:
    """All cells up to ``max_cell x max_cell``, deduplicated on a common torus, plus the known ground states."""
    side = math.lcm(*range(1, max_cell + 1))
    torus = build_lattice(2, side)
    seen: dict[tuple, PeriodicPattern] = {}
    for a in range(1, max_cell + 1):
        for b in range(1, max_cell + 1):
            for bits in itertools.product((0, 1), repeat=a * b):
                pat = PeriodicPattern((a, b), bits)
                key = tile_pattern(pat, torus).canonical().occ
                seen.setdefault(key, pat)
    out = sorted(seen.values(), key=lambda p: (p.volume, p.cell_lengths, p.occ))
    if include_known:
        for pat in square_lattice_ground_states().values():
            if not any(c.density == pat.density and c.equivalent(pat) for c in out):
                out.append(pat)
    return out


def default_candidates(d: int) -> list[PeriodicPattern]:
    if d == 1:
        return one_dimensional_candidates()
    if d == 2:
        return two_dimensional_candidates()
    raise ValueError(f"unsupported dimension {d}")


def basic_candidates(d: int) -> list[PeriodicPattern]:
    """Empty, full and chessboard patterns."""
    if d == 1:
        return [PeriodicPattern.from_string(b) for b in ("0", "1", "01")]
    return [PeriodicPattern.from_string("0", (1, 1)), PeriodicPattern.from_string("1", (1, 1)),
            PeriodicPattern.from_string("0110", (2, 2))]


# ---------------------------------------------------------------------------
# per-pattern spectra

def _extents(volume, d: int) -> tuple[int, ...]:
    if isinstance(volume, (int, np.integer)):
        return (int(volume),) * d
    ext = tuple(int(v) for v in volume)
    if len(ext) != d:
        raise ValueError(f"volume {ext} does not match dimension {d}")
    return ext


def _boxes(volume, d: int) -> tuple[tuple[int, ...], ...]:
    # an int is a cubic box; d ints form one box, except that in d=1 a list of ints lists rings
    if isinstance(volume, (int, np.integer)):
        return (_extents(volume, d),)
    volume = list(volume)
    if all(isinstance(v, (int, np.integer)) for v in volume):
        if d > 1 and len(volume) == d:
            return (_extents(volume, d),)
        return tuple(_extents(v, d) for v in volume)
    return tuple(_extents(v, d) for v in volume)


def default_volumes(pattern: PeriodicPattern) -> tuple[tuple[int, ...], ...]:
    """Two boxes per pattern: each default extent rounded up to a multiple of the cell."""
    targets = DEFAULT_TARGETS[pattern.d]
    out = []
    for t in targets:
        ext = tuple(-(-t // c) * c for c in pattern.cell_lengths)
        if ext not in out:
            out.append(ext)
    if len(out) == 1:
        out.append(tuple(2 * v for v in out[0]))
    return tuple(out)


def _check_volume(pattern: PeriodicPattern, ext: tuple[int, ...]):
    for n, c in zip(ext, pattern.cell_lengths):
        if n % c:
            raise ValueError(f"extent {n} is not a multiple of the cell extent {c}")
    if math.prod(ext) > EIGENSOLVE_CAP:
        raise ValueError(f"box {ext} exceeds the eigensolve cap of {EIGENSOLVE_CAP} sites")


@lru_cache(maxsize=4096)
def pattern_spectrum(pattern: PeriodicPattern, U: float, extents: tuple[int, ...]) -> np.ndarray:
    """Sorted eigenvalues of the tiled pattern on a periodic box (read-only, cached)."""
    _check_volume(pattern, extents)
    lat = build_lattice(pattern.d, extents)
    conf = tile_pattern(pattern, lat)
    vals = batch_eigenvalues(lat, conf.array[None, :], U)[0]
    vals.flags.writeable = False
    return vals


def _gc_band(vals: np.ndarray, mu_e) -> tuple[np.ndarray, np.ndarray]:
    """Per-site ``sum_{lam < mu} (lam - mu)`` and the count below ``mu``, for an array of ``mu``."""
    mu_e = np.asarray(mu_e, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(vals)))
    n = np.searchsorted(vals, mu_e, side="left")
    return (cum[n] - n * mu_e) / len(vals), n


@dataclass(frozen=True)
class PatternEnergy:
    energy: float
    finite_size_delta: float
    volumes: tuple
    values: tuple
    extrapolated: bool = False


def pattern_gc_energy_density(pattern: PeriodicPattern, U: float, mu_e: float, mu_c: float,
                              volume=None, richardson: bool = False, order: int = 2) -> PatternEnergy:
    """Grand-canonical energy per site of a tiled pattern.

    ``volume`` is one box or a sequence of two; the reported value comes from
    the last box, and ``finite_size_delta`` is the difference between the two.
    With ``richardson`` the two values are extrapolated assuming a
    ``1/|box|^(order/d)`` correction.
    """
    boxes = default_volumes(pattern) if volume is None else _boxes(volume, pattern.d)
    values = []
    for ext in boxes:
        band, _ = _gc_band(pattern_spectrum(pattern, float(U), ext), mu_e)
        values.append(float(band) - mu_c * float(pattern.density))
    delta = abs(values[-1] - values[0]) if len(values) > 1 else 0.0
    energy = values[-1]
    if richardson:
        if len(values) < 2:
            raise ValueError("extrapolation needs two boxes")
        ratio = (math.prod(boxes[-1]) / math.prod(boxes[0])) ** (order / pattern.d)
        energy = values[-1] + (values[-1] - values[0]) / (ratio - 1)
    return PatternEnergy(energy, delta, boxes, tuple(values), richardson)


# ---------------------------------------------------------------------------
# grand-canonical scans

@dataclass(frozen=True)
class PhaseCell:
    mu_e: float
    mu_c: float
    patterns: tuple
    rho_e: tuple
    energy: float
    degenerate: bool
    none_periodic: bool = False

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.patterns)

    @property
    def winner(self) -> str:
        return NONE_PERIODIC if self.none_periodic else "|".join(self.labels)

    @property
    def rho_c(self) -> tuple[Fraction, ...]:
        return tuple(p.density for p in self.patterns)

    def has_full(self) -> bool:
        return any(p.n_occupied == p.volume for p in self.patterns)

    def has_empty(self) -> bool:
        return any(p.n_occupied == 0 for p in self.patterns)


def _scan_box(pattern: PeriodicPattern, volume):
    return _extents(volume, pattern.d) if volume is not None else default_volumes(pattern)[-1]


def _spectra(patterns, U, volume, jobs):
    boxes = [_scan_box(p, volume) for p in patterns]
    work = lambda i: pattern_spectrum(patterns[i], float(U), boxes[i])
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, range(len(patterns))))
    return [work(i) for i in range(len(patterns))]


def gc_energy_table(patterns, U, mu_e, mu_c, volume=None, jobs=1):
    """Energies ``E[i, a, b]`` of candidate ``i`` at ``(mu_e[a], mu_c[b])`` and electron densities ``R[i, a]``."""
    mu_e = np.asarray(mu_e, dtype=float)
    mu_c = np.asarray(mu_c, dtype=float)
    spectra = _spectra(list(patterns), U, volume, jobs)
    rho_c = np.array([float(p.density) for p in patterns])
    band = np.empty((len(patterns), len(mu_e)))
    rho_e = np.empty_like(band)
    for i, vals in enumerate(spectra):
        band[i], n = _gc_band(vals, mu_e)
        rho_e[i] = n / len(vals)
    return band[:, :, None] - rho_c[:, None, None] * mu_c[None, None, :], rho_e


def gc_scan(mu_e_grid: Sequence[float], mu_c_grid: Sequence[float], candidates: Sequence[PeriodicPattern],
            U: float, volume=None, tol: float = DEGENERACY_TOL, jobs: int = 1) -> list[PhaseCell]:
    """Minimizing candidates on the product grid, ordered by ``(mu_e, mu_c)``.

    A cell is marked none-periodic when the empty/full mixture, evaluated on
    the same boxes, beats every candidate by more than ``tol``; this can only
    happen when the candidate set omits the empty or the full pattern.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("the candidate set is empty")
    d = candidates[0].d
    if any(p.d != d for p in candidates):
        raise ValueError("candidates of mixed dimension")
    mu_e = np.sort(np.asarray(mu_e_grid, dtype=float))
    mu_c = np.sort(np.asarray(mu_c_grid, dtype=float))
    E, R = gc_energy_table(candidates, U, mu_e, mu_c, volume, jobs)
    ends = basic_candidates(d)[:2]
    seg, _ = gc_energy_table(ends, U, mu_e, mu_c, volume, 1)
    seg = seg.min(axis=0)
    best = E.min(axis=0)
    cells = []
    for a, me in enumerate(mu_e):
        for b, mc in enumerate(mu_c):
            win = np.flatnonzero(E[:, a, b] <= best[a, b] + tol)
            cells.append(PhaseCell(float(me), float(mc), tuple(candidates[i] for i in win),
                                   tuple(float(R[i, a]) for i in win), float(best[a, b]), len(win) > 1,
                                   bool(seg[a, b] < best[a, b] - tol)))
    return cells


def winner_sets(cells: Sequence[PhaseCell]) -> list[frozenset]:
    return [frozenset(p.key() for p in c.patterns) for c in cells]


def _check_gap(U, d, values, what):
    lo, hi = -U + 2 * d, -2 * d
    for v in values:
        if not lo < v < hi:
            raise ValueError(f"{what} {v} outside the universal gap ({lo}, {hi})")


def gap_line_invariance_check(U: float, mu_e_samples: Sequence[float], shift: float,
                              candidates: Sequence[PeriodicPattern], volume=None,
                              mu_c_samples: Sequence[float] | None = None) -> bool:
    """Winner sets agree at ``(mu_e, mu_c)`` and ``(mu_e + shift, mu_c - shift)`` for every sample."""
    candidates = list(candidates)
    d = candidates[0].d
    if not U > 4 * d:
        raise ValueError(f"no universal gap for U={U} <= 4d={4 * d}")
    mu_e_samples = list(mu_e_samples)
    _check_gap(U, d, mu_e_samples, "mu_e")
    _check_gap(U, d, [m + shift for m in mu_e_samples], "shifted mu_e")
    if mu_c_samples is None:
        mu_c_samples = np.linspace(-U - 2, 2, 9)
    for me in mu_e_samples:
        for mc in mu_c_samples:
            here = gc_scan([me], [mc], candidates, U, volume)[0]
            there = gc_scan([me + shift], [mc - shift], candidates, U, volume)[0]
            if winner_sets([here]) != winner_sets([there]):
                return False
    return True


def full_is_ground_state(mu_e: float, mu_c: float, U: float, d: int) -> bool:
    """Sufficient conditions under which the full configuration is a grand-canonical ground state."""
    if mu_c > 0 or (mu_e > 2 * d and mu_c > -U):
        return True
    return U > 4 * d and -U + 2 * d < mu_e < -2 * d and mu_e + mu_c + U > 4 * d / (U - 4 * d)


def empty_is_ground_state(mu_e: float, mu_c: float, U: float, d: int) -> bool:
    return mu_c < -U or (mu_e < -U - 2 * d and mu_c < 0)


# ---------------------------------------------------------------------------
# canonical envelope

@dataclass(frozen=True)
class MixtureComponent:
    alpha: float
    pattern: PeriodicPattern
    rho_e: float


@dataclass(frozen=True)
class MixtureSpec:
    """Convex combination of periodic patterns realizing ``(rho_e, rho_c)``.

    ``mu_e`` and ``mu_c`` are the slopes of the envelope at the point (one
    valid choice where the envelope has a kink).
    """

    rho_e: float
    rho_c: float
    energy: float
    components: tuple
    mu_e: float | None = None
    mu_c: float | None = None

    @property
    def pure(self) -> bool:
        return len(self.components) == 1

    @property
    def pattern(self) -> PeriodicPattern | None:
        return self.components[0].pattern if self.pure else None

    def to_json(self) -> dict:
        return {
            "rho_e": self.rho_e,
            "rho_c": self.rho_c,
            "energy": self.energy,
            "mu_e": self.mu_e,
            "mu_c": self.mu_c,
            "pure": self.pure,
            "components": [{"alpha": c.alpha, "pattern": c.pattern.to_json(), "rho_e": c.rho_e}
                           for c in self.components],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def canonical_hull(rho_e: float, rho_c: float, candidates: Sequence[PeriodicPattern], U: float,
                   volume=None, weight_tol: float = 1e-9) -> MixtureSpec:
    """Lower convex envelope of the candidates' canonical energies at ``(rho_e, rho_c)``.

    Each candidate contributes the points ``(n/V, rho_c, E_n/V)`` for every
    electron count ``n`` on its box; the envelope is the linear program over
    convex weights on those points.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("the candidate set is empty")
    if not (0 <= rho_e <= 1 and 0 <= rho_c <= 1):
        raise ValueError(f"densities ({rho_e}, {rho_c}) outside [0, 1]")
    spectra = _spectra(candidates, U, volume, 1)
    owner, xs, ys, es = [], [], [], []
    for i, (pat, vals) in enumerate(zip(candidates, spectra)):
        V = len(vals)
        owner.append(np.full(V + 1, i))
        xs.append(np.arange(V + 1) / V)
        ys.append(np.full(V + 1, float(pat.density)))
        es.append(np.concatenate(([0.0], np.cumsum(vals))) / V)
    owner = np.concatenate(owner)
    x, y, e = map(np.concatenate, (xs, ys, es))
    A = np.vstack([np.ones_like(x), x, y])
    res = linprog(e, A_eq=A, b_eq=[1.0, rho_e, rho_c], bounds=(0, None), method="highs")
    if res.status != 0:
        raise ValueError(f"({rho_e}, {rho_c}) is outside the density hull of the candidates")
    w = res.x
    comps = []
    for i in range(len(candidates)):
        mask = owner == i
        alpha = float(w[mask].sum())
        if alpha > weight_tol:
            comps.append(MixtureComponent(alpha, candidates[i], float(w[mask] @ x[mask] / alpha)))
    total = sum(c.alpha for c in comps)
    comps = tuple(MixtureComponent(c.alpha / total, c.pattern, c.rho_e) for c in comps)
    duals = res.eqlin.marginals
    return MixtureSpec(float(rho_e), float(rho_c), float(res.fun), comps, float(duals[1]), float(duals[2]))


@dataclass(frozen=True)
class EqualMuSplit:
    mu_e: float
    energy: float
    rho_e: tuple


def equal_mu_split(weights: Sequence[tuple[float, PeriodicPattern]], rho_e: float, U: float,
                   volume=None) -> EqualMuSplit:
    """Distribute electrons over mixture components at a common chemical potential.

    The components' levels, each weighted by ``alpha_i / V_i``, are pooled and
    filled from the bottom until the weight reaches ``rho_e``; the last
    level may be filled partially.
    """
    alphas = np.array([a for a, _ in weights], dtype=float)
    pats = [p for _, p in weights]
    spectra = _spectra(pats, U, volume, 1)
    lam = np.concatenate(spectra)
    wt = np.concatenate([np.full(len(v), a / len(v)) for a, v in zip(alphas, spectra)])
    owner = np.concatenate([np.full(len(v), i) for i, v in enumerate(spectra)])
    order = np.lexsort((owner, lam))
    lam, wt, owner = lam[order], wt[order], owner[order]
    if rho_e > wt.sum() + 1e-12:
        raise ValueError(f"rho_e={rho_e} exceeds the mixture's capacity {wt.sum()}")
    cum = np.cumsum(wt)
    k = int(np.searchsorted(cum, rho_e - 1e-15))
    fill = wt.copy()
    if k < len(wt):
        fill[k] = rho_e - (cum[k - 1] if k else 0.0)
        fill[k + 1:] = 0.0
    energy = float(fill @ lam)
    mu = float(lam[min(k, len(lam) - 1)])
    dens = tuple(float(fill[owner == i].sum() / alphas[i]) if alphas[i] > 0 else 0.0 for i in range(len(pats)))
    return EqualMuSplit(mu, energy, dens)


def segregated_energy(rho_e: float, rho_c: float, U: float, d: int) -> float:
    """Per-site energy of the empty/full mixture holding all electrons in the full region."""
    if rho_e == 0:
        return 0.0
    if not 0 < rho_c <= 1:
        raise ValueError(f"rho_c={rho_c} outside (0, 1]")
    if rho_e > rho_c:
        raise ValueError("rho_e > rho_c; apply the particle-hole transformation first")
    rho = rho_e / rho_c
    return rho_c * (free_electron_energy_density(d, rho) - U * rho)


# ---------------------------------------------------------------------------
# finite-volume segregation

def _connected(lattice: Lattice, sites: set[int]) -> bool:
    if not sites:
        return True
    start = next(iter(sites))
    seen, stack = {start}, [start]
    nbr = lattice.neighbors
    while stack:
        x = stack.pop()
        for y in nbr[x]:
            if y in sites and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(sites)


def is_segregated(config: Configuration) -> bool:
    """Both the occupied and the empty sites form connected sets."""
    occ = {i for i, v in enumerate(config.occ) if v}
    empty = set(range(config.lattice.n_sites)) - occ
    return _connected(config.lattice, occ) and _connected(config.lattice, empty)


@dataclass(frozen=True, eq=False)
class SegregationResult:
    lattice: Lattice
    n_e: int
    n_c: int
    U: float
    minimizers: list
    energy: float
    segregated: bool
    margin_nonsegregated: float
    margin_periodic: float
    degenerate: bool

    @property
    def minimizer(self) -> Configuration:
        return self.minimizers[0]


def segregation_check(lattice: Lattice, n_e: int, n_c: int, U: float, cap: int = 20) -> SegregationResult:
    """Exact minimizer at fixed ``(N_e, N_c)`` and its margins.

    ``margin_nonsegregated`` is the energy of the best configuration that is
    not segregated minus the ground-state energy; ``margin_periodic`` the
    same for configurations with a nontrivial translation symmetry.  Either
    is ``inf`` when no such configuration exists.
    """
    if n_e > n_c:
        raise ValueError("segregation check needs N_e <= N_c")
    search = canonical_minimizers(lattice, n_c, n_e, U, reduce_symmetry=True, cap=cap)
    seg = np.array([is_segregated(c) for c in search.configs])
    per = np.array([c.has_translation_symmetry() for c in search.configs])
    E = search.energies

    def margin(mask):
        return float(E[mask].min() - search.energy) if mask.any() else math.inf

    return SegregationResult(lattice, n_e, n_c, float(U), search.minimizers, search.energy,
                             all(is_segregated(c) for c in search.minimizers),
                             margin(~seg), margin(per), search.degenerate)


@dataclass(frozen=True)
class Theorem1Check:
    boundary: int
    energy: float
    reference: float
    lhs: dict
    rhs: float
    holds: dict
    reading: str

    @property
    def ok(self) -> bool:
        return self.holds[self.reading]


def theorem1_upper_check(config: Configuration, n_e: int, U: float, reading: str = "full") -> Theorem1Check:
    """Upper bound ``(1/2d) |e(rho)| B >= E(N_e, omega) - N_c e(rho, full)`` at ``rho = N_e/N_c``.

    The coefficient ``e(rho)`` is evaluated both as the full-configuration
    energy density (``reading="full"``) and as the free band energy
    (``"free"``); ``ok`` reports the selected reading.  The outcome is logged.
    """
    from .spectral import canonical_energy, spectrum_of

    lat = config.lattice
    d = lat.d
    if not U > 4 * d:
        raise ValueError(f"bound needs U > 4d = {4 * d}")
    n_c = config.n_c
    if not 0 < n_c or n_e > n_c:
        raise ValueError("need 0 < N_c and N_e <= N_c")
    if reading not in ("full", "free"):
        raise ValueError(f"unknown reading {reading!r}")
    rho = n_e / n_c
    band = free_electron_energy_density(d, rho)
    full = band - U * rho
    B = boundary_count(config)
    E = canonical_energy(spectrum_of(config, U), n_e)
    rhs = E - n_c * full
    lhs = {"full": abs(full) * B / (2 * d), "free": abs(band) * B / (2 * d)}
    holds = {k: bool(v >= rhs) for k, v in lhs.items()}
    log.info("upper bound on %s: B=%d rhs=%.6g lhs(full)=%.6g lhs(free)=%.6g", config, B, rhs, lhs["full"], lhs["free"])
    return Theorem1Check(B, E, n_c * full, lhs, rhs, holds, reading)


# ---------------------------------------------------------------------------
# audits

@dataclass(frozen=True)
class Violation:
    kind: str
    first: tuple
    second: tuple
    detail: str = ""


def _grid(cells):
    es = sorted({c.mu_e for c in cells})
    cs = sorted({c.mu_c for c in cells})
    lookup = {(c.mu_e, c.mu_c): c for c in cells}
    if len(lookup) != len(es) * len(cs):
        raise ValueError("scan is not a rectangular grid")
    return es, cs, lookup


def monotonicity_audit(cells: Sequence[PhaseCell], tol: float = 1e-12) -> list[Violation]:
    """Check the monotonicity of densities and the persistence of the full and empty phases.

    Along each line of constant ``mu_e`` the classical density may not drop as
    ``mu_c`` grows; along constant ``mu_c`` the electron density may not drop
    as ``mu_e`` grows.  A winning full pattern must keep winning at larger
    chemical potentials, a winning empty one at smaller.
    """
    if not cells:
        return []
    es, cs, at = _grid(cells)
    out = []
    for me in es:
        for lo, hi in zip(cs, cs[1:]):
            a, b = at[me, lo], at[me, hi]
            if min(b.rho_c) < max(a.rho_c) - tol:
                out.append(Violation("rho_c", (me, lo), (me, hi), f"{max(a.rho_c)} -> {min(b.rho_c)}"))
    for mc in cs:
        for lo, hi in zip(es, es[1:]):
            a, b = at[lo, mc], at[hi, mc]
            if min(b.rho_e) < max(a.rho_e) - tol:
                out.append(Violation("rho_e", (lo, mc), (hi, mc), f"{max(a.rho_e)} -> {min(b.rho_e)}"))
    for i, me in enumerate(es):
        for j, mc in enumerate(cs):
            cell = at[me, mc]
            up = [at[es[i + 1], mc]] if i + 1 < len(es) else []
            up += [at[me, cs[j + 1]]] if j + 1 < len(cs) else []
            down = [at[es[i - 1], mc]] if i else []
            down += [at[me, cs[j - 1]]] if j else []
            if cell.has_full():
                out += [Violation("full", (me, mc), (n.mu_e, n.mu_c)) for n in up if not n.has_full()]
            if cell.has_empty():
                out += [Violation("empty", (me, mc), (n.mu_e, n.mu_c)) for n in down if not n.has_empty()]
    return out


def electron_density_of(pattern: PeriodicPattern, U: float, mu_e: float, volume=None) -> float:
    vals = pattern_spectrum(pattern, float(U), _scan_box(pattern, volume))
    return int(np.searchsorted(vals, mu_e, side="left")) / len(vals)


def canonical_consistency_check(pattern: PeriodicPattern, U: float, mu_e: float, mu_c: float,
                                candidates: Sequence[PeriodicPattern], volume=None) -> bool:
    """A grand-canonical winner must also win canonically at the densities it induces."""
    candidates = list(candidates)
    cell = gc_scan([mu_e], [mu_c], candidates, U, volume)[0]
    if not any(p.equivalent(pattern) for p in cell.patterns):
        raise ValueError(f"{pattern.label} does not win at ({mu_e}, {mu_c})")
    rho_e = electron_density_of(pattern, U, mu_e, volume)
    hull = canonical_hull(rho_e, float(pattern.density), candidates, U, volume)
    return hull.pure and hull.pattern.equivalent(pattern)


# ---------------------------------------------------------------------------
# output

SCAN_HEADER = ("mu_e", "mu_c", "winner_label", "energy_per_site", "degenerate")


def scan_to_csv(cells: Sequence[PhaseCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for c in cells:
        w.writerow([repr(c.mu_e), repr(c.mu_c), c.winner, repr(c.energy), str(c.degenerate).lower()])
    return buf.getvalue()
