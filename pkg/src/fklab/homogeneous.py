"""Most-homogeneous periodic configurations in one dimension.

A rational density ``p/q`` has a distinguished period-``q`` arrangement of
``p`` particles: site ``k`` is occupied when ``p k mod q`` is one of
``0 .. p-1``.  Its gaps take only the two values ``l`` and ``l + 1``, and the
sequence recording which gaps are short is again of this type, one level
down.  This module generates these patterns, differentiates them, evaluates
structure factors and the small-coupling energy, and checks ground-state
claims by exhaustive enumeration on short rings.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import bisect

from .lattice import Configuration, Lattice, PeriodicPattern, build_lattice, tile_pattern
from .spectral import canonical_minimizers

STRUCTURE_FACTOR_CAP = 20
SMALL_U_TIE = 1e-12


@dataclass(frozen=True)
class Filling:
    """Reduced density ``p/q`` with ``q = (l + 1) p - s``.

    ``s`` is ``None`` when ``p == 1``: every gap is then ``l = q``.
    """

    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError(f"p and q must be positive, got {self.p}/{self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"p={self.p} and q={self.q} are not coprime")
        if self.p > self.q:
            raise ValueError(f"density {self.p}/{self.q} exceeds 1")

    @property
    def ell(self) -> int:
        return self.q // self.p

    @property
    def s(self) -> int | None:
        if self.p == 1:
            return None
        return (self.ell + 1) * self.p - self.q

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def solutions(p: int, q: int, r: int) -> list[int]:
    """``k_j`` in ``[0, q)`` with ``p k_j = j (mod q)`` for ``j = 0 .. r-1``, in ``j`` order."""
    Filling(p, q)
    if not 1 <= r <= q:
        raise ValueError(f"r={r} outside [1, {q}]")
    inv = pow(p, -1, q) if q > 1 else 0
    return [(j * inv) % q for j in range(r)]


def most_homogeneous_config(p: int, q: int, r: int) -> PeriodicPattern:
    return PeriodicPattern.from_sites(q, solutions(p, q, r))


@dataclass(frozen=True)
class GapProfile:
    """Left gaps ``L(x)`` of the occupied sites of one period, in site order."""

    period: int
    sites: tuple[int, ...]
    gaps: tuple[int, ...]

    @property
    def ell(self) -> int:
        return self.period // len(self.sites)

    @property
    def homogeneous(self) -> bool:
        return all(g in (self.ell, self.ell + 1) for g in self.gaps)

    def count(self, size: int) -> int:
        return sum(1 for g in self.gaps if g == size)


def _one_dimensional(pattern: PeriodicPattern):
    if pattern.d != 1:
        raise ValueError("expected a one-dimensional pattern")


def gap_profile(pattern: PeriodicPattern) -> GapProfile:
    _one_dimensional(pattern)
    sites = pattern.sites
    if not sites:
        raise ValueError("gap profile of an empty pattern is undefined")
    q = pattern.volume
    gaps = tuple((x - sites[i - 1]) % q or q for i, x in enumerate(sites))
    return GapProfile(q, sites, gaps)


def derivative(pattern: PeriodicPattern) -> PeriodicPattern:
    """Period-``r`` pattern marking the particles whose left gap is the short one."""
    prof = gap_profile(pattern)
    if not prof.homogeneous:
        raise ValueError(f"pattern {pattern.to_string()} has gaps {prof.gaps}, not within one unit")
    return PeriodicPattern((len(prof.sites),), tuple(int(g == prof.ell) for g in prof.gaps))


def is_most_homogeneous(pattern: PeriodicPattern) -> bool:
    _one_dimensional(pattern)
    while 0 < pattern.n_occupied < pattern.volume:
        if not gap_profile(pattern).homogeneous:
            return False
        pattern = derivative(pattern)
    return True


def _as_fraction(rho) -> Fraction:
    if isinstance(rho, Fraction):
        return rho
    if isinstance(rho, int):
        return Fraction(rho)
    f = Fraction(rho).limit_denominator(1000)
    if abs(float(f) - float(rho)) > 1e-12:
        raise ValueError(f"density {rho} is not a rational with denominator <= 1000")
    return f


def structure_factor(pattern: PeriodicPattern, rho_e) -> complex:
    """Period average ``(1/N) sum_j exp(-2 pi i rho_e j) w_j``.

    ``N`` is the least common multiple of the pattern period (cell times
    multiplicity) and the denominator of ``rho_e``, so that the average is
    exact for any rational density.
    """
    _one_dimensional(pattern)
    rho = _as_fraction(rho_e)
    period = pattern.volume * pattern.multiplicity
    n = math.lcm(period, rho.denominator)
    q = pattern.volume
    total = 0j
    for j in range(n):
        if pattern.occ[j % q]:
            phase = (rho * j) % 1
            total += complex(math.cos(2 * math.pi * phase), -math.sin(2 * math.pi * phase))
    return total / n


def small_u_energy(rho_e, pattern: PeriodicPattern, U: float) -> float:
    """Per-site energy to order ``U^2 |log U|`` at electron density ``rho_e``.

    The ``O(U^2)`` constant is not included.
    """
    rho = _as_fraction(rho_e)
    if not 0 < rho < 1:
        raise ValueError(f"electron density must lie strictly between 0 and 1, got {rho}")
    if U > 0.5 / rho.denominator:
        warnings.warn(f"U={U} is not small compared to 1/q = 1/{rho.denominator}", stacklevel=2)
    sin = math.sin(math.pi * rho)
    energy = -(2 / math.pi) * sin - U * float(rho) * float(pattern.density)
    if U != 0:
        w = abs(structure_factor(pattern, rho))
        energy -= w * w / (4 * math.pi * sin) * U * U * abs(math.log(abs(U)))
    return energy


def _structure_magnitudes(q: int, p: int, r: int):
    phases = np.exp(-2j * np.pi * p * np.arange(q) / q)
    combos = list(itertools.combinations(range(q), r))
    combos = np.array(combos, dtype=np.intp).reshape(len(combos), r)
    return combos, np.abs(phases[combos].sum(axis=1)) / q


def _check_q(q: int, p: int):
    if q > STRUCTURE_FACTOR_CAP:
        raise ValueError(f"q={q} exceeds the brute-force cap of {STRUCTURE_FACTOR_CAP}")
    Filling(p, q)


def maximize_structure_factor(q: int, p: int, r: int) -> list[PeriodicPattern]:
    """All period-``q`` patterns with ``r`` particles maximizing ``|w(p/q)|``.

    One canonical representative per translation/reflection class.
    """
    _check_q(q, p)
    if not 0 <= r <= q:
        raise ValueError(f"r={r} outside [0, {q}]")
    combos, mags = _structure_magnitudes(q, p, r)
    best = mags.max()
    found = {PeriodicPattern.from_sites(q, combos[i]).canonical() for i in np.flatnonzero(mags >= best - SMALL_U_TIE)}
    return sorted(found, key=lambda pat: pat.occ)


def max_structure_factor(q: int, p: int) -> list[float]:
    """``M(r) = max |w(p/q)|`` over period-``q`` patterns with ``r`` particles, ``r = 0 .. q``."""
    _check_q(q, p)
    return [float(_structure_magnitudes(q, p, r)[1].max()) for r in range(q + 1)]


def structure_factor_window(q: int, p: int) -> tuple[int, int, list[float]]:
    """Empirical ``(r1, r2)``: the outermost interior vertices of the upper concave hull of ``M(r)``.

    Between two hull vertices a mixture of the neighbouring pure patterns
    does at least as well as any single pattern, so only the vertices are
    candidates for strict maximizers.
    """
    m = max_structure_factor(q, p)
    hull: list[int] = []
    for r in range(q + 1):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b unless it lies strictly above the chord from a to r
            if (m[b] - m[a]) * (r - a) - (m[r] - m[a]) * (b - a) <= SMALL_U_TIE:
                hull.pop()
            else:
                break
        hull.append(r)
    interior = [r for r in hull if 0 < r < q]
    if not interior:
        raise ValueError(f"no interior hull vertex for q={q}, p={p}")
    return interior[0], interior[-1], m


# ---------------------------------------------------------------------------
# two-particle threshold on a long open chain

def _chain_lowest(length: int, ions, U: float, count: int) -> float:
    diag = np.zeros(length)
    diag[list(ions)] = -U
    vals = eigvalsh_tridiagonal(diag, -np.ones(length - 1), select="i", select_range=(0, count - 1))
    return float(np.sum(vals))


def single_ion_energy(U: float, chain_length: int = 400) -> float:
    """Bound-state level of one ion in the middle of an open chain (``-sqrt(4 + U^2)`` for long chains)."""
    return _chain_lowest(chain_length, [chain_length // 2], U, 1)


def molecule_energy_difference(U: float, chain_length: int = 400) -> float:
    """``E(two distant ions, 2 electrons) - E(adjacent ions, 2 electrons)``; negative when the pair splits."""
    L = chain_length
    separated = _chain_lowest(L, [L // 4, 3 * L // 4], U, 2)
    bound = _chain_lowest(L, [L // 2 - 1, L // 2], U, 2)
    return separated - bound


def molecule_threshold(chain_length: int = 400, U_grid=(1.0, 1.3), xtol: float = 1e-10) -> float:
    if chain_length < 200:
        raise ValueError("chain_length must be at least 200")
    lo, hi = float(min(U_grid)), float(max(U_grid))
    f_lo = molecule_energy_difference(lo, chain_length)
    f_hi = molecule_energy_difference(hi, chain_length)
    if f_lo * f_hi > 0:
        raise ValueError(f"no sign change of the energy difference on [{lo}, {hi}]")
    return float(bisect(molecule_energy_difference, lo, hi, args=(chain_length,), xtol=xtol))


# ---------------------------------------------------------------------------
# exhaustive ground states on rings

@dataclass(frozen=True, eq=False)
class Theorem2Result:
    p: int
    q: int
    U: float
    periods: int
    lattice: Lattice
    expected: Configuration
    minimizers: list
    energy: float

    @property
    def match(self) -> bool:
        return [c.occ for c in self.minimizers] == [self.expected.canonical().occ]

    @property
    def witness(self) -> Configuration:
        return self.minimizers[0]

    def __bool__(self):
        return self.match


def default_periods(q: int, max_sites: int = 12) -> int:
    return max(1, max_sites // q)


def theorem2_check(p: int, q: int, U: float = 1000.0, periods: int | None = None,
                   cap: int = 24) -> Theorem2Result:
    """Compare the exact ground states at ``rho_e = rho_c = p/q`` with the tiled most-homogeneous pattern."""
    Filling(p, q)
    periods = default_periods(q) if periods is None else periods
    lat = build_lattice(1, q * periods)
    n = p * periods
    search = canonical_minimizers(lat, n, n, U, reduce_symmetry=True, cap=cap)
    expected = tile_pattern(most_homogeneous_config(p, q, p), lat)
    return Theorem2Result(p, q, float(U), periods, lat, expected, list(search.minimizers), search.energy)


@dataclass(frozen=True)
class StaircaseRow:
    p: int
    q: int
    r: int
    pattern: str
    structure_factor: float
    energy: float | None = None
    winner: str | None = None
    match: bool | None = None

    HEADER = ("p", "q", "r", "pattern", "structure_factor", "energy", "winner", "match")

    def values(self) -> tuple:
        return (self.p, self.q, self.r, self.pattern, self.structure_factor,
                "" if self.energy is None else self.energy,
                "" if self.winner is None else self.winner,
                "" if self.match is None else str(self.match).lower())


def staircase_row(p: int, q: int, r: int | None = None, theorem2: bool = False,
                  U: float = 1000.0, periods: int | None = None) -> StaircaseRow:
    r = p if r is None else r
    pat = most_homogeneous_config(p, q, r)
    w = abs(structure_factor(pat, Fraction(p, q)))
    if not theorem2:
        return StaircaseRow(p, q, r, pat.to_string(), w)
    if r != p:
        raise ValueError("the exhaustive check needs r == p")
    res = theorem2_check(p, q, U, periods)
    winner = PeriodicPattern(res.lattice.lengths, res.witness.occ).primitive().canonical()
    return StaircaseRow(p, q, r, pat.to_string(), w, res.energy / res.lattice.n_sites,
                        winner.to_string(), res.match)
