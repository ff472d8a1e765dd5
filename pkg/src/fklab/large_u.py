"""Strong-coupling expansion of the canonical energy at ``N_e = N_c``.

For ``U > 4d`` the ground-state energy with as many electrons as classical
particles is ``-U N_c`` plus a convergent series in ``1/U``.  The order-``k``
coefficient is a signed, binomially weighted count of closed nearest-neighbour
walks of length ``k``, grouped by ``m``, the number of empty sites visited.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .kernels import closed_walk_counts
from .lattice import Configuration, boundary_count

DEFAULT_KMAX = 6
KMAX_CAP = 10


@dataclass(frozen=True)
class WalkTerm:
    """Order-``k`` contribution together with its walk counts per ``m``."""

    k: int
    contribution: float
    walk_counts: dict[int, int]
    U: float

    def rows(self):
        """``(k, m, walk_count, contribution)`` rows for the term table."""
        for m, count in sorted(self.walk_counts.items()):
            yield self.k, m, count, _weight(self.k, m) * count / (self.k * self.U ** (self.k - 1))


def _weight(k, m):
    return (-1) ** m * comb(k - 2, m - 1)


def _check(config: Configuration, U: float, kmax: int):
    lat = config.lattice
    if not U > 4 * lat.d:
        raise ValueError(f"expansion needs U > 4d = {4 * lat.d}, got U={U}")
    if kmax < 2:
        raise ValueError("kmax must be at least 2")
    if kmax > KMAX_CAP:
        raise ValueError(f"kmax={kmax} exceeds the cap of {KMAX_CAP}")
    if lat.periodic and any(n <= kmax / 2 for n in lat.lengths):
        raise ValueError(f"periodic extents {lat.lengths} too short for walks of length {kmax}")


def walk_histogram(config: Configuration, kmax: int, backend=None) -> np.ndarray:
    """``counts[k, m]`` of closed walks on the configuration's lattice."""
    lat = config.lattice
    table, deg = lat.neighbor_table
    return closed_walk_counts(table, deg, lat.adjacency, config.array, kmax, backend=backend)


def expansion_terms(config: Configuration, U: float, kmax: int = DEFAULT_KMAX, backend=None) -> list[WalkTerm]:
    """Series terms for orders ``2..kmax``; odd orders vanish on bipartite boxes."""
    _check(config, U, kmax)
    counts = walk_histogram(config, kmax, backend)
    terms = []
    for k in range(2, kmax + 1):
        by_m = {m: int(counts[k, m]) for m in range(1, k) if counts[k, m]}
        total = sum(_weight(k, m) * c for m, c in by_m.items())
        terms.append(WalkTerm(k, total / (k * U ** (k - 1)), by_m, float(U)))
    return terms


def expansion_energy(config: Configuration, U: float, kmax: int = DEFAULT_KMAX,
                     per_site: bool = False, backend=None) -> float:
    terms = expansion_terms(config, U, kmax, backend)
    energy = -U * config.n_c + sum(t.contribution for t in terms)
    return energy / config.lattice.n_sites if per_site else energy


def nn_effective_energy(config: Configuration, U: float) -> float:
    """Lowest-order effective interaction: ``-1/U`` per bond joining unlike occupations."""
    return -boundary_count(config) / U


def remainder_bound(U: float, d: int, n_c: int) -> float:
    """Bound ``2d N_c / (U - 4d)`` on the whole series beyond ``-U N_c``."""
    if not U > 4 * d:
        raise ValueError(f"bound needs U > 4d = {4 * d}, got U={U}")
    return 2 * d * n_c / (U - 4 * d)


def gamma_estimate(U: float, d: int) -> float:
    """Asymptotic ``8 d^2 / U`` surrogate for the interface-energy correction.

    Only the large-``U`` behaviour is known; this is an order-of-magnitude
    proxy, not a rigorous constant.
    """
    if not U > 0:
        raise ValueError("U must be positive")
    return 8 * d * d / U
