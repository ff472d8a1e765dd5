"""Finite lattices, classical configurations and periodic patterns.

Sites of a box with extents ``(L_1, ..., L_d)`` are indexed in row-major order:
in two dimensions site ``(i, j)`` has index ``i * L_2 + j``.  Configurations
serialize as '0'/'1' strings in the same order.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

DEFAULT_ENUMERATION_CAP = 24


class EnumerationCapError(ValueError):
    """Raised when an exhaustive enumeration would exceed its site cap."""


class BipartiteError(ValueError):
    """Raised when a sublattice sign function does not exist for the box."""


@dataclass(frozen=True)
class Lattice:
    """Finite box in Z^d with periodic or open boundary."""

    d: int
    lengths: tuple[int, ...]
    boundary: str = "periodic"

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if self.d not in (1, 2):
            raise ValueError(f"unsupported dimension {self.d}; use 1 or 2")
        if len(lengths) != self.d:
            raise ValueError(f"expected {self.d} extents, got {len(lengths)}")
        if any(v <= 0 for v in lengths):
            raise ValueError(f"extents must be positive, got {lengths}")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def n_sites(self) -> int:
        return math.prod(self.lengths)

    def coords(self, index: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(index, self.lengths))

    def index(self, coords: Sequence[int]) -> int:
        if self.periodic:
            coords = [c % n for c, n in zip(coords, self.lengths)]
        return int(np.ravel_multi_index(tuple(coords), self.lengths))

    @cached_property
    def bonds(self) -> tuple[tuple[int, int], ...]:
        """Unordered nearest-neighbour bonds ``(x, y)`` with ``x < y``, each once."""
        found = set()
        for x in range(self.n_sites):
            c = self.coords(x)
            for axis in range(self.d):
                n = self.lengths[axis]
                nxt = c[axis] + 1
                if nxt >= n:
                    if not self.periodic:
                        continue
                    nxt %= n
                shifted = list(c)
                shifted[axis] = nxt
                y = int(np.ravel_multi_index(tuple(shifted), self.lengths))
                if y != x:
                    found.add((min(x, y), max(x, y)))
        return tuple(sorted(found))

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n_sites)]
        for x, y in self.bonds:
            nbrs[x].append(y)
            nbrs[y].append(x)
        return tuple(tuple(sorted(row)) for row in nbrs)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_sites, self.n_sites))
        if self.bonds:
            b = np.array(self.bonds)
            a[b[:, 0], b[:, 1]] = 1.0
            a[b[:, 1], b[:, 0]] = 1.0
        a.flags.writeable = False
        return a

    @cached_property
    def neighbor_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Padded ``(n, 2d)`` neighbour array and the per-site degree."""
        z = 2 * self.d
        table = np.full((self.n_sites, z), -1, dtype=np.intc)
        deg = np.zeros(self.n_sites, dtype=np.intc)
        for x, row in enumerate(self.neighbors):
            table[x, : len(row)] = row
            deg[x] = len(row)
        return table, deg

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def bipartite(self) -> bool:
        if not self.periodic:
            return True
        return all(n % 2 == 0 or n == 1 for n in self.lengths)

    @cached_property
    def sublattice_signs(self) -> np.ndarray:
        """The sign function ``eps_x = (-1)^(sum of coordinates)``."""
        if not self.bipartite:
            raise BipartiteError(f"periodic box {self.lengths} has an odd extent")
        grid = np.indices(self.lengths).sum(axis=0).ravel()
        return np.where(grid % 2 == 0, 1, -1)

    @cached_property
    def translations(self) -> np.ndarray:
        """Site permutations for all lattice translations (identity only when open)."""
        if not self.periodic:
            return np.arange(self.n_sites)[None, :]
        grid = np.indices(self.lengths).reshape(self.d, -1)
        perms = []
        for shift in itertools.product(*(range(n) for n in self.lengths)):
            moved = [(grid[a] + shift[a]) % self.lengths[a] for a in range(self.d)]
            perms.append(np.ravel_multi_index(tuple(moved), self.lengths))
        return np.array(perms)

    @cached_property
    def point_operations(self) -> np.ndarray:
        """Site permutations for reflections and, on square boxes, 90-degree rotations."""
        grid = np.indices(self.lengths).reshape(self.d, -1)

        def reflect(axis):
            g = grid.copy()
            n = self.lengths[axis]
            g[axis] = (-g[axis]) % n if self.periodic else n - 1 - g[axis]
            return g

        ops = [grid] + [reflect(axis) for axis in range(self.d)]
        if self.d == 2:
            ops.append(np.stack([reflect(0)[0], reflect(1)[1]]))
            if self.lengths[0] == self.lengths[1]:
                ops += [g[::-1] for g in ops]
        perms = {tuple(np.ravel_multi_index(tuple(g), self.lengths)) for g in ops}
        return np.array(sorted(perms))

    @cached_property
    def symmetry_permutations(self) -> np.ndarray:
        """All compositions of translations and point operations, deduplicated."""
        composed = self.point_operations[:, self.translations].reshape(-1, self.n_sites)
        return np.unique(composed, axis=0)


@dataclass(frozen=True)
class Configuration:
    """Classical occupation ``omega_x`` in {0, 1} on every site of a lattice."""

    lattice: Lattice
    occ: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(v) for v in self.occ)
        object.__setattr__(self, "occ", occ)
        if len(occ) != self.lattice.n_sites:
            raise ValueError(f"configuration has {len(occ)} sites, lattice has {self.lattice.n_sites}")
        if any(v not in (0, 1) for v in occ):
            raise ValueError("occupations must be 0 or 1")

    @classmethod
    def from_string(cls, lattice: Lattice, bits: str) -> "Configuration":
        return cls(lattice, tuple(int(ch) for ch in bits.strip()))

    @classmethod
    def empty(cls, lattice: Lattice) -> "Configuration":
        return cls(lattice, (0,) * lattice.n_sites)

    @classmethod
    def full(cls, lattice: Lattice) -> "Configuration":
        return cls(lattice, (1,) * lattice.n_sites)

    @classmethod
    def chessboard(cls, lattice: Lattice, parity: int = 0) -> "Configuration":
        grid = np.indices(lattice.lengths).sum(axis=0).ravel()
        return cls(lattice, tuple(int(v) for v in (grid + parity + 1) % 2))

    def to_string(self) -> str:
        return "".join(map(str, self.occ))

    def __str__(self) -> str:
        return self.to_string()

    @property
    def array(self) -> np.ndarray:
        return np.array(self.occ, dtype=np.uint8)

    @property
    def n_c(self) -> int:
        return sum(self.occ)

    @property
    def density(self) -> Fraction:
        return Fraction(self.n_c, self.lattice.n_sites)

    def complement(self) -> "Configuration":
        return Configuration(self.lattice, tuple(1 - v for v in self.occ))

    def permuted(self, perm: Sequence[int]) -> "Configuration":
        """Configuration whose site ``i`` holds the occupation of site ``perm[i]``."""
        return Configuration(self.lattice, tuple(self.occ[p] for p in perm))

    def canonical(self) -> "Configuration":
        """Lexicographically least image under the lattice symmetry group."""
        images = self.array[self.lattice.symmetry_permutations]
        best = min(tuple(row) for row in images.tolist())
        return Configuration(self.lattice, best)

    def has_translation_symmetry(self) -> bool:
        """True when some non-trivial lattice translation leaves the configuration invariant."""
        arr = self.array
        return bool(np.any(np.all(arr[self.lattice.translations[1:]] == arr, axis=1)))


@dataclass(frozen=True)
class PeriodicPattern:
    """Unit cell of a configuration meant to tile Z^d.

    ``multiplicity`` is the number of cell repetitions averaged over by
    :func:`fklab.homogeneous.structure_factor`.
    """

    cell_lengths: tuple[int, ...]
    occ: tuple[int, ...]
    multiplicity: int = 1

    def __post_init__(self):
        cell = tuple(int(v) for v in self.cell_lengths)
        occ = tuple(int(v) for v in self.occ)
        object.__setattr__(self, "cell_lengths", cell)
        object.__setattr__(self, "occ", occ)
        if not cell or any(v <= 0 for v in cell):
            raise ValueError(f"invalid cell extents {cell}")
        if len(occ) != math.prod(cell):
            raise ValueError(f"cell {cell} needs {math.prod(cell)} occupations, got {len(occ)}")
        if any(v not in (0, 1) for v in occ):
            raise ValueError("occupations must be 0 or 1")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be a positive integer")

    @classmethod
    def from_string(cls, bits: str, cell_lengths: Sequence[int] | None = None, multiplicity: int = 1):
        bits = bits.strip()
        if cell_lengths is None:
            cell_lengths = (len(bits),)
        return cls(tuple(cell_lengths), tuple(int(ch) for ch in bits), multiplicity)

    @classmethod
    def from_sites(cls, period: int, sites: Sequence[int]) -> "PeriodicPattern":
        occ = [0] * period
        for s in sites:
            occ[s % period] = 1
        return cls((period,), tuple(occ))

    @property
    def d(self) -> int:
        return len(self.cell_lengths)

    @property
    def volume(self) -> int:
        return math.prod(self.cell_lengths)

    @property
    def n_occupied(self) -> int:
        return sum(self.occ)

    @property
    def density(self) -> Fraction:
        return Fraction(self.n_occupied, self.volume)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.occ) if v)

    def to_string(self) -> str:
        return "".join(map(str, self.occ))

    @property
    def label(self) -> str:
        if self.d == 1:
            return self.to_string()
        return "x".join(map(str, self.cell_lengths)) + ":" + self.to_string()

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "cell_lengths": list(self.cell_lengths),
            "occ": self.to_string(),
            "n": self.multiplicity,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PeriodicPattern":
        return cls.from_string(data["occ"], data["cell_lengths"], data.get("n", 1))

    def key(self) -> tuple:
        """Hashable identity modulo translation, reflection and rotation."""
        if self.d == 1:
            return (1, self.primitive().canonical().occ)
        side = int(np.lcm(*self.cell_lengths))
        lat = Lattice(2, (side, side), "periodic")
        return (2, side, tile_pattern(self, lat).canonical().occ)

    def equivalent(self, other: "PeriodicPattern") -> bool:
        """Equality modulo translation, reflection and (square cells) rotation."""
        if self.d != other.d:
            return False
        if self.d == 1:
            side = (int(np.lcm(self.volume, other.volume)),)
        else:
            side = (int(np.lcm.reduce([*self.cell_lengths, *other.cell_lengths])),) * 2
        lat = Lattice(self.d, side, "periodic")
        return tile_pattern(self, lat).canonical() == tile_pattern(other, lat).canonical()

    def primitive(self) -> "PeriodicPattern":
        """The same one-dimensional pattern on its shortest period."""
        if self.d != 1:
            return self
        q = self.volume
        for t in range(1, q + 1):
            if q % t == 0 and all(self.occ[i] == self.occ[i % t] for i in range(q)):
                return PeriodicPattern((t,), self.occ[:t], self.multiplicity)
        return self

    def canonical(self) -> "PeriodicPattern":
        """Lexicographically least cell under translations and reflections of the cell."""
        lat = Lattice(self.d, self.cell_lengths, "periodic")
        conf = Configuration(lat, self.occ).canonical()
        return PeriodicPattern(self.cell_lengths, conf.occ, self.multiplicity)


def build_lattice(d: int, lengths: Sequence[int] | int, boundary: str = "periodic") -> Lattice:
    """Construct a ``d``-dimensional box; a bare integer extent is repeated ``d`` times."""
    if isinstance(lengths, (int, np.integer)):
        lengths = (int(lengths),) * d
    return Lattice(d, tuple(lengths), boundary)


def tile_pattern(pattern: PeriodicPattern, lattice: Lattice) -> Configuration:
    """Repeat a unit cell over a periodic box whose extents are multiples of the cell."""
    if not lattice.periodic:
        raise ValueError("patterns tile periodic boxes only")
    if pattern.d != lattice.d:
        raise ValueError(f"pattern dimension {pattern.d} != lattice dimension {lattice.d}")
    for n, c in zip(lattice.lengths, pattern.cell_lengths):
        if n % c:
            raise ValueError(f"extent {n} is not a multiple of the cell extent {c}")
    cell = np.array(pattern.occ, dtype=np.uint8).reshape(pattern.cell_lengths)
    reps = [n // c for n, c in zip(lattice.lengths, pattern.cell_lengths)]
    return Configuration(lattice, tuple(np.tile(cell, reps).ravel().tolist()))


def boundary_count(config: Configuration) -> int:
    """Number of ordered neighbour pairs ``(x, y)`` with ``x`` occupied and ``y`` empty.

    Equals the number of bonds joining sites of different occupation.
    """
    bonds = config.lattice.bonds
    if not bonds:
        return 0
    b = np.array(bonds)
    occ = config.array
    return int(np.count_nonzero(occ[b[:, 0]] != occ[b[:, 1]]))


def boundary_density(config: Configuration) -> float:
    return boundary_count(config) / config.lattice.n_sites


def boundary_counts(lattice: Lattice, occ_rows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`boundary_count` over rows of occupations."""
    occ_rows = np.asarray(occ_rows)
    if not lattice.bonds:
        return np.zeros(len(occ_rows), dtype=np.int64)
    b = np.array(lattice.bonds)
    return np.count_nonzero(occ_rows[:, b[:, 0]] != occ_rows[:, b[:, 1]], axis=1)


class SymmetryKind(enum.Enum):
    CLASSICAL_HOLE = "classical_hole"
    ELECTRON_HOLE = "electron_hole"
    JOINT_HOLE = "joint_hole"


@dataclass(frozen=True)
class SymmetryImage:
    """Transformed state together with the energy offset it carries.

    ``canonical_shift`` satisfies ``E^{U'}(n_e', config') = E^U(n_e, config) + canonical_shift``
    for the canonical ground-state energies, and ``gc_shift`` the analogous
    relation for the grand-canonical energies at ``(mu_e', mu_c')``.
    """

    kind: SymmetryKind
    config: Configuration
    U: float
    mu_e: float
    mu_c: float
    n_e: int
    canonical_shift: float
    gc_shift: float
    signs: np.ndarray | None = field(default=None, compare=False)


def symmetry_transform(kind, config: Configuration, U: float, mu_e: float = 0.0,
                       mu_c: float = 0.0, n_e: int = 0) -> SymmetryImage:
    """Apply one of the three particle-hole transformations.

    classical_hole
        ``omega -> 1 - omega``, ``U -> -U``, ``(mu_e, mu_c) -> (mu_e + U, -mu_c)``.
    electron_hole
        ``n_e -> |L| - n_e``, ``U -> -U``, ``(mu_e, mu_c) -> (-mu_e, mu_c + U)``;
        needs a bipartite box.
    joint_hole
        both of the above: ``(omega, n_e) -> (1 - omega, |L| - n_e)`` at fixed ``U``,
        ``(mu_e, mu_c) -> (-mu_e - U, -mu_c - U)``.
    """
    kind = SymmetryKind(kind)
    lat = config.lattice
    size = lat.n_sites
    n_c = config.n_c
    if not 0 <= n_e <= size:
        raise ValueError(f"n_e={n_e} outside [0, {size}]")

    if kind is SymmetryKind.CLASSICAL_HOLE:
        return SymmetryImage(kind, config.complement(), -U, mu_e + U, -mu_c, n_e,
                             canonical_shift=U * n_e, gc_shift=mu_c * size)

    signs = lat.sublattice_signs  # raises BipartiteError
    if kind is SymmetryKind.ELECTRON_HOLE:
        return SymmetryImage(kind, config, -U, -mu_e, mu_c + U, size - n_e,
                             canonical_shift=U * n_c, gc_shift=size * mu_e, signs=signs)

    return SymmetryImage(kind, config.complement(), U, -mu_e - U, -mu_c - U, size - n_e,
                         canonical_shift=U * (n_e + n_c - size),
                         gc_shift=size * (mu_e + mu_c + U), signs=signs)


def _code_weights(n: int) -> np.ndarray:
    # site 0 is the most significant bit, so integer order is lexicographic order
    return (1 << np.arange(n - 1, -1, -1, dtype=np.int64)).astype(np.int64)


def occupation_chunks(lattice: Lattice, n_c: int | None = None, reduce_symmetry: bool = False,
                      cap: int = DEFAULT_ENUMERATION_CAP, chunk: int = 8192) -> Iterator[np.ndarray]:
    """Stream configurations as ``uint8`` arrays of shape ``(rows, n_sites)``."""
    n = lattice.n_sites
    if n > cap:
        raise EnumerationCapError(f"{n} sites exceeds the enumeration cap of {cap}")
    if n_c is not None and not 0 <= n_c <= n:
        raise ValueError(f"n_c={n_c} outside [0, {n}]")
    weights = _code_weights(n)
    perms = lattice.symmetry_permutations if reduce_symmetry else None

    def rows():
        if n_c is None:
            for lo in range(0, 1 << n, chunk):
                codes = np.arange(lo, min(lo + chunk, 1 << n), dtype=np.int64)
                yield ((codes[:, None] & weights[None, :]) != 0).astype(np.uint8)
        else:
            combos = itertools.combinations(range(n), n_c)
            while True:
                block = list(itertools.islice(combos, chunk))
                if not block:
                    return
                out = np.zeros((len(block), n), dtype=np.uint8)
                if n_c:
                    idx = np.array(block)
                    out[np.arange(len(block))[:, None], idx] = 1
                yield out

    for block in rows():
        if perms is not None:
            own = block.astype(np.int64) @ weights
            images = block[:, perms].astype(np.int64) @ weights
            block = block[own == images.min(axis=1)]
        if len(block):
            yield block


def enumerate_configurations(lattice: Lattice, n_c: int | None = None, reduce_symmetry: bool = False,
                             cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Configuration]:
    """Yield every configuration (optionally with ``n_c`` particles).

    With ``reduce_symmetry`` exactly one representative per orbit of the
    lattice symmetry group is produced: the lexicographically least member.
    """
    for block in occupation_chunks(lattice, n_c, reduce_symmetry, cap):
        for row in block.tolist():
            yield Configuration(lattice, tuple(row))


def orbit(config: Configuration) -> set[tuple[int, ...]]:
    images = config.array[config.lattice.symmetry_permutations]
    return {tuple(row) for row in images.tolist()}
