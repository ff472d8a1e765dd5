"""One-body Hamiltonian, its spectrum, and the energies built from it.

The electrons are free fermions in the external potential of the classical
particles, so every many-body quantity is a function of the eigenvalues of
the ``|L| x |L|`` matrix ``h = -t - U diag(omega)``.  The band dispersion used
for infinite-volume integrals is the one of that matrix,
``eps(k) = -2 sum_nu cos k_nu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import brentq

from .lattice import Configuration, Lattice


class EigensolverError(RuntimeError):
    """The dense symmetric eigensolver failed or produced inaccurate pairs."""


@dataclass(frozen=True, eq=False)
class OneBodyMatrix:
    matrix: np.ndarray
    lattice: Lattice
    config: Configuration
    U: float

    @property
    def size(self) -> int:
        return self.lattice.n_sites


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues of ``h(omega)`` with their provenance."""

    eigenvalues: np.ndarray
    lattice: Lattice
    config: Configuration
    U: float

    @property
    def n_sites(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_c(self) -> int:
        return self.config.n_c

    def __len__(self):
        return len(self.eigenvalues)

    def to_csv(self) -> str:
        lines = ["index,eigenvalue"]
        lines += [f"{i},{v!r}" for i, v in enumerate(self.eigenvalues.tolist())]
        return "\n".join(lines) + "\n"

    def window_violations(self, tol: float = 1e-9) -> list[int]:
        """Indices of eigenvalues outside their closed window (``U >= 0`` only)."""
        d = self.lattice.d
        U = self.U
        bad = []
        for j, lam in enumerate(self.eigenvalues):
            if j < self.n_c:
                lo, hi = -U - 2 * d, -U + 2 * d
            else:
                lo, hi = -2 * d, 2 * d
            if lam < lo - tol or lam > hi + tol:
                bad.append(j)
        return bad


@dataclass(frozen=True)
class EnsemblePoint:
    beta: float
    mu_e: float
    mu_c: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def build_one_body(lattice: Lattice, config: Configuration, U: float) -> OneBodyMatrix:
    if config.lattice != lattice:
        raise ValueError("configuration is defined on a different lattice")
    h = -np.array(lattice.adjacency) - U * np.diag(config.array.astype(float))
    return OneBodyMatrix(h, lattice, config, float(U))


def eigenvalues(matrix: OneBodyMatrix, check_residual: bool = False, tol: float = 1e-9) -> Spectrum:
    """Sorted spectrum of a one-body matrix.

    With ``check_residual`` the eigenvectors are computed as well and every
    pair must satisfy ``|h v - lam v| <= tol * |h|``.
    """
    h = matrix.matrix
    try:
        if check_residual:
            vals, vecs = np.linalg.eigh(h)
            norm = max(abs(vals[0]), abs(vals[-1]), 1.0)
            resid = np.linalg.norm(h @ vecs - vecs * vals, axis=0)
            if not np.all(resid <= tol * norm):
                raise EigensolverError(f"eigenpair residual {resid.max():.3e} exceeds {tol * norm:.3e}")
        else:
            vals = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise EigensolverError("non-finite eigenvalues")
    vals = np.sort(vals)
    vals.flags.writeable = False
    return Spectrum(vals, matrix.lattice, matrix.config, matrix.U)


def spectrum_of(config: Configuration, U: float) -> Spectrum:
    return eigenvalues(build_one_body(config.lattice, config, U))


def batch_eigenvalues(lattice: Lattice, occ_rows: np.ndarray, U: float) -> np.ndarray:
    """Ascending spectra for many configurations at once, shape ``(rows, n_sites)``."""
    occ_rows = np.asarray(occ_rows, dtype=float)
    n = lattice.n_sites
    h = np.broadcast_to(-np.array(lattice.adjacency), (len(occ_rows), n, n)).copy()
    idx = np.arange(n)
    h[:, idx, idx] = -U * occ_rows
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc


def precise_canonical_energy(config: Configuration, U: float, n_e: int, dps: int = 50) -> mpmath.mpf:
    """Canonical energy in extended precision, for resolving near-degenerate minima."""
    with mpmath.workdps(dps):
        h = mpmath.matrix(build_one_body(config.lattice, config, U).matrix.tolist())
        vals = sorted(mpmath.eigsy(h, eigvals_only=True))
        return mpmath.fsum(vals[:n_e])


def canonical_energy(spectrum: Spectrum, n_e: int) -> float:
    """Ground-state energy of ``n_e`` electrons: the sum of the lowest eigenvalues."""
    if not 0 <= n_e <= spectrum.n_sites:
        raise ValueError(f"n_e={n_e} outside [0, {spectrum.n_sites}]")
    return float(np.sum(spectrum.eigenvalues[:n_e]))


def gc_energy(spectrum: Spectrum, n_c: int, mu_e: float, mu_c: float) -> float:
    """Zero-temperature grand-canonical energy ``-mu_c N_c + sum_{lam < mu_e} (lam - mu_e)``."""
    lam = spectrum.eigenvalues
    below = lam[lam < mu_e]
    return float(-mu_c * n_c + np.sum(below - mu_e))


def electron_density(spectrum: Spectrum, mu_e: float) -> float:
    return int(np.count_nonzero(spectrum.eigenvalues < mu_e)) / spectrum.n_sites


def free_energy(spectrum: Spectrum, n_c: int, point: EnsemblePoint) -> float:
    """``-mu_c N_c - (1/beta) log Z`` with ``log Z = sum_j log(1 + exp(-beta (lam_j - mu_e)))``.

    An infinite ``beta`` returns :func:`gc_energy`.
    """
    if math.isinf(point.beta):
        return gc_energy(spectrum, n_c, point.mu_e, point.mu_c)
    x = -point.beta * (spectrum.eigenvalues - point.mu_e)
    log_z = float(np.sum(np.logaddexp(0.0, x)))
    return -point.mu_c * n_c - log_z / point.beta


# ---------------------------------------------------------------------------
# infinite-volume band integrals
#
# The innermost momentum integral is done in closed form: for a single
# cosine band -2 cos k, the fraction of k below e and the energy carried by
# those states are elementary.  The remaining d - 1 directions use a midpoint
# rule on a uniform grid, refined by doubling until two grids agree to 1e-4.

_RICHARDSON_TOL = 1e-4
_MAX_RESOLUTION = 1 << 16


def _chain_filling(e):
    return np.arccos(np.clip(-np.asarray(e) / 2.0, -1.0, 1.0)) / np.pi


def _chain_energy(e):
    return -(2.0 / np.pi) * np.sin(np.pi * _chain_filling(e))


def _midpoints(n: int) -> np.ndarray:
    return -np.pi + (np.arange(n) + 0.5) * (2 * np.pi / n)


def _outer_shift(d: int, resolution: int) -> np.ndarray:
    """Contribution ``-2 sum cos k`` of the outer d - 1 directions on the midpoint grid."""
    if d == 1:
        return np.zeros(1)
    k = _midpoints(resolution)
    if d == 2:
        return -2.0 * np.cos(k)
    raise ValueError(f"unsupported dimension {d}")


def _density_at(d, e_f, resolution):
    shift = _outer_shift(d, resolution)
    return float(np.mean(_chain_filling(e_f - shift)))


def _energy_at(d, e_f, resolution):
    shift = _outer_shift(d, resolution)
    inner = e_f - shift
    return float(np.mean(shift * _chain_filling(inner) + _chain_energy(inner)))


def _invert_density(d, rho, resolution):
    if rho <= 0:
        return -2.0 * d
    if rho >= 1:
        return 2.0 * d
    return brentq(lambda e: _density_at(d, e, resolution) - rho, -2.0 * d, 2.0 * d, xtol=1e-14)


def _refined(fn, resolution):
    coarse = fn(resolution)
    while True:
        fine = fn(2 * resolution)
        if abs(fine - coarse) < _RICHARDSON_TOL:
            return fine
        resolution *= 2
        if resolution > _MAX_RESOLUTION:
            raise RuntimeError("band quadrature did not converge")
        coarse = fine


def _check_density(rho):
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"density {rho} outside [0, 1]")


def fermi_energy(d: int, rho_e: float, resolution: int = 256) -> float:
    """Fermi level of free lattice electrons at filling ``rho_e``."""
    _check_density(rho_e)
    return _refined(lambda n: _invert_density(d, rho_e, n), resolution)


def free_electron_energy_density(d: int, rho_e: float, resolution: int = 256) -> float:
    """Energy per site of free lattice electrons (empty configuration) at filling ``rho_e``."""
    _check_density(rho_e)
    if rho_e in (0.0, 1.0):
        return 0.0
    return _refined(lambda n: _energy_at(d, _invert_density(d, rho_e, n), n), resolution)


def full_config_energy_density(d: int, rho_e: float, U: float, resolution: int = 256) -> float:
    return free_electron_energy_density(d, rho_e, resolution) - U * rho_e


@dataclass(frozen=True, eq=False)
class CanonicalSearch:
    """Result of an exhaustive minimization of ``E(n_e, omega)`` at fixed ``N_c``.

    ``configs`` and ``energies`` list every configuration examined (orbit
    representatives when the search was symmetry reduced).
    """

    lattice: Lattice
    n_c: int
    n_e: int
    U: float
    configs: list
    energies: np.ndarray
    minimizers: list
    energy: float

    @property
    def degenerate(self) -> bool:
        return len(self.minimizers) > 1


def canonical_minimizers(lattice: Lattice, n_c: int, n_e: int, U: float, reduce_symmetry: bool = True,
                         cap: int | None = None, screen: float = 1e-8, dps: int = 50,
                         refine_limit: int = 64) -> CanonicalSearch:
    """Exhaustively minimize the canonical energy over configurations with ``n_c`` particles.

    Energies are computed in double precision; every configuration within
    ``screen * max(1, |E_min|)`` of the minimum is re-evaluated with ``dps``
    significant digits, and the minimizers are those tying in that precision.
    More than ``refine_limit`` near-ties are reported as ties without refinement.
    """
    from .lattice import DEFAULT_ENUMERATION_CAP, occupation_chunks

    if not 0 <= n_e <= lattice.n_sites:
        raise ValueError(f"n_e={n_e} outside [0, {lattice.n_sites}]")
    cap = DEFAULT_ENUMERATION_CAP if cap is None else cap
    rows, energies = [], []
    for block in occupation_chunks(lattice, n_c, reduce_symmetry, cap, chunk=2048):
        spectra = batch_eigenvalues(lattice, block, U)
        energies.append(spectra[:, :n_e].sum(axis=1))
        rows.append(block)
    occ = np.concatenate(rows)
    energies = np.concatenate(energies)
    configs = [Configuration(lattice, tuple(r)) for r in occ.tolist()]

    best = energies.min()
    near = np.flatnonzero(energies <= best + screen * max(1.0, abs(best)))
    if len(near) == 1:
        return CanonicalSearch(lattice, n_c, n_e, float(U), configs, energies, [configs[near[0]]], float(best))
    if len(near) > refine_limit:
        return CanonicalSearch(lattice, n_c, n_e, float(U), configs, energies,
                               [configs[i] for i in near], float(best))
    precise = [precise_canonical_energy(configs[i], U, n_e, dps) for i in near]
    low = min(precise)
    with mpmath.workdps(dps):
        tie = mpmath.mpf(10) ** (-(dps // 2)) * max(1, abs(low))
        winners = [configs[i] for i, e in zip(near, precise) if e - low <= tie]
    return CanonicalSearch(lattice, n_c, n_e, float(U), configs, energies, winners, float(low))
