import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from fklab import homogeneous as hom
from fklab.lattice import Configuration, PeriodicPattern, build_lattice
from fklab.spectral import canonical_energy, spectrum_of

STAIR = "100010010001001000100100"


def coprime_pairs(qmax):
    for q in range(2, qmax + 1):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                yield p, q


def test_stair_pattern_sites():
    pat = hom.most_homogeneous_config(7, 24, 7)
    assert pat.sites == (0, 4, 7, 11, 14, 18, 21)
    assert pat.to_string() == STAIR


def test_single_particle_patterns():
    assert hom.most_homogeneous_config(1, 3, 1).sites == (0,)
    assert hom.most_homogeneous_config(1, 2, 1).to_string() == "10"


def test_generation_errors():
    with pytest.raises(ValueError):
        hom.most_homogeneous_config(2, 4, 2)
    with pytest.raises(ValueError):
        hom.most_homogeneous_config(2, 5, 0)
    with pytest.raises(ValueError):
        hom.most_homogeneous_config(2, 5, 6)


def test_filling_decomposition():
    f = hom.Filling(7, 24)
    assert (f.ell, f.s) == (3, 4)
    assert hom.Filling(1, 5).s is None
    for p, q in coprime_pairs(30):
        f = hom.Filling(p, q)
        if p > 1:
            assert (f.ell + 1) * p - f.s == q
            assert 1 <= f.s <= p - 1 and math.gcd(f.s, p) == 1


def test_stair_gap_profile():
    prof = hom.gap_profile(PeriodicPattern.from_string(STAIR))
    assert prof.gaps == (3, 4, 3, 4, 3, 4, 3)
    assert prof.count(3) == 4 and prof.count(4) == 3
    assert sum(prof.gaps) == 24


def test_trivial_gap_profiles():
    assert hom.gap_profile(PeriodicPattern.from_string("10")).gaps == (2,)
    assert hom.gap_profile(PeriodicPattern.from_string("1")).gaps == (1,)
    with pytest.raises(ValueError):
        hom.gap_profile(PeriodicPattern.from_string("000"))


def test_derivatives():
    assert hom.derivative(PeriodicPattern.from_string(STAIR)).sites == (0, 2, 4, 6)
    assert hom.derivative(PeriodicPattern.from_string("10")).to_string() == "1"
    assert hom.derivative(PeriodicPattern.from_string("100")).to_string() == "1"
    with pytest.raises(ValueError):
        hom.derivative(PeriodicPattern.from_string("1100"))


def test_most_homogeneous_predicate():
    assert hom.is_most_homogeneous(hom.most_homogeneous_config(7, 24, 7))
    assert not hom.is_most_homogeneous(PeriodicPattern.from_string("1100"))
    assert hom.is_most_homogeneous(PeriodicPattern.from_string("10"))
    # homogeneous gaps whose derivative is not
    assert not hom.is_most_homogeneous(PeriodicPattern.from_string("10" * 3 + "100" * 3))


@pytest.mark.parametrize("p,q", list(coprime_pairs(30)))
def test_generated_patterns_properties(p, q):
    f = hom.Filling(p, q)
    k = hom.solutions(p, q, p)
    pat = hom.most_homogeneous_config(p, q, p)
    assert hom.is_most_homogeneous(pat)
    assert pat.n_occupied == p and k[0] == 0
    if p == 1:
        return
    s, ell = f.s, f.ell
    for j in range(s):
        assert (k[j] - ell) % q == k[j + p - s]
    for j in range(s, p):
        assert (k[j] - ell - 1) % q == k[j - s]
    prof = hom.gap_profile(pat)
    assert prof.count(ell) == s and prof.count(ell + 1) == p - s
    assert hom.derivative(pat).equivalent(hom.most_homogeneous_config(s, p, s))


def test_structure_factor_examples():
    assert abs(hom.structure_factor(PeriodicPattern.from_string("10"), Fraction(1, 2))) == pytest.approx(0.5)
    assert abs(hom.structure_factor(PeriodicPattern.from_string("1000"), 0.25)) == pytest.approx(0.25)
    assert abs(hom.structure_factor(PeriodicPattern.from_string("1"), Fraction(1, 2))) == pytest.approx(0, abs=1e-15)


def test_structure_factor_against_direct_sum():
    pat = PeriodicPattern.from_string("1011001")
    rho = Fraction(3, 7)
    direct = sum(cmath.exp(-2j * math.pi * 3 * j / 7) * v for j, v in enumerate(pat.occ)) / 7
    assert hom.structure_factor(pat, rho) == pytest.approx(direct, abs=1e-14)


def test_structure_factor_symmetries():
    rng = np.random.default_rng(5)
    for _ in range(20):
        occ = tuple(int(v) for v in rng.integers(0, 2, 9))
        pat = PeriodicPattern((9,), occ)
        ref = abs(hom.structure_factor(pat, Fraction(2, 9)))
        assert ref <= pat.density + 1e-12
        for shift in range(9):
            moved = PeriodicPattern((9,), occ[shift:] + occ[:shift])
            assert abs(hom.structure_factor(moved, Fraction(2, 9))) == pytest.approx(ref, abs=1e-13)
        flipped = PeriodicPattern((9,), occ[::-1])
        assert abs(hom.structure_factor(flipped, Fraction(2, 9))) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("p,q", [(1, 2), (2, 5), (3, 7), (5, 12)])
def test_full_pattern_has_no_structure(p, q):
    assert abs(hom.structure_factor(PeriodicPattern.from_string("1"), Fraction(p, q))) < 1e-14


def test_structure_factor_bad_density():
    with pytest.raises(ValueError):
        hom.structure_factor(PeriodicPattern.from_string("10"), math.pi / 10)


def test_small_u_examples():
    chess = PeriodicPattern.from_string("10")
    for rho in (Fraction(1, 3), Fraction(1, 2)):
        assert hom.small_u_energy(rho, chess, 0.0) == pytest.approx(-(2 / math.pi) * math.sin(math.pi * rho))
    U = 0.02
    expected = -2 / math.pi - 0.005 - (0.25 / (4 * math.pi)) * U * U * abs(math.log(U))
    assert hom.small_u_energy(Fraction(1, 2), chess, U) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        hom.small_u_energy(0, chess, U)
    with pytest.raises(ValueError):
        hom.small_u_energy(1, chess, U)


def test_small_u_warns_outside_regime():
    with pytest.warns(UserWarning):
        hom.small_u_energy(Fraction(1, 2), PeriodicPattern.from_string("10"), 0.4)


def test_small_u_against_long_ring():
    U = 0.02
    lat = build_lattice(1, 300)
    conf = Configuration.chessboard(lat)
    exact = canonical_energy(spectrum_of(conf, U), 150) / 300
    approx = hom.small_u_energy(Fraction(1, 2), PeriodicPattern.from_string("10"), U)
    assert abs(exact - approx) < 5 * U * U


def _brute_max(q, p, r):
    best, found = -1.0, []
    for sites in itertools.combinations(range(q), r):
        w = abs(sum(cmath.exp(-2j * math.pi * p * x / q) for x in sites)) / q
        if w > best + 1e-12:
            best, found = w, [sites]
        elif abs(w - best) <= 1e-12:
            found.append(sites)
    return best, {PeriodicPattern.from_sites(q, s).canonical().occ for s in found}


@pytest.mark.parametrize("q,p,r", [(7, 2, 3), (2, 1, 1), (4, 1, 2), (9, 4, 4), (11, 3, 5)])
def test_maximizers_against_brute_force(q, p, r):
    got = hom.maximize_structure_factor(q, p, r)
    _, ref = _brute_max(q, p, r)
    assert {pat.occ for pat in got} == ref


def test_maximizer_examples():
    (best,) = hom.maximize_structure_factor(7, 2, 3)
    assert best.equivalent(hom.most_homogeneous_config(2, 7, 3))
    (chess,) = hom.maximize_structure_factor(2, 1, 1)
    assert chess.equivalent(PeriodicPattern.from_string("10"))
    (block,) = hom.maximize_structure_factor(4, 1, 2)
    assert block.equivalent(hom.most_homogeneous_config(1, 4, 2))
    with pytest.raises(ValueError):
        hom.maximize_structure_factor(21, 2, 3)


@pytest.mark.parametrize("p,q", [(1, 3), (2, 5), (3, 7), (2, 9), (5, 11)])
def test_generated_pattern_maximizes_inside_window(p, q):
    r1, r2, m = hom.structure_factor_window(q, p)
    assert 0 < r1 <= r2 < q
    for r in range(r1, r2 + 1):
        pat = hom.most_homogeneous_config(p, q, r)
        assert abs(hom.structure_factor(pat, Fraction(p, q))) == pytest.approx(m[r], abs=1e-12)


def test_single_ion_level():
    assert hom.single_ion_energy(3.0) == pytest.approx(-math.sqrt(13), abs=1e-6)


def test_molecule_threshold():
    u_star = hom.molecule_threshold(400)
    assert 1.10 <= u_star <= 1.20
    assert hom.molecule_energy_difference(2.0) < 0
    assert hom.molecule_energy_difference(1.0) > 0


def test_molecule_threshold_errors():
    with pytest.raises(ValueError):
        hom.molecule_threshold(100)
    with pytest.raises(ValueError):
        hom.molecule_threshold(400, (1.5, 2.0))


@pytest.mark.parametrize("p,q,U,periods,cell", [
    (1, 3, 1000.0, 4, "100"),
    (1, 2, 8.0, 5, "10"),
    (2, 5, 1000.0, 2, None),
])
def test_exhaustive_ground_states(p, q, U, periods, cell):
    res = hom.theorem2_check(p, q, U, periods)
    assert res.match and bool(res)
    expected = PeriodicPattern.from_string(cell) if cell else hom.most_homogeneous_config(p, q, p)
    witness = PeriodicPattern(res.lattice.lengths, res.witness.occ)
    assert witness.equivalent(expected)


def test_staircase_rows():
    row = hom.staircase_row(2, 5)
    assert row.pattern == "10010" and row.energy is None
    assert row.values()[5:] == ("", "", "")
    full = hom.staircase_row(1, 3, theorem2=True)
    assert full.match is True and full.winner == "001"
    with pytest.raises(ValueError):
        hom.staircase_row(2, 5, 3, theorem2=True)
