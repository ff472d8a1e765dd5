import json
import math
from fractions import Fraction

import numpy as np
import pytest

from fklab.lattice import Configuration, PeriodicPattern, build_lattice, tile_pattern
from fklab.phase_diagram import (NONE_PERIODIC, SCAN_HEADER, PhaseCell, basic_candidates, canonical_consistency_check,
                                 canonical_hull, default_candidates, empty_is_ground_state, equal_mu_split,
                                 full_is_ground_state, gap_line_invariance_check, gc_scan, is_segregated,
                                 monotonicity_audit, one_dimensional_candidates, pattern_gc_energy_density,
                                 scan_to_csv, segregated_energy, segregation_check, square_lattice_ground_states,
                                 theorem1_upper_check, two_dimensional_candidates, winner_sets)
from fklab.spectral import free_electron_energy_density

EMPTY, FULL, CHESS = (PeriodicPattern.from_string(s) for s in ("0", "1", "10"))


def complement(p):
    return PeriodicPattern(p.cell_lengths, tuple(1 - v for v in p.occ))


def test_candidate_sets():
    one = one_dimensional_candidates()
    assert len(one) == 22
    assert len({p.key() for p in one}) == 22
    for basic in (EMPTY, FULL, CHESS):
        assert any(p.equivalent(basic) for p in one)
    two = two_dimensional_candidates()
    for pat in square_lattice_ground_states().values():
        assert any(p.density == pat.density and p.equivalent(pat) for p in two)
    assert len(basic_candidates(2)) == 3
    assert default_candidates(1) == one


def test_square_lattice_patterns_have_their_densities():
    for key, pat in square_lattice_ground_states().items():
        assert pat.density == Fraction(key)


def test_pattern_energy_examples():
    assert pattern_gc_energy_density(EMPTY, 2.0, -3.0, 1.7).energy == 0.0
    assert pattern_gc_energy_density(FULL, 2.0, -4.5, 0.8).energy == pytest.approx(-0.8)
    res = pattern_gc_energy_density(CHESS, 6.0, -3.0, -3.0, volume=[64, 128])
    assert res.finite_size_delta < 1e-4
    assert res.volumes == ((64,), (128,))


def test_pattern_energy_volume_errors():
    with pytest.raises(ValueError):
        pattern_gc_energy_density(PeriodicPattern.from_string("100"), 2.0, 0.0, 0.0, volume=64)


def test_richardson_extrapolation_formula():
    plain = pattern_gc_energy_density(CHESS, 1.0, -0.5, 0.0, volume=[60, 120])
    extra = pattern_gc_energy_density(CHESS, 1.0, -0.5, 0.0, volume=[60, 120], richardson=True)
    v0, v1 = plain.values
    assert extra.energy == pytest.approx(v1 + (v1 - v0) / 3)
    with pytest.raises(ValueError):
        pattern_gc_energy_density(CHESS, 1.0, -0.5, 0.0, volume=60, richardson=True)


def test_pattern_energy_concave_in_mu_e_linear_in_mu_c():
    pat = PeriodicPattern.from_string("1101")
    mus = np.linspace(-7, 3, 101)
    e = np.array([pattern_gc_energy_density(pat, 3.0, m, 0.0).energy for m in mus])
    assert np.all(np.diff(e, 2) <= 1e-12)
    c = [pattern_gc_energy_density(pat, 3.0, -1.0, mc).energy for mc in (0.0, 1.0)]
    assert c[1] - c[0] == pytest.approx(-0.75)


def test_scan_examples():
    cells = gc_scan([0.0], [0.5, -2.5], one_dimensional_candidates(), 2.0)
    by_mc = {c.mu_c: c for c in cells}
    assert by_mc[0.5].patterns == (FULL,) and not by_mc[0.5].degenerate
    assert by_mc[-2.5].patterns == (EMPTY,)
    (cell,) = gc_scan([-3.0], [-3.0], one_dimensional_candidates(4), 6.0)
    assert cell.winner == CHESS.canonical().label
    assert cell.rho_e == (0.5,)


def test_scan_rejects_empty_candidates():
    with pytest.raises(ValueError):
        gc_scan([0.0], [0.0], [], 2.0)


def test_scan_ordering_and_parallel_merge():
    grid = [1.0, -1.0, 0.0]
    a = gc_scan(grid, grid, basic_candidates(1), 2.0)
    b = gc_scan(grid, grid, basic_candidates(1), 2.0, jobs=3)
    assert [(c.mu_e, c.mu_c) for c in a] == [(x, y) for x in (-1.0, 0.0, 1.0) for y in (-1.0, 0.0, 1.0)]
    assert scan_to_csv(a) == scan_to_csv(b)


def test_none_periodic_flag_needs_missing_end_states():
    (cell,) = gc_scan([-10.0], [-1.0], [CHESS], 2.0)
    assert cell.none_periodic and cell.winner == NONE_PERIODIC
    (cell,) = gc_scan([-10.0], [-1.0], basic_candidates(1), 2.0)
    assert not cell.none_periodic


def test_joint_hole_symmetry_of_winner_map():
    U = 3.0
    cands = one_dimensional_candidates(4)
    rng = np.random.default_rng(11)
    for me, mc in rng.uniform(-U - 3, 3, (12, 2)):
        (a,) = gc_scan([me], [mc], cands, U)
        (b,) = gc_scan([-me - U], [-mc - U], cands, U)
        assert {complement(p).key() for p in a.patterns} == {p.key() for p in b.patterns}


def test_gap_line_invariance():
    cands = one_dimensional_candidates(4)
    assert gap_line_invariance_check(6.0, [-3.5, -3.0, -2.5], 0.3, cands)
    assert gap_line_invariance_check(6.0, [-3.0], 0.0, cands)
    with pytest.raises(ValueError):
        gap_line_invariance_check(3.0, [-1.5], 0.1, cands)
    with pytest.raises(ValueError):
        gap_line_invariance_check(6.0, [-2.1], 0.3, cands)


def test_domain_predicates_against_scan():
    U = 6.0
    grid = np.linspace(-U - 4, 4, 23)
    cells = gc_scan(grid, grid, one_dimensional_candidates(4), U)
    checked = 0
    for c in cells:
        if full_is_ground_state(c.mu_e, c.mu_c, U, 1):
            assert c.has_full()
            checked += 1
        if empty_is_ground_state(c.mu_e, c.mu_c, U, 1):
            assert c.has_empty()
            checked += 1
    assert checked > 100
    assert full_is_ground_state(-3.0, -2.0, 10.0, 1)
    assert not full_is_ground_state(-3.0, -2.0, 6.0, 1)


def test_hull_examples():
    chess = canonical_hull(0.5, 0.5, one_dimensional_candidates(), 4.0)
    assert chess.pure and chess.pattern.equivalent(CHESS)
    seg = canonical_hull(0.25, 0.5, one_dimensional_candidates(), 30.0)
    assert {c.pattern.key() for c in seg.components} == {EMPTY.key(), FULL.key()}
    alpha_full = next(c.alpha for c in seg.components if c.pattern == FULL)
    assert alpha_full == pytest.approx(0.5, abs=1e-9)
    zero = canonical_hull(0.0, 0.0, one_dimensional_candidates(), 4.0)
    assert zero.pure and zero.pattern == EMPTY and zero.energy == pytest.approx(0.0, abs=1e-14)


def test_hull_json():
    spec = canonical_hull(0.25, 0.5, basic_candidates(1), 30.0)
    data = json.loads(spec.dumps())
    assert data["rho_e"] == 0.25 and data["rho_c"] == 0.5
    assert sum(c["alpha"] for c in data["components"]) == pytest.approx(1.0)


def test_hull_not_above_pure_candidates():
    cands = one_dimensional_candidates(4)
    for pat in cands:
        for rho_e in (0.25, 0.5):
            pure = canonical_hull(rho_e, float(pat.density), [pat], 3.0)
            mixed = canonical_hull(rho_e, float(pat.density), cands, 3.0)
            assert mixed.energy <= pure.energy + 1e-12


def test_hull_infeasible_and_errors():
    with pytest.raises(ValueError):
        canonical_hull(0.2, 0.3, [CHESS], 3.0)
    with pytest.raises(ValueError):
        canonical_hull(0.2, 1.5, [CHESS], 3.0)
    with pytest.raises(ValueError):
        canonical_hull(0.2, 0.5, [], 3.0)


def test_hull_duals_are_chemical_potentials():
    spec = canonical_hull(0.5, 0.5, one_dimensional_candidates(), 4.0)
    (cell,) = gc_scan([spec.mu_e], [spec.mu_c], one_dimensional_candidates(), 4.0)
    assert any(p.equivalent(CHESS) for p in cell.patterns)


def test_segregated_energy_examples():
    for U in (10.0, 30.0):
        assert segregated_energy(0.25, 0.5, U, 1) == pytest.approx(-1 / math.pi - U / 4, abs=1e-5)
        assert segregated_energy(0.3, 0.3, U, 1) == pytest.approx(-0.3 * U, abs=1e-9)
        assert segregated_energy(0.0, 0.4, U, 2) == 0.0
    with pytest.raises(ValueError):
        segregated_energy(0.5, 0.25, 10.0, 1)


@pytest.mark.parametrize("rho_c,rho_e", [(0.5, 0.25), (0.75, 0.25), (0.4, 0.1)])
def test_equal_mu_split_reproduces_segregated_energy(rho_c, rho_e):
    split = equal_mu_split([(rho_c, FULL), (1 - rho_c, EMPTY)], rho_e, 30.0, 960)
    assert split.energy == pytest.approx(segregated_energy(rho_e, rho_c, 30.0, 1), abs=1e-5)
    assert split.rho_e[1] == 0.0


def test_segregation_examples():
    res = segregation_check(build_lattice(1, 16), 4, 8, 30.0)
    assert res.segregated and res.minimizer.to_string() == "0000000011111111"
    assert res.margin_nonsegregated > 0
    chess = segregation_check(build_lattice(1, 10), 5, 5, 8.0)
    assert not chess.segregated
    assert chess.minimizer.canonical().occ == Configuration.chessboard(build_lattice(1, 10)).canonical().occ
    none = segregation_check(build_lattice(1, 12), 0, 6, 30.0)
    assert none.degenerate and none.energy == 0.0


def test_segregation_errors():
    with pytest.raises(ValueError):
        segregation_check(build_lattice(1, 10), 6, 5, 8.0)
    with pytest.raises(Exception):
        segregation_check(build_lattice(1, 22), 2, 11, 8.0)


def test_is_segregated():
    ring = build_lattice(1, 8)
    assert is_segregated(Configuration.from_string(ring, "10000111"))
    assert not is_segregated(Configuration.from_string(ring, "10100000"))
    torus = build_lattice(2, 4)
    assert is_segregated(Configuration.from_string(torus, "1100110000000000"))


def test_upper_bound_readings():
    ring = build_lattice(1, 16)
    block = theorem1_upper_check(Configuration.from_string(ring, "0000000011111111"), 4, 30.0)
    assert block.boundary == 2 and block.ok
    chess = theorem1_upper_check(Configuration.chessboard(ring), 4, 30.0)
    assert set(chess.holds) == {"full", "free"}
    full = theorem1_upper_check(Configuration.full(ring), 4, 30.0)
    assert full.boundary == 0 and abs(full.rhs) < 0.2
    with pytest.raises(ValueError):
        theorem1_upper_check(Configuration.chessboard(ring), 4, 3.0)


def test_audit_on_scan():
    grid = np.linspace(-6, 3, 19)
    assert monotonicity_audit(gc_scan(grid, grid, basic_candidates(1), 2.0)) == []


def _cell(me, mc, pat, rho_e):
    return PhaseCell(me, mc, (pat,), (rho_e,), 0.0, False)


def test_audit_flags_constructed_violation():
    cells = [_cell(0.0, 0.0, FULL, 0.5), _cell(0.0, 1.0, EMPTY, 0.5)]
    kinds = {v.kind for v in monotonicity_audit(cells)}
    assert "rho_c" in kinds and "full" in kinds


def test_audit_single_cell_and_shape():
    assert monotonicity_audit([_cell(0.0, 0.0, CHESS, 0.5)]) == []
    assert monotonicity_audit([]) == []
    with pytest.raises(ValueError):
        monotonicity_audit([_cell(0.0, 0.0, CHESS, 0.5), _cell(1.0, 1.0, CHESS, 0.5)])


def test_canonical_consistency_examples():
    cands = one_dimensional_candidates(4)
    assert canonical_consistency_check(CHESS, 6.0, -3.0, -3.0, cands)
    assert canonical_consistency_check(FULL, 2.0, 1.0, 1.0, cands)
    assert canonical_consistency_check(EMPTY, 2.0, -5.0, -5.0, cands)
    with pytest.raises(ValueError):
        canonical_consistency_check(CHESS, 2.0, -5.0, -5.0, cands)


def test_scan_csv():
    cells = gc_scan([0.0, 1.0], [0.5], basic_candidates(1), 2.0)
    lines = scan_to_csv(cells).splitlines()
    assert lines[0] == ",".join(SCAN_HEADER)
    assert len(lines) == 3
    fields = lines[1].split(",")
    assert fields[2] == "1" and fields[4] in ("true", "false")
    assert float(fields[3]) == cells[0].energy


def test_winner_sets_match_keys():
    cells = gc_scan([0.0], [0.5], basic_candidates(1), 2.0)
    assert winner_sets(cells) == [frozenset({FULL.key()})]


def test_two_dimensional_scan_point():
    (cell,) = gc_scan([-6.0], [-6.0], basic_candidates(2), 12.0)
    assert cell.patterns[0].equivalent(PeriodicPattern.from_string("1001", (2, 2)))
