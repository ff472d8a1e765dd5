import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fklab.lattice import Configuration, PeriodicPattern, build_lattice, tile_pattern
from fklab.large_u import (expansion_energy, expansion_terms, gamma_estimate, nn_effective_energy,
                           remainder_bound)
from fklab.spectral import canonical_energy, spectrum_of

RING4 = build_lattice(1, 4)


def exact(conf, U):
    return canonical_energy(spectrum_of(conf, U), conf.n_c)


def test_chessboard_second_order():
    U = 20.0
    k2 = expansion_terms(Configuration.chessboard(RING4), U, 2)
    assert len(k2) == 1
    assert k2[0].walk_counts == {1: 8}
    assert k2[0].contribution == pytest.approx(-4 / U)
    assert expansion_energy(Configuration.chessboard(RING4), U, 2) == pytest.approx(-40.2)


def test_chessboard_second_order_against_exact():
    conf = Configuration.chessboard(RING4)
    fourth = expansion_terms(conf, 20.0, 4)[-1].contribution
    assert abs(exact(conf, 20.0) - expansion_energy(conf, 20.0, 2)) < 1.5 * abs(fourth)
    assert abs(exact(conf, 20.0) - expansion_energy(conf, 20.0, 4)) < 1e-4


@pytest.mark.parametrize("lat", [build_lattice(1, 10), build_lattice(2, 4)])
def test_odd_orders_vanish_on_bipartite(lat):
    conf = Configuration(lat, tuple(np.random.default_rng(1).integers(0, 2, lat.n_sites)))
    for t in expansion_terms(conf, 30.0, 5):
        if t.k % 2:
            assert t.contribution == 0.0


def test_odd_ring_has_odd_terms():
    conf = Configuration.from_string(build_lattice(1, 5), "10100")
    terms = {t.k: t for t in expansion_terms(conf, 30.0, 5)}
    assert terms[5].contribution != 0.0


def test_full_and_empty():
    lat = build_lattice(2, 4)
    for U in (9.0, 25.0):
        assert expansion_energy(Configuration.full(lat), U, 6) == -U * 16
        assert expansion_energy(Configuration.empty(lat), U, 6) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=10, max_size=10), st.floats(5, 50))
def test_second_order_equals_bond_term(bits, U):
    conf = Configuration(build_lattice(1, 10), tuple(bits))
    assert expansion_terms(conf, U, 2)[0].contribution == pytest.approx(nn_effective_energy(conf, U), abs=1e-14)


def test_nn_examples():
    assert nn_effective_energy(Configuration.chessboard(RING4), 10.0) == pytest.approx(-0.4)
    assert nn_effective_energy(Configuration.from_string(RING4, "1100"), 8.0) == pytest.approx(-0.25)
    assert nn_effective_energy(Configuration.full(RING4), 8.0) == 0.0
    assert nn_effective_energy(Configuration.empty(RING4), 8.0) == 0.0


def test_remainder_bound_examples():
    assert remainder_bound(8, 1, 2) == 1
    assert remainder_bound(20, 2, 5) == pytest.approx(20 / 12)
    assert remainder_bound(9, 2, 0) == 0
    with pytest.raises(ValueError):
        remainder_bound(4, 1, 3)


def test_gamma_examples():
    assert gamma_estimate(80, 1) == pytest.approx(0.1)
    assert gamma_estimate(16, 2) == pytest.approx(2.0)
    assert gamma_estimate(1e12, 2) < 1e-10
    with pytest.raises(ValueError):
        gamma_estimate(0, 1)


def test_domain_errors():
    conf = Configuration.chessboard(build_lattice(1, 12))
    with pytest.raises(ValueError):
        expansion_energy(conf, 4.0, 4)
    with pytest.raises(ValueError):
        expansion_energy(conf, 10.0, 1)
    with pytest.raises(ValueError):
        expansion_energy(conf, 10.0, 11)
    with pytest.raises(ValueError):
        expansion_energy(Configuration.chessboard(RING4), 10.0, 8)


def test_series_dominated_by_bound():
    rng = np.random.default_rng(7)
    for lat in (build_lattice(1, 12), build_lattice(2, 4)):
        for _ in range(5):
            conf = Configuration(lat, tuple(rng.integers(0, 2, lat.n_sites)))
            U = 4 * lat.d + 1.5
            bound = remainder_bound(U, lat.d, conf.n_c)
            assert abs(exact(conf, U) + U * conf.n_c) <= bound + 1e-12
            assert abs(expansion_energy(conf, U, 6) + U * conf.n_c) <= bound + 1e-12


@pytest.mark.parametrize("cell", ["01", "001"])
def test_truncation_error_contracts(cell):
    conf = tile_pattern(PeriodicPattern.from_string(cell), build_lattice(1, 12))
    errs = [abs(exact(conf, U) - expansion_energy(conf, U, 4)) for U in (20.0, 40.0)]
    # leading omitted order is 6, so doubling U should gain about 2^5
    assert errs[1] <= errs[0] / 4


def test_term_rows():
    term = expansion_terms(Configuration.chessboard(RING4), 10.0, 2)[0]
    rows = list(term.rows())
    assert rows == [(2, 1, 8, pytest.approx(-0.4))]


def test_per_site():
    conf = Configuration.chessboard(build_lattice(1, 12))
    assert expansion_energy(conf, 20.0, 4, per_site=True) == pytest.approx(expansion_energy(conf, 20.0, 4) / 12)
