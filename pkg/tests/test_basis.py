"""Sector enumeration, initial states, and word encoding."""

import numpy as np
import pytest

from starkprobe import (
    Configuration,
    DomainError,
    LatticeSpec,
    centered_initial,
    enumerate_sector,
    neel_initial,
    single_site_initial,
)


def binomial_table(n_max):
    """Pascal's triangle, kept independent of math.comb."""
    rows = [[1]]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        rows.append([1] + [prev[k - 1] + prev[k] for k in range(1, n)] + [1])
    return rows


def test_enumerate_small_sector_exhaustive():
    b = enumerate_sector(3, 1)
    assert list(b.configs) == [0b001, 0b010, 0b100]


def test_enumerate_sector_size_four_choose_two():
    assert len(enumerate_sector(4, 2)) == 6


def test_enumerate_sector_size_against_pascal():
    table = binomial_table(17)
    assert len(enumerate_sector(17, 8)) == table[17][8] == 24310


@pytest.mark.parametrize("L,N", [(2, 0), (2, 2), (6, 3), (10, 4), (12, 6), (17, 8)])
def test_roundtrip_index_and_popcount(L, N):
    b = enumerate_sector(L, N)
    words = [int(w) for w in b.configs]
    assert all(w.bit_count() == N for w in words)
    assert words == sorted(words)
    assert len(set(words)) == len(words)
    for k, w in enumerate(words):
        assert b.state_index(w) == k


def test_sector_rejects_bad_excitation_count():
    with pytest.raises(DomainError):
        enumerate_sector(5, 6)
    with pytest.raises(DomainError):
        enumerate_sector(5, -1)


def test_sector_word_limit():
    with pytest.raises(DomainError):
        enumerate_sector(64, 1)


def test_neel_examples():
    assert neel_initial(6).sites == (1, 3, 5)
    assert neel_initial(7).sites == (1, 3, 5, 7)
    assert neel_initial(2).sites == (1,)


def test_centered_examples():
    assert centered_initial(7, 2).sites == (3, 5)
    assert centered_initial(7, 3).sites == (2, 4, 6)
    assert centered_initial(5, 1).sites == (3,)


def test_centered_requires_odd_and_fitting():
    with pytest.raises(DomainError):
        centered_initial(6, 2)
    with pytest.raises(DomainError):
        centered_initial(7, 5)  # pattern would spill past the ends


def test_centered_reflection_symmetric():
    for L in (5, 7, 9, 11, 13):
        for N in range(1, (L + 1) // 2 + 1):
            c = centered_initial(L, N)
            assert c.reflected() == c


def test_single_site():
    assert single_site_initial(100, 50).sites == (50,)
    assert single_site_initial(3, 2).word == 0b010
    with pytest.raises(DomainError):
        single_site_initial(3, 4)
    with pytest.raises(DomainError):
        LatticeSpec(1)


def test_configuration_validation_and_rendering():
    c = Configuration(0b010101, 6)
    assert str(c) == "1,0,1,0,1,0"
    assert c.site_sum() == 1 + 3 + 5
    with pytest.raises(DomainError):
        Configuration(1 << 6, 6)


def test_occupation_matrix_matches_words():
    b = enumerate_sector(6, 3)
    occ = b.occupation_matrix()
    for k in range(len(b)):
        np.testing.assert_array_equal(occ[k], b.configuration(k).occupations())
    np.testing.assert_array_equal(occ.sum(axis=1), 3)


def test_lattice_spec_invariants():
    with pytest.raises(DomainError):
        LatticeSpec(4, J=0.0)
    with pytest.raises(DomainError):
        LatticeSpec(4, J=-1.0)
    spec = LatticeSpec(4, 1.0, 0.2, 0.5)
    assert spec.with_h(0.7) == LatticeSpec(4, 1.0, 0.7, 0.5)
