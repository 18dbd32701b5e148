import itertools
import math

import numpy as np
import pytest

from spinmix.fock import (A_0, A_M1, A_P1, B_0, B_M1, B_P1, EmptySectorError, OperatorExpr,
                          SectorViolationError, Term, apply_monomial, build_matrix,
                          commutator_norm, enumerate_sector, hop, number, number_sector,
                          reduced_basis, reduced_index_to_pair_label, schwinger_coeff,
                          species_number_matrices)


def brute_force_sector(N1, N2, m_tot):
    """Every 6-tuple in a box, filtered by the constraints."""
    out = []
    for occ in itertools.product(range(max(N1, N2) + 1), repeat=6):
        a, b = occ[:3], occ[3:]
        if sum(a) == N1 and sum(b) == N2 and (a[0] - a[2]) + (b[0] - b[2]) == m_tot:
            out.append(occ)
    return sorted(out)


@pytest.mark.parametrize("N1,N2,m", [(0, 0, 0), (1, 0, 1), (2, 2, 0), (3, 2, -1), (3, 3, 2), (4, 1, 0)])
def test_enumerate_matches_brute_force(N1, N2, m):
    assert list(enumerate_sector(N1, N2, m).states) == brute_force_sector(N1, N2, m)


def test_sector_sizes():
    assert len(enumerate_sector(0, 0, 0)) == 1
    assert len(enumerate_sector(2, 2, 0)) == 8
    # species count at magnetization m is floor((N-|m|)/2)+1
    expected = sum(((20 - abs(m)) // 2 + 1) ** 2 for m in range(-20, 21))
    assert expected == 1661
    assert len(enumerate_sector(20, 20, 0)) == 1661


def test_infeasible_sectors_raise():
    with pytest.raises(EmptySectorError):
        enumerate_sector(1, 1, 3)
    with pytest.raises(EmptySectorError):
        enumerate_sector(-1, 0, 0)


def test_index_round_trip_and_order():
    b = enumerate_sector(3, 4, 1)
    for i, s in enumerate(b.states):
        assert b.lookup(s) == i
    assert list(b.states) == sorted(b.states)
    assert b.lookup((9, 9, 9, 9, 9, 9)) is None


def test_apply_monomial_examples():
    amp, s = apply_monomial((), (A_0,), (0, 2, 0, 0, 0, 0))
    assert amp == pytest.approx(math.sqrt(2)) and s == (0, 1, 0, 0, 0, 0)
    amp, s = apply_monomial((A_M1,), (A_0,), (0, 1, 1, 0, 0, 0))
    assert amp == pytest.approx(math.sqrt(2)) and s == (0, 0, 2, 0, 0, 0)
    assert apply_monomial((), (B_P1,), (0, 0, 0, 0, 1, 0)) is None


def test_total_number_is_diagonal():
    total = OperatorExpr.zero()
    for m in range(6):
        total = total + number(m)
    b = enumerate_sector(2, 3, 1)
    M = build_matrix(total, b).toarray()
    assert np.array_equal(M, 5 * np.eye(len(b)))


def test_n0_diagonal():
    b = enumerate_sector(2, 2, 0)
    M = build_matrix(number(A_0), b).toarray()
    assert np.array_equal(np.diag(M), [s[A_0] for s in b.states])
    assert np.count_nonzero(M - np.diag(np.diag(M))) == 0


def test_sector_violation_names_term():
    with pytest.raises(SectorViolationError, match=r"a\^\+|A\+1|A0"):
        build_matrix(hop(A_P1, A_0), enumerate_sector(1, 1, 0))


def test_normal_ordering_commutator():
    # a a^+ = a^+ a + 1
    a = OperatorExpr.monomial(1.0, (), (A_0,))
    ad = OperatorExpr.monomial(1.0, (A_0,), ())
    prod = (a * ad).canonical()
    expected = (number(A_0) + OperatorExpr.monomial(1.0)).canonical()
    assert prod == expected


def test_hermiticity_check():
    assert (hop(A_0, A_M1) + hop(A_M1, A_0)).is_hermitian()
    assert not hop(A_0, A_M1).is_hermitian()


def test_term_adjoint_swaps_and_reverses():
    t = Term(2.0, (A_P1, B_M1), (A_0, B_0))
    assert t.adjoint() == Term(2.0, (B_0, A_0), (B_M1, A_P1))


@pytest.mark.parametrize("N", range(0, 11))
def test_ladder_matches_schwinger(N):
    # two-mode subspace (A0, A-1) with m = (n0 - n-1)/2
    states = [(0, N - j, j, 0, 0, 0) for j in range(N + 1)]
    for s in states:
        m = (s[A_0] - s[A_M1]) / 2
        hit = apply_monomial((A_M1,), (A_0,), s)
        if m == -N / 2:
            assert hit is None
            assert schwinger_coeff("A", "-", m, N) == 0.0
        else:
            assert hit[0] == pytest.approx(schwinger_coeff("A", "-", m, N), abs=1e-12)


def test_schwinger_examples():
    assert schwinger_coeff("A", "+", 0, 2) == pytest.approx(math.sqrt(2))
    assert schwinger_coeff("A", "+", 1, 2) == 0.0
    assert schwinger_coeff("B", "-", 0, 100) == pytest.approx(math.sqrt(51 * 50))
    with pytest.raises(ValueError):
        schwinger_coeff("A", "+", 2, 2)


def test_reduced_basis_and_labels():
    b = reduced_basis(4)
    assert b.states[0] == (0, 4, 0, 0, 4, 0)
    assert b.states[4] == (0, 0, 4, 4, 0, 0)
    assert reduced_index_to_pair_label(0, 4) == (-8, 8)
    assert reduced_index_to_pair_label(2, 4) == (0, 0)


def test_number_sector_and_conservation_matrices():
    b = number_sector(1, 1)
    assert len(b) == 9
    mats = species_number_matrices(b)
    assert np.array_equal(mats["N_A"].diagonal(), np.ones(9))
    H = build_matrix(hop(A_0, A_M1) + hop(A_M1, A_0), b)
    assert commutator_norm(H, mats["m_tot"]) > 0.5  # changes magnetization
    assert commutator_norm(H, mats["N_A"]) == 0.0
