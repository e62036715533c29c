from itertools import product
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwork_semistable.dwork_core import (
    EMPTY,
    UNDETERMINED,
    BadDegree,
    DworkCharacter,
    LengthMismatch,
    SumNotZero,
    all_characters,
    brute_force_rank,
    conjugate_orbit,
    eigen_rank,
    hypothesis_report,
    validate_character,
)


def fermat_eigen_counts(N):
    """Oracle: bucket Fermat basis vectors w by how H_0 acts on them.

    H_0 is generated by the elements with xi_1 = -1, xi_j = +1 (exponents of
    zeta); w and a give the same character iff they agree on all of these.
    """
    counts = {}
    for w in product(range(1, N), repeat=N):
        if sum(w) % N:
            continue
        signature = tuple((w[j] - w[0]) % N for j in range(1, N))
        counts[signature] = counts.get(signature, 0) + 1
    return counts


def oracle_rank(chi, table):
    a = chi.a
    return table.get(tuple((a[j] - a[0]) % chi.N for j in range(1, chi.N)), 0)


@pytest.mark.parametrize(
    "N, a, n, shifts",
    [
        (5, (0, 0, 0, 0, 0), 4, (1, 2, 3, 4)),
        (5, (0, 0, 0, 1, 4), 2, (2, 3)),
        (3, (0, 1, 2), 0, ()),
    ],
)
def test_rank_pins(N, a, n, shifts):
    r = eigen_rank(validate_character(N, a))
    assert (r.rank, r.shifts) == (n, shifts)
    assert oracle_rank(r.character, fermat_eigen_counts(N)) == n


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_rank_matches_oracle_exhaustively(N):
    table = fermat_eigen_counts(N)
    for chi in all_characters(N):
        assert eigen_rank(chi).rank == oracle_rank(chi, table), chi


def test_brute_force_rank_agrees_with_test_oracle():
    table = fermat_eigen_counts(5)
    for chi in list(all_characters(5))[::7]:
        assert brute_force_rank(chi) == oracle_rank(chi, table)


def test_character_count():
    assert sum(1 for _ in all_characters(4)) == 4**3


@pytest.mark.parametrize(
    "N, a, exc",
    [(5, (0, 0, 0, 0, 1), SumNotZero), (5, (0, 0, 0, 0), LengthMismatch), (1, (0,), BadDegree)],
)
def test_invalid_characters(N, a, exc):
    with pytest.raises(exc):
        validate_character(N, a)


def test_exponents_are_reduced():
    assert validate_character(3, (4, -1, 0)).a == (1, 2, 0)
    with pytest.raises(ValueError):
        DworkCharacter(3, (4, 2, 0))


@st.composite
def characters(draw, max_n=12):
    N = draw(st.integers(2, max_n))
    head = draw(st.lists(st.integers(0, N - 1), min_size=N - 1, max_size=N - 1))
    return DworkCharacter(N, tuple(head) + (-sum(head) % N,))


@settings(max_examples=200, deadline=None)
@given(characters(), st.integers(0, 11), st.randoms(use_true_random=False), st.integers(1, 11))
def test_rank_invariances(chi, c, rnd, m):
    N, n = chi.N, eigen_rank(chi).rank
    shifted = validate_character(N, [x + c for x in chi.a])
    assert eigen_rank(shifted).rank == n
    perm = list(chi.a)
    rnd.shuffle(perm)
    assert eigen_rank(DworkCharacter(N, tuple(perm))).rank == n
    if gcd(m, N) == 1:
        assert eigen_rank(chi.scaled(m)).rank == n


def test_conjugates():
    fam = conjugate_orbit(validate_character(5, (0, 0, 0, 1, 4)))
    assert [m for m, _ in fam.members] == [1, 2, 3, 4]
    assert dict(fam.members)[2].a == (0, 0, 0, 2, 3)
    zero = conjugate_orbit(validate_character(5, (0,) * 5))
    assert len(zero.members) == 4 and all(c.a == (0,) * 5 for _, c in zero.members)
    four = conjugate_orbit(validate_character(4, (1, 1, 1, 1)))
    assert [(m, c.a) for m, c in four.members] == [(1, (1, 1, 1, 1)), (3, (3, 3, 3, 3))]


def test_conjugates_share_rank():
    for chi in list(all_characters(6))[::13]:
        ranks = {eigen_rank(c).rank for _, c in conjugate_orbit(chi).members}
        assert len(ranks) == 1


def test_hypothesis_report():
    rep = hypothesis_report(validate_character(5, (0,) * 5))
    assert rep.all_sufficient and all(e.rank == 4 for e in rep.entries)
    assert hypothesis_report(validate_character(5, (1, 2, 3, 4, 0))).entries[0].sufficient
    ones = hypothesis_report(validate_character(5, (1,) * 5))
    assert not ones.all_sufficient
    assert all(e.verdict == UNDETERMINED for e in ones.entries)
    empty = hypothesis_report(validate_character(3, (0, 1, 2)))
    assert all(e.verdict == EMPTY for e in empty.entries)
    js = rep.to_json()
    assert list(js) == ["character", "all_sufficient", "conjugates"]
