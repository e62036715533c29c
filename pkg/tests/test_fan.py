from fractions import Fraction
from itertools import product

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from dwork_semistable.fan import (
    Cone,
    ConicalComplex,
    DegenerateSimplex,
    FunctionalNegativeOnCone,
    Lattice,
    LinearFunctional,
    NotStronglyConvex,
    NotUnimodular,
    Simplex,
    SNotOneOnGenerators,
    UDivisible,
    UNotUnit,
    cone_over,
    cone_to_chart,
    cross_section,
    is_unimodular,
    normalized_volume,
    split_cone,
)


def det_volume(verts):
    """Oracle for full-dimensional simplices: |det| of the edge matrix via sympy."""
    v0 = verts[0]
    return abs(sympy.Matrix([[a - b for a, b in zip(v, v0)] for v in verts[1:]]).det())


@pytest.mark.parametrize(
    "verts, vol",
    [
        ([(0, 0), (1, 0), (0, 1)], 1),
        ([(0, 0), (1, 0), (1, 2)], 2),
        ([(0, 0), (2, 0), (0, 2)], 4),
        ([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 2)], 2),
    ],
)
def test_normalized_volume_pins(verts, vol):
    assert normalized_volume(Simplex(verts)) == vol == det_volume(verts)


def test_lower_dimensional_volume_uses_affine_lattice():
    # segment from 0 to (2, 4): two lattice steps of (1, 2)
    assert normalized_volume(Simplex([(0, 0), (2, 4)])) == 2
    # triangle in the plane z = 1 of Z^3
    assert normalized_volume(Simplex([(0, 0, 1), (1, 0, 1), (0, 1, 1)])) == 1


def test_unimodularity():
    assert is_unimodular(Simplex([(0, 0), (1, 0), (0, 1)]))
    assert not is_unimodular(Simplex([(0, 0), (1, 0), (1, 2)]))
    assert not is_unimodular(Simplex([(0, 0), (Fraction(1, 2), 0), (0, 1)]))
    assert normalized_volume(Simplex([(0, 0), (Fraction(1, 2), 0), (0, 1)])) == Fraction(1, 2)


def test_degenerate_simplex():
    with pytest.raises(DegenerateSimplex):
        Simplex([(0, 0), (1, 1), (2, 2)])


def random_unimodular(rng, d):
    """Product of elementary integer matrices and a signed permutation."""
    M = np.eye(d, dtype=np.int64)
    for _ in range(3 * d):
        i, j = rng.choice(d, 2, replace=False)
        E = np.eye(d, dtype=np.int64)
        E[i, j] = rng.integers(-2, 3)
        M = M @ E
    P = np.eye(d, dtype=np.int64)[rng.permutation(d)] * rng.choice([-1, 1], d)[:, None]
    return M @ P


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6))
def test_volume_invariant_under_unimodular_maps(d, seed):
    rng = np.random.default_rng(seed)
    while True:
        verts = [tuple(int(x) for x in rng.integers(-3, 4, d)) for _ in range(d + 1)]
        if det_volume(verts) != 0:
            break
    A = random_unimodular(rng, d)
    assert round(abs(np.linalg.det(A))) == 1
    t = rng.integers(-5, 6, d)
    moved = [tuple(int(x) for x in A @ np.array(v) + t) for v in verts]
    assert normalized_volume(Simplex(moved)) == normalized_volume(Simplex(verts))


def test_subdivision_volumes_add_up():
    big = [(0, 0), (3, 0), (0, 3)]
    x = (1, 1)
    kids = [[x, big[1], big[2]], [big[0], x, big[2]], [big[0], big[1], x]]
    assert sum(normalized_volume(Simplex(k)) for k in kids) == normalized_volume(Simplex(big)) == 9


def test_cross_sections():
    L = Lattice(2)
    cs = cross_section(Cone(L, ((1, 0), (0, 1))), LinearFunctional((1, 1)))
    assert set(cs.vertices) == {(1, 0), (0, 1)}
    cs = cross_section(Cone(L, ((1, 0), (1, 2))), LinearFunctional((1, 0)))
    assert set(cs.vertices) == {(1, 0), (1, 2)}
    with pytest.raises(FunctionalNegativeOnCone):
        cross_section(Cone(L, ((1, 0), (-1, 2))), LinearFunctional((1, 0)))


def test_split_cone_section_has_f0_recession():
    c = split_cone([(0, 1, 0), (0, 1, 2)], 3)
    cs = cross_section(c, LinearFunctional((0, 1, 1)))
    assert cs.recession == ((1, 0, 0),)
    assert set(cs.vertices) == {(0, 1, 0), (0, Fraction(1, 3), Fraction(2, 3))}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(1, 4)), min_size=1, max_size=4, unique=True))
def test_section_then_cone_recovers_rays(gens):
    from math import gcd

    prim = {tuple(x // gcd(gcd(*g[:2]), g[2]) for x in g) for g in gens}
    try:
        c = Cone(Lattice(3), tuple(sorted(prim)))
    except NotStronglyConvex:
        return
    cs = cross_section(c, LinearFunctional((1, 1, 1)))
    assert set(cone_over(cs)) == set(c.generators)


def test_cone_validation():
    with pytest.raises(NotStronglyConvex):
        Cone(Lattice(2), ((1, 0), (-1, 0), (0, 1)))
    assert Cone(Lattice(2), ((1, 0), (0, 1), (1, 1))).dim == 2


_SYMS = {n: sympy.Symbol(n) for n in ("S", "U", "T1", "T2", "T3", "T1p", "T2p", "T3p")}


def expr(text):
    return sympy.sympify(text.replace("'", "p"), locals=_SYMS)


def _check_chart(chart, S, gens):
    pres = chart.presentation
    assert len(pres.relations) == 1
    assert all(S(g) == 1 for g in gens)
    assert chart.verify()
    return str(pres.relations[0])


def test_cone_to_chart_rank2_segment():
    S, U = LinearFunctional((1, 0)), LinearFunctional((0, 1))
    chart = cone_to_chart(Simplex([(1, 0)]), S, U)
    assert _check_chart(chart, S, [(1, 0)]) == "S*U - T1'"


def test_cone_to_chart_triangle_rank4():
    S, U = LinearFunctional((1, 1, 1, 0)), LinearFunctional((0, 0, 0, 1))
    gens = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)]
    rel = _check_chart(cone_to_chart(Simplex(gens), S, U), S, gens)
    assert sympy.expand(expr(rel) - expr("S*U - T1p*T2p*T3p")) == 0


def test_cone_to_chart_twist_reproduces_s():
    # S evaluates to 3 on the complementary direction: the twist shows up as U^3
    S, U = LinearFunctional((1, 0, 3)), LinearFunctional((0, 0, 1))
    chart = cone_to_chart(Simplex([(1, 0, 0), (1, 1, 0)]), S, U)
    assert chart.twist == 3
    st_ = chart.presentation.structure
    # S*U == T1' * T2' with T2' = T2
    assert sympy.simplify(expr(st_["S"]) * _SYMS["U"] - expr(st_["T1'"]) * _SYMS["T2"]) == 0


def test_cone_to_chart_errors():
    S, U = LinearFunctional((1, 0)), LinearFunctional((0, 1))
    with pytest.raises(NotUnimodular):
        cone_to_chart(Simplex([(0, 0), (1, 0), (1, 2)]), S, U)
    with pytest.raises(SNotOneOnGenerators):
        cone_to_chart(Simplex([(2, 1)]), S, U)
    with pytest.raises(UNotUnit):
        cone_to_chart(Simplex([(1, 1)]), S, U)
    with pytest.raises(UDivisible):
        cone_to_chart(Simplex([(1, 0, 0)]), LinearFunctional((1, 0, 0)), LinearFunctional((0, 2, 2)))


def test_complex_roundtrip_and_compatibility():
    data = {
        "rank": 3,
        "cones": [{"generators": [[1, 0, 0], [0, 1, 0], [0, 1, 2]]}, {"generators": [[1, 0, 0], [0, 1, 0], [0, 2, -1]]}],
        "functionals": {"S": [1, 1, 1], "U": [0, 0, 1]},
    }
    cx = ConicalComplex.from_json(data)
    assert cx.to_json() == data
    assert cx.face_compatibility() == []
    bad = ConicalComplex.from_json(
        {"rank": 2, "cones": [{"generators": [[1, 0], [1, 2]]}, {"generators": [[1, 1], [0, 1]]}]}
    )
    assert bad.face_compatibility()


def test_lattice_rank_must_be_positive():
    with pytest.raises(ValueError):
        Lattice(0)


def test_grid_volume_sum_oracle():
    # every unit square split along a diagonal gives 2 unimodular triangles
    total = 0
    for x, y in product(range(2), repeat=2):
        for tri in ([(x, y), (x + 1, y), (x, y + 1)], [(x + 1, y), (x + 1, y + 1), (x, y + 1)]):
            total += normalized_volume(Simplex(tri))
    assert total == normalized_volume(Simplex([(0, 0), (2, 0), (0, 2)])) + normalized_volume(
        Simplex([(2, 0), (2, 2), (0, 2)])
    )
