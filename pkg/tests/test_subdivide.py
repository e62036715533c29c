import json
import random
from fractions import Fraction
from itertools import product

import pytest
from scipy.spatial import ConvexHull

from dwork_semistable.fan import Polytope, Simplex, cone_to_chart, is_unimodular, LinearFunctional, normalized_volume
from dwork_semistable.subdivide import (
    BudgetExhausted,
    NoEFound,
    coned_simplex,
    coverage_sample,
    refine_to_unimodular,
    semistable_subdivision,
    triangulate,
    verify_subdivision,
)

EMPTY_TET = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 2)]


def pick_triangle_count(verts):
    """Oracle for lattice polygons: a unimodular triangulation has 2*area = 2i + b - 2 triangles."""
    hull = ConvexHull(verts)
    area2 = round(2 * hull.volume)
    xs = [v[0] for v in verts]
    ys = [v[1] for v in verts]
    pts = [p for p in product(range(min(xs), max(xs) + 1), range(min(ys), max(ys) + 1))]
    eqs = hull.equations
    on_boundary = inside = 0
    for p in pts:
        vals = [a * p[0] + b * p[1] + c for a, b, c in eqs]
        if max(vals) > 1e-9:
            continue
        if max(vals) > -1e-9:
            on_boundary += 1
        else:
            inside += 1
    assert area2 == 2 * inside + on_boundary - 2
    return area2


def test_triangulate_square_and_dilated_triangle():
    sq = triangulate(Polytope([(0, 0), (1, 0), (0, 1), (1, 1)]))
    assert len(sq) == 2 and all(is_unimodular(s) for s in sq)
    big = triangulate(Polytope([(0, 0), (2, 0), (0, 2)]))
    assert sum(normalized_volume(s) for s in big) == 4


def test_refine_splits_thin_triangle():
    out = refine_to_unimodular([Simplex([(0, 0), (1, 0), (1, 2)])])
    assert len(out) == 2 and all(is_unimodular(s) for s in out)


def test_empty_tetrahedron_needs_e2():
    with pytest.raises(BudgetExhausted):
        refine_to_unimodular([Simplex(EMPTY_TET)])
    sub = semistable_subdivision(Polytope(EMPTY_TET))
    assert sub.e == 2
    v = verify_subdivision(sub)
    assert v["all_unimodular"] and v["volume_ok"] and v["simplex_count"] == 16
    assert all(f["ok"] for f in v["facets"])
    c = coverage_sample(sub, 300, seed=3)
    assert c["gaps"] == c["overlaps"] == 0


def test_half_integral_segment():
    sub = semistable_subdivision(Polytope([(0,), (Fraction(3, 2),)]))
    assert sub.e == 2
    assert sorted(tuple(v[0] for v in s.vertices) for s in sub.simplices) == [(0, 1), (1, 2), (2, 3)]


def test_no_e_found_within_cap():
    with pytest.raises(NoEFound) as info:
        semistable_subdivision(Polytope(EMPTY_TET), max_e=1)
    assert info.value.attempts


def random_polygon(rng):
    while True:
        pts = [(rng.randint(0, 4), rng.randint(0, 4)) for _ in range(rng.randint(3, 6))]
        P = Polytope(pts)
        if P.dim == 2:
            return P


@pytest.mark.parametrize("seed", range(12))
def test_polygons_match_pick_oracle(seed):
    P = random_polygon(random.Random(seed))
    sub = semistable_subdivision(P)
    assert sub.e == 1
    verts = [tuple(int(x) for x in v) for v in P.vertices()]
    assert len(sub.simplices) == pick_triangle_count(verts)
    assert all(is_unimodular(s) for s in sub.simplices)
    c = coverage_sample(sub, 200, seed=seed)
    assert c["gaps"] == c["overlaps"] == 0


def test_deterministic_output():
    a = json.dumps(semistable_subdivision(Polytope(EMPTY_TET)).to_json(), sort_keys=True)
    b = json.dumps(semistable_subdivision(Polytope(EMPTY_TET)).to_json(), sort_keys=True)
    assert a == b


def test_coned_cells_give_charts():
    sub = semistable_subdivision(Polytope([(0, 0), (2, 0), (0, 1)]))
    for s in sub.simplices:
        gens, S, U = coned_simplex(sub, s)
        chart = cone_to_chart(Simplex(gens), LinearFunctional(S), LinearFunctional(U))
        assert chart.verify()
        assert len(chart.presentation.relations) == 1
