"""Acceptance criteria 1-9; a summary line per criterion is printed at the end of the run."""

import random
import time
from itertools import product

import pytest
import sympy

from dwork_semistable.charts import (
    atlas,
    h0_apply,
    h0_elements,
    naive_chart,
    special_fiber_shape,
    uk_chart,
    verify_chart_smoothness,
)
from dwork_semistable.dwork_core import all_characters, eigen_rank, validate_character
from dwork_semistable.fan import LinearFunctional, Polytope, Simplex, cone_to_chart, is_unimodular
from dwork_semistable.monodromy import (
    MAXIMALLY_UNIPOTENT,
    FuchsianOperator,
    dwork_check,
    dwork_period_series,
    loop_product,
    theta_operator,
)
from dwork_semistable.subdivide import coned_simplex, coverage_sample, semistable_subdivision, verify_subdivision


class Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f}s, limit {self.limit}s"


# --- 1: ranks --------------------------------------------------------------------------------


def eigenvector_table(N):
    """Brute force: enumerate the Fermat basis w and bucket by the H_0 character it spans."""
    table = {}
    for w in product(range(1, N), repeat=N):
        if sum(w) % N == 0:
            key = tuple((x - w[0]) % N for x in w)
            table[key] = table.get(key, 0) + 1
    return table


@pytest.mark.criterion(1)
def test_rank_pins_and_exhaustive_oracle():
    with Clock(60):
        for N in range(2, 8):
            table = eigenvector_table(N)
            for chi in all_characters(N):
                key = tuple((x - chi.a[0]) % N for x in chi.a)
                assert eigen_rank(chi).rank == table.get(key, 0), chi
        pins = {(5, (0,) * 5): 4, (5, (0, 0, 0, 1, 4)): 2, (3, (0, 1, 2)): 0}
        for (N, a), n in pins.items():
            assert eigen_rank(validate_character(N, a)).rank == n


# --- 2-4: charts ---------------------------------------------------------------------------------

CHART_CASES = [(N, q) for N in (3, 4) for q in (5, 7) if q % N]


@pytest.fixture(scope="module")
def chart_clock():
    spent = [0.0]
    yield spent
    assert spent[0] < 600


@pytest.mark.criterion(2)
@pytest.mark.parametrize("N, q", CHART_CASES)
def test_uk_charts_have_no_falsifiers_on_special_fibre(N, q, chart_clock):
    t = time.perf_counter()
    for i in range(1, N + 1):
        for k in range(1, N + 1):
            if k != i:
                s = verify_chart_smoothness(uk_chart(N, i, k), q, "T0")
                assert s.none_count == 0, s.to_json()
    chart_clock[0] += time.perf_counter() - t


@pytest.mark.criterion(2)
@pytest.mark.xfail(strict=True, reason="the naive chart is singular where two coordinates vanish on T=0")
@pytest.mark.parametrize("N, q", CHART_CASES)
def test_naive_chart_has_no_falsifiers_on_special_fibre(N, q, chart_clock):
    t = time.perf_counter()
    bad = 0
    for i in range(1, N + 1):
        bad += verify_chart_smoothness(naive_chart(N, i), q, "T0").none_count
    chart_clock[0] += time.perf_counter() - t
    assert bad == 0


@pytest.mark.criterion(3)
@pytest.mark.parametrize("N, q", [(3, 7), (4, 5)])
def test_h0_action_exact(N, q):
    elems = h0_elements(N)
    for i in range(1, N + 1):
        for chart in atlas(N, i) + [naive_chart(N, i)]:
            acts = {g: h0_apply(chart, g, q) for g in elems}
            for g, h in product(elems, repeat=2):
                assert acts[g * h].substitution == acts[g].compose(acts[h])
            assert all(len(a.relation_scalars) == len(chart.relations) for a in acts.values())


@pytest.mark.criterion(4)
def test_special_fibre_multiplicity_one():
    for N in range(2, 6):
        for i in range(1, N + 1):
            for k in range(1, N + 1):
                if k == i:
                    continue
                shape = special_fiber_shape(uk_chart(N, i, k))
                assert shape["reduced_normal_crossings"]
                assert set(shape["multiplicities"].values()) == {1}


# --- 5-6: subdivisions -----------------------------------------------------------------------------


def polygons():
    rng = random.Random(0)
    out = []
    while len(out) < 100:
        pts = [(rng.randint(0, 5), rng.randint(0, 5)) for _ in range(rng.randint(3, 7))]
        P = Polytope(pts)
        if P.dim == 2:
            out.append(P)
    return out


def polytopes_3d():
    rng = random.Random(1)
    out = [Polytope([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 2)])]
    while len(out) < 20:
        pts = [tuple(rng.randint(0, 3) for _ in range(3)) for _ in range(rng.choice([4, 4, 5, 6]))]
        P = Polytope(pts)
        if P.dim == 3:
            out.append(P)
    return out


def check_subdivision(sub, samples, seed):
    v = verify_subdivision(sub)
    assert v["integral"] and v["all_unimodular"] and v["volume_ok"]
    assert all(f["ok"] for f in v["facets"])
    assert all(is_unimodular(s) for s in sub.simplices)
    cov = coverage_sample(sub, samples, seed)
    assert cov["gaps"] == 0 and cov["overlaps"] == 0, cov


@pytest.fixture(scope="module")
def subdivisions():
    t = time.perf_counter()
    two = [semistable_subdivision(P) for P in polygons()]
    three = [semistable_subdivision(P, max_e=24) for P in polytopes_3d()]
    return {"two": two, "three": three, "build_seconds": time.perf_counter() - t}


@pytest.mark.criterion(5)
def test_subdivisions(subdivisions):
    with Clock(300 - subdivisions["build_seconds"]):
        for n, sub in enumerate(subdivisions["two"]):
            assert sub.e == 1
            check_subdivision(sub, 200, n)
        for n, sub in enumerate(subdivisions["three"]):
            assert 1 <= sub.e <= 24
            check_subdivision(sub, 300, n)
        assert subdivisions["three"][0].e == 2


def relation_is_su_minus_product(text, n):
    names = ["S", "U"] + [f"T{j}p" for j in range(1, n + 1)]
    syms = {x: sympy.Symbol(x) for x in names}
    expr = sympy.sympify(text.replace("'", "p"), locals=syms)
    target = syms["S"] * syms["U"] - sympy.prod([syms[f"T{j}p"] for j in range(1, n + 1)])
    return sympy.expand(expr - target) == 0


@pytest.mark.criterion(6)
def test_chart_emission_on_every_cell(subdivisions):
    for sub in subdivisions["two"] + subdivisions["three"]:
        for s in sub.simplices:
            gens, S, U = coned_simplex(sub, s)
            Sf = LinearFunctional(S)
            assert all(Sf(g) == 1 for g in gens)
            chart = cone_to_chart(Simplex(gens), Sf, LinearFunctional(U))
            rel = chart.presentation.relations
            assert len(rel) == 1
            assert relation_is_su_minus_product(str(rel[0]), len(gens))
            assert chart.verify()


# --- 7-9: monodromy ----------------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_recurrence_oracle_for_n3():
    c = dwork_period_series(3, 40).coeffs
    for k in range(39):
        assert c[k + 1] * (k + 1) ** 2 == 3 * c[k] * (3 * k + 1) * (3 * k + 2)


@pytest.mark.criterion(7)
def test_monodromy_n3():
    with Clock(30):
        fit, check = dwork_check(3, powers=())
        # theta^2 - 3 lambda (3 theta + 1)(3 theta + 2), one power of lambda above the fitted form
        target = theta_operator({0: [0, 0, 1], 1: [-6, -27, -27]})
        assert FuchsianOperator.from_rows([(0,) + row for row in fit.operator.coeffs]) == target
        norms = check.verdict.norms
        assert norms[2] <= 1e-6 and norms[1] >= 1e-2
        assert check.verdict.verdict == MAXIMALLY_UNIPOTENT
        assert loop_product(fit.operator)["deviation"] <= 1e-6


@pytest.mark.criterion(8)
def test_monodromy_n5():
    with Clock(120):
        fit, check = dwork_check(5, powers=(2, 6))
        assert fit.operator.order == 4 == eigen_rank(validate_character(5, (0,) * 5)).rank
        norms = check.verdict.norms
        assert norms[4] <= 1e-6 and norms[3] >= 1e-4
        assert check.verdict.verdict == MAXIMALLY_UNIPOTENT
        assert {e: v.verdict for e, v in check.powers.items()} == {2: MAXIMALLY_UNIPOTENT, 6: MAXIMALLY_UNIPOTENT}


@pytest.mark.criterion(9)
@pytest.mark.parametrize("N", [3, 4, 5])
def test_order_equals_rank(N):
    fit, _ = dwork_check(N, powers=())
    assert fit.operator.order == eigen_rank(validate_character(N, (0,) * N)).rank == N - 1
