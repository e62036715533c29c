"""Rational polyhedral cones with integral structure.

Cones are stored by primitive generators.  Coordinate 0 of the ambient
lattice is reserved for the split direction ``f_0`` of cones of the form
``R>=0 f_0 + tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from . import lattice as lat
from .polynomial import ChartPresentation, Polynomial

MAX_DIM = 8

Point = tuple[Fraction, ...]


class FanError(ValueError):
    pass


class NotStronglyConvex(FanError):
    pass


class FunctionalNegativeOnCone(FanError):
    pass


class DegenerateSimplex(FanError):
    pass


class NotUnimodular(FanError):
    pass


class SNotOneOnGenerators(FanError):
    pass


class UDivisible(FanError):
    pass


class UNotUnit(FanError):
    pass


def as_point(v: Iterable) -> Point:
    return tuple(Fraction(x) for x in v)


def is_integral(p: Sequence[Fraction]) -> bool:
    return all(Fraction(x).denominator == 1 for x in p)


def _fmt(x: Fraction) -> int | str:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def point_to_json(p: Sequence[Fraction]) -> list[int | str]:
    return [_fmt(x) for x in p]


def point_from_json(p: Sequence[Any]) -> Point:
    return tuple(Fraction(x) for x in p)


# --- exact separating functionals ------------------------------------------------


def separating_functional(
    zero: Sequence[Sequence[int]],
    positive: Sequence[Sequence[int]],
    dim: int,
) -> tuple[Fraction, ...] | None:
    """Exact ``y`` with ``<y, z> = 0`` on ``zero`` and ``<y, p> > 0`` on ``positive``.

    The equalities are solved exactly; the strict inequalities go through an
    LP whose answer is rationalised and re-checked exactly.  ``None`` means
    the LP found the system infeasible.
    """
    if zero:
        basis = lat.nullspace([list(z) for z in zero])
    else:
        basis = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    if not positive:
        return tuple(Fraction(0) for _ in range(dim))
    if not basis:
        return None
    # values of basis functionals on the positive vectors
    A = np.array([[float(lat.dot(b, p)) for b in basis] for p in positive])
    res = linprog(
        c=np.zeros(len(basis)),
        A_ub=-A,
        b_ub=-np.ones(len(positive)),
        bounds=[(None, None)] * len(basis),
        method="highs",
    )
    if res.status != 0:
        return None
    for denom in (1, 10, 1000, 10**6):
        z = [Fraction(x).limit_denominator(denom) for x in res.x]
        y = tuple(sum((zc * bc[k] for zc, bc in zip(z, basis)), Fraction(0)) for k in range(dim))
        if all(lat.dot(y, p) > 0 for p in positive):
            return y
    raise AssertionError("could not rationalise LP certificate")


# --- lattice, functionals, cones --------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    rank: int

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise FanError("lattice rank must be at least 1")


@dataclass(frozen=True)
class LinearFunctional:
    coefficients: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", tuple(int(c) for c in self.coefficients))

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def __call__(self, v: Sequence) -> Fraction:
        return Fraction(lat.dot(self.coefficients, v))

    def scaled(self, k: Fraction) -> tuple[Fraction, ...]:
        return tuple(Fraction(c) * k for c in self.coefficients)


@dataclass(frozen=True)
class Cone:
    lattice: Lattice
    generators: tuple[tuple[int, ...], ...]
    distinguished: bool = False

    def __post_init__(self) -> None:
        gens = tuple(tuple(int(x) for x in g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        d = self.lattice.rank
        if d > MAX_DIM + 1:
            raise FanError(f"lattice rank {d} exceeds cap {MAX_DIM + 1}")
        for g in gens:
            if len(g) != d:
                raise FanError(f"generator {g} does not live in Z^{d}")
            if not any(g):
                raise FanError("zero generator")
            if lat.vec_gcd(g) != 1:
                raise FanError(f"generator {g} is not primitive")
        if len(set(gens)) != len(gens):
            raise FanError("repeated generator")
        if self.distinguished:
            f0 = tuple(int(k == 0) for k in range(d))
            if f0 not in gens:
                raise FanError("split cone must contain f_0 = e_0 as a generator")
            if any(g[0] != 0 for g in gens if g != f0):
                raise FanError("split cone: tau generators must vanish on coordinate 0")
        if not self.is_strongly_convex():
            raise NotStronglyConvex("cone contains a line")

    @property
    def dim(self) -> int:
        return lat.rank(self.generators)

    @property
    def is_simplicial(self) -> bool:
        return self.dim == len(self.generators)

    def is_strongly_convex(self) -> bool:
        if self.is_simplicial:
            return True
        return separating_functional([], self.generators, self.lattice.rank) is not None

    def is_face(self, subset: Sequence[int]) -> bool:
        """Whether the generators indexed by ``subset`` span a face."""
        if self.is_simplicial:
            return True
        zero = [self.generators[i] for i in subset]
        rest = [g for k, g in enumerate(self.generators) if k not in set(subset)]
        y = separating_functional(zero, rest, self.lattice.rank)
        return y is not None

    def faces(self) -> list[tuple[int, ...]]:
        """All faces as sorted generator index tuples (exhaustive subset check)."""
        idx = range(len(self.generators))
        return [s for r in range(len(self.generators) + 1) for s in combinations(idx, r) if self.is_face(s)]

    def contains(self, v: Sequence) -> bool:
        """Exact membership via a nonnegative combination of a simplicial piece."""
        v = as_point(v)
        gens = self.generators
        for r in range(1, len(gens) + 1):
            for sub in combinations(gens, r):
                if lat.rank(sub) != r:
                    continue
                x = lat.solve(lat.transpose(sub), v)
                if x is not None and all(c >= 0 for c in x):
                    return True
        return not any(v)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"generators": [list(g) for g in self.generators]}
        if self.distinguished:
            out["distinguished"] = True
        return out


def split_cone(tau: Sequence[Sequence[int]], rank: int) -> Cone:
    """``R>=0 f_0 + tau`` with ``f_0`` the first coordinate vector."""
    f0 = tuple(int(k == 0) for k in range(rank))
    return Cone(Lattice(rank), (f0,) + tuple(tuple(g) for g in tau), distinguished=True)


@dataclass(frozen=True)
class CrossSection:
    cone: Cone
    functional: LinearFunctional
    vertices: tuple[Point, ...]
    recession: tuple[tuple[int, ...], ...]

    @property
    def polytope(self) -> Polytope:
        return Polytope(self.vertices)

    def to_json(self) -> dict[str, Any]:
        return {
            "functional": list(self.functional.coefficients),
            "vertices": [point_to_json(v) for v in self.vertices],
            "recession": [list(r) for r in self.recession],
        }


def cross_section(c: Cone, l: LinearFunctional) -> CrossSection:
    """Slice of ``c`` at ``l = 1``; generators with ``l = 0`` become recession directions."""
    if l.rank != c.lattice.rank:
        raise FanError("functional and cone live in different lattices")
    verts, rec = [], []
    for g in c.generators:
        val = l(g)
        if val < 0:
            raise FunctionalNegativeOnCone(f"l{g} = {val} < 0")
        if val == 0:
            rec.append(g)
        else:
            verts.append(tuple(Fraction(x) / val for x in g))
    return CrossSection(c, l, tuple(verts), tuple(rec))


def cone_over(section: CrossSection) -> tuple[tuple[int, ...], ...]:
    """Primitive rays of the cone spanned by a cross-section and its recession directions."""
    rays = []
    for v in section.vertices:
        d = lat.common_denominator(v)
        rays.append(lat.primitive([int(x * d) for x in v]))
    rays.extend(tuple(r) for r in section.recession)
    return tuple(rays)


# --- polytopes and simplices ------------------------------------------------------


def affine_frame(points: Sequence[Point]) -> tuple[Point, list[list[Fraction]]]:
    """An origin and a rational basis (rows) of the affine hull of ``points``."""
    p0 = points[0]
    edges = [[a - b for a, b in zip(p, p0)] for p in points[1:]]
    if not edges:
        return p0, []
    M, pivots = lat.rref(edges)
    return p0, [row for row in M[: len(pivots)]]


def intrinsic_coordinates(points: Sequence[Point]) -> list[Point]:
    """Coordinates of ``points`` in a rational frame of their affine hull."""
    p0, basis = affine_frame(points)
    if not basis:
        return [() for _ in points]
    Bt = lat.transpose(basis)
    out = []
    for p in points:
        y = lat.solve(Bt, [a - b for a, b in zip(p, p0)])
        assert y is not None
        out.append(tuple(y))
    return out


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many rational points (vertices need not be pruned)."""

    points: tuple[Point, ...]

    def __init__(self, points: Iterable[Iterable]):
        pts = tuple(dict.fromkeys(as_point(p) for p in points))
        if not pts:
            raise FanError("empty polytope")
        object.__setattr__(self, "points", pts)

    @property
    def ambient_dim(self) -> int:
        return len(self.points[0])

    @property
    def dim(self) -> int:
        return len(affine_frame(self.points)[1])

    def scaled(self, e: int) -> Polytope:
        return Polytope(tuple(tuple(e * x for x in p) for p in self.points))

    def facets(self) -> list[tuple[int, ...]]:
        """Facets as index tuples into ``points`` (brute force over subsets)."""
        d = self.dim
        if d == 0:
            return []
        coords = intrinsic_coordinates(self.points)
        n = len(coords)
        found: dict[tuple[int, ...], None] = {}
        for sub in combinations(range(n), d):
            base = coords[sub[0]]
            rows = [[a - b for a, b in zip(coords[s], base)] for s in sub[1:]]
            if rows and lat.rank(rows) != d - 1:
                continue
            normal = lat.nullspace(rows) if rows else [[Fraction(1)]]
            if len(normal) != 1:
                continue
            a = normal[0]
            b = lat.dot(a, base)
            vals = [lat.dot(a, c) - b for c in coords]
            if all(v <= 0 for v in vals) or all(v >= 0 for v in vals):
                on = tuple(k for k, v in enumerate(vals) if v == 0)
                found[on] = None
        return sorted(found)

    def vertex_indices(self) -> list[int]:
        """Indices of extreme points (a point is a vertex iff it is cut out by its facets)."""
        d = self.dim
        if d == 0:
            return [0]
        facets = self.facets()
        out = []
        for k in range(len(self.points)):
            containing = [f for f in facets if k in f]
            common = set(range(len(self.points)))
            for f in containing:
                common &= set(f)
            # a vertex is the only point shared by the facets containing it
            if len(containing) >= d and {self.points[c] for c in common} == {self.points[k]}:
                out.append(k)
        return out

    def vertices(self) -> tuple[Point, ...]:
        return tuple(self.points[k] for k in self.vertex_indices())

    def is_integral(self) -> bool:
        return all(is_integral(p) for p in self.vertices())

    def contains(self, x: Sequence) -> bool:
        x = as_point(x)
        pts = list(self.points) + [x]
        if len(affine_frame(pts)[1]) != self.dim:
            return False
        coords = intrinsic_coordinates(pts)
        base = coords[:-1]
        y = coords[-1]
        for f in self.facets():
            # half-space through the facet containing the polytope
            sub = [base[k] for k in f]
            p0 = sub[0]
            rows = [[a - b for a, b in zip(s, p0)] for s in sub[1:]]
            normal = lat.nullspace(rows)[0] if rows else [Fraction(1)]
            b = lat.dot(normal, p0)
            inner = next(lat.dot(normal, c) - b for c in base if lat.dot(normal, c) != b)
            val = lat.dot(normal, y) - b
            if val != 0 and (val > 0) != (inner > 0):
                return False
        return True

    def to_json(self) -> dict[str, Any]:
        return {"vertices": [point_to_json(v) for v in self.vertices()]}


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[Point, ...]

    def __init__(self, vertices: Iterable[Iterable]):
        verts = tuple(as_point(v) for v in vertices)
        if not verts:
            raise DegenerateSimplex("simplex needs at least one vertex")
        if len({len(v) for v in verts}) != 1:
            raise DegenerateSimplex("vertices of different dimensions")
        edges = [[a - b for a, b in zip(v, verts[0])] for v in verts[1:]]
        if edges and lat.rank(edges) != len(edges):
            raise DegenerateSimplex("vertices are affinely dependent")
        object.__setattr__(self, "vertices", verts)

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    @property
    def ambient_dim(self) -> int:
        return len(self.vertices[0])

    @property
    def is_integral(self) -> bool:
        return all(is_integral(v) for v in self.vertices)

    def integer_vertices(self) -> tuple[tuple[int, ...], ...]:
        if not self.is_integral:
            raise FanError("simplex has non-integral vertices")
        return tuple(tuple(int(x) for x in v) for v in self.vertices)

    def barycentric(self, x: Sequence) -> list[Fraction] | None:
        """Barycentric coordinates of ``x`` or ``None`` if off the affine span."""
        x = as_point(x)
        v0 = self.vertices[0]
        if self.dim == 0:
            return [Fraction(1)] if x == v0 else None
        cols = [[a - b for a, b in zip(v, v0)] for v in self.vertices[1:]]
        mu = lat.solve(lat.transpose(cols), [a - b for a, b in zip(x, v0)])
        if mu is None:
            return None
        return [1 - sum(mu)] + mu

    def contains(self, x: Sequence) -> bool:
        lam = self.barycentric(x)
        return lam is not None and all(c >= 0 for c in lam)

    def key(self) -> tuple[Point, ...]:
        return tuple(sorted(self.vertices))

    def to_json(self) -> list[list[int | str]]:
        return [point_to_json(v) for v in self.vertices]


def normalized_volume(s: Simplex) -> int | Fraction:
    """``d! * vol`` with respect to the lattice in the affine span.

    Integral simplices give an ``int`` (the index of the edge lattice in its
    saturation); non-integral ones give the exact rational value.
    """
    if s.dim == 0:
        return 1
    v0 = s.vertices[0]
    edges = [[a - b for a, b in zip(v, v0)] for v in s.vertices[1:]]
    D = lat.common_denominator(x for e in edges for x in e)
    scaled = [[int(x * D) for x in e] for e in edges]
    vol = Fraction(lat.lattice_index(scaled), D ** s.dim)
    if s.is_integral:
        return int(vol)
    return vol


def is_unimodular(s: Simplex) -> bool:
    return s.is_integral and normalized_volume(s) == 1


# --- chart emission ------------------------------------------------------------------


@dataclass
class ToricChart:
    """Result of :func:`cone_to_chart`: the presentation plus its bookkeeping."""

    presentation: ChartPresentation
    basis: list[list[int]]
    dual_basis: list[list[int]]
    s_exponents: list[int]
    u_exponents: list[int]
    t1_prime_exponents: list[int]
    twist: int
    complement_exponents: list[int] = field(default_factory=list)

    def verify(self) -> bool:
        """``S * U == prod T_i'`` as exponent vectors in the final dual basis."""
        k = len(self.presentation.meta["generators"])
        lhs = [a + b for a, b in zip(self.s_exponents, self.u_exponents)]
        rhs = list(self.t1_prime_exponents)
        for i in range(1, k):
            rhs[i] += 1
        return lhs == rhs


def cone_to_chart(s: Simplex, S: LinearFunctional, U: LinearFunctional) -> ToricChart:
    """Semistable local model ``SU - prod T_i'`` of the cone over a unimodular simplex.

    The vertices ``f_1..f_k`` of ``s`` are extended to a basis of ``Z^n``;
    the complement is rotated so that ``U`` becomes the last dual coordinate
    (possible because the exponents of ``U`` are coprime), and the first
    torus coordinate absorbs the remaining factors of ``S``.
    """
    if not is_unimodular(s):
        raise NotUnimodular("simplex is not unimodular")
    gens = [list(v) for v in s.integer_vertices()]
    n = len(gens[0])
    k = len(gens)
    if S.rank != n or U.rank != n:
        raise FanError("functionals and simplex live in different lattices")
    if any(S(g) != 1 for g in gens):
        raise SNotOneOnGenerators("S must evaluate to 1 on every generator")
    if any(U(g) != 0 for g in gens):
        raise UNotUnit("U must vanish on the generators to be a unit on the chart")
    if lat.vec_gcd(U.coefficients) != 1:
        raise UDivisible(f"U = {U.coefficients} is divisible in the character lattice")
    try:
        basis = lat.complete_to_basis(gens)
    except ValueError as exc:
        raise NotUnimodular(str(exc)) from None
    comp = basis[k:]
    c = [int(U(f)) for f in comp]
    m = len(comp)
    if m == 0:
        raise UDivisible("no complementary coordinates left for the unit U")
    A = lat.unimodular_with_last_row(c)
    Ainv = lat.integer_inverse(A)
    # g_j = sum_t Ainv[t][j] f_{k+t}
    new_comp = [[sum(Ainv[t][j] * comp[t][x] for t in range(m)) for x in range(n)] for j in range(m)]
    new_basis = [list(g) for g in gens] + new_comp
    inv = lat.integer_inverse(lat.transpose(new_basis))
    dual = [list(row) for row in inv]  # row i: character dual to basis vector i
    assert [int(x) for x in dual[-1]] == list(U.coefficients)

    s_exp = [int(S(f)) for f in new_basis]
    u_exp = [0] * n
    u_exp[-1] = 1
    d_exps = s_exp[k:-1]
    twist = s_exp[-1]
    t1 = [0] * n
    t1[0] = 1
    for j, dj in enumerate(d_exps):
        t1[k + j] = dj
    t1[-1] = twist + 1
    # S as a functional recovered from its exponents must equal the input
    recovered = [sum(e * dual[i][x] for i, e in enumerate(s_exp)) for x in range(n)]
    assert recovered == list(S.coefficients)

    names = [f"T{i + 1}'" for i in range(k)] + [f"T{k + j + 1}'" for j in range(m - 1)]
    variables = ("S", "U", *names)
    gens_poly = Polynomial.gens(variables)
    prod = Polynomial.constant(variables, 1)
    for name in names[:k]:
        prod = prod * gens_poly[name]
    relation = gens_poly["S"] * gens_poly["U"] - prod

    def mono(exps: dict[str, int]) -> str:
        parts = []
        for v, e in exps.items():
            if e == 1:
                parts.append(v)
            elif e:
                parts.append(f"{v}^{e}")
        return "*".join(parts) or "1"

    comp_names = [f"T{k + j + 1}'" for j in range(m - 1)]
    structure = {
        "S": mono({**{f"T{i + 1}": 1 for i in range(k)}, **dict(zip(comp_names, d_exps)), "U": twist}),
        "T1'": mono({"T1": 1, **dict(zip(comp_names, d_exps)), "U": twist + 1}),
    }
    pres = ChartPresentation(
        kind="toric",
        variables=variables,
        inverted=("U", *comp_names),
        relations=[relation],
        base="W[S, U^{±1}]",
        structure=structure,
        meta={"generators": [list(g) for g in gens], "S": list(S.coefficients), "U": list(U.coefficients)},
    )
    chart = ToricChart(
        presentation=pres,
        basis=new_basis,
        dual_basis=[[int(x) for x in row] for row in dual],
        s_exponents=s_exp,
        u_exponents=u_exp,
        t1_prime_exponents=t1,
        twist=twist,
        complement_exponents=c,
    )
    pres.meta["change_of_basis"] = chart.basis
    pres.meta["dual_basis"] = chart.dual_basis
    pres.meta["s_exponents"] = s_exp
    pres.meta["twist"] = twist
    if not chart.verify():
        raise AssertionError("S*U != prod T_i' after the coordinate change")
    return chart


# --- conical complexes ------------------------------------------------------------


@dataclass
class ConicalComplex:
    lattice: Lattice
    cones: list[Cone]
    S: LinearFunctional | None = None
    U: LinearFunctional | None = None

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> ConicalComplex:
        L = Lattice(int(data["rank"]))
        cones = [
            Cone(L, tuple(tuple(g) for g in c["generators"]), bool(c.get("distinguished", False)))
            for c in data["cones"]
        ]
        fun = data.get("functionals", {})
        S = LinearFunctional(tuple(fun["S"])) if "S" in fun else None
        U = LinearFunctional(tuple(fun["U"])) if "U" in fun else None
        return cls(L, cones, S, U)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"rank": self.lattice.rank, "cones": [c.to_json() for c in self.cones]}
        fun = {}
        if self.S is not None:
            fun["S"] = list(self.S.coefficients)
        if self.U is not None:
            fun["U"] = list(self.U.coefficients)
        if fun:
            out["functionals"] = fun
        return out

    def face_compatibility(self) -> list[str]:
        """Problems found when checking that cones meet along common faces.

        Two cones are compatible when their shared generators span a face of
        both and a hyperplane through that face separates the remaining
        generators.
        """
        issues = []
        d = self.lattice.rank
        for a, b in combinations(range(len(self.cones)), 2):
            A, B = self.cones[a], self.cones[b]
            common = [g for g in A.generators if g in B.generators]
            ia = [A.generators.index(g) for g in common]
            ib = [B.generators.index(g) for g in common]
            if not A.is_face(ia) or not B.is_face(ib):
                issues.append(f"cones {a},{b}: shared generators do not span a face")
                continue
            rest_a = [g for g in A.generators if g not in common]
            rest_b = [tuple(-x for x in g) for g in B.generators if g not in common]
            if separating_functional(common, rest_a + rest_b, d) is None:
                issues.append(f"cones {a},{b}: overlap beyond their common face")
        return issues
