"""Blowup atlas of the Dwork family near ``T = 0`` and its point-level checks.

Work on the affine chart ``X_i != 0`` with ``x_j = X_j / X_i``.  The index
function ``l`` on ``{1..N} \\ {i}`` is ``l(x) = x + 1`` except
``l(i - 1) = i + 1``; when ``l(k) = N + 1`` the product over
``l(k) <= j <= N`` is empty and ``b_{N+1}`` is just a name for
``sum x_j^N + 1``.

Base ring: ``W[T, U^{+-1}]`` localised at ``(TU)^N != 1``.  In every chart
``U`` and ``T`` only occur through ``TU``, which the exhaustive scans use:
a point of the fibre coordinates together with a value ``tau`` of ``TU``
stands for ``q - 1`` points ``(U, T = tau / U)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Mapping, Sequence

import numpy as np

from . import scan
from .finite_field import QQ, FiniteField, parse_field
from .polynomial import ChartPresentation, Polynomial

SCAN_BUDGET = 10**8
CHUNK = 1 << 16
FALSIFIER_LIMIT = 50
SCOPE_NOTE = "N=2 is outside supported scope: the fibres are finite sets of points"


class ChartError(ValueError):
    pass


class CharacteristicDividesN(ChartError):
    pass


class PointNotOnChart(ChartError):
    pass


class ScanBudgetExceeded(ChartError):
    pass


class RootsOfUnityUnavailable(ChartError):
    pass


class RelationNotPreserved(ChartError):
    pass


class NotUkChart(ChartError):
    pass


# --- index bookkeeping ------------------------------------------------------------------------


def l_index(N: int, i: int, x: int) -> int:
    return i + 1 if x == i - 1 else x + 1


def _x(j: int) -> str:
    return f"x{j}"


def _b(j: int) -> str:
    return f"b{j}"


def _bp(k: int) -> str:
    return f"b{k}'"


def _check(N: int, i: int, ring) -> None:
    if N < 2:
        raise ChartError("N must be at least 2")
    if not 1 <= i <= N:
        raise ChartError(f"chart index i={i} not in 1..{N}")
    if ring.p and N % ring.p == 0:
        raise CharacteristicDividesN(f"characteristic {ring.p} divides N={N}")


def _ring(field) -> Any:
    if field is None or field == "QQ":
        return QQ
    if isinstance(field, (str, int)):
        return parse_field(field)
    return field


def _prod(gens: Mapping[str, Polynomial], names: Sequence[str], one: Polynomial) -> Polynomial:
    out = one
    for n in names:
        out = out * gens[n]
    return out


def _meta(N: int, i: int, ring, **extra) -> dict[str, Any]:
    out = {"N": N, "i": i, "field": repr(ring), "base": "(T*U)^N != 1"}
    if N == 2:
        out["scope"] = SCOPE_NOTE
    out.update(extra)
    return out


# --- charts ---------------------------------------------------------------------------------------


def naive_chart(N: int, i: int, field=None) -> ChartPresentation:
    """The family itself on ``X_i != 0``: ``UT(1 + sum x_j^N) - N prod x_j``."""
    ring = _ring(field)
    _check(N, i, ring)
    xs = [_x(j) for j in range(1, N + 1) if j != i]
    variables = tuple(xs + ["U", "T"])
    g = Polynomial.gens(variables, ring)
    one = Polynomial.constant(variables, 1, ring)
    power_sum = one
    for x in xs:
        power_sum = power_sum + g[x] ** N
    rel = g["U"] * g["T"] * power_sum - N * _prod(g, xs, one)
    return ChartPresentation(
        kind="NaiveU0",
        variables=variables,
        inverted=("U",),
        relations=[rel],
        base="W[T,U^(+-1)], (T*U)^N != 1",
        structure={"T": "T"},
        meta=_meta(N, i, ring, name=f"U0[i={i}]"),
    )


def uk_chart(N: int, i: int, k: int, field=None) -> ChartPresentation:
    ring = _ring(field)
    _check(N, i, ring)
    if not (1 <= k <= N and k != i):
        raise ChartError(f"U_k needs 1 <= k <= N and k != i, got k={k}")
    l = l_index(N, i, k)
    xs = [_x(j) for j in range(1, N + 1) if j != i]
    bk, bl = _bp(k), _b(l)
    variables = tuple(xs + [bk, bl, "U", "T"])
    g = Polynomial.gens(variables, ring)
    one = Polynomial.constant(variables, 1, ring)
    low = [_x(j) for j in range(1, k) if j != i]
    high = [_x(j) for j in range(l, N + 1) if j != i]
    power_sum = one
    for x in xs:
        power_sum = power_sum + g[x] ** N
    relations = [
        N * g[bk] * _prod(g, low, one) - g["U"] * g["T"],
        g[bk] * g[bl] - g[_x(k)],
        g[bl] * _prod(g, high, one) - power_sum,
    ]
    structure = {"T": "N*U^-1*" + "*".join([bk] + low)}
    meta = _meta(N, i, ring, k=k, l=l, name=f"U{k}[i={i}]", low=low, high=high)
    if l == N + 1:
        meta["convention"] = f"{bl} = sum x_j^N + 1 (empty product)"
    return ChartPresentation("Uk", variables, ("U",), relations, "W[T,U^(+-1)], (T*U)^N != 1", structure, meta)


def vk_chart(N: int, i: int, k: int = 0, field=None) -> ChartPresentation:
    """``V_k``: ``N prod_{j<=k} x_j - UT b_l`` and ``b_l prod_{j>=l} x_j - sum x_j^N - 1``."""
    ring = _ring(field)
    _check(N, i, ring)
    if not (0 <= k < N and k != i):
        raise ChartError(f"V_k needs 0 <= k < N and k != i, got k={k}")
    l = l_index(N, i, k)
    xs = [_x(j) for j in range(1, N + 1) if j != i]
    bl = _b(l)
    variables = tuple(xs + [bl, "U", "T"])
    g = Polynomial.gens(variables, ring)
    one = Polynomial.constant(variables, 1, ring)
    low = [_x(j) for j in range(1, k + 1) if j != i]
    high = [_x(j) for j in range(l, N + 1) if j != i]
    power_sum = one
    for x in xs:
        power_sum = power_sum + g[x] ** N
    relations = [
        N * _prod(g, low, one) - g["U"] * g["T"] * g[bl],
        g[bl] * _prod(g, high, one) - power_sum,
    ]
    meta = _meta(N, i, ring, k=k, l=l, name=f"V{k}[i={i}]", low=low, high=high)
    return ChartPresentation("Vk", variables, ("U",), relations, "W[T,U^(+-1)], (T*U)^N != 1", {"T": "T"}, meta)


def atlas(N: int, i: int, field=None) -> list[ChartPresentation]:
    """``U_k`` for every ``k != i`` followed by ``V_0``."""
    charts = [uk_chart(N, i, k, field) for k in range(1, N + 1) if k != i]
    charts.append(vk_chart(N, i, 0, field))
    return charts


def eliminated_form(chart: ChartPresentation) -> Polynomial:
    """Single equation of ``U_k`` after substituting ``x_k = b_k' b_l``."""
    _require_uk(chart)
    N, k, l = chart.meta["N"], chart.meta["k"], chart.meta["l"]
    g = Polynomial.gens(chart.variables, chart.relations[0].ring)
    one = Polynomial.constant(chart.variables, 1, chart.relations[0].ring)
    bk, bl = g[_bp(k)], g[_b(l)]
    rest = [x for x in chart.meta["low"] + chart.meta["high"]]
    power_sum = one
    for x in rest:
        power_sum = power_sum + g[x] ** N
    return bl * _prod(g, chart.meta["high"], one) - power_sum - (bk * bl) ** N


def _require_uk(chart: ChartPresentation) -> None:
    if chart.kind != "Uk":
        raise NotUkChart(f"expected a U_k chart, got {chart.kind}")


# --- Jacobian case analysis -----------------------------------------------------------------------


@dataclass
class JacobianReport:
    chart: str
    point: dict[str, Any]
    derivatives: dict[str, Any]
    case: str | None
    T: Any
    in_base: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "chart": self.chart,
            "point": {k: str(v) for k, v in self.point.items()},
            "derivatives": {k: str(v) for k, v in self.derivatives.items()},
            "case": self.case,
            "T": str(self.T),
            "in_base": self.in_base,
        }


def _uk_derivatives(chart: ChartPresentation) -> dict[str, Polynomial]:
    """``f_j, f_u, f_v`` in the closed forms of the case analysis, as polynomials."""
    N, k, l = chart.meta["N"], chart.meta["k"], chart.meta["l"]
    ring = chart.relations[0].ring
    g = Polynomial.gens(chart.variables, ring)
    one = Polynomial.constant(chart.variables, 1, ring)
    u, v = g[_bp(k)], g[_b(l)]
    low, high = chart.meta["low"], chart.meta["high"]
    out: dict[str, Polynomial] = {}
    for x in low:
        out[f"f_{x}"] = -N * g[x] ** (N - 1)
    for x in high:
        out[f"f_{x}"] = v * _prod(g, [s for s in high if s != x], one) - N * g[x] ** (N - 1)
    out["f_u"] = -N * u ** (N - 1) * v**N
    out["f_v"] = -N * u**N * v ** (N - 1) + _prod(g, high, one)
    return out


def _uk_conditions(chart: ChartPresentation) -> list[tuple[str, Polynomial]]:
    """Case tests in order; the first nonzero one names the case."""
    N, k, l = chart.meta["N"], chart.meta["k"], chart.meta["l"]
    d = _uk_derivatives(chart)
    ring = chart.relations[0].ring
    g = Polynomial.gens(chart.variables, ring)
    out = [(f"Case1({x[1:]})", d[f"f_{x}"]) for x in chart.meta["high"]]
    out.append(("Case2", d["f_v"]))
    uv = g[_bp(k)] * g[_b(l)]
    out += [(f"Case3({x[1:]})", g[x] ** N - uv**N) for x in chart.meta["low"]]
    return out


def _naive_conditions(chart: ChartPresentation) -> list[tuple[str, Polynomial]]:
    rel = chart.relations[0]
    return [(f"G({x[1:]})", rel.diff(x)) for x in chart.variables if x.startswith("x")]


def _vk_conditions(chart: ChartPresentation) -> list[tuple[str, Polynomial]]:
    # smoothness over the base: a nonzero 2x2 minor of the fibre Jacobian
    fibre = [v for v in chart.variables if v not in ("U", "T")]
    r1, r2 = chart.relations
    J = [[r.diff(v) for v in fibre] for r in (r1, r2)]
    out = []
    for a, b in combinations(range(len(fibre)), 2):
        minor = J[0][a] * J[1][b] - J[0][b] * J[1][a]
        if not minor.is_zero():
            out.append((f"Minor({fibre[a]},{fibre[b]})", minor))
    return out


def chart_conditions(chart: ChartPresentation) -> list[tuple[str, Polynomial]]:
    if chart.kind == "Uk":
        return _uk_conditions(chart)
    if chart.kind == "NaiveU0":
        return _naive_conditions(chart)
    return _vk_conditions(chart)


def jacobian_report(chart: ChartPresentation, point: Mapping[str, Any]) -> JacobianReport:
    """Case assignment at one point (values in the chart's coefficient ring).

    Raises
    ------
    PointNotOnChart
        A relation does not vanish, a coordinate is missing, or ``U = 0``.
    """
    R = chart.relations[0].ring
    missing = [v for v in chart.variables if v not in point]
    if missing:
        raise PointNotOnChart(f"missing coordinates {missing}")
    pt = {v: R.coerce(point[v]) if R is QQ else point[v] for v in chart.variables}
    if R.is_zero(pt["U"]):
        raise PointNotOnChart("U must be a unit")
    for rel in chart.relations:
        if not R.is_zero(rel.evaluate(pt)):
            raise PointNotOnChart(f"relation {rel} does not vanish")
    N = chart.meta["N"]
    tu = R.mul(pt["T"], pt["U"])
    in_base = R.pow(tu, N) != R.one
    if chart.kind == "Uk":
        derivs = {name: p.evaluate(pt) for name, p in _uk_derivatives(chart).items()}
    else:
        derivs = {}
    case = None
    for label, cond in chart_conditions(chart):
        val = cond.evaluate(pt)
        if chart.kind != "Uk":
            derivs[label] = val
        if not R.is_zero(val):
            case = label
            break
    return JacobianReport(chart.meta["name"], dict(pt), derivs, case, pt["T"], in_base)


# --- exhaustive scans ------------------------------------------------------------------------------


def _tau_form(chart: ChartPresentation, ring: FiniteField):
    """Rewrite the chart's polynomials in fibre coordinates plus ``tau = TU``."""
    fibre = [v for v in chart.variables if v not in ("U", "T")]
    grid_vars = tuple(fibre + ["tau"])

    def convert(p: Polynomial) -> Polynomial:
        p = p.reduce(ring) if p.ring != ring else p
        iu, it = chart.variables.index("U"), chart.variables.index("T")
        terms: dict[tuple[int, ...], Any] = {}
        for m, c in p.terms.items():
            if m[iu] != m[it]:
                raise AssertionError("U and T do not occur through TU")
            mono = tuple(e for n, e in zip(chart.variables, m) if n not in ("U", "T")) + (m[it],)
            terms[mono] = ring.add(terms[mono], c) if mono in terms else c
        return Polynomial(grid_vars, terms, ring, raw=True)

    return grid_vars, convert


def _packed(p: Polynomial) -> tuple[np.ndarray, np.ndarray]:
    items = sorted(p.terms.items())
    if not items:
        return np.zeros(0, dtype=np.int64), np.zeros((0, len(p.variables)), dtype=np.int64)
    coeffs = np.array([c for _, c in items], dtype=np.int64)
    exps = np.array([m for m, _ in items], dtype=np.int64)
    return coeffs, exps


@dataclass
class ScanSummary:
    chart: str
    kind: str
    N: int
    i: int
    q: int
    locus: str
    kernel: str
    grid_points: int
    on_chart: int
    counted: int
    case_counts: dict[str, int]
    none_count: int
    falsifiers: list[dict[str, int]] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.none_count == 0

    def to_json(self) -> dict[str, Any]:
        return {
            "chart": self.chart,
            "kind": self.kind,
            "N": self.N,
            "i": self.i,
            "q": self.q,
            "locus": self.locus,
            "grid_points": self.grid_points,
            "on_chart": self.on_chart,
            "points": self.counted,
            "case_counts": dict(sorted(self.case_counts.items())),
            "none_points": self.none_count,
            "falsifiers": self.falsifiers,
            "ok": self.ok,
            **({"meta": self.meta} if self.meta else {}),
        }


LOCI = ("all", "T0", "Tnz")


def verify_chart_smoothness(
    chart: ChartPresentation,
    q: int,
    locus: str = "all",
    budget: int = SCAN_BUDGET,
    workers: int = 1,
    kernel=None,
) -> ScanSummary:
    """Enumerate every F_q point of ``chart`` in the base and the locus and assign cases.

    Points are counted with their ``q - 1`` choices of ``U``.  A point whose
    case is ``None`` is a falsifier; the first few are listed with ``U = 1``.
    """
    if locus not in LOCI:
        raise ChartError(f"locus must be one of {LOCI}")
    ring = parse_field(q)
    N = chart.meta["N"]
    if N % ring.p == 0:
        raise CharacteristicDividesN(f"characteristic {ring.p} divides N={N}")
    grid_vars, convert = _tau_form(chart, ring)
    m = len(grid_vars)
    tau = Polynomial.var(grid_vars, "tau", ring)
    conds = chart_conditions(chart)
    polys = [convert(r) for r in chart.relations] + [tau**N - 1] + [convert(c) for _, c in conds]
    labels = [label for label, _ in conds]
    nrel = len(chart.relations)
    packed = [_packed(p) for p in polys]
    total = q**m
    if total * len(polys) > budget:
        raise ScanBudgetExceeded(f"{total} points x {len(polys)} polynomials exceeds budget {budget}")
    maxdeg = max(max((sum(mm) for mm in p.terms), default=0) for p in polys)
    maxexp = max(int(e.max()) if e.size else 0 for _, e in packed)
    powt = np.array([[ring.pow(a, e) for e in range(max(maxexp, maxdeg) + 1)] for a in range(q)], dtype=np.int64)
    evaluate = kernel or scan.evaluate_grid
    kernel_name = next((n for n, f in scan.kernels().items() if f is evaluate), "custom")

    def run(start: int) -> tuple[int, dict[str, int], int, list]:
        stop = min(start + CHUNK, total)
        vals = evaluate(ring.add_table, ring.mul_table, powt, m, start, stop, packed)
        on = np.all(vals[:, :nrel] == 0, axis=1)
        sel = on & (vals[:, nrel] != 0)
        tau_col = grid_vals_tau(start, stop)
        if locus == "T0":
            sel &= tau_col == 0
        elif locus == "Tnz":
            sel &= tau_col != 0
        cv = vals[sel][:, nrel + 1 :] != 0
        first = np.where(cv.any(axis=1), cv.argmax(axis=1), -1)
        counts = {}
        for idx, c in zip(*np.unique(first, return_counts=True)):
            counts["None" if idx < 0 else labels[idx]] = int(c)
        bad = np.flatnonzero(sel)[first < 0][:FALSIFIER_LIMIT] + start
        return int(on.sum()), counts, int(sel.sum()), bad.tolist()

    def grid_vals_tau(start: int, stop: int) -> np.ndarray:
        return np.arange(start, stop, dtype=np.int64) % q  # tau is the last digit

    starts = range(0, total, CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    on_chart = counted = 0
    tally: dict[str, int] = {}
    bad_idx: list[int] = []
    for on, counts, sel, bad in parts:
        on_chart += on
        counted += sel
        for k, c in counts.items():
            tally[k] = tally.get(k, 0) + c
        bad_idx += bad
    none = tally.pop("None", 0)
    falsifiers = [_decode(idx, grid_vars, q) for idx in bad_idx[:FALSIFIER_LIMIT]]
    mult = q - 1
    return ScanSummary(
        chart=chart.meta["name"],
        kind=chart.kind,
        N=N,
        i=chart.meta["i"],
        q=q,
        locus=locus,
        kernel=kernel_name,
        grid_points=total,
        on_chart=on_chart * mult,
        counted=counted * mult,
        case_counts={k: v * mult for k, v in tally.items()},
        none_count=none * mult,
        falsifiers=falsifiers,
    )


def _decode(idx: int, grid_vars: Sequence[str], q: int) -> dict[str, int]:
    vals = []
    for _ in grid_vars:
        vals.append(idx % q)
        idx //= q
    point = dict(zip(grid_vars, reversed(vals)))
    tau = point.pop("tau")
    point["U"] = 1
    point["T"] = tau
    return point


# --- H_0 action ------------------------------------------------------------------------------


@dataclass(frozen=True)
class H0Element:
    """Exponents ``(xi_1..xi_N)`` of ``zeta_N``, product one, modulo the diagonal.

    Stored with ``xi_1 = 0``; shifting all entries by a constant is the
    diagonal and keeps the sum ``0 mod N``.
    """

    N: int
    xi: tuple[int, ...]

    @classmethod
    def of(cls, N: int, xi: Sequence[int]) -> H0Element:
        if len(xi) != N:
            raise ChartError(f"expected {N} exponents")
        if sum(xi) % N:
            raise ChartError("exponents of an H_0 element must sum to 0 mod N")
        c = xi[0]
        return cls(N, tuple((x - c) % N for x in xi))

    def __mul__(self, other: H0Element) -> H0Element:
        return H0Element.of(self.N, [a + b for a, b in zip(self.xi, other.xi)])

    @classmethod
    def identity(cls, N: int) -> H0Element:
        return cls(N, (0,) * N)

    def to_json(self) -> list[int]:
        return list(self.xi)


def h0_elements(N: int) -> list[H0Element]:
    out = []
    for tail in product(range(N), repeat=N - 2):
        last = -sum(tail) % N
        out.append(H0Element(N, (0,) + tail + (last,)))
    return out


@dataclass
class H0Action:
    element: H0Element
    chart: str
    substitution: dict[str, int]  # variable -> scalar in F_q
    relation_scalars: list[int]
    q: int
    zeta: int

    def compose(self, other: H0Action) -> dict[str, int]:
        """Scalars of ``self`` after ``other``; diagonal substitutions commute."""
        from .finite_field import GF

        F = GF(self.q)
        return {v: F.mul(s, other.substitution[v]) for v, s in self.substitution.items()}

    def to_json(self) -> dict[str, Any]:
        return {
            "element": self.element.to_json(),
            "chart": self.chart,
            "q": self.q,
            "zeta": self.zeta,
            "substitution": dict(self.substitution),
            "relation_scalars": self.relation_scalars,
        }


def h0_exponents(chart: ChartPresentation, g: H0Element) -> dict[str, int]:
    """Exponent of ``zeta`` by which each variable is scaled."""
    N, i = chart.meta["N"], chart.meta["i"]
    if g.N != N:
        raise ChartError("element and chart have different N")
    xi = g.xi
    out: dict[str, int] = {}
    for v in chart.variables:
        if v in ("U", "T"):
            out[v] = 0
        elif v.endswith("'"):
            k = int(v[1:-1])
            out[v] = sum(xi[i - 1] - xi[j - 1] for j in range(1, k) if j != i) % N
        elif v.startswith("b"):
            l = int(v[1:])
            out[v] = sum(xi[i - 1] - xi[j - 1] for j in range(l, N + 1) if j != i) % N
        else:
            j = int(v[1:])
            out[v] = (xi[j - 1] - xi[i - 1]) % N
    return out


def h0_apply(chart: ChartPresentation, g: H0Element, q: int | None = None) -> H0Action:
    """Act by ``g`` over F_q and check each relation goes to a multiple of itself.

    Raises
    ------
    RootsOfUnityUnavailable
        F_q has no primitive N-th root of unity.
    RelationNotPreserved
        Some relation is not mapped to a scalar multiple of itself.
    """
    N = chart.meta["N"]
    ring = chart.relations[0].ring
    if q is None:
        if ring is QQ:
            raise RootsOfUnityUnavailable("the rationals contain no primitive N-th root of unity")
        q = ring.q
    F = parse_field(q)
    if (F.q - 1) % N:
        raise RootsOfUnityUnavailable(f"F_{F.q} has no primitive {N}-th root of unity")
    zeta = F.root_of_unity(N)
    exps = h0_exponents(chart, g)
    subst = {v: F.pow(zeta, e) for v, e in exps.items()}
    scalars = []
    for rel in chart.relations:
        r = rel.reduce(F) if rel.ring != F else rel
        s = r.scalar_ratio(r.scale_variables(subst))
        if s is None:
            raise RelationNotPreserved(f"{r} is not mapped to a multiple of itself by {g.xi}")
        scalars.append(s)
    return H0Action(g, chart.meta["name"], subst, scalars, F.q, zeta)


# --- semistable shape ----------------------------------------------------------------------------


def special_fiber_shape(chart: ChartPresentation) -> dict[str, Any]:
    """Read ``UT = N * b_k' * prod_{j<k} x_j`` off the first relation of ``U_k``."""
    _require_uk(chart)
    rel = chart.relations[0]
    ut = tuple(int(v in ("U", "T")) for v in chart.variables)
    others = [(m, c) for m, c in rel.terms.items() if m != ut]
    if ut not in rel.terms or len(others) != 1:
        raise NotUkChart("first relation is not of the form c*monomial - U*T")
    mono, coeff = others[0]
    R = rel.ring
    unit = R.mul(coeff, R.inv(R.neg(rel.terms[ut])))
    factors = [v for v, e in zip(chart.variables, mono) if e]
    mult = {v: e for v, e in zip(chart.variables, mono) if e}
    reduced = all(e == 1 for e in mult.values()) and len(set(factors)) == len(factors)
    return {
        "chart": chart.meta["name"],
        "identity": f"U*T = {R.format(unit)}*" + "*".join(factors),
        "unit": R.format(unit),
        "factors": factors,
        "multiplicities": mult,
        "reduced_normal_crossings": reduced,
    }
