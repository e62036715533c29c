"""Linear differential operators with polynomial coefficients.

An operator ``sum_i p_i(lambda) D^i`` (``D = d/dlambda``) is stored as a
list of integer coefficient lists, lowest degree first.  The theta form
``sum_e lambda^e P_e(theta)`` with ``theta = lambda D`` gives the local
exponents at ``0`` and at infinity directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Any, Sequence

import sympy

from .. import lattice as lat
from .series import PowerSeries

GUARD_TERMS = 20


class NoAnnihilatorFound(ValueError):
    pass


class IrregularSingularPoint(ValueError):
    pass


def _trim(p: Sequence[int]) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


@dataclass(frozen=True)
class FuchsianOperator:
    coeffs: tuple[tuple[int, ...], ...]  # coeffs[i][j]: lambda^j D^i

    def __post_init__(self) -> None:
        if not self.coeffs or not any(self.coeffs[-1]):
            raise ValueError("leading coefficient must be nonzero")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def degree(self) -> int:
        return max(len(_trim(p)) for p in self.coeffs) - 1

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> FuchsianOperator:
        return cls(tuple(tuple(int(c) for c in _trim(r)) for r in rows))

    def to_json(self) -> dict[str, Any]:
        return {"order": self.order, "coeffs": [list(p) for p in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> FuchsianOperator:
        op = cls.from_rows(data["coeffs"])
        if "order" in data and int(data["order"]) != op.order:
            raise ValueError("declared order does not match coefficient rows")
        return op

    def normalized(self) -> FuchsianOperator:
        """Content 1, lowest-degree term of the leading coefficient positive."""
        flat = [c for p in self.coeffs for c in p if c]
        g = 0
        for c in flat:
            g = gcd(g, abs(c))
        lead = next(c for c in self.coeffs[-1] if c)
        s = g if lead > 0 else -g
        return FuchsianOperator(tuple(tuple(c // s for c in p) for p in self.coeffs))

    def apply(self, series: PowerSeries) -> list[Fraction]:
        """Coefficients of ``L(s)`` that are determined by the truncation."""
        c = series.coeffs
        T = len(c)
        out = []
        for m in range(T - self.order):
            total = Fraction(0)
            for i, p in enumerate(self.coeffs):
                for j, pij in enumerate(p):
                    t = m - j
                    if pij and t >= 0:
                        total += pij * c[t + i] * _falling(t + i, i)
            out.append(total)
        return out

    def theta_form(self) -> dict[int, list[Fraction]]:
        """``{e: coefficients of P_e(theta)}`` with ``L = sum_e lambda^e P_e(theta)``."""
        th = sympy.Symbol("theta")
        forms: dict[int, Any] = {}
        for i, p in enumerate(self.coeffs):
            ff = sympy.ff(th, i)
            for j, pij in enumerate(p):
                if pij:
                    forms[j - i] = forms.get(j - i, 0) + pij * ff
        out = {}
        for e, expr in sorted(forms.items()):
            poly = sympy.Poly(sympy.expand(expr), th)
            if not poly.is_zero:
                out[e] = [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]
        return out

    def shifted(self, x0: Fraction) -> FuchsianOperator:
        """The same operator in the coordinate ``lambda - x0`` (scaled to integers)."""
        lam = sympy.Symbol("lam")
        x0 = sympy.Rational(x0.numerator, x0.denominator)
        rows = []
        for p in self.coeffs:
            poly = sympy.Poly(sum(c * (lam + x0) ** j for j, c in enumerate(p)), lam)
            rows.append([sympy.Rational(c) for c in reversed(poly.all_coeffs())])
        den = 1
        for r in rows:
            for c in r:
                den = lat.lcm(den, int(c.q))
        return FuchsianOperator.from_rows([[int(c * den) for c in r] for r in rows])

    def singular_points(self) -> list[complex]:
        """Distinct finite roots of the leading coefficient, as complex numbers."""
        return list(_distinct_roots(tuple(_trim(self.coeffs[-1]))))

    def rational_singular_points(self) -> list[Fraction]:
        lam = sympy.Symbol("lam")
        p = sum(c * lam**j for j, c in enumerate(self.coeffs[-1]))
        roots = sympy.roots(sympy.Poly(p, lam), filter="Q")
        return sorted(Fraction(int(r.p), int(r.q)) for r in roots)

    def __str__(self) -> str:
        lam = sympy.Symbol("lambda")
        parts = []
        for i in range(self.order, -1, -1):
            p = sympy.factor(sum(c * lam**j for j, c in enumerate(self.coeffs[i])))
            if p != 0:
                parts.append(f"({p})*D^{i}" if i else f"({p})")
        return " + ".join(parts)


@lru_cache(maxsize=256)
def _distinct_roots(p: tuple[int, ...]) -> tuple[complex, ...]:
    if len(p) <= 1:
        return ()
    lam = sympy.Symbol("lam")
    free = sympy.Poly(sympy.sqf_part(sympy.Poly(list(reversed(p)), lam)), lam)
    return tuple(complex(r) for r in free.nroots(n=30))


def _falling(x: int, k: int) -> int:
    out = 1
    for r in range(k):
        out *= x - r
    return out


def theta_operator(rows: dict[int, Sequence]) -> FuchsianOperator:
    """Build ``sum_e lambda^e P_e(theta)`` (``rows[e]`` lowest degree first, ``e >= 0``)."""
    order = max(len(_trim(c)) for c in rows.values()) - 1
    # theta^r = sum_i S(r, i) lambda^i D^i  (Stirling numbers of the second kind)
    coeffs: dict[tuple[int, int], Fraction] = {}
    for e, cs in rows.items():
        for r, c in enumerate(cs):
            if not c:
                continue
            for i in range(r + 1):
                s = sympy.functions.combinatorial.numbers.stirling(r, i, kind=2)
                if s:
                    key = (i, e + i)
                    coeffs[key] = coeffs.get(key, Fraction(0)) + Fraction(c) * int(s)
    den = 1
    for v in coeffs.values():
        den = lat.lcm(den, v.denominator)
    deg = max(j for _, j in coeffs) if coeffs else 0
    out = [[0] * (deg + 1) for _ in range(order + 1)]
    for (i, j), v in coeffs.items():
        out[i][j] = int(v * den)
    return FuchsianOperator.from_rows(out)


# --- annihilator fitting ------------------------------------------------------------------


@dataclass
class FitResult:
    operator: FuchsianOperator
    tried: list[tuple[int, int]]
    fit_terms: int
    verified_terms: int

    def to_json(self) -> dict[str, Any]:
        return {
            "operator": self.operator.to_json(),
            "order": self.operator.order,
            "degree": self.operator.degree,
            "rejected_shapes": [list(s) for s in self.tried],
            "fit_terms": self.fit_terms,
            "verified_terms": self.verified_terms,
        }


def _system(c: Sequence[Fraction], r: int, d: int, rows: int) -> list[list[Fraction]]:
    # unknown (i, j) at column i*(d+1)+j; equation m is [lambda^m] L(s) = 0
    A = []
    for m in range(rows):
        row = []
        for i in range(r + 1):
            for j in range(d + 1):
                t = m - j
                row.append(c[t + i] * _falling(t + i, i) if t >= 0 else Fraction(0))
        A.append(row)
    return A


def fit_ode(s: PowerSeries, max_order: int = 6, max_degree: int = 8, verify: bool = True) -> FitResult:
    """Minimal annihilating operator, by order and then degree.

    Every smaller shape is rejected by an exact nullspace computation, so
    the result is minimal for the available terms.  The operator is then
    checked on twice the truncation when the series can be extended.
    """
    need = (max_order + 1) * (max_degree + 1) + GUARD_TERMS
    if s.order < need:
        raise ValueError(f"need at least {need} terms, got {s.order}")
    tried = []
    for r in range(1, max_order + 1):
        for d in range(max_degree + 1):
            unknowns = (r + 1) * (d + 1)
            rows = min(unknowns + GUARD_TERMS, s.order - r)
            basis = lat.nullspace(_system(s.coeffs, r, d, rows))
            usable = [v for v in basis if any(v[r * (d + 1) :])]
            if not usable:
                tried.append((r, d))
                continue
            v = usable[0]
            den = 1
            for x in v:
                den = lat.lcm(den, x.denominator)
            ints = [int(x * den) for x in v]
            op = FuchsianOperator.from_rows([ints[i * (d + 1) : (i + 1) * (d + 1)] for i in range(r + 1)]).normalized()
            check = s
            if verify and s.generator is not None:
                check = s.extended(2 * s.order)
            if any(op.apply(check)):
                raise NoAnnihilatorFound(f"order {r}, degree {d} fits the first terms but not {check.order}")
            return FitResult(op, tried, s.order, check.order)
    raise NoAnnihilatorFound(f"no operator with order <= {max_order} and degree <= {max_degree}")


# --- local exponents --------------------------------------------------------------------------


@dataclass
class IndicialData:
    point: str
    polynomial: list[Fraction]  # coefficients in rho, lowest first
    exponents: list[Fraction]  # rational roots with multiplicity
    all_rational: bool

    @property
    def maximally_degenerate(self) -> bool:
        """All exponents equal integers (needed for maximal unipotency)."""
        return self.all_rational and len(set(self.exponents)) == 1 and self.exponents[0].denominator == 1

    def to_json(self) -> dict[str, Any]:
        return {
            "point": self.point,
            "polynomial": [str(c) for c in self.polynomial],
            "exponents": [str(e) for e in self.exponents],
            "all_rational": self.all_rational,
        }


def indicial_data(op: FuchsianOperator, point: Fraction | int | str = 0) -> IndicialData:
    """Indicial polynomial and rational exponents at a rational point or ``"inf"``.

    Raises
    ------
    IrregularSingularPoint
        The pole-order condition fails at ``point``.
    """
    at_inf = isinstance(point, str)
    if at_inf and point not in ("inf", "oo", "infinity"):
        raise ValueError(f"unknown point {point!r}")
    if at_inf:
        forms = op.theta_form()
        e = max(forms)
        coeffs = forms[e]
        rho = sympy.Symbol("rho")
        poly = sum(sympy.Rational(c.numerator, c.denominator) * (-rho) ** k for k, c in enumerate(coeffs))
        label = "inf"
    else:
        x0 = Fraction(point)
        forms = (op.shifted(x0) if x0 else op).theta_form()
        e = min(forms)
        coeffs = forms[e]
        rho = sympy.Symbol("rho")
        poly = sum(sympy.Rational(c.numerator, c.denominator) * rho**k for k, c in enumerate(coeffs))
        label = str(x0)
    if len(_trim(coeffs)) - 1 != op.order:
        raise IrregularSingularPoint(f"not a regular singular point: {label}")
    P = sympy.Poly(sympy.expand(poly), rho)
    lead = P.LC()
    P = sympy.Poly(P.as_expr() / lead, rho)
    roots = sympy.roots(P, filter="Q")
    exps = sorted(Fraction(int(r.p), int(r.q)) for r, mult in roots.items() for _ in range(mult))
    poly_coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(P.all_coeffs())]
    return IndicialData(label, poly_coeffs, exps, len(exps) == op.order)
