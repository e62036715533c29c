"""Sparse multivariate polynomials over an exact coefficient ring.

Coefficient rings follow the small interface of
:class:`~dwork_semistable.finite_field.FiniteField` (``add``, ``mul``,
``neg``, ``is_zero``, ``coerce`` ...), so the same relation polynomial can be
read over the rationals and reduced into any F_q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from .finite_field import QQ

Monomial = tuple[int, ...]


class Polynomial:
    __slots__ = ("variables", "terms", "ring")

    def __init__(
        self,
        variables: Sequence[str],
        terms: Mapping[Monomial, Any] | None = None,
        ring=QQ,
        raw: bool = False,
    ):
        # raw=True: coefficients are already ring elements (not integers to embed)
        self.variables = tuple(variables)
        self.ring = ring
        self.terms: dict[Monomial, Any] = {}
        for mono, c in (terms or {}).items():
            if len(mono) != len(self.variables):
                raise ValueError("monomial length does not match variables")
            if not raw:
                c = ring.coerce(c)
            if not ring.is_zero(c):
                self.terms[tuple(mono)] = c

    # constructors -----------------------------------------------------------

    @classmethod
    def constant(cls, variables, c, ring=QQ, raw: bool = False) -> Polynomial:
        return cls(variables, {(0,) * len(variables): c}, ring, raw)

    @classmethod
    def var(cls, variables, name: str, ring=QQ) -> Polynomial:
        mono = tuple(int(v == name) for v in variables)
        if sum(mono) != 1:
            raise KeyError(name)
        return cls(variables, {mono: 1}, ring)

    @classmethod
    def gens(cls, variables, ring=QQ) -> dict[str, Polynomial]:
        return {v: cls.var(variables, v, ring) for v in variables}

    # arithmetic -------------------------------------------------------------

    def _new(self, terms: dict[Monomial, Any]) -> Polynomial:
        out = Polynomial.__new__(Polynomial)
        out.variables = self.variables
        out.ring = self.ring
        out.terms = {m: c for m, c in terms.items() if not self.ring.is_zero(c)}
        return out

    def _lift(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.variables != self.variables or other.ring != self.ring:
                raise ValueError("polynomials live in different rings")
            return other
        return Polynomial.constant(self.variables, other, self.ring)

    def __add__(self, other) -> Polynomial:
        other = self._lift(other)
        R = self.ring
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = R.add(terms[m], c) if m in terms else c
        return self._new(terms)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return self._new({m: self.ring.neg(c) for m, c in self.terms.items()})

    def __sub__(self, other) -> Polynomial:
        return self + (-self._lift(other))

    def __rsub__(self, other) -> Polynomial:
        return self._lift(other) - self

    def __mul__(self, other) -> Polynomial:
        other = self._lift(other)
        R = self.ring
        terms: dict[Monomial, Any] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                c = R.mul(c1, c2)
                terms[m] = R.add(terms[m], c) if m in terms else c
        return self._new(terms)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> Polynomial:
        if e < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.variables, self.ring.one, self.ring, raw=True)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other) -> bool:
        try:
            other = self._lift(other)
        except ValueError:
            return False
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.variables, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    # calculus / evaluation ---------------------------------------------------

    def diff(self, name: str) -> Polynomial:
        k = self.variables.index(name)
        R = self.ring
        terms: dict[Monomial, Any] = {}
        for m, c in self.terms.items():
            if m[k]:
                mm = list(m)
                mm[k] -= 1
                terms[tuple(mm)] = R.mul(R.from_int(m[k]), c)
        return self._new(terms)

    def evaluate(self, point: Mapping[str, Any] | Sequence[Any]):
        R = self.ring
        if isinstance(point, Mapping):
            vals = [point[v] for v in self.variables]
        else:
            vals = list(point)
        total = R.zero
        for m, c in self.terms.items():
            t = c
            for x, e in zip(vals, m):
                if e:
                    t = R.mul(t, R.pow(x, e))
            total = R.add(total, t)
        return total

    def substitute(self, images: Mapping[str, Polynomial], variables: Sequence[str] | None = None) -> Polynomial:
        """Ring homomorphism sending each variable to a polynomial.

        Variables absent from ``images`` map to themselves; the target ring
        has ``variables`` (defaults to the source variables).
        """
        target = tuple(variables) if variables is not None else self.variables
        gens = Polynomial.gens(target, self.ring)
        imgs = [images[v] if v in images else gens[v] for v in self.variables]
        out = Polynomial(target, {}, self.ring)
        cache: dict[tuple[int, int], Polynomial] = {}
        for m, c in self.terms.items():
            t = Polynomial.constant(target, c, self.ring, raw=True)
            for k, e in enumerate(m):
                if e:
                    if (k, e) not in cache:
                        cache[(k, e)] = imgs[k] ** e
                    t = t * cache[(k, e)]
            out = out + t
        return out

    def scale_variables(self, scalars: Mapping[str, Any]) -> Polynomial:
        """Substitute ``v -> s_v * v`` (diagonal action), computed termwise."""
        R = self.ring
        terms = {}
        for m, c in self.terms.items():
            t = c
            for v, e in zip(self.variables, m):
                if e and v in scalars:
                    t = R.mul(t, R.pow(scalars[v], e))
            terms[m] = t
        return self._new(terms)

    def map_coefficients(self, ring, fn: Callable[[Any], Any] | None = None) -> Polynomial:
        fn = fn or ring.coerce
        return Polynomial(self.variables, {m: fn(c) for m, c in self.terms.items()}, ring, raw=True)

    def reduce(self, ring) -> Polynomial:
        """Image in another coefficient ring, e.g. rationals -> F_q."""
        return self.map_coefficients(ring)

    def scalar_ratio(self, other: Polynomial):
        """``s`` with ``other == s * self``, or ``None`` if there is none."""
        if set(self.terms) != set(other.terms):
            return None
        if not self.terms:
            return self.ring.one
        R = self.ring
        m0 = min(self.terms)
        s = R.mul(other.terms[m0], R.inv(self.terms[m0]))
        for m, c in self.terms.items():
            if other.terms[m] != R.mul(s, c):
                return None
        return s

    def used_variables(self) -> set[str]:
        return {v for k, v in enumerate(self.variables) if any(m[k] for m in self.terms)}

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    # formatting --------------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Monomial, Any]]:
        # graded reverse order: total degree descending, then lex descending
        return sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        R = self.ring
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for v, e in zip(self.variables, m):
                if e == 1:
                    factors.append(v)
                elif e:
                    factors.append(f"{v}^{e}")
            coef = R.format(c)
            neg = coef.startswith("-")
            if neg:
                coef = coef[1:]
            if factors and coef == "1":
                body = "*".join(factors)
            else:
                body = "*".join([coef] + factors)
            parts.append(("- " if neg else "+ ") + body)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    __repr__ = __str__


def monomial_product(variables: Sequence[str], names: Iterable[str], ring=QQ) -> Polynomial:
    mono = [0] * len(variables)
    for n in names:
        mono[list(variables).index(n)] += 1
    return Polynomial(variables, {tuple(mono): 1}, ring)


@dataclass
class ChartPresentation:
    """A finitely presented algebra over an abstract base ring.

    ``relations`` generate the ideal; ``inverted`` lists variables that are
    units; ``base`` names the base ring and its open condition; ``structure``
    maps a base coordinate (``"T"`` or ``"S"``) to the expression it takes on
    the chart.
    """

    kind: str
    variables: tuple[str, ...]
    inverted: tuple[str, ...]
    relations: list[Polynomial]
    base: str
    structure: dict[str, str] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "variables": list(self.variables),
            "inverted": list(self.inverted),
            "relations": [str(r) for r in self.relations],
            "base": self.base,
            "structure": dict(sorted(self.structure.items())),
            "meta": self.meta,
        }
