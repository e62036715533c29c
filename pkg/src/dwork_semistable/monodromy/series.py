"""Exact power series, in particular the holomorphic period of the Dwork family."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Sequence


class UnsupportedCharacter(ValueError):
    """Only the trivial character has a built-in period series."""


@dataclass(frozen=True)
class PowerSeries:
    """Truncated series ``sum c_k lambda^k``; ``generator`` can produce more terms."""

    coeffs: tuple[Fraction, ...]
    variable: str = "lambda"
    generator: Callable[[int], Fraction] | None = None

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def extended(self, terms: int) -> PowerSeries:
        if terms <= self.order:
            return PowerSeries(self.coeffs[:terms], self.variable, self.generator)
        if self.generator is None:
            raise ValueError("series cannot be extended without a generator")
        more = tuple(Fraction(self.generator(k)) for k in range(self.order, terms))
        return PowerSeries(self.coeffs + more, self.variable, self.generator)

    def to_json(self) -> dict:
        return {"variable": self.variable, "order": self.order, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def of(cls, coeffs: Sequence, variable: str = "lambda") -> PowerSeries:
        return cls(tuple(Fraction(c) for c in coeffs), variable)


def dwork_coefficient(N: int, k: int) -> int:
    """``(Nk)! / (k!)^N``."""
    return factorial(N * k) // factorial(k) ** N


def dwork_period_series(N: int, terms: int = 200, a: Sequence[int] | None = None) -> PowerSeries:
    """Period of the trivial-character part in ``lambda = (N t)^(-N)``.

    Raises
    ------
    UnsupportedCharacter
        ``a`` is given and is not the zero vector.
    """
    if N < 3:
        raise ValueError("the period series needs N >= 3")
    if a is not None and any(x % N for x in a):
        raise UnsupportedCharacter(f"no period series for a={tuple(a)}; supply an operator instead")
    coeffs = []
    c = 1
    for k in range(terms):
        coeffs.append(Fraction(c))
        # c_{k+1} / c_k = prod_{r=1..N} (N k + r) / (k + 1)^N
        num = 1
        for r in range(1, N + 1):
            num *= N * k + r
        c = c * num // (k + 1) ** N
    return PowerSeries(tuple(coeffs), "lambda", lambda k: Fraction(dwork_coefficient(N, k)))


def multinomial_constant_term(N: int, k: int) -> int:
    """Constant term of ``(x_1 + ... + x_N)^(Nk) / (x_1...x_N)^k`` by direct summation.

    Independent of the factorial formula: sums multinomial coefficients
    ``binom(Nk, k) binom(Nk - k, k) ...`` term by term.
    """
    from math import comb

    total, rest = 1, N * k
    for _ in range(N):
        total *= comb(rest, k)
        rest -= k
    return total
