"""Finite fields F_q as lookup tables.

Elements are the integers ``0..q-1``.  For ``q = p^k`` the integer with
base-``p`` digits ``c_0, c_1, ...`` encodes ``c_0 + c_1 x + ...`` modulo the
lexicographically smallest monic irreducible polynomial of degree ``k``, so
the prime subfield is ``0..p-1`` with ordinary modular arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

MAX_ORDER = 1024


def factor_prime_power(q: int) -> tuple[int, int]:
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    if r != 1:
        raise ValueError(f"{q} is not a prime power")
    return p, k


def _poly_mulmod(a, b, mod, p):
    # coefficient lists, low degree first; mod is monic
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    k = len(mod) - 1
    for d in range(len(out) - 1, k - 1, -1):
        c = out[d]
        if c:
            for j in range(k + 1):
                out[d - k + j] = (out[d - k + j] - c * mod[j]) % p
    return out[:k] + [0] * max(0, k - len(out))


def _is_irreducible(mod, p) -> bool:
    """True iff ``mod`` is irreducible over F_p (brute force over divisors)."""
    k = len(mod) - 1
    for d in range(1, k // 2 + 1):
        for coeffs in product(range(p), repeat=d):
            g = list(coeffs) + [1]
            # polynomial remainder of mod by g
            r = list(mod)
            for deg in range(len(r) - 1, d - 1, -1):
                c = r[deg]
                if c:
                    for j in range(d + 1):
                        r[deg - d + j] = (r[deg - d + j] - c * g[j]) % p
            if not any(r[:d]):
                return False
    return True


def _irreducible(p: int, k: int) -> list[int]:
    for coeffs in product(range(p), repeat=k):
        mod = list(reversed(coeffs)) + [1]
        if mod[0] and _is_irreducible(mod, p):
            return mod
    raise AssertionError("no irreducible polynomial found")


class FiniteField:
    """The field with ``q`` elements, usable as a polynomial coefficient ring."""

    def __init__(self, q: int):
        if q > MAX_ORDER:
            raise ValueError(f"field order {q} exceeds table limit {MAX_ORDER}")
        self.q = q
        self.p, self.k = factor_prime_power(q)
        p, k = self.p, self.k
        if k == 1:
            idx = np.arange(q)
            self.add_table = (idx[:, None] + idx[None, :]) % q
            self.mul_table = (idx[:, None] * idx[None, :]) % q
            self.modulus = [0, 1]
        else:
            self.modulus = _irreducible(p, k)
            digits = [[(e // p**j) % p for j in range(k)] for e in range(q)]

            def encode(cs):
                return sum(c * p**j for j, c in enumerate(cs))

            add = np.empty((q, q), dtype=np.int64)
            mul = np.empty((q, q), dtype=np.int64)
            for a in range(q):
                for b in range(q):
                    add[a, b] = encode([(x + y) % p for x, y in zip(digits[a], digits[b])])
                    mul[a, b] = encode(_poly_mulmod(digits[a], digits[b], self.modulus, p))
            self.add_table, self.mul_table = add, mul
        self.add_table = np.ascontiguousarray(self.add_table, dtype=np.int64)
        self.mul_table = np.ascontiguousarray(self.mul_table, dtype=np.int64)
        self.neg_table = np.argmin(self.add_table, axis=1).astype(np.int64)
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = int(np.nonzero(self.mul_table[a] == 1)[0][0])
        self.inv_table = inv
        self.primitive_element = self._find_generator()

    def _find_generator(self) -> int:
        for g in range(1, self.q):
            x, order = g, 1
            while x != 1:
                x = int(self.mul_table[x, g])
                order += 1
            if order == self.q - 1:
                return g
        raise AssertionError("multiplicative group is not cyclic")

    # ring interface used by Polynomial
    zero = 0
    one = 1

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def sub(self, a: int, b: int) -> int:
        return int(self.add_table[a, self.neg_table[b]])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_q")
        return int(self.inv_table[a])

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            a, e = self.inv(a), -e
        out = 1
        while e:
            if e & 1:
                out = self.mul(out, a)
            a = self.mul(a, a)
            e >>= 1
        return out

    def is_zero(self, a: int) -> bool:
        return a == 0

    def from_int(self, n: int) -> int:
        return int(n) % self.p

    def coerce(self, c) -> int:
        if isinstance(c, Fraction):
            if c.denominator % self.p == 0:
                raise ZeroDivisionError("denominator divisible by the characteristic")
            return self.mul(self.from_int(c.numerator), self.inv(self.from_int(c.denominator)))
        return self.from_int(int(c))

    def format(self, a: int) -> str:
        return str(a)

    def elements(self) -> range:
        return range(self.q)

    def root_of_unity(self, n: int) -> int:
        """An element of exact multiplicative order ``n``."""
        if (self.q - 1) % n:
            raise ValueError(f"F_{self.q} has no primitive {n}-th root of unity")
        return self.pow(self.primitive_element, (self.q - 1) // n)

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("GF", self.q))

    def __repr__(self) -> str:
        return f"GF({self.q})"


@lru_cache(maxsize=None)
def GF(q: int) -> FiniteField:
    return FiniteField(q)


def parse_field(spec: str | int) -> FiniteField:
    """Accept ``7``, ``"7"`` or ``"q7"``."""
    s = str(spec).strip().lower()
    if s.startswith("q"):
        s = s[1:]
    return GF(int(s))


class RationalField:
    """Exact rationals with the same interface as :class:`FiniteField`."""

    zero = Fraction(0)
    one = Fraction(1)
    p = 0

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        return 1 / Fraction(a)

    def pow(self, a, e):
        return Fraction(a) ** e

    def is_zero(self, a) -> bool:
        return a == 0

    def from_int(self, n):
        return Fraction(n)

    def coerce(self, c):
        return Fraction(c)

    def format(self, a) -> str:
        return str(a)

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalField)

    def __hash__(self) -> int:
        return hash("QQ")

    def __repr__(self) -> str:
        return "QQ"


QQ = RationalField()
