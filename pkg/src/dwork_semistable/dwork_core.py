"""Characters of the Dwork group, their eigenpart ranks and Galois orbits.

A character of ``H_0 = {xi in mu_N^N : prod xi = 1} / mu_N`` is given by an
exponent vector ``a`` with ``sum(a) = 0 mod N``.  Two exponent vectors that
differ by a constant vector define the same character on ``H_0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import gcd
from typing import Any, Sequence


class CharacterError(ValueError):
    """Invalid character data."""


class SumNotZero(CharacterError):
    pass


class BadDegree(CharacterError):
    pass


class LengthMismatch(CharacterError):
    pass


@dataclass(frozen=True)
class DworkCharacter:
    N: int
    a: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.N < 2:
            raise BadDegree(f"degree must be at least 2, got {self.N}")
        if len(self.a) != self.N:
            raise LengthMismatch(f"expected {self.N} exponents, got {len(self.a)}")
        if any(not 0 <= x < self.N for x in self.a):
            raise CharacterError("exponents must be canonical residues in [0, N-1]")
        if sum(self.a) % self.N:
            raise SumNotZero(f"sum of exponents {sum(self.a)} is not 0 mod {self.N}")

    @property
    def contains_zero(self) -> bool:
        return 0 in self.a

    def scaled(self, m: int) -> DworkCharacter:
        return DworkCharacter(self.N, tuple(m * x % self.N for x in self.a))

    def to_json(self) -> dict[str, Any]:
        return {"N": self.N, "a": list(self.a)}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> DworkCharacter:
        return validate_character(int(data["N"]), [int(x) for x in data["a"]])


def validate_character(N: int, a: Sequence[int]) -> DworkCharacter:
    """Reduce ``a`` mod ``N`` and check the product-one condition."""
    if N < 2:
        raise BadDegree(f"degree must be at least 2, got {N}")
    if len(a) != N:
        raise LengthMismatch(f"expected {N} exponents, got {len(a)}")
    if sum(a) % N:
        raise SumNotZero(f"sum of exponents {sum(a)} is not 0 mod {N}")
    return DworkCharacter(N, tuple(int(x) % N for x in a))


@dataclass(frozen=True)
class RankReport:
    character: DworkCharacter
    rank: int
    shifts: tuple[int, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "character": self.character.to_json(),
            "rank": self.rank,
            "shifts": list(self.shifts),
        }


def eigen_rank(chi: DworkCharacter) -> RankReport:
    """Rank of the chi-eigenpart of the middle cohomology.

    Computed on the Fermat fibre: the eigenvectors are indexed by shifts
    ``c`` with ``a_i + c != 0 (mod N)`` for every ``i``.
    """
    N = chi.N
    shifts = tuple(c for c in range(N) if all((x + c) % N for x in chi.a))
    return RankReport(chi, len(shifts), shifts)


def brute_force_rank(chi: DworkCharacter) -> int:
    """Count Fermat basis vectors on which ``H_0`` acts through ``chi``.

    The primitive middle cohomology of the Fermat hypersurface of degree
    ``N`` has a basis indexed by ``w in {1..N-1}^N`` with ``sum(w) = 0 mod N``,
    ``H`` acting on the ``w``-vector by ``xi -> prod xi_i^{w_i}``.  A vector
    lies in the chi-eigenpart iff ``w - a`` is constant mod ``N``.
    """
    N = chi.N
    count = 0
    for w in product(range(1, N), repeat=N):
        if sum(w) % N:
            continue
        d = (w[0] - chi.a[0]) % N
        if all((wi - ai - d) % N == 0 for wi, ai in zip(w, chi.a)):
            count += 1
    return count


def _shift_class(v: Sequence[int], N: int) -> tuple[int, ...]:
    d = v[0]
    return tuple((x - d) % N for x in v)


def brute_force_rank_table(N: int) -> dict[tuple[int, ...], int]:
    """Eigenvector counts for every character class of degree ``N`` at once.

    Enumerates the Fermat basis a single time and buckets each vector by
    the ``H_0``-character it spans; keys are exponent vectors normalised so
    the first entry is zero.
    """
    table: dict[tuple[int, ...], int] = {}
    for w in product(range(1, N), repeat=N):
        if sum(w) % N:
            continue
        key = _shift_class(w, N)
        table[key] = table.get(key, 0) + 1
    return table


def all_characters(N: int):
    """Every valid exponent vector of degree ``N`` (``N^(N-1)`` of them)."""
    for head in product(range(N), repeat=N - 1):
        last = -sum(head) % N
        yield DworkCharacter(N, head + (last,))


@dataclass(frozen=True)
class ConjugateFamily:
    base: DworkCharacter
    members: tuple[tuple[int, DworkCharacter], ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "base": self.base.to_json(),
            "members": [{"m": m, "character": c.to_json()} for m, c in self.members],
        }


def units(N: int) -> list[int]:
    return [m for m in range(1, N) if gcd(m, N) == 1] if N > 1 else []


def conjugate_orbit(chi: DworkCharacter) -> ConjugateFamily:
    """Galois conjugates: ``sigma_m`` sends ``zeta -> zeta^m`` and ``a -> m a``."""
    return ConjugateFamily(chi, tuple((m, chi.scaled(m)) for m in units(chi.N)))


UNDETERMINED = "undetermined by sufficient condition"
EMPTY = "empty eigenpart"


@dataclass
class ConjugateEntry:
    m: int
    character: DworkCharacter
    rank: int
    sufficient: bool
    verdict: str | None = None
    evidence: dict[str, Any] | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "m": self.m,
            "character": self.character.to_json(),
            "rank": self.rank,
            "sufficient": self.sufficient,
            "verdict": self.verdict,
        }
        if self.evidence is not None:
            out["evidence"] = self.evidence
        return out


@dataclass
class HypothesisReport:
    character: DworkCharacter
    entries: list[ConjugateEntry] = field(default_factory=list)

    @property
    def all_sufficient(self) -> bool:
        return all(e.sufficient for e in self.entries)

    def to_json(self) -> dict[str, Any]:
        return {
            "character": self.character.to_json(),
            "all_sufficient": self.all_sufficient,
            "conjugates": [e.to_json() for e in self.entries],
        }


def hypothesis_report(chi: DworkCharacter) -> HypothesisReport:
    """Inputs to the maximal-unipotency hypothesis, one entry per conjugate.

    ``sufficient`` records whether 0 occurs among the exponents, which is
    known to imply the hypothesis.  The ``verdict`` slot starts as
    ``"sufficient (0 in exponents)"``, :data:`UNDETERMINED` or :data:`EMPTY`;
    :func:`dwork_semistable.monodromy.attach_verdicts` overwrites it with a
    numerical verdict when the trivial-character operator applies.
    """
    report = HypothesisReport(chi)
    for m, c in conjugate_orbit(chi).members:
        n = eigen_rank(c).rank
        sufficient = c.contains_zero
        if n == 0:
            verdict = EMPTY
        elif sufficient:
            verdict = "sufficient (0 in exponents)"
        else:
            verdict = UNDETERMINED
        report.entries.append(ConjugateEntry(m, c, n, sufficient, verdict))
    return report
