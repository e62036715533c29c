"""Maximal-unipotency verdicts for numerically computed monodromy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import gmpy2
import numpy as np
from gmpy2 import mpc

from .continuation import MonodromyMatrix

MAXIMALLY_UNIPOTENT = "MAXIMALLY_UNIPOTENT"
FAILS = "FAILS"
INCONCLUSIVE = "INCONCLUSIVE"
DEFAULT_TOL = 1e-6


@dataclass
class Verdict:
    verdict: str
    n: int
    tol: float
    error: float
    norms: list[float]  # ||(M - I)^j|| for j = 0..n
    reason: str
    power: int = 1

    @property
    def ok(self) -> bool:
        return self.verdict == MAXIMALLY_UNIPOTENT

    def to_json(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "n": self.n,
            "power": self.power,
            "tol": self.tol,
            "error": self.error,
            "norms": self.norms,
            "reason": self.reason,
        }


class _Exact:
    """Square matrix over multiprecision complex numbers."""

    def __init__(self, rows, precision: int):
        self.rows = [list(r) for r in rows]
        self.precision = precision

    @classmethod
    def of(cls, A: np.ndarray) -> _Exact:
        return cls([[mpc(complex(x)) for x in row] for row in A], 53)

    def _ctx(self):
        return gmpy2.context(gmpy2.get_context(), precision=self.precision)

    def __matmul__(self, other: _Exact) -> _Exact:
        with self._ctx():
            cols = list(zip(*other.rows))
            return _Exact([[sum((a * b for a, b in zip(r, c)), mpc(0)) for c in cols] for r in self.rows], self.precision)

    def __sub__(self, other: _Exact) -> _Exact:
        with self._ctx():
            return _Exact([[a - b for a, b in zip(r, t)] for r, t in zip(self.rows, other.rows)], self.precision)

    def identity(self) -> _Exact:
        n = len(self.rows)
        return _Exact([[mpc(int(i == j)) for j in range(n)] for i in range(n)], self.precision)

    def power(self, e: int) -> _Exact:
        out, base = self.identity(), self
        while e:
            if e & 1:
                out = out @ base
            base = base @ base
            e >>= 1
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(np.array([[complex(x) for x in r] for r in self.rows]), 2))


def _exact(M) -> tuple[_Exact, float, _Exact | None]:
    if isinstance(M, MonodromyMatrix):
        if M.fine is not None:
            coarse = _Exact(M.coarse, M.precision) if M.coarse is not None else None
            return _Exact(M.fine, M.precision), M.error, coarse
        return _Exact.of(M.matrix), M.error, None
    if isinstance(M, _Exact):
        return M, 0.0, None
    return _Exact.of(np.asarray(M, dtype=complex)), 0.0, None


def unipotency_verdict(M, n: int, tol: float = DEFAULT_TOL, error: float | None = None, power: int = 1) -> Verdict:
    """Decide whether ``M`` has minimal polynomial ``(X - 1)^n``.

    ``MAXIMALLY_UNIPOTENT`` needs ``||(M-I)^n|| <= tol`` and
    ``||(M-I)^(n-1)|| > 10 tol``.  Values between ``tol`` and ``10 tol``, or
    an error estimate of ``tol / 10`` or more, give ``INCONCLUSIVE``.
    Powers are formed in the working precision of ``M``.
    """
    A, eps, _ = _exact(M)
    if error is not None:
        eps = error
    A = A - A.identity()
    norms, P = [], A.identity()
    for j in range(n + 1):
        norms.append(P.norm())
        P = P @ A
    top, below = norms[n], norms[n - 1] if n >= 1 else np.inf
    if eps >= tol / 10:
        v, why = INCONCLUSIVE, f"error estimate {eps:.3g} is not below tol/10"
    elif top <= tol and below > 10 * tol:
        v, why = MAXIMALLY_UNIPOTENT, f"(M-I)^{n} vanishes and (M-I)^{n - 1} does not"
    elif top > 10 * tol:
        v, why = FAILS, f"||(M-I)^{n}|| = {top:.3g} is not small"
    elif below <= tol:
        v, why = FAILS, f"(M-I)^{n - 1} already vanishes: nilpotency index below {n}"
    else:
        v, why = INCONCLUSIVE, "a norm lies between tol and 10 tol"
    return Verdict(v, n, tol, float(eps), norms, why, power)


def power_verdict(M, e: int, n: int, tol: float = DEFAULT_TOL) -> Verdict:
    """Verdict for ``M^e``.

    With both step sizes available the error is the change in ``M^e``;
    otherwise the first-order bound ``e ||M||^(e-1) eps`` is used.
    """
    A, eps, coarse = _exact(M)
    P = A.power(e)
    if coarse is not None:
        eps_e = (P - coarse.power(e)).norm()
    else:
        eps_e = e * max(A.norm(), 1.0) ** (e - 1) * eps
    return unipotency_verdict(P, n, tol, error=eps_e, power=e)
