"""Monodromy by Taylor-series transport along polygonal loops.

Solutions are carried as Taylor coefficient vectors.  Each step recentres
at ``c`` and rescales the local variable so that ``lambda = c + h z``
with ``z`` running from 0 to 1, which keeps the coefficients of order
``|h| / rho`` (``rho`` the distance to the nearest singularity) bounded.

The basis at the basepoint ``b`` is the Frobenius basis of the local
variable ``(lambda - b) / s``: ``y_j = ((lambda - b) / s)^j + O(...)``,
where ``s`` is the distance from ``b`` to the nearest singular point.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from math import comb
from typing import Any, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpc

from .operator import FuchsianOperator

DEFAULT_TERMS = 80
DEFAULT_STEP = 0.5
DEFAULT_PRECISION = 128


class PathTooCloseToSingularity(ValueError):
    pass


class PrecisionLoss(ArithmeticError):
    def __init__(self, message: str, error: float):
        super().__init__(message)
        self.error = error


@dataclass(frozen=True)
class LoopPath:
    basepoint: complex
    vertices: tuple[complex, ...]  # visited in order, returning to the basepoint
    encircles: str = ""

    def segments(self) -> list[tuple[complex, complex]]:
        pts = [self.basepoint, *self.vertices, self.basepoint]
        return [(a, b) for a, b in zip(pts, pts[1:]) if a != b]

    def reversed(self) -> LoopPath:
        return LoopPath(self.basepoint, tuple(reversed(self.vertices)), self.encircles + "^-1")

    def then(self, other: LoopPath) -> LoopPath:
        if self.basepoint != other.basepoint:
            raise ValueError("loops have different basepoints")
        verts = (*self.vertices, self.basepoint, *other.vertices)
        return LoopPath(self.basepoint, verts, f"{self.encircles}*{other.encircles}")

    def to_json(self) -> dict[str, Any]:
        return {
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "vertices": [[v.real, v.imag] for v in self.vertices],
            "encircles": self.encircles,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> LoopPath:
        def c(p):
            return complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)

        return cls(c(data["basepoint"]), tuple(c(v) for v in data["vertices"]), data.get("encircles", ""))


def circle_loop(center: complex, radius: float, segments: int = 16, start_angle: float = 0.0, clockwise: bool = False) -> LoopPath:
    """Regular polygon around ``center``, based at its first vertex."""
    sign = -1 if clockwise else 1
    pts = [center + radius * cmath.exp(1j * (start_angle + sign * 2 * np.pi * k / segments)) for k in range(segments)]
    return LoopPath(pts[0], tuple(pts[1:]), f"{center}")


def spoke_loop(base: complex, center: complex, radius: float, segments: int = 16) -> LoopPath:
    """From ``base`` straight to the circle around ``center``, once around counterclockwise, and back."""
    d = base - center
    angle = cmath.phase(d)
    circle = circle_loop(center, radius, segments, angle)
    entry = circle.basepoint
    return LoopPath(base, (entry, *circle.vertices, entry), f"{center}")


@dataclass
class MonodromyMatrix:
    matrix: np.ndarray
    error: float
    loop: LoopPath
    scale: float
    steps: int
    history: list[float] = field(default_factory=list)
    coarse: list | None = None  # multiprecision, twice the step
    fine: list | None = None  # multiprecision entries of ``matrix``
    precision: int = 53

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def to_json(self) -> dict[str, Any]:
        return {
            "matrix": [[[z.real, z.imag] for z in row] for row in self.matrix],
            "error": self.error,
            "scale": self.scale,
            "steps": self.steps,
            "loop": self.loop.to_json(),
        }


def _shift_poly(p: Sequence[int], c, h) -> list:
    """Coefficients in ``z`` of ``p(c + h z)``."""
    out = [mpc(0)] * len(p)
    for j, a in enumerate(p):
        if a:
            for k in range(j + 1):
                out[k] += a * comb(j, k) * c ** (j - k) * h**k
    return out


def _ff(x: int, k: int) -> int:
    out = 1
    for r in range(k):
        out *= x - r
    return out


class _Transport:
    def __init__(self, op: FuchsianOperator, terms: int):
        self.n = op.order
        self.terms = terms
        self.rows = [list(p) for p in op.coeffs]
        self.sing = np.array(op.singular_points(), dtype=complex)
        K, n = terms, self.n
        self.binom = [[comb(m, k) for m in range(K + n)] for k in range(n)]

    def distance(self, z: complex) -> float:
        return float(np.min(np.abs(self.sing - complex(z)))) if len(self.sing) else np.inf

    def step(self, state: list[list], c, h) -> list[list]:
        """Taylor coefficients (in units of ``h``) at ``c + h`` from those at ``c``."""
        n, K = self.n, self.terms
        cols = len(state[0])
        # sum_i h^(n-i) p_i(c + h z) y^(i)(z) = 0
        P = [[h ** (n - i) * x for x in _shift_poly(p, c, h)] for i, p in enumerate(self.rows)]
        lead = P[n][0]
        b = [list(r) for r in state]
        for m in range(K):
            acc = [mpc(0)] * cols
            for i in range(n + 1):
                for j, pij in enumerate(P[i]):
                    t = m - j
                    if t < 0 or (i == n and j == 0) or not pij:
                        continue
                    f = pij * _ff(t + i, i)
                    row = b[t + i]
                    acc = [a + f * x for a, x in zip(acc, row)]
            d = -lead * _ff(m + n, n)
            b.append([a / d for a in acc])
        # new coefficients a_k = sum_m b_m C(m, k)
        out = []
        for k in range(n):
            w = self.binom[k]
            out.append([sum((w[m] * b[m][col] for m in range(k, K + n)), mpc(0)) for col in range(cols)])
        return out


def _scale_rows(state: list[list], ratio) -> list[list]:
    out, f = [], mpc(1)
    for row in state:
        out.append([f * x for x in row])
        f *= ratio
    return out


def _segment_distance(a: complex, b: complex, s: complex) -> float:
    d = b - a
    t = max(0.0, min(1.0, ((s - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(a + t * d - s)


def _transport(op: FuchsianOperator, path: LoopPath, step: float, terms: int, precision: int) -> tuple[list[list], int, float]:
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        tr = _Transport(op, terms)
        n = tr.n
        s = tr.distance(path.basepoint)
        state = [[mpc(1) if r == c else mpc(0) for c in range(n)] for r in range(n)]  # units of s
        unit = mpc(s)
        steps = 0
        for a, b in path.segments():
            pos, end = mpc(a), mpc(b)
            while abs(end - pos) > 1e-30 * max(1.0, abs(b)):
                rho = tr.distance(complex(pos))
                length = min(float(abs(end - pos)), step * rho)
                last = length == float(abs(end - pos))
                h = end - pos if last else (end - pos) / abs(end - pos) * length
                state = tr.step(_scale_rows(state, h / unit), pos, h)
                unit = h
                pos = end if last else pos + h
                steps += 1
        return _scale_rows(state, mpc(s) / unit), steps, s


def _to_numpy(A: list[list]) -> np.ndarray:
    return np.array([[complex(x) for x in row] for row in A], dtype=complex)


def monodromy_along(
    op: FuchsianOperator,
    path: LoopPath,
    step: float = DEFAULT_STEP,
    terms: int = DEFAULT_TERMS,
    margin: float | None = None,
    max_error: float = 1e-3,
    precision: int = DEFAULT_PRECISION,
) -> MonodromyMatrix:
    """Monodromy of ``op`` along ``path`` with a step-halving error estimate.

    Arithmetic uses ``precision`` bits; the matrix in that precision is
    kept on the result so that powers can be formed without cancellation.

    Raises
    ------
    PathTooCloseToSingularity
        Some segment passes within ``margin`` of a singular point.
    PrecisionLoss
        Halving the step changes the matrix by more than ``max_error``.
    """
    sing = op.singular_points()
    base_d = min((abs(path.basepoint - z) for z in sing), default=np.inf)
    if margin is None:
        margin = 1e-9 * max(1.0, max((abs(z) for z in sing), default=1.0))
    for a, b in path.segments():
        for z in sing:
            if _segment_distance(a, b, z) < margin:
                raise PathTooCloseToSingularity(f"segment {a} -> {b} passes within {margin} of {z}")
    if base_d == 0:
        raise PathTooCloseToSingularity("basepoint is singular")
    H1, _, s = _transport(op, path, step, terms, precision)
    H2, steps2, _ = _transport(op, path, step / 2, terms, precision)
    M2 = _to_numpy(H2)
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        diff = _to_numpy([[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(H1, H2)])
    err = float(np.linalg.norm(diff, 2))
    if not np.isfinite(err) or err > max_error:
        raise PrecisionLoss(f"step halving changed the monodromy by {err}", err)
    return MonodromyMatrix(M2, err, path, s, steps2, [err], H1, H2, precision)


def standard_loop(op: FuchsianOperator, center: complex = 0, segments: int = 16) -> LoopPath:
    """Counterclockwise polygon around ``center`` at half the distance to the next singularity."""
    others = [z for z in op.singular_points() if abs(z - center) > 1e-12 * max(1.0, abs(center))]
    r = 0.5 * min((abs(z - center) for z in others), default=1.0)
    return circle_loop(center, r, segments, start_angle=np.pi / 2)
