"""Period series, Picard-Fuchs operators and monodromy of the Dwork family.

The loop around ``t = infinity`` is studied as the loop around ``lambda = 0``
for ``lambda = (N t)^(-N)``; the covering only raises the monodromy to a
power, which does not change maximal unipotency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np

from .continuation import (
    LoopPath,
    MonodromyMatrix,
    PathTooCloseToSingularity,
    PrecisionLoss,
    circle_loop,
    monodromy_along,
    spoke_loop,
    standard_loop,
)
from .operator import (
    FitResult,
    FuchsianOperator,
    IndicialData,
    IrregularSingularPoint,
    NoAnnihilatorFound,
    fit_ode,
    indicial_data,
    theta_operator,
)
from .series import PowerSeries, UnsupportedCharacter, dwork_coefficient, dwork_period_series
from .verdict import _Exact
from .verdict import FAILS, INCONCLUSIVE, MAXIMALLY_UNIPOTENT, Verdict, power_verdict, unipotency_verdict

__all__ = [
    "FAILS",
    "INCONCLUSIVE",
    "MAXIMALLY_UNIPOTENT",
    "FitResult",
    "FuchsianOperator",
    "IndicialData",
    "IrregularSingularPoint",
    "LoopPath",
    "MonodromyMatrix",
    "NoAnnihilatorFound",
    "PathTooCloseToSingularity",
    "PowerSeries",
    "PrecisionLoss",
    "UnsupportedCharacter",
    "Verdict",
    "attach_verdicts",
    "check_operator",
    "circle_loop",
    "dwork_check",
    "dwork_coefficient",
    "dwork_period_series",
    "fit_ode",
    "indicial_data",
    "loop_product",
    "monodromy_along",
    "power_verdict",
    "spoke_loop",
    "standard_loop",
    "theta_operator",
    "unipotency_verdict",
]


class InconsistentPrescreen(AssertionError):
    """A maximal-unipotency verdict at a point whose exponents forbid it."""


@dataclass
class PointCheck:
    operator: FuchsianOperator
    point: str
    indicial: IndicialData
    monodromy: MonodromyMatrix
    verdict: Verdict
    powers: dict[int, Verdict] = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return not self.verdict.ok or self.indicial.maximally_degenerate

    def to_json(self) -> dict[str, Any]:
        return {
            "operator": self.operator.to_json(),
            "point": self.point,
            "indicial": self.indicial.to_json(),
            "monodromy": self.monodromy.to_json(),
            "verdict": self.verdict.to_json(),
            "powers": {str(e): v.to_json() for e, v in sorted(self.powers.items())},
            "prescreen_consistent": self.consistent,
        }


def check_operator(
    op: FuchsianOperator,
    point=0,
    tol: float = 1e-6,
    powers=(),
    segments: int = 16,
) -> PointCheck:
    """Indicial pre-screen, loop monodromy and verdicts at a rational point.

    Raises
    ------
    InconsistentPrescreen
        The verdict is maximal unipotency but the local exponents are not
        all equal integers.
    """
    ind = indicial_data(op, point)
    M = monodromy_along(op, standard_loop(op, complex(float(point)), segments))
    v = unipotency_verdict(M, op.order, tol)
    check = PointCheck(op, str(point), ind, M, v, {e: power_verdict(M, e, op.order, tol) for e in powers})
    if not check.consistent:
        raise InconsistentPrescreen(f"verdict {v.verdict} contradicts exponents {ind.exponents}")
    return check


@lru_cache(maxsize=None)
def _dwork_fit(N: int, terms: int) -> FitResult:
    return fit_ode(dwork_period_series(N, terms), max_order=N, max_degree=N + 1)


def dwork_check(N: int, terms: int = 200, tol: float = 1e-6, powers=(2, 6)) -> tuple[FitResult, PointCheck]:
    """Fit the trivial-character operator and test the loop around ``lambda = 0``."""
    fit = _dwork_fit(N, terms)
    return fit, check_operator(fit.operator, 0, tol, powers)


def loop_product(op: FuchsianOperator, segments: int = 16) -> dict[str, Any]:
    """Loops around every finite singularity and around infinity, composed.

    The basepoint sits above all singular points; counterclockwise spoke
    loops taken in increasing argument, followed by the clockwise loop
    around all of them (the positive loop around infinity), give a
    contractible loop.
    """
    sing = op.singular_points()
    center = complex(np.mean(sing)) if sing else 0j
    spread = max((abs(z - center) for z in sing), default=0.5) or 0.5
    base = center + 2j * spread + 1j * max((abs(z.imag) for z in sing), default=0.0)
    sep = min((abs(a - b) for i, a in enumerate(sing) for b in sing[i + 1 :]), default=spread)
    r = 0.25 * min(sep, spread)
    order = sorted(sing, key=lambda z: np.angle(z - base))
    loops = [spoke_loop(base, z, r, segments) for z in order]
    outer = circle_loop(center, abs(base - center), 2 * segments, np.pi / 2).reversed()
    if outer.basepoint != base:
        outer = LoopPath(base, outer.vertices, outer.encircles)
    mats = [monodromy_along(op, lp) for lp in loops]
    m_inf = monodromy_along(op, outer)
    total = _Exact(m_inf.fine, m_inf.precision)
    for M in reversed(mats):
        total = total @ _Exact(M.fine, M.precision)
    err = sum(M.error for M in mats) + m_inf.error
    dev = (total - total.identity()).norm()
    return {
        "singularities": [[z.real, z.imag] for z in order],
        "basepoint": [base.real, base.imag],
        "deviation": dev,
        "error": err,
        "local": [M.to_json() for M in mats],
        "infinity": m_inf.to_json(),
    }


def attach_verdicts(report, terms: int = 200, tol: float = 1e-6):
    """Fill the verdict slot of entries with exponents ``(0, ..., 0)``.

    Other entries keep their screening verdict; no period series is built
    for them.
    """
    for entry in report.entries:
        N = entry.character.N
        if entry.rank == 0 or any(x % N for x in entry.character.a):
            continue
        fit, check = dwork_check(entry.character.N, terms, tol, powers=())
        entry.verdict = check.verdict.verdict
        entry.evidence = {
            "operator_order": fit.operator.order,
            "rank": entry.rank,
            "order_matches_rank": fit.operator.order == entry.rank,
            "verdict": check.verdict.to_json(),
        }
    return report
