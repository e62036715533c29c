from fractions import Fraction
from math import comb

import numpy as np
import pytest
import sympy

from dwork_semistable.monodromy import (
    FAILS,
    INCONCLUSIVE,
    MAXIMALLY_UNIPOTENT,
    FuchsianOperator,
    LoopPath,
    NoAnnihilatorFound,
    PathTooCloseToSingularity,
    PowerSeries,
    UnsupportedCharacter,
    circle_loop,
    dwork_check,
    dwork_period_series,
    fit_ode,
    indicial_data,
    loop_product,
    monodromy_along,
    power_verdict,
    theta_operator,
    unipotency_verdict,
)


def constant_term_oracle(N, k):
    """[x^0] of (x_1 + ... + x_N)^(N k) / (x_1 ... x_N)^k via sympy expansion."""
    xs = sympy.symbols(f"x1:{N + 1}")
    poly = sympy.Poly(sum(xs) ** (N * k), *xs)
    return int(poly.coeff_monomial(sympy.prod([x**k for x in xs])))


def test_period_coefficients():
    s = dwork_period_series(3, 6)
    assert [int(c) for c in s.coeffs[:4]] == [1, 6, 90, 1680]
    assert [int(c) for c in s.coeffs] == [constant_term_oracle(3, k) for k in range(6)]
    assert int(dwork_period_series(5, 3).coeffs[1]) == 120 == constant_term_oracle(5, 1)
    assert dwork_period_series(4, 10).extended(20).coeffs[15] == Fraction(
        comb(60, 15) * comb(45, 15) * comb(30, 15)
    )


def test_period_series_rejects_nontrivial_characters():
    with pytest.raises(UnsupportedCharacter):
        dwork_period_series(5, 10, a=(0, 0, 0, 1, 4))
    assert dwork_period_series(5, 4, a=(0,) * 5).coeffs[1] == 120


def test_fit_trivial_series():
    const = fit_ode(PowerSeries.of([1] + [0] * 39), 1, 1, verify=False)
    assert const.operator.coeffs == ((), (1,))  # D
    geo = fit_ode(PowerSeries.of([1] * 40), 1, 1, verify=False)
    assert geo.operator.coeffs == ((-1,), (1, -1))  # (1 - lambda) D - 1


def test_fit_rejects_when_no_operator_fits():
    rnd = np.random.default_rng(1)
    junk = PowerSeries.of([int(x) for x in rnd.integers(-9, 10, 60)])
    with pytest.raises(NoAnnihilatorFound):
        fit_ode(junk, 1, 2, verify=False)


def test_n3_operator_is_hypergeometric():
    fit, _ = dwork_check(3)
    target = theta_operator({0: [0, 0, 1], 1: [-6, -27, -27]})
    # the fitted operator times lambda is the theta form above
    shifted = tuple((0,) + row for row in fit.operator.coeffs)
    assert FuchsianOperator.from_rows(shifted) == target
    assert not any(fit.operator.apply(dwork_period_series(3, 300)))


@pytest.mark.parametrize("N", [3, 4, 5])
def test_fitted_order_and_exponents(N):
    fit, check = dwork_check(N, powers=())
    assert fit.operator.order == N - 1
    ind = indicial_data(fit.operator, 0)
    assert ind.exponents == [0] * (N - 1) and ind.maximally_degenerate
    assert check.verdict.verdict == MAXIMALLY_UNIPOTENT


def test_exponents_at_other_points():
    fit, _ = dwork_check(3, powers=())
    assert indicial_data(fit.operator, Fraction(1, 27)).exponents == [0, 0]
    assert indicial_data(fit.operator, "inf").exponents == [Fraction(1, 3), Fraction(2, 3)]


def test_verdicts_on_known_matrices():
    J2 = np.array([[1, 1], [0, 1]], dtype=complex)
    assert unipotency_verdict(np.eye(1), 1).verdict == MAXIMALLY_UNIPOTENT
    assert unipotency_verdict(J2, 2).verdict == MAXIMALLY_UNIPOTENT
    assert unipotency_verdict(np.diag([1, -1]), 2).verdict == FAILS
    assert unipotency_verdict(np.eye(2), 2).verdict == FAILS
    assert power_verdict(J2, 3, 2).verdict == MAXIMALLY_UNIPOTENT
    assert unipotency_verdict(J2, 2, error=1e-7).verdict == INCONCLUSIVE
    # (M - I)^2 = 5e-6 I lies between tol and 10 tol
    assert unipotency_verdict(np.eye(2) + np.array([[0, 1], [5e-6, 0]]), 2).verdict == INCONCLUSIVE


def test_contractible_loop_is_identity():
    fit, _ = dwork_check(3, powers=())
    M = monodromy_along(fit.operator, circle_loop(-0.5, 0.1))
    assert np.linalg.norm(M.matrix - np.eye(2)) < 1e-20
    with pytest.raises(PathTooCloseToSingularity):
        monodromy_along(fit.operator, LoopPath(0.5j, (-0.5j, 0.5j)))


def test_n3_monodromy_norms_and_loop_product():
    fit, check = dwork_check(3)
    norms = check.verdict.norms
    assert norms[2] <= 1e-6 and norms[1] >= 1e-2
    assert all(v.verdict == MAXIMALLY_UNIPOTENT for v in check.powers.values())
    prod = loop_product(fit.operator)
    assert prod["deviation"] <= 1e-6
    assert len(prod["singularities"]) == 2
