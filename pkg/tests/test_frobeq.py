import math
from fractions import Fraction

import pytest

from loggrowth.padics import PadicContext
from loggrowth.series import LaurentSeries, LogSeries
from loggrowth.ore import TwistedPoly, from_slope_factors, ore_mul
from loggrowth.frobeq import (Config, FrobeqError, classify_log_growth, feasible_depth,
                              ladder_profile, ladder_slope, solve_fixed_point, verify_solution)

P = 5


def L(ctx, d):
    return LaurentSeries.polynomial(ctx, d)


def test_trivial_fixed_point(ctx5):
    res = solve_fixed_point(TwistedPoly(ctx5, [-1, 1]), 1, 50)
    assert res.constraint_ok
    assert res.y.equals(LaurentSeries(ctx5, {0: ctx5.one()}, trunc=50))
    assert verify_solution(TwistedPoly(ctx5, [-1, 1]), res.y, 50)


def test_forced_equation(ctx5):
    # p y(x^q) - y + x = 0 has y = sum_n p^n x^{q^n}
    f = TwistedPoly(ctx5, [-1, P])
    T = 700
    res = solve_fixed_point(f, 0, T, forcing=L(ctx5, {1: 1}))
    want = LaurentSeries(ctx5, {q: ctx5.from_int(P**n) for n, q in enumerate([1, 5, 25, 125, 625])}, trunc=T)
    assert res.y.equals(want)


def test_non_contracting_iteration_rejected(ctx5):
    with pytest.raises(FrobeqError):
        solve_fixed_point(from_slope_factors(ctx5, [0, 1]), 1, 20)


def test_unit_perturbation_solution():
    ctx = PadicContext(2, 1, 20)
    f = TwistedPoly(ctx, [L(ctx, {0: -1, 1: -1}), 1])
    res = solve_fixed_point(f, 1, 40)
    assert res.y.equals(LaurentSeries(ctx, {0: ctx.one(), 1: -ctx.one()}, trunc=40))


def test_verify_solution_examples(ctx5):
    f = TwistedPoly(ctx5, [-ctx5.q, 1])
    assert verify_solution(f, LogSeries.log_x(ctx5), 100)
    assert not verify_solution(f, L(ctx5, {0: 1}), 100)
    assert verify_solution(f, LaurentSeries.zero(ctx5), 100)


def test_ladder_profiles(ctx5):
    prof = ladder_profile(L(ctx5, {0: 1}), Fraction(1, 2), 8)
    assert all(prof.value(m) == 0 for m in range(9))
    prof = ladder_profile(LogSeries.log_x(ctx5), Fraction(1, 2), 8)
    steps = [prof.value(m + 1) - prof.value(m) for m in range(8)]
    assert all(abs(s - 1) < 1e-12 for s in steps)
    assert abs(ladder_slope(prof) - 1) < 1e-12
    bounded = LaurentSeries.from_function(ctx5, lambda n: P ** (n % 3), 0, 2000)
    prof = ladder_profile(bounded, Fraction(1, 2), 3, require_certified=False)
    assert all(prof.value(m) <= 0 for m in range(4))


def test_feasible_depth():
    assert feasible_depth(10**4, Fraction(1, 2), 5) == 4
    assert feasible_depth(3, Fraction(1, 2), 5) == 0


def test_classify_log_x(ctx5):
    rep = classify_log_growth(TwistedPoly(ctx5, [-ctx5.q, 1]), LogSeries.log_x(ctx5))
    assert rep.classification == "ExactlyLogGrowth(1)"
    assert rep.slopes == [1]
    up, low = rep.audit["upper"], rep.audit["lower"]
    assert math.isfinite(up["B"]) and math.isfinite(low["B_prime"])


def test_classify_bounded(ctx5):
    rep = classify_log_growth(TwistedPoly(ctx5, [-1, 1]), L(ctx5, {0: 1}))
    assert rep.classification == "Bounded"


def test_two_slope_constant_model(ctx5):
    q = ctx5.q
    f = ore_mul(TwistedPoly(ctx5, [-1, 1]), TwistedPoly(ctx5, [-q, 1]))
    rep = classify_log_growth(f, LogSeries.log_x(ctx5))
    assert rep.classification == "ExactlyLogGrowth(1)" and rep.audit["j"] == 0
    rep = classify_log_growth(f, L(ctx5, {0: 1}))
    assert rep.classification == "Bounded" and rep.audit["j"] == 1


def test_star_failure_rejected(ctx5):
    with pytest.raises(FrobeqError):
        classify_log_growth(TwistedPoly(ctx5, [P, P, 1]), L(ctx5, {0: 1}))
