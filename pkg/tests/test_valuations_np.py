from fractions import Fraction

import pytest

from loggrowth.padics import INF
from loggrowth.series import LaurentSeries, UncertifiedError
from loggrowth.valuations_np import (eventual_exponent, lower_hull, newton_polygon_ring,
                                     partial_valuation, slopes_of_element, weighted_valuation)
from conftest import random_laurent

P = 5


def poly(ctx, d):
    return LaurentSeries.polynomial(ctx, d)


def test_partial_valuations_single_term(ctx5):
    f = poly(ctx5, {3: P * P})
    assert [partial_valuation(f, n) for n in range(4)] == [INF, INF, 3, 3]


def test_partial_valuations_two_terms(ctx5):
    f = poly(ctx5, {1: 1, -1: P})
    assert [partial_valuation(f, n) for n in range(3)] == [1, -1, -1]
    assert partial_valuation(LaurentSeries.zero(ctx5), 4) == INF


def test_weighted_valuation_examples(ctx5):
    assert weighted_valuation(poly(ctx5, {0: P}), 0) == 1
    assert weighted_valuation(poly(ctx5, {1: 1, -1: P}), 1) == 0


def test_weighted_valuation_matches_gauss(ctx5, rng):
    for _ in range(500):
        f, _ = random_laurent(ctx5, rng)
        r = Fraction(rng.randint(1, 10), rng.randint(1, 4))
        assert weighted_valuation(f, r) == f.gauss_exponent(r).e


def test_sigma_shifts_weighted_valuation(ctx5, rng):
    for _ in range(100):
        f, _ = random_laurent(ctx5, rng)
        r = Fraction(rng.randint(1, 6), rng.randint(1, 3))
        assert weighted_valuation(f.frobenius_sub(), r) == weighted_valuation(f, ctx5.q * r)


def test_polygon_two_terms(ctx5):
    f = poly(ctx5, {1: 1, -1: P})
    poly_ = newton_polygon_ring(f, 1)
    assert slopes_of_element(f, 1) == [(Fraction(1, 2), 1)]
    assert poly_.vertices == ((-1, 1), (1, 0))


def test_unit_monomial_has_no_slopes(ctx5):
    assert newton_polygon_ring(poly(ctx5, {1: 1}), 1).is_empty


def test_p_plus_inverse_has_no_slopes(ctx5):
    assert newton_polygon_ring(poly(ctx5, {0: P, -1: 1}), 2).is_empty


def test_truncated_tail_is_uncertified(ctx5):
    f = LaurentSeries.from_function(ctx5, lambda n: 1, 0, 5)
    with pytest.raises(UncertifiedError):
        partial_valuation(f, -1)


def test_lower_hull_drops_interior_points():
    assert lower_hull([(0, 1), (1, 1), (2, 0)]) == [(0, 1), (2, 0)]


def test_eventual_exponent(ctx5):
    f = poly(ctx5, {1: 1, -1: P})
    ee = eventual_exponent(f)
    assert (ee.a, ee.r0) == (1, Fraction(1, 2))
    for r in (Fraction(1, 10), Fraction(1, 4), Fraction(2, 5)):
        assert f.gauss_exponent(r).e == ee.e1 + ee.a * r
    c = eventual_exponent(poly(ctx5, {0: 3}))
    assert (c.a, c.r0) == (0, INF)
