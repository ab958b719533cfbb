import random
from fractions import Fraction

import pytest

from loggrowth.padics import PadicContext
from loggrowth.series import LaurentSeries


@pytest.fixture
def ctx5():
    return PadicContext(5, 1, 20)


@pytest.fixture
def rng():
    return random.Random(20240917)


def vp(n, p):
    """Valuation of a nonzero rational (oracle side)."""
    n = Fraction(n)
    v, a, b = 0, n.numerator, n.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


def random_laurent(ctx, rng, lo=-3, hi=3, terms=3, vmin=-2, vmax=3):
    """Exact Laurent polynomial with small rational coefficients."""
    coeffs = {}
    for _ in range(rng.randint(1, terms)):
        n = rng.randint(lo, hi)
        num = rng.choice([1, -1, 2, 3, -4, 7]) * ctx.p ** rng.randint(max(vmin, 0), max(vmax, 0))
        den = ctx.p ** rng.randint(0, max(-vmin, 0))
        coeffs[n] = Fraction(num, den)
    return LaurentSeries.polynomial(ctx, coeffs), coeffs


def oracle_gauss(coeffs, p, r):
    """min_n v_p(a_n) + r n over a dict of rationals."""
    vals = [vp(c, p) + Fraction(r) * n for n, c in coeffs.items() if c != 0]
    return min(vals) if vals else None
