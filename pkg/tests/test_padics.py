from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from loggrowth.padics import INF, PadicContext, PadicScalar, norm_exponent, sparse_irreducible, vp_int

P = 5
N = 20
MOD = P**N
rationals = st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**4).filter(lambda x: x != 0)


def residue_mod(x: Fraction, k: int) -> int:
    """x * p^-v(x) mod p^k, computed with plain modular arithmetic."""
    a, b = x.numerator, x.denominator
    while a % P == 0:
        a //= P
    while b % P == 0:
        b //= P
    return a * pow(b, -1, P**k) % P**k


def test_carry_into_valuation(ctx5):
    x = ctx5.from_int(1) + ctx5.from_int(P - 1)
    assert x.val == 1 and x.unit == 1


def test_additive_identity(ctx5):
    a = ctx5.from_rational(3, 7)
    assert (a + ctx5.exact_zero()).identical(a)


def test_ultrametric_equality_case(ctx5):
    a, b = ctx5.from_int(3), ctx5.from_int(2 * P * P)
    assert (a + b).val == 0


def test_p_times_p(ctx5):
    x = ctx5.from_int(P) * ctx5.from_int(P)
    assert x.val == 2 and x.unit == 1


def test_inverse_of_one_minus_p_is_geometric(ctx5):
    x = (ctx5.one() - ctx5.from_int(P)).inverse()
    assert x.val == 0 and x.prec == N
    assert x.digits() == [1] * N


def test_multiplication_by_zero_is_exact(ctx5):
    assert (ctx5.from_int(3) * ctx5.exact_zero()).is_exact_zero


def test_from_rational_quarter(ctx5):
    x = ctx5.from_rational(1, 4)
    assert x.val == 0 and x.unit % P == 4
    assert x.unit == pow(4, -1, MOD)


def test_from_rational_p_and_zero(ctx5):
    x = ctx5.from_rational(P, 1)
    assert (x.val, x.unit) == (1, 1)
    assert ctx5.from_rational(0, 7).is_exact_zero


def test_cancellation_gives_zero_at_precision(ctx5):
    a = ctx5.from_rational(2, 3)
    d = a - a
    assert d.is_zero_at_precision and not d.is_exact_zero and d.is_zero()
    assert d.abs_prec == N


def test_frobenius_identity_on_qp(ctx5):
    a = ctx5.from_rational(-7, 11)
    assert a.frobenius_K().identical(a)
    assert ctx5.from_int(P).frobenius_K().identical(ctx5.from_int(P))


def test_teichmuller_equivariance_h2():
    ctx = PadicContext(P, 2, 12, sparse_irreducible(P, 2))
    for res in [(1, 1), (2, 3), (0, 4)]:
        t = ctx.teichmuller(res)
        assert (t ** ctx.q - t).is_zero()
        # the absolute Frobenius maps the lift of z to the lift of z^p
        tp = t.absolute_frobenius()
        assert (tp - t ** P).is_zero()


def test_norm_and_exponent(ctx5):
    a = ctx5.from_rational(3, 25)
    assert norm_exponent(a) == -2
    assert a.norm() == Fraction(25)
    assert norm_exponent(ctx5.exact_zero()) == INF


def test_json_roundtrip(ctx5):
    a = ctx5.from_rational(-13, 50)
    b = PadicScalar.from_json(ctx5, a.to_json())
    assert b.identical(a)
    assert PadicScalar.from_json(ctx5, "-1/4").identical(ctx5.from_rational(-1, 4))


def test_rejects_composite():
    with pytest.raises(ValueError):
        PadicContext(6)


@settings(max_examples=300, deadline=None)
@given(rationals, rationals)
def test_arithmetic_matches_modular_oracle(x, y):
    ctx = PadicContext(P, 1, N)
    a, b = ctx.from_rational(x), ctx.from_rational(y)
    prod = a * b
    assert prod.val == vp_int(x.numerator, P) - vp_int(x.denominator, P) + vp_int(y.numerator, P) - vp_int(y.denominator, P)
    assert prod.unit == residue_mod(x * y, N)
    s = a + b
    if x + y == 0:
        assert s.is_zero()
    else:
        assert s.val == vp_int((x + y).numerator, P) - vp_int((x + y).denominator, P)
        k = s.prec
        assert s.unit % P**k == residue_mod(x + y, k)
    q = a / b
    assert q.unit == residue_mod(x / y, N)


@settings(max_examples=200, deadline=None)
@given(rationals, rationals)
def test_norm_is_multiplicative(x, y):
    ctx = PadicContext(P, 1, N)
    a, b = ctx.from_rational(x), ctx.from_rational(y)
    assert (a * b).norm() == a.norm() * b.norm()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 3**8 - 1), st.integers(0, 3**8 - 1))
def test_unramified_ring_axioms(u, w):
    ctx = PadicContext(3, 3, 8, sparse_irreducible(3, 3))
    dig = lambda n: tuple((n // 3**(2 * i)) % 9 for i in range(3))
    a = ctx.from_unit(0, dig(u) if any(dig(u)) else (1, 0, 0))
    b = ctx.from_unit(1, dig(w) if any(dig(w)) else (0, 1, 0))
    assert (a * b - b * a).is_zero()
    if not a.is_zero():
        assert (a * a.inverse() - ctx.one()).is_zero()
    assert ((a + b) * (a - b) - (a * a - b * b)).is_zero()
