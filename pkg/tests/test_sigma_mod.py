from fractions import Fraction

import pytest
import sympy

from loggrowth.padics import PadicContext
from loggrowth.series import LaurentSeries
from loggrowth.sigma_mod import (CONSTANT, LAURENT, DiagonalSigmaModule, SearchFailure,
                                 find_generic_cyclic, generic_np_from_matrix, is_cyclic,
                                 is_generic_cyclic, kedlaya_annihilator)
from conftest import vp

P = 5
CTX = PadicContext(P, 1, 30)


def gauss_logq(expr, x, p, h):
    """-log_q |expr|_1 for a rational function with rational coefficients."""
    num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))
    vmin = lambda e: min(vp(Fraction(int(c.p), int(c.q)), p) for c in sympy.Poly(e, x).coeffs() if c != 0)
    return Fraction(vmin(num) - vmin(den), h)


def sympy_annihilator(p, h, slopes, coords):
    """c_0..c_{n-1} with phi^n v + sum c_i phi^i v = 0, by linear algebra over Q(x)."""
    x = sympy.Symbol("x")
    q = p**h
    n = len(slopes)
    iters = [list(coords)]
    for _ in range(n):
        prev = iters[-1]
        iters.append([sympy.Rational(q) ** sympy.Rational(s) * c.subs(x, x**q) for s, c in zip(slopes, prev)])
    cs = sympy.symbols(f"c0:{n}")
    eqs = [iters[n][i] + sum(cs[k] * iters[k][i] for k in range(n)) for i in range(n)]
    sol = sympy.solve(eqs, cs, dict=True)[0]
    return [sol[c] for c in cs], x


def test_rank_one():
    tr = kedlaya_annihilator(DiagonalSigmaModule(P, 1, (1,), CONSTANT), [1])
    assert tr.b == [P] and tr.c == [-P]


def test_constant_distinct_slopes():
    tr = kedlaya_annihilator(DiagonalSigmaModule(P, 1, (0, 1), CONSTANT), [1, 1])
    assert tr.b == [1, P]
    assert tr.c == [P, -(1 + P)]
    assert is_cyclic(tr) and is_generic_cyclic(tr)
    assert tr.c_norms == [1, 0]


def test_constant_repeated_slopes_not_cyclic():
    tr = kedlaya_annihilator(DiagonalSigmaModule(P, 1, (1, 1), CONSTANT), [1, 1])
    assert tr.b[1] == 0 and not is_cyclic(tr)
    assert tr.flags


def test_proper_submodule_vector():
    tr = kedlaya_annihilator(DiagonalSigmaModule(P, 1, (0, 1), LAURENT),
                             [LaurentSeries.constant(CTX, 1), LaurentSeries.zero(CTX)])
    assert tr.diagonal_status == [True, False] and not is_cyclic(tr)


@pytest.mark.parametrize("slopes,coords", [
    ((1, 1), ("1", "x")),
    ((0, 1), ("1", "1 + x")),
    ((0, 1, 2), ("1", "x", "x**-1 + 2")),
])
def test_laurent_annihilator_matches_sympy(slopes, coords):
    x = sympy.Symbol("x")
    exprs = [sympy.sympify(c, locals={"x": x}) for c in coords]
    series = []
    for e in exprs:
        d = sympy.Poly(sympy.expand(e * x**5), x).as_dict()
        series.append(LaurentSeries.polynomial(CTX, {k[0] - 5: Fraction(int(v.p), int(v.q)) for k, v in d.items()}))
    tr = kedlaya_annihilator(DiagonalSigmaModule(P, 1, slopes, LAURENT), series)
    cs, _ = sympy_annihilator(P, 1, slopes, exprs)
    want = [gauss_logq(c, x, P, 1) if c != 0 else None for c in cs]
    got = [None if v == float("inf") else v for v in tr.c_norms]
    assert got == want
    assert tr.residual_ok and tr.points_agree


def test_generic_when_coordinates_vary():
    tr = kedlaya_annihilator(DiagonalSigmaModule(P, 1, (1, 1), LAURENT),
                             [LaurentSeries.constant(CTX, 1), LaurentSeries.monomial(CTX, 1)])
    assert is_cyclic(tr)
    assert is_generic_cyclic(tr) == (tr.c_norms == tr.module.partial_sums())


def test_search_distinct_constant_slopes_first_try():
    res = find_generic_cyclic(DiagonalSigmaModule(P, 1, (0, 1, 2), CONSTANT))
    assert res.retries == 0


def test_search_fails_for_repeated_constant_slopes():
    with pytest.raises(SearchFailure):
        find_generic_cyclic(DiagonalSigmaModule(P, 1, (1, 1), CONSTANT), budget=10)


def test_rank_one_search():
    assert find_generic_cyclic(DiagonalSigmaModule(P, 1, (2,), LAURENT)).retries == 0


@pytest.mark.parametrize("F,slopes", [
    ([[1, 0], [0, P]], [0, 1]),
    ([[1, 0], [0, 1]], [0, 0]),
    ([[1, 0, 0], [0, P, 0], [0, 0, P * P]], [0, 1, 2]),
])
def test_generic_np_from_constant_matrices(F, slopes):
    assert generic_np_from_matrix(F, P).slopes == slopes


def test_generic_np_laurent_entry():
    F = [[LaurentSeries.monomial(CTX, 1), 0], [0, P]]
    assert generic_np_from_matrix(F, P).slopes == [0, 1]
