from fractions import Fraction

import pytest

from loggrowth.padics import PadicContext, sparse_irreducible
from loggrowth.series import LaurentSeries, LogSeries
from loggrowth import nabla
from loggrowth.nabla import (DifferentialModule, FiltrationConfig, NablaError, PrecisionExhausted,
                             coefficient_growth_estimate, companion_from_ode, compare_main_theorem,
                             frobenius_compatible, integrate_log, residual_ok, snap_rational,
                             solve_functionals, solve_fundamental, special_filtration,
                             special_frobenius_slopes)

P = 5
SMALL = FiltrationConfig(T=60, min_coeffs=10)


def L(ctx, d):
    return LaurentSeries.polynomial(ctx, d)


def zero_module(ctx, n, F=None):
    z = LaurentSeries.zero(ctx)
    return DifferentialModule(ctx, [[z] * n for _ in range(n)], F=F)


def test_first_order_companion(ctx5):
    M = companion_from_ode(ctx5, [0])
    assert M.G[0][0].is_exact_zero()
    sol = solve_fundamental(M, 20)
    assert sol.W[0][0].equals(LogSeries.of(L(ctx5, {0: 1})))


def test_zero_connection(ctx5):
    sol = solve_fundamental(zero_module(ctx5, 3), 20)
    for i in range(3):
        for j in range(3):
            assert sol.W[i][j].equals(LogSeries.of(L(ctx5, {0: 1 if i == j else 0})))
    rep = special_filtration(zero_module(ctx5, 3), SMALL)
    assert rep.breaks == [(0, 3)]


def test_nilpotent_horizontal_basis(ctx5):
    M = nabla.nilpotent_example(ctx5)
    cols = solve_fundamental(M, 30).columns()
    log_x = LogSeries.log_x(ctx5)
    one = LogSeries.of(L(ctx5, {0: 1}))
    assert cols[0][0].equals(one) and cols[0][1].is_zero()
    assert cols[1][0].equals(-log_x) and cols[1][1].equals(one)


def test_functionals_invert_horizontal_sections(ctx5):
    M = nabla.log_example(ctx5)
    Y = solve_fundamental(M, 40).W
    Z = solve_functionals(M, 40).W
    for i in range(2):
        for j in range(2):
            s = Z[i][0] * Y[0][j] + Z[i][1] * Y[1][j]
            want = LogSeries.of(L(ctx5, {0: 1 if i == j else 0}))
            assert s.truncate(38).equals(want.truncate(38))


def scalar_solutions(P_, Q_, R_, T, y0, y1):
    """Power-series solution of P y'' + Q y' + R y = 0 over Q (oracle)."""
    y = [Fraction(y0), Fraction(y1)]
    for m in range(T - 2):
        acc = Fraction(0)
        for k, c in P_.items():
            if k >= 1 and m - k + 2 >= 0:
                acc += c * (m - k + 2) * (m - k + 1) * y[m - k + 2]
        for k, c in Q_.items():
            if m - k + 1 >= 0:
                acc += c * (m - k + 1) * y[m - k + 1]
        for k, c in R_.items():
            if m - k >= 0:
                acc += c * y[m - k]
        y.append(-acc / (P_[0] * (m + 2) * (m + 1)))
    return y


def test_functional_rows_match_scalar_recursion():
    # hypergeometric equation recentred at the integer lift 2; tracked
    # precision is pessimistic, so work with 40 digits
    ctx5 = PadicContext(5, 1, 40)
    Pd, Qd, Rd = {0: -2, 1: -3, 2: -1}, {0: -3, 1: -2}, {0: Fraction(-1, 4)}
    M = companion_from_ode(ctx5, [L(ctx5, Rd), L(ctx5, Qd)], leading=L(ctx5, Pd))
    T = 60
    Z = solve_functionals(M, T).W
    assert residual_ok(M, solve_functionals(M, T))
    for row, (y0, y1) in enumerate([(1, 0), (0, 1)]):
        ys = scalar_solutions(Pd, Qd, Rd, T, y0, y1)
        comp = Z[row][0].comps[0]
        for n in range(T):
            c = comp.coeffs.get(n, ctx5.exact_zero())
            assert (c - ctx5.from_rational(ys[n])).is_zero(), n


def test_log_one_minus_x_coefficients(ctx5):
    M = nabla.log_example(ctx5)
    Z = solve_functionals(M, 200).W
    y = Z[1][0].comps[0]
    for n in range(1, 200):
        assert y[n].val == -nabla_vp(n)


def nabla_vp(n):
    v = 0
    while n % P == 0:
        n //= P
        v += 1
    return v


def test_growth_estimator_examples(ctx5):
    T = 3000
    geo = LaurentSeries.from_function(ctx5, lambda n: 1, 0, T)
    assert coefficient_growth_estimate(geo, D=4).snapped == 0
    harm = LaurentSeries.from_function(ctx5, lambda n: Fraction(1, n + 1), 0, T)
    est = coefficient_growth_estimate(harm, D=4)
    assert est.snapped == 1 and 0.9 <= est.raw <= 1.1
    assert coefficient_growth_estimate(LogSeries.log_x(ctx5)).snapped == 1


def test_growth_estimator_needs_data(ctx5):
    short = LaurentSeries.from_function(ctx5, lambda n: 1, 0, 50)
    with pytest.raises(nabla.InsufficientData):
        coefficient_growth_estimate(short)


def test_snap_flags_ambiguity():
    assert snap_rational(0.52, 4, 0.15) == (Fraction(1, 2), False)
    s, amb = snap_rational(0.37, 2, 0.1)
    assert amb


def test_integrate_log(ctx5):
    x_inv = LogSeries.of(L(ctx5, {-1: 1}))
    assert integrate_log(x_inv).equals(LogSeries.log_x(ctx5))
    y = LogSeries(ctx5, [L(ctx5, {0: 2, 3: 1}), L(ctx5, {-1: 1, 2: 3})])
    assert integrate_log(y).derivative().equals(y)


def test_precision_floor_enforced():
    ctx = PadicContext(5, 1, 8)
    M = companion_from_ode(ctx, [0, -1], leading=L(ctx, {0: 1, 1: -1}))
    with pytest.raises(PrecisionExhausted):
        solve_fundamental(M, 200, precision_floor=10)


def test_log_module_needs_nilpotent_residue(ctx5):
    with pytest.raises(NablaError):
        DifferentialModule(ctx5, [[L(ctx5, {0: 1})]], log=True)


def test_nilpotent_example_frobenius(ctx5):
    M = nabla.nilpotent_example(ctx5)
    assert frobenius_compatible(M, 20)
    assert special_frobenius_slopes(M) == [0, 1]
    rep = compare_main_theorem(M, SMALL)
    assert rep.breaks == [(0, 1), (1, 1)]
    assert rep.lambda_max == 1
    at = {r["lambda"]: r["status"] for r in rep.comparison}
    assert at["0"] == at["1"] == "equality"
    assert rep.break_form == {"0": True, "1": True}


def test_identity_frobenius_slopes(ctx5):
    one, z = L(ctx5, {0: 1}), LaurentSeries.zero(ctx5)
    M = zero_module(ctx5, 2, F=[[one, z], [z, one]])
    assert special_frobenius_slopes(M) == [0, 0]
    assert frobenius_compatible(M, 20)


def test_rank_one_comparison(ctx5):
    M = DifferentialModule(ctx5, [[LaurentSeries.zero(ctx5)]], F=[[L(ctx5, {0: P})]])
    rep = compare_main_theorem(M, SMALL)
    assert all(r["status"] == "equality" for r in rep.comparison)


def test_incompatible_frobenius_detected(ctx5):
    one, z = L(ctx5, {0: 1}), LaurentSeries.zero(ctx5)
    M = nabla.nilpotent_example(ctx5)
    M.F = [[one, z], [z, one]]
    assert not frobenius_compatible(M, 20)
    with pytest.raises(NablaError):
        special_frobenius_slopes(M)


def test_synthesized_hypergeometric_frobenius(ctx5):
    M = nabla.hypergeometric_module(ctx5, 2)
    assert special_frobenius_slopes(M, T_F=25) == [0, 1]
    assert frobenius_compatible(M, 25)


def test_module_json_roundtrip(ctx5):
    M = nabla.nilpotent_example(ctx5)
    M2 = DifferentialModule.from_json(ctx5, M.to_json())
    assert M2.log and all(a.equals(b) for r1, r2 in zip(M.G, M2.G) for a, b in zip(r1, r2))


# -- residue discs ----------------------------------------------------------

class F25:
    """F_5[i]/(i^2 - 2), written independently of the package."""

    @staticmethod
    def mul(a, b):
        return ((a[0] * b[0] + 2 * a[1] * b[1]) % 5, (a[0] * b[1] + a[1] * b[0]) % 5)

    @staticmethod
    def add(a, b):
        return ((a[0] + b[0]) % 5, (a[1] + b[1]) % 5)

    elems = [(a, b) for a in range(5) for b in range(5)]


def f25_trace(lam):
    sq = {}
    for y in F25.elems:
        s = F25.mul(y, y)
        sq[s] = sq.get(s, 0) + 1
    count = 1
    for x in F25.elems:
        rhs = F25.mul(F25.mul(x, F25.add(x, (4, 0))), F25.add(x, ((-lam[0]) % 5, (-lam[1]) % 5)))
        count += sq.get(rhs, 0)
    return 26 - count


def test_ordinary_residues_match_point_counts(ctx5):
    # over F_5 the Legendre curve is ordinary exactly when p does not divide a_5
    for lam in range(2, 5):
        a = 5 + 1 - nabla.legendre_point_count(ctx5, lam)
        assert nabla.is_ordinary(ctx5, lam) == (a % 5 != 0)
        assert a == nabla.legendre_trace(ctx5, lam)
    assert nabla.ordinary_residues(ctx5) == [2, 3, 4]
    assert nabla.legendre_trace(ctx5, 2) == -2


def test_supersingular_residues_over_f25():
    ctx = PadicContext(5, 2, 10, sparse_irreducible(5, 2))
    ss = nabla.supersingular_residues(ctx)
    assert len(ss) == 2
    traces = {nabla.legendre_trace(ctx, r) for r in ss}
    roots = [z for z in F25.elems
             if F25.add(F25.add((1, 0), F25.mul((4, 0), z)), F25.mul(z, z)) == (0, 0)]
    assert len(roots) == 2
    assert traces == {f25_trace(z) for z in roots} == {10}
