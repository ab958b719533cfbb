"""sigma-modules in diagonal (eigen) form and Kedlaya's annihilator construction.

Over constants everything is computed exactly with rationals.  Over the
Laurent base the construction produces rational functions in x; instead of
manipulating those, every quantity is evaluated at random units t of a large
unramified extension L of Q_p.  sigma^j of a quantity is its value at
t^{q^j}, and the Gauss norm |g|_1 of a rational function equals |g(t)|
unless the reduction of t is a zero or pole of the reduced g, which happens
with probability at most deg/#F_L.  Nonzero values certify nonzero functions.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .padics import INF, PadicContext, PadicScalar, sparse_irreducible, vp_int
from .series import LaurentSeries, as_fraction
from .valuations_np import NewtonPolygon, polygon_from_points

CONSTANT = "constant"
LAURENT = "laurent"


class SearchFailure(RuntimeError):
    def __init__(self, msg, traces):
        super().__init__(msg)
        self.traces = traces


def q_power_fraction(p: int, h: int, s) -> Fraction:
    e = as_fraction(s) * h
    if e.denominator != 1:
        raise ValueError(f"q^{s} is not rational for q = p^{h}")
    return Fraction(p) ** int(e)


@dataclass(frozen=True)
class DiagonalSigmaModule:
    """phi(e_i) = q^{s_i} e_i over K (constants) or over Laurent carriers."""
    p: int
    h: int
    slopes: tuple
    base: str = LAURENT

    def __post_init__(self):
        object.__setattr__(self, "slopes", tuple(sorted(as_fraction(s) for s in self.slopes)))
        for s in self.slopes:
            q_power_fraction(self.p, self.h, s)
        if self.base not in (CONSTANT, LAURENT):
            raise ValueError("base must be 'constant' or 'laurent'")

    @property
    def rank(self) -> int:
        return len(self.slopes)

    @property
    def q(self) -> int:
        return self.p**self.h

    def partial_sums(self) -> list[Fraction]:
        """Expected -log_q |c_i|_1 = s_1 + ... + s_{n-i}, indexed by i."""
        n = self.rank
        return [sum(self.slopes[: n - i], Fraction(0)) for i in range(n)]


# ---------------------------------------------------------------------------
# generic points

def generic_field(p: int, bits: int = 40, N: int = 30) -> PadicContext:
    k = max(2, math.ceil(bits / math.log2(p)))
    return PadicContext(p, k, N, sparse_irreducible(p, k))


def _embed(L: PadicContext, c: PadicScalar) -> PadicScalar:
    """Q_p-valued scalar into L."""
    if c.is_exact_zero:
        return L.exact_zero()
    if c.prec == 0:
        return L.zero_at(c.val)
    u = c.unit
    if isinstance(u, tuple):
        if any(u[1:]):
            raise ValueError("coefficients must lie in Q_p")
        u = u[0]
    return L.from_unit(c.val, (u,) + (0,) * (L.h - 1), c.prec)


def _embed_fraction(L: PadicContext, c: Fraction) -> PadicScalar:
    return L.from_rational(c.numerator, c.denominator)


def evaluate(f: LaurentSeries, u: PadicScalar) -> PadicScalar:
    """Value of an exact Laurent polynomial at a unit u of L."""
    if not f.is_exact:
        raise ValueError("generic evaluation needs an exact Laurent polynomial")
    L = u.ctx
    if not f.coeffs:
        return L.exact_zero()
    lo, hi = min(f.coeffs), max(f.coeffs)
    acc = L.exact_zero()
    for n in range(hi, lo - 1, -1):
        acc = acc * u
        c = f.coeffs.get(n)
        if c is not None:
            acc = acc + _embed(L, c)
    return acc * (u ** lo) if lo else acc


def _coerce_vector(p, xs) -> list:
    out = []
    for x in xs:
        if isinstance(x, LaurentSeries):
            out.append(x)
        else:
            out.append(as_fraction(x))
    return out


# ---------------------------------------------------------------------------

@dataclass
class KedlayaTrace:
    """Outcome of the construction.  Values are exact rationals over
    constants and values at the generic points otherwise (first point)."""
    module: DiagonalSigmaModule
    inputs: list
    x: list                       # x[l][i] (0-based) at the first point / exact
    b: list
    c: list                       # c_0 .. c_{n-1}
    c_norms: list                 # -log_q |c_i|_1 (INF for zero)
    diagonal_status: list         # True nonzero, False zero, None indeterminate
    residual_ok: bool
    support_ok: bool
    points_agree: bool = True
    failure_bound: float = 0.0
    flags: list = field(default_factory=list)

    def to_json(self):
        def show(v):
            if isinstance(v, Fraction):
                return str(v)
            if isinstance(v, PadicScalar):
                return v.to_json()
            return v
        return {
            "slopes": [str(s) for s in self.module.slopes],
            "base": self.module.base,
            "b": [show(v) for v in self.b],
            "c": [show(v) for v in self.c],
            "c_norms": ["inf" if v == INF else str(v) for v in self.c_norms],
            "diagonal_status": self.diagonal_status,
            "residual_ok": self.residual_ok,
            "support_ok": self.support_ok,
            "points_agree": self.points_agree,
            "failure_bound": self.failure_bound,
            "flags": self.flags,
        }


def _frac_val(p, c: Fraction):
    return INF if c == 0 else vp_int(c.numerator, p) - vp_int(c.denominator, p)


def _kedlaya_constant(M: DiagonalSigmaModule, xs: Sequence[Fraction]) -> KedlayaTrace:
    n, p, h = M.rank, M.p, M.h
    qs = [q_power_fraction(p, h, s) for s in M.slopes]
    X = [list(xs)]
    B = []
    flags = []
    for l in range(n):
        xl = X[-1]
        if xl[l] != 0:
            b = qs[l]
        else:
            b = Fraction(0)
            flags.append(f"x_{l + 1},{l + 1} = 0; b_{l + 1} set to 0")
        B.append(b)
        X.append([qs[i] * xl[i] - b * xl[i] for i in range(n)])
    # (sigma - b_n) ... (sigma - b_1) with sigma trivial on constants
    P = [Fraction(1)]
    for b in B:
        P = [(P[k - 1] if k >= 1 else 0) - (b * P[k] if k < len(P) else 0) for k in range(len(P) + 1)]
    c = P[:n]
    res_ok = True
    for k in range(n):
        tot = sum(P[i] * qs[k] ** i * xs[k] for i in range(n + 1))
        res_ok &= tot == 0
    support = all(X[l][i] == 0 for l in range(n) for i in range(l))
    norms = [INF if v == 0 else Fraction(_frac_val(p, v), h) for v in c]
    return KedlayaTrace(M, list(xs), X[:n], B, c, norms,
                        [X[l][l] != 0 for l in range(n)], res_ok, support, flags=flags)


def _kedlaya_at_point(M, xs, t: PadicScalar):
    """Run the recursion at one generic point; returns dict of point values."""
    n = M.rank
    L = t.ctx
    q = M.q
    qs = [_embed_fraction(L, q_power_fraction(M.p, M.h, s)) for s in M.slopes]
    U = [t]
    for _ in range(n):
        U.append(U[-1] ** q)
    X = []
    X1 = []
    for x in xs:
        if isinstance(x, LaurentSeries):
            X1.append([evaluate(x, U[j]) for j in range(n + 1)])
        else:
            c = _embed_fraction(L, x) if x != 0 else L.exact_zero()
            X1.append([c] * (n + 1))
    X.append(X1)
    B = []
    status = []
    for l in range(n):
        Xl = X[-1]
        J = n - l - 1  # b_{l+1} is needed at t^{q^j} for j = 0..J
        d = Xl[l]
        if d[0].is_exact_zero:
            status.append(False)
            Bl = [L.exact_zero()] * (J + 1)
        elif d[0].is_zero():
            status.append(None)
            Bl = [L.exact_zero()] * (J + 1)
        else:
            status.append(True)
            Bl = [qs[l] * d[j + 1] / d[j] for j in range(J + 1)]
        B.append(Bl)
        if l + 1 < n:
            X.append([[qs[i] * Xl[i][j + 1] - Bl[j] * Xl[i][j] for j in range(J + 1)]
                      for i in range(n)])
    # expand (sigma - b_n) ... (sigma - b_1); coefficient arrays indexed by j
    P = [[L.one()] * (n + 1)]
    for l in range(n):
        J = n - l - 1
        Bl = B[l]
        newP = []
        for k in range(len(P) + 1):
            vals = []
            for j in range(J + 1):
                v = P[k - 1][j + 1] if k >= 1 else L.exact_zero()
                if k < len(P):
                    v = v - Bl[j] * P[k][j]
                vals.append(v)
            newP.append(vals)
        P = newP
    coeffs = [P[k][0] for k in range(n + 1)]
    # residual: sum_i c_i q^{i s_k} x_k(t^{q^i}) for each k
    res_ok = True
    for k in range(n):
        tot = L.exact_zero()
        terms_min = INF
        for i in range(n + 1):
            term = coeffs[i] * qs[k] ** i * X1[k][i]
            if not term.is_zero():
                terms_min = min(terms_min, term.val)
            tot = tot + term
        if not tot.is_zero() and terms_min != INF and tot.val < terms_min + L.N // 2:
            res_ok = False
    support = all(X[l][i][0].is_zero() for l in range(len(X)) for i in range(l))
    return {"x": [[X[l][i][0] for i in range(n)] for l in range(len(X))],
            "b": [Bl[0] for Bl in B], "c": coeffs[:n], "status": status,
            "residual_ok": res_ok, "support_ok": support}


def _degree_bound(xs, q, n) -> int:
    span = 1
    for x in xs:
        if isinstance(x, LaurentSeries) and x.coeffs:
            span = max(span, max(x.coeffs) - min(x.coeffs) + 1)
    return span * q**n


def kedlaya_annihilator(M: DiagonalSigmaModule, xs: Sequence, *, seed: int = 0,
                        bits: int = 40, N: int = 30, points: int = 2) -> KedlayaTrace:
    xs = _coerce_vector(M.p, xs)
    if len(xs) != M.rank:
        raise ValueError("vector length differs from the rank")
    if M.base == CONSTANT:
        if any(isinstance(x, LaurentSeries) for x in xs):
            raise ValueError("constant base takes rational coordinates")
        return _kedlaya_constant(M, xs)
    L = generic_field(M.p, bits, N)
    rng = random.Random(seed)
    runs = [_kedlaya_at_point(M, xs, L.random_unit(rng)) for _ in range(points)]
    n = M.rank
    vals = [[INF if c.is_zero() else Fraction(c.val, M.h) for c in r["c"]] for r in runs]
    norms = [min(v[i] for v in vals) for i in range(n)]
    agree = all(v == vals[0] for v in vals)
    status = []
    for l in range(n):
        sts = [r["status"][l] for r in runs]
        status.append(True if True in sts else (False if all(s is False for s in sts) else None))
    r0 = runs[0]
    bound = min(1.0, 2 * n * n * _degree_bound(xs, M.q, n) / float(M.p ** L.h)) ** points
    flags = [f"x_{l + 1},{l + 1} vanishes; b_{l + 1} set to 0" for l, s in enumerate(status) if s is not True]
    return KedlayaTrace(M, xs, r0["x"], r0["b"], r0["c"], norms, status,
                        all(r["residual_ok"] for r in runs), all(r["support_ok"] for r in runs),
                        agree, bound, flags)


class Indeterminate(ArithmeticError):
    pass


def is_cyclic(trace: KedlayaTrace) -> bool:
    if any(s is None for s in trace.diagonal_status):
        raise Indeterminate("a diagonal witness is zero only to precision")
    return all(trace.diagonal_status)


def is_generic_cyclic(trace: KedlayaTrace) -> bool:
    try:
        if not is_cyclic(trace):
            return False
    except Indeterminate:
        return False
    return list(trace.c_norms) == trace.module.partial_sums()


# ---------------------------------------------------------------------------

@dataclass
class SearchResult:
    vector: list
    trace: KedlayaTrace
    retries: int
    traces: list


def _perturbation(ctx: PadicContext, rng: random.Random, terms: int = 2) -> LaurentSeries:
    coeffs = {}
    for _ in range(terms):
        e = rng.randint(-3, 3)
        coeffs[e] = ctx.from_int(rng.randrange(1, ctx.p))
    return LaurentSeries.polynomial(ctx, coeffs)


def find_generic_cyclic(M: DiagonalSigmaModule, budget: int = 50, *, seed: int = 0,
                        bits: int = 40, N: int = 30) -> SearchResult:
    """Seed e_1 + ... + e_n, then seeded sparse Laurent perturbations.
    Over constants only the seed and rational perturbations are available."""
    rng = random.Random(seed)
    ctx = PadicContext(M.p, 1, N)
    traces = []
    for attempt in range(budget + 1):
        if attempt == 0:
            xs = [Fraction(1)] * M.rank
        elif M.base == CONSTANT:
            xs = [Fraction(rng.randrange(1, 4 * M.p)) for _ in range(M.rank)]
        else:
            one = LaurentSeries.constant(ctx, 1)
            xs = [one + _perturbation(ctx, rng) for _ in range(M.rank)]
        if M.base == LAURENT and attempt == 0:
            xs = [LaurentSeries.constant(ctx, 1)] * M.rank
        tr = kedlaya_annihilator(M, xs, seed=seed + attempt, bits=bits, N=N)
        traces.append(tr)
        if is_generic_cyclic(tr):
            return SearchResult(xs, tr, attempt, traces)
    raise SearchFailure(f"no generic cyclic vector within {budget} retries", traces)


# ---------------------------------------------------------------------------
# matrices

def _solve(L: PadicContext, A: list[list[PadicScalar]], rhs: list[PadicScalar]):
    """Gaussian elimination with maximal-norm pivots; None when singular."""
    n = len(A)
    M = [row[:] + [rhs[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            v = M[r][col]
            if not v.is_zero() and (piv is None or v.val < M[piv][col].val):
                piv = r
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col].inverse()
        for r in range(n):
            if r != col and not M[r][col].is_zero():
                f = M[r][col] * inv
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


@dataclass
class GenericNP:
    polygon: NewtonPolygon
    slopes: list           # module slopes (negated hull slopes)
    annihilator_norms: list
    vector: list
    retries: int

    def to_json(self):
        return {"polygon": self.polygon.to_json(), "slopes": [str(s) for s in self.slopes],
                "retries": self.retries}


def generic_np_from_matrix(F: Sequence[Sequence], p: int, h: int = 1, *, budget: int = 20,
                           seed: int = 0, bits: int = 40, N: int = 30) -> GenericNP:
    """Frobenius Newton polygon of phi(e_j) = sum_i F_ij e_i over Laurent
    carriers: find a cyclic vector e, solve phi^n e = -sum a_i phi^i e at a
    generic point (Cramer), and read slopes off the twisted NP."""
    n = len(F)
    q = p**h
    L = generic_field(p, bits, N)
    rng = random.Random(seed)
    ctx = PadicContext(p, 1, N)

    def entry(f, u):
        if isinstance(f, LaurentSeries):
            return evaluate(f, u)
        f = as_fraction(f)
        return L.exact_zero() if f == 0 else _embed_fraction(L, f)

    for attempt in range(budget + 1):
        if attempt == 0:
            e = [LaurentSeries.constant(ctx, 1)] * n
        else:
            e = [LaurentSeries.constant(ctx, 1) + _perturbation(ctx, rng) for _ in range(n)]
        results = []
        for _ in range(2):
            t = L.random_unit(rng)
            U = [t]
            for _ in range(n):
                U.append(U[-1] ** q)
            Fv = [[[entry(F[i][k], U[j]) for k in range(n)] for i in range(n)] for j in range(n + 1)]
            # w_0 = e; w_{i+1}(U_j) = F(U_j) w_i(U_{j+1})
            W = [[[evaluate(e[k], U[j]) for k in range(n)] for j in range(n + 1)]]
            for i in range(n):
                prev = W[-1]
                W.append([[sum((Fv[j][r][k] * prev[j + 1][k] for k in range(n)), L.exact_zero())
                           for r in range(n)] for j in range(n - i)])
            cols = [W[i][0] for i in range(n)]
            A = [[cols[i][r] for i in range(n)] for r in range(n)]
            sol = _solve(L, A, [-W[n][0][r] for r in range(n)])
            results.append(sol)
        if any(s is None for s in results):
            continue
        norms = [[INF if a.is_zero() else Fraction(a.val, h) for a in s] for s in results]
        norms = [min(v) for v in zip(*norms)]
        pts = [(i, v) for i, v in enumerate(norms) if v != INF] + [(n, Fraction(0))]
        poly = polygon_from_points(pts)
        slopes = sorted(-s for s in poly.slope_multiset())
        return GenericNP(poly, slopes, norms, e, attempt)
    raise SearchFailure("no cyclic vector found within budget", [])
