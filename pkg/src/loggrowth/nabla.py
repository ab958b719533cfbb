"""(sigma, nabla)-modules over bounded power series.

Conventions: nabla(e_j) = sum_i G_ij e_i dx (or dx/x when ``log``) and
phi(e_j) = sum_i F_ij e_i.  A horizontal section v = sum_j y_j e_j has
y' = -G y (x y' = -G y); a solution functional z with z_j = f(e_j) obeys the
row recursion z' = z G.  Fundamental matrices are normalised at 0, so the
row solutions are the inverse of the horizontal ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .padics import INF, PadicContext, PadicScalar, _fp_mulmod, _fp_powmod
from .series import LaurentSeries, LogSeries, as_fraction
from .valuations_np import polygon_from_points


class NablaError(ArithmeticError):
    pass


class PrecisionExhausted(NablaError):
    pass


class InsufficientData(NablaError):
    pass


Matrix = list  # list of rows


def _zero_matrix(n, val):
    return [[val for _ in range(n)] for _ in range(n)]


# ---------------------------------------------------------------------------
# modules

@dataclass
class DifferentialModule:
    ctx: PadicContext
    G: Matrix                         # n x n LaurentSeries (numerators if P is set)
    P: Optional[LaurentSeries] = None  # connection is G / P
    log: bool = False
    F: Optional[Matrix] = None
    F0: Optional[Matrix] = None       # constant Frobenius on horizontal sections
    generic_slopes: Optional[list] = None
    rebuild: Optional[Callable[[PadicContext], "DifferentialModule"]] = field(default=None, repr=False)
    name: str = ""

    @property
    def rank(self) -> int:
        return len(self.G)

    def __post_init__(self):
        n = len(self.G)
        if any(len(row) != n for row in self.G):
            raise ValueError("connection matrix must be square")
        if self.log:
            if self.P is not None:
                raise ValueError("log modules take an explicit connection (no denominator)")
            N0 = [[self.G[i][j][0] if self.G[i][j].known(0) else self.ctx.exact_zero()
                   for j in range(n)] for i in range(n)]
            if not _is_nilpotent(N0):
                raise NablaError("residue matrix G(0) is not nilpotent")

    def to_json(self):
        def mat(M):
            return None if M is None else [[e.to_json() for e in row] for row in M]
        return {"G": mat(self.G), "F": mat(self.F), "log": self.log,
                "P": None if self.P is None else self.P.to_json()}

    @classmethod
    def from_json(cls, ctx, obj) -> "DifferentialModule":
        if not isinstance(obj, dict) or "G" not in obj:
            raise ValueError("module must be an object with 'G'")

        def mat(M):
            if M is None:
                return None
            return [[LaurentSeries.from_json(ctx, e) for e in row] for row in M]
        P = obj.get("P")
        return cls(ctx, mat(obj["G"]), None if P is None else LaurentSeries.from_json(ctx, P),
                   bool(obj.get("log", False)), mat(obj.get("F")))


def _mat_scalar_mul(A, B, ctx):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = ctx.exact_zero()
            for t in range(k):
                a, b = A[i][t], B[t][j]
                if not a.is_exact_zero and not b.is_exact_zero:
                    acc = acc + a * b
            row.append(acc)
        out.append(row)
    return out


def _is_nilpotent(N) -> bool:
    n = len(N)
    if n == 0:
        return True
    ctx = N[0][0].ctx
    M = N
    for _ in range(n - 1):
        M = _mat_scalar_mul(M, N, ctx)
    return all(e.is_zero() for row in M for e in row)


def companion_from_ode(ctx: PadicContext, coeffs: Sequence, leading=None, *, log: bool = False) -> DifferentialModule:
    """D y = y^(n) + a_{n-1} y^(n-1) + ... + a_0 y, or leading * y^(n) + ... when a
    polynomial ``leading`` P is given (then the a_i are numerators over P).

    nabla(e_i) = e_{i+1} (i < n-1) and nabla(e_{n-1}) = -sum a_i e_i, so
    G_{i+1,i} = 1 (P) and G_{i,n-1} = -a_i."""
    n = len(coeffs)
    zero = LaurentSeries.zero(ctx)
    cs = [c if isinstance(c, LaurentSeries) else LaurentSeries.constant(ctx, c) for c in coeffs]
    for c in cs:
        if c.coeffs and min(c.coeffs) < 0:
            raise NablaError("coefficients must be power series")
        if not c.is_exact and c.floor is None:
            raise NablaError("unbounded coefficient input: declare a valuation floor")
    P = leading
    one = LaurentSeries.constant(ctx, 1) if P is None else P
    G = [[zero] * n for _ in range(n)]
    for i in range(n - 1):
        G[i + 1][i] = one
    for i in range(n):
        G[i][n - 1] = G[i][n - 1] + (-cs[i])
    return DifferentialModule(ctx, G, P, log)


# ---------------------------------------------------------------------------
# power-series solver

def _coeff_table(S: LaurentSeries, T: int) -> dict:
    return {k: c for k, c in S.coeffs.items() if k < T and not c.is_exact_zero}


def _relift(x: PadicScalar) -> PadicScalar:
    return x.lift_precision(x.ctx.N)


def _solve_regular(ctx, A: Matrix, P: Optional[LaurentSeries], T: int, floating: bool):
    """W' = (A / P) W with W(0) = I, coefficientwise:
    P_0 (m+1) W_{m+1} = sum_k A_k W_{m-k} - sum_{k>=1} P_k (m+1-k) W_{m+1-k}."""
    n = len(A)
    for row in A:
        for a in row:
            if a.coeffs and min(a.coeffs) < 0:
                raise NablaError("connection has a pole at 0; use the log or unipotent solver")
    At: dict[int, list] = {}
    for i in range(n):
        for j in range(n):
            for k, c in _coeff_table(A[i][j], T).items():
                At.setdefault(k, []).append((i, j, c))
    Ak = sorted(At.items())
    if P is None:
        P0inv = ctx.one()
        Pk = []
    else:
        table = _coeff_table(P, T + 1)
        p0 = table.get(0)
        if p0 is None or p0.is_zero():
            raise NablaError("P(0) vanishes: singular point at the centre")
        P0inv = p0.inverse()
        Pk = sorted((k, c) for k, c in table.items() if k >= 1)
    zero = ctx.exact_zero()
    W = [[[ctx.one() if i == j else zero for j in range(n)] for i in range(n)]]
    for m in range(0, T - 1):
        acc = [[zero] * n for _ in range(n)]
        for k, entries in Ak:
            if k > m:
                break
            Wm = W[m - k]
            for i, j, c in entries:
                row = Wm[j]
                out = acc[i]
                for col in range(n):
                    w = row[col]
                    if not w.is_exact_zero:
                        out[col] = out[col] + c * w
        for k, c in Pk:
            if k > m + 1:
                break
            idx = m + 1 - k
            f = c * ctx.from_int(idx)
            if f.is_exact_zero:
                continue
            Wi = W[idx]
            for i in range(n):
                for col in range(n):
                    w = Wi[i][col]
                    if not w.is_exact_zero:
                        acc[i][col] = acc[i][col] - f * w
        scale = P0inv / ctx.from_int(m + 1)
        new = [[x * scale if not x.is_exact_zero else x for x in row] for row in acc]
        if floating:
            new = [[_relift(x) if x.prec else x for x in row] for row in new]
        W.append(new)
    return [[LaurentSeries(ctx, {m: W[m][i][j] for m in range(T) if not W[m][i][j].is_exact_zero},
                           exact_below=True, trunc=T) for j in range(n)] for i in range(n)]


def _solve_log(ctx, A: Matrix, T: int, floating: bool):
    """x W' = A W with A(0) = N nilpotent: W = H x^N, where
    m H_m + H_m N - N H_m = sum_{k>=1} A_k H_{m-k}."""
    n = len(A)
    zero = ctx.exact_zero()
    Ak: dict[int, Matrix] = {}
    for i in range(n):
        for j in range(n):
            for k, c in _coeff_table(A[i][j], T).items():
                if k < 0:
                    raise NablaError("log connection must be a power series in x")
                Ak.setdefault(k, _zero_matrix(n, zero))[i][j] = c
    N = Ak.pop(0, _zero_matrix(n, zero))
    H = [[[ctx.one() if i == j else zero for j in range(n)] for i in range(n)]]

    def ad(X):
        XN = _mat_scalar_mul(X, N, ctx)
        NX = _mat_scalar_mul(N, X, ctx)
        return [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(XN, NX)]

    ks = sorted(Ak)
    for m in range(1, T):
        R = _zero_matrix(n, zero)
        for k in ks:
            if k > m:
                break
            prod = _mat_scalar_mul(Ak[k], H[m - k], ctx)
            R = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(R, prod)]
        # (m + ad)^{-1} R = sum_j (-1)^j ad^j(R) / m^{j+1}
        minv = ctx.from_int(m).inverse()
        term = [[x * minv for x in row] for row in R]
        X = term
        for _ in range(2 * n):
            term = [[-(x * minv) for x in row] for row in ad(term)]
            if all(x.is_zero() for row in term for x in row):
                break
            X = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(X, term)]
        if floating:
            X = [[_relift(x) if x.prec else x for x in row] for row in X]
        H.append(X)
    Hs = [[LaurentSeries(ctx, {m: H[m][i][j] for m in range(T) if not H[m][i][j].is_exact_zero},
                         exact_below=True, trunc=T) for j in range(n)] for i in range(n)]
    # x^N = sum_k N^k (log x)^k / k!
    powers = [[[ctx.one() if i == j else zero for j in range(n)] for i in range(n)]]
    for k in range(1, n):
        nxt = _mat_scalar_mul(powers[-1], N, ctx)
        if all(x.is_zero() for row in nxt for x in row):
            break
        powers.append([[x / ctx.from_int(k) for x in row] for row in nxt])
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            comps = []
            for k, Ek in enumerate(powers):
                acc = LaurentSeries.zero(ctx)
                for t in range(n):
                    if not Ek[t][j].is_zero():
                        acc = acc + Hs[i][t].scale(Ek[t][j])
                comps.append(acc)
            row.append(LogSeries(ctx, comps))
        out.append(row)
    return out


def integrate_log(y: LogSeries) -> LogSeries:
    """Antiderivative with zero constant: x^n (log x)^j integrates by parts;
    x^-1 (log x)^j gives (log x)^{j+1}/(j+1)."""
    ctx = y.ctx
    d = y.degree
    out: list[dict] = [dict() for _ in range(d + 2)]
    los, his = [], []
    for j, comp in enumerate(y.comps):
        los.append(comp.lo)
        his.append(comp.hi)
        for n, c in comp.coeffs.items():
            if n == -1:
                t = c / ctx.from_int(j + 1)
                out[j + 1][0] = out[j + 1].get(0, ctx.exact_zero()) + t
                continue
            np1 = ctx.from_int(n + 1)
            coef = c / np1
            fact = 1
            for i in range(j + 1):
                # (-1)^i j!/(j-i)! (log x)^{j-i} x^{n+1} / (n+1)^{i+1}
                term = coef * ctx.from_int((-1) ** i * fact)
                out[j - i][n + 1] = out[j - i].get(n + 1, ctx.exact_zero()) + term
                fact *= (j - i)
                coef = coef / np1
    lo = min(los) + 1
    hi = min(his) + 1
    comps = []
    for k in range(d + 2):
        if lo == -math.inf:
            comps.append(LaurentSeries(ctx, out[k], exact_below=True,
                                       trunc=None if hi == math.inf else int(hi)))
        else:
            comps.append(LaurentSeries(ctx, out[k], exact_below=False, n_min=int(lo),
                                       trunc=None if hi == math.inf else int(hi)))
    return LogSeries(ctx, comps)


def _is_strictly_triangular(A) -> Optional[str]:
    n = len(A)
    if all(A[i][j].is_exact_zero() for i in range(n) for j in range(n) if j <= i):
        return "upper"
    if all(A[i][j].is_exact_zero() for i in range(n) for j in range(n) if j >= i):
        return "lower"
    return None


def _solve_unipotent(ctx, A: Matrix, T: int):
    """W' = A W for strictly triangular A (Laurent entries allowed): the
    Picard iteration W = I + int A + int A int A + ... terminates."""
    n = len(A)
    one = LogSeries.of(LaurentSeries.constant(ctx, 1))
    zero = LogSeries(ctx, [])
    W = [[one if i == j else zero for j in range(n)] for i in range(n)]
    term = [row[:] for row in W]
    for _ in range(n - 1):
        nxt = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = None
                for k in range(n):
                    if A[i][k].is_exact_zero() or term[k][j].is_zero():
                        continue
                    t = term[k][j] * LogSeries.of(A[i][k].truncate(T) if A[i][k].trunc is None and
                                                  A[i][k].coeffs and max(A[i][k].coeffs) >= T else A[i][k])
                    acc = t if acc is None else acc + t
                row.append(zero if acc is None else integrate_log(acc))
            nxt.append(row)
        term = nxt
        W = [[W[i][j] + term[i][j] for j in range(n)] for i in range(n)]
    return W


@dataclass
class SolutionBasis:
    """Columns (horizontal) or rows (functionals) of a fundamental matrix."""
    W: Matrix          # matrix of LogSeries
    kind: str          # "horizontal" or "functional"
    T: int
    precision: int     # certified relative digits
    method: str

    def columns(self):
        n = len(self.W)
        return [[self.W[i][j] for i in range(n)] for j in range(n)]

    def rows(self):
        return [row[:] for row in self.W]

    def log_degrees(self):
        if self.kind == "horizontal":
            return [max(v.degree for v in col) for col in self.columns()]
        return [max(v.degree for v in row) for row in self.rows()]


def _as_log(x):
    return x if isinstance(x, LogSeries) else LogSeries.of(x)


def _transpose(M):
    return [list(r) for r in zip(*M)]


def _neg(M):
    return [[-e for e in row] for row in M]


def _tracked_precision(W) -> int:
    best = INF
    for row in W:
        for e in row:
            for comp in _as_log(e).comps:
                for c in comp.coeffs.values():
                    if not c.is_exact_zero:
                        best = min(best, c.prec)
    return best


def _agreement(W1, W2) -> int:
    """Relative digits on which two runs (contexts N1 < N2) agree."""
    best = INF
    for r1, r2 in zip(W1, W2):
        for e1, e2 in zip(r1, r2):
            for c1, c2 in zip(_as_log(e1).comps, _as_log(e2).comps):
                for m, a in c1.coeffs.items():
                    b = c2.coeffs.get(m)
                    if a.is_zero():
                        continue
                    if b is None or b.is_zero():
                        return 0
                    bb = a.ctx.from_unit(b.val, b.unit, min(b.prec, a.ctx.N))
                    d = a - bb
                    digits = a.prec if d.is_zero() else d.val - a.val
                    best = min(best, digits)
    return best


def _convert(e: LogSeries, ctx: PadicContext) -> LogSeries:
    comps = []
    for f in _as_log(e).comps:
        coeffs = {m: ctx.from_unit(a.val, a.unit, min(a.prec, ctx.N)) if not a.is_exact_zero
                  else ctx.exact_zero() for m, a in f.coeffs.items()}
        comps.append(LaurentSeries(ctx, coeffs, exact_below=f.exact_below, trunc=f.trunc,
                                   n_min=f.n_min, floor=f.floor))
    return LogSeries(ctx, comps)


def _raw_solve(M: DifferentialModule, A, T, floating):
    ctx = M.ctx
    if M.log:
        return _solve_log(ctx, A, T, floating), "log-recursion"
    tri = _is_strictly_triangular(A) if M.P is None else None
    has_pole = any(a.coeffs and min(a.coeffs) < 0 for row in A for a in row)
    if tri and has_pole:
        return _solve_unipotent(ctx, A, T), "unipotent"
    W = _solve_regular(ctx, A, M.P, T, floating)
    return [[LogSeries.of(e) for e in row] for row in W], "recursion"


def _system(M: DifferentialModule, kind: str):
    if kind == "horizontal":
        return _neg(M.G)
    return _transpose(M.G)


def _solve(M: DifferentialModule, T: int, kind: str, precision_floor: int = 10) -> SolutionBasis:
    A = _system(M, kind)
    W, method = _raw_solve(M, A, T, floating=False)
    prec = _tracked_precision(W)
    if prec >= precision_floor or M.rebuild is None:
        if prec < precision_floor:
            raise PrecisionExhausted(f"only {prec} certified digits after {T} steps")
        out = W
    else:
        # tracked bounds are pessimistic: rerun in floating mode at two working
        # precisions and keep the digits on which both agree
        # p-adically small coefficients lose relative digits to cancellation,
        # so both runs work 20 digits above the module's own precision
        c = M.ctx
        M1 = M.rebuild(PadicContext(c.p, c.h, c.N + 20, c.modulus))
        M2 = M.rebuild(PadicContext(c.p, c.h, c.N + 40, c.modulus))
        W1, method = _raw_solve(M1, _system(M1, kind), T, floating=True)
        W2, _ = _raw_solve(M2, _system(M2, kind), T, floating=True)
        prec = _agreement(W1, W2)
        method += "+double-run"
        if prec < precision_floor:
            raise PrecisionExhausted(f"runs agree on only {prec} digits")
        out = [[_convert(e, c) for e in row] for row in W1]
    if kind == "functional":
        out = _transpose(out)
    return SolutionBasis(out, kind, T, int(min(prec, M.ctx.N)), method)


def solve_fundamental(M: DifferentialModule, T: int, precision_floor: int = 10) -> SolutionBasis:
    """Horizontal sections: columns Y with Y' = -G Y (x Y' = -G Y), Y(0) = I
    (log case: Y = H exp(-G(0) log x))."""
    return _solve(M, T, "horizontal", precision_floor)


def solve_functionals(M: DifferentialModule, T: int, precision_floor: int = 10) -> SolutionBasis:
    """Solution functionals: rows Z with Z' = Z G; Z = Y^{-1}."""
    return _solve(M, T, "functional", precision_floor)


def residual_ok(M: DifferentialModule, sol: SolutionBasis, T_check: int = 200) -> bool:
    """Check the defining system below x^{min(T, T_check) - 2}."""
    ctx = M.ctx
    n = M.rank
    Tc = min(sol.T, T_check)
    bound = Tc - 2 - (0 if M.P is None else max(M.P.coeffs))
    W = [[_as_log(e).truncate(Tc) for e in row] for row in sol.W]
    Gs = [[LogSeries.of(g.truncate(Tc)) for g in row] for row in M.G]
    P = LogSeries.of(M.P) if M.P is not None else None
    xlog = LogSeries.of(LaurentSeries.monomial(ctx, 1))
    for i in range(n):
        for j in range(n):
            if sol.kind == "horizontal":
                lhs = W[i][j].derivative()
                rhs = None
                for k in range(n):
                    t = Gs[i][k] * W[k][j]
                    rhs = t if rhs is None else rhs + t
                rhs = -rhs
            else:
                lhs = W[i][j].derivative()
                rhs = None
                for k in range(n):
                    t = W[i][k] * Gs[k][j]
                    rhs = t if rhs is None else rhs + t
            if M.log:
                lhs = lhs * xlog
            if P is not None:
                lhs = lhs * P
            d = lhs - rhs
            for comp in d.comps:
                for m, c in comp.coeffs.items():
                    if m < bound and not c.is_zero():
                        return False
    return True


# ---------------------------------------------------------------------------
# growth estimation

@dataclass
class GrowthEstimate:
    raw: float
    snapped: Fraction
    ambiguous: bool
    components: list = field(default_factory=list)


def _envelope_slope(points, x_end) -> float:
    """Slope of the upper concave hull of the running-maximum corners at the
    middle of the window.  ``points``: (x, y) sorted by x."""
    corners = []
    best = -math.inf
    for x, y in points:
        if y > best:
            corners.append((x, y))
            best = y
    if not corners:
        return 0.0
    corners.append((x_end, best))
    hull = []
    for pt in corners:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (pt[1] - y0) - (y1 - y0) * (pt[0] - x0) >= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    x0 = points[0][0]
    mid = (x0 + x_end) / 2
    for (xa, ya), (xb, yb) in zip(hull, hull[1:]):
        if xa <= mid <= xb and xb > xa:
            return (yb - ya) / (xb - xa)
    return 0.0


def series_growth(f: LaurentSeries, *, min_coeffs: int = 1000, window: str = "auto") -> float:
    """Estimated lambda with |a_n| = O((n+1)^lambda), from nonnegative indices."""
    if f.is_exact:
        return 0.0
    p = f.ctx.p
    T = int(f.hi)
    if T < min_coeffs:
        raise InsufficientData(f"{T} coefficients known, need {min_coeffs}")
    logp = math.log(p)
    x_end = math.log(T) / logp
    lo = 0.0
    if window == "deep" or (window == "auto" and x_end >= 8):
        lo = x_end / 2
    pts = []
    for n in sorted(f.coeffs):
        if n < 0:
            continue
        c = f.coeffs[n]
        if c.is_zero():
            continue
        pts.append((math.log(n + 1) / logp, -c.val))
    if not pts:
        return 0.0
    head = [pt for pt in pts if pt[0] < lo]
    deep = [pt for pt in pts if pt[0] >= lo]
    if head:
        deep = [(lo, max(y for _, y in head))] + deep
    if not deep:
        return 0.0
    return max(0.0, _envelope_slope(deep, x_end))


def snap_rational(raw: float, D: int, tau: float):
    snapped = Fraction(raw).limit_denominator(D)
    if snapped < 0:
        snapped = Fraction(0)
    return snapped, abs(float(snapped) - raw) > tau


def coefficient_growth_estimate(y, D: int = 8, tau: float = 0.15, *, min_coeffs: int = 1000,
                                window: str = "auto") -> GrowthEstimate:
    """max_i (lambda_i + i) over log-components y = sum f_i (log x)^i."""
    y = _as_log(y)
    comps = []
    best = 0.0
    for i, f in enumerate(y.comps):
        if f.is_zero():
            continue
        lam = series_growth(f, min_coeffs=min_coeffs, window=window)
        comps.append((i, lam))
        best = max(best, lam + i)
    snapped, amb = snap_rational(best, D, tau)
    return GrowthEstimate(best, snapped, amb, comps)


def vector_growth(vec, D=8, tau=0.15, **kw) -> GrowthEstimate:
    ests = [coefficient_growth_estimate(v, D, tau, **kw) for v in vec if not _as_log(v).is_zero()]
    if not ests:
        return GrowthEstimate(0.0, Fraction(0), False)
    best = max(ests, key=lambda e: e.raw)
    return best


# ---------------------------------------------------------------------------
# filtration

@dataclass
class FiltrationConfig:
    T: int = 2000
    D: int = 8
    tau: float = 0.15
    precision_floor: int = 10
    min_coeffs: int = 1000
    window: str = "auto"


@dataclass
class FiltrationReport:
    breaks: list                 # [(break, multiplicity)]
    estimates: list              # per basis functional: (raw, snapped, ambiguous)
    right_continuity_witness: list
    ambiguous: bool
    comparison: list = field(default_factory=list)
    special_slopes: list = field(default_factory=list)
    lambda_max: Optional[Fraction] = None
    precision: int = 0
    method: str = ""
    break_form: dict = field(default_factory=dict)  # break -> is it s' - s ? (diagnostic only)

    def growths(self) -> list:
        return sorted(e[1] for e in self.estimates)

    def dim_V(self, lam) -> int:
        """dim V(M)^lambda = n - dim Sol_lambda."""
        lam = as_fraction(lam)
        g = self.growths()
        if lam < 0:
            return len(g)
        return len(g) - sum(1 for s in g if s <= lam)

    def to_json(self):
        return {
            "breaks": [[str(b), m] for b, m in self.breaks],
            "estimates": [{"raw": float(f"{r:.12g}"), "snapped": str(s), "ambiguous": a}
                          for r, s, a in self.estimates],
            "right_continuity": self.right_continuity_witness,
            "ambiguous": self.ambiguous,
            "comparison": self.comparison,
            "special_slopes": [str(s) for s in self.special_slopes],
            "lambda_max": None if self.lambda_max is None else str(self.lambda_max),
            "precision": self.precision,
            "method": self.method,
            "break_form": self.break_form,
        }


def _row_pivot(row, lo_n: int, hi_n: int):
    """Best (log-degree, -valuation, index) entry in the deep window."""
    best = None
    for j, v in enumerate(row):
        v = _as_log(v)
        for i, comp in enumerate(v.comps):
            if comp.is_exact:
                items = comp.coeffs.items()
            else:
                items = ((n, c) for n, c in comp.coeffs.items() if lo_n <= n < hi_n)
            for n, c in items:
                if c.is_zero():
                    continue
                key = (i, -c.val, n)
                if best is None or key > best[0]:
                    best = (key, j, i, n, c)
    return best


def _coeff_of(v: LogSeries, i: int, n: int):
    if i >= len(v.comps):
        return None
    c = v.comps[i].coeffs.get(n)
    return c


def growth_minimizing_basis(rows, T: int):
    """Greedy echelon sweep: repeatedly take the row holding the largest deep
    coefficient, clear that coefficient from the other rows, and set the row
    aside.  Returns rows in order of decreasing dominance."""
    lo_n = int(math.isqrt(T))
    rows = [[_as_log(v) for v in r] for r in rows]
    out = []
    while rows:
        cands = []
        for idx, r in enumerate(rows):
            pv = _row_pivot(r, lo_n, T)
            if pv is not None:
                cands.append((pv[0], idx, pv))
        if not cands:
            out.extend(rows)
            break
        _, idx, (key, j, i, n, c) = max(cands, key=lambda t: t[0])
        piv = rows.pop(idx)
        inv = c.inverse()
        new_rows = []
        for r in rows:
            d = _coeff_of(r[j], i, n)
            if d is not None and not d.is_zero():
                f = d * inv
                r = [a - b.scale(f) for a, b in zip(r, piv)]
            new_rows.append(r)
        rows = new_rows
        out.append(piv)
    return out


def special_filtration(M: DifferentialModule, config: Optional[FiltrationConfig] = None) -> FiltrationReport:
    config = config or FiltrationConfig()
    sol = solve_functionals(M, config.T, config.precision_floor)
    basis = growth_minimizing_basis(sol.rows(), config.T)
    ests = []
    for row in basis:
        g = vector_growth(row, config.D, config.tau, min_coeffs=config.min_coeffs, window=config.window)
        ests.append((g.raw, g.snapped, g.ambiguous))
    ests.sort(key=lambda e: e[0])
    ambiguous = any(a for _, _, a in ests)
    for (r1, s1, _), (r2, s2, _) in zip(ests, ests[1:]):
        if s1 != s2 and abs(r1 - r2) <= config.tau:
            ambiguous = True
    counts: dict = {}
    for _, s, _ in ests:
        counts[s] = counts.get(s, 0) + 1
    breaks = sorted(counts.items())
    n = M.rank
    witness = []
    for b, m in breaks:
        at = n - sum(1 for _, s, _ in ests if s <= b)
        before = n - sum(1 for _, s, _ in ests if s < b)
        witness.append({"break": str(b), "dim_at": at, "dim_just_below": before})
    return FiltrationReport(breaks, ests, witness, ambiguous, precision=sol.precision,
                            method=sol.method)


# ---------------------------------------------------------------------------
# Frobenius

def _mat_series_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = None
            for t in range(k):
                if _as_log(A[i][t]).is_zero() or _as_log(B[t][j]).is_zero():
                    continue
                x = _as_log(A[i][t]) * _as_log(B[t][j])
                acc = x if acc is None else acc + x
            row.append(acc if acc is not None else LogSeries(A[0][0].ctx if hasattr(A[0][0], "ctx") else None, []))
        out.append(row)
    return out


def _sigma_matrix(Y):
    return [[_as_log(e).frobenius_sub_log() for e in row] for row in Y]


def frobenius_on_solutions(M: DifferentialModule, T_F: int = 30):
    """Phi = Y^{-1} F sigma(Y): returns (Phi(0), max deviation flag)."""
    if M.F is None:
        raise NablaError("module has no Frobenius structure")
    Y = solve_fundamental(M, T_F, precision_floor=1).W
    Z = solve_functionals(M, T_F, precision_floor=1).W
    Phi = _mat_series_mul(_mat_series_mul(Z, M.F), _sigma_matrix(Y))
    ctx = M.ctx
    n = M.rank
    const = [[ctx.exact_zero()] * n for _ in range(n)]
    constant = True
    bound = T_F - 2
    for i in range(n):
        for j in range(n):
            e = _as_log(Phi[i][j])
            for d, comp in enumerate(e.comps):
                for m, c in comp.coeffs.items():
                    if d == 0 and m == 0:
                        const[i][j] = c
                    elif m < bound and not c.is_zero():
                        constant = False
    return const, constant


def charpoly(A: Matrix) -> list:
    """Coefficients c_0..c_n of det(X - A) (Faddeev-LeVerrier)."""
    n = len(A)
    ctx = A[0][0].ctx
    zero = ctx.exact_zero()
    I = [[ctx.one() if i == j else zero for j in range(n)] for i in range(n)]
    c = [zero] * (n + 1)
    c[n] = ctx.one()
    Mk = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        Mk = _mat_scalar_mul(A, Mk, ctx)
        Mk = [[Mk[i][j] + (c[n - k + 1] * I[i][j] if i == j else zero) for j in range(n)] for i in range(n)]
        AM = _mat_scalar_mul(A, Mk, ctx)
        tr = zero
        for i in range(n):
            tr = tr + AM[i][i]
        c[n - k] = -(tr / ctx.from_int(k))
    return c


def slopes_of_charpoly(c: list, h: int) -> list:
    """Valuations (log_q units) of the roots: negated hull slopes."""
    pts = [(i, Fraction(x.val, h)) for i, x in enumerate(c) if not x.is_zero()]
    poly = polygon_from_points(pts)
    return sorted(-s for s in poly.slope_multiset())


def special_frobenius_slopes(M: DifferentialModule, T_F: int = 30) -> list:
    if M.F0 is not None and M.F is None:
        synthesize_frobenius(M, T_F)
    Phi0, constant = frobenius_on_solutions(M, T_F)
    if not constant:
        raise NablaError("Y^-1 F sigma(Y) is not constant: Frobenius and connection are incompatible")
    return slopes_of_charpoly(charpoly(Phi0), M.ctx.h)


def frobenius_compatible(M: DifferentialModule, T: Optional[int] = None) -> bool:
    """dF/dx + G F = F sigma(G) q x^{q-1} (x dF/dx + G F = q F sigma(G) in the
    log case), cleared of the denominator P, below x^{T - q}."""
    if M.F is None:
        raise NablaError("module has no Frobenius structure")
    ctx = M.ctx
    q = ctx.q
    n = M.rank
    Fs = [[_as_log(e) for e in row] for row in M.F]
    T = T or min(int(_as_log(e).comps[0].hi) for row in M.F for e in row)
    G = [[LogSeries.of(g) for g in row] for row in M.G]
    sG = _sigma_matrix(G)
    P = LogSeries.of(M.P) if M.P is not None else LogSeries.of(LaurentSeries.constant(ctx, 1))
    sP = P.frobenius_sub_log()
    qs = ctx.from_int(q)
    factor = (LogSeries.of(LaurentSeries.constant(ctx, q)) if M.log
              else LogSeries.of(LaurentSeries.monomial(ctx, q - 1, q)))
    x = LogSeries.of(LaurentSeries.monomial(ctx, 1))
    GF = _mat_series_mul(G, Fs)
    FsG = _mat_series_mul(Fs, sG)
    for i in range(n):
        for j in range(n):
            dF = Fs[i][j].derivative()
            if M.log:
                dF = dF * x
            lhs = dF * P * sP + GF[i][j] * sP
            rhs = FsG[i][j] * P * factor
            d = lhs - rhs
            for comp in d.comps:
                for m, c in comp.coeffs.items():
                    if m < T - q and not c.is_zero():
                        return False
    return True


def synthesize_frobenius(M: DifferentialModule, T_F: int = 30) -> None:
    """F = Y F0 sigma(Y)^{-1}, with F0 the Frobenius on horizontal sections."""
    Y = solve_fundamental(M, T_F, precision_floor=1).W
    Z = solve_functionals(M, T_F, precision_floor=1).W
    F0 = [[LogSeries.of(LaurentSeries.constant(M.ctx, c)) for c in row] for row in M.F0]
    F = _mat_series_mul(_mat_series_mul(Y, F0), _sigma_matrix(Z))
    M.F = [[_as_log(e).truncate(T_F) for e in row] for row in F]


# ---------------------------------------------------------------------------
# main-theorem comparison

def generic_slopes(M: DifferentialModule, **kw) -> list:
    if M.generic_slopes is not None:
        return sorted(as_fraction(s) for s in M.generic_slopes)
    if M.F is None:
        raise NablaError("module has no Frobenius structure")
    from .sigma_mod import generic_np_from_matrix
    F = [[_as_log(e).comps[0] for e in row] for row in M.F]
    return generic_np_from_matrix(F, M.ctx.p, M.ctx.h, **kw).slopes


def compare_main_theorem(M: DifferentialModule, config: Optional[FiltrationConfig] = None,
                         report: Optional[FiltrationReport] = None, T_F: int = 30) -> FiltrationReport:
    """dim V(M)^lambda against dim (S_{lambda - lambda_max}(V(M^dual)))^perp =
    #{special slopes s < lambda_max - lambda}, on every critical lambda and
    between them.  Containment (LHS <= RHS) always holds by the theorem."""
    report = report or special_filtration(M, config)
    special = special_frobenius_slopes(M, T_F)
    gen = generic_slopes(M)
    lmax = max(gen)
    crit = sorted({b for b, _ in report.breaks} | {lmax - s for s in special} | {Fraction(0)})
    probes = [crit[0] - 1]
    for a, b in zip(crit, crit[1:]):
        probes += [a, (a + b) / 2]
    probes += [crit[-1], crit[-1] + 1]
    rows = []
    for lam in probes:
        lhs = report.dim_V(lam)
        rhs = sum(1 for s in special if s < lmax - lam)
        status = "equality" if lhs == rhs else ("containment" if lhs < rhs else "violation")
        rows.append({"lambda": str(lam), "lhs": lhs, "rhs": rhs, "status": status})
    report.comparison = rows
    diffs = {g - s for g in gen for s in special}
    report.break_form = {str(b): b in diffs for b, _ in report.breaks}
    report.special_slopes = special
    report.lambda_max = lmax
    return report


def check_dimensions(report: FiltrationReport, n: int, D: int) -> bool:
    """Breaks are rationals with denominator <= D, multiplicities sum to n,
    and the comparison never shows a violation."""
    if sum(m for _, m in report.breaks) != n:
        return False
    if any(b.denominator > D or b < 0 for b, _ in report.breaks):
        return False
    return all(r["status"] != "violation" for r in report.comparison)


# ---------------------------------------------------------------------------
# example modules

def nilpotent_example(ctx: PadicContext) -> DifferentialModule:
    """nabla(e_1, e_2) = (0, e_1 dx/x), phi(e_1, e_2) = (e_1, q e_2)."""
    z = LaurentSeries.zero(ctx)
    one = LaurentSeries.constant(ctx, 1)
    G = [[z, one], [z, z]]
    F = [[one, z], [z, LaurentSeries.constant(ctx, ctx.q)]]
    return DifferentialModule(ctx, G, None, True, F, rebuild=nilpotent_example, name="nilpotent")


def laurent_example(ctx: PadicContext, a: LaurentSeries) -> DifferentialModule:
    """nabla(e_1, e_2) = (0, a e_1 dx) over bounded Laurent series."""
    z = LaurentSeries.zero(ctx)
    return DifferentialModule(ctx, [[z, a], [z, z]], None, False, name="laurent")


def log_example(ctx: PadicContext) -> DifferentialModule:
    """(1 - x) y'' - y' = 0, solved by 1 and -log(1 - x)."""
    P = LaurentSeries.polynomial(ctx, {0: 1, 1: -1})
    M = companion_from_ode(ctx, [0, -1], leading=P)
    M.rebuild = log_example
    M.name = "log(1-x)"
    return M


# -- hypergeometric ------------------------------------------------------

def _fq_ops(ctx: PadicContext):
    p, h, g = ctx.p, ctx.h, list(ctx.modulus)

    def mul(a, b):
        return tuple(_pad(_fp_mulmod(list(a), list(b), g, p), h))

    def add(a, b):
        return tuple((x + y) % p for x, y in zip(a, b))

    def power(a, e):
        return tuple(_pad(_fp_powmod(list(a), e, g, p), h)) if any(a) else a

    return mul, add, power


def _pad(a, h):
    a = list(a)
    return a + [0] * (h - len(a))


def _elem(ctx, v):
    if isinstance(v, int):
        return tuple(_pad([v % ctx.p], ctx.h))
    return tuple(_pad([c % ctx.p for c in v], ctx.h))


def hasse_value(ctx: PadicContext, lam) -> tuple:
    """sum_{i <= (p-1)/2} binom((p-1)/2, i)^2 lambda^i in F_q."""
    mul, add, power = _fq_ops(ctx)
    m = (ctx.p - 1) // 2
    lam = _elem(ctx, lam)
    acc = _elem(ctx, 0)
    for i in range(m + 1):
        c = math.comb(m, i) ** 2 % ctx.p
        term = mul(_elem(ctx, c), power(lam, i)) if i else _elem(ctx, c)
        acc = add(acc, term)
    return acc


def is_ordinary(ctx: PadicContext, lam) -> bool:
    return any(hasse_value(ctx, lam))


def legendre_trace(ctx: PadicContext, lam) -> int:
    """a_q = -sum_w chi(w(w-1)(w-lambda)) over F_q."""
    mul, add, power = _fq_ops(ctx)
    q = ctx.q
    lam = _elem(ctx, lam)
    one = _elem(ctx, 1)
    neg = lambda a: tuple((-x) % ctx.p for x in a)
    total = 0
    for w in ctx.residue_elements():
        w = _elem(ctx, w)
        val = mul(mul(w, add(w, neg(one))), add(w, neg(lam)))
        if not any(val):
            continue
        chi = power(val, (q - 1) // 2)
        total += 1 if chi == one else -1
    return -total


def legendre_point_count(ctx: PadicContext, lam) -> int:
    """#E(F_q) for y^2 = x(x-1)(x-lambda), by brute force over (x, y)."""
    mul, add, _ = _fq_ops(ctx)
    lam = _elem(ctx, lam)
    one = _elem(ctx, 1)
    neg = lambda a: tuple((-x) % ctx.p for x in a)
    squares: dict = {}
    elems = [_elem(ctx, e) for e in ctx.residue_elements()]
    for yv in elems:
        s = mul(yv, yv)
        squares[s] = squares.get(s, 0) + 1
    count = 1
    for xv in elems:
        rhs = mul(mul(xv, add(xv, neg(one))), add(xv, neg(lam)))
        count += squares.get(rhs, 0)
    return count


def hypergeometric_module(ctx: PadicContext, residue) -> DifferentialModule:
    """x(1-x) y'' + (1-2x) y' - y/4 = 0 recentred at the Teichmuller lift a of
    ``residue``: t = x - a gives P = (a+t)(1-a-t), Q = 1-2a-2t, R = -1/4."""
    a = ctx.teichmuller(residue if ctx.h == 1 else list(_elem(ctx, residue)))
    one = ctx.one()
    P = LaurentSeries.polynomial(ctx, {0: a * (one - a), 1: one - a - a, 2: -one})
    Q = LaurentSeries.polynomial(ctx, {0: one - a - a, 1: ctx.from_int(-2)})
    R = LaurentSeries.constant(ctx, ctx.from_rational(-1, 4))
    M = companion_from_ode(ctx, [R, Q], leading=P)
    aq = legendre_trace(ctx, residue)
    M.F0 = [[ctx.exact_zero(), ctx.from_int(-ctx.q)], [ctx.one(), ctx.from_int(aq)]]
    M.generic_slopes = [0, 1]
    M.rebuild = lambda c: hypergeometric_module(c, residue)
    M.name = f"hypergeometric@{residue}"
    return M


def ordinary_residues(ctx: PadicContext) -> list:
    out = []
    for r in ctx.residue_elements():
        e = _elem(ctx, r)
        if e in (_elem(ctx, 0), _elem(ctx, 1)):
            continue
        if is_ordinary(ctx, r):
            out.append(r)
    return out


def supersingular_residues(ctx: PadicContext) -> list:
    out = []
    for r in ctx.residue_elements():
        e = _elem(ctx, r)
        if e in (_elem(ctx, 0), _elem(ctx, 1)):
            continue
        if not is_ordinary(ctx, r):
            out.append(r)
    return out
