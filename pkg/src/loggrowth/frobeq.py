"""Frobenius equations a_0 y + a_1 y^sigma + ... + a_n y^{sigma^n} = 0.

Log-growth is read off a ladder of radii rho_m = rho_0^{q^{-m}} (so
r_m = r_0 q^{-m}); on it a solution of log-growth lambda has
log_q |y|_{rho_m} = lambda m + O(1).  Classification snaps the fitted
slope to the finite candidate set allowed by the twisted Newton polygon,
and the two norm inequalities behind that dichotomy are audited on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ore import TwistedPoly, apply, check_condition_star, newton_polygon_twisted
from .padics import INF
from .series import LaurentSeries, LogSeries, as_fraction
from .valuations_np import eventual_exponent

NEG_INF = -math.inf


class FrobeqError(ArithmeticError):
    pass


class Unclassified(Exception):
    def __init__(self, report):
        super().__init__(f"estimate {report.raw:.4f} is not within tolerance of a candidate")
        self.report = report


# ---------------------------------------------------------------------------
# solving

@dataclass
class FixedPointResult:
    y: LaurentSeries
    constraint_residual: object      # (sum_i a_i(0)) y(0) + g(0)
    constraint_ok: bool


def solve_fixed_point(f: TwistedPoly, seed, T: int, forcing: Optional[LaurentSeries] = None) -> FixedPointResult:
    """Power series y mod x^T with f(sigma) y + forcing = 0, from y(0) = seed.

    Writes a_0 = u(x) with u(0) invertible and solves
    u_0 y_m = -[x^m](sum_{i>=1} a_i y^{sigma^i} + forcing) - sum_{j>=1} u_j y_{m-j};
    the right side only involves y_{m'} with m' q^i <= m, hence m' < m.
    """
    ctx = f.ctx
    q = ctx.q
    if q < 2:
        raise FrobeqError("sigma must raise x to a power q >= 2")
    for a in f.coeffs:
        if a.coeffs and min(a.coeffs) < 0 or not a.exact_below:
            raise FrobeqError("coefficients must be power series for the x-adic iteration")
    a0 = f.coeffs[0]
    u0 = a0[0] if a0.known(0) else ctx.exact_zero()
    if u0.is_zero():
        raise FrobeqError("a_0(0) is not invertible: the iteration does not contract")
    inv0 = u0.inverse()
    if not hasattr(seed, "ctx"):
        seed = ctx.from_rational(as_fraction(seed).numerator, as_fraction(seed).denominator)
    g = forcing
    y = [seed]
    # constraint at x^0
    tot = sum((a[0] for a in f.coeffs if a.known(0)), ctx.exact_zero()) * seed
    if g is not None and g.known(0):
        tot = tot + g[0]
    terms = [sorted(a.coeffs.items()) for a in f.coeffs]
    a0_terms = [(e, c) for e, c in terms[0] if e >= 1]
    hi = min([a.hi for a in f.coeffs] + ([g.hi] if g is not None else []))
    T = int(min(T, hi))
    for m in range(1, T):
        acc = g[m] if g is not None and g.known(m) and m in g.coeffs else ctx.exact_zero()
        for i in range(1, len(terms)):
            qi = q**i
            for e, c in terms[i]:
                if e > m:
                    break
                d = m - e
                if d % qi == 0:
                    acc = acc + c * y[d // qi]
        for e, c in a0_terms:
            if e > m:
                break
            acc = acc + c * y[m - e]
        y.append(-(acc * inv0))
    coeffs = {n: c for n, c in enumerate(y) if not c.is_exact_zero}
    floor = None
    ys = LaurentSeries(ctx, coeffs, exact_below=True, trunc=T, floor=floor)
    return FixedPointResult(ys, tot, tot.is_zero())


def verify_solution(f: TwistedPoly, y, T: int) -> bool:
    """f(sigma) y vanishes below x^T in every log-degree."""
    if isinstance(y, LaurentSeries):
        y = LogSeries.of(y)
    r = apply(f, y)
    for comp in r.comps:
        for n, c in comp.coeffs.items():
            if n < T and not c.is_zero():
                return False
        if comp.lo > comp.n_min and comp.n_min < T:
            return False
    return True


# ---------------------------------------------------------------------------
# ladders

@dataclass(frozen=True)
class LadderEntry:
    m: int
    r: Fraction
    exponent: float          # -log_p |y|_rho
    rational: object
    degree: int
    certified: bool
    error_bound: float

    def log_q_norm(self, h: int) -> float:
        return -self.exponent / h


@dataclass
class LadderProfile:
    r0: Fraction
    q: int
    h: int
    entries: list
    diagnostic: str = ""

    @property
    def depth(self) -> int:
        return self.entries[-1].m if self.entries else -1

    def value(self, m: int) -> float:
        """log_q |y|_{rho_m}."""
        for e in self.entries:
            if e.m == m:
                return e.log_q_norm(self.h)
        raise KeyError(m)

    def has(self, m: int) -> bool:
        return any(e.m == m for e in self.entries)

    def to_rows(self):
        return [(e.m, e.r, e.exponent, e.certified) for e in self.entries]


def ladder_radius(r0, q: int, m: int) -> Fraction:
    return as_fraction(r0) / Fraction(q) ** m


def ladder_profile(y, r0, M: int, *, m_start: int = 0, require_certified: bool = True) -> LadderProfile:
    if isinstance(y, LaurentSeries):
        y = LogSeries.of(y)
    ctx = y.ctx
    r0 = as_fraction(r0)
    entries = []
    diag = ""
    for m in range(m_start, M + 1):
        r = ladder_radius(r0, ctx.q, m)
        ln = y.log_norm_exponent(r)
        if ln.rational == INF:
            raise FrobeqError("the zero series has no ladder")
        if require_certified and not ln.certified:
            diag = f"certification failed at depth {m}; profile truncated at {m - 1}"
            break
        entries.append(LadderEntry(m, r, ln.value, ln.rational, ln.degree, ln.certified, ln.error_bound))
    return LadderProfile(r0, ctx.q, ctx.h, entries, diag)


def least_squares_slope(xs, ys) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx


def ladder_slope(profile: LadderProfile, W: Optional[int] = None) -> float:
    pts = [e for e in profile.entries if e.m >= 0]
    if len(pts) < 2:
        raise FrobeqError("ladder too short for an estimate")
    M = pts[-1].m
    W = W or max(4, M // 3)
    pts = pts[-W:]
    return least_squares_slope([e.m for e in pts], [e.log_q_norm(profile.h) for e in pts])


def feasible_depth(T: int, r0, q: int, safety: int = 2) -> int:
    """Largest M with T >= safety * q^M / r0."""
    r0 = as_fraction(r0)
    M = 0
    while T >= safety * Fraction(q) ** (M + 1) / r0:
        M += 1
    return M


# ---------------------------------------------------------------------------
# classification

@dataclass
class Config:
    r0: Fraction = Fraction(1, 2)
    M: int = 12
    tau: float = 0.15
    D: int = 8
    W: Optional[int] = None


@dataclass
class LogGrowthReport:
    slopes: list               # s_1 > ... > s_k: segment j has hull slope -s_j
    vertices: list             # x-coordinates lambda_0 < ... < lambda_k
    raw: float
    snapped: Optional[Fraction]
    classification: str
    evidence: LadderProfile
    audit: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "slopes": [str(s) for s in self.slopes],
            "vertices": self.vertices,
            "estimate": float(f"{self.raw:.12g}"),
            "snapped": None if self.snapped is None else str(self.snapped),
            "classification": self.classification,
            "ladder": [{"m": e.m, "r": str(e.r), "exponent": float(f"{e.exponent:.12g}"),
                        "error_bound": e.error_bound, "certified": e.certified}
                       for e in self.evidence.entries],
            "audit": self.audit,
        }


def _segments(f: TwistedPoly):
    poly = newton_polygon_twisted(f)
    verts = [int(x) for x, _ in poly.vertices]
    slopes = [-s for s, _ in poly.slopes]
    return verts, slopes


def _coeff_logq(f: TwistedPoly, i: int, r: Fraction) -> float:
    """log_q |a_i|_{p^-r} (-inf for zero)."""
    g = f.coeffs[i].gauss_exponent(r)
    if g.e == INF:
        return NEG_INF
    return -float(g.e) / f.ctx.h


def _term(f, prof, i, m):
    """log_q |a_i y^{sigma^i}|_{rho_m} = log_q|a_i|_{rho_m} + log_q|y|_{rho_{m-i}}."""
    a = _coeff_logq(f, i, ladder_radius(prof.r0, f.ctx.q, m))
    if a == NEG_INF:
        return NEG_INF
    return a + prof.value(m - i)


def _sup(vals):
    return max(vals) if vals else NEG_INF


def audit_conditions(f: TwistedPoly, prof: LadderProfile, verts: list, eps: float = 1e-9) -> dict:
    """(C_j) on the ladder grid for j = 0..k-2, and the least failing j."""
    n = f.degree
    k = len(verts) - 1
    grid = [e.m for e in prof.entries if e.m >= 0 and prof.has(e.m - n)]
    status = {}
    least = k - 1
    for j in range(k - 1):
        lo, mid = verts[j], verts[j + 1]
        ok = True
        for m in grid:
            left = _sup([_term(f, prof, i, m) for i in range(lo, mid + 1)])
            right = _sup([_term(f, prof, i, m) for i in range(mid + 1, n + 1)])
            if left > right + eps:
                ok = False
                break
        status[j] = ok
        if not ok and least == k - 1:
            least = j
    return {"C": status, "j": least, "grid": [grid[0], grid[-1]] if grid else []}


def _alpha(a: LaurentSeries) -> int:
    return eventual_exponent(a).a


def _regime_ok(f: TwistedPoly, r_hi: Fraction) -> bool:
    for a in f.coeffs:
        if a.is_exact_zero():
            continue
        ev = eventual_exponent(a)
        if ev.r0 != INF and ev.r0 < r_hi:
            return False
    return True


def upper_audit(f, prof, verts, slopes, j) -> dict:
    """|y|_rho <= C |y|_{rho^{q^{m-N}}} q^{(m-N) s_{j+1}} with N in 0..n-1."""
    n, q, h = f.degree, f.ctx.q, f.ctx.h
    s = slopes[j]
    lj = verts[j]
    alphas = [_alpha(f.coeffs[i]) - _alpha(f.coeffs[lj]) for i in range(lj + 1, n + 1)
              if not f.coeffs[i].is_exact_zero()]
    v = max([abs(a) for a in alphas] + [0])
    B = n * q / (q - 1) * v * float(prof.r0) / h
    worst = NEG_INF
    for e in prof.entries:
        if e.m < 0:
            continue
        cands = [prof.value(e.m) - prof.value(N) - (e.m - N) * float(s)
                 for N in range(0, n) if prof.has(N) and N <= e.m]
        if cands:
            worst = max(worst, min(cands))
    return {"B": B, "B_empirical": worst, "holds": worst <= B + 1e-9, "v": v}


def lower_audit(f, prof, verts, slopes, j) -> dict:
    """Run the descending construction m(l) from the first grid radius where the
    strict inequality holds, recording i' choices and the eps_{iu} support."""
    n, q, h = f.degree, f.ctx.q, f.ctx.h
    s = slopes[j]
    lj, lj1 = verts[j], verts[j + 1]
    M = prof.depth

    def left(m):
        return _sup([_term(f, prof, i, m) for i in range(lj, lj1 + 1)])

    def right(m):
        return _sup([_term(f, prof, i, m) for i in range(lj1 + 1, n + 1)])

    def argmax_below(m):
        vals = [(_term(f, prof, i, m), i) for i in range(0, lj1)]
        best = max(v for v, _ in vals)
        return min(i for v, i in vals if v >= best - 1e-12)

    m1 = None
    for m in range(n, M + 1):
        if prof.has(m) and prof.has(m - n) and left(m) > right(m) + 1e-12:
            m1 = m
            break
    if m1 is None:
        return {"holds": None, "reason": "strict inequality not witnessed on the grid"}
    # ladder index of rho_1^{q^t} is m1 - t
    seq = [argmax_below(m1)]
    iprimes = [seq[0]]
    eps = [(seq[0], 0)]
    while True:
        ml = seq[-1]
        idx = m1 - ml + lj1            # radius rho_1^{q^{m(l) - lambda_{j+1}}}
        if idx > M or not prof.has(idx - n):
            break
        ip = argmax_below(idx)
        nxt = ml - lj1 + ip
        seq.append(nxt)
        iprimes.append(ip)
        eps.append((ip, nxt - lj1))
        if m1 - nxt > M:
            break
    alphas = [_alpha(f.coeffs[lj1]) - _alpha(f.coeffs[i]) for i in range(0, lj1)
              if not f.coeffs[i].is_exact_zero()]
    v = -max([abs(a) for a in alphas] + [0])
    r1 = float(ladder_radius(prof.r0, q, m1))
    Bp = n * q / (q - 1) * v * r1 / h
    base = prof.value(m1 - lj1)
    worst = math.inf
    for ml in seq:
        idx = m1 - ml
        if prof.has(idx):
            worst = min(worst, prof.value(idx) - base - (lj1 - ml) * float(s))
    return {"B_prime": Bp, "B_prime_empirical": worst, "holds": worst >= Bp - 1e-9,
            "rho1_index": m1, "m_sequence": seq, "i_prime": iprimes,
            "eps_support": [list(t) for t in eps], "v": v}


def snap(raw: float, candidates, tau: float):
    best = min(candidates, key=lambda c: abs(raw - float(c)))
    return best if abs(raw - float(best)) <= tau else None


def classify_log_growth(f: TwistedPoly, y, config: Optional[Config] = None, *,
                        raise_unclassified: bool = False) -> LogGrowthReport:
    config = config or Config()
    if isinstance(y, LaurentSeries):
        y = LogSeries.of(y)
    star = check_condition_star(f)
    if not star.satisfied:
        raise FrobeqError("condition (*) fails for f")
    if y.is_zero():
        raise FrobeqError("y must be nonzero")
    verts, slopes = _segments(f)
    n = f.degree
    prof = ladder_profile(y, config.r0, config.M, m_start=-n)
    raw = ladder_slope(prof, config.W)
    cands = [Fraction(0)] + sorted({s for s in slopes if s > 0})
    snapped = snap(raw, cands, config.tau)
    audit = audit_conditions(f, prof, verts)
    j = audit["j"]
    audit["predicted"] = str(slopes[j]) if slopes else "0"
    audit["regime_ok"] = _regime_ok(f, as_fraction(config.r0) * Fraction(f.ctx.q) ** n)
    if slopes:
        audit["upper"] = upper_audit(f, prof, verts, slopes, j)
        audit["lower"] = lower_audit(f, prof, verts, slopes, j)
    if snapped is None:
        cls = "Unclassified"
    elif snapped == 0:
        cls = "Bounded"
    else:
        cls = f"ExactlyLogGrowth({snapped})"
    rep = LogGrowthReport(slopes, verts, raw, snapped, cls, prof, audit)
    if snapped is None and raise_unclassified:
        raise Unclassified(rep)
    return rep
