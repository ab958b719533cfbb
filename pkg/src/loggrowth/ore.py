"""Twisted polynomials a_0 + a_1 sigma + ... + a_n sigma^n with sigma a = sigma(a) sigma."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .padics import INF, PadicContext, PadicScalar
from .series import LaurentSeries, LogSeries, UncertifiedError, as_fraction
from .valuations_np import NewtonPolygon, polygon_from_points


def q_power(ctx: PadicContext, s) -> PadicScalar:
    """q^s as the exact power p^{h s}; requires h*s to be an integer."""
    e = as_fraction(s) * ctx.h
    if e.denominator != 1:
        raise ValueError(f"q^{s} is not a rational number for q = {ctx.q}")
    return ctx.one().mul_p_power(int(e))


def _as_series(ctx, a) -> LaurentSeries:
    if isinstance(a, LaurentSeries):
        return a
    return LaurentSeries.constant(ctx, a)


class TwistedPoly:
    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: PadicContext, coeffs: Sequence):
        cs = [_as_series(ctx, a) for a in coeffs]
        while len(cs) > 1 and cs[-1].is_exact_zero():
            cs.pop()
        if not cs:
            cs = [LaurentSeries.zero(ctx)]
        self.ctx = ctx
        self.coeffs = cs

    @classmethod
    def sigma_power(cls, ctx, k: int = 1) -> "TwistedPoly":
        return cls(ctx, [0] * k + [1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other: "TwistedPoly") -> "TwistedPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        z = LaurentSeries.zero(self.ctx)
        a = self.coeffs + [z] * (n - len(self.coeffs))
        b = other.coeffs + [z] * (n - len(other.coeffs))
        return TwistedPoly(self.ctx, [x + y for x, y in zip(a, b)])

    def __neg__(self):
        return TwistedPoly(self.ctx, [-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "TwistedPoly") -> "TwistedPoly":
        return ore_mul(self, other)

    def equals(self, other: "TwistedPoly") -> bool:
        return all(c.is_zero() for c in (self - other).coeffs)

    def norms_q(self) -> list:
        """-log_q |a_i|_1 for each i (INF for zero coefficients)."""
        out = []
        for a in self.coeffs:
            g = a.gauss_exponent(0)
            if g.e != INF and not g.certified:
                raise UncertifiedError("coefficient norm not certified")
            out.append(INF if g.e == INF else Fraction(g.e) / self.ctx.h)
        return out

    def to_json(self):
        return [a.to_json() for a in self.coeffs]

    @classmethod
    def from_json(cls, ctx, obj) -> "TwistedPoly":
        if not isinstance(obj, list):
            raise ValueError("twisted polynomial must be a JSON array of series")
        return cls(ctx, [LaurentSeries.from_json(ctx, a) for a in obj])

    def __repr__(self):
        return "TwistedPoly(" + ", ".join(repr(a) for a in self.coeffs) + ")"


def ore_mul(f: TwistedPoly, g: TwistedPoly) -> TwistedPoly:
    out: list = [None] * (len(f.coeffs) + len(g.coeffs) - 1)
    for j, b in enumerate(g.coeffs):
        if b.is_exact_zero():
            continue
        bi = b
        for i, a in enumerate(f.coeffs):
            if not a.is_exact_zero():
                t = a * bi
                out[i + j] = t if out[i + j] is None else out[i + j] + t
            if i + 1 < len(f.coeffs):
                bi = bi.frobenius_sub()
    z = LaurentSeries.zero(f.ctx)
    return TwistedPoly(f.ctx, [z if c is None else c for c in out])


def apply(f: TwistedPoly, y) -> LogSeries:
    """sum_i a_i sigma^i(y)."""
    if isinstance(y, LaurentSeries):
        y = LogSeries.of(y)
    acc = None
    yi = y
    for i, a in enumerate(f.coeffs):
        if not a.is_exact_zero():
            t = yi * a
            acc = t if acc is None else acc + t
        if i + 1 < len(f.coeffs):
            yi = yi.frobenius_sub_log()
    return acc if acc is not None else LogSeries(f.ctx, [])


def from_slope_factors(ctx: PadicContext, slopes: Sequence) -> TwistedPoly:
    """(sigma - q^{s_1} x) ... (sigma - q^{s_n} x) by iterated multiplication."""
    x = LaurentSeries.monomial(ctx, 1)
    out = TwistedPoly(ctx, [1])
    for s in slopes:
        out = ore_mul(out, TwistedPoly(ctx, [-x.scale(q_power(ctx, s)), 1]))
    return out


def closed_formula(ctx: PadicContext, slopes: Sequence) -> TwistedPoly:
    """Expansion of the same product via subsets: choosing the constant term
    of factors j_1 < ... < j_i contributes (-1)^i q^{sum s} x^{sum q^{j_k - k}}
    to a_{n-i}.  (Factor j_k sees j_k - k copies of sigma to its left.)"""
    n = len(slopes)
    q = ctx.q
    coeffs = []
    for i in range(n, -1, -1):
        terms: dict[int, PadicScalar] = {}
        for js in combinations(range(1, n + 1), i):
            e = sum(q ** (j - k) for k, j in enumerate(js, start=1))
            c = q_power(ctx, sum((as_fraction(slopes[j - 1]) for j in js), Fraction(0)))
            if i % 2:
                c = -c
            terms[e] = terms[e] + c if e in terms else c
        coeffs.append(LaurentSeries.polynomial(ctx, terms))
    return TwistedPoly(ctx, coeffs)


def newton_polygon_twisted(f: TwistedPoly) -> NewtonPolygon:
    """Lower hull of (i, -log_q |a_i|_1); stored slopes are the hull slopes."""
    pts = [(i, v) for i, v in enumerate(f.norms_q()) if v != INF]
    return polygon_from_points(pts)


def slopes_of_f(f: TwistedPoly) -> list[Fraction]:
    return newton_polygon_twisted(f).slope_multiset()


def slopes_paper(f: TwistedPoly) -> list[Fraction]:
    return sorted(-s for s in slopes_of_f(f))


@dataclass(frozen=True)
class StarReport:
    polygon: NewtonPolygon
    on_polygon: tuple  # None for zero coefficients
    satisfied: bool

    def to_json(self):
        return {"polygon": self.polygon.to_json(), "on_polygon": list(self.on_polygon),
                "satisfied": self.satisfied}


def check_condition_star(f: TwistedPoly) -> StarReport:
    norms = f.norms_q()
    poly = polygon_from_points([(i, v) for i, v in enumerate(norms) if v != INF])
    flags = tuple(None if v == INF else poly.contains_point((i, v)) for i, v in enumerate(norms))
    return StarReport(poly, flags, all(fl is not False for fl in flags))
