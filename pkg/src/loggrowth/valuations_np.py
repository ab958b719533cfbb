"""Partial valuations, weighted valuations and Newton polygons of ring elements.

For a Laurent carrier f = sum a_m x^m we use v_n(f) = min{m : v_p(a_m) <= n};
then w_r(f) = min_n (r v_n(f) + n) coincides with min_m (v_p(a_m) + r m).
All hull arithmetic is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .padics import INF
from .series import LaurentSeries, UncertifiedError, as_fraction


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower convex hull.  ``slopes`` are hull slopes with their
    multiplicities; sign conventions are left to the caller."""
    vertices: tuple[tuple[Fraction, Fraction], ...]
    slopes: tuple[tuple[Fraction, Fraction], ...] = field(default=())

    @property
    def is_empty(self) -> bool:
        return not self.slopes

    def slope_multiset(self) -> list[Fraction]:
        out = []
        for s, m in self.slopes:
            if m.denominator != 1:
                raise ValueError("non-integral multiplicity")
            out.extend([s] * int(m))
        return out

    def negated(self) -> list[tuple[Fraction, Fraction]]:
        return [(-s, m) for s, m in self.slopes]

    def contains_point(self, pt) -> bool:
        """Is the point on the polygon (as opposed to strictly above it)?"""
        x, y = Fraction(pt[0]), Fraction(pt[1])
        vs = self.vertices
        for (x0, y0), (x1, y1) in zip(vs, vs[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0) == y
        return len(vs) == 1 and vs[0] == (x, y)

    def to_json(self):
        return {
            "vertices": [[str(x), str(y)] for x, y in self.vertices],
            "slopes": [[str(s), str(m)] for s, m in self.slopes],
        }


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(points: Sequence[tuple]) -> list[tuple[Fraction, Fraction]]:
    """Vertices of the lower convex hull, left to right (Andrew's chain)."""
    best: dict[Fraction, Fraction] = {}
    for x, y in points:
        x, y = Fraction(x), Fraction(y)
        if x not in best or y < best[x]:
            best[x] = y
    pts = sorted(best.items())
    hull: list[tuple[Fraction, Fraction]] = []
    for pt in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return hull


def polygon_from_points(points) -> NewtonPolygon:
    hull = lower_hull(points)
    slopes = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        slopes.append(((y1 - y0) / (x1 - x0), x1 - x0))
    return NewtonPolygon(tuple(hull), tuple(slopes))


# ---------------------------------------------------------------------------

def _require_left(f: LaurentSeries, n) -> None:
    if not f.exact_below and (f.floor is None or f.floor <= n):
        raise UncertifiedError("left tail is not certified")


def partial_valuation(f: LaurentSeries, n: int):
    """min{m : v_p(a_m) <= n}, or INF."""
    _require_left(f, n)
    for m in sorted(f.coeffs):
        c = f.coeffs[m]
        if c.is_zero_at_precision:
            if c.val <= n:
                raise UncertifiedError(f"coefficient {m} is zero only to precision p^{c.val}")
            continue
        if c.val <= n:
            return m
    if f.trunc is not None and (f.floor is None or f.floor <= n):
        raise UncertifiedError("truncated tail may contain a term of valuation <= n")
    return INF


def _valuation_range(f: LaurentSeries):
    """Range of n on which v_n is finite and not yet stable."""
    vals = [c.val for c in f.coeffs.values() if not c.is_zero()]
    if not vals:
        return None
    m_star = min(m for m, c in f.coeffs.items() if not c.is_zero())
    return int(min(vals)), int(f.coeffs[m_star].val)


def partial_valuation_points(f: LaurentSeries) -> list[tuple[int, int]]:
    """Points (v_n, n) for the n at which v_n is finite, up to stabilisation."""
    rng = _valuation_range(f)
    if rng is None:
        return []
    lo, hi = rng
    pts = []
    for n in range(lo, hi + 1):
        v = partial_valuation(f, n)
        if v != INF:
            pts.append((v, n))
    return pts


def weighted_valuation(f: LaurentSeries, r):
    r = as_fraction(r)
    pts = partial_valuation_points(f)
    if not pts:
        if f.trunc is not None and not f.is_zero():
            raise UncertifiedError("no certified term")
        return INF
    return min(r * v + n for v, n in pts)


def newton_polygon_ring(f: LaurentSeries, r) -> NewtonPolygon:
    """Hull of {(v_n, n)} with the two cut rules applied.  Retained hull
    slopes lie in [-r, 0); the slopes of f are their negatives."""
    r = as_fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    pts = partial_valuation_points(f)
    if not pts:
        raise ValueError("polygon of the zero element")
    full = polygon_from_points(pts)
    segs = list(zip(full.vertices, full.vertices[1:]))
    while segs and (segs[0][1][1] - segs[0][0][1]) / (segs[0][1][0] - segs[0][0][0]) < -r:
        segs.pop(0)
    while segs and (segs[-1][1][1] - segs[-1][0][1]) / (segs[-1][1][0] - segs[-1][0][0]) >= 0:
        segs.pop()
    if not segs:
        return NewtonPolygon((), ())
    verts = [segs[0][0]] + [b for _, b in segs]
    slopes = tuple(((b[1] - a[1]) / (b[0] - a[0]), abs(b[1] - a[1])) for a, b in segs)
    return NewtonPolygon(tuple(verts), slopes)


def slopes_of_element(f: LaurentSeries, r) -> list[tuple[Fraction, Fraction]]:
    """Slopes of f in (0, r] with multiplicities."""
    return newton_polygon_ring(f, r).negated()


@dataclass(frozen=True)
class EventualExponent:
    a: int
    r0: Fraction | float  # INF when no other term ever ties (rho_0 = 0)
    e1: int


def eventual_exponent(f: LaurentSeries) -> EventualExponent:
    """|f|_rho = rho^a |f|_1 for rho in (p^-r0, 1]."""
    if not f.exact_below:
        raise UncertifiedError("dominance needs a certified left tail")
    g = f.gauss_exponent(0)
    if g.e == INF:
        raise ValueError("zero element")
    if not g.certified:
        raise UncertifiedError("|f|_1 is not certified")
    vmin = g.e
    a = min(m for m, c in f.coeffs.items() if not c.is_zero() and c.val == vmin)
    r0 = INF
    for m, c in f.coeffs.items():
        if m < a and not c.is_exact_zero:
            v = c.val  # zero-at-precision entries bound the valuation from below
            t = Fraction(v - vmin, a - m)
            if t < r0:
                r0 = t
    return EventualExponent(a, r0, int(vmin))
