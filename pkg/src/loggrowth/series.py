"""Windowed Laurent series over Q_q and polynomials in log x.

A :class:`LaurentSeries` knows its coefficients exactly on a *known region*
``[lo, hi)``; ``lo`` is ``-inf`` when ``exact_below`` holds and ``hi`` is
``+inf`` for polynomials (``trunc is None``).  Inside the region, indices
missing from the sparse coefficient map are exact zeros.  ``floor`` is a
declared lower bound on the valuation of every coefficient, known or not,
and is what lets Gauss norms be certified against the unknown tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import mpmath

from .padics import INF, ContextMismatch, PadicContext, PadicScalar

NEG_INF = -math.inf
MAX_ORDER = 10**12


class WindowOverflow(ArithmeticError):
    pass


class UncertifiedError(ArithmeticError):
    """A quantity needed for an exact decision is not certified."""


def as_fraction(r) -> Fraction:
    return r if isinstance(r, Fraction) else Fraction(r)


@dataclass(frozen=True)
class GaussExponent:
    """e(f, r) = min_n v_p(a_n) + r n, so that |f|_rho = p^-e."""
    e: Fraction | float
    certified: bool


class LaurentSeries:
    __slots__ = ("ctx", "coeffs", "n_min", "exact_below", "trunc", "floor")

    def __init__(self, ctx: PadicContext, coeffs: Mapping[int, PadicScalar], *,
                 exact_below: bool = True, trunc: int | None = None,
                 n_min: int | None = None, floor: int | None = None):
        self.ctx = ctx
        clean = {}
        for n, c in coeffs.items():
            if not isinstance(c, PadicScalar):
                c = ctx.from_rational(as_fraction(c).numerator, as_fraction(c).denominator)
            if c.is_exact_zero:
                continue
            if trunc is not None and n >= trunc:
                continue
            if not exact_below and n_min is not None and n < n_min:
                continue
            clean[n] = c
        self.coeffs = clean
        if n_min is None:
            if not exact_below:
                raise ValueError("a series without exact_below needs n_min")
            n_min = min(clean) if clean else (0 if trunc is None else min(0, trunc))
        self.n_min = n_min
        self.exact_below = exact_below
        self.trunc = trunc
        self.floor = floor

    # -- constructors ----------------------------------------------------
    @classmethod
    def polynomial(cls, ctx, coeffs: Mapping[int, object]) -> "LaurentSeries":
        """Exact Laurent polynomial."""
        return cls(ctx, dict(coeffs), exact_below=True, trunc=None)

    @classmethod
    def zero(cls, ctx) -> "LaurentSeries":
        return cls(ctx, {}, exact_below=True, trunc=None)

    @classmethod
    def constant(cls, ctx, c) -> "LaurentSeries":
        return cls.polynomial(ctx, {0: c})

    @classmethod
    def monomial(cls, ctx, n: int, c=1) -> "LaurentSeries":
        return cls.polynomial(ctx, {n: c})

    @classmethod
    def from_function(cls, ctx, fn: Callable[[int], object], start: int, trunc: int,
                      floor: int | None = None) -> "LaurentSeries":
        """Power/Laurent series sum_{n >= start} fn(n) x^n known below x^trunc."""
        coeffs = {n: fn(n) for n in range(start, trunc)}
        return cls(ctx, coeffs, exact_below=True, trunc=trunc, floor=floor)

    # -- basic queries ---------------------------------------------------
    @property
    def lo(self):
        return NEG_INF if self.exact_below else self.n_min

    @property
    def hi(self):
        return math.inf if self.trunc is None else self.trunc

    @property
    def n_max(self) -> int:
        if self.trunc is not None:
            return self.trunc - 1
        return max(self.coeffs) if self.coeffs else self.n_min

    @property
    def window(self) -> tuple[int, int]:
        return (self.n_min, self.n_max)

    @property
    def is_exact(self) -> bool:
        return self.exact_below and self.trunc is None

    def is_exact_zero(self) -> bool:
        return self.is_exact and not self.coeffs

    def is_zero(self) -> bool:
        """No nonzero coefficient is visible (exact zero or zero to precision)."""
        return all(c.is_zero() for c in self.coeffs.values())

    def known(self, n: int) -> bool:
        return self.lo <= n < self.hi

    def __getitem__(self, n: int) -> PadicScalar:
        if not self.known(n):
            raise UncertifiedError(f"coefficient {n} lies outside the known region")
        return self.coeffs.get(n, self.ctx.exact_zero())

    def support(self) -> list[int]:
        return sorted(self.coeffs)

    def _pmin(self):
        if not self.exact_below:
            return NEG_INF
        m = min(self.coeffs) if self.coeffs else math.inf
        return min(m, self.trunc) if self.trunc is not None else m

    def _pmax(self):
        if self.trunc is not None:
            return math.inf
        m = max(self.coeffs) if self.coeffs else NEG_INF
        return m if self.exact_below else max(m, self.n_min - 1)

    def min_valuation(self):
        vals = [c.val for c in self.coeffs.values() if not c.is_zero()]
        return min(vals) if vals else INF

    def _check(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            if other.ctx != self.ctx:
                raise ContextMismatch("series live in different contexts")
            return other
        if isinstance(other, (int, Fraction, PadicScalar)):
            return LaurentSeries.constant(self.ctx, other)
        return NotImplemented

    @staticmethod
    def _region(lo, hi, coeffs, ctx, floor):
        if lo == NEG_INF:
            return LaurentSeries(ctx, coeffs, exact_below=True,
                                 trunc=None if hi == math.inf else int(hi), floor=floor)
        lo = int(lo)
        trunc = None if hi == math.inf else max(int(hi), lo)
        return LaurentSeries(ctx, coeffs, exact_below=False, n_min=lo, trunc=trunc, floor=floor)

    # -- ring operations -------------------------------------------------
    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        out = {}
        for src in (self.coeffs, other.coeffs):
            for n, c in src.items():
                if lo <= n < hi:
                    out[n] = out[n] + c if n in out else c
        floor = None if self.floor is None or other.floor is None else min(self.floor, other.floor)
        return self._region(lo, hi, out, self.ctx, floor)

    __radd__ = __add__

    def __neg__(self):
        return self._copy_with({n: -c for n, c in self.coeffs.items()})

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def _copy_with(self, coeffs, floor="same"):
        return LaurentSeries(self.ctx, coeffs, exact_below=self.exact_below, trunc=self.trunc,
                             n_min=self.n_min, floor=self.floor if floor == "same" else floor)

    def scale(self, c: PadicScalar) -> "LaurentSeries":
        if not isinstance(c, PadicScalar):
            c = self.ctx.from_rational(as_fraction(c).numerator, as_fraction(c).denominator)
        floor = None
        if self.floor is not None and not c.is_zero():
            floor = self.floor + c.val
        return self._copy_with({n: a * c for n, a in self.coeffs.items()}, floor=floor)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by x^k."""
        return LaurentSeries(self.ctx, {n + k: c for n, c in self.coeffs.items()},
                             exact_below=self.exact_below,
                             trunc=None if self.trunc is None else self.trunc + k,
                             n_min=self.n_min + k, floor=self.floor)

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        ctx = self.ctx
        if self.is_exact_zero() or other.is_exact_zero():
            return LaurentSeries.zero(ctx)
        lo = max(NEG_INF if self.exact_below else self.n_min + other._pmax(),
                 NEG_INF if other.exact_below else other.n_min + self._pmax())
        hi = min(math.inf if self.trunc is None else self.trunc + other._pmin(),
                 math.inf if other.trunc is None else other.trunc + self._pmin())
        out: dict[int, PadicScalar] = {}
        if lo < hi:
            big, small = (self.coeffs, other.coeffs)
            if len(big) < len(small):
                big, small = small, big
            for i, a in small.items():
                for j, b in big.items():
                    k = i + j
                    if lo <= k < hi:
                        t = a * b
                        out[k] = out[k] + t if k in out else t
        floor = None if self.floor is None or other.floor is None else self.floor + other.floor
        if lo >= hi:
            lo = lo if lo != NEG_INF else hi
        return self._region(lo, hi, out, ctx, floor)

    __rmul__ = __mul__

    def truncate(self, T: int) -> "LaurentSeries":
        """Forget coefficients at x^T and above."""
        if self.trunc is not None and self.trunc <= T:
            return self
        floor = self.floor
        if floor is None:
            floor = self.min_valuation()
            floor = None if floor == INF else int(floor)
        return LaurentSeries(self.ctx, {n: c for n, c in self.coeffs.items() if n < T},
                             exact_below=self.exact_below, n_min=self.n_min, trunc=T, floor=floor)

    def inverse(self, T: int) -> "LaurentSeries":
        """Inverse of a power series with unit constant term, to order T."""
        if not self.exact_below or (self.coeffs and min(self.coeffs) < 0):
            raise ValueError("inverse needs a power series")
        a0 = self[0]
        if a0.is_zero():
            raise ZeroDivisionError("constant term vanishes")
        T = min(T, self.hi)
        inv0 = a0.inverse()
        b: dict[int, PadicScalar] = {0: inv0}
        items = sorted((n, c) for n, c in self.coeffs.items() if n > 0)
        for m in range(1, int(T)):
            acc = None
            for n, c in items:
                if n > m:
                    break
                bm = b.get(m - n)
                if bm is not None:
                    t = c * bm
                    acc = t if acc is None else acc + t
            if acc is not None:
                v = -(acc * inv0)
                if not v.is_exact_zero:
                    b[m] = v
        return LaurentSeries(self.ctx, b, exact_below=True, trunc=int(T),
                             floor=None)

    # -- calculus and Frobenius -----------------------------------------
    def derivative(self) -> "LaurentSeries":
        ctx = self.ctx
        out = {}
        for n, c in self.coeffs.items():
            if n != 0:
                out[n - 1] = c * ctx.from_int(n)
        lo = self.lo - 1
        hi = self.hi - 1
        return self._region(lo, hi, out, ctx, self.floor)

    def frobenius_sub(self, max_order: int = MAX_ORDER) -> "LaurentSeries":
        """sigma(sum a_n x^n) = sum sigma_K(a_n) x^{qn}."""
        q = self.ctx.q
        out = {}
        for n, c in self.coeffs.items():
            if abs(q * n) > max_order:
                raise WindowOverflow(f"x^{q * n} exceeds the configured maximal order")
            out[q * n] = c.frobenius_K()
        lo = self.lo if self.lo == NEG_INF else q * (self.lo - 1) + 1
        hi = self.hi if self.hi == math.inf else q * self.hi
        return self._region(lo, hi, out, self.ctx, self.floor)

    def frobenius_iter(self, k: int) -> "LaurentSeries":
        f = self
        for _ in range(k):
            f = f.frobenius_sub()
        return f

    def integral(self) -> tuple["LaurentSeries", PadicScalar]:
        """Antiderivative with zero constant term, plus the residue a_{-1}
        (the coefficient of log x)."""
        ctx = self.ctx
        out = {}
        res = ctx.exact_zero()
        for n, c in self.coeffs.items():
            if n == -1:
                res = c
            else:
                out[n + 1] = c / ctx.from_int(n + 1)
        floor = None
        return self._region(self.lo + 1, self.hi + 1, out, ctx, floor), res

    # -- norms -----------------------------------------------------------
    def gauss_exponent(self, r) -> GaussExponent:
        r = as_fraction(r)
        if r < 0:
            raise ValueError("radius exponent must be nonnegative")
        best = INF
        for n, c in self.coeffs.items():
            if not c.is_zero():
                e = c.val + r * n
                if e < best:
                    best = e
        if best == INF:
            return GaussExponent(INF, self.is_exact_zero())
        certified = True
        for n, c in self.coeffs.items():
            if c.is_zero_at_precision and c.val + r * n < best:
                certified = False
        if not self.exact_below:
            if not (r == 0 and self.floor is not None and self.floor >= best):
                certified = False
        if self.trunc is not None:
            if self.floor is None or self.floor + r * self.trunc < best:
                certified = False
        return GaussExponent(Fraction(best), certified)

    # -- comparison / io -------------------------------------------------
    def equals(self, other: "LaurentSeries") -> bool:
        """Coefficientwise equality on the common known region."""
        d = self - other
        return d.is_zero()

    def to_json(self):
        return {
            "window": [self.n_min, self.n_max],
            "exact_below": self.exact_below,
            "trunc": self.trunc,
            "coeffs": [[n, self.coeffs[n].to_json()] for n in sorted(self.coeffs)],
            "floor": self.floor,
        }

    @classmethod
    def from_json(cls, ctx, obj) -> "LaurentSeries":
        if not isinstance(obj, dict) or "coeffs" not in obj:
            raise ValueError("series must be an object with 'coeffs'")
        coeffs = {}
        for entry in obj["coeffs"]:
            n, c = entry
            coeffs[int(n)] = PadicScalar.from_json(ctx, c)
        window = obj.get("window")
        exact_below = bool(obj.get("exact_below", True))
        trunc = obj.get("trunc", "missing")
        if trunc == "missing":
            trunc = None if window is None else int(window[1]) + 1
        n_min = int(window[0]) if window is not None else None
        return cls(ctx, coeffs, exact_below=exact_below, trunc=trunc,
                   n_min=n_min if not exact_below else None, floor=obj.get("floor"))

    def __repr__(self):
        terms = " + ".join(f"({self.coeffs[n]})x^{n}" for n in sorted(self.coeffs)[:6])
        tail = "" if self.trunc is None else f" + O(x^{self.trunc})"
        return f"LaurentSeries[{terms or '0'}{tail}]"


# ---------------------------------------------------------------------------
# log-polynomials

_MP_DPS = 50


def log_log_term(r, p: int) -> mpmath.mpf:
    """log_p(log(1/rho)) for rho = p^-r, i.e. log_p(r ln p)."""
    with mpmath.workdps(_MP_DPS):
        r = mpmath.mpf(as_fraction(r).numerator) / as_fraction(r).denominator
        return mpmath.log(r * mpmath.log(p)) / mpmath.log(p)


@dataclass(frozen=True)
class LogNormExponent:
    """-log_p |y|_rho = rational + degree * log_p(r ln p)."""
    rational: Fraction | float
    degree: int
    loglog: float
    certified: bool

    @property
    def value(self) -> float:
        if self.rational == INF:
            return INF
        return float(self.rational) + self.degree * self.loglog

    @property
    def error_bound(self) -> float:
        return (abs(self.value) + 1.0) * 2.0**-48

    def symbolic(self):
        return (self.rational, self.degree)


class LogSeries:
    """sum_i f_i (log x)^i."""

    __slots__ = ("ctx", "comps")

    def __init__(self, ctx: PadicContext, comps: Iterable[LaurentSeries]):
        comps = list(comps)
        if not comps:
            comps = [LaurentSeries.zero(ctx)]
        while len(comps) > 1 and comps[-1].is_exact_zero():
            comps.pop()
        self.ctx = ctx
        self.comps = comps

    @classmethod
    def of(cls, f: LaurentSeries) -> "LogSeries":
        return cls(f.ctx, [f])

    @classmethod
    def log_x(cls, ctx) -> "LogSeries":
        return cls(ctx, [LaurentSeries.zero(ctx), LaurentSeries.constant(ctx, 1)])

    @property
    def degree(self) -> int:
        return len(self.comps) - 1

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def _coerce(self, other):
        if isinstance(other, LogSeries):
            return other
        if isinstance(other, LaurentSeries):
            return LogSeries.of(other)
        if isinstance(other, (int, Fraction, PadicScalar)):
            return LogSeries.of(LaurentSeries.constant(self.ctx, other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        zero = LaurentSeries.zero(self.ctx)
        n = max(len(self.comps), len(other.comps))
        a = self.comps + [zero] * (n - len(self.comps))
        b = other.comps + [zero] * (n - len(other.comps))
        return LogSeries(self.ctx, [x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return LogSeries(self.ctx, [-c for c in self.comps])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = [None] * (len(self.comps) + len(other.comps) - 1)
        for i, f in enumerate(self.comps):
            for j, g in enumerate(other.comps):
                t = f * g
                out[i + j] = t if out[i + j] is None else out[i + j] + t
        return LogSeries(self.ctx, out)

    __rmul__ = __mul__

    def scale(self, c) -> "LogSeries":
        return LogSeries(self.ctx, [f.scale(c) for f in self.comps])

    def derivative(self) -> "LogSeries":
        """d/dx, with d(log x)/dx = 1/x."""
        ctx = self.ctx
        out = [f.derivative() for f in self.comps]
        for i in range(1, len(self.comps)):
            out[i - 1] = out[i - 1] + self.comps[i].shift(-1).scale(ctx.from_int(i))
        return LogSeries(ctx, out)

    def frobenius_sub_log(self) -> "LogSeries":
        """sigma(f (log x)^i) = q^i sigma(f) (log x)^i, as sigma(x) = x^q."""
        q = self.ctx.from_int(self.ctx.q)
        out = []
        qi = self.ctx.one()
        for f in self.comps:
            out.append(f.frobenius_sub().scale(qi))
            qi = qi * q
        return LogSeries(self.ctx, out)

    def truncate(self, T: int) -> "LogSeries":
        return LogSeries(self.ctx, [f.truncate(T) for f in self.comps])

    def log_norm_exponent(self, r) -> LogNormExponent:
        r = as_fraction(r)
        if r == 0 and self.degree > 0:
            raise ValueError("log(1/rho) vanishes at rho = 1")
        L = float(log_log_term(r, self.ctx.p)) if r > 0 else 0.0
        Lmp = log_log_term(r, self.ctx.p) if r > 0 else mpmath.mpf(0)
        best = None
        certified = True
        for i, f in enumerate(self.comps):
            g = f.gauss_exponent(r)
            certified = certified and g.certified
            if g.e == INF:
                continue
            with mpmath.workdps(_MP_DPS):
                val = mpmath.mpf(g.e.numerator) / g.e.denominator + i * Lmp
                if best is None or val < best[0]:
                    best = (val, g.e, i)
        if best is None:
            return LogNormExponent(INF, 0, L, certified)
        return LogNormExponent(best[1], best[2], L, certified)

    def equals(self, other: "LogSeries") -> bool:
        return (self - other).is_zero()

    def to_json(self):
        return {"log_components": [f.to_json() for f in self.comps]}

    @classmethod
    def from_json(cls, ctx, obj) -> "LogSeries":
        if isinstance(obj, dict) and "log_components" in obj:
            return cls(ctx, [LaurentSeries.from_json(ctx, c) for c in obj["log_components"]])
        return cls.of(LaurentSeries.from_json(ctx, obj))

    def __repr__(self):
        return "LogSeries(" + ", ".join(repr(c) for c in self.comps) + ")"
