"""Unramified p-adic fields Q_q at capped relative precision.

An element is stored as ``p**val * unit`` where ``unit`` is a unit of the
integer ring known modulo ``p**prec``.  For ``h == 1`` the unit is a plain
int; for ``h > 1`` it is a tuple of ``h`` ints giving coordinates in the basis
``1, t, ..., t**(h-1)`` of ``Z_p[t]/(g)`` for a fixed monic ``g`` irreducible
mod p.

Two kinds of zero exist: the exact zero (``val == INF``) and a zero known
only modulo ``p**val`` (``prec == 0``).  Newton polygons downstream rely on
telling them apart.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

INF = math.inf


class PadicError(ArithmeticError):
    pass


class ContextMismatch(PadicError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def vp_int(n: int, p: int) -> float:
    """p-adic valuation of an integer (INF for 0)."""
    if n == 0:
        return INF
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# Polynomials over F_p, used to pick the defining polynomial and for residues.
# Coefficient lists are little-endian.

def _fp_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mod(a: list[int], m: list[int], p: int) -> list[int]:
    a = [c % p for c in a]
    _fp_trim(a)
    inv_lead = pow(m[-1], -1, p)
    dm = len(m) - 1
    while len(a) - 1 >= dm and a:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        _fp_trim(a)
    return a


def _fp_mulmod(a, b, m, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _fp_mod(out, m, p)


def _fp_powmod(a, e, m, p):
    result = [1]
    base = _fp_mod(list(a), m, p)
    while e:
        if e & 1:
            result = _fp_mulmod(result, base, m, p)
        base = _fp_mulmod(base, base, m, p)
        e >>= 1
    return result


def _fp_gcd(a, b, p):
    a, b = _fp_trim([c % p for c in a]), _fp_trim([c % p for c in b])
    while b:
        a, b = b, _fp_mod(a, b, p)
    return a


def _fp_sub(a, b, p):
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)]
    return _fp_trim(out)


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def fp_irreducible(g: list[int], p: int) -> bool:
    """Rabin's irreducibility test for a monic polynomial over F_p."""
    h = len(g) - 1
    x = [0, 1]
    if _fp_sub(_fp_powmod(x, p**h, g, p), x, p):
        return False
    for r in _prime_factors(h):
        t = _fp_sub(_fp_powmod(x, p ** (h // r), g, p), x, p)
        if len(_fp_gcd(g, t, p)) > 1:
            return False
    return True


def default_modulus(p: int, h: int) -> tuple[int, ...]:
    """Lexicographically first monic irreducible of degree h over F_p whose
    root generates the multiplicative group (falls back to any irreducible)."""
    if h == 1:
        return (0, 1)
    q = p**h
    factors = _prime_factors(q - 1)
    first_irreducible = None
    for code in range(p**h):
        low = [(code // p**i) % p for i in range(h)]
        if low[0] == 0:
            continue
        g = low + [1]
        if not fp_irreducible(g, p):
            continue
        if first_irreducible is None:
            first_irreducible = g
        if all(_fp_powmod([0, 1], (q - 1) // r, g, p) != [1] for r in factors):
            return tuple(g)
    return tuple(first_irreducible)


def sparse_irreducible(p: int, h: int) -> tuple[int, ...]:
    """A monic irreducible of degree h over F_p with few terms (trinomial if
    one exists); cheap reduction for large h."""
    if h == 1:
        return (0, 1)
    for j in range(1, h):
        for a in range(1, p):
            for b in range(1, p):
                g = [0] * (h + 1)
                g[0], g[j], g[h] = b, a, 1
                if fp_irreducible(g, p):
                    return tuple(g)
    return default_modulus(p, h)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PadicContext:
    p: int
    h: int = 1
    N: int = 20
    modulus: tuple[int, ...] = field(default=None, compare=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.h < 1 or self.N < 1:
            raise ValueError("need h >= 1 and N >= 1")
        if self.modulus is None:
            object.__setattr__(self, "modulus", default_modulus(self.p, self.h))
        elif len(self.modulus) != self.h + 1 or self.modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree h")

    @property
    def q(self) -> int:
        return self.p**self.h

    @property
    def log_p_q(self) -> int:
        return self.h

    # -- unit-ring arithmetic (Z_q / p^k) --------------------------------
    def _mul(self, a, b, k):
        m = self.p**k
        if self.h == 1:
            return a * b % m
        h = self.h
        if h >= 8:
            # Kronecker substitution: one big-integer product
            bits = max(a).bit_length() + max(b).bit_length() + h.bit_length() + 1
            mask = (1 << bits) - 1
            A = sum(x << (bits * i) for i, x in enumerate(a))
            B = sum(y << (bits * i) for i, y in enumerate(b))
            P = A * B
            prod = []
            for _ in range(2 * h - 1):
                prod.append(P & mask)
                P >>= bits
        else:
            prod = [0] * (2 * h - 1)
            for i, x in enumerate(a):
                if x:
                    for j, y in enumerate(b):
                        prod[i + j] += x * y
        terms = self._modulus_terms
        for d in range(2 * h - 2, h - 1, -1):
            c = prod[d]
            if c:
                for i, gi in terms:
                    prod[d - h + i] -= c * gi
        return tuple(c % m for c in prod[:h])

    @cached_property
    def _modulus_terms(self):
        return [(i, gi) for i, gi in enumerate(self.modulus[:-1]) if gi]

    def _add(self, a, b, k):
        m = self.p**k
        if self.h == 1:
            return (a + b) % m
        return tuple((x + y) % m for x, y in zip(a, b))

    def _scale(self, a, c, k):
        m = self.p**k
        if self.h == 1:
            return a * c % m
        return tuple(x * c % m for x in a)

    def _reduce(self, a, k):
        m = self.p**k
        if self.h == 1:
            return a % m
        return tuple(x % m for x in a)

    def _val(self, a):
        if self.h == 1:
            return vp_int(a, self.p)
        return min(vp_int(x, self.p) for x in a)

    def _shift_down(self, a, s):
        ps = self.p**s
        if self.h == 1:
            return a // ps
        return tuple(x // ps for x in a)

    def _from_int(self, n):
        if self.h == 1:
            return n
        return (n,) + (0,) * (self.h - 1)

    def _is_zero(self, a):
        return a == 0 if self.h == 1 else not any(a)

    def _inv(self, a, k):
        p = self.p
        if self.h == 1:
            return pow(a, -1, p**k)
        # inverse mod p in F_q, then Newton: x <- x(2 - a x)
        res = _fp_mod(list(a), list(self.modulus), p)
        inv_res = self._fp_inverse(res)
        x = tuple(inv_res + [0] * (self.h - len(inv_res)))
        prec = 1
        two = self._from_int(2)
        while prec < k:
            prec = min(2 * prec, k)
            ax = self._mul(a, x, prec)
            x = self._mul(x, self._add(two, self._scale(ax, -1, prec), prec), prec)
        return self._reduce(x, k)

    def _fp_inverse(self, a):
        # extended Euclid over F_p
        p, g = self.p, list(self.modulus)
        r0, r1 = g, _fp_trim(list(a))
        s0, s1 = [], [1]
        while r1:
            qt, rem = self._fp_divmod(r0, r1)
            r0, r1 = r1, rem
            s0, s1 = s1, _fp_sub(s0, _fp_mulmod_plain(qt, s1, p), p)
        c = pow(r0[0], -1, p)
        s0 = [x * c % p for x in s0]
        return _fp_mod(s0, g, p)

    def _fp_divmod(self, a, b):
        p = self.p
        a = [c % p for c in a]
        _fp_trim(a)
        qt = [0] * max(len(a) - len(b) + 1, 1)
        inv = pow(b[-1], -1, p)
        while len(a) >= len(b) and a:
            c = a[-1] * inv % p
            s = len(a) - len(b)
            qt[s] = c
            for i, bc in enumerate(b):
                a[s + i] = (a[s + i] - c * bc) % p
            _fp_trim(a)
        return _fp_trim(qt), a

    # -- constructors ----------------------------------------------------
    def exact_zero(self) -> "PadicScalar":
        return PadicScalar(self, INF, self._from_int(0), 0)

    def zero_at(self, k: int) -> "PadicScalar":
        """The element O(p^k)."""
        return PadicScalar(self, k, self._from_int(0), 0)

    def one(self) -> "PadicScalar":
        return self.from_int(1)

    def from_int(self, n: int) -> "PadicScalar":
        return self.from_rational(n, 1)

    def from_rational(self, num, den: int = 1) -> "PadicScalar":
        if isinstance(num, Fraction):
            num, den = num.numerator * 1, num.denominator * den
        if den == 0:
            raise ZeroDivisionError("denominator is zero")
        if num == 0:
            return self.exact_zero()
        p = self.p
        a, b = int(vp_int(num, p)), int(vp_int(den, p))
        num //= p**a
        den //= p**b
        m = p**self.N
        u = num * pow(den, -1, m) % m
        return PadicScalar(self, a - b, self._from_int(u), self.N)

    def from_unit(self, val: int, unit, prec: int | None = None) -> "PadicScalar":
        """Build p^val * unit; the unit is normalised (extra p-factors move
        into the valuation)."""
        prec = self.N if prec is None else min(prec, self.N)
        if self.h > 1 and not isinstance(unit, tuple):
            unit = tuple(unit)
        unit = self._reduce(unit, prec)
        if self._is_zero(unit):
            return self.zero_at(val + prec)
        w = self._val(unit)
        if w:
            unit = self._shift_down(unit, w)
            prec -= w
        return PadicScalar(self, val + w, unit, prec)

    def generator(self) -> "PadicScalar":
        """The class of t in Z_p[t]/(g) (h > 1)."""
        if self.h == 1:
            raise ValueError("no generator for h = 1")
        return self.from_unit(0, (0, 1) + (0,) * (self.h - 2))

    def teichmuller(self, residue) -> "PadicScalar":
        """Teichmüller lift of a residue in F_q (int for h=1, coordinate
        sequence for h>1)."""
        if self.h == 1:
            r = residue % self.p
            if r == 0:
                return self.exact_zero()
            u = self._from_int(r)
        else:
            coords = [c % self.p for c in residue] + [0] * self.h
            u = tuple(coords[: self.h])
            if not any(u):
                return self.exact_zero()
        k = self.N
        x = u
        # x -> x^q is a contraction towards the Teichmüller representative
        for _ in range(k):
            x = self._pow(x, self.q, k)
        return PadicScalar(self, 0, x, k)

    def _pow(self, a, e, k):
        result = self._from_int(1)
        base = a
        while e:
            if e & 1:
                result = self._mul(result, base, k)
            base = self._mul(base, base, k)
            e >>= 1
        return result

    def random_unit(self, rng: random.Random) -> "PadicScalar":
        m = self.p**self.N
        while True:
            if self.h == 1:
                u = rng.randrange(m)
            else:
                u = tuple(rng.randrange(m) for _ in range(self.h))
            if self._val(u) == 0:
                return PadicScalar(self, 0, u, self.N)

    def random_element(self, rng: random.Random, vmin: int = -3, vmax: int = 5) -> "PadicScalar":
        u = self.random_unit(rng)
        return PadicScalar(self, rng.randint(vmin, vmax), u.unit, self.N)

    # -- residue field -----------------------------------------------------
    def residue_elements(self):
        """All elements of F_q as residue coordinates."""
        if self.h == 1:
            return list(range(self.p))
        return [tuple((c // self.p**i) % self.p for i in range(self.h)) for c in range(self.q)]

    @cached_property
    def _frob_image(self):
        """Image of t under the absolute Frobenius lift (root of g near t^p)."""
        k = self.N
        t = (0, 1) + (0,) * (self.h - 2)
        theta = self._pow(t, self.p, k)
        g = self.modulus
        for _ in range(k.bit_length() + 2):
            gv = self._poly_eval(g, theta, k)
            dg = [i * g[i] for i in range(1, len(g))]
            dv = self._poly_eval(dg, theta, k)
            theta = self._add(theta, self._scale(self._mul(gv, self._inv(dv, k), k), -1, k), k)
        return theta

    def _poly_eval(self, coeffs, x, k):
        acc = self._from_int(0)
        for c in reversed(coeffs):
            acc = self._add(self._mul(acc, x, k), self._from_int(c), k)
        return acc


def _fp_mulmod_plain(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    return _fp_trim(out)


class PadicScalar:
    """p^val * unit, unit known modulo p^prec.  Immutable."""

    __slots__ = ("ctx", "val", "unit", "prec")

    def __init__(self, ctx: PadicContext, val, unit, prec: int):
        self.ctx = ctx
        self.val = val
        self.unit = unit
        self.prec = prec

    # -- predicates ------------------------------------------------------
    @property
    def is_exact_zero(self) -> bool:
        return self.val == INF

    @property
    def is_zero_at_precision(self) -> bool:
        return self.prec == 0 and self.val != INF

    def is_zero(self) -> bool:
        """True for exact zero and for zero at precision."""
        return self.prec == 0

    @property
    def abs_prec(self):
        return self.val + self.prec if self.val != INF else INF

    def norm(self) -> Fraction:
        if self.prec == 0:
            return Fraction(0)
        return Fraction(1, self.ctx.p**self.val) if self.val >= 0 else Fraction(self.ctx.p ** (-self.val))

    def residue(self):
        """Residue of a unit (val == 0) in F_q."""
        if self.val != 0 or self.prec == 0:
            raise PadicError("residue of a non-unit")
        return self.ctx._reduce(self.unit, 1)

    def _check(self, other):
        if isinstance(other, (int, Fraction)):
            return self.ctx.from_rational(other)
        if not isinstance(other, PadicScalar):
            return NotImplemented
        if other.ctx != self.ctx:
            raise ContextMismatch("operands live in different contexts")
        return other

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        if self.val == INF:
            return other
        if other.val == INF:
            return self
        ctx = self.ctx
        A = min(self.val + self.prec, other.val + other.prec)
        v = min(self.val, other.val)
        k = A - v
        if k <= 0:
            return ctx.zero_at(A)
        p = ctx.p
        a = ctx._scale(self.unit, p ** (self.val - v), k) if self.prec else ctx._from_int(0)
        b = ctx._scale(other.unit, p ** (other.val - v), k) if other.prec else ctx._from_int(0)
        s = ctx._add(a, b, k)
        if ctx._is_zero(s):
            return ctx.zero_at(A)
        w = ctx._val(s)
        if w:
            s = ctx._shift_down(s, w)
        return PadicScalar(ctx, v + w, s, min(k - w, ctx.N))

    __radd__ = __add__

    def __neg__(self):
        if self.prec == 0:
            return self
        return PadicScalar(self.ctx, self.val, self.ctx._scale(self.unit, -1, self.prec), self.prec)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        if self.val == INF or other.val == INF:
            return self.ctx.exact_zero()
        if self.prec == 0 or other.prec == 0:
            return self.ctx.zero_at(min(self.abs_prec + other.val, other.abs_prec + self.val))
        k = min(self.prec, other.prec)
        return PadicScalar(self.ctx, self.val + other.val, self.ctx._mul(self.unit, other.unit, k), k)

    __rmul__ = __mul__

    def inverse(self):
        if self.val == INF:
            raise ZeroDivisionError("inverse of exact zero")
        if self.prec == 0:
            raise PadicError("inverse of a zero at precision")
        return PadicScalar(self.ctx, -self.val, self.ctx._inv(self.unit, self.prec), self.prec)

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.ctx.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def mul_p_power(self, k: int):
        """Multiply by p^k exactly."""
        if self.val == INF:
            return self
        return PadicScalar(self.ctx, self.val + k, self.unit, self.prec)

    def lift_precision(self, prec: int):
        """Reinterpret the unit as exact to the given relative precision
        (used for values known to be exact, e.g. integers)."""
        if self.prec == 0:
            return self
        return PadicScalar(self.ctx, self.val, self.unit, min(prec, self.ctx.N))

    # -- comparisons -----------------------------------------------------
    def __eq__(self, other):
        other = self._check(other) if not isinstance(other, PadicScalar) else other
        if other is NotImplemented:
            return NotImplemented
        if other.ctx != self.ctx:
            return False
        if self.val == INF and other.val == INF:
            return True
        return (self - other).is_zero()

    def __hash__(self):
        # equality is up to precision, so only the context is hashable
        return hash((self.ctx.p, self.ctx.h))

    def identical(self, other) -> bool:
        """Structural equality (same valuation, precision and digits)."""
        return (self.ctx == other.ctx and self.val == other.val
                and self.prec == other.prec and self.unit == other.unit)

    # -- Frobenius -------------------------------------------------------
    def absolute_frobenius(self):
        """The lift of x -> x^p: acts on coordinates through t -> theta."""
        ctx = self.ctx
        if ctx.h == 1 or self.prec == 0:
            return self
        k = self.prec
        theta = ctx._reduce(ctx._frob_image, k)
        acc = ctx._from_int(0)
        power = ctx._from_int(1)
        for c in self.unit:
            acc = ctx._add(acc, ctx._scale(power, c, k), k)
            power = ctx._mul(power, theta, k)
        return PadicScalar(ctx, self.val, acc, k)

    def frobenius_K(self):
        """sigma_K: the lift of x -> x^q on Q_q.  With q = p^h this is the
        h-th power of the absolute Frobenius, i.e. the identity."""
        return self

    # -- conversion ------------------------------------------------------
    def to_fraction(self) -> Fraction:
        """Balanced rational representative (h = 1 only)."""
        if self.ctx.h != 1:
            raise PadicError("only Q_p elements convert to rationals")
        if self.prec == 0:
            return Fraction(0)
        m = self.ctx.p**self.prec
        u = self.unit % m
        if u > m // 2:
            u -= m
        return Fraction(u) * Fraction(self.ctx.p) ** self.val

    def digits(self) -> list:
        """Little-endian base-p digits (h = 1) or Teichmüller digits as
        residue coordinates (h > 1) of the unit part."""
        ctx = self.ctx
        if self.prec == 0:
            return []
        if ctx.h == 1:
            u, out = self.unit, []
            for _ in range(self.prec):
                out.append(u % ctx.p)
                u //= ctx.p
            return out
        out = []
        u = self.unit
        k = self.prec
        for i in range(k):
            r = ctx._reduce(u, 1)
            out.append(list(r))
            if ctx._is_zero(r):
                tl = ctx._from_int(0)
            else:
                tl = ctx.teichmuller(r).unit
            rem = k - i
            diff = ctx._add(u, ctx._scale(ctx._reduce(tl, rem), -1, rem), rem)
            u = ctx._shift_down(diff, 1)
        return out

    def to_json(self):
        if self.val == INF:
            return {"val": "inf", "digits": []}
        return {"val": int(self.val), "digits": self.digits()}

    @classmethod
    def from_json(cls, ctx: PadicContext, obj) -> "PadicScalar":
        if isinstance(obj, (int, str)) and not isinstance(obj, bool):
            r = Fraction(obj)  # plain rational shorthand, e.g. 3 or "-1/4"
            return ctx.from_rational(r.numerator, r.denominator)
        if not isinstance(obj, dict) or "val" not in obj or "digits" not in obj:
            raise ValueError("scalar must be an object with 'val' and 'digits'")
        if obj["val"] == "inf":
            return ctx.exact_zero()
        val, digs = int(obj["val"]), obj["digits"]
        if not digs:
            return ctx.zero_at(val)
        p = ctx.p
        if ctx.h == 1:
            u = sum(int(d) * p**i for i, d in enumerate(digs))
            return ctx.from_unit(val, u, len(digs))
        k = len(digs)
        acc = ctx._from_int(0)
        for i, d in enumerate(digs):
            if any(int(c) % p for c in d):
                t = ctx._reduce(ctx.teichmuller(d).unit, k)
                acc = ctx._add(acc, ctx._scale(t, p**i, k), k)
        return ctx.from_unit(val, acc, k)

    def __repr__(self):
        if self.val == INF:
            return "0"
        if self.prec == 0:
            return f"O({self.ctx.p}^{self.val})"
        if self.ctx.h == 1:
            return f"{self.ctx.p}^{self.val}*{self.unit} + O({self.ctx.p}^{self.val + self.prec})"
        return f"{self.ctx.p}^{self.val}*{self.unit} + O({self.ctx.p}^{self.val + self.prec})"


def norm_exponent(a: PadicScalar):
    """-log_p |a|; INF for zeros."""
    return INF if a.prec == 0 else a.val
