"""Exact Gaussian rationals: a + b*i with a, b rational."""
from __future__ import annotations

from fractions import Fraction

try:  # gmpy2 is much faster; Fraction keeps us working without it
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

_ZERO = _Q(0)
_ONE = _Q(1)


def _q(v) -> "_Q":
    if isinstance(v, Fraction):
        return _Q(v.numerator, v.denominator)
    return _Q(v)


class GQ:
    """Element of Q(i). Immutable, hashable, exact."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZERO) else _q(re)
        self.im = im if type(im) is type(_ZERO) else _q(im)

    _NUMERIC = (int, Fraction, complex, type(_ZERO))

    @staticmethod
    def coerce(v) -> "GQ":
        if isinstance(v, GQ):
            return v
        if isinstance(v, complex):
            return GQ(Fraction(v.real), Fraction(v.imag))
        return GQ(v)

    def __add__(self, o):
        if not isinstance(o, GQ):
            if not isinstance(o, GQ._NUMERIC):
                return NotImplemented
            o = GQ.coerce(o)
        return GQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        if not isinstance(o, GQ):
            if not isinstance(o, GQ._NUMERIC):
                return NotImplemented
            o = GQ.coerce(o)
        return GQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GQ.coerce(o) - self

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def __mul__(self, o):
        if not isinstance(o, GQ):
            if not isinstance(o, GQ._NUMERIC):
                return NotImplemented
            o = GQ.coerce(o)
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b:
            return GQ(a * c, a * d)
        if not d:
            return GQ(a * c, b * c)
        return GQ(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inv(self) -> "GQ":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("inverse of zero in Q(i)")
        return GQ(self.re / n, -self.im / n)

    def __truediv__(self, o):
        return self * GQ.coerce(o).inv()

    def __rtruediv__(self, o):
        return GQ.coerce(o) * self.inv()

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        r, b = ONE, self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    def conj(self) -> "GQ":
        return GQ(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        if not isinstance(o, GQ):
            try:
                o = GQ.coerce(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        return f"GQ({self})"

    def __str__(self):
        return render_scalar(self)


ZERO = GQ(0)
ONE = GQ(1)
I = GQ(0, 1)


def _rq(q) -> str:
    n, d = int(q.numerator), int(q.denominator)
    return str(n) if d == 1 else f"{n}/{d}"


def render_scalar(c: GQ) -> str:
    """Canonical text `a/b+c/d*i` (zero parts omitted, `0` for zero)."""
    if not c.im:
        return _rq(c.re)
    im = _rq(c.im) + "*i"
    if not c.re:
        return im
    return _rq(c.re) + ("" if c.im < 0 else "+") + im


def parse_scalar(text: str) -> GQ:
    from .poly import parse_expr_scalar

    return parse_expr_scalar(text)


def frac(a: int, b: int = 1) -> GQ:
    """The real rational a/b."""
    return GQ(Fraction(a, b))
