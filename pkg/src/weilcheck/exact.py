"""Exact scalars: Gaussian rationals times Laurent monomials in a formal pi.

The ring also carries a formal square root of 2 (``SQRT2**2 == 2``), because
the unitary normalizations contain 1/sqrt(2).  An element is stored as a map

    (pi_exponent, sqrt2_parity) -> (real Fraction, imaginary Fraction)

with zero entries dropped, so the representation is canonical and equality
is plain dict equality.
"""
from fractions import Fraction
from numbers import Rational
import math

_ZERO = Fraction(0)


def _gmul(a, b):
    ar, ai = a
    br, bi = b
    if not ai:
        return (ar * br, ar * bi if bi else _ZERO)
    if not bi:
        return (ar * br, ai * br)
    return (ar * br - ai * bi, ar * bi + ai * br)


def _ginv(a):
    n = a[0] * a[0] + a[1] * a[1]
    if n == 0:
        raise ZeroDivisionError("inverse of zero Gaussian rational")
    return (a[0] / n, -a[1] / n)


class ExactScalar:
    __slots__ = ("_t", "_h")

    def __init__(self, terms=None):
        t = {}
        if terms:
            for key, (re, im) in terms.items():
                re, im = Fraction(re), Fraction(im)
                if re or im:
                    t[key] = (re, im)
        self._t = t
        self._h = None

    # construction -------------------------------------------------------
    @classmethod
    def coerce(cls, x):
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Rational)):
            return cls({(0, 0): (Fraction(x), _ZERO)})
        if isinstance(x, complex):
            re, im = Fraction(x.real), Fraction(x.imag)
            if re.denominator > 2**20 or im.denominator > 2**20:
                raise TypeError("refusing to coerce a non-dyadic float")
            return cls({(0, 0): (re, im)})
        raise TypeError(f"cannot coerce {type(x).__name__} to ExactScalar")

    @classmethod
    def gauss(cls, re, im=0, pi=0, sqrt2=0):
        """(re + i*im) * pi**pi * sqrt(2)**sqrt2."""
        extra = Fraction(2) ** (sqrt2 // 2)
        return cls({(pi, sqrt2 % 2): (Fraction(re) * extra, Fraction(im) * extra)})

    # ring structure ------------------------------------------------------
    def __add__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        t = dict(self._t)
        for k, v in other._t.items():
            if k in t:
                a = t[k]
                s = (a[0] + v[0], a[1] + v[1])
                if s[0] or s[1]:
                    t[k] = s
                else:
                    del t[k]
            else:
                t[k] = v
        return ExactScalar._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar._raw({k: (-a, -b) for k, (a, b) in self._t.items()})

    def __sub__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return ExactScalar.coerce(other) - self

    def __mul__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        t = {}
        for (k1, s1), a in self._t.items():
            for (k2, s2), b in other._t.items():
                c = _gmul(a, b)
                s = s1 + s2
                if s == 2:
                    c = (2 * c[0], 2 * c[1])
                    s = 0
                key = (k1 + k2, s)
                if key in t:
                    d = t[key]
                    c = (c[0] + d[0], c[1] + d[1])
                t[key] = c
        return ExactScalar._raw({k: v for k, v in t.items() if v[0] or v[1]})

    __rmul__ = __mul__

    def is_monomial(self):
        return len(self._t) == 1

    def inverse(self):
        """Inverse of a single-term element (the only units we ever need)."""
        if len(self._t) != 1:
            raise ZeroDivisionError("only single-term scalars are invertible")
        ((k, s), a), = self._t.items()
        g = _ginv(a)
        if s:
            # 1/sqrt2 = sqrt2/2
            g = (g[0] / 2, g[1] / 2)
        return ExactScalar._raw({(-k, s): g})

    def __truediv__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return ExactScalar.coerce(other) * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conj(self):
        return ExactScalar._raw({k: (a, -b) for k, (a, b) in self._t.items()})

    # comparison ----------------------------------------------------------
    def __eq__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self._t == other._t

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._t.items()))
        return self._h

    def __bool__(self):
        return bool(self._t)

    def is_zero(self):
        return not self._t

    # inspection ----------------------------------------------------------
    def terms(self):
        return dict(self._t)

    def pi_exponents(self):
        return sorted({k for k, _ in self._t})

    def sqrt2_parities(self):
        return sorted({s for _, s in self._t})

    def coefficient(self, pi=0, sqrt2=0):
        return self._t.get((pi, sqrt2), (_ZERO, _ZERO))

    def is_rational(self):
        return all(k == 0 and s == 0 and b == 0 for (k, s), (a, b) in self._t.items())

    def to_fraction(self):
        if not self._t:
            return Fraction(0)
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._t[(0, 0)][0]

    def evaluate(self, pi=math.pi):
        """Numerical value with pi substituted (complex)."""
        z = 0j
        for (k, s), (a, b) in self._t.items():
            z += complex(float(a), float(b)) * pi**k * (math.sqrt(2.0) if s else 1.0)
        return z

    def __complex__(self):
        return self.evaluate()

    def __repr__(self):
        return f"ExactScalar({self})"

    def __str__(self):
        if not self._t:
            return "0"
        parts = []
        for (k, s) in sorted(self._t):
            a, b = self._t[(k, s)]
            if b == 0:
                c = str(a)
            elif a == 0:
                c = f"{b}*i"
            else:
                c = f"({a}+{b}*i)" if b > 0 else f"({a}{b}*i)"
            if s:
                c += "*sqrt2"
            if k:
                c += f"*pi^{k}"
            parts.append(c)
        return " + ".join(parts)

    @classmethod
    def _raw(cls, t):
        obj = cls.__new__(cls)
        obj._t = t
        obj._h = None
        return obj


ZERO = ExactScalar()
ONE = ExactScalar.gauss(1)
I = ExactScalar.gauss(0, 1)
PI = ExactScalar.gauss(1, 0, pi=1)
SQRT2 = ExactScalar.gauss(1, 0, sqrt2=1)


def S(x):
    """Shorthand coercion."""
    return ExactScalar.coerce(x)
