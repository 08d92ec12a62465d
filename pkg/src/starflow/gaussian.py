"""Exact Gaussian rationals, i.e. elements of Q(i)."""

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

__all__ = ["GaussianRational", "as_rational", "ZERO", "ONE", "I"]


def as_rational(value):
    """Convert an int/Fraction/mpq/"num/den" string to ``mpq``."""
    if isinstance(value, str):
        return mpq(value.strip())
    if isinstance(value, (int, Rational)) or type(value).__name__ == "mpq":
        return mpq(value)
    raise TypeError(f"not an exact rational: {value!r}")


class GaussianRational:
    """Number ``re + im*i`` with exact rational parts.

    Parts are stored as ``gmpy2.mpq`` which is always kept in lowest terms
    with a positive denominator, so zero has the unique form ``0 + 0i``.
    Instances are immutable.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", as_rational(re))
        object.__setattr__(self, "im", as_rational(im))

    @classmethod
    def _raw(cls, re, im):
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    @classmethod
    def coerce(cls, value):
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            raise TypeError("floating point complex numbers are not exact")
        return cls._raw(as_rational(value), mpq(0))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self):
        return not self.im

    def __eq__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational.coerce(other)
            except TypeError:
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(Fraction(int(self.re.numerator), int(self.re.denominator)))
        return hash((self.re, self.im))

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def __add__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational._raw(a * c, mpq(0))
        return GaussianRational._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def inverse(self):
        norm = self.re * self.re + self.im * self.im
        if not norm:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussianRational._raw(self.re / norm, -self.im / norm)

    def conjugate(self):
        return GaussianRational._raw(self.re, -self.im)

    def __repr__(self):
        return f"GaussianRational({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        return self.to_text()

    def to_text(self):
        """Canonical text: ``3/4``, ``-1/2*i``, ``i``, ``(1 + 2*i)``."""
        re, im = self.re, self.im
        if not im:
            return str(re)
        if im == 1:
            imag = "i"
        elif im == -1:
            imag = "-i"
        else:
            imag = f"{im}*i"
        if not re:
            return imag
        if im < 0:
            return f"({re} - {imag[1:]})"
        return f"({re} + {imag})"


ZERO = GaussianRational(0, 0)
ONE = GaussianRational(1, 0)
I = GaussianRational(0, 1)
