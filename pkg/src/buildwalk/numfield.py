"""Exact arithmetic in multi-quadratic fields Q(sqrt(d1), sqrt(d2), ...).

An element is a finite sum of rational multiples of square roots of
squarefree positive integers. This is enough to hold every cosine
cos(2 pi j / m) needed for m in {2, 3, 4, 5, 6, 8, 10, 12} together with
sqrt(q r), so rationality questions about character inner products can be
settled exactly instead of by tolerance.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


@lru_cache(maxsize=4096)
def _squarefree_split(n: int) -> tuple[int, int]:
    """Write n = k^2 * d with d squarefree; return (k, d)."""
    k, d = 1, 1
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        k *= p ** (e // 2)
        if e % 2:
            d *= p
        p += 1
    return k, d * n


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


class Surd:
    """Immutable element of a multi-quadratic number field."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, dict):
            terms = {1: Fraction(terms)}
        self.terms = {d: Fraction(c) for d, c in terms.items() if c != 0}

    @classmethod
    def sqrt(cls, n) -> "Surd":
        n = Fraction(n)
        if n < 0:
            raise ValueError("square root of a negative number is not real")
        if n == 0:
            return cls()
        # sqrt(a/b) = sqrt(a b) / b
        a, b = n.numerator, n.denominator
        k, d = _squarefree_split(a * b)
        return cls({d: Fraction(k, b)})

    @staticmethod
    def coerce(x) -> "Surd":
        if isinstance(x, Surd):
            return x
        if isinstance(x, (int, Fraction)):
            return Surd({1: x})
        return NotImplemented

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        t = dict(self.terms)
        for d, c in other.terms.items():
            t[d] = t.get(d, 0) + c
        return Surd(t)

    __radd__ = __add__

    def __neg__(self):
        return Surd({d: -c for d, c in self.terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        t: dict[int, Fraction] = {}
        for d1, c1 in self.terms.items():
            for d2, c2 in other.terms.items():
                g = math.gcd(d1, d2)
                d = (d1 // g) * (d2 // g)
                t[d] = t.get(d, 0) + c1 * c2 * g
        return Surd(t)

    __rmul__ = __mul__

    def conjugate(self, p: int) -> "Surd":
        """Galois conjugate flipping the sign of sqrt(p) for a prime p."""
        return Surd({d: (-c if d % p == 0 else c) for d, c in self.terms.items()})

    def inverse(self) -> "Surd":
        if not self.terms:
            raise ZeroDivisionError("inverse of zero")
        num = Surd({1: 1})
        den = self
        while True:
            primes = sorted({p for d in den.terms for p in _prime_factors(d)})
            if not primes:
                return num * Surd({1: 1 / den.terms[1]})
            conj = den.conjugate(primes[0])
            num = num * conj
            den = den * conj

    def __truediv__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = Surd({1: 1})
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparison and conversion ---------------------------------------------

    def __eq__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self.is_rational():
            return hash(self.rational())
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_rational(self) -> bool:
        return all(d == 1 for d in self.terms)

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return self.terms.get(1, Fraction(0))

    def __float__(self):
        return float(sum(float(c) * math.sqrt(d) for d, c in self.terms.items()))

    def _sign(self) -> int:
        v = float(self)
        if abs(v) > 1e-9 * max(1.0, max(abs(float(c)) for c in self.terms.values())):
            return 1 if v > 0 else -1
        if not self.terms:
            return 0
        # near zero: decide exactly via x * conj(x) products is overkill here;
        # fall back to high precision decimal evaluation
        from decimal import Decimal, getcontext
        getcontext().prec = 80
        tot = sum(Decimal(c.numerator) / Decimal(c.denominator) * Decimal(d).sqrt()
                  for d, c in self.terms.items())
        return (tot > 0) - (tot < 0)

    def __lt__(self, other):
        return (self - other)._sign() < 0

    def __le__(self, other):
        return (self - other)._sign() <= 0

    def __gt__(self, other):
        return (self - other)._sign() > 0

    def __ge__(self, other):
        return (self - other)._sign() >= 0

    def __abs__(self):
        return -self if self._sign() < 0 else self

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for d in sorted(self.terms):
            c = self.terms[d]
            parts.append(str(c) if d == 1 else f"{c}*sqrt({d})")
        return " + ".join(parts)

    __str__ = __repr__


# exact cosines ------------------------------------------------------------

_HALF = Fraction(1, 2)


def _cos_deg(deg: Fraction) -> Surd | None:
    deg = deg % 360
    if deg > 180:
        deg = 360 - deg
    if deg > 90:
        c = _cos_deg(180 - deg)
        return None if c is None else -c
    table = {
        Fraction(0): Surd(1),
        Fraction(15): (Surd.sqrt(6) + Surd.sqrt(2)) / 4,
        Fraction(30): Surd.sqrt(3) / 2,
        Fraction(36): (Surd.sqrt(5) + 1) / 4,
        Fraction(45): Surd.sqrt(2) / 2,
        Fraction(60): Surd(_HALF),
        Fraction(72): (Surd.sqrt(5) - 1) / 4,
        Fraction(75): (Surd.sqrt(6) - Surd.sqrt(2)) / 4,
        Fraction(90): Surd(0),
    }
    return table.get(deg)


def exact_cos_2pi(j: int, m: int) -> Surd | None:
    """cos(2 pi j / m) as a Surd, or None if it is not in the shipped table."""
    return _cos_deg(Fraction(360 * j, m))


def rational_reconstruct(x: float, max_den: int, tol: float = 1e-9) -> Fraction | None:
    """Best rational with denominator <= max_den, if within tol of x."""
    f = Fraction(x).limit_denominator(max(1, int(max_den)))
    if abs(float(f) - x) <= tol * max(1.0, abs(x)):
        return f
    return None
