"""Iwahori-Hecke algebra of a finite Coxeter system with thickness parameters.

Basis elements T_w are indexed by canonical CoxeterElements. The defining
rule for right multiplication by a generator is

    T_w T_s = T_ws                              if l(ws) = l(w) + 1
    T_w T_s = q_s^-1 T_ws + (1 - q_s^-1) T_w    otherwise

and the left-hand analogue follows by applying the anti-involution
T_w -> T_{w^-1}. With integer parameters all scalars are Fractions.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

from .coxeter import (IDENTITY, CoxeterElement, CoxeterGroup, CoxeterMatrix,
                      ParameterMap, group_of, q_w)
from .errors import InvalidInput, InvalidWalk


def _conj(x):
    c = getattr(x, "conjugate", None)
    return c() if c is not None else x


def fmt_decimal(x) -> str:
    """CSV rendering: 15 significant digits, '.' decimal point."""
    if isinstance(x, complex):
        x = x.real
    return format(float(x), ".15g")


def fmt_exact(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return f"{x}/1"
    return repr(float(x))


def parse_exact(s):
    if isinstance(s, str) and "/" in s:
        return Fraction(s)
    return float(s) if isinstance(s, (str, float)) else s


class HeckeAlgebra:
    """The algebra H(W, q) for a finite Coxeter matrix and parameter map."""

    def __init__(self, matrix: CoxeterMatrix, params: ParameterMap | Iterable, cap: int | None = None):
        if not isinstance(params, ParameterMap):
            params = ParameterMap(tuple(params))
        self.matrix = matrix
        self.group: CoxeterGroup = group_of(matrix) if cap is None else CoxeterGroup(matrix, cap)
        params.validate(self.group)
        self.params = params
        self.exact = params.exact
        self.one = Fraction(1) if self.exact else 1.0
        self.zero = Fraction(0) if self.exact else 0.0
        self._inv_q = [self.one / params[s] for s in range(matrix.rank)]

    @property
    def rank(self) -> int:
        return self.matrix.rank

    def q_w(self, w: CoxeterElement):
        return q_w(self.params, w)

    def poincare(self):
        """Sum of q_w over W; the chamber count |Delta| of a matching building."""
        tot = self.zero
        for w in self.group.elements:
            tot += self.q_w(w)
        return tot

    def basis(self, w: CoxeterElement | Iterable[int]) -> "HeckeElement":
        if not isinstance(w, CoxeterElement):
            w = self.group.reduce(w)
        return HeckeElement(self, {w: self.one})

    def identity(self) -> "HeckeElement":
        return self.basis(IDENTITY)

    def element(self, coeffs: Mapping) -> "HeckeElement":
        out = {}
        for k, c in coeffs.items():
            w = k if isinstance(k, CoxeterElement) else self.group.reduce(k)
            out[w] = out.get(w, self.zero) + c
        return HeckeElement(self, out)

    # core products ------------------------------------------------------------

    def mul_generator(self, h: "HeckeElement", s: int) -> "HeckeElement":
        """h * T_s."""
        self._check(h)
        iq = self._inv_q[s]
        out: dict = {}
        for w, c in h.coeffs.items():
            ws, sign = self.group.right_multiply(w, s)
            if sign > 0:
                out[ws] = out.get(ws, 0) + c
            else:
                out[ws] = out.get(ws, 0) + c * iq
                out[w] = out.get(w, 0) + c * (1 - iq)
        return HeckeElement(self, out)

    def lmul_generator(self, s: int, h: "HeckeElement") -> "HeckeElement":
        """T_s * h."""
        self._check(h)
        iq = self._inv_q[s]
        g = self.group
        out: dict = {}
        for w, c in h.coeffs.items():
            sw = g.reduce((s,) + w.word)
            if len(sw) > len(w):
                out[sw] = out.get(sw, 0) + c
            else:
                out[sw] = out.get(sw, 0) + c * iq
                out[w] = out.get(w, 0) + c * (1 - iq)
        return HeckeElement(self, out)

    def mul(self, h1: "HeckeElement", h2: "HeckeElement") -> "HeckeElement":
        """Product h1 * h2, expanding whichever operand has the smaller support."""
        self._check(h1)
        self._check(h2)
        acc: dict = {}
        if len(h2.coeffs) <= len(h1.coeffs):
            for v, b in h2.coeffs.items():
                part = h1
                for s in v.word:
                    part = self.mul_generator(part, s)
                for w, c in part.coeffs.items():
                    acc[w] = acc.get(w, 0) + b * c
        else:
            for u, a in h1.coeffs.items():
                part = h2
                for s in reversed(u.word):
                    part = self.lmul_generator(s, part)
                for w, c in part.coeffs.items():
                    acc[w] = acc.get(w, 0) + a * c
        return HeckeElement(self, acc)

    def star(self, h: "HeckeElement") -> "HeckeElement":
        self._check(h)
        return HeckeElement(self, {self.group.inverse(w): _conj(c) for w, c in h.coeffs.items()})

    def structure_constant(self, u: CoxeterElement, v: CoxeterElement, w: CoxeterElement):
        """Coefficient of T_w in T_u T_v."""
        return self.mul(self.basis(u), self.basis(v)).coeff(w)

    def power(self, h: "HeckeElement", n: int) -> "HeckeElement":
        out = self.identity()
        for _ in range(n):
            out = self.mul(out, h)
        return out

    def _check(self, h: "HeckeElement") -> None:
        if h.algebra is not self and (h.algebra.matrix != self.matrix or h.algebra.params != self.params):
            raise InvalidInput("Hecke elements belong to different systems")

    # walks --------------------------------------------------------------------

    def from_walk(self, spec: "WalkSpec") -> "HeckeElement":
        spec.validate(self)
        return self.element(spec.a)

    def n_step(self, spec: "WalkSpec", n: int) -> "HeckeElement":
        """T^n by n successive right multiplications by T."""
        if n < 0:
            raise InvalidInput("n must be nonnegative")
        t = self.from_walk(spec)
        h = self.identity()
        for _ in range(n):
            h = self.mul(h, t)
        return h

    def n_step_series(self, spec: "WalkSpec", nmax: int):
        t = self.from_walk(spec)
        h = self.identity()
        yield 0, h
        for n in range(1, nmax + 1):
            h = self.mul(h, t)
            yield n, h

    def n_step_csv(self, spec: "WalkSpec", nmax: int) -> str:
        """Table with columns n, word, a_w, p_w for every element of W."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "word", "a_w", "p_w"])
        for n, h in self.n_step_series(spec, nmax):
            for w in self.group.elements:
                wr.writerow([n, w.label(), fmt_decimal(h.coeff(w)), fmt_decimal(h.p(w))])
        return buf.getvalue()


class HeckeElement:
    """Sparse linear combination sum a_w T_w; zero coefficients are dropped."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: HeckeAlgebra, coeffs: Mapping[CoxeterElement, object]):
        self.algebra = algebra
        self.coeffs = {w: c for w, c in coeffs.items() if c != 0}

    def coeff(self, w: CoxeterElement | Iterable[int]):
        if not isinstance(w, CoxeterElement):
            w = self.algebra.group.reduce(w)
        return self.coeffs.get(w, self.algebra.zero)

    def p(self, w: CoxeterElement | Iterable[int]):
        """Transition probability to a single chamber at Weyl distance w: a_w / q_w."""
        if not isinstance(w, CoxeterElement):
            w = self.algebra.group.reduce(w)
        return self.coeff(w) / self.algebra.q_w(w)

    def total(self):
        return sum(self.coeffs.values(), self.algebra.zero)

    def __mul__(self, other):
        if isinstance(other, HeckeElement):
            return self.algebra.mul(self, other)
        return HeckeElement(self.algebra, {w: c * other for w, c in self.coeffs.items()})

    def __rmul__(self, other):
        return HeckeElement(self.algebra, {w: other * c for w, c in self.coeffs.items()})

    def __add__(self, other: "HeckeElement"):
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0) + c
        return HeckeElement(self.algebra, out)

    def __sub__(self, other: "HeckeElement"):
        return self + (-1) * other

    def __eq__(self, other):
        return isinstance(other, HeckeElement) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = [f"({c})T[{w}]" for w, c in sorted(self.coeffs.items())]
        return " + ".join(terms)

    def to_json(self) -> str:
        a = self.algebra
        return json.dumps({
            "matrix": a.matrix.to_dict(),
            "params": [fmt_exact(x) for x in a.params.q],
            "coeffs": {w.label(): fmt_exact(c) for w, c in sorted(self.coeffs.items())},
        })

    @classmethod
    def from_json(cls, text: str) -> "HeckeElement":
        data = json.loads(text)
        matrix = CoxeterMatrix.from_json(data["matrix"])
        params = ParameterMap(tuple(parse_exact(x) for x in data["params"]))
        alg = HeckeAlgebra(matrix, params)
        coeffs = {}
        for label, c in data["coeffs"].items():
            word = () if label == "e" else tuple(int(i) - 1 for i in label.split("-"))
            coeffs[alg.group.reduce(word)] = parse_exact(c)
        return cls(alg, coeffs)


@dataclass(frozen=True)
class WalkSpec:
    """Isotropic walk: move to a uniform chamber of Delta_w(x) with probability a_w."""

    a: Mapping[CoxeterElement, object] = field(default_factory=dict)

    def validate(self, algebra: HeckeAlgebra | None = None) -> None:
        if not self.a:
            raise InvalidWalk("walk has empty support")
        tot = 0
        for w, c in self.a.items():
            if isinstance(c, complex) or c < 0:
                raise InvalidWalk(f"negative or non-real weight {c} at {w}")
            if algebra is not None and w != algebra.group.reduce(w.word):
                raise InvalidWalk(f"{w} is not a canonical element of this group")
            tot += c
        exact = all(isinstance(c, (int, Fraction)) for c in self.a.values())
        if (exact and tot != 1) or (not exact and abs(tot - 1) > 1e-12):
            raise InvalidWalk(f"weights sum to {tot}, not 1")

    @classmethod
    def srw(cls, algebra: HeckeAlgebra) -> "WalkSpec":
        """Simple random walk: uniform over all chambers adjacent to x."""
        qs = [algebra.params[s] for s in range(algebra.rank)]
        tot = sum(qs)
        return cls({CoxeterElement((s,)): qs[s] / tot for s in range(algebra.rank)})

    @classmethod
    def uniform(cls, algebra: HeckeAlgebra) -> "WalkSpec":
        els = algebra.group.elements
        w = algebra.one / len(els)
        return cls({e: w for e in els})

    @classmethod
    def point(cls, w: CoxeterElement = IDENTITY) -> "WalkSpec":
        return cls({w: Fraction(1)})
