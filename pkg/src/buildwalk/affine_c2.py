"""Isotropic vertex walks on C~2 buildings with parameters q0 = q2 = q, q1 = r.

Two independent routes to p^(n):

* the recursion route multiplies by the generators A_{1,0} and A_{0,1} of
  the (commutative) algebra of vertex averaging operators, row by row;
* the spectral route integrates powers of the Gelfand transform against
  the Plancherel measure on the torus.

Coordinates (k, l) are coweight coordinates k w1 + l w2. All A_{k,l} are
averaging operators (rows sum to 1), so a walk A = sum a_{k,l} A_{k,l}
gives p^(n)(x, y) = a^(n)_{k,l} / N_{k,l} for y in V_{k,l}(x).
"""

from __future__ import annotations

import cmath
import math
import os
from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInput, SingularPoint, UnsupportedBoundary


@dataclass(frozen=True)
class C2Params:
    q: object
    r: object

    def __post_init__(self):
        for x in (self.q, self.r):
            if isinstance(x, bool) or not x > 1:
                raise InvalidInput(f"thickness parameters must exceed 1, got {x}")

    @property
    def integral(self) -> bool:
        return all(isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1)
                   for x in (self.q, self.r))

    def floats(self) -> tuple[float, float]:
        return float(self.q), float(self.r)


# --------------------------------------------------------------------------
# a two-variable integer polynomial, just enough to audit the row table

class Poly:
    __slots__ = ("c",)

    def __init__(self, c=None):
        if c is None:
            c = {}
        elif isinstance(c, int):
            c = {(0, 0): c}
        self.c = {k: v for k, v in c.items() if v}

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({(1, 0): 1} if name == "q" else {(0, 1): 1})

    @staticmethod
    def _lift(x):
        return x if isinstance(x, Poly) else Poly(int(x))

    def __add__(self, other):
        other = Poly._lift(other)
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0) + v
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({k: -v for k, v in self.c.items()})

    def __sub__(self, other):
        return self + (-Poly._lift(other))

    def __rsub__(self, other):
        return Poly._lift(other) + (-self)

    def __mul__(self, other):
        other = Poly._lift(other)
        out: dict = {}
        for (a, b), u in self.c.items():
            for (c, d), v in other.c.items():
                out[(a + c, b + d)] = out.get((a + c, b + d), 0) + u * v
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return self.c == Poly._lift(other).c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def __repr__(self):
        if not self.c:
            return "0"
        return " + ".join(f"{v}*q^{a}*r^{b}" for (a, b), v in sorted(self.c.items()))


# --------------------------------------------------------------------------
# sphere sizes

def vertex_count(p: C2Params, k: int, l: int):
    return _count(p.q, p.r, k, l)


def _count(q, r, k: int, l: int):
    if k < 0 or l < 0:
        raise InvalidInput("coordinates must be nonnegative")
    if k == 0 and l == 0:
        return 1 if not isinstance(q, Poly) else Poly(1)
    if l == 0:
        return (r + 1) * (q * r + 1) * q * (q * q * r * r) ** (k - 1)
    if k == 0:
        return (q + 1) * (q * r + 1) * (q * q * r) ** (l - 1)
    return (q + 1) * (r + 1) * (q * r + 1) * q * q * r * (q * q * r * r) ** (k - 1) * (q * q * r) ** (l - 1)


def N10(q, r):
    return _count(q, r, 1, 0)


def N01(q, r):
    return _count(q, r, 0, 1)


# --------------------------------------------------------------------------
# recursion rows: N_gen * A_{m,n} * A_gen = sum coef * A_{m+dk, n+dl}

@dataclass(frozen=True)
class Row:
    gen: str                      # "A10" or "A01"
    k_range: tuple                # (lo, hi), hi None for unbounded
    l_range: tuple
    terms: tuple                  # ((coef(q, r), dk, dl), ...)
    origin: str = "displayed"     # or "reconstructed"
    note: str = ""

    def covers(self, k: int, l: int) -> bool:
        (k0, k1), (l0, l1) = self.k_range, self.l_range
        return k0 <= k and (k1 is None or k <= k1) and l0 <= l and (l1 is None or l <= l1)

    def coefficients(self, q, r) -> list:
        return [(f(q, r), dk, dl) for f, dk, dl in self.terms]


ROWS: tuple[Row, ...] = (
    # multiplication by A_{1,0}
    Row("A10", (1, None), (2, None), (
        (lambda q, r: r, 1, -2),
        (lambda q, r: (q - 1) * (r + 1), 0, 0),
        (lambda q, r: q * q * r * r, 1, 0),
        (lambda q, r: q * q * r, -1, 2),
        (lambda q, r: 1, -1, 0))),
    Row("A10", (0, 0), (2, None), (
        (lambda q, r: r + 1, 1, -2),
        (lambda q, r: (q - 1) * (r + 1), 0, 0),
        (lambda q, r: q * q * r * (r + 1), 1, 0))),
    Row("A10", (1, None), (0, 0), (
        (lambda q, r: q * r * (q + 1), -1, 2),
        (lambda q, r: q * q * r * r, 1, 0),
        (lambda q, r: q - 1, 0, 0),
        (lambda q, r: 1, -1, 0))),
    Row("A10", (1, None), (1, 1), (
        (lambda q, r: q * q * r * r, 1, 0),
        (lambda q, r: q * q * r, -1, 2),
        (lambda q, r: 1, -1, 0),
        (lambda q, r: q * r + q - 1, 0, 0))),
    Row("A10", (0, 0), (1, 1), (
        (lambda q, r: q * (r + 1), 0, 0),
        (lambda q, r: q * q * r * (r + 1), 1, 0)),
        "reconstructed", "A01 A10 = A10 A01 with the A01 row at (1, 0)"),
    Row("A10", (0, 0), (0, 0), (
        (lambda q, r: N10(q, r), 1, 0),),
        "reconstructed", "A00 is the identity"),
    # multiplication by A_{0,1}
    Row("A01", (1, None), (1, None), (
        (lambda q, r: 1, 0, -1),
        (lambda q, r: q * r, 1, -1),
        (lambda q, r: q, -1, 1),
        (lambda q, r: q * q * r, 0, 1))),
    Row("A01", (0, 0), (1, None), (
        (lambda q, r: 1, 0, -1),
        (lambda q, r: q * q * r, 0, 1),
        (lambda q, r: q * (r + 1), 1, -1))),
    Row("A01", (1, None), (0, 0), (
        (lambda q, r: q + 1, -1, 1),
        (lambda q, r: q * r * (q + 1), 0, 1))),
    Row("A01", (0, 0), (0, 0), (
        (lambda q, r: N01(q, r), 0, 1),),
        "reconstructed", "A00 is the identity"),
)

GEN_NORM = {"A10": N10, "A01": N01}


def find_row(gen: str, k: int, l: int) -> Row:
    hits = [row for row in ROWS if row.gen == gen and row.covers(k, l)]
    if len(hits) != 1:
        raise UnsupportedBoundary(f"no unique {gen} row for ({k}, {l})")
    return hits[0]


def audit_rows() -> list[dict]:
    """Symbolic checks of every row: coefficient sum equals N_gen, and the
    commutativity derivation of the reconstructed (0, 1) row."""
    Q, R = Poly.var("q"), Poly.var("r")
    out = []
    for row in ROWS:
        total = Poly(0)
        for f, _, _ in row.terms:
            total = total + f(Q, R)
        out.append({"gen": row.gen, "k": row.k_range, "l": row.l_range, "origin": row.origin,
                    "sum_equals_N": total == GEN_NORM[row.gen](Q, R)})
    # N01 * (A01 A10 at (0,1)) must equal N10 * (A10 A01 at (1,0)), target by target
    src = {(dk + 1, dl): f(Q, R) for f, dk, dl in find_row("A01", 1, 0).terms}
    dst = {(dk, dl + 1): f(Q, R) for f, dk, dl in find_row("A10", 0, 1).terms}
    ok = set(src) == set(dst) and all(N01(Q, R) * dst[t] == N10(Q, R) * src[t] for t in src)
    out.append({"gen": "A10", "k": (0, 0), "l": (1, 1), "origin": "commutativity",
                "sum_equals_N": ok})
    return out


def _check_partition() -> None:
    for gen in GEN_NORM:
        for k in range(4):
            for l in range(5):
                find_row(gen, k, l)


_AUDIT = audit_rows()
if not all(a["sum_equals_N"] for a in _AUDIT):
    raise RuntimeError("recursion row table failed its constant-preservation audit")
_check_partition()


# --------------------------------------------------------------------------
# lattice distributions

class LatticeDistribution:
    """Finitely supported map (k, l) -> coefficient of A_{k,l}."""

    __slots__ = ("b",)

    def __init__(self, b: Mapping[tuple[int, int], object] | None = None):
        b = dict(b or {})
        for (k, l) in b:
            if k < 0 or l < 0:
                raise InvalidInput(f"negative lattice coordinate {(k, l)}")
        self.b = {key: v for key, v in b.items() if v != 0}

    def __getitem__(self, key):
        return self.b.get(tuple(key), 0)

    def total(self):
        return sum(self.b.values(), 0)

    def probability(self, p: C2Params, k: int, l: int):
        """p^(n)(x, y) for one vertex y in V_{k,l}(x)."""
        v = self[(k, l)]
        n = vertex_count(p, k, l)
        return Fraction(v) / n if isinstance(v, (int, Fraction)) and isinstance(n, (int, Fraction)) else v / n

    def __eq__(self, other):
        return isinstance(other, LatticeDistribution) and self.b == other.b

    def __repr__(self):
        return f"LatticeDistribution({dict(sorted(self.b.items()))})"

    @classmethod
    def delta(cls, k: int = 0, l: int = 0):
        return cls({(k, l): Fraction(1)})

    @classmethod
    def srw(cls):
        return cls({(0, 1): Fraction(1)})


def right_mul_generator(p: C2Params, dist: LatticeDistribution, gen: str) -> LatticeDistribution:
    """dist * A_gen, using the row table."""
    if gen not in GEN_NORM:
        raise InvalidInput(f"generator must be A10 or A01, got {gen!r}")
    exact = p.integral and all(isinstance(v, (int, Fraction)) for v in dist.b.values())
    q, r = (int(p.q), int(p.r)) if exact else p.floats()
    norm = GEN_NORM[gen](q, r)
    out: dict = {}
    for (k, l), v in dist.b.items():
        for c, dk, dl in find_row(gen, k, l).coefficients(q, r):
            key = (k + dk, l + dl)
            w = Fraction(c, norm) * v if exact else c / norm * v
            out[key] = out.get(key, 0) + w
    return LatticeDistribution(out)


def _walk_weights(walk: LatticeDistribution):
    allowed = {(0, 0), (1, 0), (0, 1)}
    if not set(walk.b) <= allowed:
        raise InvalidInput("the exact engine supports walks supported on A00, A10, A01")
    tot = walk.total()
    if any(v < 0 for v in walk.b.values()):
        raise InvalidInput("walk weights must be nonnegative")
    if isinstance(tot, (int, Fraction)) and tot != 1 or abs(float(tot) - 1) > 1e-12:
        raise InvalidInput(f"walk weights sum to {tot}, not 1")
    return walk[(0, 0)], walk[(1, 0)], walk[(0, 1)]


class ExactEngine:
    """Integer-scaled recursion: the state is W / den with integer W."""

    def __init__(self, p: C2Params, walk: LatticeDistribution):
        if not p.integral:
            raise InvalidInput("the exact engine needs integer q and r")
        self.p = p
        self.q, self.r = int(p.q), int(p.r)
        a00, a10, a01 = (Fraction(x) for x in _walk_weights(walk))
        D = math.lcm(a00.denominator, a10.denominator, a01.denominator)
        self.alpha = (int(a00 * D), int(a10 * D), int(a01 * D))
        self.D = D
        self.n10, self.n01 = N10(self.q, self.r), N01(self.q, self.r)
        self.W = {(0, 0): 1}
        self.den = 1
        self.n = 0
        self._rows = {g: [(row, row.coefficients(self.q, self.r)) for row in ROWS if row.gen == g]
                      for g in GEN_NORM}

    def _apply(self, gen):
        rows = self._rows[gen]
        out: dict = {}
        for (k, l), v in self.W.items():
            for row, coefs in rows:
                if row.covers(k, l):
                    for c, dk, dl in coefs:
                        key = (k + dk, l + dl)
                        out[key] = out.get(key, 0) + c * v
                    break
            else:
                raise UnsupportedBoundary(f"no {gen} row for ({k}, {l})")
        return out

    def step(self) -> None:
        a00, a10, a01 = self.alpha
        scale = 1
        if a10:
            scale = math.lcm(scale, self.n10)
        if a01:
            scale = math.lcm(scale, self.n01)
        new: dict = {}
        if a00:
            f = a00 * scale
            for key, v in self.W.items():
                new[key] = new.get(key, 0) + f * v
        for a, gen, norm in ((a10, "A10", self.n10), (a01, "A01", self.n01)):
            if a:
                f = a * (scale // norm)
                for key, v in self._apply(gen).items():
                    new[key] = new.get(key, 0) + f * v
        self.W = {k: v for k, v in new.items() if v}
        self.den *= self.D * scale
        self.n += 1

    def value(self, k: int, l: int) -> Fraction:
        return Fraction(self.W.get((k, l), 0), self.den)

    def distribution(self) -> LatticeDistribution:
        return LatticeDistribution({k: Fraction(v, self.den) for k, v in self.W.items()})


class FloatEngine:
    """Dense numpy version of the recursion, for long horizons."""

    def __init__(self, p: C2Params, walk: LatticeDistribution):
        self.q, self.r = p.floats()
        a00, a10, a01 = (float(x) for x in _walk_weights(walk))
        self.alpha = (a00, a10, a01)
        self.B = np.ones((1, 1))
        self.n = 0
        self._rows = {g: [(row, [(float(c) / GEN_NORM[g](self.q, self.r), dk, dl)
                                 for c, dk, dl in row.coefficients(self.q, self.r)])
                          for row in ROWS if row.gen == g] for g in GEN_NORM}

    def _apply(self, gen: str) -> np.ndarray:
        B = self.B
        K, L = B.shape
        C = np.zeros((K + 1, L + 2))
        for row, coefs in self._rows[gen]:
            k0, k1 = row.k_range
            l0, l1 = row.l_range
            k1 = K - 1 if k1 is None else min(k1, K - 1)
            l1 = L - 1 if l1 is None else min(l1, L - 1)
            if k0 > k1 or l0 > l1:
                continue
            blk = B[k0:k1 + 1, l0:l1 + 1]
            for c, dk, dl in coefs:
                C[k0 + dk:k1 + 1 + dk, l0 + dl:l1 + 1 + dl] += c * blk
        return C

    def step(self) -> None:
        a00, a10, a01 = self.alpha
        K, L = self.B.shape
        new = np.zeros((K + 1, L + 2))
        if a00:
            new[:K, :L] += a00 * self.B
        if a10:
            new += a10 * self._apply("A10")
        if a01:
            new += a01 * self._apply("A01")
        # trim all-zero trailing rows and columns
        rows = np.flatnonzero(new.any(axis=1))
        cols = np.flatnonzero(new.any(axis=0))
        self.B = new[:rows[-1] + 1, :cols[-1] + 1]
        self.n += 1

    def value(self, k: int, l: int) -> float:
        K, L = self.B.shape
        return float(self.B[k, l]) if k < K and l < L else 0.0

    def distribution(self) -> LatticeDistribution:
        ks, ls = np.nonzero(self.B)
        return LatticeDistribution({(int(k), int(l)): float(self.B[k, l]) for k, l in zip(ks, ls)})


def exact_n_step(p: C2Params, walk: LatticeDistribution, n: int, mode: str = "exact") -> LatticeDistribution:
    """Coefficients a^(n)_{k,l} of A^n for a generator-supported walk."""
    if n < 0:
        raise InvalidInput("n must be nonnegative")
    eng = ExactEngine(p, walk) if mode in ("exact", "rational") else FloatEngine(p, walk)
    for _ in range(n):
        eng.step()
    return eng.distribution()


def return_series(p: C2Params, walk: LatticeDistribution, nmax: int, mode: str = "exact",
                  target: tuple[int, int] = (0, 0)) -> list:
    """a^(n)_target for n = 0..nmax."""
    eng = ExactEngine(p, walk) if mode in ("exact", "rational") else FloatEngine(p, walk)
    out = [eng.value(*target)]
    for _ in range(nmax):
        eng.step()
        out.append(eng.value(*target))
    return out


# --------------------------------------------------------------------------
# spectral side

def c_func(p: C2Params, z1: complex, z2: complex) -> complex:
    q, r = p.floats()
    z1, z2 = complex(z1), complex(z2)
    if z1 == 0 or z2 == 0:
        raise SingularPoint("c needs nonzero arguments")
    # each denominator factor is 1 - a; singular when it cancels to rounding level
    for a in (1 / (z1 * z2), z2 / z1, 1 / (z1 * z1), 1 / (z2 * z2)):
        if abs(1 - a) <= 1e-13 * (1 + abs(a)):
            raise SingularPoint(f"c is singular at ({z1}, {z2})")
    num, den = _c_parts(q, r, z1, z2)
    return num / den


def _c_parts(q, r, z1, z2):
    iz1, iz2 = 1 / z1, 1 / z2
    num = (1 - iz1 * iz2 / q) * (1 - iz1 * z2 / q) * (1 - iz1 * iz1 / r) * (1 - iz2 * iz2 / r)
    den = (1 - iz1 * iz2) * (1 - iz1 * z2) * (1 - iz1 * iz1) * (1 - iz2 * iz2)
    return num, den


def signed_permutations(z1, z2):
    """The eight images of (z1, z2) under the hyperoctahedral group C2."""
    out = []
    for a, b in ((z1, z2), (z2, z1)):
        for ea in (1, -1):
            for eb in (1, -1):
                out.append((a ** ea, b ** eb))
    return out


def _prefactor(q: float, r: float, k: int, l: int) -> float:
    return (q * r) ** (-k) * (q * math.sqrt(r)) ** (-l) / ((1 + 1 / q) * (1 + 1 / r) * (1 + 1 / (q * r)))


def spherical_function(p: C2Params, k: int, l: int, t) -> complex:
    """Gelfand transform of A_{k,l} at the character (z1, z2).

    Uses the monomial z_{s(1)}^{k+l} z_{s(2)}^{k}; see ``spherical_coefficients``
    for the numerically stable route used by quadrature.
    """
    z1, z2 = (t.z if isinstance(t, TorusPoint) else t)
    q, r = p.floats()
    tot = 0j
    for a, b in signed_permutations(complex(z1), complex(z2)):
        tot += c_func(p, a, b) * a ** (k + l) * b ** k
    return _prefactor(q, r, k, l) * tot


def uv_from_z(p: C2Params, z1, z2) -> tuple[complex, complex]:
    q, r = p.floats()
    z1, z2 = complex(z1), complex(z2)
    u = q * r / N10(q, r) * ((1 - 1 / q) * (1 + 1 / r) + (z1 + 1 / z1) * (z2 + 1 / z2))
    v = q * math.sqrt(r) / N01(q, r) * (z1 + 1 / z1 + z2 + 1 / z2)
    return u, v


_RADII = (1.2, 1.5)
_coef_cache: dict = {}


def spherical_coefficients(p: C2Params, k: int, l: int) -> tuple[np.ndarray, int]:
    """Laurent coefficients of the polynomial A^_{k,l}(z1, z2).

    The C2-sum is sampled on the off-unit torus |z1| = 1.2, |z2| = 1.5 where
    c has no poles, and a 2-D FFT recovers the coefficients. Returns (C, d)
    with C[i + d, j + d] the coefficient of z1^i z2^j.
    """
    key = (p.floats(), k, l)
    if key in _coef_cache:
        return _coef_cache[key]
    q, r = p.floats()
    d = k + l
    M = 2 * d + 9
    R1, R2 = _RADII
    ang = 2 * np.pi * np.arange(M) / M
    Z1 = (R1 * np.exp(1j * ang))[:, None] * np.ones((1, M))
    Z2 = np.ones((M, 1)) * (R2 * np.exp(1j * ang))[None, :]
    F = np.zeros((M, M), dtype=complex)
    for a, b in signed_permutations(Z1, Z2):
        num, den = _c_parts(q, r, a, b)
        F += num / den * a ** (k + l) * b ** k
    F *= _prefactor(q, r, k, l)
    G = np.fft.fft2(F) / (M * M)
    C = np.zeros((2 * d + 1, 2 * d + 1))
    for i in range(-d, d + 1):
        for j in range(-d, d + 1):
            C[i + d, j + d] = (G[i % M, j % M] / (R1 ** i * R2 ** j)).real
    # aliasing guard: the slots beyond degree d must be empty
    spill = 0.0
    for i in list(range(d + 1, d + 4)) + list(range(-d - 3, -d)):
        spill = max(spill, float(np.abs(G[i % M, :]).max() / min(R1 ** i, 1)),
                    float(np.abs(G[:, i % M]).max() / min(R2 ** i, 1)))
    if spill > 1e-9:
        raise RuntimeError(f"spherical function ({k},{l}) is not a polynomial of degree {d}")
    _coef_cache[key] = (C, d)
    return C, d


@dataclass(frozen=True)
class TorusPoint:
    theta1: float
    theta2: float

    @property
    def z(self) -> tuple[complex, complex]:
        return cmath.exp(1j * self.theta1), cmath.exp(1j * self.theta2)


@dataclass(frozen=True)
class QuadratureGrid:
    n1: int
    n2: int
    offset: tuple = (0.5, 0.25)

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidInput("grid needs at least 2 nodes per axis")
        if not self.regular():
            raise InvalidInput(f"grid {self.n1}x{self.n2} with offset {self.offset} hits the singular set")

    @classmethod
    def make(cls, n1: int, n2: int | None = None) -> "QuadratureGrid":
        n2 = n1 if n2 is None else n2
        for off in ((0.5, 0.25), (0.25, 0.125), (0.3, 0.1), (0.37, 0.13)):
            try:
                return cls(n1, n2, off)
            except InvalidInput:
                continue
        raise InvalidInput(f"no regular offset found for grid {n1}x{n2}")

    @classmethod
    def parse(cls, text: str) -> "QuadratureGrid":
        try:
            a, b = text.lower().split("x")
            return cls.make(int(a), int(b))
        except ValueError:
            raise InvalidInput(f"grid must look like 200x200, got {text!r}") from None

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        t1 = 2 * np.pi * (np.arange(self.n1) + self.offset[0]) / self.n1
        t2 = 2 * np.pi * (np.arange(self.n2) + self.offset[1]) / self.n2
        return t1, t2

    def regular(self) -> bool:
        # work with fractions of a full turn to avoid rounding ambiguity
        f1 = [(Fraction(i) + Fraction(self.offset[0]).limit_denominator(10**6)) / self.n1 for i in range(self.n1)]
        f2 = [(Fraction(j) + Fraction(self.offset[1]).limit_denominator(10**6)) / self.n2 for j in range(self.n2)]
        half = Fraction(1, 2)
        if any(x % half == 0 for x in f1 + f2):
            return False
        s2 = {x % 1 for x in f2}
        for x in f1:
            if x % 1 in s2 or (-x) % 1 in s2:
                return False
        return True

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    def label(self) -> str:
        return f"{self.n1}x{self.n2}"


def plancherel_density(p: C2Params, t) -> float:
    """K / |c(t)|^2 at a regular torus point."""
    z1, z2 = (t.z if isinstance(t, TorusPoint) else t)
    q, r = p.floats()
    num, den = _c_parts(q, r, complex(z1), complex(z2))
    if abs(den) <= 1e-13:
        raise SingularPoint(f"torus point ({z1}, {z2}) is singular")
    return plancherel_K(p) * abs(den) ** 2 / abs(num) ** 2


def plancherel_K(p: C2Params) -> float:
    q, r = p.floats()
    return (1 + 1 / q) * (1 + 1 / r) * (1 + 1 / (q * r)) / 8


def _grid_density(p: C2Params, grid: QuadratureGrid) -> np.ndarray:
    q, r = p.floats()
    t1, t2 = grid.angles()
    Z1 = np.exp(1j * t1)[:, None]
    Z2 = np.exp(1j * t2)[None, :]
    num, den = _c_parts(q, r, Z1, Z2)
    # weights of the periodic trapezoid rule for normalised Haar measure
    return plancherel_K(p) * np.abs(den) ** 2 / np.abs(num) ** 2 / grid.size


def _grid_values(p: C2Params, grid: QuadratureGrid, k: int, l: int) -> np.ndarray:
    C, d = spherical_coefficients(p, k, l)
    t1, t2 = grid.angles()
    idx = np.arange(-d, d + 1)
    E1 = np.exp(1j * np.outer(t1, idx))
    E2 = np.exp(1j * np.outer(idx, t2))
    return (E1 @ C @ E2).real


def _chunked_sum(arr: np.ndarray, workers: int = 1, chunk: int = 64) -> float:
    """Row-chunked sum with a fixed reduction order, independent of workers."""
    starts = range(0, arr.shape[0], chunk)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda s: float(arr[s:s + chunk].sum()), starts))
    else:
        parts = [float(arr[s:s + chunk].sum()) for s in starts]
    return math.fsum(parts)


def orthogonality_check(p: C2Params, grid: QuadratureGrid, kmax: int) -> float:
    """max over (k,l), (m,n) with all indices <= kmax of
    |N_{k,l} * integral(A^_{k,l} A^_{m,n} dmu) - delta|."""
    w = _grid_density(p, grid)
    idx = [(k, l) for k in range(kmax + 1) for l in range(kmax + 1)]
    vals = {kl: _grid_values(p, grid, *kl) for kl in idx}
    worst = 0.0
    for a, kl in enumerate(idx):
        nkl = float(vertex_count(p, *kl))
        for mn in idx[a:]:
            integral = _chunked_sum(vals[kl] * vals[mn] * w)
            target = 1.0 if kl == mn else 0.0
            worst = max(worst, abs(nkl * integral - target))
    return worst


def walk_transform(p: C2Params, grid: QuadratureGrid, walk: LatticeDistribution) -> np.ndarray:
    out = np.zeros((grid.n1, grid.n2))
    for (k, l), a in walk.b.items():
        out += float(a) * _grid_values(p, grid, k, l)
    return out


@dataclass
class SpectralResult:
    value: float
    error: float
    grid: str
    coarse_value: float | None = None
    meta: dict = field(default_factory=dict)


def pn_spectral(p: C2Params, walk: LatticeDistribution, n: int, target: tuple[int, int],
                grid: QuadratureGrid | None = None, workers: int | None = None) -> SpectralResult:
    """p^(n)(x, y) for y in V_target(x) as the integral of A^(t)^n A^_target(t) dmu(t)."""
    if n < 0:
        raise InvalidInput("n must be nonnegative")
    grid = grid or QuadratureGrid.make(200)
    if workers is None:
        workers = int(os.environ.get("BUILDWALK_THREADS", "1"))

    def integrate(g):
        f = walk_transform(p, g, walk) ** n * _grid_values(p, g, *target) * _grid_density(p, g)
        return _chunked_sum(f, workers), float(np.abs(f).sum())

    val, absmass = integrate(grid)
    coarse = None
    err = 64 * np.finfo(float).eps * absmass
    if grid.n1 >= 8 and grid.n2 >= 8:
        try:
            cg = QuadratureGrid.make(grid.n1 // 2, grid.n2 // 2)
            coarse, _ = integrate(cg)
            err += abs(val - coarse)
        except InvalidInput:
            pass
    return SpectralResult(val, float(err), grid.label(), coarse)


def spectral_series(p: C2Params, walk: LatticeDistribution, nmax: int, targets,
                    grid: QuadratureGrid) -> dict:
    """{(n, target): value} for all n <= nmax, sharing the grid evaluations."""
    dens = _grid_density(p, grid)
    A = walk_transform(p, grid, walk)
    tv = {t: _grid_values(p, grid, *t) * dens for t in targets}
    out = {}
    power = np.ones_like(A)
    for n in range(nmax + 1):
        for t in targets:
            out[(n, t)] = _chunked_sum(power * tv[t])
        power = power * A
    return out


# --------------------------------------------------------------------------
# local limit for the simple random walk A_{0,1}

def srw_rho(p: C2Params) -> float:
    q, r = p.floats()
    return 4 * q * math.sqrt(r) / ((q + 1) * (q * r + 1))


def llt_constant(p: C2Params, form: str = "corrected") -> float:
    q, r = p.floats()
    base = (q + 1) * (r + 1) * (q * r + 1) * q * q * r * r / (math.pi * (q - 1) ** 4 * (r - 1) ** 4)
    if form == "corrected":
        return 24 * base
    if form == "displayed":
        return 6 * base
    raise InvalidInput(f"unknown asymptote form {form!r}")


def srw_llt_asymptote(p: C2Params, n: int, form: str = "corrected") -> tuple[float, float]:
    """(rho, leading term of p^(2n)(x, x)).

    The corrected leading term is 24 (q+1)(r+1)(qr+1) q^2 r^2 / (pi (q-1)^4 (r-1)^4)
    * rho^(2n) * n^-5. ``form="displayed"`` gives the 6 ... n^-4 variant for
    comparison.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    rho = srw_rho(p)
    power = 5 if form == "corrected" else 4
    return rho, llt_constant(p, form) * rho ** (2 * n) * float(n) ** (-power)


def _log_value(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def scaled_return_spectral(p: C2Params, n: int, grid: QuadratureGrid | None = None) -> float:
    """p^(2n)(x, x) / rho^(2n) for the simple random walk, by quadrature.

    Integrating (A^_{0,1} / rho)^(2n) keeps every term of order one, so this
    stays finite long after rho^(2n) underflows.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if grid is None:
        # the integrand concentrates in a window of width ~ n^-1/2 around t = (+-1, +-1)
        side = max(200, 20 * math.isqrt(4 * n) + 20)
        grid = QuadratureGrid.make(side)
    A = walk_transform(p, grid, LatticeDistribution.srw()) / srw_rho(p)
    return _chunked_sum(A ** (2 * n) * _grid_density(p, grid))


def llt_ratio_table(p: C2Params, ns, form: str = "corrected", mode: str = "float") -> list[dict]:
    """p^(2n)(x, x) against the asymptote at each n in ns.

    ``mode`` picks the route to p^(2n): "exact" (rational recursion),
    "float" (numpy recursion) or "spectral" (scaled quadrature, usable for
    large n). Ratios are formed in log space.
    """
    ns = sorted(ns)
    rho = srw_rho(p)
    power = 5 if form == "corrected" else 4
    logc = math.log(llt_constant(p, form))
    out = []
    if mode == "spectral":
        for n in ns:
            scaled = scaled_return_spectral(p, n)
            log_ratio = math.log(scaled) - logc + power * math.log(n)
            log_p = math.log(scaled) + 2 * n * math.log(rho)
            out.append({"n": n, "p2n": math.exp(log_p), "log10_p2n": log_p / math.log(10),
                        "asymptote": math.exp(log_p - log_ratio), "ratio": math.exp(log_ratio)})
        return out
    series = return_series(p, LatticeDistribution.srw(), 2 * ns[-1], mode=mode)
    for n in ns:
        exact = series[2 * n]
        if exact <= 0:
            raise InvalidInput(f"p^(2n) underflows at n = {n} in {mode} mode; use mode='spectral'")
        log_asym = logc + 2 * n * math.log(rho) - power * math.log(n)
        log_ratio = _log_value(exact) - log_asym
        out.append({"n": n, "p2n": float(exact), "log10_p2n": _log_value(exact) / math.log(10),
                    "asymptote": math.exp(log_asym), "ratio": math.exp(log_ratio)})
    return out
