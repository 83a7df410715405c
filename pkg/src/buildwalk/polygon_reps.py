"""Representation theory of rank-2 Hecke algebras and its walk consequences.

Every irreducible representation of H(I2(m); q, r) has dimension 1 or 2.
Given the list, the geometric representation decomposes with multiplicities
m_rho = dim(rho) / <chi_rho, chi_rho>, and n-step probabilities, total
variation bounds and Feit-Higman style rationality tests all reduce to
traces of small matrices.

Exact mode works in a multi-quadratic number field (see ``numfield``); float
mode uses Python floats and is meant for sweeps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .coxeter import CoxeterElement, dihedral_system
from .errors import InvalidInput, RejectedByFeitHigman
from .hecke import HeckeAlgebra, HeckeElement, WalkSpec, fmt_exact
from .numfield import Surd, exact_cos_2pi, rational_reconstruct

FH_ALLOWED = (2, 3, 4, 6, 8)


# --------------------------------------------------------------------------
# tiny matrix helpers, generic over Surd / Fraction / float

def _mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    return [[sum((a[i][t] * b[t][j] for t in range(1, k)), a[i][0] * b[0][j]) for j in range(m)]
            for i in range(n)]


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_scale(c, a):
    return [[c * x for x in row] for row in a]


def _mat_pow(a, n, one):
    out = [[one if i == j else one * 0 for j in range(len(a))] for i in range(len(a))]
    base = a
    while n:
        if n & 1:
            out = _mat_mul(out, base)
        base = _mat_mul(base, base)
        n >>= 1
    return out


def _trace(a):
    return sum((a[i][i] for i in range(1, len(a))), a[0][0])


def _simplify(x):
    """Collapse rational Surds to Fractions; leave everything else alone."""
    if isinstance(x, Surd) and x.is_rational():
        return x.rational()
    return x


def _is_zero(x, tol=1e-12):
    if isinstance(x, (Surd, Fraction, int)):
        return x == 0
    return abs(x) <= tol


# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Irrep:
    """Generator images of one irreducible representation."""

    label: str
    dim: int
    T1: tuple
    T2: tuple
    j: int | None = None

    def image(self, s: int):
        return [list(r) for r in (self.T1 if s == 0 else self.T2)]


def _to_scalar(x, exact):
    if exact:
        return Surd(x) if not isinstance(x, Surd) else x
    return float(x)


def _cos(j, m, exact):
    if exact:
        c = exact_cos_2pi(j, m)
        if c is None:
            raise InvalidInput(f"cos(2 pi {j}/{m}) is outside the exact table; use float mode")
        return c
    return math.cos(2 * math.pi * j / m)


def exact_supported(m: int, q, r) -> bool:
    if not all(isinstance(x, (int, Fraction)) for x in (q, r)):
        return False
    return all(exact_cos_2pi(j, m) is not None for j in range(m))


def build_irreps(m: int, q, r, mode: str = "auto", split=None, allow_any_m: bool = False) -> list[Irrep]:
    """All irreducible representations of the rank-2 Hecke algebra.

    ``split`` rescales the free factorisation c_j c_j' = const: exact mode
    uses c_j = const * split, c_j' = 1 / split (default split = 1); float mode
    uses c_j = split * sqrt(const), c_j' = sqrt(const) / split.
    """
    if int(m) != m or m < 2:
        raise InvalidInput(f"m must be an integer >= 2, got {m}")
    m = int(m)
    if not (q > 0 and r > 0):
        raise InvalidInput("q and r must be positive")
    if m % 2 == 1 and q != r:
        raise InvalidInput(f"odd m = {m} forces q = r, got q={q}, r={r}")
    if m not in FH_ALLOWED and not allow_any_m:
        raise RejectedByFeitHigman(f"no finite thick generalised {m}-gon exists")
    exact = _resolve_mode(mode, m, q, r)
    if exact:
        q, r = Fraction(q), Fraction(r)
    S = lambda x: _to_scalar(x, exact)  # noqa: E731
    one, zero = S(1), S(0)
    iq, ir = one / S(q), one / S(r)
    out = [Irrep("triv", 1, ((one,),), ((one,),))]
    out.append(Irrep("sgn", 1, ((-iq,),), ((-ir,),)))
    if m % 2 == 0:
        out.append(Irrep("rho1", 1, ((one,),), ((-ir,),)))
        out.append(Irrep("rho2", 1, ((-iq,),), ((one,),)))
        count = (m - 2) // 2
    else:
        count = (m - 1) // 2
    for j in range(1, count + 1):
        cs = _cos(j, m, exact)
        if m % 2 == 0:
            sq = Surd.sqrt(q * r) if exact else math.sqrt(q * r)
            prod = S(q) + S(r) + 2 * sq * cs
        else:
            # 4 q cos^2(pi j/m) = 2 q (1 + cos(2 pi j/m))
            prod = 2 * S(q) * (1 + cs)
        if exact:
            t = Fraction(1) if split is None else Fraction(split)
            c, c2 = prod * t, Surd(1 / t)
        else:
            t = 1.0 if split is None else float(split)
            root = math.sqrt(prod) if prod >= 0 else None
            if root is None:
                c, c2 = prod * t, 1.0 / t
            else:
                c, c2 = root * t, root / t
        T1 = ((-iq, zero), (c * iq, one))
        T2 = ((one, c2 * ir), (zero, -ir))
        out.append(Irrep(f"rho_{j}", 2, T1, T2, j))
    return out


def _resolve_mode(mode, m, q, r) -> bool:
    if mode == "float":
        return False
    ok = exact_supported(m, q, r)
    if mode in ("exact", "rational"):
        if not ok:
            raise InvalidInput("exact mode needs rational q, r and a tabulated cos(2 pi j/m)")
        return True
    if mode != "auto":
        raise InvalidInput(f"unknown mode {mode!r}")
    return ok


def relation_residual(rho: Irrep, m: int, q, r) -> float:
    """Largest entry of the quadratic and braid relation defects (0 when exact)."""
    worst = 0.0
    for s, qs in ((0, q), (1, r)):
        A = rho.image(s)
        d = len(A)
        one = A[0][0] * 0 + 1
        I = [[one if i == j else one * 0 for j in range(d)] for i in range(d)]
        left = _mat_add(A, _mat_scale(-1, I))
        right = _mat_add(A, _mat_scale(one / qs if not isinstance(one, float) else 1.0 / qs, I))
        for row in _mat_mul(left, right):
            for x in row:
                worst = max(worst, abs(float(x)))
    a = b = None
    for i in range(m):
        a = rho.image(i % 2) if a is None else _mat_mul(a, rho.image(i % 2))
        b = rho.image(1 - i % 2) if b is None else _mat_mul(b, rho.image(1 - i % 2))
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            worst = max(worst, abs(float(x - y)))
    return worst


# --------------------------------------------------------------------------

@dataclass
class CharacterTable:
    m: int
    q: object
    r: object
    irreps: list
    exact: bool
    algebra: HeckeAlgebra
    chamber_count: object
    multiplicities: dict = field(default_factory=dict)
    _images: dict = field(default_factory=dict, repr=False)

    @property
    def elements(self) -> list[CoxeterElement]:
        return self.algebra.group.elements

    def irrep(self, label: str) -> Irrep:
        for rho in self.irreps:
            if rho.label == label:
                return rho
        raise KeyError(label)

    def image(self, rho: Irrep, w: CoxeterElement):
        key = (rho.label, w)
        if key not in self._images:
            if not w.word:
                one = rho.T1[0][0] * 0 + 1
                img = [[one if i == j else one * 0 for j in range(rho.dim)] for i in range(rho.dim)]
            else:
                img = rho.image(w.word[0])
                for s in w.word[1:]:
                    img = _mat_mul(img, rho.image(s))
            self._images[key] = img
        return self._images[key]

    def represent(self, rho: Irrep, h: HeckeElement):
        acc = None
        for w, a in h.coeffs.items():
            term = _mat_scale(self._coerce(a), self.image(rho, w))
            acc = term if acc is None else _mat_add(acc, term)
        if acc is None:
            z = rho.T1[0][0] * 0
            acc = [[z] * rho.dim for _ in range(rho.dim)]
        return acc

    def _coerce(self, a):
        if self.exact:
            return a if isinstance(a, Surd) else Surd(a)
        return a if isinstance(a, complex) else float(a)

    def character(self, rho: Irrep, h: HeckeElement):
        return _simplify(_trace(self.represent(rho, h)))

    def character_values(self, rho: Irrep) -> dict:
        return {w: _trace(self.image(rho, w)) for w in self.elements}

    def inner(self, f: dict, g: dict):
        """(1/|Delta|) sum_w q_w f(T_w) g(T_{w^-1})."""
        grp = self.algebra.group
        tot = None
        for w in self.elements:
            term = self._coerce(self.algebra.q_w(w)) * f[w] * g[grp.inverse(w)]
            tot = term if tot is None else tot + term
        return _simplify(tot / self._coerce(self.chamber_count))

    def pn(self, spec: WalkSpec, n: int, w: CoxeterElement):
        """p^(n)(x, y) for delta(x, y) = w, evaluated inside each irrep."""
        T = self.algebra.from_walk(spec)
        winv = self.algebra.group.inverse(w)
        tot = None
        for rho in self.irreps:
            one = rho.T1[0][0] * 0 + 1
            M = _mat_mul(_mat_pow(self.represent(rho, T), n, one), self.image(rho, winv))
            term = self._coerce(self.multiplicities[rho.label]) * _trace(M)
            tot = term if tot is None else tot + term
        return _simplify(tot / self._coerce(self.chamber_count))

    def tv_bound_sq(self, spec: WalkSpec, n: int):
        """(1/4) sum over nontrivial rho of m_rho chi_rho(T^n (T*)^n)."""
        T = self.algebra.from_walk(spec)
        Ts = self.algebra.star(T)
        tot = self._coerce(0)
        for rho in self.irreps:
            if rho.label == "triv":
                continue
            one = rho.T1[0][0] * 0 + 1
            M = _mat_mul(_mat_pow(self.represent(rho, T), n, one),
                         _mat_pow(self.represent(rho, Ts), n, one))
            tot = tot + self._coerce(self.multiplicities[rho.label]) * _trace(M)
        return _simplify(tot / 4)

    def tv_bound(self, spec: WalkSpec, n: int) -> float:
        v = float(self.tv_bound_sq(spec, n))
        return math.sqrt(max(v, 0.0))

    def report(self) -> dict:
        return {
            "m": self.m, "q": _json_num(self.q), "r": _json_num(self.r),
            "mode": "exact" if self.exact else "float",
            "chamber_count": _json_num(self.chamber_count),
            "irreps": [{"label": rho.label, "dim": rho.dim,
                        "multiplicity": _json_num(self.multiplicities[rho.label])}
                       for rho in self.irreps],
        }


def _json_num(x):
    x = _simplify(x)
    if isinstance(x, Fraction):
        return fmt_exact(x)
    if isinstance(x, int):
        return f"{x}/1"
    if isinstance(x, Surd):
        return str(x)
    return float(x)


def character_table(m: int, q, r, mode: str = "auto", split=None, allow_any_m: bool = False) -> CharacterTable:
    irreps = build_irreps(m, q, r, mode, split, allow_any_m)
    exact = isinstance(irreps[0].T1[0][0], Surd)
    if exact:
        q, r = Fraction(q), Fraction(r)
        params = (q, r)
    else:
        params = (float(q), float(r))
    # q_s is constant on conjugacy classes; for odd m both generators are conjugate
    algebra = HeckeAlgebra(dihedral_system(m), params)
    count = algebra.poincare()
    tab = CharacterTable(m, q, r, irreps, exact, algebra, count)
    for rho in irreps:
        tab.multiplicities[rho.label] = multiplicity(tab, rho)
    return tab


def character(table: CharacterTable, rho: Irrep, h: HeckeElement):
    return table.character(rho, h)


def char_inner_product(table: CharacterTable, f: dict, g: dict):
    return table.inner(f, g)


def multiplicity(table: CharacterTable, rho: Irrep):
    chi = table.character_values(rho)
    return _simplify(table._coerce(rho.dim) / table._coerce(table.inner(chi, chi)))


def pn_characters(table: CharacterTable, spec: WalkSpec, n: int, w: CoxeterElement):
    return table.pn(spec, n, w)


def tv_upper_bound(table: CharacterTable, spec: WalkSpec, n: int) -> float:
    return table.tv_bound(spec, n)


# --------------------------------------------------------------------------
# the quadrangle simple random walk in closed form

def quadrangle_constants(q, r) -> dict:
    exact = all(isinstance(x, (int, Fraction)) for x in (q, r))
    if exact:
        q, r = Fraction(q), Fraction(r)
        disc = Surd.sqrt((q - r) ** 2 + 4 * (q + r))
        Q, R = Surd(q), Surd(r)
    else:
        q, r = float(q), float(r)
        disc = math.sqrt((q - r) ** 2 + 4 * (q + r))
        Q, R = q, r
    s = q + r
    return {
        "k": (q * q * r * r, r * r * (q * r + 1) / s, q * q * (q * r + 1) / s,
              q * r * (q + 1) * (r + 1) / s),
        "lambda": (-2 / Fraction(s) if exact else -2 / s, (q - 1) / s, (r - 1) / s),
        "lambda_pm": ((Q + R - 2 + disc) / (2 * s), (Q + R - 2 - disc) / (2 * s)),
        "chambers": (q + 1) * (r + 1) * (q * r + 1),
    }


def quadrangle_srw_closed_form(q, r, n: int):
    """(p^(n)(o,o), TV bound) for the simple random walk on a (q, r) quadrangle."""
    c = quadrangle_constants(q, r)
    k1, k2, k3, k4 = c["k"]
    l1, l2, l3 = c["lambda"]
    lp, lm = c["lambda_pm"]
    p = (1 + k1 * l1 ** n + k2 * l2 ** n + k3 * l3 ** n + k4 * (lp ** n + lm ** n)) / c["chambers"]
    b2 = (k1 * l1 ** (2 * n) + k2 * l2 ** (2 * n) + k3 * l3 ** (2 * n)
          + k4 * (lp ** (2 * n) + lm ** (2 * n))) / 4
    p = _simplify(p)
    b2 = _simplify(b2)
    return p, math.sqrt(max(float(b2), 0.0))


# --------------------------------------------------------------------------
# admissibility

def fh_closed_form(m: int, q, r, j: int, exact: bool):
    """|Delta| <chi_j, chi_j> from the closed trigonometric expression."""
    cs = _cos(j, m, exact)
    S = (lambda x: Surd(x)) if exact else float
    q_, r_ = S(q), S(r)
    if m % 2 == 1:
        return _simplify(2 * m + (q_ - 1) ** 2 * m / (q_ * (1 - cs)))
    sin2 = 1 - cs * cs
    sq = Surd.sqrt(Fraction(q) * Fraction(r)) if exact else math.sqrt(q * r)
    val = (2 * m + (r_ * (q_ - 1) ** 2 + q_ * (r_ - 1) ** 2) * m / (2 * q_ * r_ * sin2)
           + (q_ - 1) * (r_ - 1) * m * cs / (sq * sin2))
    return _simplify(val)


def feit_higman_check(m: int, q, r, mode: str = "auto") -> dict:
    """Rationality of every multiplicity, with both routes to <chi_j, chi_j>."""
    if m < 2:
        raise InvalidInput("m must be >= 2")
    tab = character_table(m, q, r, mode=mode, allow_any_m=True)
    count = tab.chamber_count
    inner, closed, rational = {}, {}, {}
    # |Delta| <chi_j, chi_j> has denominator dividing 2qr when q, r are integers,
    # which gives float mode a tight denominator bound
    bound = 2 * max(1, round(float(q))) * max(1, round(float(r)))
    for rho in tab.irreps:
        mult = tab.multiplicities[rho.label]
        if rho.dim == 2:
            chi = tab.character_values(rho)
            inner[rho.j] = _simplify(tab.inner(chi, chi) * tab._coerce(count))
            closed[rho.j] = fh_closed_form(m, tab.q, tab.r, rho.j, tab.exact)
        if tab.exact:
            rational[rho.label] = not isinstance(mult, Surd)
        elif rho.dim == 2:
            rational[rho.label] = rational_reconstruct(float(inner[rho.j]), bound) is not None
        else:
            rational[rho.label] = all(rational_reconstruct(float(x), 10**6) is not None for x in (q, r))
    rep = tab.report()
    rep.update({
        "admissible": all(rational.values()),
        "rational": rational,
        "inner_products": {j: _json_num(v) for j, v in inner.items()},
        "closed_forms": {j: _json_num(v) for j, v in closed.items()},
    })
    rep["_raw"] = {"inner": inner, "closed": closed}
    return rep


def _is_sum_two_squares(n: int) -> bool:
    a = 0
    while a * a <= n:
        b = math.isqrt(n - a * a)
        if b * b == n - a * a:
            return True
        a += 1
    return False


def _is_int(x: Fraction) -> bool:
    return Fraction(x).denominator == 1


def _is_square(n) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def parameter_constraints(m: int, q: int, r: int) -> list[tuple[str, bool]]:
    if m not in (3, 4, 6, 8):
        raise InvalidInput("parameter constraints are stated for m in {3, 4, 6, 8}")
    if int(q) != q or int(r) != r or q < 2 or r < 2:
        raise InvalidInput("q and r must be integers >= 2")
    q, r = int(q), int(r)
    if m == 3:
        brc = (q % 4 not in (1, 2)) or _is_sum_two_squares(q)
        return [("q == r", q == r), ("bruck-ryser-chowla", brc)]
    if m == 4:
        return [("q <= r^2", q <= r * r), ("r <= q^2", r <= q * q),
                ("q^2(qr+1)/(q+r) integer", _is_int(Fraction(q * q * (q * r + 1), q + r)))]
    if m == 6:
        return [("q <= r^3", q <= r ** 3), ("r <= q^3", r <= q ** 3),
                ("q^3(q^2r^2+qr+1)/(q^2+qr+r^2) integer",
                 _is_int(Fraction(q ** 3 * (q * q * r * r + q * r + 1), q * q + q * r + r * r))),
                ("sqrt(qr) integer", _is_square(q * r))]
    return [("q <= r^2", q <= r * r), ("r <= q^2", r <= q * q),
            ("q^4(qr+1)(q^2r^2+1)/((q+r)(q^2+r^2)) integer",
             _is_int(Fraction(q ** 4 * (q * r + 1) * (q * q * r * r + 1), (q + r) * (q * q + r * r)))),
            ("sqrt(2qr) integer", _is_square(2 * q * r))]


def _prime_powers(limit: int) -> list[int]:
    out = []
    for n in range(2, limit + 1):
        p = next(d for d in range(2, n + 1) if n % d == 0)
        k = n
        while k % p == 0:
            k //= p
        if k == 1:
            out.append(n)
    return out


def known_parameters(m: int, limit: int = 9) -> list[tuple[int, int]]:
    """Parameters (q <= r) of the known thick generalised m-gons, q a prime power <= limit."""
    pp = _prime_powers(limit)
    if m == 2:
        return [(q, r) for q in range(2, limit + 1) for r in range(q, limit + 1)]
    if m == 3:
        return [(q, q) for q in pp]
    if m == 4:
        out = {(q, q) for q in pp} | {(q, q * q) for q in pp} | {(q * q, q ** 3) for q in pp}
        out |= {(q - 1, q + 1) for q in pp if q - 1 >= 2}
        return sorted(out)
    if m == 6:
        return sorted({(q, q) for q in pp} | {(q, q ** 3) for q in pp})
    if m == 8:
        return [(q, q * q) for q in pp if q & (q - 1) == 0 and (q.bit_length() - 1) % 2 == 1]
    return []


def a2_chamber_spectral_radius(q) -> float:
    if not q > 1:
        raise InvalidInput("q must exceed 1")
    q = float(q)
    return (3 * (q - 1) + math.sqrt(q * q + 34 * q + 1)) / (6 * q)


def report_json(rep: dict) -> str:
    return json.dumps({k: v for k, v in rep.items() if not k.startswith("_")}, sort_keys=True)
