"""Coxeter matrices, canonical reduced words and thickness bookkeeping.

Elements of a Coxeter group are stored as their ShortLex-least reduced word
over 0-based generator indices (``s1`` in the usual notation is index 0).
Rank <= 2 groups use closed-form dihedral normal forms; finite groups of
higher rank are enumerated once through a coset table and cached.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering

from ._cosets import regular_representation
from .errors import GroupTooLargeError, InvalidInput

INF = math.inf
DEFAULT_CAP = 10**6


def _as_order(x) -> int | float:
    if x == 0 or x == INF:
        return INF
    if isinstance(x, float) and not x.is_integer():
        raise InvalidInput(f"Coxeter matrix entries must be integers or infinity, got {x}")
    return int(x)


@dataclass(frozen=True)
class CoxeterMatrix:
    """Symmetric matrix of orders ``m[s][t]`` of products ``st``."""

    m: tuple[tuple[int | float, ...], ...]
    name: str = ""

    def __post_init__(self):
        rows = tuple(tuple(_as_order(x) for x in row) for row in self.m)
        object.__setattr__(self, "m", rows)
        n = len(rows)
        if n == 0:
            raise InvalidInput("rank must be positive")
        for s in range(n):
            if len(rows[s]) != n:
                raise InvalidInput("Coxeter matrix must be square")
            if rows[s][s] != 1:
                raise InvalidInput("diagonal entries must be 1")
            for t in range(n):
                if rows[s][t] != rows[t][s]:
                    raise InvalidInput("Coxeter matrix must be symmetric")
                if s != t and rows[s][t] < 2:
                    raise InvalidInput("off-diagonal entries must be >= 2")

    def __eq__(self, other):
        return isinstance(other, CoxeterMatrix) and self.m == other.m

    def __hash__(self):
        return hash(self.m)

    @property
    def rank(self) -> int:
        return len(self.m)

    def __getitem__(self, st: tuple[int, int]):
        s, t = st
        return self.m[s][t]

    def is_finite_hint(self) -> bool:
        return all(x != INF for row in self.m for x in row)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {"rank": self.rank,
                "m": [[0 if x == INF else int(x) for x in row] for row in self.m]}

    @classmethod
    def from_json(cls, text: str | dict) -> "CoxeterMatrix":
        data = json.loads(text) if isinstance(text, str) else text
        m = data["m"]
        if len(m) != data["rank"]:
            raise InvalidInput("rank does not match matrix size")
        return cls(tuple(tuple(row) for row in m))


@total_ordering
@dataclass(frozen=True, eq=True)
class CoxeterElement:
    """A group element, held as its canonical (ShortLex-least) reduced word."""

    word: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.word)

    @property
    def length(self) -> int:
        return len(self.word)

    def __lt__(self, other: "CoxeterElement") -> bool:
        return (len(self.word), self.word) < (len(other.word), other.word)

    def __str__(self) -> str:
        if not self.word:
            return "e"
        return "".join(f"s{i + 1}" for i in self.word)

    def label(self) -> str:
        """Compact label used in CSV output: ``e`` or e.g. ``1-2-1``."""
        return "e" if not self.word else "-".join(str(i + 1) for i in self.word)


IDENTITY = CoxeterElement(())


# --------------------------------------------------------------------------
# named constructors

def from_edges(rank: int, edges: dict[tuple[int, int], int | float], name: str = "") -> CoxeterMatrix:
    """Build a matrix from the labelled edges of a Coxeter graph (default label 2)."""
    m = [[1 if s == t else 2 for t in range(rank)] for s in range(rank)]
    for (s, t), v in edges.items():
        m[s][t] = m[t][s] = v
    return CoxeterMatrix(tuple(tuple(row) for row in m), name)


def _path(nodes: Sequence[int], label=3) -> dict:
    return {(a, b): label for a, b in zip(nodes, nodes[1:])}


def dihedral_system(m: int) -> CoxeterMatrix:
    if m == INF or m == 0:
        raise InvalidInput("infinite dihedral group is out of scope")
    if int(m) != m or m < 2:
        raise InvalidInput(f"dihedral order m must be an integer >= 2, got {m}")
    return from_edges(2, {(0, 1): int(m)}, f"I2({int(m)})")


def type_A(n: int) -> CoxeterMatrix:
    if n < 1:
        raise InvalidInput("A_n needs n >= 1")
    return from_edges(n, _path(range(n)), f"A{n}")


def type_B(n: int) -> CoxeterMatrix:
    if n < 2:
        raise InvalidInput("B_n needs n >= 2")
    edges = _path(range(n))
    edges[(n - 2, n - 1)] = 4
    return from_edges(n, edges, f"B{n}")


type_C = type_B


def type_D(n: int) -> CoxeterMatrix:
    if n < 4:
        raise InvalidInput("D_n needs n >= 4")
    edges = _path(range(n - 1))
    edges[(n - 3, n - 1)] = 3
    return from_edges(n, edges, f"D{n}")


def type_E(n: int) -> CoxeterMatrix:
    if n not in (6, 7, 8):
        raise InvalidInput("E_n needs n in {6, 7, 8}")
    # Bourbaki labelling 1-3-4-5-..., node 2 attached to node 4
    edges = _path([0, 2] + list(range(3, n)))
    edges[(1, 3)] = 3
    return from_edges(n, edges, f"E{n}")


def type_F4() -> CoxeterMatrix:
    return from_edges(4, {(0, 1): 3, (1, 2): 4, (2, 3): 3}, "F4")


def type_G2() -> CoxeterMatrix:
    return from_edges(2, {(0, 1): 6}, "G2")


def type_H(n: int) -> CoxeterMatrix:
    if n not in (3, 4):
        raise InvalidInput("H_n needs n in {3, 4}")
    edges = _path(range(n))
    edges[(0, 1)] = 5
    return from_edges(n, edges, f"H{n}")


def type_I2(m: int) -> CoxeterMatrix:
    return dihedral_system(m)


def affine_A(n: int) -> CoxeterMatrix:
    if n < 1:
        raise InvalidInput("affine A_n needs n >= 1")
    if n == 1:
        return from_edges(2, {(0, 1): INF}, "~A1")
    edges = _path(range(n + 1))
    edges[(0, n)] = 3
    return from_edges(n + 1, edges, f"~A{n}")


def affine_B(n: int) -> CoxeterMatrix:
    if n < 3:
        raise InvalidInput("affine B_n needs n >= 3")
    # nodes 0 and 1 both attached to node 2, label 4 at the far end
    edges = _path(range(1, n + 1))
    edges[(0, 2)] = 3
    edges[(n - 1, n)] = 4
    return from_edges(n + 1, edges, f"~B{n}")


def affine_C(n: int) -> CoxeterMatrix:
    if n < 2:
        raise InvalidInput("affine C_n needs n >= 2")
    edges = _path(range(n + 1))
    edges[(0, 1)] = 4
    edges[(n - 1, n)] = 4
    return from_edges(n + 1, edges, f"~C{n}")


def affine_D(n: int) -> CoxeterMatrix:
    if n < 4:
        raise InvalidInput("affine D_n needs n >= 4")
    edges = _path(range(1, n))
    edges[(0, 2)] = 3
    edges[(n - 2, n)] = 3
    return from_edges(n + 1, edges, f"~D{n}")


def affine_E(n: int) -> CoxeterMatrix:
    if n == 6:
        # centre 0 with three arms of length 2
        edges = _path([0, 1, 2]) | _path([0, 3, 4]) | _path([0, 5, 6])
    elif n == 7:
        edges = _path(range(7))
        edges[(3, 7)] = 3
    elif n == 8:
        edges = _path(range(8))
        edges[(2, 8)] = 3
    else:
        raise InvalidInput("affine E_n needs n in {6, 7, 8}")
    return from_edges(n + 1, edges, f"~E{n}")


def affine_F4() -> CoxeterMatrix:
    return from_edges(5, {(0, 1): 3, (1, 2): 3, (2, 3): 4, (3, 4): 3}, "~F4")


def affine_G2() -> CoxeterMatrix:
    return from_edges(3, {(0, 1): 3, (1, 2): 6}, "~G2")


def fuchsian_system(k: Sequence[int]) -> CoxeterMatrix:
    """Reflection group of a hyperbolic polygon with angles pi/k_i (cyclic)."""
    n = len(k)
    if n < 3:
        raise InvalidInput("a Fuchsian polygon needs at least 3 sides")
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1:
                edges[(i, j)] = k[i]
            elif i == 0 and j == n - 1:
                edges[(i, j)] = k[n - 1]
            else:
                edges[(i, j)] = INF
    return from_edges(n, edges, "F(" + ",".join(map(str, k)) + ")")


NAMED = {
    "A": type_A, "B": type_B, "C": type_C, "D": type_D, "E": type_E,
    "H": type_H, "I2": type_I2,
    "~A": affine_A, "~B": affine_B, "~C": affine_C, "~D": affine_D, "~E": affine_E,
}


def named(family: str, n: int | None = None) -> CoxeterMatrix:
    """Look up a diagram by family name, e.g. ``named("B", 3)`` or ``named("F4")``."""
    fixed = {"F4": type_F4, "G2": type_G2, "~F4": affine_F4, "~G2": affine_G2}
    if family in fixed:
        return fixed[family]()
    if family not in NAMED or n is None:
        raise InvalidInput(f"unknown Coxeter family {family!r}")
    return NAMED[family](n)


# --------------------------------------------------------------------------
# groups

class CoxeterGroup:
    """Element arithmetic for one Coxeter matrix.

    Finite groups are fully enumerated (``elements`` in ShortLex order) with
    an integer right-multiplication table. Rank <= 2 groups, including the
    infinite dihedral group, also support closed-form arithmetic without
    enumeration.
    """

    def __init__(self, matrix: CoxeterMatrix, cap: int = DEFAULT_CAP):
        self.matrix = matrix
        self.rank = matrix.rank
        self.cap = cap
        self._elements: list[CoxeterElement] | None = None

    # rank <= 2 closed forms ------------------------------------------------

    def _dihedral_rmul(self, w: tuple[int, ...], s: int) -> tuple[tuple[int, ...], int]:
        if self.rank == 1:
            return ((), -1) if w else ((0,), 1)
        m = self.matrix.m[0][1]
        k = len(w)
        if k == m or (k and w[-1] == s):
            if k == m:
                # longest element: drop s from whichever braid form ends in s
                start = s if m % 2 == 1 else 1 - s
                form = tuple(start if i % 2 == 0 else 1 - start for i in range(m))
                return form[:-1], -1
            return w[:-1], -1
        if k + 1 == m:
            # reached w0, whose ShortLex form starts with generator 0
            return tuple(i % 2 for i in range(m)), 1
        return w + (s,), 1

    # enumeration ------------------------------------------------------------

    @property
    def elements(self) -> list[CoxeterElement]:
        if self._elements is None:
            self._enumerate()
        return self._elements

    def _enumerate(self) -> None:
        if self.rank <= 2:
            if self.rank == 2 and self.matrix.m[0][1] == INF:
                raise GroupTooLargeError("infinite dihedral group cannot be enumerated")
            order = 2 if self.rank == 1 else 2 * int(self.matrix.m[0][1])
            if order > self.cap:
                raise GroupTooLargeError(f"group order {order} exceeds cap {self.cap}")
            words = [()]
            seen = {()}
            frontier = [()]
            while frontier:
                nxt = []
                for w in frontier:
                    for s in range(self.rank):
                        v, sign = self._dihedral_rmul(w, s)
                        if sign > 0 and v not in seen:
                            seen.add(v)
                            nxt.append(v)
                nxt.sort()
                words.extend(nxt)
                frontier = nxt
            self._install(words, None)
            return

        if not _positive_definite(self.matrix):
            raise GroupTooLargeError("Coxeter form is not positive definite, so W is infinite")
        relators = []
        for s in range(self.rank):
            for t in range(s + 1, self.rank):
                m = self.matrix.m[s][t]
                if m != INF:
                    relators.append((s, t) * int(m))
        table = regular_representation(self.rank, relators, 16 * self.cap)
        if len(table) > self.cap:
            raise GroupTooLargeError(f"group order {len(table)} exceeds cap {self.cap}")
        # BFS from the identity coset; first discovery yields ShortLex-least words
        words_of = {0: ()}
        order = [0]
        head = 0
        while head < len(order):
            c = order[head]
            head += 1
            for s in range(self.rank):
                d = table[c][s]
                if d not in words_of:
                    words_of[d] = words_of[c] + (s,)
                    order.append(d)
        self._install([words_of[c] for c in order], (table, order))

    def _install(self, words, coset_data) -> None:
        self._elements = [CoxeterElement(w) for w in words]
        self.index = {e: i for i, e in enumerate(self._elements)}
        n = len(words)
        rmul = [[0] * self.rank for _ in range(n)]
        if coset_data is None:
            for i, w in enumerate(words):
                for s in range(self.rank):
                    v, _ = self._dihedral_rmul(w, s)
                    rmul[i][s] = self.index[CoxeterElement(v)]
        else:
            table, order = coset_data
            pos = {c: i for i, c in enumerate(order)}
            for i, c in enumerate(order):
                for s in range(self.rank):
                    rmul[i][s] = pos[table[c][s]]
        self.rmul_table = rmul
        self.lengths = [len(w) for w in words]

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def longest(self) -> CoxeterElement:
        self.elements
        best = max(self.lengths)
        tops = [e for e in self.elements if len(e) == best]
        return tops[0]

    # arithmetic -------------------------------------------------------------

    def right_multiply(self, w: CoxeterElement, s: int) -> tuple[CoxeterElement, int]:
        """Canonical form of ``ws`` and the length change (+1 or -1)."""
        if not 0 <= s < self.rank:
            raise InvalidInput(f"generator {s} out of range for rank {self.rank}")
        if self.rank <= 2:
            v, sign = self._dihedral_rmul(w.word, s)
            return CoxeterElement(v), sign
        els = self.elements
        i = self.index[w]
        j = self.rmul_table[i][s]
        return els[j], self.lengths[j] - self.lengths[i]

    def reduce(self, word: Iterable[int]) -> CoxeterElement:
        w = IDENTITY
        for s in word:
            w, _ = self.right_multiply(w, s)
        return w

    def multiply(self, u: CoxeterElement, v: CoxeterElement) -> CoxeterElement:
        return self.reduce(u.word + v.word)

    def inverse(self, w: CoxeterElement) -> CoxeterElement:
        return self.reduce(reversed(w.word))

    def element(self, word: Iterable[int]) -> CoxeterElement:
        return self.reduce(word)

    def generator(self, s: int) -> CoxeterElement:
        return CoxeterElement((s,))

    def generator_classes(self) -> list[int]:
        """Class label per generator under conjugacy in W."""
        n = self.rank
        if n == 1:
            return [0]
        if n == 2:
            m = self.matrix.m[0][1]
            return [0, 0] if (m != INF and m % 2 == 1) else [0, 1]
        try:
            self.elements
        except GroupTooLargeError:
            return _odd_edge_components(self.matrix)
        # orbit of each generator under conjugation by generators; the orbit
        # consists of reflections, so it stays small even for large W
        labels = list(range(n))
        for s in range(n):
            if labels[s] != s:
                continue
            seen = {CoxeterElement((s,))}
            frontier = list(seen)
            while frontier:
                nxt = []
                for x in frontier:
                    for t in range(n):
                        y = self.reduce((t,) + x.word + (t,))
                        if y not in seen:
                            seen.add(y)
                            nxt.append(y)
                frontier = nxt
            for t in range(n):
                if CoxeterElement((t,)) in seen:
                    labels[t] = min(labels[t], s)
        return labels


def _positive_definite(matrix: CoxeterMatrix) -> bool:
    # W is finite iff B(s,t) = -cos(pi/m_st) is positive definite
    n = matrix.rank
    B = [[1.0 if s == t else (-1.0 if matrix.m[s][t] == INF else -math.cos(math.pi / matrix.m[s][t]))
          for t in range(n)] for s in range(n)]
    for k in range(1, n + 1):
        sub = [row[:k] for row in B[:k]]
        if _det(sub) <= 1e-12:
            return False
    return True


def _det(a: list[list[float]]) -> float:
    a = [row[:] for row in a]
    n = len(a)
    det = 1.0
    for c in range(n):
        piv = max(range(c, n), key=lambda i: abs(a[i][c]))
        if abs(a[piv][c]) < 1e-300:
            return 0.0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            for j in range(c, n):
                a[i][j] -= f * a[c][j]
    return det


def _odd_edge_components(matrix: CoxeterMatrix) -> list[int]:
    n = matrix.rank
    labels = list(range(n))

    def find(x):
        while labels[x] != x:
            x = labels[x]
        return x

    for s in range(n):
        for t in range(s + 1, n):
            m = matrix.m[s][t]
            if m != INF and m % 2 == 1:
                a, b = find(s), find(t)
                labels[max(a, b)] = min(a, b)
    return [find(s) for s in range(n)]


@lru_cache(maxsize=64)
def group_of(matrix: CoxeterMatrix, cap: int = DEFAULT_CAP) -> CoxeterGroup:
    return CoxeterGroup(matrix, cap)


def right_multiply(matrix: CoxeterMatrix, w: CoxeterElement, s: int) -> tuple[CoxeterElement, int]:
    return group_of(matrix).right_multiply(w, s)


def reduce(matrix: CoxeterMatrix, word: Iterable[int]) -> CoxeterElement:
    word = list(word)
    for s in word:
        if not 0 <= s < matrix.rank:
            raise InvalidInput(f"generator {s} out of range for rank {matrix.rank}")
    return group_of(matrix).reduce(word)


def enumerate_elements(matrix: CoxeterMatrix, cap: int = DEFAULT_CAP) -> list[CoxeterElement]:
    return list(group_of(matrix, cap).elements)


# --------------------------------------------------------------------------
# parameters

def _scalar(x):
    if isinstance(x, bool):
        raise InvalidInput("boolean is not a thickness parameter")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class ParameterMap:
    """Thickness parameter ``q_s`` for each generator ``s``.

    Integer and string inputs become ``Fraction`` so that downstream
    arithmetic is exact; floats stay floats.
    """

    q: tuple

    def __post_init__(self):
        vals = tuple(_scalar(x) for x in self.q)
        for x in vals:
            if not x > 0:
                raise InvalidInput(f"thickness parameters must be positive, got {x}")
        object.__setattr__(self, "q", vals)

    def __getitem__(self, s: int):
        return self.q[s]

    def __len__(self) -> int:
        return len(self.q)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.q)

    @classmethod
    def uniform(cls, rank: int, q) -> "ParameterMap":
        return cls((q,) * rank)

    def validate(self, group: CoxeterGroup) -> None:
        if len(self.q) != group.rank:
            raise InvalidInput("one parameter per generator is required")
        labels = group.generator_classes()
        for s in range(group.rank):
            for t in range(group.rank):
                if labels[s] == labels[t] and self.q[s] != self.q[t]:
                    raise InvalidInput(
                        f"generators {s + 1} and {t + 1} are conjugate but "
                        f"have parameters {self.q[s]} != {self.q[t]}")


def q_w(params: ParameterMap, w: CoxeterElement):
    out = Fraction(1) if params.exact else 1.0
    for s in w.word:
        out *= params[s]
    return out


# --------------------------------------------------------------------------
# Fuchsian systems

NOT_FUCHSIAN = "not-fuchsian"
FUCHSIAN_NO_BUILDING = "fuchsian-no-thick-building"
FUCHSIAN_BUILDING = "fuchsian-thick-building-exists"


def fuchsian_admissible(k: Sequence[int]) -> str:
    k = list(k)
    n = len(k)
    if n < 3:
        raise InvalidInput("need at least three angles")
    if any(int(x) != x or x < 2 for x in k):
        raise InvalidInput("each k_i must be an integer >= 2")
    if not sum(Fraction(1, int(x)) for x in k) < n - 2:
        return NOT_FUCHSIAN
    if not all(x in (2, 3, 4, 6, 8) for x in k):
        return FUCHSIAN_NO_BUILDING
    if any(x in (2, 4) for x in k) or sum(1 for x in k if x == 8) % 2 == 0:
        return FUCHSIAN_BUILDING
    return FUCHSIAN_NO_BUILDING
