"""Todd-Coxeter enumeration of the cosets of the trivial subgroup.

Specialised to groups generated by involutions, so a coset table needs only
one column per generator and ``table[table[c][s]][s] == c`` always holds.
The result is the regular permutation representation of the group, which is
all the Coxeter module needs to build exact multiplication tables.
"""

from __future__ import annotations

from .errors import GroupTooLargeError


class _Enumerator:
    def __init__(self, ngens: int, max_cosets: int):
        self.ngens = ngens
        self.max_cosets = max_cosets
        self.table: list[list[int | None]] = [[None] * ngens]
        self.parent: list[int] = [0]

    def rep(self, c: int) -> int:
        root = c
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[c] != root:
            self.parent[c], c = root, self.parent[c]
        return root

    def alive(self, c: int) -> bool:
        return self.parent[c] == c

    def define(self, c: int, s: int) -> int:
        new = len(self.table)
        if new >= self.max_cosets:
            raise GroupTooLargeError(
                f"coset enumeration exceeded {self.max_cosets} cosets")
        self.table.append([None] * self.ngens)
        self.parent.append(new)
        self.table[c][s] = new
        self.table[new][s] = c
        return new

    def _merge(self, a: int, b: int, queue: list[int]) -> None:
        a, b = self.rep(a), self.rep(b)
        if a == b:
            return
        if b < a:
            a, b = b, a
        self.parent[b] = a
        queue.append(b)

    def coincidence(self, a: int, b: int) -> None:
        queue: list[int] = []
        self._merge(a, b, queue)
        i = 0
        while i < len(queue):
            dead = queue[i]
            i += 1
            row = self.table[dead]
            for s in range(self.ngens):
                f = row[s]
                if f is None:
                    continue
                row[s] = None
                if self.table[f][s] == dead:
                    self.table[f][s] = None
                e1, f1 = self.rep(dead), self.rep(f)
                if self.table[e1][s] is not None:
                    self._merge(f1, self.table[e1][s], queue)
                elif self.table[f1][s] is not None:
                    self._merge(e1, self.table[f1][s], queue)
                else:
                    self.table[e1][s] = f1
                    self.table[f1][s] = e1

    def scan_and_fill(self, c: int, word: tuple[int, ...]) -> None:
        table = self.table
        f, b = c, c
        i, j = 0, len(word) - 1
        while True:
            while i <= j and table[f][word[i]] is not None:
                f = table[f][word[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and table[b][word[j]] is not None:
                b = table[b][word[j]]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if i == j:
                table[f][word[i]] = b
                table[b][word[i]] = f
                return
            self.define(f, word[i])


def regular_representation(ngens: int, relators: list[tuple[int, ...]],
                           max_cosets: int) -> list[list[int]]:
    """Return the complete coset table of the trivial subgroup.

    ``relators`` must not include the involution relations ``s*s``; those
    are built into the table layout. Coset 0 is the identity. Raises
    ``GroupTooLargeError`` if more than ``max_cosets`` cosets get defined,
    which is how infinite groups are detected.
    """
    en = _Enumerator(ngens, max_cosets)
    c = 0
    while c < len(en.table):
        for word in relators:
            if not en.alive(c):
                break
            en.scan_and_fill(c, word)
        if en.alive(c):
            for s in range(ngens):
                if en.table[c][s] is None:
                    en.define(c, s)
        c += 1

    live = [k for k in range(len(en.table)) if en.alive(k)]
    renumber = {k: i for i, k in enumerate(live)}
    return [[renumber[en.rep(en.table[k][s])] for s in range(ngens)]
            for k in live]
