"""Explicit finite generalised polygons used as brute-force oracles.

Chambers are flags (point, line). Two chambers are s1-adjacent when they
share a line and s2-adjacent when they share a point, so a line with q+1
points makes q_{s1} = q and a point on r+1 lines makes q_{s2} = r.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coxeter import CoxeterElement, ParameterMap, dihedral_system, group_of
from .errors import InvalidInput, NotABuilding
from .hecke import HeckeAlgebra, WalkSpec, fmt_decimal

KINDS = {"complete-bipartite": 2, "projective-plane": 3, "symplectic-quadrangle": 4}
RNG_VERSION = "pcg64-ss-v1"
BLOCK = 65536


@dataclass(frozen=True)
class IncidenceModel:
    kind: str
    q: int
    r: int
    points: tuple
    lines: tuple
    incident: frozenset

    @property
    def m(self) -> int:
        return KINDS[self.kind]

    def flags(self) -> list[tuple[int, int]]:
        return sorted(self.incident)

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind, "q": self.q, "r": self.r,
            "points": [list(p) if isinstance(p, tuple) else p for p in self.points],
            "lines": [list(l) if isinstance(l, tuple) else l for l in self.lines],
            "incidence": [list(f) for f in sorted(self.incident)],
            "flags": [list(f) for f in self.flags()],
        })


# --------------------------------------------------------------------------
# finite-field helpers (prime fields only)

def _normalize(v, p):
    for c in v:
        if c % p:
            inv = pow(c, -1, p)
            return tuple((x * inv) % p for x in v)
    return None


def _proj_points(dim, p):
    pts = set()
    for v in itertools.product(range(p), repeat=dim):
        n = _normalize(v, p)
        if n is not None:
            pts.add(n)
    return sorted(pts)


def _is_prime(n):
    return n >= 2 and all(n % d for d in range(2, int(n ** 0.5) + 1))


def build_model(kind: str, q: int, r: int | None = None) -> IncidenceModel:
    if r is None:
        r = q
    if kind not in KINDS:
        raise InvalidInput(f"unknown model kind {kind!r}")
    if kind == "complete-bipartite":
        if q < 1 or r < 1:
            raise InvalidInput("complete-bipartite needs q, r >= 1")
        pts = tuple(range(q + 1))
        lns = tuple(range(r + 1))
        inc = frozenset((i, j) for i in range(q + 1) for j in range(r + 1))
        return IncidenceModel(kind, q, r, pts, lns, inc)

    if q != r or not _is_prime(q):
        raise InvalidInput(f"{kind} needs q = r prime")
    p = q
    if kind == "projective-plane":
        if p not in (2, 3, 5, 7):
            raise InvalidInput("projective planes are shipped for p in {2,3,5,7}")
        pts = _proj_points(3, p)
        # a line is the kernel of a linear form, named by its coefficient vector
        lns = pts
        inc = frozenset((i, j) for i, x in enumerate(pts) for j, a in enumerate(lns)
                        if sum(u * v for u, v in zip(x, a)) % p == 0)
        return IncidenceModel(kind, p, p, tuple(pts), tuple(lns), inc)

    if p not in (2, 3):
        raise InvalidInput("symplectic quadrangles are shipped for p in {2,3}")
    pts = _proj_points(4, p)
    idx = {x: i for i, x in enumerate(pts)}

    def form(x, y):
        return (x[0] * y[2] - x[2] * y[0] + x[1] * y[3] - x[3] * y[1]) % p

    lines = set()
    for a, b in itertools.combinations(pts, 2):
        if form(a, b) == 0:
            span = set()
            for s, t in itertools.product(range(p), repeat=2):
                v = _normalize(tuple((s * u + t * w) % p for u, w in zip(a, b)), p)
                if v is not None:
                    span.add(idx[v])
            lines.add(tuple(sorted(span)))
    lns = sorted(lines)
    inc = frozenset((i, j) for j, ln in enumerate(lns) for i in ln)
    return IncidenceModel(kind, p, p, tuple(pts), tuple(lns), inc)


def geometry_audit(model: IncidenceModel) -> dict:
    """Diameter, girth and degrees of the bipartite incidence graph."""
    npts, nl = len(model.points), len(model.lines)
    adj = [[] for _ in range(npts + nl)]
    for i, j in model.incident:
        adj[i].append(npts + j)
        adj[npts + j].append(i)
    diam, girth = 0, None
    for src in range(npts + nl):
        dist = [-1] * len(adj)
        par = [-1] * len(adj)
        dist[src] = 0
        dq = deque([src])
        while dq:
            u = dq.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    par[v] = u
                    dq.append(v)
                elif v != par[u]:
                    cyc = dist[u] + dist[v] + 1
                    if girth is None or cyc < girth:
                        girth = cyc
        if min(dist) < 0:
            diam = None
            break
        diam = max(diam, max(dist))
    pdeg = {len(adj[i]) for i in range(npts)}
    ldeg = {len(adj[npts + j]) for j in range(nl)}
    m = model.m
    return {
        "kind": model.kind, "m": m, "points": npts, "lines": nl,
        "flags": len(model.incident), "diameter": diam, "girth": girth,
        "point_degrees": sorted(pdeg), "line_degrees": sorted(ldeg),
        "ok": diam == m and girth == 2 * m and pdeg == {model.r + 1} and ldeg == {model.q + 1},
    }


# --------------------------------------------------------------------------
# chamber systems

class ChamberSet:
    """Flags of a model with the Weyl-distance table delta[x][y] (element indices)."""

    def __init__(self, model: IncidenceModel):
        self.model = model
        self.chambers = model.flags()
        self.matrix = dihedral_system(model.m)
        self.group = group_of(self.matrix)
        self.params = ParameterMap((model.q, model.r))
        self.algebra = HeckeAlgebra(self.matrix, self.params)
        n = len(self.chambers)
        by_line: dict = {}
        by_point: dict = {}
        for i, (pt, ln) in enumerate(self.chambers):
            by_line.setdefault(ln, []).append(i)
            by_point.setdefault(pt, []).append(i)
        # panel[s][x]: chambers s-adjacent to x, excluding x
        self.panel = [[[] for _ in range(n)] for _ in range(2)]
        for s, groups in ((0, by_line), (1, by_point)):
            for members in groups.values():
                for x in members:
                    self.panel[s][x] = [y for y in members if y != x]
        for x in range(n):
            if len(self.panel[0][x]) != model.q or len(self.panel[1][x]) != model.r:
                raise NotABuilding("panel sizes do not match thickness parameters")
        self.delta = self._weyl_distances()
        self._spheres = None

    def __len__(self):
        return len(self.chambers)

    def _weyl_distances(self) -> np.ndarray:
        g = self.group
        n = len(self.chambers)
        g.elements
        rmul = g.rmul_table
        lengths = g.lengths
        delta = np.full((n, n), -1, dtype=np.int32)
        for x in range(n):
            row = delta[x]
            row[x] = 0
            dq = deque([x])
            while dq:
                y = dq.popleft()
                w = row[y]
                for s in (0, 1):
                    ws = rmul[w][s]
                    for z in self.panel[s][y]:
                        if row[z] < 0:
                            if lengths[ws] < lengths[w]:
                                raise NotABuilding("gallery shortcut inconsistent with Weyl lengths")
                            row[z] = ws
                            dq.append(z)
            if (row < 0).any():
                raise NotABuilding("chamber graph is disconnected")
            # (B2'): every s-edge y~z has delta(x,z) in {w, ws}, forced to ws on ascent
            for y in range(n):
                w = row[y]
                for s in (0, 1):
                    ws = rmul[w][s]
                    for z in self.panel[s][y]:
                        d = row[z]
                        if d != w and d != ws:
                            raise NotABuilding("Weyl distance violates (B2')")
                        if lengths[ws] > lengths[w] and d != ws:
                            raise NotABuilding("Weyl distance violates (B2') on an ascent")
        inv = [g.index[g.inverse(e)] for e in g.elements]
        if not (delta.T == np.array(inv)[delta]).all():
            raise NotABuilding("delta(y,x) != delta(x,y)^-1")
        return delta

    def element(self, i: int) -> CoxeterElement:
        return self.group.elements[i]

    def sphere_table(self) -> np.ndarray:
        """spheres[w][x] = sorted array of chambers y with delta(x,y) = w."""
        if self._spheres is None:
            n = len(self.chambers)
            out = []
            for wi, w in enumerate(self.group.elements):
                qw = int(self.algebra.q_w(w))
                tab = np.empty((n, qw), dtype=np.int32)
                for x in range(n):
                    ys = np.flatnonzero(self.delta[x] == wi)
                    if len(ys) != qw:
                        raise NotABuilding(f"|Delta_w(x)| = {len(ys)} != q_w = {qw} for w = {w}")
                    tab[x] = ys
                out.append(tab)
            self._spheres = out
        return self._spheres

    def census(self, x: int = 0) -> dict:
        return {str(w): int((self.delta[x] == i).sum()) for i, w in enumerate(self.group.elements)}

    def to_csv(self, dist, start: int = 0) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["chamber-id", "point", "line", "probability", "weyl-word"])
        for i, (pt, ln) in enumerate(self.chambers):
            wr.writerow([i, pt, ln, fmt_decimal(dist[i]), self.element(self.delta[start][i]).label()])
        return buf.getvalue()


def weyl_distance_table(model: IncidenceModel) -> ChamberSet:
    cs = ChamberSet(model)
    cs.sphere_table()
    return cs


def _spec_weights(cs: ChamberSet, spec: WalkSpec):
    spec.validate(cs.algebra)
    return [(cs.group.index[w], a) for w, a in spec.a.items() if a != 0]


def transition_matrix(cs: ChamberSet, spec: WalkSpec, exact: bool = True):
    """P[x][y] = a_w / q_w with w = delta(x,y)."""
    weights = _spec_weights(cs, spec)
    n = len(cs)
    if exact:
        P = [[Fraction(0)] * n for _ in range(n)]
    else:
        P = np.zeros((n, n))
    for wi, a in weights:
        pr = Fraction(a) / cs.algebra.q_w(cs.element(wi)) if exact else float(a) / float(cs.algebra.q_w(cs.element(wi)))
        xs, ys = np.nonzero(cs.delta == wi)
        for x, y in zip(xs.tolist(), ys.tolist()):
            P[x][y] = pr
    return P


def exact_evolution(cs: ChamberSet, spec: WalkSpec, n: int, start: int = 0, exact: bool = True):
    """Row `start` of P^n, as a list of Fractions (or a float array)."""
    for _, mu in evolution_series(cs, spec, n, start, exact):
        pass
    return mu


def evolution_series(cs: ChamberSet, spec: WalkSpec, nmax: int, start: int = 0, exact: bool = True):
    weights = _spec_weights(cs, spec)
    spheres = cs.sphere_table()
    size = len(cs)
    if exact:
        mu = [Fraction(0)] * size
        mu[start] = Fraction(1)
    else:
        mu = np.zeros(size)
        mu[start] = 1.0
    yield 0, mu
    for k in range(1, nmax + 1):
        if exact:
            new = [Fraction(0)] * size
            for wi, a in weights:
                tab = spheres[wi]
                pr = Fraction(a) / tab.shape[1]
                for x in range(size):
                    if mu[x]:
                        mass = mu[x] * pr
                        for y in tab[x].tolist():
                            new[y] += mass
        else:
            new = np.zeros(size)
            for wi, a in weights:
                tab = spheres[wi]
                np.add.at(new, tab, (mu * (float(a) / tab.shape[1]))[:, None])
        mu = new
        yield k, mu


def tv_from(mu) -> object:
    n = len(mu)
    if isinstance(mu, np.ndarray):
        return 0.5 * float(np.abs(mu - 1.0 / n).sum())
    u = Fraction(1, n)
    return sum((abs(x - u) for x in mu), Fraction(0)) / 2


def exact_tv(cs: ChamberSet, spec: WalkSpec, n: int, start: int = 0, exact: bool = True):
    return tv_from(exact_evolution(cs, spec, n, start, exact))


def is_stationary(cs: ChamberSet, spec: WalkSpec) -> bool:
    """Exact check that the uniform vector is fixed by P."""
    weights = _spec_weights(cs, spec)
    spheres = cs.sphere_table()
    size = len(cs)
    new = [Fraction(0)] * size
    u = Fraction(1, size)
    for wi, a in weights:
        tab = spheres[wi]
        pr = Fraction(a) / tab.shape[1]
        for x in range(size):
            for y in tab[x].tolist():
                new[y] += u * pr
    return all(v == u for v in new)


def intersection_count(cs: ChamberSet, u: CoxeterElement, v: CoxeterElement, x: int, y: int) -> int:
    """|Delta_u(x) & Delta_{v^-1}(y)|."""
    g = cs.group
    ui = g.index[u]
    vi = g.index[g.inverse(v)]
    return int(((cs.delta[x] == ui) & (cs.delta[y] == vi)).sum())


# --------------------------------------------------------------------------
# Monte Carlo

def _block_counts(cs, cum, tables, n, start, seed, block, size):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))
    pos = np.full(size, start, dtype=np.int64)
    for _ in range(n):
        wsel = np.searchsorted(cum, rng.random(size), side="right")
        wsel = np.minimum(wsel, len(cum) - 1)
        new = pos.copy()
        for k, tab in enumerate(tables):
            mask = wsel == k
            cnt = int(mask.sum())
            if cnt:
                pick = rng.integers(0, tab.shape[1], size=cnt)
                new[mask] = tab[pos[mask], pick]
        pos = new
    return np.bincount(pos, minlength=len(cs))


def simulate(cs: ChamberSet, spec: WalkSpec, n: int, trials: int, seed: int,
             start: int = 0, workers: int | None = None) -> dict:
    """Seeded Monte Carlo run; trial block b uses SeedSequence(seed, spawn_key=(b,)).

    Counts are reduced in block order, so the result does not depend on the
    number of worker threads.
    """
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    if seed is None:
        raise InvalidInput("a seed is required")
    weights = _spec_weights(cs, spec)
    spheres = cs.sphere_table()
    probs = np.array([float(a) for _, a in weights])
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    tables = [spheres[wi] for wi, _ in weights]
    nblocks = (trials + BLOCK - 1) // BLOCK
    sizes = [min(BLOCK, trials - b * BLOCK) for b in range(nblocks)]
    if workers is None:
        workers = int(os.environ.get("BUILDWALK_THREADS", "1"))
    args = [(cs, cum, tables, n, start, seed, b, sizes[b]) for b in range(nblocks)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _block_counts(*a), args))
    else:
        parts = [_block_counts(*a) for a in args]
    counts = np.zeros(len(cs), dtype=np.int64)
    for c in parts:
        counts += c
    return {"counts": counts, "freq": counts / trials, "trials": trials,
            "seed": seed, "n": n, "rng": RNG_VERSION}
