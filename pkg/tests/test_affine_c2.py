import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from buildwalk import affine_c2 as ac
from buildwalk.affine_c2 import C2Params, LatticeDistribution, QuadratureGrid, TorusPoint
from buildwalk.errors import InvalidInput, SingularPoint

F = Fraction
P22 = C2Params(2, 2)


def _random_points(n, seed, radius=(0.7, 1.4)):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        rad = rng.uniform(*radius, size=2)
        ang = rng.uniform(0, 2 * np.pi, size=2)
        yield complex(rad[0] * cmath.exp(1j * ang[0])), complex(rad[1] * cmath.exp(1j * ang[1]))


def test_vertex_counts():
    assert ac.N10(2, 2) == 3 * 5 * 2
    assert ac.N01(2, 2) == 3 * 5
    q, r = sympy.symbols("q r")
    assert sympy.expand(ac.N01(q, r) - (1 + q * r + q + q * q * r)) == 0
    assert ac.vertex_count(P22, 0, 0) == 1
    assert ac.vertex_count(P22, 1, 1) == 3 * 3 * 5 * 8
    with pytest.raises(InvalidInput):
        ac.vertex_count(P22, -1, 0)


def test_rows_sympy_cross_check():
    q, r = sympy.symbols("q r")
    for row in ac.ROWS:
        total = sum(f(q, r) for f, _, _ in row.terms)
        assert sympy.expand(total - ac.GEN_NORM[row.gen](q, r)) == 0, row
    assert all(a["sum_equals_N"] for a in ac.audit_rows())


def test_row_partition_is_unique():
    for gen in ("A10", "A01"):
        for k in range(6):
            for l in range(6):
                assert ac.find_row(gen, k, l).covers(k, l)


@pytest.mark.parametrize("q,r", [(2, 2), (2, 3), (3, 2), (4, 7)])
def test_rows_match_spherical_functions(q, r):
    # N A^_{k,l} A^_gen = sum c A^_{k',l'} holds pointwise for every character
    p = C2Params(q, r)
    for z1, z2 in _random_points(4, q * 10 + r):
        for gen, gk in (("A10", (1, 0)), ("A01", (0, 1))):
            g = ac.spherical_function(p, *gk, (z1, z2))
            for k in range(3):
                for l in range(4):
                    lhs = ac.GEN_NORM[gen](q, r) * ac.spherical_function(p, k, l, (z1, z2)) * g
                    rhs = sum(c * ac.spherical_function(p, k + dk, l + dl, (z1, z2))
                              for c, dk, dl in ac.find_row(gen, k, l).coefficients(q, r))
                    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs)), (gen, k, l)


def test_right_mul_examples():
    assert ac.right_mul_generator(P22, LatticeDistribution.delta(), "A01") == LatticeDistribution.delta(0, 1)
    out = ac.right_mul_generator(P22, LatticeDistribution.delta(2, 3), "A01")
    assert out.b == {(2, 2): F(1, 15), (3, 2): F(4, 15), (1, 4): F(2, 15), (2, 4): F(8, 15)}
    out = ac.right_mul_generator(P22, LatticeDistribution.delta(3, 0), "A01")
    assert out.b == {(2, 1): F(3, 15), (3, 1): F(12, 15)}
    with pytest.raises(InvalidInput):
        ac.right_mul_generator(P22, LatticeDistribution.delta(), "A11")


@pytest.mark.parametrize("q,r", [(2, 2), (3, 5)])
def test_commutativity(q, r):
    p = C2Params(q, r)
    rng = np.random.default_rng(q + r)
    for _ in range(5):
        dist = LatticeDistribution({(int(rng.integers(0, 4)), int(rng.integers(0, 4))): F(int(rng.integers(1, 9)))
                                    for _ in range(4)})
        a = ac.right_mul_generator(p, ac.right_mul_generator(p, dist, "A10"), "A01")
        b = ac.right_mul_generator(p, ac.right_mul_generator(p, dist, "A01"), "A10")
        assert a == b


def test_exact_n_step_is_stochastic():
    walk = LatticeDistribution({(0, 1): F(1, 2), (1, 0): F(1, 3), (0, 0): F(1, 6)})
    for n in range(8):
        d = ac.exact_n_step(P22, walk, n)
        assert d.total() == 1
        assert all(v >= 0 for v in d.b.values())
    assert ac.exact_n_step(P22, LatticeDistribution.srw(), 0) == LatticeDistribution.delta()
    assert ac.exact_n_step(P22, LatticeDistribution.srw(), 1) == LatticeDistribution.delta(0, 1)


def test_engines_agree_with_generator_route():
    walk = LatticeDistribution({(0, 1): F(2, 3), (1, 0): F(1, 3)})
    p = C2Params(2, 3)
    dist = LatticeDistribution.delta()
    for n in range(1, 7):
        a = ac.right_mul_generator(p, dist, "A10")
        b = ac.right_mul_generator(p, dist, "A01")
        dist = LatticeDistribution({key: F(1, 3) * a[key] + F(2, 3) * b[key] for key in set(a.b) | set(b.b)})
        assert ac.exact_n_step(p, walk, n) == dist
        fl = ac.exact_n_step(p, walk, n, mode="float")
        for key, v in dist.b.items():
            assert abs(fl[key] - float(v)) < 1e-14


def test_walk_support_checked():
    with pytest.raises(InvalidInput):
        ac.exact_n_step(P22, LatticeDistribution({(1, 1): F(1)}), 2)
    with pytest.raises(InvalidInput):
        ac.exact_n_step(P22, LatticeDistribution({(0, 1): F(1, 2)}), 2)
    with pytest.raises(InvalidInput):
        C2Params(1, 2)


def test_c_function():
    for z1, z2 in _random_points(20, 5):
        c = ac.c_func(P22, z1, z2)
        assert np.isfinite(c)
    assert abs(ac.c_func(P22, 1e12, 1e6) - 1) < 1e-5
    assert np.isfinite(ac.c_func(P22, 2j, 1j * cmath.exp(1j * math.pi / 7)))
    for _ in range(20):
        t = np.random.default_rng(1).uniform(0, 2 * np.pi, 2)
        z1, z2 = cmath.exp(1j * t[0]), cmath.exp(1j * t[1])
        assert abs(abs(ac.c_func(P22, z1, z2)) ** 2
                   - ac.c_func(P22, z1, z2) * ac.c_func(P22, 1 / z1, 1 / z2)) < 1e-10
    with pytest.raises(SingularPoint):
        ac.c_func(P22, 1, 1)
    with pytest.raises(SingularPoint):
        ac.spherical_function(P22, 0, 1, (1j, 1j))


def test_spherical_function_base_cases():
    q, r = 2, 3
    p = C2Params(q, r)
    for z1, z2 in _random_points(10, 9, radius=(1.0, 1.0)):
        assert abs(ac.spherical_function(p, 0, 0, (z1, z2)) - 1) < 1e-10
        u, v = ac.uv_from_z(p, z1, z2)
        assert abs(ac.spherical_function(p, 1, 0, (z1, z2)) - u) < 1e-10
        assert abs(ac.spherical_function(p, 0, 1, (z1, z2)) - v) < 1e-10
        base2 = q * math.sqrt(r) / ((q + 1) * (q * r + 1)) * (z1 + 1 / z1 + z2 + 1 / z2)
        assert abs(v - base2) < 1e-14


def test_spherical_function_symmetry():
    t = TorusPoint(0.3, 1.1)
    z1, z2 = t.z
    base = ac.spherical_function(P22, 2, 1, t)
    assert abs(base.imag) < 1e-12
    for a, b in ac.signed_permutations(z1, z2):
        assert abs(ac.spherical_function(P22, 2, 1, (a, b)) - base) < 1e-10


def test_uv_examples():
    u, v = ac.uv_from_z(P22, 1, 1)
    assert abs(v - ac.srw_rho(P22)) < 1e-15
    assert abs(ac.uv_from_z(P22, 1, -1)[1]) < 1e-15
    for z1, z2 in _random_points(5, 2):
        a = ac.uv_from_z(P22, z1, z2)
        b = ac.uv_from_z(P22, 1 / z2, z1)
        assert abs(a[0] - b[0]) < 1e-12 and abs(a[1] - b[1]) < 1e-12


def test_coefficients_match_direct_evaluation():
    for k, l in [(0, 0), (1, 0), (0, 1), (2, 3), (4, 1)]:
        vals = ac._grid_values(P22, QuadratureGrid.make(8), k, l)
        t1, t2 = QuadratureGrid.make(8).angles()
        direct = ac.spherical_function(P22, k, l, TorusPoint(t1[3], t2[5]))
        assert abs(vals[3, 5] - direct.real) < 1e-10


def test_plancherel_density():
    assert ac.plancherel_K(P22) == pytest.approx(45 / 128, abs=1e-15)
    rng = np.random.default_rng(0)
    for t in rng.uniform(0, 2 * np.pi, size=(10000, 2)):
        assert ac.plancherel_density(P22, TorusPoint(*t)) >= 0


def test_orthogonality():
    assert ac.orthogonality_check(P22, QuadratureGrid.make(200), 3) < 1e-6
    res = [ac.orthogonality_check(C2Params(2, 3), QuadratureGrid.make(n), 2) for n in (50, 100)]
    assert res[1] < res[0]


def test_grid_parsing():
    g = QuadratureGrid.parse("64x32")
    assert (g.n1, g.n2) == (64, 32)
    with pytest.raises(InvalidInput):
        QuadratureGrid.parse("64")
    with pytest.raises(InvalidInput):
        QuadratureGrid(4, 4, (0.0, 0.0))


def test_pn_spectral_examples():
    g = QuadratureGrid.make(100)
    assert abs(ac.pn_spectral(P22, LatticeDistribution.srw(), 0, (0, 0), g).value - 1) < 1e-10
    for n in (1, 3, 7):
        assert abs(ac.pn_spectral(P22, LatticeDistribution.srw(), n, (0, 0), g).value) < 1e-10


def test_pn_spectral_matches_recursion_general_walk():
    p = C2Params(2, 3)
    walk = LatticeDistribution({(0, 1): F(1, 2), (1, 0): F(1, 4), (0, 0): F(1, 4)})
    g = QuadratureGrid.make(120)
    for n in (2, 5, 8):
        d = ac.exact_n_step(p, walk, n)
        for target in [(0, 0), (1, 0), (1, 1)]:
            res = ac.pn_spectral(p, walk, n, target, g)
            exact = float(d[target]) / float(ac.vertex_count(p, *target))
            assert abs(res.value - exact) < 1e-9
            assert res.error < 1e-6


def test_spectral_workers_do_not_change_result():
    g = QuadratureGrid.make(96)
    a = ac.pn_spectral(P22, LatticeDistribution.srw(), 6, (1, 1), g, workers=1)
    b = ac.pn_spectral(P22, LatticeDistribution.srw(), 6, (1, 1), g, workers=4)
    assert a.value == b.value


def test_llt_constants():
    rho = ac.srw_rho(P22)
    assert abs(rho - 8 * math.sqrt(2) / 15) < 1e-15
    assert abs(ac.llt_constant(P22) - 17280 / math.pi) < 1e-9
    assert abs(ac.llt_constant(P22, "displayed") - 4320 / math.pi) < 1e-9
    r, a = ac.srw_llt_asymptote(P22, 10)
    assert abs(a - 17280 / math.pi * rho ** 20 / 10 ** 5) < 1e-20
    with pytest.raises(InvalidInput):
        ac.srw_llt_asymptote(P22, 0)


def test_llt_ratio_trend():
    rows = ac.llt_ratio_table(P22, [25, 50, 100])
    devs = [abs(r["ratio"] - 1) for r in rows]
    assert devs[0] > devs[1] > devs[2]
    assert all(r["ratio"] > 0 for r in rows)


def test_llt_spectral_route_matches_exact():
    ex = ac.llt_ratio_table(P22, [20, 60], mode="exact")
    sp = ac.llt_ratio_table(P22, [20, 60], mode="spectral")
    for a, b in zip(ex, sp):
        assert abs(a["ratio"] - b["ratio"]) < 1e-10 * a["ratio"]


def test_llt_ratio_tends_to_one():
    rows = ac.llt_ratio_table(P22, [800, 3200, 6400], mode="spectral")
    devs = [abs(1 - r["ratio"]) for r in rows]
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 0.03
    # first-order correction ~ c / n with c near 128
    scaled = [d * r["n"] for d, r in zip(devs, rows)]
    assert abs(scaled[2] - scaled[1]) < 0.03 * scaled[2]
    displayed = ac.llt_ratio_table(P22, [800, 3200], form="displayed", mode="spectral")
    # the n^-4 form is off by a factor n/4
    assert displayed[1]["ratio"] < displayed[0]["ratio"] / 3

