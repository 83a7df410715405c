import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from buildwalk import polygon_reps as pr
from buildwalk.errors import InvalidInput, RejectedByFeitHigman
from buildwalk.hecke import HeckeAlgebra, WalkSpec
from buildwalk.coxeter import type_I2
from buildwalk.models import build_model, transition_matrix, weyl_distance_table

F = Fraction
PARAMS = [(2, 2, 2), (2, 2, 5), (3, 2, 2), (3, 4, 4), (4, 2, 2), (4, 2, 4), (4, 3, 5),
          (6, 2, 2), (6, 2, 8), (8, 2, 4), (8, 2, 2), (5, 2, 2), (12, 3, 3)]


@pytest.mark.parametrize("m,q,r", PARAMS)
def test_irreps_satisfy_relations(m, q, r):
    irreps = pr.build_irreps(m, q, r, allow_any_m=True)
    ones = sum(1 for x in irreps if x.dim == 1)
    twos = sum(1 for x in irreps if x.dim == 2)
    assert (ones, twos) == ((4, (m - 2) // 2) if m % 2 == 0 else (2, (m - 1) // 2))
    for rho in irreps:
        assert pr.relation_residual(rho, m, F(q), F(r)) == 0
    for rho in pr.build_irreps(m, q, r, mode="float", allow_any_m=True):
        assert pr.relation_residual(rho, m, q, r) < 1e-12


def test_irrep_examples():
    irreps = {x.label: x for x in pr.build_irreps(4, 2, 3)}
    assert irreps["triv"].T1 == ((1,),) and irreps["triv"].T2 == ((1,),)
    assert irreps["sgn"].T1 == ((F(-1, 2),),) and irreps["sgn"].T2 == ((F(-1, 3),),)
    rho = irreps["rho_1"]
    # off-diagonal entries of T1 and T2 carry c/q and c'/r
    assert rho.T1[1][0] * 2 * rho.T2[0][1] * 3 == 5
    rho3 = pr.build_irreps(3, 2, 2)[2]
    assert rho3.T1[1][0] * 2 * rho3.T2[0][1] * 2 == 2


def test_errors():
    with pytest.raises(InvalidInput):
        pr.build_irreps(3, 2, 3)
    with pytest.raises(RejectedByFeitHigman):
        pr.build_irreps(5, 2, 2)
    with pytest.raises(InvalidInput):
        pr.build_irreps(7, 2, 2, mode="exact", allow_any_m=True)
    with pytest.raises(InvalidInput):
        pr.parameter_constraints(5, 2, 2)
    with pytest.raises(InvalidInput):
        pr.a2_chamber_spectral_radius(1)


@pytest.mark.parametrize("split", [F(1), F(3, 2), F(-7)])
def test_exact_characters_independent_of_split(split):
    base = pr.character_table(6, 2, 8)
    other = pr.character_table(6, 2, 8, split=split)
    T = base.algebra.from_walk(WalkSpec.srw(base.algebra))
    h = base.algebra.power(T, 3)
    for a, b in zip(base.irreps, other.irreps):
        assert base.character(a, h) == other.character(b, h)
    assert base.multiplicities == other.multiplicities


def test_float_characters_independent_of_split():
    base = pr.character_table(8, 2, 4, mode="float")
    other = pr.character_table(8, 2, 4, mode="float", split=0.37)
    for a, b in zip(base.irreps, other.irreps):
        for w in base.elements:
            assert abs(base.character_values(a)[w] - other.character_values(b)[w]) < 1e-12


@pytest.mark.parametrize("m,q,r", [(3, 2, 2), (4, 2, 2), (4, 2, 4), (6, 2, 8), (8, 2, 4)])
def test_orthogonality(m, q, r):
    tab = pr.character_table(m, q, r)
    chis = {rho.label: tab.character_values(rho) for rho in tab.irreps}
    for a in tab.irreps:
        for b in tab.irreps:
            if a.label != b.label:
                assert tab.inner(chis[a.label], chis[b.label]) == 0
    assert tab.inner(chis["triv"], chis["triv"]) == 1


@pytest.mark.parametrize("m,q,r", [(3, 2, 2), (4, 2, 2), (4, 3, 5), (6, 2, 8), (8, 2, 4)])
def test_geometric_character(m, q, r):
    # sum_rho m_rho chi_rho(T_w) is the trace of the averaging operator P_w
    tab = pr.character_table(m, q, r)
    for w in tab.elements:
        tot = sum(tab.multiplicities[rho.label] * tab.character_values(rho)[w] for rho in tab.irreps)
        assert tot == (tab.chamber_count if not w.word else 0)


def test_multiplicities_quadrangle():
    tab = pr.character_table(4, 2, 2)
    mults = tab.multiplicities
    assert [mults[k] for k in ("triv", "sgn", "rho1", "rho2", "rho_1")] == [1, 16, 5, 5, 9]
    assert sum(mults[x.label] * x.dim for x in tab.irreps) == 45 == tab.chamber_count
    tab3 = pr.character_table(3, 2, 2)
    assert sum(tab3.multiplicities[x.label] * x.dim for x in tab3.irreps) == 21


def test_multiplicities_match_model_spectrum():
    cs = weyl_distance_table(build_model("symplectic-quadrangle", 2))
    P = transition_matrix(cs, WalkSpec.srw(cs.algebra), exact=False)
    eig = Counter(round(x, 9) for x in np.linalg.eigvalsh(P))
    tab = pr.character_table(4, 2, 2)
    T = tab.algebra.from_walk(WalkSpec.srw(tab.algebra))
    expected = Counter()
    for rho in tab.irreps:
        M = np.array([[float(x) for x in row] for row in tab.represent(rho, T)])
        for lam in np.linalg.eigvals(M):
            expected[round(float(lam.real), 9)] += int(tab.multiplicities[rho.label])
    assert eig == expected


def test_character_examples():
    tab = pr.character_table(4, 2, 2)
    T = tab.algebra.from_walk(WalkSpec.srw(tab.algebra))
    assert tab.character(tab.irrep("sgn"), T) == F(-1, 2)
    assert tab.character(tab.irrep("triv"), T) == 1
    assert tab.character(tab.irrep("rho_1"), tab.algebra.identity()) == 2
    chi = tab.character_values(tab.irrep("rho_1"))
    assert tab.inner(chi, chi) == F(2, 9)


@pytest.mark.parametrize("m,q,r", [(4, 2, 2), (6, 2, 8), (8, 2, 4), (6, 3, 3)])
def test_pn_matches_hecke(m, q, r):
    tab = pr.character_table(m, q, r)
    A = HeckeAlgebra(type_I2(m), (q, r))
    spec = WalkSpec.srw(A)
    for n in (0, 1, 5, 9):
        h = A.n_step(spec, n)
        for w in A.group.elements:
            assert pr.pn_characters(tab, spec, n, w) == h.p(w)
    assert pr.pn_characters(tab, spec, 1, A.group.elements[0]) == 0


def test_tv_bound_decreases():
    tab = pr.character_table(4, 2, 2)
    spec = WalkSpec.srw(tab.algebra)
    vals = [pr.tv_upper_bound(tab, spec, n) for n in range(1, 40)]
    assert all(v >= 0 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_quadrangle_constants():
    c = pr.quadrangle_constants(2, 2)
    assert c["k"] == (16, 5, 5, 9)
    assert c["lambda"] == (F(-1, 2), F(1, 4), F(1, 4))
    assert c["lambda_pm"] == (F(3, 4), F(-1, 4))
    assert pr.quadrangle_srw_closed_form(2, 2, 0)[0] == 1
    assert pr.quadrangle_srw_closed_form(2, 2, 1)[0] == 0


@pytest.mark.parametrize("q,r", [(2, 2), (2, 4), (3, 5), (4, 2)])
def test_quadrangle_closed_form_matches_hecke(q, r):
    A = HeckeAlgebra(type_I2(4), (q, r))
    spec = WalkSpec.srw(A)
    tab = pr.character_table(4, q, r)
    for n, h in A.n_step_series(spec, 12):
        p, bound = pr.quadrangle_srw_closed_form(q, r, n)
        assert p == h.coeff(())
        assert abs(bound - tab.tv_bound(spec, n)) < 1e-12


@pytest.mark.parametrize("m,q,r", [(3, 2, 2), (3, 5, 5), (4, 2, 2), (4, 3, 7), (6, 2, 8),
                                   (6, 2, 3), (8, 2, 4), (8, 2, 2), (5, 2, 2), (12, 3, 3), (10, 2, 2)])
def test_feit_higman_closed_form_matches_definition(m, q, r):
    rep = pr.feit_higman_check(m, q, r)
    raw = rep["_raw"]
    for j, v in raw["inner"].items():
        assert v == raw["closed"][j]
    frep = pr.feit_higman_check(m, q, r, mode="float")
    for j, v in frep["_raw"]["inner"].items():
        assert abs(v - frep["_raw"]["closed"][j]) < 1e-9 * max(1.0, abs(v))
    assert frep["admissible"] == rep["admissible"]


def test_feit_higman_verdicts():
    assert not pr.feit_higman_check(5, 2, 2)["admissible"]
    assert not pr.feit_higman_check(7, 2, 2)["admissible"]
    assert not pr.feit_higman_check(12, 3, 3)["admissible"]
    assert pr.feit_higman_check(4, 2, 2)["admissible"]
    assert pr.feit_higman_check(8, 2, 4)["admissible"]
    # sqrt(2qr) must be rational for an octagon
    assert not pr.feit_higman_check(8, 2, 2)["admissible"]
    assert not pr.feit_higman_check(6, 2, 3)["admissible"]
    for q in range(2, 6):
        for r in range(2, 6):
            assert pr.feit_higman_check(4, q, r)["admissible"]


def test_parameter_constraints():
    assert not all(ok for _, ok in pr.parameter_constraints(3, 6, 6))
    assert all(ok for _, ok in pr.parameter_constraints(4, 2, 2))
    assert not dict(pr.parameter_constraints(6, 2, 3))["sqrt(qr) integer"]
    assert all(ok for _, ok in pr.parameter_constraints(3, 5, 5))


@pytest.mark.parametrize("m", [3, 4, 6, 8])
def test_catalogue_passes_constraints(m):
    for q, r in pr.known_parameters(m, limit=9):
        assert all(ok for _, ok in pr.parameter_constraints(m, q, r)), (m, q, r)


def test_a2_spectral_radius():
    assert abs(pr.a2_chamber_spectral_radius(2) - (3 + math.sqrt(73)) / 12) < 1e-15
    assert abs(pr.a2_chamber_spectral_radius(1 + 1e-12) - 1) < 1e-9
    vals = [pr.a2_chamber_spectral_radius(q) for q in (2, 3, 4, 5, 7)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_report_json_is_clean():
    text = pr.report_json(pr.feit_higman_check(4, 2, 2))
    assert "_raw" not in text and '"admissible": true' in text
