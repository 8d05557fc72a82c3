from __future__ import annotations

import pytest

from reference_values import N1_229, N1_238, N1_286, N2_229, N2_238, N2_286, Q_229, Q_286
from periodscope import hodge
from periodscope.exactalg import FieldMatrix
from periodscope.pipeline import family

Z6 = [[0] * 6 for _ in range(6)]


def add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def test_weight_filtration_zero():
    W = hodge.weight_filtration(Z6)
    assert W.dims[2] == 0
    assert W.dims[3] == 6
    assert W.graded == (0, 0, 0, 6, 0, 0, 0)


def test_weight_filtration_v229_interior():
    N = add(N1_229, N2_229)
    W = hodge.weight_filtration(N)
    assert W.graded == (1, 0, 2, 0, 2, 0, 1)
    assert hodge.is_hodge_tate(W)
    assert hodge.weight_filtration_ok(N, W)


def test_weight_filtration_v238_n1():
    W = hodge.weight_filtration(N1_238)
    assert W.graded == (1, 0, 1, 2, 1, 0, 1)


def test_weight_filtration_rejects_non_nilpotent():
    with pytest.raises(hodge.NotNilpotent):
        hodge.weight_filtration([[1, 0], [0, 0]])


def test_jordan_signature():
    assert hodge.jordan_signature(N1_229) == (3, 3)
    assert hodge.jordan_signature(N2_286) == (2, 2, 2)
    assert hodge.jordan_signature(Z6) == (1, 1, 1, 1, 1, 1)


def test_lmhs_type_examples():
    F = family("V286").origin_residues.F_limit
    assert hodge.lmhs_type(add(N1_286, N2_286), Q_286, F).name == "IV2"
    assert hodge.lmhs_type(N2_286, Q_286).candidates == ("II1",)
    assert hodge.lmhs_type(Z6).name == "I0"


def test_lmhs_type_rejects_unpolarized():
    Q = [[0] * 6 for _ in range(6)]
    Q[0][5], Q[5][0] = 1, -1
    with pytest.raises(hodge.NoAdmissibleType):
        hodge.lmhs_type(N1_229, Q)


def test_cone_types_at_origins():
    rd = family("V229").origin_residues
    ct = hodge.cone_type(N1_229, N2_229, Q_229, rd.F_limit)
    assert ct.names() == ("III0", "IV2", "III0")
    rd = family("V238").origin_residues
    ct = hodge.cone_type(N1_238, N2_238, None, rd.F_limit)
    assert ct.names() == ("IV1", "IV2", "III0")
    rd = family("V286").origin_residues
    ct = hodge.cone_type(N1_286, N2_286, Q_286, rd.F_limit)
    assert ct.names() == ("IV2", "IV2", "II1")


def test_cone_type_rejects_noncommuting():
    with pytest.raises(ValueError):
        hodge.cone_type([[0, 1], [0, 0]], [[0, 0], [1, 0]])


def test_polarization_check():
    assert hodge.polarization_check(N1_229, Q_229)
    assert hodge.polarization_check(N2_229, Q_229)
    assert hodge.polarization_check(Z6, Q_229)
    assert hodge.polarization_check(N1_286, Q_286)
    assert hodge.polarization_check(N2_286, Q_286)


def ct(label):
    return hodge.ConeType(*(hodge.parse_type(t) for t in label.strip("<>").split("|")))


def test_knu_flip_degree():
    assert hodge.knu_flip_degree(ct("<III0|IV2|III0>"), True) == 2
    assert hodge.knu_flip_degree(ct("<III0|IV2|III0>"), False) == 1
    assert hodge.knu_flip_degree(ct("<IV1|IV2|III0>"), True) == 1
    assert hodge.knu_flip_degree(ct("<IV2|IV2|II1>"), False) == 1


def test_local_iso_degree():
    assert hodge.local_iso_degree(N1_229, N2_229) == 1
    assert hodge.local_iso_degree(N1_238, N2_238) == 1
    assert hodge.local_iso_degree(N1_229, N1_229) == hodge.INCONCLUSIVE


def test_generic_degree():
    cones = [("origin", ct("<III0|IV2|III0>")), ("b", ct("<III0|IV2|IV1>")), ("c", ct("<I1|IV2|IV1>"))]
    rep = hodge.generic_degree(cones, "origin", True, 1)
    assert (rep.degree, rep.local, rep.flip) == (2, 1, 2)
    rep = hodge.generic_degree([("s12", ct("<IV2|IV2|II1>")), ("s13", ct("<IV2|IV2|I1>"))], "s12", False, 1)
    assert rep.degree == 1


def test_generic_degree_refuses_on_clash():
    cones = [("origin", ct("<IV1|IV2|III0>")), ("x", ct("<III0|IV2|IV1>"))]
    with pytest.raises(hodge.DegreeRefused) as exc:
        hodge.generic_degree(cones, "origin", False, 1)
    assert exc.value.clashes == ["x"]


def test_generic_degree_refuses_inconclusive_local():
    with pytest.raises(hodge.DegreeRefused):
        hodge.generic_degree([("o", ct("<IV1|IV2|III0>"))], "o", False, hodge.INCONCLUSIVE)


def test_catalog_excludes_inadmissible_iii1():
    names = set(hodge.catalog(2))
    assert "III1" not in names
    assert {"I0", "I1", "I2", "II0", "II1", "III0", "IV1", "IV2"} <= names


def test_catalog_diamonds_symmetric():
    for d in hodge.admissible_diamonds(2):
        g = d.graded
        assert all(g[3 + k] == g[3 - k] for k in range(4))
        assert all(d.h[p][q] == d.h[q][p] for p in range(4) for q in range(4))
        assert sum(g) == 6


def test_without_f_ambiguity_contains_resolved_type():
    N = add(N1_238, N2_238)
    withheld = hodge.lmhs_type(N)
    F = family("V238").origin_residues.F_limit
    assert hodge.lmhs_type(N, None, F).name in withheld.candidates


def test_cone_candidates_interior():
    assert "IV2" in hodge.cone_candidates("III0", "III0")
