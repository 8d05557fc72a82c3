"""The twelve acceptance criteria, checked exactly.

Each test records its clauses in ACCEPTANCE before asserting; the terminal
summary prints one PASS/FAIL line per criterion.  Clauses that the computed
results contradict are kept verbatim as strict xfails (reasons in the
decisions ledger).
"""
from __future__ import annotations

import pytest

import reference_values as pv
import test_properties as props
from conftest import ACCEPTANCE
from periodscope import dmod, gaussmanin, hodge, toric
from periodscope.dmod import OreAlgebra
from periodscope.exactalg import FieldMatrix, parse_poly, parse_ratfun
from periodscope.pipeline import Refusal, family

ALG = OreAlgebra(("z1", "z2"))
P = ALG.parse
Z = ("z1", "z2")


def record(n: int, clause: str, ok: bool) -> bool:
    ACCEPTANCE.setdefault(n, []).append((clause, bool(ok)))
    return bool(ok)


def check(n: int, clauses: dict[str, bool]) -> None:
    for clause, ok in clauses.items():
        record(n, clause, ok)
    failed = [c for c, ok in clauses.items() if not ok]
    assert not failed, failed


def canon(ops):
    return [op.canonical() for op in ops]


def rat(M):
    return FieldMatrix.rational(M)


def rf(text, K):
    return K(parse_ratfun(text, Z))


# ---------------------------------------------------------------- 1

def test_criterion_1_operators():
    cubic = "(3*d1+3*d2+1)*(3*d1+3*d2+2)*(3*d1+3*d2+3)"
    gkz229 = [P(f"d1^3 + z1*{cubic}"), P(f"d2^3 + z2*{cubic}")]
    pf229 = [gkz229[0], P("d1^2-d1*d2+d2^2 + 3*(z1+z2)*(3*d1+3*d2+1)*(3*d1+3*d2+2)")]
    pf229_r = [P("d1^3 + z1*(d1+d2+1/3)*(d1+d2+2/3)*(d1+d2+1)"),
               P("d1^2-d1*d2+d2^2 + (z1+z2)*(d1+d2+1/3)*(d1+d2+2/3)")]
    pf238 = [P("d1*(d1-3*d2) + 3*z1*(3*d1+1)*(3*d1+2)"),
             P("d2^3 - z2*(d1-3*d2)*(d1-3*d2-1)*(d1-3*d2-2)")]
    pf238_r = [P("d1*(d1-3*d2) + z1*(d1+1/3)*(d1+2/3)"),
               P("d2^3 - z2*(d1/3-d2)*(d1/3-d2-1/3)*(d1/3-d2-2/3)")]
    f229, f238 = family("V229"), family("V238")
    g238 = f238.gkz_ops
    check(1, {
        "gkz V229": canon(f229.gkz_ops) == canon(gkz229),
        "pf V229 unscaled": canon(f229.pf_search.ops) == canon(pf229),
        "pf V229 rescaled": canon(f229.pf_ops) == canon(pf229_r),
        "pf V238 unscaled": canon(f238.pf_search.ops) == canon(pf238),
        "pf V238 rescaled": canon(f238.pf_ops) == canon(pf238_r),
        "gkz V238 contains the printed operators": g238[0].canonical() == (P("d1") * pf238[0]).canonical()
        and g238[1].canonical() == pf238[1].canonical(),
    })


# ---------------------------------------------------------------- 2

def test_criterion_2_operator_identity():
    cubic = "(3*d1+3*d2+1)*(3*d1+3*d2+2)*(3*d1+3*d2+3)"
    g1, g2 = (dmod.rescale(P(t), (27, 27)) for t in (f"d1^3 + z1*{cubic}", f"d2^3 + z2*{cubic}"))
    p2 = P("d1^2-d1*d2+d2^2 + (z1+z2)*(d1+d2+1/3)*(d1+d2+2/3)")
    check(2, {
        "printed forms": g1 + g2 == P("d1+d2") * p2,
        "pipeline split": family("V229").pf_identity(),
    })


# ---------------------------------------------------------------- 3

def test_criterion_3_discriminants():
    d229 = family("V229").discriminant
    d238 = family("V238").discriminant
    check(3, {
        "V229": d229.components == [parse_poly("(z1+z2+1)^3-27*z1*z2", Z)],
        "V238": set(d238.components) == {parse_poly("(1+z1)^3+z1^3*z2", Z), parse_poly("1+z2", Z)},
    })


# ---------------------------------------------------------------- 4

def test_criterion_4_holonomic_rank():
    check(4, {
        "rank V229 = 6": dmod.holonomic_rank(family("V229").gb) == 6,
        "rank V238 = 6": dmod.holonomic_rank(family("V238").gb) == 6,
    })


@pytest.mark.xfail(strict=True, reason="no monomial order makes the V229 staircase equal the frame "
                                       "{1,d1,d2,d1d2,d1^2,d1^2d2}; grevlex gives {1,d2,d1,d2^2,d1d2,d2^3}")
def test_criterion_4_staircase_equals_frame():
    f = family("V229")
    ok = sorted(f.gb.staircase()) == sorted(tuple(e) for e in f.fx.frame)
    record(4, "staircase V229 equals the frame", ok)
    assert ok


# ---------------------------------------------------------------- 5

def test_criterion_5_residues():
    check(5, {
        "V229 origin": family("V229").origin_residues.matrices == [rat(pv.N1_229), rat(pv.N2_229)],
        "V238 origin": family("V238").origin_residues.matrices == [rat(pv.N1_238), rat(pv.N2_238)],
    })


# ---------------------------------------------------------------- 6

def label_sets(label: str) -> tuple[frozenset, ...]:
    """'<IV1|IV2(IV1)|IV1>' -> per-slot candidate sets."""
    out = []
    for part in label.strip("<>").split("|"):
        lead, _, rest = part.partition("(")
        out.append(frozenset([lead] + [x for x in rest.rstrip(")").split(",") if x]))
    return tuple(out)


def entry_ok(entry, label: str) -> bool:
    want = label_sets(label)
    withheld = tuple(frozenset(c) for c in entry.withheld)
    resolved = entry.cone.names()
    return withheld == want and all(r in w for r, w in zip(resolved, want))


def test_criterion_6_cones_v229():
    table = family("V229").cone_table
    distinct = [e for e in table if e.mirror_of is None]
    mirrors = [e for e in table if e.mirror_of is not None]
    faces = [("D_v1", "D_v2"), ("D_v1", "E3"), ("E1", "E2"), ("E2", "E3"), ("D_A", "E3")]
    by_faces = {e.faces: e for e in distinct}
    clauses = {f"V229 {a},{b}": (a, b) in by_faces and entry_ok(by_faces[(a, b)], lab)
               for (a, b), lab in zip(faces, pv.CONES_229)}
    clauses["V229 five entries plus four mirror copies"] = len(distinct) == 5 and len(mirrors) == 4
    clauses["V229 mirror copies verified"] = family("V229").swap_verified is True
    check(6, clauses)


def test_criterion_6_cones_v286():
    table = {e.point: e for e in family("V286").cone_table}
    check(6, {f"V286 {p}": p in table and entry_ok(table[p], lab) for p, lab in pv.CONES_286.items()})


def test_criterion_6_sigma12_from_matrices():
    rd = family("V286").origin_residues
    ct = hodge.cone_type(pv.N1_286, pv.N2_286, pv.Q_286, rd.F_limit)
    check(6, {"V286 sigma12 typed from N1, N2, Q": ct.names() == ("IV2", "IV2", "II1")})


@pytest.mark.xfail(strict=True, reason="computed V238 cones differ from the printed table at 8 of 11 "
                                       "entries; (D_v2,D_v3) is not a cone of the secondary fan")
def test_criterion_6_cones_v238():
    by_faces = {e.faces: e for e in family("V238").cone_table}
    bad = [f"{a},{b}" for (a, b), lab in pv.CONES_238.items()
           if (a, b) not in by_faces or not entry_ok(by_faces[(a, b)], lab)]
    record(6, "V238 table (" + "; ".join(bad) + ")" if bad else "V238 table", not bad)
    assert not bad


# ---------------------------------------------------------------- 7

def test_criterion_7_mum():
    rd = family("V229").origin_residues
    W = hodge.weight_filtration(rd.matrices[0] + rd.matrices[1])
    check(7, {
        "mum_check V229 origin": gaussmanin.mum_check(rd),
        "graded (1,0,2,0,2,0,1)": W.graded == (1, 0, 2, 0, 2, 0, 1),
        "Hodge-Tate": hodge.is_hodge_tate(W),
    })


# ---------------------------------------------------------------- 8

def test_criterion_8_npoint():
    tab = family("V229").npoint
    K = tab.alg.field
    tab38 = family("V238").npoint
    check(8, {
        "K21 V229": tab.K((2, 1)) == rf("(-2*z1^2-z1*z2-z1+z2^2+2*z2+1)/(3*z1*(z1+z2-2))", K),
        "K12 V229": tab.K((1, 2)) == rf("(-2*z2^2-z1*z2-z2+z1^2+2*z1+1)/(3*z1*(z1+z2-2))", K),
        "K03 V229": tab.K((0, 3)) == rf("z2/z1", K),
        "K03 V238": tab38.K((0, 3)) == rf("z2*(1+3*z1+3*z1^2)/(27*(1+z2))", K),
    })


@pytest.mark.xfail(strict=True, reason="the printed first-order system integrates to c*z1*(z1+z2-2)/D_A, "
                                       "not c*z1/((z1+z2-2)*D_A)")
def test_criterion_8_closed_form_v229():
    f = family("V229")
    K = f.alg.field
    ok = f.closed_form.value(K) == rf("z1/((z1+z2-2)*((z1+z2+1)^3-27*z1*z2))", K)
    record(8, "closed form V229", ok)
    assert ok


@pytest.mark.xfail(strict=True, reason="the V238 relations give d_s K30 = -(d_s D_A/D_A) K30, so K30 = c/D_A")
def test_criterion_8_closed_form_v238():
    f = family("V238")
    K = f.alg.field
    ok = f.closed_form.value(K) == rf("(1+z1)^3+z1^3*z2", K)
    record(8, "closed form V238", ok)
    assert ok


# ---------------------------------------------------------------- 9

def test_criterion_9_symplectic():
    f229, f238, f286 = family("V229"), family("V238"), family("V286")
    pairs = [(f229.origin_residues.matrices, f229.intersection.normalized),
             (f238.origin_residues.matrices, f238.intersection.normalized),
             (f286.origin_residues.matrices, rat(pv.Q_286))]
    check(9, {
        "V229 Q(0) = printed up to c/12": f229.intersection.normalized == rat(pv.Q_229),
        "V229 printed Q polarizes printed N": all(hodge.polarization_check(N, pv.Q_229)
                                                  for N in (pv.N1_229, pv.N2_229)),
        "polarization for every fixture pair": all(hodge.polarization_check(N, Q) for Ns, Q in pairs for N in Ns),
    })


@pytest.mark.xfail(strict=True, reason="the printed V238 Q fails N^T Q + Q N = 0 against the printed N1, N2; "
                                       "the computed Q(0) exchanges the d1 and d2 frame slots")
def test_criterion_9_v238_printed_q():
    ok = family("V238").intersection.normalized == rat(pv.Q_238)
    record(9, "V238 Q(0) = printed up to c/9", ok)
    assert ok


# ---------------------------------------------------------------- 10

def test_criterion_10_moduli():
    f229, f238 = family("V229"), family("V238")
    s229 = toric.secondary_rays(f229.suspended.B)
    s238 = toric.secondary_rays(f238.suspended.B)
    check(10, {
        "phi_degree V229 = 2": f229.phi.degree == 2,
        "phi_degree V238 = 1": f238.phi.degree == 1,
        "Aut order 36 V229": f229.phi.aut_order == 36 and len(toric.aut_xi(f229.toric_data)) == 36,
        "secondary rays V229": set(s229.rays) == {(1, 0), (0, 1), (-1, -1)},
        "secondary rays V238": set(s238.rays) == {(1, 0), (0, 1), (1, -3), (-1, 0)},
        "moduli equality V229": toric.moduli_equality_check(f229.polytope),
        "moduli equality V238": toric.moduli_equality_check(f238.polytope),
    })


# ---------------------------------------------------------------- 11

def test_criterion_11_degrees():
    r229 = family("V229").degree_report()
    r286 = family("V286").degree_report()
    check(11, {
        "V229 degree 2 = 1 x 2": (r229.degree, r229.local, r229.flip) == (2, 1, 2),
        "V286 degree 1 = 1 x 1": (r286.degree, r286.local, r286.flip) == (1, 1, 1),
    })


@pytest.mark.xfail(strict=True, reason="the V238 origin cone type recurs at (D_v2,E3) with faces swapped, "
                                       "so the uniqueness premise fails and the degree is refused")
def test_criterion_11_degree_v238():
    try:
        rep = family("V238").degree_report()
        ok = rep.degree == 1
    except Refusal:
        ok = False
    record(11, "V238 degree 1", ok)
    assert ok


# ---------------------------------------------------------------- 12

PROPERTIES = [
    ("Ore associativity", props.test_ore_associativity),
    ("delta/partial round trip", props.test_delta_partial_round_trip),
    ("GB member reduction and idempotent normal form", props.test_gb_member_reduction_and_normal_form),
    ("connection flatness", props.test_connection_flatness),
    ("weight-filtration defining properties", props.test_weight_filtration_defining_properties),
    ("gauge round trip", props.test_gauge_round_trip_and_flatness),
    ("Q antisymmetry", props.test_pairing_antisymmetry),
    ("Leibniz consistency", props.test_leibniz_consistency),
    ("series annihilation through order 4", props.test_series_annihilation_through_order_4),
]


def test_criterion_12_property_suites():
    results = {}
    for name, fn in PROPERTIES:
        try:
            fn()
            results[name] = True
        except Exception:  # noqa: BLE001 - any failure counts against the criterion
            results[name] = False
    check(12, results)
