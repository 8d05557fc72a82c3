from __future__ import annotations

from fractions import Fraction

import pytest

from periodscope import dmod
from periodscope.dmod import Chart, OreAlgebra
from periodscope.exactalg import parse_poly, poly_ring
from periodscope.pipeline import family

ALG = OreAlgebra(("z1", "z2"))
P = ALG.parse
Z = ("z1", "z2")
R = poly_ring(Z)


def p229_gkz():
    c = "(3*d1+3*d2+1)*(3*d1+3*d2+2)*(3*d1+3*d2+3)"
    return [P(f"d1^3 + z1*{c}"), P(f"d2^3 + z2*{c}")]


def p229_pf():
    c = "(d1+d2+1/3)*(d1+d2+2/3)"
    return [P(f"d1^3 + z1*{c}*(d1+d2+1)"), P(f"d1^2-d1*d2+d2^2 + (z1+z2)*{c}")]


def test_multiply_defining_relation():
    assert ALG.delta(0) * ALG.z(0) == P("z1*d1 + z1")


def test_multiply_linearity():
    assert P("d1+d2") * P("z1+z2") == P("(z1+z2)*(d1+d2) + z1 + z2")


def test_pf_factor_identity_v229():
    g1, g2 = [dmod.rescale(op, (27, 27)) for op in p229_gkz()]
    _, pf2 = p229_pf()
    assert P("d1+d2") * pf2 == g1 + g2


def test_box_operator():
    b = dmod.box_operator((1, 0, 0, 0, 1, 1, -3))
    assert b.terms == {(1, 0, 0, 0, 1, 1, 0): 1, (0, 0, 0, 0, 0, 0, 3): -1}
    b = dmod.box_operator((1, -1))
    assert b.terms == {(1, 0): 1, (0, 1): -1}
    b = dmod.box_operator((0, 1, 1, 1, 0, 0, -3))
    assert b.terms == {(0, 1, 1, 1, 0, 0, 0): 1, (0, 0, 0, 0, 0, 0, 3): -1}


def test_box_operator_rejects_zero():
    with pytest.raises(ValueError):
        dmod.box_operator((0, 0))


def test_gkz_v229():
    assert family("V229").gkz_ops == p229_gkz()


def test_gkz_v238_first_operator_has_factor_d1():
    printed = P("d1*(d1-3*d2) + 3*z1*(3*d1+1)*(3*d1+2)")
    g1 = family("V238").gkz_ops[0]
    assert g1.canonical() == (P("d1") * printed).canonical()


def test_gkz_one_relation():
    (op,) = dmod.gkz_operators([[1, 1, -2]], 2, names=("z",))
    a = OreAlgebra(("z",))
    expected = a.parse("d1^2 - z*(2*d1+1)*(2*d1+2)")
    assert op.canonical() == expected.canonical()


def test_gkz_rejects_unsuspended_rows():
    with pytest.raises(ValueError):
        dmod.gkz_operators([[1, 1, -1]], 2)


def test_rescale():
    assert dmod.rescale(p229_gkz()[0], (27, 27)) == p229_pf()[0]
    op = p229_gkz()[1]
    assert dmod.rescale(op, (1, 1)) == op
    with pytest.raises(ValueError):
        dmod.rescale(op, (0, 1))


def test_rescale_v238():
    pf = family("V238").pf_ops
    expected = [
        P("d1*(d1-3*d2) + z1*(d1+1/3)*(d1+2/3)"),
        P("d2^3 - z2*(d1/3-d2)*(d1/3-d2-1/3)*(d1/3-d2-2/3)"),
    ]
    assert [op.canonical() for op in pf] == [op.canonical() for op in expected]


def test_change_chart_delta_map():
    # z1 = s t^3, z2 = t
    ch = Chart("st", exponents=((1, 0), (3, 1)), names=("s", "t"))
    d1, d2 = dmod.change_chart([ALG.delta(0), ALG.delta(1)], ch)
    T = OreAlgebra(("s", "t"))
    assert d1 == T.delta(0)
    assert d2 == T.delta(1) - T.delta(0) * 3


def test_change_chart_identity():
    ops = p229_pf()
    assert dmod.change_chart(ops, Chart("id")) == ops


def test_change_chart_v238_cover():
    ch = Chart("c", exponents=((1, 0), (1, -3)), names=("z1", "z2"))
    (op,) = dmod.change_chart([P("d1*(d1-3*d2) + 3*z1*(3*d1+1)*(3*d1+2)")], ch)
    assert op == P("d1*d2 + 3*z1*z2*(3*d1+1)*(3*d1+2)")


def test_change_chart_rejects_singular():
    with pytest.raises(ValueError):
        dmod.change_chart(p229_pf(), Chart("bad", exponents=((1, 1), (1, 1))))


def test_groebner_trivial():
    gb = dmod.groebner([ALG.delta(0), ALG.delta(1)])
    assert set(gb.gens) == {ALG.delta(0), ALG.delta(1)}
    assert gb.staircase() == [(0, 0)]
    assert dmod.holonomic_rank(gb) == 1


def test_groebner_one_variable():
    a = OreAlgebra(("z",))
    gb = dmod.groebner([a.parse("d1^2 - z")])
    assert gb.staircase() == [(0,), (1,)]
    assert dmod.holonomic_rank(gb) == 2


def test_groebner_v229_rank_and_members():
    gb = dmod.groebner(p229_pf())
    st = gb.staircase()
    assert len(st) == 6
    assert dmod.holonomic_rank(gb) == 6
    for g in p229_pf():
        assert not dmod.normal_form(g, gb)
    assert dmod.normal_form(ALG.one(), gb) == ALG.one()


def test_groebner_resource_cap():
    with pytest.raises(dmod.ResourceError):
        dmod.groebner(p229_pf(), max_pairs=1)


def test_holonomic_rank_v238():
    assert dmod.holonomic_rank(family("V238").gb) == 6


def test_not_holonomic():
    gb = dmod.groebner([ALG.delta(0)])
    with pytest.raises(dmod.NotHolonomic):
        dmod.holonomic_rank(gb)


def test_normal_form_of_d1_cubed():
    # P1 expands as (1+z1) d1^3 + z1 (3 d1^2 d2 + 3 d1 d2^2 + d2^3) + lower order
    p1 = p229_pf()[0]
    top = P("(1+z1)*d1^3 + z1*(3*d1^2*d2 + 3*d1*d2^2 + d2^3)")
    assert (p1 - top).order() <= 2
    gb = dmod.groebner(p229_pf())
    K = ALG.field
    nf = dmod.normal_form(P("d1^3"), gb)
    rest = dmod.normal_form((p1 - P("(1+z1)*d1^3")).scale_left(-K.one / (1 + K.gens[0])), gb)
    assert nf == rest
    assert dmod.normal_form(nf, gb) == nf


def test_pf_from_gkz_v229():
    res = family("V229").pf_search
    assert res.rank == 6
    assert res.factor == P("d1+d2")
    assert [dmod.rescale(op, (27, 27)).canonical() for op in res.ops] == [op.canonical() for op in p229_pf()]


def test_pf_from_gkz_identity_when_rank_already_right():
    res = dmod.pf_from_gkz(p229_pf())
    assert res.factor is None
    assert res.ops == p229_pf()


def test_discriminant_v229():
    d = dmod.char_discriminant(p229_pf())
    assert parse_poly("(z1+z2+1)^3-27*z1*z2", Z) in d.components


def test_discriminant_v238():
    d = family("V238").discriminant
    expected = {parse_poly("(1+z1)^3+z1^3*z2", Z), parse_poly("1+z2", Z)}
    assert set(d.components) == expected


def test_discriminant_constant_symbols():
    d = dmod.char_discriminant([P("d1^2"), P("d2")])
    assert d.components == []


def test_series_order_zero():
    s = dmod.series_solution(p229_gkz(), 0)
    assert s.coeffs == {(0, 0): Fraction(1)}


def test_series_v229_first_coefficients():
    s = dmod.series_solution(p229_gkz(), 3)
    assert s.coefficient((1, 0)) == -6
    assert s.coefficient((0, 1)) == -6
    for op in p229_gkz():
        res = dmod.apply_to_series(op, s)
        assert all(sum(m) > 3 for m in res)


def test_delta_partial_round_trip_example():
    op = P("z1^2*d1^3 - d1*d2 + 5")
    assert dmod.from_partial(dmod.to_partial(op)) == op
