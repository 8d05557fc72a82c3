from __future__ import annotations

from fractions import Fraction

import pytest

from reference_values import N1_229, N1_238, N2_229, N2_238
from periodscope import dmod, gaussmanin
from periodscope.dmod import OreAlgebra
from periodscope.exactalg import FieldMatrix
from periodscope.gaussmanin import Connection, Frame
from periodscope.pipeline import family

ALG = OreAlgebra(("z1", "z2"))
K = ALG.field
z1, z2 = K.gens


def rat(M):
    return FieldMatrix.rational(M)


def const_connection(R1, R2):
    n = len(R1)
    frame = Frame.of([[0, 0]] + [[k, 0] for k in range(1, n)])
    return Connection(ALG, frame, [FieldMatrix.over(K, R1), FieldMatrix.over(K, R2)])


def test_connection_r1_pattern_v229():
    c = family("V229").connection
    R1 = c.R[0]
    for (i, j) in [(1, 0), (3, 2), (4, 1), (5, 3)]:
        assert R1[i, j] == 1
    for j in range(4):
        assert sum(1 for i in range(6) if R1[i, j]) == 1
    # columns 5 and 6 carry the z1-proportional entries
    at_z1_zero = gaussmanin.evaluate_matrix(R1, (0, Fraction(1, 5)))
    assert all(at_z1_zero[i, j] == 0 for i in range(6) for j in (4, 5))


def test_connection_r2_entry_v229():
    R2 = family("V229").connection.R[1]
    assert gaussmanin.evaluate_at(R2[4, 2], (0, 0)) == -1


def test_connection_trivial_ideal():
    gb = dmod.groebner([ALG.delta(0), ALG.delta(1)])
    c = gaussmanin.connection(gb, [[0, 0]])
    assert all(R.is_zero() for R in c.R)
    assert gaussmanin.flatness_check(c)


def test_connection_rejects_wrong_frame_size():
    with pytest.raises(gaussmanin.FrameError):
        gaussmanin.connection(family("V229").gb, [[0, 0], [1, 0]])


def test_frame_must_start_with_one():
    with pytest.raises(gaussmanin.FrameError):
        Frame.of([[1, 0], [0, 0]])


def test_flatness_v229_v238():
    assert gaussmanin.flatness_check(family("V229").connection)
    assert gaussmanin.flatness_check(family("V238").connection)


def test_flatness_zero_and_noncommuting():
    Z = [[0, 0], [0, 0]]
    assert gaussmanin.flatness_check(const_connection(Z, Z))
    assert not gaussmanin.flatness_check(const_connection([[0, 1], [0, 0]], [[0, 0], [1, 0]]))


def test_residues_origin_v229():
    rd = family("V229").origin_residues
    assert rd.unipotent
    assert rd.matrices == [rat(N1_229), rat(N2_229)]


def test_residues_origin_v238():
    rd = family("V238").origin_residues
    assert rd.matrices == [rat(N1_238), rat(N2_238)]
    N1 = rd.matrices[0]
    assert N1[3, 1] == 3 and N1[5, 3] == 3
    assert N1[1, 0] == 1 and N1[3, 2] == 1 and N1[5, 4] == 1


def test_residues_zero_connection():
    Z = [[0] * 3 for _ in range(3)]
    rd = gaussmanin.residues(const_connection(Z, Z))
    assert all(M.is_zero() for M in rd.matrices)
    assert rd.unipotent


def test_residue_pole_is_reported():
    with pytest.raises(gaussmanin.PoleError):
        gaussmanin.residues(family("V229").connection, (Fraction(1, 8), Fraction(-27, 8)))


def test_residues_commute():
    rd = family("V229").origin_residues
    assert gaussmanin.commute(*rd.matrices)


def test_gauge_identity_and_round_trip():
    c = family("V229").connection
    assert gaussmanin.gauge(c, FieldMatrix.identity(6, K.zero, K.one)).R == c.R
    g = FieldMatrix([[z1 if (i == j and i >= 3) else (K.one if i == j else K.zero) for j in range(6)]
                     for i in range(6)], K.zero, K.one)
    back = gaussmanin.gauge(gaussmanin.gauge(c, g), g.inverse())
    assert back.R == c.R


def test_scalar_gauge_shifts_by_log_derivative():
    c = family("V238").connection
    f = 1 + z1 * z2
    g = FieldMatrix.identity(6, K.zero, K.one).scale(f)
    cg = gaussmanin.gauge(c, g)
    for i, (R, Rg) in enumerate(zip(c.R, cg.R)):
        e = (1, 0) if i == 0 else (0, 1)
        shift = ALG.delta_of(f, e) / f
        assert Rg == R + FieldMatrix.identity(6, K.zero, K.one).scale(shift)


def test_gauge_rejects_singular():
    c = family("V229").connection
    with pytest.raises(gaussmanin.FrameError):
        gaussmanin.gauge(c, FieldMatrix.zeros(6, 6, K.zero, K.one))


def test_normalize_nilpotent_constant_residues():
    N1 = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
    N2 = [[0, 0, 0], [2, 0, 0], [0, 2, 0]]
    rd = gaussmanin.normalize_boundary(const_connection(N1, N2))
    assert rd.unipotent
    assert rd.matrices == [rat(N1), rat(N2)]


def test_finite_monodromy_around_dv3():
    lm = family("V229").chart_monodromy("v3", "left")
    assert not lm.unipotent
    assert any(x.denominator != 1 for x in lm.exponents)


def test_mum_check():
    assert gaussmanin.mum_check(family("V229").origin_residues)
    Z = [[0] * 6 for _ in range(6)]
    assert not gaussmanin.mum_check(gaussmanin.residues(const_connection(Z, Z)))


def test_mum_check_v238_origin():
    # the m-matrix of the origin residues is invertible here as well
    assert gaussmanin.mum_check(family("V238").origin_residues)


def test_nilpotency_orders():
    N1, N2 = family("V229").origin_residues.matrices
    assert (N1 * N1 * N1).is_zero()
    M1, _ = family("V238").origin_residues.matrices
    assert not (M1 * M1 * M1).is_zero()
    assert (M1 * M1 * M1 * M1).is_zero()
