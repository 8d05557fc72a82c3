"""Gauss-Manin connection of a Picard-Fuchs ideal in a chosen frame.

Convention: for the frame w = (w_1, ..., w_m) of delta-monomials applied to
Omega, nabla_{delta_i} w = w . R_i, so column j of R_i holds the frame
coordinates of delta_i w_j.  Residues at a normal-crossing boundary point are
the constant terms R_i(0) once the frame is regular there.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .dmod import Exp, GroebnerBasis, LogDiffOp, OreAlgebra, normal_form, _delta_apply
from .exactalg import FieldMatrix, RatFun, render, to_fraction


class FrameError(ValueError):
    pass


class PoleError(ValueError):
    """The connection has a pole at the requested point: needs gauge normalization."""


@dataclass(frozen=True)
class Frame:
    monomials: tuple[Exp, ...]

    @property
    def hodge_levels(self) -> tuple[int, ...]:
        return tuple(sum(e) for e in self.monomials)

    def __len__(self):
        return len(self.monomials)

    def labels(self, dnames: Sequence[str] = ("d1", "d2")) -> list[str]:
        out = []
        for e in self.monomials:
            s = "*".join(d if k == 1 else f"{d}^{k}" for d, k in zip(dnames, e) if k)
            out.append(s or "1")
        return out

    @classmethod
    def of(cls, monomials: Sequence[Sequence[int]]) -> "Frame":
        mons = tuple(tuple(int(x) for x in m) for m in monomials)
        if not mons or any(mons[0]):
            raise FrameError("first frame element must be 1 (the section Omega)")
        return cls(mons)


def hodge_flag(levels: Sequence[int]) -> dict[int, list[int]]:
    """F^p spanned by frame indices with delta-order <= 3 - p."""
    return {p: [j for j, k in enumerate(levels) if k <= 3 - p] for p in range(4)}


@dataclass
class Connection:
    alg: OreAlgebra
    frame: Frame
    R: list[FieldMatrix]
    levels: tuple[int, ...] | None = None   # Hodge levels per frame vector (after gauges)
    flag: list[list[list[Any]]] | None = None  # optional explicit F^p bases (F^3..F^0) in frame coordinates

    @property
    def dim(self) -> int:
        return self.R[0].rows


def _coords(op: LogDiffOp, basis: Sequence[Exp], zero) -> list[Any]:
    idx = {e: i for i, e in enumerate(basis)}
    v = [zero] * len(basis)
    for e, c in op.terms.items():
        if e not in idx:
            raise FrameError(f"normal form has monomial {e} outside the staircase")
        v[idx[e]] = c
    return v


def connection(gb: GroebnerBasis, frame: Frame | Sequence[Sequence[int]] | None = None) -> Connection:
    """Connection matrices in ``frame`` (default: the staircase of gb).

    Any frame whose normal forms span the quotient is allowed; matrices are
    first computed in the staircase basis S and then moved to the frame by
    the transition matrix T (columns = NF(frame_j) in S).
    """
    alg = gb.alg
    K = alg.field
    st = gb.staircase()
    if st is None:
        raise FrameError("ideal is not holonomic: infinite staircase")
    if frame is None:
        frame = Frame.of(st)
    elif not isinstance(frame, Frame):
        frame = Frame.of(frame)
    if len(frame) != len(st):
        raise FrameError(f"frame has {len(frame)} elements but the rank is {len(st)}")
    cols = [_coords(normal_form(alg.monomial(w), gb), st, K.zero) for w in frame.monomials]
    T = FieldMatrix([list(r) for r in zip(*cols)], K.zero, K.one)
    try:
        Tinv = T.inverse()
    except ZeroDivisionError:
        raise FrameError("frame does not span the quotient module") from None
    R = []
    for i in range(alg.n):
        di = alg.delta(i)
        mcols = [_coords(normal_form(di * alg.monomial(w), gb), st, K.zero) for w in frame.monomials]
        M = FieldMatrix([list(r) for r in zip(*mcols)], K.zero, K.one)
        R.append(Tinv * M)
    return Connection(alg, frame, R, frame.hodge_levels)


def delta_matrix(M: FieldMatrix, i: int) -> FieldMatrix:
    e = [0] * len(M.one.field.gens)
    e[i] = 1
    return M.map(lambda f: _delta_apply(f, tuple(e)))


def flatness_check(c: Connection) -> bool:
    """delta_i R_j + R_i R_j == delta_j R_i + R_j R_i for all i < j (w -> w.R convention)."""
    n = len(c.R)
    for i, j in itertools.combinations(range(n), 2):
        Ri, Rj = c.R[i], c.R[j]
        if _is_ratfun_matrix(Ri) or _is_ratfun_matrix(Rj):
            lhs = delta_matrix(Rj, i) + Ri * Rj
            rhs = delta_matrix(Ri, j) + Rj * Ri
        else:
            lhs, rhs = Rj * Ri, Ri * Rj
        if not (lhs - rhs).is_zero():
            return False
    return True


def _is_ratfun_matrix(M: FieldMatrix) -> bool:
    return not isinstance(M.one, (Fraction, int))


def gauge(c: Connection, g: FieldMatrix, levels: Sequence[int] | None = None) -> Connection:
    """New frame w' = w g: R_i -> g^-1 R_i g + g^-1 delta_i(g)."""
    try:
        ginv = g.inverse()
    except ZeroDivisionError:
        raise FrameError("singular gauge matrix") from None
    R = [ginv * Ri * g + ginv * delta_matrix(g, i) for i, Ri in enumerate(c.R)]
    flag = None
    if c.flag is not None or levels is None:
        base = c.flag if c.flag is not None else _flag_vectors(c)
        flag = [[_apply(ginv, v) for v in Fp] for Fp in base]
    return Connection(c.alg, c.frame, R, tuple(levels) if levels is not None else None, flag)


def _apply(M: FieldMatrix, v):
    out = []
    for r in M.entries:
        acc = M.zero
        for a, b in zip(r, v):
            if a and b:
                acc = acc + a * b
        out.append(acc)
    return out


def _flag_vectors(c: Connection) -> list[list[list[Any]]]:
    """Bases of F^3, F^2, F^1, F^0 in frame coordinates."""
    K = c.alg.field
    levels = c.levels if c.levels is not None else c.frame.hodge_levels
    out = []
    for p in (3, 2, 1, 0):
        idx = [j for j, k in enumerate(levels) if k <= 3 - p]
        out.append([[K.one if t == j else K.zero for t in range(c.dim)] for j in idx])
    return out


# ---------------------------------------------------------------- residues

def evaluate_at(f: RatFun, point: Sequence[Any]) -> Fraction:
    """Value of a rational function at a rational point (PoleError if the denominator vanishes)."""
    from .exactalg import qq
    K = f.field
    pt = [qq(p) for p in point]

    def ev(p):
        acc = Fraction(0)
        for m, c in p.iterterms():
            t = to_fraction(c)
            for x, k in zip(pt, m):
                if k:
                    t *= to_fraction(x) ** k
            acc += t
        return acc
    d = ev(f.denom)
    if d == 0:
        raise PoleError("pole at the boundary point")
    return ev(f.numer) / d


def evaluate_matrix(M: FieldMatrix, point: Sequence[Any]) -> FieldMatrix:
    return FieldMatrix([[evaluate_at(x, point) for x in r] for r in M.entries])


@dataclass
class ResidueData:
    chart: str
    point: tuple[Fraction, ...]
    matrices: list[FieldMatrix]
    eigenvalues: list[list[Fraction]]
    unipotent: bool
    F_limit: list[list[list[Fraction]]] | None = None   # bases of F^3, F^2, F^1, F^0
    notes: list[str] = field(default_factory=list)
    gauge_exponents: list[tuple[int, ...]] | None = None

    @property
    def nilpotents(self) -> list[FieldMatrix]:
        return self.matrices


def _rational_eigenvalues(M: FieldMatrix) -> list[Fraction]:
    """Rational roots (with multiplicity) of the characteristic polynomial; irrational part omitted."""
    from sympy import Matrix, Rational, roots, symbols
    x = symbols("x")
    mat = Matrix([[Rational(a.numerator, a.denominator) for a in r] for r in M.entries])
    cp = mat.charpoly(x)
    out = []
    for rt, mult in roots(cp, x, filter="Q").items():
        out.extend([Fraction(int(rt.p), int(rt.q))] * mult)
    return sorted(out)


def residues(c: Connection, point: Sequence[Any] | None = None, chart: str = "origin") -> ResidueData:
    """N_i = R_i(point); PoleError if some entry has a pole there."""
    point = tuple(Fraction(p) for p in (point or [0] * len(c.R)))
    mats = [evaluate_matrix(R, point) for R in c.R]
    eig = [_rational_eigenvalues(M) for M in mats]
    dim = mats[0].rows
    unip = all(len(e) == dim and all(x == 0 for x in e) for e in eig)
    flag = None
    if c.flag is not None:
        flag = [[[evaluate_at(x, point) for x in v] for v in Fp] for Fp in c.flag]
    else:
        levels = c.levels if c.levels is not None else c.frame.hodge_levels
        flag = []
        for p in (3, 2, 1, 0):
            idx = [j for j, k in enumerate(levels) if k <= 3 - p]
            flag.append([[Fraction(1) if t == j else Fraction(0) for t in range(dim)] for j in idx])
    return ResidueData(chart, point, mats, eig, unip, flag)


def commute(A: FieldMatrix, B: FieldMatrix) -> bool:
    return (A * B - B * A).is_zero()


def mum_matrix(N: Sequence[FieldMatrix], W) -> FieldMatrix | None:
    """m with N_i e_j = m_ij e_0, e_0 spanning W_0 and e_j completing W_2."""
    from .hodge import span_basis
    W0 = W.subspace(0)
    W2 = W.subspace(2)
    if len(W0) != 1:
        return None
    e0 = W0[0]
    extra = span_basis(W2, W0)
    r = len(N)
    if len(extra) != r:
        return None
    rows = []
    for Ni in N:
        row = []
        for ej in extra:
            v = _apply(Ni, ej)
            # v must be a multiple of e0
            k = next((t for t, x in enumerate(e0) if x != 0), None)
            m = v[k] / e0[k]
            if any(v[t] != m * e0[t] for t in range(len(v))):
                return None
            row.append(m)
        rows.append(row)
    return FieldMatrix(rows)


def mum_check(rd: ResidueData) -> bool:
    """Hodge-Tate of full depth and invertible m-matrix (maximal unipotent monodromy)."""
    from .hodge import weight_filtration, is_hodge_tate
    if not rd.unipotent:
        raise ValueError("mum_check needs unipotent residues")
    N = rd.matrices
    total = N[0]
    for M in N[1:]:
        total = total + M
    W = weight_filtration(total)
    if not is_hodge_tate(W) or W.graded[0] != 1:
        return False
    m = mum_matrix(N, W)
    if m is None:
        return False
    return m.rank() == len(N)


# ---------------------------------------------------------------- boundary monodromy along curves
#
# Local monodromy around a boundary divisor (or a normal-crossing corner)
# is read off from the connection restricted to a small holomorphic curve
# x -> z(x) meeting the boundary at x = 0.  The section Omega generates a
# scalar ODE in theta = x d/dx whose Frobenius basis at x = 0 carries the
# log-monodromy N as d/d(log x) and whose leading l-free coefficients
# give the limit F^3 line as a functional on the solution space.

class CurveError(ValueError):
    pass


def _curve_field():
    from .exactalg import ratfun_field
    return ratfun_field(("x",))


@dataclass(frozen=True)
class Curve:
    """Line w = point + x*direction in a chart's coordinates."""
    point: tuple[Fraction, ...]
    direction: tuple[Fraction, ...]

    @classmethod
    def of(cls, point: Sequence[Any], direction: Sequence[Any]) -> "Curve":
        return cls(tuple(Fraction(p) for p in point), tuple(Fraction(d) for d in direction))

    def z_images(self, chart, alg: OreAlgebra) -> list[RatFun]:
        """Original coordinates along the curve, as rational functions of x."""
        from .dmod import _substitute
        from .exactalg import qq
        Kx = _curve_field()
        x = Kx.gens[0]
        _, z = chart.images(alg) if chart is not None else (alg, list(alg.field.gens))
        w = [Kx(qq(p)) + x * Kx(qq(d)) for p, d in zip(self.point, self.direction)]
        return [_substitute(zj, w, Kx) for zj in z]


def curve_ode(c: Connection, z_of_x: Sequence[RatFun]) -> list[Any]:
    """Coefficients a_0..a_m (polynomials in x) of sum_k a_k theta^k annihilating Omega's periods."""
    from .dmod import _substitute
    Kx = _curve_field()
    x = Kx.gens[0]
    n = c.dim
    A = None
    for zj, R in zip(z_of_x, c.R):
        if not zj:
            raise CurveError("curve lies in a coordinate hyperplane")
        om = zj.diff(x) * x / zj
        if not om:
            continue
        Rj = FieldMatrix([[_substitute(e, z_of_x, Kx) if e else Kx.zero for e in r] for r in R.entries],
                         Kx.zero, Kx.one)
        A = Rj.scale(om) if A is None else A + Rj.scale(om)
    if A is None:
        raise CurveError("constant curve")
    vecs = [[Kx.one if i == 0 else Kx.zero for i in range(n)]]
    for k in range(n):
        v = vecs[-1]
        Av = _apply(A, v)
        vecs.append([x * e.diff(x) + a for e, a in zip(v, Av)])
        M = FieldMatrix([[vecs[t][i] for t in range(len(vecs))] for i in range(n)], Kx.zero, Kx.one)
        ns = M.nullspace()
        if ns:
            if k + 1 < n:
                raise CurveError(f"Omega satisfies an order-{k + 1} equation on this curve")
            return _clear_denominators(ns[0])
    raise CurveError("no relation found")


def _clear_denominators(vec: Sequence[RatFun]) -> list[Any]:
    Kx = _curve_field()
    den = Kx.ring.one
    for a in vec:
        den = den.lcm(a.denom)
    out = []
    for a in vec:
        b = a * Kx(den)
        out.append(b.numer.quo_ground(b.denom.LC))
    lead = out[-1]
    return [p.quo_ground(lead.LC) if p else p for p in out]


def _coeff(p, k: int) -> Fraction:
    if not p or k < 0:
        return Fraction(0)
    return to_fraction(dict(p.terms()).get((k,), 0))


def _peval(coeffs: Sequence[Fraction], a: Fraction, mu: int) -> list[list[Fraction]]:
    """p(a I + S) for p = sum coeffs[k] t^k and S the upper shift of size mu."""
    from math import comb
    m = [[Fraction(0)] * mu for _ in range(mu)]
    for i in range(mu):
        s = sum((cf * comb(k, i) * a ** (k - i) for k, cf in enumerate(coeffs) if k >= i), Fraction(0))
        for r in range(mu - i):
            m[r][r + i] += s
    return m


@dataclass
class LocalMonodromy:
    """Frobenius data at x = 0 of the restricted equation."""
    exponents: list[Fraction]
    classes: dict[Fraction, list[Fraction]]
    unipotent: bool
    N: FieldMatrix                      # log-monodromy on the solution basis (unipotent part)
    f3: list[Fraction]                  # limit F^3 functional on the solution basis
    ode: list[Any] = field(default_factory=list, repr=False)

    @property
    def ranks(self) -> tuple[int, ...]:
        from .hodge import rank_profile
        return rank_profile(self.N)

    def f3_weight(self) -> int:
        from .hodge import f3_weight_of
        return f3_weight_of(self.N, self.f3)


def frobenius_monodromy(ode: Sequence[Any]) -> LocalMonodromy:
    """Exponents, log-monodromy and limit F^3 functional of sum_k a_k(x) theta^k at x = 0."""
    from sympy import Poly, roots, symbols
    order = len(ode) - 1
    v = min(min(m[0] for m in p.monoms()) for p in ode if p)
    top = max(p.degree() for p in ode if p)
    span = top - v

    def pm(m: int) -> list[Fraction]:
        return [_coeff(p, v + m) for p in ode]

    t = symbols("t")
    p0 = pm(0)
    if not any(p0):
        raise CurveError("empty indicial polynomial")
    rts = roots(Poly(list(reversed(p0)), t, domain="QQ"), filter=None)
    exps: list[Fraction] = []
    for r, mult in rts.items():
        if not r.is_rational:
            raise CurveError(f"irrational local exponent {r}")
        exps += [Fraction(int(r.p), int(r.q))] * mult
    if len(exps) != order:
        raise CurveError("x = 0 is not a regular singular point of full order")
    classes: dict[Fraction, list[Fraction]] = {}
    for e in sorted(exps):
        classes.setdefault(e - (e.numerator // e.denominator), []).append(e)

    blocks = []
    for key in sorted(classes):
        lst = classes[key]
        mu, rho = len(lst), min(lst)
        K = int(max(lst) - rho)
        M = K + 1
        nunk = (M + 1) * mu
        rows: list[list[Fraction]] = []
        for n2 in range(M + 1):
            block = [[Fraction(0)] * nunk for _ in range(mu)]
            for m in range(0, min(n2, span) + 1):
                P = _peval(pm(m), rho + n2 - m, mu)
                n = n2 - m
                for r in range(mu):
                    for k in range(mu):
                        block[r][n * mu + k] += P[r][k]
            rows += block
        sols = FieldMatrix(rows).nullspace()
        if len(sols) != mu:
            raise CurveError(f"expected {mu} Frobenius solutions in class {key}, found {len(sols)}")
        blocks.append((rho, mu, M, [list(s) for s in sols]))

    nsol = sum(len(b[3]) for b in blocks)
    Nm = [[Fraction(0)] * nsol for _ in range(nsol)]
    off = 0
    for rho, mu, M, sols in blocks:
        A = FieldMatrix([[s[i] for s in sols] for i in range(len(sols[0]))])
        for bi, s in enumerate(sols):
            shifted = [Fraction(0)] * len(s)
            for n in range(M + 1):
                for k in range(mu - 1):
                    shifted[n * mu + k] = s[n * mu + k + 1]
            from .exactalg import solve_linear
            sol = solve_linear(A, shifted)
            if not sol.consistent:
                raise CurveError("log-derivative of a solution left the solution space")
            for j, cj in enumerate(sol.particular):
                Nm[off + bi][off + j] = cj
        off += len(sols)
    # leading l-free coefficient at the smallest exponent that occurs
    best = None
    for rho, mu, M, sols in blocks:
        for s in sols:
            n = next((n for n in range(M + 1) if s[n * mu]), None)
            if n is not None and (best is None or rho + n < best):
                best = rho + n
    f3 = []
    for rho, mu, M, sols in blocks:
        for s in sols:
            n = best - rho
            ok = n.denominator == 1 and 0 <= n <= M
            f3.append(s[int(n) * mu] if ok else Fraction(0))
    unip = all(e.denominator == 1 for e in exps)
    return LocalMonodromy(exps, classes, unip, FieldMatrix(Nm), f3, list(ode))


def curve_monodromy(c: Connection, chart, curve: Curve) -> LocalMonodromy:
    return frobenius_monodromy(curve_ode(c, curve.z_images(chart, c.alg)))


# generic transversal parameters, tried in order until Omega is cyclic on the curve
GENERIC_OFFSETS = (Fraction(1, 7), Fraction(2, 11), Fraction(-3, 13), Fraction(5, 17))
GENERIC_SLOPES = ((Fraction(1), Fraction(2)), (Fraction(2), Fraction(3)), (Fraction(1), Fraction(-3)),
                  (Fraction(3), Fraction(5)))


def default_curves(kind: str) -> list[Curve]:
    if kind == "left":      # crosses w1 = 0 at a generic point of it
        return [Curve.of((0, t), (1, 0)) for t in GENERIC_OFFSETS]
    if kind == "right":
        return [Curve.of((t, 0), (0, 1)) for t in GENERIC_OFFSETS]
    if kind == "corner":
        return [Curve.of((0, 0), d) for d in GENERIC_SLOPES]
    raise ValueError(f"unknown curve kind {kind}")


def boundary_monodromy(c: Connection, chart, kind: str, curves: Sequence[Curve] | None = None) -> LocalMonodromy:
    """Monodromy around a chart axis ("left": w1 = 0, "right": w2 = 0) or the corner."""
    last: Exception | None = None
    for cv in (curves or default_curves(kind)):
        try:
            return curve_monodromy(c, chart, cv)
        except CurveError as exc:
            last = exc
    raise CurveError(f"no admissible curve for {kind}: {last}")


# ---------------------------------------------------------------- chart pull-back and normalization

def pull_back(c: Connection, chart) -> Connection:
    """Connection in chart coordinates: R'_i = sum_j (w_i dz_j/dw_i / z_j) R_j(z(w))."""
    from .dmod import _substitute
    tgt, z = chart.images(c.alg)
    K = tgt.field
    R = []
    for i in range(tgt.n):
        acc = None
        for j, Rj in enumerate(c.R):
            om = K.gens[i] * z[j].diff(K.gens[i]) / z[j]
            if not om:
                continue
            Mj = FieldMatrix([[_substitute(e, z, K) if e else K.zero for e in r] for r in Rj.entries],
                             K.zero, K.one).scale(om)
            acc = Mj if acc is None else acc + Mj
        R.append(acc if acc is not None else FieldMatrix.zeros(c.dim, c.dim, K.zero, K.one))
    return Connection(tgt, c.frame, R, c.levels, c.flag)


def normalize_boundary(c: Connection, chart=None) -> ResidueData:
    """Residue pair at the chart origin after pulling back.

    Integer eigenvalue pairs are not shifted automatically; a pole that
    survives in the pulled-back frame, or a non-commuting pair, is
    reported as PoleError / FrameError so callers fall back to
    boundary_monodromy along curves.
    """
    cc = pull_back(c, chart) if chart is not None else c
    rd = residues(cc, chart=getattr(chart, "name", "origin"))
    if not commute(rd.matrices[0], rd.matrices[1]):
        raise FrameError("residues do not commute in this chart")
    if not rd.unipotent:
        rd.notes.append("non-unipotent: finite monodromy factor, eigenvalues reported")
    return rd
