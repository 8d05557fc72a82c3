"""n-point functions, the Yukawa coupling and the intersection form.

Pairings are written <a|b> = int delta^a Omega ^ delta^b Omega for
delta-multi-indices a, b; K^e = <0|e>.  Integration by parts gives

    <a|b> = sum_{c <= a} (-1)^{|c|} binom(a, c) delta^{a-c} K^{b+c},

and each K^e is a Q(z)-combination of the K^s over the order-3 staircase
monomials s (lower staircase entries vanish by transversality).  Relations
become linear constraints on jets delta^d K^s; eliminating them yields the
first-order system delta_s K^{3,0} = rho_s K^{3,0}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Sequence

from .dmod import Exp, GroebnerBasis, LogDiffOp, OreAlgebra, _delta_apply, normal_form
from .exactalg import FieldMatrix, RatFun, exact_div, mpoly_gcd, render, solve_linear, to_fraction
from .gaussmanin import evaluate_at


class NPointError(ValueError):
    pass


def _add(a: Exp, b: Exp) -> Exp:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Exp, b: Exp) -> Exp:
    return tuple(x - y for x, y in zip(a, b))


def _unit(n: int, i: int) -> Exp:
    return tuple(int(j == i) for j in range(n))


def _below(e: Exp):
    return itertools.product(*(range(k + 1) for k in e))


def _binom(a: Exp, c: Exp) -> int:
    out = 1
    for x, y in zip(a, c):
        out *= comb(x, y)
    return out


def multi_indices(n: int, order: int) -> list[Exp]:
    """All exponent vectors of total degree <= order, graded then reverse-lex."""
    out = []
    for d in range(order + 1):
        out.extend(sorted((e for e in itertools.product(range(d + 1), repeat=n) if sum(e) == d), reverse=True))
    return out


def transversal_zero(a: Exp, b: Exp, weight: int = 3) -> bool:
    """F^p ^ F^q = 0 for p + q > weight, with delta^k Omega in F^{weight-k}."""
    return (weight - sum(a)) + (weight - sum(b)) > weight


# ---------------------------------------------------------------- relations

Term = tuple[Exp, Exp, Exp]   # (c, a, b) stands for delta^c <a|b>


@dataclass
class Relation:
    kind: str
    terms: dict[Term, RatFun]

    def render(self) -> str:
        parts = []
        for (c, a, b), f in sorted(self.terms.items()):
            d = "".join(f"d{i + 1}^{k}" for i, k in enumerate(c) if k)
            parts.append(f"({render(f)})*{d}<{','.join(map(str, a))}|{','.join(map(str, b))}>")
        return " + ".join(parts) + " = 0"


def _drop_zero(terms: dict[Term, RatFun]) -> dict[Term, RatFun]:
    return {t: f for t, f in terms.items() if f and not transversal_zero(t[1], t[2])}


def generate_relations(pf: Sequence[LogDiffOp], max_order: int = 5) -> list[Relation]:
    """Operator, Leibniz and antisymmetry relations among pairings of total order <= max_order."""
    alg = pf[0].alg
    n = alg.n
    K = alg.field
    zero = (0,) * n
    out: list[Relation] = []
    for P in pf:
        p = P.order()
        for w in multi_indices(n, max_order - p):
            op = alg.monomial(w) * P
            for u in multi_indices(n, max_order - p - sum(w)):
                terms = _drop_zero({(zero, u, e): f for e, f in op.terms.items()})
                if terms:
                    out.append(Relation("operator", terms))
    idx = multi_indices(n, max_order)
    for u in idx:
        for v in idx:
            if sum(u) + sum(v) + 1 > max_order:
                continue
            for s in range(n):
                es = _unit(n, s)
                terms: dict[Term, RatFun] = {}
                if not transversal_zero(u, v):
                    terms[(es, u, v)] = K.one
                for t in ((zero, _add(u, es), v), (zero, u, _add(v, es))):
                    if not transversal_zero(t[1], t[2]):
                        terms[t] = terms.get(t, K.zero) - K.one
                terms = {t: f for t, f in terms.items() if f}
                if terms:
                    out.append(Relation("leibniz", terms))
    for u, v in itertools.combinations(idx, 2):
        if sum(u) + sum(v) <= max_order and not transversal_zero(u, v):
            out.append(Relation("antisymmetry", {(zero, u, v): K.one, (zero, v, u): K.one}))
    return out


# ---------------------------------------------------------------- jets

Jet = tuple[int, Exp]   # (unknown index t, derivative multi-index d): delta^d F_t


class _JetSpace:
    """Rewrites pairings as Q(z)-combinations of jets of the order-3 unknowns."""

    def __init__(self, gb: GroebnerBasis):
        self.gb = gb
        self.alg = gb.alg
        self.K = self.alg.field
        st = gb.staircase()
        if st is None:
            raise NPointError("ideal is not holonomic")
        self.staircase = list(st)
        self.unknowns = sorted((s for s in st if sum(s) >= 3), key=lambda s: (sum(s), s), reverse=True)
        if any(sum(s) > 3 for s in self.unknowns):
            raise NPointError("staircase has monomials beyond order 3: the frame is not of Calabi-Yau type")
        self._nf: dict[Exp, dict[int, RatFun]] = {}
        self._dcache: dict[tuple[RatFun, Exp], RatFun] = {}

    def nf(self, e: Exp) -> dict[int, RatFun]:
        if e not in self._nf:
            op = normal_form(self.alg.monomial(e), self.gb)
            self._nf[e] = {t: op.terms[s] for t, s in enumerate(self.unknowns) if s in op.terms}
        return self._nf[e]

    def dz(self, f: RatFun, d: Exp) -> RatFun:
        if not any(d):
            return f
        key = (f, d)
        if key not in self._dcache:
            self._dcache[key] = _delta_apply(f, d)
        return self._dcache[key]

    def k_jets(self, e: Exp, d: Exp) -> dict[Jet, RatFun]:
        """delta^d K^e."""
        out: dict[Jet, RatFun] = {}
        for t, g in self.nf(e).items():
            for d1 in _below(d):
                coef = self.dz(g, _sub(d, d1)) * _binom(d, d1)
                if coef:
                    j = (t, d1)
                    out[j] = out.get(j, self.K.zero) + coef
        return {j: f for j, f in out.items() if f}

    def term_jets(self, c: Exp, a: Exp, b: Exp) -> dict[Jet, RatFun]:
        out: dict[Jet, RatFun] = {}
        for c1 in _below(a):
            sign = -1 if sum(c1) % 2 else 1
            coef = sign * _binom(a, c1)
            for j, f in self.k_jets(_add(b, c1), _add(c, _sub(a, c1))).items():
                out[j] = out.get(j, self.K.zero) + f * coef
        return {j: f for j, f in out.items() if f}

    def relation_jets(self, rel: Relation) -> dict[Jet, RatFun]:
        out: dict[Jet, RatFun] = {}
        for (c, a, b), f in rel.terms.items():
            for j, g in self.term_jets(c, a, b).items():
                out[j] = out.get(j, self.K.zero) + f * g
        return {j: f for j, f in out.items() if f}

    def prolong(self, row: dict[Jet, RatFun], s: int) -> dict[Jet, RatFun]:
        es = _unit(self.alg.n, s)
        out: dict[Jet, RatFun] = {}
        for (t, d), f in row.items():
            df = self.dz(f, es)
            if df:
                out[(t, d)] = out.get((t, d), self.K.zero) + df
            j = (t, _add(d, es))
            out[j] = out.get(j, self.K.zero) + f
        return {j: f for j, f in out.items() if f}


def _jet_key(j: Jet):
    t, d = j
    return (-sum(d), tuple(-x for x in d), -t)


def _eliminate(rows: list[dict[Jet, RatFun]]) -> dict[Jet, dict[Jet, RatFun]]:
    """Reduced echelon form; returns {pivot: row normalized with pivot coefficient 1}."""
    pivots: dict[Jet, dict[Jet, RatFun]] = {}
    order: list[Jet] = []
    for row in rows:
        row = dict(row)
        changed = True
        while changed and row:
            changed = False
            for p in sorted(row, key=_jet_key):
                if p in pivots:
                    f = row[p]
                    for j, g in pivots[p].items():
                        v = row.get(j, f.field.zero) - f * g
                        if v:
                            row[j] = v
                        else:
                            row.pop(j, None)
                    changed = True
                    break
        if not row:
            continue
        p = min(row, key=_jet_key)
        inv = 1 / row[p]
        row = {j: f * inv for j, f in row.items()}
        for q, prow in pivots.items():
            if p in prow:
                f = prow[p]
                for j, g in row.items():
                    v = prow.get(j, f.field.zero) - f * g
                    if v:
                        prow[j] = v
                    else:
                        prow.pop(j, None)
        pivots[p] = row
        order.append(p)
    return pivots


@dataclass
class NPointTable:
    alg: OreAlgebra
    generator: Exp                       # K^generator is the reference function (3,0)
    rho: list[RatFun]                    # delta_s K^gen = rho_s K^gen
    values: dict[tuple[Exp, Exp], RatFun]
    space: Any = field(repr=False, default=None)
    lam: list[RatFun] = field(repr=False, default_factory=list)
    mu: list[RatFun] = field(repr=False, default_factory=list)
    integrable: bool = False

    def pairing(self, a: Sequence[int], b: Sequence[int]) -> RatFun:
        """<a|b> as a Q(z)-multiple of K^generator."""
        a, b = tuple(a), tuple(b)
        if (a, b) not in self.values:
            self.values[(a, b)] = self._evaluate(a, b)
        return self.values[(a, b)]

    def K(self, e: Sequence[int]) -> RatFun:
        return self.pairing((0,) * self.alg.n, e)

    def _jet_value(self, j: Jet, memo: dict) -> RatFun:
        if j in memo:
            return memo[j]
        t, d = j
        if not any(d):
            v = self.lam[t]
        else:
            s = next(i for i, x in enumerate(d) if x)
            prev = self._jet_value((t, _sub(d, _unit(self.alg.n, s))), memo)
            v = self.space.dz(prev, _unit(self.alg.n, s)) + prev * self.mu[s]
        memo[j] = v
        return v

    def _evaluate(self, a: Exp, b: Exp) -> RatFun:
        memo: dict = {}
        zero = (0,) * self.alg.n
        acc = self.alg.field.zero
        for j, f in self.space.term_jets(zero, a, b).items():
            acc = acc + f * self._jet_value(j, memo)
        return acc * self._gen_inv

    @property
    def _gen_inv(self) -> RatFun:
        memo: dict = {}
        zero = (0,) * self.alg.n
        acc = self.alg.field.zero
        for j, f in self.space.term_jets(zero, zero, self.generator).items():
            acc = acc + f * self._jet_value(j, memo)
        if not acc:
            raise NPointError("the reference coupling vanishes identically")
        return 1 / acc


def solve_npoint(relations: Sequence[Relation], gb: GroebnerBasis, generator: Sequence[int] | None = None,
                 max_prolong: int = 2) -> NPointTable:
    """Solve the pairing relations down to one function and its logarithmic derivatives."""
    space = _JetSpace(gb)
    alg = space.alg
    n = alg.n
    m = len(space.unknowns)
    if m == 0:
        raise NPointError("no order-3 staircase monomial")
    gen = tuple(generator) if generator is not None else (3,) + (0,) * (n - 1)
    rows = [r for r in (space.relation_jets(rel) for rel in relations) if r]
    ref = m - 1   # the lowest unknown stays free
    needed = [(t, (0,) * n) for t in range(m) if t != ref]
    needed += [(ref, _unit(n, s)) for s in range(n)]
    for _ in range(max_prolong + 1):
        piv = _eliminate(rows)
        ok = True
        for j in needed:
            row = piv.get(j)
            if row is None or any(k not in (j, (ref, (0,) * n)) for k in row):
                ok = False
                break
        if ok:
            break
        rows = rows + [space.prolong(r, s) for r in piv.values() for s in range(n)]
    else:
        raise NPointError("pairing relations leave more than one free function")
    zero = (0,) * n
    base = (ref, zero)

    def coef(j):
        return -piv[j].get(base, alg.field.zero)

    lam = [alg.field.one if t == ref else coef((t, zero)) for t in range(m)]
    # F_t = lam_t F_ref; delta_s F_ref = mu_s F_ref
    mu = [coef((ref, _unit(n, s))) for s in range(n)]
    table = NPointTable(alg, gen, [], {}, space, lam, mu)
    # reference function Kgen = g F_ref, so rho_s = mu_s + delta_s(g)/g
    g = 1 / table._gen_inv
    table.rho = [mu[s] + space.dz(g, _unit(n, s)) / g for s in range(n)]
    table.integrable = integrability(table.rho)
    if not table.integrable:
        raise NPointError("first-order system for the Yukawa coupling is not integrable")
    return table


def integrability(rho: Sequence[RatFun]) -> bool:
    n = len(rho)
    for i in range(n):
        for j in range(i + 1, n):
            if _delta_apply(rho[i], _unit(n, j)) != _delta_apply(rho[j], _unit(n, i)):
                return False
    return True


# ---------------------------------------------------------------- closed form

@dataclass
class ClosedForm:
    factors: list[tuple[Any, int]]     # (MPoly, exponent); the constant c is implicit

    def value(self, K) -> RatFun:
        acc = K.one
        for f, e in self.factors:
            acc = acc * K(f) ** e
        return acc

    def render(self) -> str:
        parts = []
        for f, e in self.factors:
            s = render(f)
            if len(f.terms()) > 1:
                s = f"({s})"
            parts.append(s if e == 1 else f"{s}^{e}")
        return "c*" + "*".join(parts) if parts else "c"


class ClosedFormError(ValueError):
    def __init__(self, message: str, residual: list[str] | None = None):
        super().__init__(message)
        self.residual = residual or []


def gcd_free_basis(polys: Sequence[Any]) -> list[Any]:
    """Pairwise coprime non-constant polynomials whose products give each input up to units."""
    basis = []
    for p in polys:
        if p.is_ground:
            continue
        basis.append(p.monic())
    changed = True
    while changed:
        changed = False
        for i, j in itertools.combinations(range(len(basis)), 2):
            a, b = basis[i], basis[j]
            g = mpoly_gcd(a, b).monic()
            if g.is_ground:
                continue
            rest = [basis[k] for k in range(len(basis)) if k not in (i, j)]
            new = [g, exact_div(a, g), exact_div(b, g)]
            basis = rest + [x.monic() for x in new if not x.is_ground]
            changed = True
            break
    uniq = []
    for b in basis:
        if b not in uniq:
            uniq.append(b)
    # primitive integer normalization with positive leading coefficient
    from .exactalg import primitive
    out = [primitive(b * b.ring(1)) for b in uniq]
    return sorted(out, key=lambda p: (p.total_degree() if hasattr(p, "total_degree") else 0, render(p)))


def _poly_coeffs(f: RatFun) -> dict[Exp, Fraction]:
    if not f.denom.is_ground:
        raise ClosedFormError("expected a polynomial after clearing denominators")
    c = to_fraction(f.denom.LC)
    return {m: to_fraction(v) / c for m, v in f.numer.terms()}


def integrate_closed_form(rho: Sequence[RatFun], factor_basis: Sequence[Any]) -> ClosedForm:
    """Integer exponents e_f with rho_s = sum_f e_f delta_s(f)/f for every s."""
    K = rho[0].field
    n = len(rho)
    polys = list(factor_basis)
    for r in rho:
        polys.append(r.denom)
    basis = gcd_free_basis([K(p).numer if not hasattr(p, "ring") or p.ring != K.ring else p for p in polys])
    if not basis:
        if all(not r for r in rho):
            return ClosedForm([])
        raise ClosedFormError("empty factor basis with nonzero right-hand side")
    logd = [[_delta_apply(K(f), _unit(n, s)) / K(f) for f in basis] for s in range(n)]
    # coefficientwise matching over a common denominator per s
    eqs: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for s in range(n):
        den = K.ring.one
        for x in logd[s] + [rho[s]]:
            den = den * exact_div(x.denom, mpoly_gcd(den, x.denom))
        cols = [_poly_coeffs(x * K(den)) for x in logd[s]]
        target = _poly_coeffs(rho[s] * K(den))
        monos = set(target)
        for x in cols:
            monos.update(x)
        for mono in sorted(monos):
            eqs.append([x.get(mono, Fraction(0)) for x in cols])
            rhs.append(target.get(mono, Fraction(0)))
    sol = solve_linear(FieldMatrix.rational(eqs), rhs)
    if not sol.consistent:
        raise ClosedFormError("no exponent vector over the factor basis", [render(b) for b in basis])
    if sol.kernel:
        raise ClosedFormError("factor basis is not multiplicatively independent")
    exps = [Fraction(x) for x in sol.particular]
    if any(e.denominator != 1 for e in exps):
        raise ClosedFormError("exponents are not integral", [str(e) for e in exps])
    cf = ClosedForm([(b, int(e)) for b, e in zip(basis, exps) if e])
    val = cf.value(K)
    for s in range(n):
        if _delta_apply(val, _unit(n, s)) != rho[s] * val:
            raise ClosedFormError("closed form fails verification")
    return cf


# ---------------------------------------------------------------- intersection matrix

@dataclass
class IntersectionForm:
    Qz: FieldMatrix
    Q0: FieldMatrix
    scale: Fraction
    normalized: FieldMatrix


def intersection_matrix(table: NPointTable, frame: Sequence[Sequence[int]], closed: ClosedForm,
                        point: Sequence[Any] | None = None) -> IntersectionForm:
    """Q_ab = <frame_a|frame_b> with K^generator replaced by its closed form (c = 1)."""
    K = table.alg.field
    mons = [tuple(m) for m in frame]
    kval = closed.value(K)
    size = len(mons)
    entries = [[K.zero] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1, size):
            v = table.pairing(mons[i], mons[j]) * kval
            entries[i][j] = v
            entries[j][i] = -v
    Qz = FieldMatrix(entries, K.zero, K.one)
    pt = point if point is not None else (0,) * table.alg.n
    Q0 = FieldMatrix.rational([[evaluate_at(f, pt) for f in row] for row in entries])
    scale = Q0[0, size - 1]
    if scale == 0:
        raise NPointError("corner entry of the intersection form vanishes at the point")
    return IntersectionForm(Qz, Q0, scale, Q0.scale(1 / scale))
