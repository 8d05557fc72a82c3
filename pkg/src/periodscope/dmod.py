"""Operators in log-derivations delta_i = z_i d/dz_i with rational-function coefficients.

Covers the Ore product, delta/partial conversion, GKZ operators from toric
relations, left Groebner bases over Q(z), normal forms and holonomic rank,
Picard-Fuchs factor search, coordinate charts, characteristic-variety
discriminants and Frobenius series at the origin.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Any, Callable, Iterable, Sequence

from sympy.polys.domains import QQ
from sympy.polys.fields import FracElement

from .exactalg import (
    FieldMatrix,
    MPoly,
    ParseError,
    RatFun,
    exact_div,
    mpoly_gcd,
    normalized_parts,
    parse_expression,
    polynomial_part_split,
    primitive,
    qq,
    ratfun_field,
    render,
    render_poly,
    resultant,
    solve_linear,
    squarefree_part,
    to_fraction,
)

Exp = tuple[int, ...]


class ResourceError(RuntimeError):
    """Raised when a Groebner computation exceeds its pair or degree cap."""


# ---------------------------------------------------------------- term orders

@dataclass(frozen=True)
class TermOrder:
    """Monomial order on delta-exponents.

    ``name`` is grevlex, grlex or lex; ``priority`` lists variable indices
    from most to least significant (default 0 > 1 > ...).
    """
    name: str = "grevlex"
    priority: tuple[int, ...] | None = None

    def key(self, e: Exp) -> tuple:
        pr = self.priority or tuple(range(len(e)))
        ee = tuple(e[i] for i in pr)
        if self.name == "grevlex":
            return (sum(ee), tuple(-x for x in reversed(ee)))
        if self.name == "grlex":
            return (sum(ee), ee)
        if self.name == "lex":
            return ee
        raise ValueError(f"unknown term order {self.name!r}")

    def describe(self) -> str:
        pr = self.priority or ()
        return self.name if not pr else f"{self.name}({'>'.join(f'd{i + 1}' for i in pr)})"


GREVLEX = TermOrder("grevlex")


def _divides(a: Exp, b: Exp) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _sub(a: Exp, b: Exp) -> Exp:
    return tuple(x - y for x, y in zip(a, b))


def _add(a: Exp, b: Exp) -> Exp:
    return tuple(x + y for x, y in zip(a, b))


def _below(e: Exp):
    return itertools.product(*[range(x + 1) for x in e])


def _binom(a: Exp, c: Exp) -> int:
    out = 1
    for x, y in zip(a, c):
        out *= comb(x, y)
    return out


# ---------------------------------------------------------------- algebra

class OreAlgebra:
    """Q(z_1..z_r)<delta_1..delta_r>; one instance per variable tuple."""

    _cache: dict = {}

    def __new__(cls, names: tuple[str, ...] = ("z1", "z2"), dnames: tuple[str, ...] | None = None):
        key = (tuple(names), tuple(dnames) if dnames else None)
        inst = cls._cache.get(key)
        if inst is None:
            inst = super().__new__(cls)
            inst._init(*key)
            cls._cache[key] = inst
        return inst

    def __getnewargs__(self):
        return (self.names, self.dnames)

    def _init(self, names: tuple[str, ...], dnames: tuple[str, ...] | None):
        self.names = tuple(names)
        self.dnames = tuple(dnames) if dnames else tuple(f"d{i + 1}" for i in range(len(names)))
        self.field = ratfun_field(self.names)
        self.ring = self.field.ring
        self.n = len(self.names)

    def __repr__(self):
        return f"OreAlgebra({self.names})"

    def coeff(self, c) -> RatFun:
        if isinstance(c, FracElement) and c.field == self.field:
            return c
        if isinstance(c, (int, Fraction)):
            return self.field(qq(c))
        if isinstance(c, str):
            from .exactalg import parse_ratfun
            return parse_ratfun(c, self.names)
        return self.field(c)

    def zero(self) -> "LogDiffOp":
        return LogDiffOp(self, {})

    def one(self) -> "LogDiffOp":
        return self.const(1)

    def const(self, c) -> "LogDiffOp":
        c = self.coeff(c)
        return LogDiffOp(self, {(0,) * self.n: c} if c else {})

    def delta(self, i: int) -> "LogDiffOp":
        e = [0] * self.n
        e[i] = 1
        return LogDiffOp(self, {tuple(e): self.field.one})

    def z(self, i: int) -> "LogDiffOp":
        return self.const(self.field.gens[i])

    def monomial(self, e: Exp) -> "LogDiffOp":
        return LogDiffOp(self, {tuple(e): self.field.one})

    def parse(self, text: str) -> "LogDiffOp":
        zs = dict(zip(self.names, range(self.n)))
        ds = dict(zip(self.dnames, range(self.n)))
        # accept unicode delta as well
        text = text.replace("δ", "d")

        def atom(s):
            if s in zs:
                return self.z(zs[s])
            if s in ds:
                return self.delta(ds[s])
            raise ParseError(f"unknown symbol {s!r}")

        return parse_expression(text, atom, lambda k: self.const(k))

    def delta_of(self, f: RatFun, e: Exp) -> RatFun:
        """delta^e applied to the function f."""
        return _delta_apply(f, e)


def _delta_poly(p: MPoly, e: Exp) -> MPoly:
    """delta^e on a polynomial: z^m -> prod(m_i^e_i) z^m."""
    if not any(e):
        return p
    out = {}
    for m, c in p.iterterms():
        w = 1
        for mi, ei in zip(m, e):
            if ei:
                w *= mi ** ei
        if w:
            out[m] = c * w
    return p.ring(out)


def _delta1(f: RatFun, i: int) -> RatFun:
    e = [0] * len(f.field.gens)
    e[i] = 1
    e = tuple(e)
    n, d = f.numer, f.denom
    if d.is_ground:
        return f.field(_delta_poly(n, e)) / f.field(d)
    return f.field(_delta_poly(n, e) * d - n * _delta_poly(d, e)) / f.field(d * d)


def _delta_apply(f: RatFun, e: Exp) -> RatFun:
    for i, k in enumerate(e):
        for _ in range(k):
            if not f:
                return f
            f = _delta1(f, i)
    return f


# ---------------------------------------------------------------- operators

class LogDiffOp:
    """Element sum_e f_e(z) delta^e of the Ore algebra, coefficients on the left."""

    __slots__ = ("alg", "terms", "_hash")

    def __init__(self, alg: OreAlgebra, terms: dict[Exp, RatFun]):
        self.alg = alg
        self.terms = {e: c for e, c in terms.items() if c}
        self._hash = None

    # basic protocol
    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, LogDiffOp):
            if isinstance(other, (int, Fraction)):
                other = self.alg.const(other)
            else:
                return NotImplemented
        return self.alg is other.alg and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(sorted((e, str(c)) for e, c in self.terms.items())))
        return self._hash

    def _coerce(self, other) -> "LogDiffOp":
        if isinstance(other, LogDiffOp):
            if other.alg is not self.alg:
                raise ValueError("operators from different algebras")
            return other
        return self.alg.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, self.alg.field.zero) + c
        return LogDiffOp(self.alg, t)

    __radd__ = __add__

    def __neg__(self):
        return LogDiffOp(self.alg, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(self._coerce(other), self)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.order() > 0:
            raise ValueError("can only divide by a function")
        g = other.coefficient((0,) * self.alg.n)
        return self * self.alg.const(self.alg.field.one / g)

    def __pow__(self, k: int):
        if k < 0:
            if self.order() > 0:
                raise ValueError("negative power of a differential operator")
            g = self.coefficient((0,) * self.alg.n)
            return self.alg.const(self.alg.field.one / g ** (-k))
        out = self.alg.one()
        for _ in range(k):
            out = out * self
        return out

    # inspection
    def coefficient(self, e: Exp) -> RatFun:
        return self.terms.get(tuple(e), self.alg.field.zero)

    def order(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def support(self, order: TermOrder = GREVLEX) -> list[Exp]:
        return sorted(self.terms, key=order.key, reverse=True)

    def leading_monomial(self, order: TermOrder = GREVLEX) -> Exp:
        return max(self.terms, key=order.key)

    def leading_coefficient(self, order: TermOrder = GREVLEX) -> RatFun:
        return self.terms[self.leading_monomial(order)]

    def symbol(self) -> dict[Exp, RatFun]:
        """Top-order part in delta."""
        k = self.order()
        return {e: c for e, c in self.terms.items() if sum(e) == k}

    def scale_left(self, f) -> "LogDiffOp":
        f = self.alg.coeff(f)
        return LogDiffOp(self.alg, {e: f * c for e, c in self.terms.items()})

    def map_coefficients(self, fn: Callable[[RatFun], RatFun], alg: OreAlgebra | None = None) -> "LogDiffOp":
        alg = alg or self.alg
        return LogDiffOp(alg, {e: fn(c) for e, c in self.terms.items()})

    def canonical(self, order: TermOrder = GREVLEX) -> "LogDiffOp":
        """Representative of Q(z)^* . self: polynomial coefficients, primitive, positive leading."""
        if not self:
            return self
        ring = self.alg.ring
        den = ring.one
        for c in self.terms.values():
            if not c.denom.is_ground:
                den = den.lcm(c.denom)
        polys = {e: exact_div(c.numer * den, c.denom) for e, c in self.terms.items()}
        g = ring.zero
        for p in polys.values():
            g = mpoly_gcd(g, p)
        g = primitive(g)
        polys = {e: exact_div(p, g) for e, p in polys.items()}
        content = primitive(next(iter(polys.values())))
        # integer-normalize: clear rational constants, divide integer content
        from math import gcd, lcm
        L = lcm(*[to_fraction(c).denominator for p in polys.values() for c in p.itercoeffs()])
        polys = {e: p.mul_ground(QQ(L)) for e, p in polys.items()}
        G = 0
        for p in polys.values():
            for c in p.itercoeffs():
                G = gcd(G, int(c))
        lead = polys[max(polys, key=order.key)]
        if lead.LC < 0:
            G = -G
        K = self.alg.field
        del content
        return LogDiffOp(self.alg, {e: K(p.quo_ground(QQ(G))) for e, p in polys.items()})

    def __repr__(self):
        return f"LogDiffOp({self.to_text()})"

    def to_text(self, order: TermOrder = GREVLEX) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in self.support(order):
            c = self.terms[e]
            mon = "*".join(d if k == 1 else f"{d}^{k}" for d, k in zip(self.alg.dnames, e) if k)
            cs = render(c)
            simple = c.denom.is_ground and len(c.numer) == 1
            if not mon:
                body = cs if simple else f"({cs})"
                neg = False
                if simple and cs.startswith("-"):
                    neg, body = True, cs[1:]
            elif simple:
                neg = cs.startswith("-")
                a = cs[1:] if neg else cs
                body = mon if a == "1" else f"{a}*{mon}"
            else:
                neg = False
                body = f"({cs})*{mon}"
            parts.append(("-" if neg else "+") + body)
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s

    __str__ = to_text


def multiply(a: LogDiffOp, b: LogDiffOp) -> LogDiffOp:
    """Ore product with delta_i z_j = z_j (delta_i + [i = j])."""
    alg = a.alg
    out: dict[Exp, RatFun] = {}
    zero = alg.field.zero
    for ea, fa in a.terms.items():
        for eb, gb in b.terms.items():
            for c in _below(ea):
                dg = _delta_apply(gb, c)
                if not dg:
                    continue
                k = _binom(ea, c)
                e = _add(_sub(ea, c), eb)
                out[e] = out.get(e, zero) + fa * dg * k
    return LogDiffOp(alg, out)


def falling(x: LogDiffOp, k: int) -> LogDiffOp:
    """x (x-1) ... (x-k+1)."""
    out = x.alg.one()
    for j in range(k):
        out = out * (x - j)
    return out


# ---------------------------------------------------------------- partial form

class PolyDiffOp:
    """sum_a c_a(z) d^a with d_i = partial/partial z_i, coefficients on the left."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: OreAlgebra, terms: dict[Exp, RatFun]):
        self.alg = alg
        self.terms = {e: c for e, c in terms.items() if c}

    def __eq__(self, other):
        return isinstance(other, PolyDiffOp) and self.alg is other.alg and self.terms == other.terms

    def order(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def to_text(self) -> str:
        alg = self.alg
        pn = tuple(f"D{i + 1}" for i in range(alg.n))
        fake = LogDiffOp(OreAlgebra(alg.names, pn), {e: alg.field(c) for e, c in self.terms.items()}) if self.terms else None
        return fake.to_text() if fake is not None else "0"

    def clear_denominators(self) -> "PolyDiffOp":
        ring = self.alg.ring
        den = ring.one
        for c in self.terms.values():
            if not c.denom.is_ground:
                den = den.lcm(c.denom)
        K = self.alg.field
        return PolyDiffOp(self.alg, {e: K(c.numer * den) / K(c.denom) for e, c in self.terms.items()})


@lru_cache(maxsize=None)
def _stirling2(n: int, k: int) -> int:
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


def to_partial(op: LogDiffOp) -> PolyDiffOp:
    """delta^k = sum_j S(k,j) z^j d^j per variable."""
    alg = op.alg
    K = alg.field
    out: dict[Exp, RatFun] = {}
    for e, c in op.terms.items():
        for js in itertools.product(*[range(k + 1) for k in e]):
            w = 1
            for k, j in zip(e, js):
                w *= _stirling2(k, j)
            if not w:
                continue
            zmon = K.one
            for i, j in enumerate(js):
                zmon *= K.gens[i] ** j
            out[js] = out.get(js, K.zero) + c * zmon * w
    return PolyDiffOp(alg, out)


def from_partial(op: PolyDiffOp) -> LogDiffOp:
    """z^a d^a = delta (delta - 1) ... (delta - a + 1) per variable."""
    alg = op.alg
    K = alg.field
    out = alg.zero()
    for a, c in op.terms.items():
        term = alg.const(c)
        zden = K.one
        for i, k in enumerate(a):
            zden *= K.gens[i] ** k
            term = term * falling(alg.delta(i), k)
        out = out + term.scale_left(K.one / zden)
    return out


# ---------------------------------------------------------------- GKZ

def box_operator(l: Sequence[int], names: tuple[str, ...] | None = None) -> PolyDiffOp:
    """prod_{l_i > 0} d_i^{l_i} - prod_{l_j < 0} d_j^{-l_j} in the lambda variables."""
    l = tuple(int(x) for x in l)
    if not any(l):
        raise ValueError("box operator of the zero relation")
    names = names or tuple(f"lam{i + 1}" for i in range(len(l)))
    alg = OreAlgebra(names)
    K = alg.field
    pos = tuple(max(x, 0) for x in l)
    neg = tuple(max(-x, 0) for x in l)
    return PolyDiffOp(alg, {pos: K.one, neg: -K.one} if pos != neg else {})


def gkz_operators(Bbar: Sequence[Sequence[int]], zero_column: int,
                  names: tuple[str, ...] | None = None) -> list[LogDiffOp]:
    """Dehomogenized box operators of the suspended relations.

    Each row l of Bbar gives z_l = prod lambda_j^{l_j}.  Multiplying the box
    operator on the left by lambda^{l+} turns it into
    prod [theta_i]_{l_i} - z_l prod [theta_j]_{-l_j}; on periods of the form
    Phi = lambda_0^{-1} F(z) (lambda_0 the suspension point) the Euler
    operators force theta_j -> sum_k l^(k)_j delta_k - [j = 0].
    """
    rows = [tuple(int(x) for x in r) for r in Bbar]
    r = len(rows)
    k = len(rows[0])
    for row in rows:
        if sum(row) != 0:
            raise ValueError("rows of the suspended relation matrix must sum to zero")
    names = names or tuple(f"z{i + 1}" for i in range(r))
    alg = OreAlgebra(names)
    theta = []
    for j in range(k):
        t = alg.const(-1 if j == zero_column else 0)
        for i in range(r):
            if rows[i][j]:
                t = t + alg.delta(i) * rows[i][j]
        theta.append(t)
    ops = []
    for i, row in enumerate(rows):
        left = alg.one()
        right = alg.one()
        for j, lj in enumerate(row):
            if lj > 0:
                left = left * falling(theta[j], lj)
            elif lj < 0:
                right = right * falling(theta[j], -lj)
        ops.append(left - alg.z(i) * right)
    return ops


def rescale(op: LogDiffOp, c: Sequence[Any]) -> LogDiffOp:
    """New coordinate c_i * z_i: substitute z_i -> z_i / c_i in the coefficients."""
    cs = [to_fraction(x) for x in c]
    if any(x == 0 for x in cs):
        raise ValueError("zero rescaling factor")
    K = op.alg.field
    subs = [K.gens[i] / K(qq(cs[i])) for i in range(op.alg.n)]
    return op.map_coefficients(lambda f: _substitute(f, subs, K))


def _substitute(f: RatFun, images: Sequence[RatFun], K) -> RatFun:
    """f(z) -> f(images) with images in field K."""
    def ev(p):
        acc = K.zero
        for m, c in p.iterterms():
            t = K(c)
            for x, k in zip(images, m):
                if k:
                    t = t * x ** k
            acc = acc + t
        return acc
    return ev(f.numer) / ev(f.denom)


# ---------------------------------------------------------------- charts

@dataclass(frozen=True)
class Chart:
    """Coordinate chart: z = shift + monomial(post_shift + w / rescale).

    In steps: old z_j = y_j + shift_j; y_j = prod_i u_i^{E_ij};
    u_i = v_i + post_shift_i; v_i = w_i / rescale_i.  The chart's own
    coordinates are w.  ``names`` are the new coordinate names.
    """
    name: str
    shift: tuple[Fraction, ...] = ()
    exponents: tuple[tuple[int, ...], ...] = ()
    rescale: tuple[Fraction, ...] = ()
    post_shift: tuple[Fraction, ...] = ()
    names: tuple[str, ...] = ("z1", "z2")
    divisors: tuple[str, ...] = ()

    def matrix(self, r: int) -> list[list[int]]:
        if self.exponents:
            return [list(row) for row in self.exponents]
        return [[1 if i == j else 0 for j in range(r)] for i in range(r)]

    def images(self, src: OreAlgebra) -> tuple[OreAlgebra, list[RatFun]]:
        r = src.n
        E = self.matrix(r)
        det = FieldMatrix.rational(E).det()
        if det == 0:
            raise ValueError(f"chart {self.name}: exponent matrix is singular")
        tgt = OreAlgebra(tuple(self.names))
        K = tgt.field
        resc = list(self.rescale) or [1] * r
        post = list(self.post_shift) or [0] * r
        shift = list(self.shift) or [0] * r
        u = [K.gens[i] / K(qq(resc[i])) + K(qq(post[i])) for i in range(r)]
        z = []
        for j in range(r):
            t = K.one
            for i in range(r):
                if E[i][j]:
                    t = t * u[i] ** E[i][j]
            z.append(t + K(qq(shift[j])))
        return tgt, z


def _jacobian_delta_map(src: OreAlgebra, tgt: OreAlgebra, z: list[RatFun]) -> list[LogDiffOp]:
    """Express each source delta_{z_j} as a first-order operator in the target deltas."""
    K = tgt.field
    r = src.n
    J = FieldMatrix([[z[j].diff(K.gens[i]) for i in range(r)] for j in range(r)], K.zero, K.one)
    Jinv = J.inverse()  # d_z = Jinv^T d_u, i.e. d_{z_j} = sum_i Jinv[i][j] d_{u_i}
    out = []
    for j in range(r):
        op = tgt.zero()
        for i in range(r):
            coef = z[j] * Jinv[i, j] / K.gens[i]
            if coef:
                op = op + tgt.delta(i).scale_left(coef)
        out.append(op)
    return out


def change_chart(ops: Sequence[LogDiffOp], chart: Chart) -> list[LogDiffOp]:
    """Rewrite operators in the chart's coordinates (annihilators map to annihilators)."""
    if not ops:
        return []
    src = ops[0].alg
    tgt, z = chart.images(src)
    dmap = _jacobian_delta_map(src, tgt, z)
    K = tgt.field
    powers: dict[tuple[int, int], LogDiffOp] = {}

    def dpow(j, k):
        key = (j, k)
        if key not in powers:
            powers[key] = tgt.one() if k == 0 else dpow(j, k - 1) * dmap[j]
        return powers[key]

    out = []
    for op in ops:
        acc = tgt.zero()
        for e, c in op.terms.items():
            term = tgt.const(_substitute(c, z, K))
            for j, k in enumerate(e):
                if k:
                    term = term * dpow(j, k)
            acc = acc + term
        out.append(acc)
    return out


# ---------------------------------------------------------------- Groebner bases

class _PolyForm:
    """Operator with polynomial coefficients used inside Buchberger (fraction-free)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Exp, MPoly]):
        self.terms = {e: p for e, p in terms.items() if p}


def _to_polyform(op: LogDiffOp) -> tuple[_PolyForm, MPoly]:
    ring = op.alg.ring
    den = ring.one
    for c in op.terms.values():
        if not c.denom.is_ground:
            den = den.lcm(c.denom)
    # den may be monic with rational ground coefficients; that is fine over QQ
    terms = {e: exact_div(c.numer * den, c.denom) for e, c in op.terms.items()}
    return _PolyForm(terms), den


def _left_delta_mul(c: Exp, f: dict[Exp, MPoly], ring) -> dict[Exp, MPoly]:
    """delta^c . f for polynomial-coefficient f."""
    if not any(c):
        return dict(f)
    out: dict[Exp, MPoly] = {}
    for e, p in f.items():
        for cc in _below(c):
            dp = _delta_poly(p, cc)
            if not dp:
                continue
            k = _binom(c, cc)
            t = _add(_sub(c, cc), e)
            v = dp if k == 1 else dp.mul_ground(QQ(k))
            out[t] = out[t] + v if t in out else v
    return {e: p for e, p in out.items() if p}


def _content(terms: dict[Exp, MPoly]) -> MPoly:
    g = None
    for p in terms.values():
        g = primitive(p) if g is None else mpoly_gcd(g, p)
        if g.is_ground:
            break
    return g


def _make_primitive(terms: dict[Exp, MPoly]) -> tuple[dict[Exp, MPoly], MPoly]:
    if not terms:
        return terms, None
    g = _content(terms)
    if g is not None and not (g.is_ground and g.LC == 1):
        terms = {e: exact_div(p, g) for e, p in terms.items()}
    return terms, g


@dataclass
class GroebnerBasis:
    alg: OreAlgebra
    order: TermOrder
    gens: list[LogDiffOp]                    # monic in leading monomial
    poly_gens: list[dict[Exp, MPoly]] = field(repr=False, default_factory=list)
    pairs_processed: int = 0

    @property
    def leading_monomials(self) -> list[Exp]:
        return [g.leading_monomial(self.order) for g in self.gens]

    def staircase(self, limit: int = 64) -> list[Exp] | None:
        """Standard monomials sorted ascending in the term order; None if infinite."""
        lms = self.leading_monomials
        n = self.alg.n
        bounds = []
        for i in range(n):
            pure = [lm[i] for lm in lms if all(lm[j] == 0 for j in range(n) if j != i)]
            if not pure:
                return None
            bounds.append(min(pure))
        out = [e for e in itertools.product(*[range(b) for b in bounds])
               if not any(_divides(lm, e) for lm in lms)]
        return sorted(out, key=self.order.key)

    def reduce(self, op: LogDiffOp) -> LogDiffOp:
        return normal_form(op, self)


def _reduce_full(f: dict[Exp, MPoly], basis: list[dict[Exp, MPoly]], lms: list[Exp],
                 order: TermOrder, ring, skip: int | None = None) -> tuple[dict[Exp, MPoly], Any]:
    """Fully reduce f; returns (remainder, multiplier mu) with remainder = mu f mod ideal."""
    K_one = ring.one
    mu_num, mu_den = K_one, K_one
    done: dict[Exp, MPoly] = {}
    f = dict(f)
    while f:
        m = max(f, key=order.key)
        hit = None
        for idx, lm in enumerate(lms):
            if idx != skip and _divides(lm, m):
                hit = idx
                break
        if hit is None:
            done[m] = f.pop(m)
            continue
        g = basis[hit]
        lg = g[lms[hit]]
        c = f[m]
        h = mpoly_gcd(lg, c)
        a = exact_div(lg, h)
        b = exact_div(c, h)
        sh = _left_delta_mul(_sub(m, lms[hit]), g, ring)
        new: dict[Exp, MPoly] = {}
        if not (a.is_ground and a.LC == 1):
            done = {e: a * p for e, p in done.items()}
            mu_num = mu_num * a
            for e, p in f.items():
                new[e] = a * p
        else:
            new = dict(f)
        for e, p in sh.items():
            v = new.get(e)
            new[e] = v - b * p if v is not None else -(b * p)
        new.pop(m, None)
        f = {e: p for e, p in new.items() if p}
        # keep sizes down
        allt = {**done, **f}
        if allt:
            g2 = _content(allt)
            if g2 is not None and not (g2.is_ground and g2.LC == 1):
                done = {e: exact_div(p, g2) for e, p in done.items()}
                f = {e: exact_div(p, g2) for e, p in f.items()}
                mu_den = mu_den * g2
    return done, (mu_num, mu_den)


def groebner(gens: Sequence[LogDiffOp], order: TermOrder = GREVLEX, max_pairs: int = 10_000,
             max_degree: int = 64) -> GroebnerBasis:
    """Reduced left Groebner basis over Q(z) (Buchberger, normal strategy)."""
    gens = [g for g in gens if g]
    if not gens:
        raise ValueError("empty generator list")
    alg = gens[0].alg
    ring = alg.ring
    basis: list[dict[Exp, MPoly]] = []
    lms: list[Exp] = []

    def check_degree(terms):
        for p in terms.values():
            if p and max(sum(m) for m in p.itermonoms()) > max_degree:
                raise ResourceError(f"coefficient degree cap {max_degree} exceeded")

    def add(terms):
        terms, _ = _make_primitive(terms)
        check_degree(terms)
        basis.append(terms)
        lms.append(max(terms, key=order.key))

    for g in gens:
        pf, _ = _to_polyform(g)
        rem, _ = _reduce_full(pf.terms, basis, lms, order, ring)
        if rem:
            add(rem)
    pairs = [(i, j) for j in range(len(basis)) for i in range(j)]
    processed = 0

    def lcm_of(p):
        return tuple(max(a, b) for a, b in zip(lms[p[0]], lms[p[1]]))

    while pairs:
        pairs.sort(key=lambda p: (sum(lcm_of(p)), lcm_of(p), p))
        i, j = pairs.pop(0)
        processed += 1
        if processed > max_pairs:
            raise ResourceError(f"Groebner pair cap {max_pairs} exceeded")
        L = lcm_of((i, j))
        fi, fj = basis[i], basis[j]
        li, lj = fi[lms[i]], fj[lms[j]]
        h = mpoly_gcd(li, lj)
        a = exact_div(lj, h)
        b = exact_div(li, h)
        si = _left_delta_mul(_sub(L, lms[i]), fi, ring)
        sj = _left_delta_mul(_sub(L, lms[j]), fj, ring)
        s: dict[Exp, MPoly] = {}
        for e, p in si.items():
            s[e] = a * p
        for e, p in sj.items():
            v = s.get(e)
            s[e] = v - b * p if v is not None else -(b * p)
        s = {e: p for e, p in s.items() if p}
        if not s:
            continue
        rem, _ = _reduce_full(s, basis, lms, order, ring)
        if rem:
            add(rem)
            k = len(basis) - 1
            pairs.extend((t, k) for t in range(k))
    # minimize
    keep = [i for i in range(len(basis))
            if not any(_divides(lms[j], lms[i]) and (lms[j] != lms[i] or j < i) for j in range(len(basis)) if j != i)]
    basis = [basis[i] for i in keep]
    lms = [lms[i] for i in keep]
    # interreduce
    red = []
    for i in range(len(basis)):
        others = [basis[j] for j in range(len(basis)) if j != i]
        olms = [lms[j] for j in range(len(basis)) if j != i]
        tail = {e: p for e, p in basis[i].items() if e != lms[i]}
        lead = {lms[i]: basis[i][lms[i]]}
        rem_tail, (mn, md) = _reduce_full(tail, others, olms, order, ring)
        # rem_tail = (mn/md) tail mod ideal; rescale the lead accordingly
        full = {e: p * md for e, p in rem_tail.items()}
        full[lms[i]] = lead[lms[i]] * mn
        full, _ = _make_primitive({e: p for e, p in full.items() if p})
        red.append(full)
    K = alg.field
    order_idx = sorted(range(len(red)), key=lambda t: order.key(max(red[t], key=order.key)))
    red = [red[t] for t in order_idx]
    monic = []
    for terms in red:
        lm = max(terms, key=order.key)
        lc = K(terms[lm])
        monic.append(LogDiffOp(alg, {e: K(p) / lc for e, p in terms.items()}))
    return GroebnerBasis(alg, order, monic, red, processed)


def normal_form(op: LogDiffOp, gb: GroebnerBasis) -> LogDiffOp:
    """Remainder of op modulo the left ideal, supported on the staircase."""
    if not op:
        return op
    alg = gb.alg
    pf, den = _to_polyform(op)
    lms = [max(t, key=gb.order.key) for t in gb.poly_gens]
    rem, (mn, md) = _reduce_full(pf.terms, gb.poly_gens, lms, gb.order, alg.ring)
    K = alg.field
    scale = K(md) / (K(mn) * K(den))
    return LogDiffOp(alg, {e: K(p) * scale for e, p in rem.items()})


class NotHolonomic(ValueError):
    pass


def holonomic_rank(gb: GroebnerBasis) -> int:
    st = gb.staircase()
    if st is None:
        raise NotHolonomic("infinite staircase: not holonomic at the generic point")
    return len(st)


def ideal_contains(gb: GroebnerBasis, op: LogDiffOp) -> bool:
    return not normal_form(op, gb)


# ---------------------------------------------------------------- PF factor search

def left_divide(m: LogDiffOp, l: LogDiffOp, order: TermOrder = GREVLEX) -> LogDiffOp | None:
    """Q with l . Q = m if it exists (exact left division), else None."""
    alg = m.alg
    lm_l = l.leading_monomial(order)
    lc_l = l.terms[lm_l]
    q = alg.zero()
    r = m
    guard = 0
    while r:
        guard += 1
        if guard > 10_000:
            return None
        e = r.leading_monomial(order)
        if not _divides(lm_l, e):
            return None
        t = LogDiffOp(alg, {_sub(e, lm_l): r.terms[e] / lc_l})
        q = q + t
        r = r - l * t
    return q


@dataclass
class FactorSearchResult:
    ops: list[LogDiffOp]
    factor: LogDiffOp | None
    combination: tuple[int, ...] | None
    replaced: int | None
    rank: int
    tried: int


def first_order_candidates(alg: OreAlgebra, bound: int = 3) -> list[LogDiffOp]:
    out = []
    seen = set()
    rng = range(-bound, bound + 1)
    for cs in itertools.product(rng, repeat=alg.n + 1):
        lin, c0 = cs[:-1], cs[-1]
        if not any(lin):
            continue
        # normalize sign: first nonzero delta coefficient positive
        first = next(x for x in lin if x)
        if first < 0:
            continue
        key = tuple(cs)
        if key in seen:
            continue
        seen.add(key)
        op = alg.const(c0)
        for i, c in enumerate(lin):
            if c:
                op = op + alg.delta(i) * c
        out.append(op)
    out.sort(key=lambda o: (sum(abs(int(to_fraction(c.numer.LC))) for c in o.terms.values()), o.to_text()))
    return out


def pf_from_gkz(gkz: Sequence[LogDiffOp], target_rank: int | None = None, bound: int = 3,
                accept: Callable[[list[LogDiffOp]], bool] | None = None,
                order: TermOrder = GREVLEX) -> FactorSearchResult:
    """Search for a rank-(2r+2) quotient by splitting off a first-order left factor.

    Tries small integer combinations sum a_i P_i and first-order
    L = sum c_i delta_i + c_0 (|c| <= bound) with sum a_i P_i = L . Q; the
    generator with the last nonzero a_i is replaced by Q.  ``accept`` may
    veto a candidate (e.g. a maximal-unipotent check at the origin).
    """
    gkz = list(gkz)
    alg = gkz[0].alg
    r = alg.n
    target = target_rank if target_rank is not None else 2 * r + 2
    gb = groebner(gkz, order)
    st = gb.staircase()
    rank0 = len(st) if st is not None else -1
    if rank0 == target and (accept is None or accept(gkz)):
        return FactorSearchResult(gkz, None, None, None, rank0, 0)
    cands = first_order_candidates(alg, bound)
    combos = []
    rng = range(-bound, bound + 1)
    for a in itertools.product(rng, repeat=len(gkz)):
        if not any(a):
            continue
        first = next(x for x in a if x)
        if first < 0:
            continue
        from math import gcd
        g = 0
        for x in a:
            g = gcd(g, x)
        if g != 1:
            continue
        combos.append(a)
    combos.sort(key=lambda a: (sum(1 for x in a if x), sum(abs(x) for x in a), tuple(-x for x in a)))
    tried = 0
    for a in combos:
        m = alg.zero()
        for coef, P in zip(a, gkz):
            if coef:
                m = m + P * coef
        for L in cands:
            tried += 1
            q = left_divide(m, L, order)
            if q is None or q.order() < 1:
                continue
            replaced = max(i for i, x in enumerate(a) if x)
            new = list(gkz)
            new[replaced] = q
            try:
                gbn = groebner(new, order)
            except ResourceError:
                continue
            stn = gbn.staircase()
            if stn is None or len(stn) != target:
                continue
            if accept is not None and not accept(new):
                continue
            return FactorSearchResult(new, L, a, replaced, len(stn), tried)
    raise LookupError(f"no first-order factor found within bounds (tried {tried} candidates)")


# ---------------------------------------------------------------- discriminant

@dataclass
class Discriminant:
    components: list[MPoly]
    boundary: list[str]                # toric boundary coordinates that appeared
    raw: MPoly | None = None
    note: str = "candidate singular locus"


def _symbol_poly(op: LogDiffOp, ring_xi, nz: int):
    """Principal delta-symbol of the operator with all denominators cleared, in (xi..., z...)."""
    K = op.alg.field
    sym = op.symbol()
    den = op.alg.ring.one
    for c in op.terms.values():
        if not c.denom.is_ground:
            den = den.lcm(c.denom)
    out = ring_xi.zero
    for e, c in sym.items():
        p = exact_div(c.numer * den, c.denom)
        for m, a in p.iterterms():
            out += ring_xi({tuple(e) + tuple(m): a})
    return out


def char_discriminant(ops: Sequence[LogDiffOp], use_groebner: bool = True,
                      order: TermOrder = GREVLEX) -> Discriminant:
    """Base projection of the characteristic variety (two variables).

    Principal symbols of the Groebner basis elements are intersected on
    each projective xi-chart by pairwise resultants.  Within a chart the
    gcd over pairs discards spurious factors from vanishing leading
    coefficients; the two charts are then united by an lcm.  Coordinate
    hyperplanes are reported as boundary.
    """
    ops = list(ops)
    alg = ops[0].alg
    if alg.n != 2:
        raise ValueError("char_discriminant supports two variables")
    gens = groebner(ops, order).gens if use_groebner else ops
    gens = list(gens) + [o for o in ops if o not in gens]
    from .exactalg import poly_ring
    names = ("xi1", "xi2") + alg.names
    Rx = poly_ring(names)
    syms = [_symbol_poly(g, Rx, alg.n) for g in gens]
    zring = alg.ring
    acc = None

    def to_z(p):
        out = zring.zero
        for m, c in p.iterterms():
            out += zring({m[2:]: c})
        return out

    for chart in (0, 1):
        fixed = 1 - chart  # set xi_fixed = 1
        elim = names[chart]
        dehom = []
        for s in syms:
            d = s.ring.zero
            for m, c in s.iterterms():
                mm = list(m)
                mm[fixed] = 0
                d += s.ring({tuple(mm): c})
            if d:
                dehom.append(d)
        part = None
        for a, b in itertools.combinations(dehom, 2):
            res = resultant(a, b, elim)
            if not res:
                continue
            rz = to_z(res)
            part = primitive(rz) if part is None else mpoly_gcd(part, rz)
        if part is None or part.is_ground:
            continue
        # union over the two xi-charts
        acc = part if acc is None else primitive(exact_div(acc * part, mpoly_gcd(acc, part)))
    if acc is None or acc.is_ground:
        return Discriminant([], [], acc)
    mon, rest = polynomial_part_split(acc)
    boundary = [alg.names[i] for i, e in enumerate(mon) if e]
    comps = []
    if not rest.is_ground:
        sf = squarefree_part(rest)
        comps = _split_components(sf)
    return Discriminant(comps, boundary, acc)


def _split_components(p: MPoly) -> list[MPoly]:
    """Split a square-free polynomial into irreducible factors (sympy factor_list over QQ)."""
    _, facs = p.factor_list()
    out = [primitive(f) for f, _ in facs if not f.is_ground]
    return sorted(out, key=lambda f: (f.degree(), render_poly(f)))


# ---------------------------------------------------------------- series

@dataclass
class SeriesSolution:
    names: tuple[str, ...]
    coeffs: dict[Exp, Fraction]
    order: int

    def coefficient(self, m: Exp) -> Fraction:
        return self.coeffs.get(tuple(m), Fraction(0))


class SeriesError(ValueError):
    pass


def series_solution(gens: Sequence[LogDiffOp], N: int) -> SeriesSolution:
    """Unique holomorphic solution with constant term 1, truncated at total degree N."""
    gens = list(gens)
    alg = gens[0].alg
    n = alg.n
    ops = []
    for g in gens:
        pf, _ = _to_polyform(g)
        ops.append(pf.terms)
    coeffs: dict[Exp, Fraction] = {(0,) * n: Fraction(1)}

    def act(terms, m: Exp):
        """Return list of (shift k, weight) with P z^m = sum weight z^(m+k)."""
        out: dict[Exp, Fraction] = {}
        for e, p in terms.items():
            w = 1
            for mi, ei in zip(m, e):
                w *= mi ** ei
            if not w:
                continue
            for k, c in p.iterterms():
                out[k] = out.get(k, Fraction(0)) + to_fraction(c) * w
        return out

    for d in range(1, N + 1):
        unknowns = [m for m in itertools.product(range(d + 1), repeat=n) if sum(m) == d]
        index = {m: i for i, m in enumerate(unknowns)}
        rows, rhs = [], []
        for terms in ops:
            for target in unknowns:
                row = [Fraction(0)] * len(unknowns)
                b = Fraction(0)
                # contributions c_m * weight where m + k = target
                for e, p in terms.items():
                    for k, c in p.iterterms():
                        m = tuple(t - kk for t, kk in zip(target, k))
                        if any(x < 0 for x in m):
                            continue
                        w = 1
                        for mi, ei in zip(m, e):
                            w *= mi ** ei
                        if not w:
                            continue
                        val = to_fraction(c) * w
                        if sum(m) == d:
                            row[index[m]] += val
                        else:
                            b -= val * coeffs.get(m, Fraction(0))
                if any(row) or b:
                    rows.append(row)
                    rhs.append(b)
        if not rows:
            raise SeriesError(f"no equations at degree {d}")
        sol = solve_linear(FieldMatrix(rows), rhs)
        if not sol.consistent:
            raise SeriesError(f"no holomorphic solution at degree {d}")
        if sol.kernel:
            raise SeriesError(f"holomorphic solution not unique at degree {d}")
        for m, v in zip(unknowns, sol.particular):
            if v:
                coeffs[m] = v
    return SeriesSolution(alg.names, coeffs, N)


def apply_to_series(op: LogDiffOp, s: SeriesSolution) -> dict[Exp, Fraction]:
    """Coefficients (through the truncation order) of op applied to the series, after clearing denominators."""
    pf, _ = _to_polyform(op)
    out: dict[Exp, Fraction] = {}
    for m, cm in s.coeffs.items():
        for e, p in pf.terms.items():
            w = 1
            for mi, ei in zip(m, e):
                w *= mi ** ei
            if not w:
                continue
            for k, c in p.iterterms():
                t = tuple(a + b for a, b in zip(m, k))
                if sum(t) <= s.order:
                    out[t] = out.get(t, Fraction(0)) + to_fraction(c) * w * cm
    return {k: v for k, v in out.items() if v}
