"""Exact arithmetic: rationals, sparse polynomials, rational functions, matrices.

Polynomials and rational functions ride on sympy's sparse ``PolyRing`` /
``FracField`` over QQ (gmpy2-backed when available).  This module fixes the
conventions the rest of the package relies on: graded-lex order with
z1 > z2 > ..., primitive integer-normalized gcds, a canonical text form and
its parser, Sylvester resultants, square-free parts and a fraction-free
linear solver.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable, Sequence

from sympy.polys.domains import QQ
from sympy.polys.fields import FracField, FracElement
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

Rat = Fraction
MPoly = PolyElement
RatFun = FracElement


# ---------------------------------------------------------------- rings

@lru_cache(maxsize=None)
def ratfun_field(names: tuple[str, ...]) -> FracField:
    """The field Q(names) with graded-lex order, cached per variable tuple."""
    return FracField(tuple(names), QQ, grlex)


def poly_ring(names: tuple[str, ...]) -> PolyRing:
    return ratfun_field(tuple(names)).ring


def to_fraction(c: Any) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    num = getattr(c, "numerator", None)
    den = getattr(c, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    return Fraction(str(c))


def qq(c: Any):
    """Coerce an int/Fraction/str into the ground domain QQ."""
    f = to_fraction(c)
    return QQ(f.numerator, f.denominator)


def is_constant(f: RatFun | MPoly) -> bool:
    if isinstance(f, FracElement):
        return f.numer.is_ground and f.denom.is_ground
    return f.is_ground


def constant_value(f: RatFun | MPoly) -> Fraction:
    if isinstance(f, FracElement):
        if not is_constant(f):
            raise ValueError(f"not a constant: {render(f)}")
        return to_fraction(f.numer.LC) / to_fraction(f.denom.LC) if f.numer else Fraction(0)
    if not f.is_ground:
        raise ValueError(f"not a constant: {render(f)}")
    return to_fraction(f.LC) if f else Fraction(0)


# ---------------------------------------------------------------- gcd & co

def primitive(p: MPoly) -> MPoly:
    """Integer-coefficient primitive associate of p with positive leading coefficient."""
    if not p:
        return p
    _, q = p.clear_denoms()
    q = q.set_ring(p.ring) if q.ring != p.ring else q
    content = 0
    from math import gcd as igcd
    for c in q.itercoeffs():
        content = igcd(content, int(c))
    q = q.quo_ground(QQ(content))
    if q.LC < 0:
        q = -q
    return q


def mpoly_gcd(p: MPoly, q: MPoly) -> MPoly:
    """Greatest common divisor, primitive with positive leading coefficient."""
    if not p and not q:
        return p
    if not q:
        return primitive(p)
    if not p:
        return primitive(q)
    return primitive(p.gcd(q))


def exact_div(p: MPoly, q: MPoly) -> MPoly:
    quo, rem = p.div(q)
    if rem:
        raise ArithmeticError("inexact polynomial division")
    return quo


def _var_index(ring: PolyRing, var: str) -> int:
    names = [str(s) for s in ring.symbols]
    if var not in names:
        raise ValueError(f"variable {var!r} not in ring {names}")
    return names.index(var)


def _coeffs_in(p: MPoly, i: int) -> list[MPoly]:
    """Coefficients of p as a univariate polynomial in variable i (index = power)."""
    ring = p.ring
    out: dict[int, MPoly] = {}
    for mon, c in p.iterterms():
        d = mon[i]
        rest = mon[:i] + (0,) + mon[i + 1:]
        out[d] = out.get(d, ring.zero) + ring({rest: c})
    deg = max(out) if out else -1
    return [out.get(d, ring.zero) for d in range(deg + 1)]


def bareiss_det(mat: list[list[MPoly]], zero: MPoly, one: MPoly) -> MPoly:
    """Determinant of a square polynomial matrix by fraction-free elimination."""
    m = [row[:] for row in mat]
    n = len(m)
    if n == 0:
        return one
    sign = 1
    prev = one
    for k in range(n - 1):
        if not m[k][k]:
            swap = next((r for r in range(k + 1, n) if m[r][k]), None)
            if swap is None:
                return zero
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = exact_div(m[i][j] * m[k][k] - m[i][k] * m[k][j], prev)
            m[i][k] = zero
        prev = m[k][k]
    return m[n - 1][n - 1] if sign > 0 else -m[n - 1][n - 1]


def resultant(p: MPoly, q: MPoly, var: str) -> MPoly:
    """Sylvester resultant of p and q eliminating ``var``."""
    ring = p.ring
    i = _var_index(ring, var)
    a = _coeffs_in(p, i)[::-1]
    b = _coeffs_in(q, i)[::-1]
    m, n = len(a) - 1, len(b) - 1
    if m < 0 or n < 0:
        return ring.zero
    if m == 0 and n == 0:
        return ring.one
    if m == 0:
        return a[0] ** n
    if n == 0:
        return b[0] ** m
    size = m + n
    syl = [[ring.zero] * size for _ in range(size)]
    for r in range(n):
        for j, c in enumerate(a):
            syl[r][r + j] = c
    for r in range(m):
        for j, c in enumerate(b):
            syl[n + r][r + j] = c
    return bareiss_det(syl, ring.zero, ring.one)


def squarefree_part(p: MPoly) -> MPoly:
    """Product of the distinct irreducible factors of p (primitive)."""
    if not p:
        raise ValueError("square-free part of zero")
    q = primitive(p)
    # gcd with all partials at once: a per-variable pass would strip
    # factors that do not involve that variable
    g = q
    for x in q.ring.gens:
        d = q.diff(x)
        if d:
            g = mpoly_gcd(g, d)
    return primitive(exact_div(q, g))


def polynomial_part_split(p: MPoly) -> tuple[tuple[int, ...], MPoly]:
    """Split off the monomial factor: p = z^e * rest with rest not divisible by any z_i."""
    if not p:
        return tuple(), p
    n = p.ring.ngens
    e = tuple(min(m[i] for m in p.itermonoms()) for i in range(n))
    if any(e):
        p = p.ring({tuple(m[i] - e[i] for i in range(n)): c for m, c in p.iterterms()})
    return e, p


def multiplicity(p: MPoly, f: MPoly) -> int:
    """Largest k with f^k dividing p (f non-constant)."""
    k = 0
    while p:
        q, r = p.div(f)
        if r:
            break
        p, k = q, k + 1
    return k


# ---------------------------------------------------------------- rendering

def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _fmt_monomial(mon: Sequence[int], names: Sequence[str]) -> str:
    parts = []
    for e, s in zip(mon, names):
        if e == 1:
            parts.append(s)
        elif e > 1:
            parts.append(f"{s}^{e}")
    return "*".join(parts)


def render_terms(terms: Iterable[tuple[Sequence[int], Fraction]], names: Sequence[str]) -> str:
    """Render (monomial, coefficient) pairs already in display order."""
    out = []
    for mon, c in terms:
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        body = _fmt_monomial(mon, names)
        if not body:
            txt = _fmt_coeff(a)
        elif a == 1:
            txt = body
        else:
            txt = f"{_fmt_coeff(a)}*{body}"
        out.append((sign, txt))
    if not out:
        return "0"
    s = "".join(f"{sg}{t}" for sg, t in out)
    return s[1:] if s.startswith("+") else s


def render_poly(p: MPoly) -> str:
    names = [str(s) for s in p.ring.symbols]
    terms = sorted(p.iterterms(), key=lambda t: (sum(t[0]), t[0]), reverse=True)
    return render_terms(((m, to_fraction(c)) for m, c in terms), names)


def render(f: RatFun | MPoly | Fraction | int) -> str:
    """Canonical text: expanded numerator (and denominator) in graded-lex order."""
    if isinstance(f, (int, Fraction)):
        return _fmt_coeff(Fraction(f)) if f >= 0 else "-" + _fmt_coeff(-Fraction(f))
    if isinstance(f, PolyElement):
        return render_poly(f)
    num, den = normalized_parts(f)
    if den.is_ground:
        return render_poly(num.quo_ground(den.LC))
    ns = render_poly(num)
    ds = render_poly(den)
    if len(num) > 1 or (num.LC != 1 and num.LC != -1):
        ns = f"({ns})"
    if len(den) > 1 or not den.is_monomial or den.LC != 1:
        ds = f"({ds})"
    return f"{ns}/{ds}"


def normalized_parts(f: RatFun) -> tuple[MPoly, MPoly]:
    """Integer-coefficient numerator and denominator, jointly primitive, den positive-leading."""
    from math import gcd, lcm
    num, den = f.numer, f.denom
    if not num:
        return num, den.ring.one
    L = lcm(*[to_fraction(c).denominator for c in list(num.itercoeffs()) + list(den.itercoeffs())])
    num, den = num.mul_ground(QQ(L)), den.mul_ground(QQ(L))
    g = 0
    for c in list(num.itercoeffs()) + list(den.itercoeffs()):
        g = gcd(g, int(c))
    if den.LC < 0:
        g = -g
    return num.quo_ground(QQ(g)), den.quo_ground(QQ(g))


def ratfun_key(f: RatFun) -> tuple:
    num, den = normalized_parts(f)
    return (tuple(sorted((m, str(c)) for m, c in num.iterterms())),
            tuple(sorted((m, str(c)) for m, c in den.iterterms())))


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9']*)|(\*\*|[-+*/^()]))")


class ParseError(ValueError):
    pass


def tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", num))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


def parse_expression(text: str, atom: Callable[[str], Any], number: Callable[[int], Any]) -> Any:
    """Recursive-descent parser for + - * / ^ and parentheses.

    ``atom`` maps identifiers to algebra elements and ``number`` embeds
    integers; the algebra supplies the arithmetic, so the same grammar
    serves polynomials, rational functions and Ore operators.
    Division is only allowed by elements that support ``/``.
    """
    toks = tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None)

    def take():
        nonlocal pos
        t = peek()
        pos += 1
        return t

    def expr():
        kind, val = peek()
        neg = False
        if kind == "op" and val in "+-":
            take()
            neg = val == "-"
        acc = term()
        if neg:
            acc = -acc
        while True:
            kind, val = peek()
            if kind == "op" and val in "+-":
                take()
                rhs = term()
                acc = acc + rhs if val == "+" else acc - rhs
            else:
                return acc

    def term():
        acc = power()
        while True:
            kind, val = peek()
            if kind == "op" and val in "*/":
                take()
                rhs = power()
                acc = acc * rhs if val == "*" else acc / rhs
            elif kind in ("num", "name") or (kind == "op" and val == "("):
                acc = acc * power()  # implicit multiplication, e.g. 3z1
            else:
                return acc

    def power():
        base = atomic()
        kind, val = peek()
        if kind == "op" and val == "^":
            take()
            kind, val = take()
            neg = False
            if kind == "op" and val == "-":
                neg = True
                kind, val = take()
            if kind != "num":
                raise ParseError("exponent must be an integer literal")
            e = int(val)
            return base ** (-e) if neg else base ** e
        return base

    def atomic():
        kind, val = take()
        if kind == "num":
            return number(int(val))
        if kind == "name":
            return atom(val)
        if kind == "op" and val == "(":
            v = expr()
            k2, v2 = take()
            if v2 != ")":
                raise ParseError("missing ')'")
            return v
        if kind == "op" and val == "-":
            return -atomic()
        raise ParseError(f"unexpected token {val!r}")

    result = expr()
    if pos != len(toks):
        raise ParseError(f"trailing input near token {pos}")
    return result


def parse_ratfun(text: str, names: tuple[str, ...]) -> RatFun:
    K = ratfun_field(tuple(names))
    gens = dict(zip(names, K.gens))

    def atom(s):
        if s not in gens:
            raise ParseError(f"unknown symbol {s!r}")
        return gens[s]

    return K(parse_expression(text, atom, lambda n: K(n)))


def parse_poly(text: str, names: tuple[str, ...]) -> MPoly:
    f = parse_ratfun(text, names)
    if not f.denom.is_ground:
        raise ParseError("not a polynomial")
    return f.numer.quo_ground(f.denom.LC)


# ---------------------------------------------------------------- matrices

class FieldMatrix:
    """Dense matrix over a field (Fraction or RatFun entries).

    ``zero``/``one`` fix the field; arithmetic never mutates in place.
    """

    __slots__ = ("rows", "cols", "entries", "zero", "one")

    def __init__(self, entries: Sequence[Sequence[Any]], zero: Any = Fraction(0), one: Any = Fraction(1)):
        self.entries = tuple(tuple(r) for r in entries)
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        if any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged matrix")
        self.zero, self.one = zero, one

    # constructors
    @classmethod
    def identity(cls, n: int, zero: Any = Fraction(0), one: Any = Fraction(1)) -> "FieldMatrix":
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)], zero, one)

    @classmethod
    def zeros(cls, r: int, c: int, zero: Any = Fraction(0), one: Any = Fraction(1)) -> "FieldMatrix":
        return cls([[zero] * c for _ in range(r)], zero, one)

    @classmethod
    def over(cls, field: FracField, entries) -> "FieldMatrix":
        return cls([[field(x) for x in row] for row in entries], field.zero, field.one)

    @classmethod
    def rational(cls, entries) -> "FieldMatrix":
        return cls([[Fraction(x) for x in row] for row in entries])

    def like(self, entries) -> "FieldMatrix":
        return FieldMatrix(entries, self.zero, self.one)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def row(self, i):
        return list(self.entries[i])

    def col(self, j):
        return [r[j] for r in self.entries]

    def map(self, fn: Callable[[Any], Any], zero: Any = None, one: Any = None) -> "FieldMatrix":
        return FieldMatrix([[fn(x) for x in r] for r in self.entries],
                           self.zero if zero is None else zero, self.one if one is None else one)

    def T(self) -> "FieldMatrix":
        return self.like([list(c) for c in zip(*self.entries)]) if self.rows else self

    def __add__(self, o):
        return self.like([[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, o.entries)])

    def __sub__(self, o):
        return self.like([[a - b for a, b in zip(r, s)] for r, s in zip(self.entries, o.entries)])

    def __neg__(self):
        return self.like([[-a for a in r] for r in self.entries])

    def scale(self, c) -> "FieldMatrix":
        return self.like([[c * a for a in r] for r in self.entries])

    def __mul__(self, o):
        if not isinstance(o, FieldMatrix):
            return self.scale(o)
        if self.cols != o.rows:
            raise ValueError("shape mismatch")
        oc = o.T().entries
        out = []
        for r in self.entries:
            row = []
            for c in oc:
                acc = self.zero
                for a, b in zip(r, c):
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return self.like(out)

    __matmul__ = __mul__

    def __pow__(self, k: int):
        out = FieldMatrix.identity(self.rows, self.zero, self.one)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, o):
        return isinstance(o, FieldMatrix) and self.entries == o.entries

    def __hash__(self):
        return hash(self.entries)

    def is_zero(self) -> bool:
        return all(not a for r in self.entries for a in r)

    def tolist(self):
        return [list(r) for r in self.entries]

    def __repr__(self):
        return "FieldMatrix(" + repr([[render(a) if not isinstance(a, Fraction) else str(a) for a in r]
                                      for r in self.entries]) + ")"

    # elimination
    def rref(self) -> tuple["FieldMatrix", list[int]]:
        m = [list(r) for r in self.entries]
        pivots: list[int] = []
        r = 0
        for c in range(self.cols):
            p = next((i for i in range(r, self.rows) if m[i][c]), None)
            if p is None:
                continue
            m[r], m[p] = m[p], m[r]
            inv = self.one / m[r][c]
            m[r] = [x * inv for x in m[r]]
            for i in range(self.rows):
                if i != r and m[i][c]:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == self.rows:
                break
        return self.like(m), pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> list[list[Any]]:
        red, piv = self.rref()
        free = [c for c in range(self.cols) if c not in piv]
        basis = []
        for f in free:
            v = [self.zero] * self.cols
            v[f] = self.one
            for i, pc in enumerate(piv):
                v[pc] = -red.entries[i][f]
            basis.append(v)
        return basis

    def inverse(self) -> "FieldMatrix":
        if self.rows != self.cols:
            raise ValueError("not square")
        n = self.rows
        aug = self.like([list(r) + [self.one if i == j else self.zero for j in range(n)]
                         for i, r in enumerate(self.entries)])
        red, piv = aug.rref()
        if piv[:n] != list(range(n)):
            raise ZeroDivisionError("singular matrix")
        return self.like([r[n:] for r in red.entries])

    def det(self):
        m = [list(r) for r in self.entries]
        n = self.rows
        d = self.one
        for c in range(n):
            p = next((i for i in range(c, n) if m[i][c]), None)
            if p is None:
                return self.zero
            if p != c:
                m[c], m[p] = m[p], m[c]
                d = -d
            d = d * m[c][c]
            inv = self.one / m[c][c]
            for i in range(c + 1, n):
                if m[i][c]:
                    f = m[i][c] * inv
                    m[i] = [a - f * b for a, b in zip(m[i], m[c])]
        return d


def apply_matrix(M: FieldMatrix, v: Sequence[Any]) -> list[Any]:
    out = []
    for r in M.entries:
        acc = M.zero
        for a, b in zip(r, v):
            if a and b:
                acc = acc + a * b
        out.append(acc)
    return out


# ---------------------------------------------------------------- linear solve

@dataclass(frozen=True)
class LinearSolution:
    consistent: bool
    particular: list[Any] | None
    kernel: list[list[Any]]
    failed_row: int | None = None


def _clear_row(row: Sequence[RatFun], ring: PolyRing) -> list[MPoly]:
    den = ring.one
    for x in row:
        if x and not x.denom.is_ground:
            den = den.lcm(x.denom)
    return [exact_div(x.numer * den, x.denom) if x else ring.zero for x in row]


def solve_linear(M: FieldMatrix, b: Sequence[Any]) -> LinearSolution:
    """Solve M x = b with fraction-free (Bareiss) forward elimination.

    Entries may be Fractions or elements of one rational-function field.
    Rows are cleared of denominators, reduced by Bareiss steps whose
    divisions are exact in the polynomial ring, then back-substituted
    in the field.  Returns a particular solution and a kernel basis, or
    an inconsistent result naming the offending (original) row.
    """
    nrows, ncols = M.rows, M.cols
    field_one = M.one
    if isinstance(field_one, FracElement):
        K = field_one.field
        ring = K.ring
        rows = [_clear_row(list(M.entries[i]) + [K(b[i])], ring) for i in range(nrows)]
        zero, one = ring.zero, ring.one
        divide = exact_div
        lift = K
    else:
        from math import lcm
        rows = []
        for i in range(nrows):
            vals = [Fraction(x) for x in M.entries[i]] + [Fraction(b[i])]
            L = lcm(*[v.denominator for v in vals]) if vals else 1
            rows.append([int(v * L) for v in vals])
        zero, one = 0, 1

        def divide(a, d):
            q, r = divmod(a, d)
            if r:
                raise ArithmeticError("inexact integer division")
            return q
        lift = Fraction
    origin = list(range(nrows))
    prev = one
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if rows[i][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        origin[r], origin[p] = origin[p], origin[r]
        piv = rows[r][c]
        for i in range(r + 1, nrows):
            a = rows[i][c]
            rows[i] = [divide(x * piv - a * y, prev) for x, y in zip(rows[i], rows[r])]
        prev = piv
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if rows[i][ncols]:
            return LinearSolution(False, None, [], failed_row=origin[i])
    fz = M.zero
    x = [fz] * ncols
    for i in reversed(range(len(pivots))):
        c = pivots[i]
        acc = lift(rows[i][ncols])
        for j in range(c + 1, ncols):
            if rows[i][j] and x[j]:
                acc = acc - lift(rows[i][j]) * x[j]
        x[c] = acc / lift(rows[i][c])
    kernel = []
    free = [c for c in range(ncols) if c not in pivots]
    for f in free:
        v = [fz] * ncols
        v[f] = field_one
        for i in reversed(range(len(pivots))):
            c = pivots[i]
            acc = fz
            for j in range(c + 1, ncols):
                if rows[i][j] and v[j]:
                    acc = acc - lift(rows[i][j]) * v[j]
            v[c] = acc / lift(rows[i][c])
        kernel.append(v)
    return LinearSolution(True, x, kernel)
