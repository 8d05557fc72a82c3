"""Toric data, lattice polytopes, fan symmetries and the moduli-map degree.

Conventions: ``A`` is n x k with columns the rays Xi in N; ``B`` has rows a
basis of the integer relations among the columns.  A polytope stores facets
as (primitive inward normal m, support h) meaning <m, x> >= h.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors

IntMat = list[list[int]]
IntVec = tuple[int, ...]


class ToricError(ValueError):
    pass


# ---------------------------------------------------------------- integer linear algebra

def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def _primitive(v: Sequence[int]) -> IntVec:
    g = 0
    for x in v:
        g = math.gcd(g, x)
    return tuple(v) if g in (0, 1) else tuple(x // g for x in v)


def hermite_rows(M: Sequence[Sequence[int]]) -> tuple[IntMat, IntMat]:
    """Row Hermite normal form H with a unimodular U such that U M = H.

    Pivots are positive, entries above a pivot are reduced into [0, pivot),
    zero rows come last.
    """
    H = [list(r) for r in M]
    m = len(H)
    ncol = len(H[0]) if H else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    row = 0
    for col in range(ncol):
        if row == m:
            break
        while True:
            nz = [i for i in range(row, m) if H[i][col]]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(H[i][col]))
            H[row], H[p] = H[p], H[row]
            U[row], U[p] = U[p], U[row]
            done = True
            for i in range(row + 1, m):
                q = H[i][col] // H[row][col]
                if q:
                    H[i] = [a - q * b for a, b in zip(H[i], H[row])]
                    U[i] = [a - q * b for a, b in zip(U[i], U[row])]
                if H[i][col]:
                    done = False
            if done:
                break
        if not any(H[i][col] for i in range(row, m)):
            continue
        if H[row][col] < 0:
            H[row] = [-a for a in H[row]]
            U[row] = [-a for a in U[row]]
        for i in range(row):
            q = H[i][col] // H[row][col]
            if q:
                H[i] = [a - q * b for a, b in zip(H[i], H[row])]
                U[i] = [a - q * b for a, b in zip(U[i], U[row])]
        row += 1
    return H, U


def int_rank(M: Sequence[Sequence[int]]) -> int:
    return Matrix(M).rank() if M and M[0] else 0


def integer_kernel(A: Sequence[Sequence[int]]) -> IntMat:
    """Z-basis (rows, Hermite normal form) of {x in Z^k : A x = 0}."""
    k = len(A[0])
    At = [[A[i][j] for i in range(len(A))] for j in range(k)]
    H, U = hermite_rows(At)
    ker = [U[i] for i in range(k) if not any(H[i])]
    if not ker:
        return []
    Hk, _ = hermite_rows(ker)
    return [r for r in Hk if any(r)]


# ---------------------------------------------------------------- toric data

@dataclass(frozen=True)
class ToricData:
    A: tuple[IntVec, ...]
    B: tuple[IntVec, ...]
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def k(self) -> int:
        return len(self.A[0])

    @property
    def r(self) -> int:
        return len(self.B)

    @property
    def rays(self) -> list[IntVec]:
        return [tuple(self.A[i][j] for i in range(self.n)) for j in range(self.k)]

    @classmethod
    def of(cls, A: Sequence[Sequence[int]], B: Sequence[Sequence[int]] | None = None, name: str = "") -> "ToricData":
        A = tuple(tuple(int(x) for x in r) for r in A)
        if B is None:
            B = relation_lattice(A)
        return cls(A, tuple(tuple(int(x) for x in r) for r in B), name)


@dataclass
class Validation:
    valid: bool
    rank_A: int
    r: int
    problems: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"valid": self.valid, "rank_A": self.rank_A, "r": self.r, "problems": self.problems}


def validate(td: ToricData) -> Validation:
    problems: list[str] = []
    k = td.k
    for i, b in enumerate(td.B):
        if len(b) != k:
            problems.append(f"B row {i} has length {len(b)}, expected {k}")
    rank_A = int_rank(td.A)
    if not problems:
        for i, a in enumerate(td.A):
            for j, b in enumerate(td.B):
                if _dot(a, b):
                    problems.append(f"A row {i} . B row {j} = {_dot(a, b)}")
        expected = k - rank_A
        if td.B and int_rank(td.B) != len(td.B):
            problems.append("B rows are linearly dependent")
        elif len(td.B) != expected:
            problems.append(f"B has {len(td.B)} rows, kernel rank is {expected}")
        elif td.B:
            index = math.prod(int(x) for x in invariant_factors(Matrix(td.B), domain=ZZ))
            if abs(index) != 1:
                problems.append(f"B rows span a sublattice of index {abs(index)} in the kernel")
    return Validation(not problems, rank_A, k - rank_A, problems)


def relation_lattice(A: Sequence[Sequence[int]]) -> IntMat:
    rank = int_rank(A)
    if rank < len(A):
        H, U = hermite_rows([list(r) for r in A])
        dependent = [i for i in range(len(A)) if not any(H[i])]
        combos = [[j for j, c in enumerate(U[i]) if c] for i in dependent]
        raise ToricError(f"A is not of full row rank; dependent row combinations {combos}")
    return integer_kernel(A)


def suspend(td: ToricData) -> ToricData:
    A = [list(r) + [0] for r in td.A] + [[1] * (td.k + 1)]
    return ToricData.of(A, name=td.name)


def with_columns(td: ToricData, columns: Sequence[Sequence[int]]) -> ToricData:
    """Append extra rays (e.g. a resolution) and recompute the relations."""
    A = [list(r) + [int(c[i]) for c in columns] for i, r in enumerate(td.A)]
    return ToricData.of(A, name=td.name)


def same_row_space(B1: Sequence[Sequence[int]], B2: Sequence[Sequence[int]]) -> bool:
    h1 = [r for r in hermite_rows([list(r) for r in B1])[0] if any(r)]
    h2 = [r for r in hermite_rows([list(r) for r in B2])[0] if any(r)]
    return h1 == h2


# ---------------------------------------------------------------- polytopes

@dataclass(frozen=True)
class Facet:
    normal: IntVec
    support: int

    def value(self, p: Sequence[int]) -> int:
        return _dot(self.normal, p) - self.support


class PolytopeError(ValueError):
    pass


@dataclass(frozen=True)
class Polytope:
    dim: int
    vertices: tuple[IntVec, ...]
    facets: tuple[Facet, ...]

    @cached_property
    def points(self) -> tuple[IntVec, ...]:
        """All lattice points, by a bounding-box scan."""
        lo = [min(v[i] for v in self.vertices) for i in range(self.dim)]
        hi = [max(v[i] for v in self.vertices) for i in range(self.dim)]
        out = [p for p in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi)))
               if all(f.value(p) >= 0 for f in self.facets)]
        return tuple(sorted(out))

    def tight(self, p: Sequence[int]) -> frozenset[int]:
        return frozenset(i for i, f in enumerate(self.facets) if f.value(p) == 0)

    @cached_property
    def faces(self) -> dict[frozenset[int], frozenset[int]]:
        """Proper faces as {facet-index set: vertex-index set}."""
        vsets = {i: frozenset(j for j, v in enumerate(self.vertices) if f.value(v) == 0)
                 for i, f in enumerate(self.facets)}
        found: dict[frozenset[int], frozenset[int]] = {}
        frontier = set(vsets.values())
        while frontier:
            nxt = set()
            for vs in frontier:
                if not vs:
                    continue
                fs = frozenset(i for i, s in vsets.items() if vs <= s)
                if fs in found:
                    continue
                found[fs] = vs
                for s in vsets.values():
                    w = vs & s
                    if w and w != vs:
                        nxt.add(w)
            frontier = nxt
        return found

    def face_dim(self, vs: frozenset[int]) -> int:
        pts = [self.vertices[j] for j in sorted(vs)]
        base = pts[0]
        return int_rank([[a - b for a, b in zip(p, base)] for p in pts[1:]]) if len(pts) > 1 else 0

    def faces_of_dim(self, d: int) -> list[tuple[frozenset[int], frozenset[int]]]:
        return sorted(((fs, vs) for fs, vs in self.faces.items() if self.face_dim(vs) == d),
                      key=lambda t: sorted(t[1]))

    def interior_count(self, fs: frozenset[int]) -> int:
        """Lattice points in the relative interior of the face cut out by ``fs``."""
        return sum(1 for p in self.points if self.tight(p) == fs)

    def face_points(self, fs: frozenset[int]) -> list[IntVec]:
        return [p for p in self.points if fs <= self.tight(p)]

    def contains(self, p: Sequence[int]) -> bool:
        return all(f.value(p) >= 0 for f in self.facets)


def facets(points: Sequence[Sequence[int]]) -> Polytope:
    pts = sorted({tuple(int(x) for x in p) for p in points})
    if not pts:
        raise PolytopeError("empty point set")
    n = len(pts[0])
    if n > 4:
        raise PolytopeError("facet enumeration is limited to rank <= 4")
    if int_rank([[a - b for a, b in zip(p, pts[0])] for p in pts[1:]]) < n:
        raise PolytopeError("points do not span a full-dimensional polytope")
    found: set[Facet] = set()
    for combo in itertools.combinations(pts, n):
        base = combo[0]
        diffs = [[a - b for a, b in zip(p, base)] for p in combo[1:]]
        ker = integer_kernel(diffs) if diffs else [[1]]
        if len(ker) != 1:
            continue
        m = _primitive(ker[0])
        vals = [_dot(m, p) for p in pts]
        h = _dot(m, base)
        if all(v >= h for v in vals):
            found.add(Facet(m, h))
        elif all(v <= h for v in vals):
            found.add(Facet(tuple(-x for x in m), -h))
    fl = tuple(sorted(found, key=lambda f: (f.normal, f.support)))
    verts = []
    for p in pts:
        normals = [f.normal for f in fl if f.value(p) == 0]
        if normals and int_rank(normals) == n:
            verts.append(p)
    return Polytope(n, tuple(verts), fl)


@dataclass
class ReflexiveResult:
    is_reflexive: bool
    dual: Polytope | None


def reflexive_check(P: Polytope) -> ReflexiveResult:
    origin = (0,) * P.dim
    if not all(f.value(origin) > 0 for f in P.facets):
        raise PolytopeError("origin is not an interior point; the polar dual is unbounded")
    refl = all(f.support == -1 for f in P.facets)
    if not refl:
        return ReflexiveResult(False, None)
    dual = facets([f.normal for f in P.facets])
    return ReflexiveResult(True, dual)


def polar_dual(P: Polytope) -> Polytope:
    res = reflexive_check(P)
    if not res.is_reflexive:
        raise PolytopeError("polytope is not reflexive")
    return res.dual


def interior_filtered_points(P: Polytope) -> list[IntVec]:
    """Lattice points of P not in the relative interior of a facet."""
    vertex_set = set(P.vertices)
    out = []
    for p in P.points:
        t = P.tight(p)
        if len(t) == 1 and p not in vertex_set:
            continue
        out.append(p)
    return out


def dual_face_interior(P: Polytope, dual: Polytope, vs: frozenset[int]) -> int:
    """Interior lattice count of the face of the dual polytope dual to the face with vertex set ``vs``."""
    verts = {P.vertices[j] for j in vs}
    count = 0
    for m in dual.points:
        hit = {v for v in P.vertices if _dot(m, v) == -1}
        if hit == verts:
            count += 1
    return count


def moduli_equality_check(P: Polytope) -> bool:
    dual = polar_dual(P)
    for fs, vs in P.faces_of_dim(P.dim - 2):
        if P.interior_count(fs) and dual_face_interior(P, dual, vs):
            return False
    return True


def _batyrev(P: Polytope, dual: Polytope) -> int:
    n = P.dim
    total = len(P.points) - n - 1
    for fs, _ in P.faces_of_dim(n - 1):
        total -= P.interior_count(fs)
    for fs, vs in P.faces_of_dim(n - 2):
        a = P.interior_count(fs)
        if a:
            total += a * dual_face_interior(P, dual, vs)
    return total


def hodge_numbers(P: Polytope) -> tuple[int, int]:
    """(h11, h21) of the anticanonical hypersurface whose Newton polytope is P."""
    if P.dim != 4:
        raise PolytopeError("Hodge numbers are implemented for 4-dimensional polytopes")
    dual = polar_dual(P)
    return _batyrev(dual, P), _batyrev(P, dual)


# ---------------------------------------------------------------- secondary fan

@dataclass(frozen=True)
class SecondaryFanData:
    rays: tuple[IntVec, ...]
    multiplicities: tuple[int, ...]

    def to_json(self) -> dict:
        return {"rays": [list(r) for r in self.rays], "multiplicities": list(self.multiplicities)}


def secondary_rays(Bbar: Sequence[Sequence[int]]) -> SecondaryFanData:
    if len(Bbar) != 2:
        raise ToricError("secondary fan rays are supported for r = 2 only")
    counts: dict[IntVec, int] = {}
    for j in range(len(Bbar[0])):
        col = (Bbar[0][j], Bbar[1][j])
        if col == (0, 0):
            continue
        p = _primitive(col)
        counts[p] = counts.get(p, 0) + 1
    rays = sorted(counts, key=lambda v: math.atan2(v[1], v[0]) % (2 * math.pi))
    return SecondaryFanData(tuple(rays), tuple(counts[r] for r in rays))


# ---------------------------------------------------------------- symmetries

Perm = tuple[int, ...]


@dataclass(frozen=True)
class FanSymmetry:
    perm: Perm
    matrix: tuple[IntVec, ...]

    def cycles(self) -> str:
        """Cycle notation with 1-based indices, e.g. '(2 3 4)'; '()' for the identity."""
        seen, parts = set(), []
        for i in range(len(self.perm)):
            if i in seen or self.perm[i] == i:
                continue
            cyc, j = [], i
            while j not in seen:
                seen.add(j)
                cyc.append(j + 1)
                j = self.perm[j]
            parts.append("(" + " ".join(map(str, cyc)) + ")")
        return "".join(parts) or "()"


def perm_from_cycles(cycles: Sequence[Sequence[int]], k: int) -> Perm:
    p = list(range(k))
    for cyc in cycles:
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            p[a - 1] = b - 1
    return tuple(p)


def compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return tuple(p[q[i]] for i in range(len(q)))


def _ray_basis(rays: list[IntVec], n: int) -> list[int]:
    basis: list[int] = []
    for j, v in enumerate(rays):
        if int_rank([list(rays[b]) for b in basis] + [list(v)]) > len(basis):
            basis.append(j)
        if len(basis) == n:
            break
    return basis


def aut_xi(td: ToricData) -> list[FanSymmetry]:
    """All unimodular maps of N permuting the rays, sorted by permutation."""
    rays = td.rays
    n = td.n
    if td.k > 8:
        raise ToricError("permutation search is limited to k <= 8 rays")
    basis = _ray_basis(rays, n)
    Sinv = Matrix([list(rays[j]) for j in basis]).T.inv()
    Sinv = [[Fraction(int(x.p), int(x.q)) for x in Sinv.row(i)] for i in range(n)]
    out = []
    for perm in itertools.permutations(range(td.k)):
        D = [[rays[perm[j]][i] for j in basis] for i in range(n)]
        M = [[sum(D[i][t] * Sinv[t][c] for t in range(n)) for c in range(n)] for i in range(n)]
        if any(x.denominator != 1 for row in M for x in row):
            continue
        rows = tuple(tuple(int(x) for x in row) for row in M)
        if any(tuple(_dot(r, rays[j]) for r in rows) != rays[perm[j]] for j in range(td.k)):
            continue
        if abs(Matrix(rows).det()) != 1:
            continue
        out.append(FanSymmetry(tuple(perm), rows))
    return sorted(out, key=lambda s: s.perm)


def permutes_facets(P: Polytope, sym: FanSymmetry) -> bool:
    normals = {f.normal for f in P.facets}
    Minv = Matrix(sym.matrix).inv()
    for m in normals:
        image = tuple(int(x) for x in (Matrix([list(m)]) * Minv))
        if image not in normals:
            return False
    return True


def t_trivial(sym: FanSymmetry, Bbar: Sequence[Sequence[int]]) -> bool:
    """True iff the permutation (extended by fixing the suspended zero point) fixes every relation."""
    k = len(sym.perm)
    if len(Bbar[0]) not in (k, k + 1):
        raise ToricError("symmetry does not extend to the suspended point set")
    perm = list(sym.perm) + list(range(k, len(Bbar[0])))
    for row in Bbar:
        if any(row[perm[j]] != row[j] for j in range(len(row))):
            return False
    return True


class RootSymmetryError(ToricError):
    pass


def demazure_roots(P: Polytope) -> list[IntVec]:
    """Lattice points of P lying on exactly one facet (roots of the toric variety of P's normal fan)."""
    vertex_set = set(P.vertices)
    return [p for p in P.points if len(P.tight(p)) == 1 and p not in vertex_set]


@dataclass
class PhiDegree:
    degree: int
    aut_order: int
    trivial_order: int
    generators_nontrivial: list[str]

    def to_json(self) -> dict:
        return {"degree": self.degree, "aut_order": self.aut_order, "trivial_order": self.trivial_order,
                "non_trivial": self.generators_nontrivial}


def phi_degree(td: ToricData, base_rays: int | None = None) -> PhiDegree:
    """|Aut(Sigma)/Aut^t(Sigma)|.

    ``base_rays`` limits the polytope to the first columns (resolution rays
    excluded); the root-symmetry check refuses when a root exists.
    """
    rays = td.rays[: base_rays or td.k]
    P = facets(rays)
    roots = demazure_roots(P)
    if roots:
        raise RootSymmetryError(f"root symmetries present: {roots}")
    group = aut_xi(td)
    for s in group:
        if not permutes_facets(P, s):
            raise ToricError(f"symmetry {s.cycles()} does not permute the facets")
    Bbar = suspend(td).B
    trivial = [s for s in group if t_trivial(s, Bbar)]
    tp = {s.perm for s in trivial}
    gp = {s.perm for s in group}
    for a in tp:
        for b in tp:
            if compose(a, b) not in tp:
                raise ToricError("internal: trivially acting symmetries are not closed")
        for g in gp:
            ginv = tuple(sorted(range(len(g)), key=lambda i: g[i]))
            if compose(compose(g, a), ginv) not in tp:
                raise ToricError("internal: trivially acting symmetries are not normal")
    if len(group) % len(trivial):
        raise ToricError("internal: subgroup order does not divide the group order")
    return PhiDegree(len(group) // len(trivial), len(group), len(trivial),
                     [s.cycles() for s in group if s.perm not in tp])
