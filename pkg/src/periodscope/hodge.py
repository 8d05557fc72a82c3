"""Monodromy weight filtrations, LMHS types, cone types and degree rules.

All linear algebra is over Q on coordinate columns; a nilpotent ``N`` acts
by ``v -> N v``.  Types are for weight-3 variations with Hodge numbers
(1, h, h, 1); the default is h = 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence

from .exactalg import FieldMatrix, apply_matrix

Vec = list[Fraction]
FAMILIES = ("I", "II", "III", "IV")


# ---------------------------------------------------------------- subspaces

def _mat(rows: Sequence[Sequence[Any]]) -> FieldMatrix:
    return FieldMatrix([[Fraction(x) for x in r] for r in rows])


def as_matrix(N: Any) -> FieldMatrix:
    return N if isinstance(N, FieldMatrix) else _mat(N)


def span_basis(vectors: Iterable[Sequence[Fraction]], base: Sequence[Sequence[Fraction]] = ()) -> list[Vec]:
    """Members of ``vectors`` that are independent modulo span(base), greedily in order."""
    base = [list(b) for b in base]
    chosen: list[Vec] = []
    rank = _mat(base).rank() if base else 0
    for v in vectors:
        v = [Fraction(x) for x in v]
        if not any(v):
            continue
        trial = base + chosen + [v]
        r = _mat(trial).rank()
        if r > rank:
            chosen.append(v)
            rank = r
    return chosen


def row_basis(vectors: Sequence[Sequence[Fraction]]) -> list[Vec]:
    """Reduced echelon basis of the span (canonical)."""
    if not vectors:
        return []
    red, piv = _mat(vectors).rref()
    return [list(red.entries[i]) for i in range(len(piv))]


def kernel(M: FieldMatrix) -> list[Vec]:
    return [list(v) for v in M.nullspace()]


def image(M: FieldMatrix) -> list[Vec]:
    return row_basis(M.T().entries) if M.rows else []


def intersect(U: Sequence[Vec], V: Sequence[Vec], dim: int) -> list[Vec]:
    if not U or not V:
        return []
    # solve sum a_i u_i = sum b_j v_j
    cols = [list(u) for u in U] + [[-x for x in v] for v in V]
    M = FieldMatrix([[cols[c][r] for c in range(len(cols))] for r in range(dim)])
    out = []
    for sol in M.nullspace():
        out.append([sum((sol[i] * U[i][r] for i in range(len(U))), Fraction(0)) for r in range(dim)])
    return row_basis(out)


def add_spaces(U: Sequence[Vec], V: Sequence[Vec]) -> list[Vec]:
    return row_basis(list(U) + list(V))


def contains(U: Sequence[Vec], v: Sequence[Fraction]) -> bool:
    if not any(v):
        return True
    if not U:
        return False
    return _mat(list(U) + [list(v)]).rank() == _mat(U).rank()


# ---------------------------------------------------------------- weight filtration

class NotNilpotent(ValueError):
    pass


def nilpotency_index(N: FieldMatrix) -> int:
    """Largest d with N^d != 0; raises NotNilpotent."""
    n = N.rows
    P = FieldMatrix.identity(n)
    for d in range(n + 1):
        if P.is_zero():
            return d - 1
        P = P * N
    raise NotNilpotent("matrix is not nilpotent")


@dataclass(frozen=True)
class WeightFiltration:
    center: int
    dim: int
    spaces: tuple[tuple[tuple[Fraction, ...], ...], ...]   # basis of W_0 .. W_{2 center}

    def subspace(self, k: int) -> list[Vec]:
        if k < 0:
            return []
        k = min(k, len(self.spaces) - 1)
        return [list(v) for v in self.spaces[k]]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.spaces)

    @property
    def graded(self) -> tuple[int, ...]:
        d = self.dims
        return tuple(d[k] - (d[k - 1] if k else 0) for k in range(len(d)))

    def weight_of(self, v: Sequence[Fraction]) -> int | None:
        """Smallest k with v in W_k (None for v = 0)."""
        if not any(v):
            return None
        for k in range(len(self.spaces)):
            if contains(self.subspace(k), v):
                return k
        raise ValueError("vector outside the ambient space")


def weight_filtration(N: Any, center: int = 3) -> WeightFiltration:
    """W(N) centered at ``center``: W_{c+k} = sum_{j >= max(0,-k)} im N^j cap ker N^{j+k+1}."""
    N = as_matrix(N)
    n = N.rows
    d = nilpotency_index(N)
    powers = [FieldMatrix.identity(n)]
    for _ in range(d + 2 + 2 * center):
        powers.append(powers[-1] * N)
    ims = [image(P) if not P.is_zero() else [] for P in powers]
    kers = [kernel(P) for P in powers]
    spaces = []
    for w in range(2 * center + 1):
        k = w - center
        acc: list[Vec] = []
        for j in range(max(0, -k), d + 1):
            if j + k + 1 < 0:
                continue
            kk = kers[min(j + k + 1, len(kers) - 1)]
            acc = add_spaces(acc, intersect(ims[j], kk, n))
        spaces.append(tuple(tuple(v) for v in acc))
    return WeightFiltration(center, n, tuple(spaces))


def weight_filtration_ok(N: Any, W: WeightFiltration) -> bool:
    """Both defining properties: N W_k in W_{k-2}, and N^k : Gr_{c+k} -> Gr_{c-k} bijective."""
    N = as_matrix(N)
    c = W.center
    for k in range(len(W.spaces)):
        for v in W.subspace(k):
            if not contains(W.subspace(k - 2), apply_matrix(N, v)):
                return False
    g = W.graded
    for k in range(1, c + 1):
        if g[c + k] != g[c - k]:
            return False
        # N^k W_{c+k} + W_{c-k-1} must have dimension dim W_{c-k} (surjective onto Gr_{c-k})
        Nk = N ** k
        imgs = [apply_matrix(Nk, v) for v in W.subspace(c + k)]
        span = add_spaces(imgs, W.subspace(c - k - 1))
        if len(span) != len(W.subspace(c - k)):
            return False
    if W.dims[-1] != W.dim:
        return False
    return True


def is_hodge_tate(W: WeightFiltration) -> bool:
    """Only even weights occur."""
    return all(g == 0 for k, g in enumerate(W.graded) if k % 2)


def rank_profile(N: Any, upto: int = 3) -> tuple[int, ...]:
    N = as_matrix(N)
    out = []
    P = N
    for _ in range(upto):
        out.append(P.rank())
        P = P * N
    return tuple(out)


def jordan_signature(N: Any) -> tuple[int, ...]:
    """Jordan block sizes (descending) from ranks of powers."""
    N = as_matrix(N)
    n = N.rows
    r = [n]
    P = FieldMatrix.identity(n)
    while r[-1]:
        P = P * N
        r.append(P.rank())
        if len(r) > n + 1:
            raise NotNilpotent("matrix is not nilpotent")
    # number of blocks of size >= j is r[j-1] - r[j]
    ge = [r[j - 1] - r[j] for j in range(1, len(r))]
    sizes: list[int] = []
    for j in range(len(ge), 0, -1):
        exact = ge[j - 1] - (ge[j] if j < len(ge) else 0)
        sizes += [j] * exact
    return tuple(sizes)


def polarization_check(N: Any, Q: Any) -> bool:
    N, Q = as_matrix(N), as_matrix(Q)
    return (N.T() * Q + Q * N).is_zero()


# ---------------------------------------------------------------- catalog

@dataclass(frozen=True)
class Diamond:
    """Hodge-Deligne numbers h^{p,q} of a limiting mixed Hodge structure."""
    h: tuple[tuple[int, ...], ...]     # h[p][q], 0 <= p,q <= 3

    @property
    def graded(self) -> tuple[int, ...]:
        return tuple(sum(self.h[p][w - p] for p in range(4) if 0 <= w - p <= 3) for w in range(7))

    @property
    def family(self) -> int:
        return next(q for q in range(4) if self.h[3][q])

    @property
    def index(self) -> int:
        return self.h[1][1]

    @property
    def blocks(self) -> tuple[int, ...]:
        """Jordan block sizes from primitive dimensions of the weight grading."""
        g = self.graded
        sizes: list[int] = []
        for d in range(3, -1, -1):
            prim = g[3 + d] - (g[3 + d + 2] if 3 + d + 2 <= 6 else 0)
            sizes += [d + 1] * prim
        return tuple(sizes)

    @property
    def ranks(self) -> tuple[int, int, int]:
        b = self.blocks
        return tuple(sum(max(0, s - j) for s in b) for j in (1, 2, 3))  # type: ignore[return-value]

    @property
    def name(self) -> str:
        return FAMILIES[self.family] + str(self.index)


@lru_cache(maxsize=None)
def admissible_diamonds(h21: int = 2) -> tuple[Diamond, ...]:
    """Every diamond with Hodge numbers (1, h21, h21, 1), both symmetries and Lefschetz injectivity."""
    hp = (1, h21, h21, 1)   # h^{3,*}, h^{2,*}, h^{1,*}, h^{0,*} row sums indexed by p = 3..0
    row_sum = {3: hp[0], 2: hp[1], 1: hp[2], 0: hp[3]}
    # free cells under h^{p,q} = h^{q,p} = h^{3-q,3-p}
    cells = sorted({min((p, q), (q, p), (3 - q, 3 - p), (3 - p, 3 - q)) for p in range(4) for q in range(4)})
    out = []
    bound = max(row_sum.values())
    for vals in itertools.product(range(bound + 1), repeat=len(cells)):
        assign = dict(zip(cells, vals))
        h = [[assign[min((p, q), (q, p), (3 - q, 3 - p), (3 - p, 3 - q))] for q in range(4)] for p in range(4)]
        if any(sum(h[p]) != row_sum[p] for p in range(4)):
            continue
        if any(h[p][q] > h[p - 1][q - 1] for p in range(1, 4) for q in range(1, 4) if p + q >= 4):
            continue
        out.append(Diamond(tuple(tuple(r) for r in h)))
    out.sort(key=lambda d: (d.family, d.index))
    return tuple(out)


@dataclass(frozen=True)
class LMHSType:
    family: int                 # 0..3 for I..IV
    index: int
    ambiguity: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return FAMILIES[self.family] + str(self.index)

    def label(self) -> str:
        """Name with alternatives in parentheses, e.g. III0(IV2)."""
        alts = [a for a in self.ambiguity if a != self.name]
        return self.name + ("(" + ",".join(alts) + ")" if alts else "")

    @property
    def candidates(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.ambiguity) | {self.name}, key=type_order))


def type_order(name: str) -> tuple[int, int]:
    fam = name.rstrip("0123456789")
    return FAMILIES.index(fam), int(name[len(fam):])


def parse_type(name: str) -> LMHSType:
    f, a = type_order(name)
    return LMHSType(f, a)


def catalog(h21: int = 2) -> dict[str, Diamond]:
    return {d.name: d for d in admissible_diamonds(h21)}


class NoAdmissibleType(ValueError):
    pass


def graded_hodge_numbers(W: WeightFiltration, flag: Sequence[Sequence[Vec]]) -> dict[tuple[int, int], int]:
    """h^{p,q} = dim Gr_F^p Gr^W_{p+q}; ``flag`` lists bases of F^3, F^2, F^1, F^0."""
    F = {3 - i: [list(v) for v in flag[i]] for i in range(4)}
    F[4] = []
    n = W.dim

    def fw(p: int, k: int) -> int:
        if p > 4 or k < 0:
            return 0
        Fp = F[p] if p >= 0 else [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        return len(add_spaces(intersect(Fp, W.subspace(k), n), W.subspace(k - 1))) - len(W.subspace(k - 1)) \
            if Fp and W.subspace(k) else 0

    out = {}
    for p in range(4):
        for q in range(4):
            k = p + q
            out[(p, q)] = fw(p, k) - fw(p + 1, k)
    return out


def lmhs_type(N: Any, Q: Any = None, F: Any = None, *, f3_weight: int | None = None,
              h21: int | None = None) -> LMHSType:
    """Type of (W(N), F).

    Without F, every admissible type with the same Jordan data and weight
    grading is returned as the ambiguity set.  ``F`` may be a full flag
    (bases of F^3..F^0) or ``f3_weight`` may give the weight of the F^3 line.
    """
    N = as_matrix(N)
    if Q is not None and not polarization_check(N, Q):
        raise NoAdmissibleType("N is not an infinitesimal isometry of Q")
    if h21 is None:
        h21 = (N.rows - 2) // 2
    W = weight_filtration(N)
    ranks = rank_profile(N)
    matches = [d for d in admissible_diamonds(h21) if d.ranks == ranks and d.graded == W.graded]
    if not matches:
        raise NoAdmissibleType(f"no admissible diamond with ranks {ranks}, graded {W.graded}")
    names = tuple(d.name for d in matches)
    if F is not None:
        hpq = graded_hodge_numbers(W, F)
        fam = next(q for q in range(4) if hpq[(3, q)])
        chosen = [d for d in matches if d.family == fam and d.index == hpq[(1, 1)]]
        if len(chosen) != 1:
            raise NoAdmissibleType(f"flag gives h^(3,{fam}), h^(1,1)={hpq[(1, 1)]}; no catalog match")
        return LMHSType(chosen[0].family, chosen[0].index)
    if f3_weight is not None:
        fam = f3_weight - 3
        chosen = [d for d in matches if d.family == fam]
        if len(chosen) != 1:
            raise NoAdmissibleType(f"F^3 weight {f3_weight} does not single out a type among {names}")
        return LMHSType(chosen[0].family, chosen[0].index)
    first = matches[0]
    return LMHSType(first.family, first.index, names if len(names) > 1 else ())


def f3_weight_of(N: Any, v: Sequence[Fraction]) -> int:
    W = weight_filtration(N)
    w = W.weight_of(v)
    if w is None:
        raise ValueError("zero F^3 vector")
    return w


# ---------------------------------------------------------------- cones

@dataclass(frozen=True)
class ConeType:
    A: LMHSType
    B: LMHSType
    C: LMHSType
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def label(self) -> str:
        return "<" + "|".join(t.label() for t in (self.A, self.B, self.C)) + ">"

    def names(self) -> tuple[str, str, str]:
        return (self.A.name, self.B.name, self.C.name)

    def candidate_sets(self) -> tuple[tuple[str, ...], ...]:
        return tuple(t.candidates for t in (self.A, self.B, self.C))


def _monotonicity(A: LMHSType, B: LMHSType, C: LMHSType) -> tuple[str, ...]:
    if B.family < max(A.family, C.family):
        return ("interior family below a face family",)
    return ()


def cone_type(N1: Any, N2: Any, Q: Any = None, F: Any = None) -> ConeType:
    """<type(N1) | type(N1+N2) | type(N2)>, each with the same F (or none)."""
    N1, N2 = as_matrix(N1), as_matrix(N2)
    if not (N1 * N2 - N2 * N1).is_zero():
        raise ValueError("nilpotents do not commute")
    A = lmhs_type(N1, Q, F)
    B = lmhs_type(N1 + N2, Q, F)
    C = lmhs_type(N2, Q, F)
    return ConeType(A, B, C, _monotonicity(A, B, C))


def _relative_ok(side: Diamond, other_side: Diamond, interior: Diamond) -> bool:
    """Can the other face's nilpotent act on Gr^{W(side)} with the ranks of ``other_side``?

    Blocks of a nilpotent relative to W(side): a block of size d sitting in
    Gr_k^{W(side)} has interior weights k+d-1-2i.  Realizability asks for
    a choice of block sizes per graded piece, symmetric under k <-> 6-k,
    whose collected weights give interior's graded dims and whose
    total ranks do not exceed other_side's ranks.
    """
    g = side.graded
    choices: list[list[tuple[int, ...]]] = []
    for k in range(4):
        # counts[i] = number of blocks of size i+1 inside Gr_k
        choices.append(list(_compositions_by_size(g[k])))
    target = interior.graded
    ranks = other_side.ranks
    for pick in itertools.product(*choices):
        per_k = {k: pick[k] for k in range(4)}
        for k in range(4, 7):
            per_k[k] = per_k[6 - k]
        weights = [0] * 7
        rk = [0, 0, 0]
        ok = True
        for k, counts in per_k.items():
            for size_minus_one, cnt in enumerate(counts):
                if not cnt:
                    continue
                d = size_minus_one + 1
                for i in range(d):
                    w = k + d - 1 - 2 * i
                    if not 0 <= w <= 6:
                        ok = False
                        break
                    weights[w] += cnt
                for j in range(3):
                    rk[j] += cnt * max(0, d - j - 1)
        if ok and tuple(weights) == target and all(rk[j] <= ranks[j] for j in range(3)):
            return True
    return False


@lru_cache(maxsize=None)
def _compositions_by_size(dim: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for c in itertools.product(range(dim + 1), repeat=4):
        if sum((i + 1) * c[i] for i in range(4)) == dim:
            out.append(c)
    return tuple(out)


def cone_candidates(A: str, C: str, h21: int = 2) -> tuple[str, ...]:
    """Interior types compatible with the two face types, with F withheld.

    Rules: the interior family lies between max(fam A, fam C) and
    min(3, fam A + fam C); ranks of powers dominate both faces and
    rank N does not exceed the sum of face ranks; the interior weight
    grading is realizable from each face's grading by the other face.
    """
    cat = catalog(h21)
    a, c = cat[A], cat[C]
    out = []
    for d in admissible_diamonds(h21):
        if not max(a.family, c.family) <= d.family <= min(3, a.family + c.family):
            continue
        if any(d.ranks[j] < max(a.ranks[j], c.ranks[j]) for j in range(3)):
            continue
        if d.ranks[0] > a.ranks[0] + c.ranks[0]:
            continue
        if not (_relative_ok(a, c, d) and _relative_ok(c, a, d)):
            continue
        out.append(d.name)
    return tuple(out)


# ---------------------------------------------------------------- degree rules

def knu_flip_degree(ct: ConeType, flip_symmetry_present: bool) -> int:
    if ct.A.name != ct.C.name:
        return 1
    return 2 if flip_symmetry_present else 1


INCONCLUSIVE = "inconclusive"


def local_iso_degree(N1: Any, N2: Any, e1: Sequence[Fraction] | None = None) -> int | str:
    """1 when N1 e1 and N2 e1 are independent, else inconclusive."""
    N1, N2 = as_matrix(N1), as_matrix(N2)
    if e1 is None:
        e1 = [Fraction(int(i == 0)) for i in range(N1.rows)]
    v1, v2 = apply_matrix(N1, e1), apply_matrix(N2, e1)
    return 1 if _mat([v1, v2]).rank() == 2 else INCONCLUSIVE


class DegreeRefused(Exception):
    def __init__(self, message: str, clashes: Sequence[str] = ()):
        super().__init__(message)
        self.clashes = list(clashes)


@dataclass(frozen=True)
class DegreeReport:
    degree: int
    local: int
    flip: int
    chosen: str
    cone: str


def unordered_key(ct: ConeType) -> tuple:
    """Cone type up to exchanging the two faces (conjugation may swap the rays)."""
    a, b, c = ct.names()
    return tuple(sorted((a, c))), b


def generic_degree(cones: Sequence[tuple[str, ConeType]], chosen: str, flip: bool,
                   local: int | str) -> DegreeReport:
    """deg = local degree x flip degree at a cone whose type is unique in the catalog.

    Uniqueness compares types with the two faces unordered.
    """
    table = dict(cones)
    if chosen not in table:
        raise DegreeRefused(f"unknown point {chosen}")
    ct = table[chosen]
    key = unordered_key(ct)
    clashes = [p for p, t in cones if p != chosen and unordered_key(t) == key]
    if clashes:
        raise DegreeRefused("cone type of the chosen point is not unique", clashes)
    if local != 1:
        raise DegreeRefused("local isomorphism not certified")
    fd = knu_flip_degree(ct, flip)
    return DegreeReport(local * fd, local, fd, chosen, ct.label())
