"""Fixture loading and the staged pipeline behind the command line.

A ``Family`` wraps one fixture and computes each stage lazily and at most
once.  Stage results are converted to JSON-ready dictionaries whose
numbers are exact rational strings, so reports are byte-reproducible.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import dmod, gaussmanin, hodge, toric, yukawa
from .exactalg import FieldMatrix, render, render_poly

SCHEMA_VERSION = "1"
FIXTURES = ("V229", "V238", "V286")
EXTERNAL = "external input"


class PipelineError(Exception):
    """Exit code 1: unknown fixture, malformed input, failed stage."""

    kind = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details


class Refusal(Exception):
    """Exit code 2: the requested statement is not certified."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details


# ---------------------------------------------------------------- JSON helpers

def q(x: Any) -> str:
    """Exact rational string."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return render(x)


def qmat(M: Any) -> list[list[str]]:
    rows = M.entries if isinstance(M, FieldMatrix) else M
    return [[q(x) for x in r] for r in rows]


# ---------------------------------------------------------------- fixture schema

@dataclass(frozen=True)
class DivisorProbe:
    label: str
    chart: str | None = None
    axis: str | None = None
    point: tuple[Fraction, ...] = ()
    direction: tuple[Fraction, ...] = ()


@dataclass(frozen=True)
class ChartSpec:
    chart: dmod.Chart
    divisors: tuple[str, str]
    residues: bool = False

    @property
    def name(self) -> str:
        return self.chart.name


@dataclass(frozen=True)
class ConeSpec:
    point: str
    faces: tuple[str, str] | None = None
    literal: str | None = None


@dataclass(frozen=True)
class MirrorSpec:
    of: str
    divisors: tuple[str, str]


@dataclass(frozen=True)
class FamilyFixture:
    name: str
    A: tuple[tuple[int, ...], ...] | None = None
    B: tuple[tuple[int, ...], ...] | None = None
    resolution_rays: tuple[tuple[int, ...], ...] = ()
    zero_column: int | None = None
    rescale: tuple[Fraction, ...] = ()
    frame: tuple[tuple[int, ...], ...] = ()
    swap: tuple[int, ...] = ()
    flip: bool = False
    degree_point: str = "origin"
    divisors: tuple[DivisorProbe, ...] = ()
    charts: tuple[ChartSpec, ...] = ()
    cones: tuple[ConeSpec, ...] = ()
    mirrors: tuple[MirrorSpec, ...] = ()
    external: bool = False
    matrices: dict[str, tuple[tuple[int, ...], ...]] = field(default_factory=dict, compare=False, hash=False)


def _frac(x: Any, where: str) -> Fraction:
    try:
        return Fraction(x) if not isinstance(x, float) else Fraction(str(x))
    except (TypeError, ValueError, ZeroDivisionError):
        raise PipelineError(f"{where}: not a rational number: {x!r}") from None


def _int_rows(rows: Any, where: str) -> tuple[tuple[int, ...], ...]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise PipelineError(f"{where}: expected a list of integer rows")
    out = []
    for i, r in enumerate(rows):
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in r):
            raise PipelineError(f"{where}: row {i} has a non-integer entry")
        out.append(tuple(r))
    if out and len({len(r) for r in out}) != 1:
        raise PipelineError(f"{where}: rows have different lengths")
    return tuple(out)


def parse_fixture(data: dict) -> FamilyFixture:
    if not isinstance(data, dict) or "name" not in data:
        raise PipelineError("malformed input: missing 'name'")
    name = str(data["name"])
    kw: dict[str, Any] = {"name": name, "external": bool(data.get("external", False))}
    tor = data.get("toric")
    if tor is not None:
        A = _int_rows(tor.get("A"), "toric.A")
        if not A:
            raise PipelineError("toric.A: empty matrix")
        if "n" in tor and tor["n"] != len(A):
            raise PipelineError(f"toric.n = {tor['n']} but A has {len(A)} rows")
        if "k" in tor and tor["k"] != len(A[0]):
            raise PipelineError(f"toric.k = {tor['k']} but A has {len(A[0])} columns")
        kw["A"] = A
        if "B" in tor:
            kw["B"] = _int_rows(tor["B"], "toric.B")
        kw["resolution_rays"] = _int_rows(tor.get("resolution_rays", []), "toric.resolution_rays")
        for r in kw["resolution_rays"]:
            if len(r) != len(A):
                raise PipelineError("toric.resolution_rays: length differs from the rank of A")
        if "zero_column" in tor:
            kw["zero_column"] = int(tor["zero_column"])
    pf = data.get("pf", {})
    kw["rescale"] = tuple(_frac(x, "pf.rescale") for x in pf.get("rescale", []))
    kw["frame"] = _int_rows(pf.get("frame", []), "pf.frame")
    sym = data.get("symmetry", {})
    kw["swap"] = tuple(int(x) for x in sym.get("swap", []))
    kw["flip"] = bool(sym.get("flip", False))
    kw["degree_point"] = str(data.get("degree", {}).get("point", "origin"))
    kw["divisors"] = tuple(
        DivisorProbe(str(d["label"]), d.get("chart"), d.get("axis"),
                     tuple(_frac(x, f"divisor {d['label']}") for x in d.get("point", [])),
                     tuple(_frac(x, f"divisor {d['label']}") for x in d.get("direction", [])))
        for d in data.get("divisors", []))
    charts = []
    for c in data.get("charts", []):
        cname = str(c["name"])
        ch = dmod.Chart(cname,
                        tuple(_frac(x, f"chart {cname}") for x in c.get("shift", [])),
                        _int_rows(c.get("exponents", []), f"chart {cname}"),
                        tuple(_frac(x, f"chart {cname}") for x in c.get("rescale", [])),
                        tuple(_frac(x, f"chart {cname}") for x in c.get("post_shift", [])),
                        ("w1", "w2"))
        divs = tuple(c.get("divisors", ["", ""]))
        if len(divs) != 2:
            raise PipelineError(f"chart {cname}: expected two divisor labels")
        charts.append(ChartSpec(ch, divs, bool(c.get("residues", False))))
    kw["charts"] = tuple(charts)
    cones = []
    for c in data.get("cones", []):
        point = str(c.get("point", c.get("chart", "")))
        faces = tuple(c["faces"]) if "faces" in c else None
        lit = None if c.get("computed", "chart" in c) else c.get("type")
        if lit is None and not c.get("computed", "chart" in c):
            raise PipelineError(f"cone {point}: neither computed nor given a type")
        cones.append(ConeSpec(point, faces, lit))
    kw["cones"] = tuple(cones)
    kw["mirrors"] = tuple(MirrorSpec(str(m["of"]), tuple(m["divisors"])) for m in data.get("mirror", []))
    mats = data.get("matrices", {})
    kw["matrices"] = {k: _int_rows(v, f"matrices.{k}") for k, v in mats.items()}
    return FamilyFixture(**kw)


def read_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise PipelineError(f"input file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise PipelineError(f"malformed input file: {exc}") from None


@lru_cache(maxsize=None)
def load_fixture(name: str) -> FamilyFixture:
    if name not in FIXTURES:
        raise PipelineError(f"unknown fixture {name!r}", known=list(FIXTURES))
    text = resources.files("periodscope.fixtures").joinpath(f"{name}.toml").read_text()
    return parse_fixture(tomllib.loads(text))


@lru_cache(maxsize=None)
def family(name: str) -> "Family":
    return Family(load_fixture(name))


# ---------------------------------------------------------------- cone entries

@dataclass
class ConeEntry:
    point: str
    faces: tuple[str, str]
    cone: hodge.ConeType
    withheld: tuple[tuple[str, ...], ...]
    source: str
    mirror_of: str | None = None
    flags: tuple[str, ...] = ()

    def withheld_label(self) -> str:
        parts = []
        for t, cands in zip(self.cone.names(), self.withheld):
            alts = [c for c in cands if c != t]
            if t not in cands:
                parts.append("(" + ",".join(cands) + ")")
            else:
                parts.append(t + ("(" + ",".join(alts) + ")" if alts else ""))
        return "<" + "|".join(parts) + ">"

    def to_json(self) -> dict:
        out = {"point": self.point, "faces": list(self.faces), "type": self.cone.label(),
               "withheld": self.withheld_label(), "candidates": [list(c) for c in self.withheld],
               "source": self.source, "flags": list(self.flags + self.cone.warnings)}
        if self.mirror_of:
            out["mirror_of"] = self.mirror_of
        return out


def _cone_of_names(names: Sequence[str]) -> hodge.ConeType:
    a, b, c = (hodge.parse_type(x) for x in names)
    return hodge.ConeType(a, b, c)


def parse_cone_label(label: str) -> hodge.ConeType:
    body = label.strip().lstrip("<").rstrip(">")
    parts = [p.split("(")[0] for p in body.split("|")]
    if len(parts) != 3:
        raise PipelineError(f"malformed cone type {label!r}")
    return _cone_of_names(parts)


@dataclass
class DivisorType:
    label: str
    monodromy: gaussmanin.LocalMonodromy
    exact: hodge.LMHSType
    withheld: tuple[str, ...]

    def to_json(self) -> dict:
        lm = self.monodromy
        flags = []
        if not lm.unipotent:
            flags.append("finite monodromy factor")
        if self.exact.name == "I0":
            flags.append("trivial log-monodromy")
        return {"label": self.label, "type": self.exact.name, "withheld": list(self.withheld),
                "exponents": [q(e) for e in lm.exponents], "ranks": list(lm.ranks),
                "f3_weight": lm.f3_weight(), "flags": flags}


def _types_of(N: Any, f3_weight: int) -> tuple[hodge.LMHSType, tuple[str, ...]]:
    exact = hodge.lmhs_type(N, f3_weight=f3_weight)
    return exact, hodge.lmhs_type(N).candidates


# ---------------------------------------------------------------- family pipeline

def _rotate(seq: Sequence[Any], seed: int) -> list[Any]:
    k = seed % len(seq)
    return list(seq[k:]) + list(seq[:k])


class Family:
    def __init__(self, fx: FamilyFixture, seed: int = 0, max_order: int = 5):
        self.fx = fx
        self.seed = seed
        self.max_order = max_order

    @property
    def name(self) -> str:
        return self.fx.name

    def _need_toric(self, stage: str) -> None:
        if self.fx.external:
            raise PipelineError(f"{stage}: {self.name} carries nilpotent data only ({EXTERNAL})")
        if self.fx.A is None:
            raise PipelineError(f"{stage}: input has no [toric] section")

    def _need(self, what: Any, stage: str, key: str) -> None:
        if not what:
            raise PipelineError(f"{stage}: input has no {key}")

    # ---- toric
    @cached_property
    def toric_data(self) -> toric.ToricData:
        self._need_toric("toric")
        td = toric.ToricData.of(self.fx.A, self.fx.B, self.name) if self.fx.B else None
        if td is None:
            try:
                td = toric.ToricData.of(self.fx.A, name=self.name)
            except toric.ToricError as exc:
                raise PipelineError(str(exc)) from None
        if self.fx.resolution_rays:
            td = toric.with_columns(td, self.fx.resolution_rays)
        return td

    @cached_property
    def base_rays(self) -> int:
        return len(self.fx.A[0])

    @cached_property
    def suspended(self) -> toric.ToricData:
        return toric.suspend(self.toric_data)

    def validate(self) -> dict:
        self._need_toric("validate")
        td = toric.ToricData.of(self.fx.A, self.fx.B, self.name) if self.fx.B else self.toric_data
        v = toric.validate(td)
        out = {"toric": {"A": [list(r) for r in td.A], "B": [list(r) for r in td.B], **v.to_json()}}
        if not v.valid:
            raise PipelineError("toric data failed validation", problems=v.problems)
        if td is self.toric_data:
            out["toric"]["suspended_B"] = [list(r) for r in self.suspended.B]
        return out

    # ---- D-module
    @cached_property
    def gkz_ops(self) -> list[dmod.LogDiffOp]:
        self._need_toric("gkz")
        zc = self.fx.zero_column if self.fx.zero_column is not None else self.suspended.k - 1
        return dmod.gkz_operators(self.suspended.B, zc)

    @cached_property
    def pf_search(self) -> dmod.FactorSearchResult:
        try:
            return dmod.pf_from_gkz(self.gkz_ops)
        except LookupError as exc:
            raise PipelineError(str(exc)) from None

    @cached_property
    def pf_ops(self) -> list[dmod.LogDiffOp]:
        ops = self.pf_search.ops
        if self.fx.rescale:
            ops = [dmod.rescale(op, self.fx.rescale) for op in ops]
        return ops

    @cached_property
    def alg(self) -> dmod.OreAlgebra:
        return self.pf_ops[0].alg

    @cached_property
    def gb(self) -> dmod.GroebnerBasis:
        return dmod.groebner(self.pf_ops)

    def pf_identity(self) -> bool:
        """sum a_i P_i^GKZ = L . P^PF_replaced, checked by Ore multiplication on rescaled forms."""
        r = self.pf_search
        if r.factor is None:
            return True
        resc = (lambda op: dmod.rescale(op, self.fx.rescale)) if self.fx.rescale else (lambda op: op)
        lhs = self.alg.zero()
        for a, P in zip(r.combination, self.gkz_ops):
            if a:
                lhs = lhs + resc(P) * a
        return lhs == resc(r.factor) * self.pf_ops[r.replaced]

    @cached_property
    def discriminant(self) -> dmod.Discriminant:
        return dmod.char_discriminant(self.pf_ops)

    @cached_property
    def swap_verified(self) -> bool | None:
        if not self.fx.swap:
            return None
        E = [[int(self.fx.swap[j] == i) for j in range(self.alg.n)] for i in range(self.alg.n)]
        ch = dmod.Chart("swap", exponents=tuple(tuple(r) for r in E), names=self.alg.names)
        return all(dmod.ideal_contains(self.gb, op) for op in dmod.change_chart(self.pf_ops, ch))

    # ---- connection
    @cached_property
    def frame(self) -> gaussmanin.Frame:
        self._need(self.fx.frame, "connection", "pf.frame")
        return gaussmanin.Frame.of(self.fx.frame)

    @cached_property
    def connection(self) -> gaussmanin.Connection:
        return gaussmanin.connection(self.gb, self.frame)

    @cached_property
    def origin_residues(self) -> gaussmanin.ResidueData:
        if self.fx.external:
            N = [FieldMatrix.rational(self.fx.matrices[k]) for k in ("N1", "N2")]
            levels = self.frame.hodge_levels
            flag = []
            for p in (3, 2, 1, 0):
                idx = [j for j, k in enumerate(levels) if k <= 3 - p]
                flag.append([[Fraction(int(t == j)) for t in range(len(levels))] for j in idx])
            eig = [gaussmanin._rational_eigenvalues(M) for M in N]
            unip = all(len(e) == M.rows and not any(e) for e, M in zip(eig, N))
            return gaussmanin.ResidueData(self.fx.degree_point, (), N, eig, unip, flag, [EXTERNAL])
        return gaussmanin.residues(self.connection)

    @cached_property
    def Q_input(self) -> FieldMatrix | None:
        m = self.fx.matrices.get("Q")
        return FieldMatrix.rational(m) if m else None

    def chart(self, name: str) -> ChartSpec:
        for c in self.fx.charts:
            if c.name == name:
                return c
        raise PipelineError(f"unknown chart {name!r}", known=[c.name for c in self.fx.charts])

    def _curves(self, kind: str) -> list[gaussmanin.Curve]:
        return _rotate(gaussmanin.default_curves(kind), self.seed)

    @lru_cache(maxsize=None)
    def chart_monodromy(self, name: str, kind: str) -> gaussmanin.LocalMonodromy:
        spec = self.chart(name)
        ch = None if name == "origin" and not spec.chart.exponents and not spec.chart.shift else spec.chart
        try:
            return gaussmanin.boundary_monodromy(self.connection, ch, kind, self._curves(kind))
        except gaussmanin.CurveError as exc:
            raise PipelineError(f"chart {name}, {kind}: {exc}") from None

    @lru_cache(maxsize=None)
    def divisor(self, label: str) -> DivisorType:
        probe = next((d for d in self.fx.divisors if d.label == label), None)
        if probe is None:
            raise PipelineError(f"unknown divisor {label!r}")
        if probe.chart is not None:
            lm = self.chart_monodromy(probe.chart, probe.axis or "left")
        else:
            try:
                lm = gaussmanin.curve_monodromy(self.connection, None,
                                                gaussmanin.Curve.of(probe.point, probe.direction))
            except gaussmanin.CurveError as exc:
                raise PipelineError(f"divisor {label}: {exc}") from None
        exact, withheld = _types_of(lm.N, lm.f3_weight())
        return DivisorType(label, lm, exact, withheld)

    # ---- cones
    def _residue_cone(self, point: str, faces: tuple[str, str]) -> ConeEntry:
        rd = self.origin_residues
        N1, N2 = rd.matrices
        Q = self.Q_input
        exact = hodge.cone_type(N1, N2, Q, rd.F_limit)
        wh = hodge.cone_type(N1, N2, Q)
        return ConeEntry(point, faces, exact, wh.candidate_sets(), "residues")

    def _curve_cone(self, spec: ChartSpec, faces: tuple[str, str]) -> ConeEntry:
        A, C = self.divisor(faces[0]), self.divisor(faces[1])
        lm = self.chart_monodromy(spec.name, "corner")
        B, B_wh = _types_of(lm.N, lm.f3_weight())
        inner: set[str] = set()
        for a in A.withheld:
            for c in C.withheld:
                inner.update(hodge.cone_candidates(a, c))
        inner_c = tuple(sorted(inner, key=hodge.type_order))
        flags = []
        if not inner_c:
            flags.append("no interior type is compatible with the face types")
        if any(not d.monodromy.unipotent for d in (A, C)) or not lm.unipotent:
            flags.append("finite monodromy factor")
        ct = hodge.ConeType(A.exact, B, C.exact, hodge._monotonicity(A.exact, B, C.exact))
        return ConeEntry(spec.name, faces, ct, (A.withheld, inner_c, C.withheld), "curves", None, tuple(flags))

    @cached_property
    def cone_table(self) -> list[ConeEntry]:
        out: list[ConeEntry] = []
        for cs in self.fx.cones:
            if cs.literal is not None:
                ct = parse_cone_label(cs.literal)
                out.append(ConeEntry(cs.point, ("", ""), ct, tuple((n,) for n in ct.names()), EXTERNAL))
                continue
            if self.fx.external:
                out.append(self._residue_cone(cs.point, ("N1", "N2")))
                continue
            spec = self.chart(cs.point)
            faces = cs.faces or spec.divisors
            out.append(self._residue_cone(cs.point, faces) if spec.residues else self._curve_cone(spec, faces))
        for m in self.fx.mirrors:
            src = next((e for e in out if e.point == m.of), None)
            if src is None:
                raise PipelineError(f"mirror of unknown cone {m.of!r}")
            if not self.swap_verified:
                raise PipelineError("mirror copies need a verified symmetry of the Picard-Fuchs ideal")
            out.append(ConeEntry(m.of + "'", m.divisors, src.cone, src.withheld, "symmetry", m.of, src.flags))
        return out

    # ---- Yukawa
    @cached_property
    def relations(self) -> list[yukawa.Relation]:
        return yukawa.generate_relations(self.pf_ops, self.max_order)

    @cached_property
    def npoint(self) -> yukawa.NPointTable:
        try:
            return yukawa.solve_npoint(self.relations, self.gb)
        except yukawa.NPointError as exc:
            raise PipelineError(str(exc)) from None

    @cached_property
    def factor_seeds(self) -> list[Any]:
        ring = self.alg.ring
        seeds = list(ring.gens) + list(self.discriminant.components)
        tab = self.npoint
        for e in yukawa.multi_indices(self.alg.n, 3):
            seeds.append(tab.K(e).denom)
        return seeds

    @cached_property
    def closed_form(self) -> yukawa.ClosedForm:
        try:
            return yukawa.integrate_closed_form(self.npoint.rho, self.factor_seeds)
        except yukawa.ClosedFormError as exc:
            raise PipelineError(str(exc), residual=exc.residual) from None

    @cached_property
    def intersection(self) -> yukawa.IntersectionForm:
        return yukawa.intersection_matrix(self.npoint, self.fx.frame, self.closed_form)

    def pairing_flat(self) -> bool:
        Qz = self.intersection.Qz
        c = self.connection
        return all((gaussmanin.delta_matrix(Qz, s) - (c.R[s].T() * Qz + Qz * c.R[s])).is_zero()
                   for s in range(self.alg.n))

    # ---- moduli
    @cached_property
    def polytope(self) -> toric.Polytope:
        return toric.facets(self.toric_data.rays)

    @cached_property
    def phi(self) -> toric.PhiDegree:
        try:
            return toric.phi_degree(self.toric_data, base_rays=self.base_rays)
        except toric.RootSymmetryError as exc:
            raise Refusal(str(exc)) from None

    # ---- degree
    def degree_report(self) -> hodge.DegreeReport:
        table = [(e.point, e.cone) for e in self.cone_table]
        rd = self.origin_residues
        local = hodge.local_iso_degree(rd.matrices[0], rd.matrices[1])
        if not self.fx.external and not self.chart(self.fx.degree_point).residues:
            raise PipelineError("the local degree needs a residue point")
        try:
            return hodge.generic_degree(table, self.fx.degree_point, self.fx.flip, local)
        except hodge.DegreeRefused as exc:
            entry = next(e for e in self.cone_table if e.point == self.fx.degree_point)
            raise Refusal(str(exc), point=self.fx.degree_point, cone=entry.cone.label(),
                          clashes=exc.clashes, local=str(local)) from None


# ---------------------------------------------------------------- command payloads

def _ops_json(ops: Sequence[dmod.LogDiffOp]) -> list[str]:
    return [op.canonical().to_text() for op in ops]


def stage_toric(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    return f.validate()["toric"]


def stage_gkz(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    return {"operators": _ops_json(f.gkz_ops),
            "zero_column": f.fx.zero_column if f.fx.zero_column is not None else f.suspended.k - 1}


def stage_pf(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    r = f.pf_search
    out = {"unscaled": _ops_json(r.ops), "operators": _ops_json(f.pf_ops),
           "rescale": [q(x) for x in f.fx.rescale], "rank": r.rank}
    if r.factor is not None:
        out["split"] = {"factor": r.factor.to_text(), "combination": list(r.combination),
                        "replaced": r.replaced, "identity_verified": f.pf_identity()}
    return out


def stage_rank(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    st = f.gb.staircase()
    out = {"rank": dmod.holonomic_rank(f.gb), "staircase": [list(e) for e in st],
           "order": dmod.GREVLEX.describe()}
    if f.fx.frame:
        out["frame"] = [list(e) for e in f.fx.frame]
        out["frame_is_staircase"] = sorted(map(tuple, f.fx.frame)) == sorted(map(tuple, st))
    return out


def stage_discriminant(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    d = f.discriminant
    return {"components": [render_poly(c) for c in d.components], "boundary": d.boundary, "note": d.note}


def stage_connection(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    c = f.connection
    return {"frame": [list(e) for e in f.fx.frame], "R": [qmat(R) for R in c.R],
            "flat": gaussmanin.flatness_check(c)}


def _residue_json(rd: gaussmanin.ResidueData) -> dict:
    out = {"chart": rd.chart, "point": [q(x) for x in rd.point], "N": [qmat(N) for N in rd.matrices],
           "eigenvalues": [[q(x) for x in e] for e in rd.eigenvalues], "unipotent": rd.unipotent,
           "notes": list(rd.notes)}
    if rd.unipotent:
        out["commute"] = gaussmanin.commute(rd.matrices[0], rd.matrices[1])
        out["mum"] = gaussmanin.mum_check(rd)
        total = rd.matrices[0] + rd.matrices[1]
        out["weight_graded"] = list(hodge.weight_filtration(total).graded)
    return out


def _lm_json(lm: gaussmanin.LocalMonodromy) -> dict:
    return {"exponents": [q(e) for e in lm.exponents], "unipotent": lm.unipotent, "ranks": list(lm.ranks),
            "f3_weight": lm.f3_weight(), "N": qmat(lm.N)}


def stage_monodromy(f: Family, chart: str | None) -> dict:
    name = chart or "origin"
    if f.fx.external:
        if name != f.fx.degree_point and name != "origin":
            raise PipelineError(f"unknown chart {name!r}", known=[f.fx.degree_point])
        return {"chart": name, "residues": _residue_json(f.origin_residues)}
    spec = f.chart(name)
    out: dict[str, Any] = {"chart": name, "divisors": list(spec.divisors)}
    if spec.residues:
        out["residues"] = _residue_json(f.origin_residues)
    kinds = [k for k, d in (("left", spec.divisors[0]), ("right", spec.divisors[1])) if d]
    if len(kinds) == 2:
        kinds.insert(1, "corner")
    out["curves"] = {k: _lm_json(f.chart_monodromy(name, k)) for k in kinds}
    return out


def stage_lmhs(f: Family) -> dict:
    out: dict[str, Any] = {"cones": [e.to_json() for e in f.cone_table]}
    if not f.fx.external:
        out["divisors"] = [f.divisor(d.label).to_json() for d in f.fx.divisors]
        if f.fx.swap:
            out["symmetry_verified"] = f.swap_verified
    computed = [e for e in f.cone_table if e.mirror_of is None]
    out["distinct_entries"] = len(computed)
    out["mirror_copies"] = len(f.cone_table) - len(computed)
    return out


def stage_yukawa(f: Family) -> dict:
    if f.fx.external:
        Q = f.Q_input
        return {"status": EXTERNAL, "Q0": qmat(Q),
                "polarized": [hodge.polarization_check(N, Q) for N in f.origin_residues.matrices]}
    tab = f.npoint
    iform = f.intersection
    K = {"".join(map(str, e)): q(tab.K(e)) for e in yukawa.multi_indices(f.alg.n, 3)}
    return {"relations": len(f.relations), "max_order": f.max_order, "rho": [q(r) for r in tab.rho],
            "integrable": tab.integrable, "K_over_K30": K, "closed_form": f.closed_form.render(),
            "Q0": qmat(iform.Q0), "scale": q(iform.scale), "Q0_normalized": qmat(iform.normalized),
            "antisymmetric": (iform.Qz + iform.Qz.T()).is_zero(), "flat": f.pairing_flat(),
            "polarized": [hodge.polarization_check(N, iform.Q0) for N in f.origin_residues.matrices]}


def stage_moduli(f: Family) -> dict:
    if f.fx.external:
        return {"status": EXTERNAL}
    P = f.polytope
    refl = toric.reflexive_check(P)
    h11, h21 = toric.hodge_numbers(P)
    sec = toric.secondary_rays(f.suspended.B)
    phi = f.phi
    return {"facets": len(P.facets), "vertices": len(P.vertices), "points": len(P.points),
            "reflexive": refl.is_reflexive, "hodge": {"h11": h11, "h21": h21},
            "moduli_equality": toric.moduli_equality_check(P),
            "filtered_points": len(toric.interior_filtered_points(P)),
            "secondary": sec.to_json(), "phi": phi.to_json()}


def stage_degree(f: Family) -> dict:
    rep = f.degree_report()
    return {"degree": rep.degree, "local": rep.local, "flip": rep.flip, "point": rep.chosen, "cone": rep.cone,
            "factorization": f"{rep.local} x {rep.flip}"}


REPORT_STAGES = ("toric", "gkz", "pf", "rank", "discriminant", "residues", "cones", "yukawa", "moduli", "degree")


def stage_report(f: Family) -> dict:
    out: dict[str, Any] = {}
    out["toric"] = stage_toric(f)
    out["gkz"] = stage_gkz(f)
    out["pf"] = stage_pf(f)
    out["rank"] = stage_rank(f)
    out["discriminant"] = stage_discriminant(f)
    out["residues"] = (_residue_json(f.origin_residues))
    out["charts"] = [{"name": c.name, "divisors": list(c.divisors)} for c in f.fx.charts]
    out["cones"] = stage_lmhs(f)
    out["yukawa"] = stage_yukawa(f)
    out["moduli"] = stage_moduli(f)
    try:
        out["degree"] = stage_degree(f)
    except Refusal as exc:
        out["degree"] = {"refused": str(exc), **{k: v for k, v in exc.details.items()}}
    return out
