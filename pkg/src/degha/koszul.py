"""Koszul-Tate resolution of the Lagrangian constraints ``R.p = 0`` and the
BRST charge generating it.

The antighost tower has generators ``c_i^(r)`` of parity ``r % 2``; the
differential is the odd derivation

    delta(c^(1)) = R.p,   delta(c^(2l)) = P.c^(2l-1),   delta(c^(2l+1)) = R.c^(2l)

and kills base functions.  Homology is computed by exact ranks on bases
graded by (antighost number, total degree), where every generator counts as
degree one so that ``delta`` preserves total degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from . import linalg
from .graded import (
    GradedDerivation,
    GradedElement,
    GradedGenerator,
    GradedMonomial,
    apply_derivation,
    make_monomial,
)
from .linalg import Matrix, SparseEchelon
from .poly import I, Polynomial, VariableTable, monomials_of_degree, monomials_up_to
from .quadratic import Projectors, is_diagonal


class WindowError(ValueError):
    """Requested antighost number lies outside the certified truncation window."""


@dataclass(frozen=True)
class AntighostTower:
    m: int
    n: int
    R_max: int
    with_ghosts: bool
    table: VariableTable
    antighosts: tuple[GradedGenerator, ...]
    ghosts: tuple[GradedGenerator, ...] = ()
    transformation: str = "antighosts c_i^(r) transform like the momenta p_i; ghosts cbar^i_(r) dually"

    @property
    def M(self) -> int:
        return self.n * self.m

    @property
    def generators(self) -> tuple[GradedGenerator, ...]:
        return self.antighosts + self.ghosts

    def pairing(self) -> list[tuple[GradedGenerator, GradedGenerator]]:
        """Conjugate ghost/antighost pairs ``(cbar^i_(r), c_i^(r))``."""
        if not self.with_ghosts:
            return []
        return [(GradedGenerator("cbar", g.index, g.r), g) for g in self.antighosts]

    def c(self, i: int, r: int) -> GradedElement:
        return GradedElement.gen(self.table, GradedGenerator("c", i, r))

    def cbar(self, i: int, r: int) -> GradedElement:
        return GradedElement.gen(self.table, GradedGenerator("cbar", i, r))


def build_tower(m: int, n: int = 1, R_max: int = 1, with_ghosts: bool = False) -> AntighostTower:
    if R_max < 1:
        raise ValueError("R_max must be >= 1")
    M = n * m
    table = VariableTable.phase_space(m, verticals=with_ghosts, n_momenta=M)
    anti = tuple(GradedGenerator("c", i, r) for r in range(1, R_max + 1) for i in range(1, M + 1))
    ghosts = tuple(GradedGenerator("cbar", i, r) for r in range(1, R_max + 1) for i in range(1, M + 1)) if with_ghosts else ()
    return AntighostTower(m=m, n=n, R_max=R_max, with_ghosts=with_ghosts, table=table, antighosts=anti, ghosts=ghosts)


# ---------------------------------------------------------------------------
# differential


def kt_derivation(tower: AntighostTower, pr: Projectors) -> GradedDerivation:
    table = tower.table
    p = [Polynomial.var(table, n) for n in table.by_role("momentum")]
    M = tower.M
    gens: dict[GradedGenerator, GradedElement] = {}
    for g in tower.antighosts:
        i = g.index - 1
        if g.r == 1:
            val = GradedElement.from_poly(sum((p[k] * pr.R[i][k] for k in range(M) if pr.R[i][k]), Polynomial.zero(table)))
        else:
            mat = pr.P if g.r % 2 == 0 else pr.R
            val = GradedElement.zero(table)
            for k in range(M):
                if mat[i][k]:
                    val = val + tower.c(k + 1, g.r - 1) * mat[i][k]
        gens[g] = val
    return GradedDerivation(table, 1, {}, gens)


def kt_delta(tower: AntighostTower, pr: Projectors, f: GradedElement) -> GradedElement:
    return apply_derivation(kt_derivation(tower, pr), f)


@dataclass
class NilpotencyResult:
    ok: bool
    witness: str | None
    checked: int

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"nilpotent": self.ok, "witness": self.witness, "checked": self.checked}


def generator_monomials(gens: Sequence[GradedGenerator], max_len: int) -> list[GradedMonomial]:
    """All normal-form monomials in ``gens`` with between 1 and ``max_len`` factors."""
    gens = sorted(gens)
    out: list[GradedMonomial] = []

    def rec(start: int, chosen: list[GradedGenerator], left: int):
        if chosen:
            _, mono = make_monomial(chosen)
            out.append(mono)
        if left == 0:
            return
        for j in range(start, len(gens)):
            g = gens[j]
            nxt = j + 1 if g.parity else j
            rec(nxt, chosen + [g], left - 1)

    rec(0, [], max_len)
    return out


def nilpotency_check(tower: AntighostTower, pr: Projectors, D: int = 2) -> NilpotencyResult:
    """``delta^2 = 0`` on every generator and on monomials of total degree <= D."""
    d = kt_derivation(tower, pr)
    table = tower.table
    checked = 0
    candidates: list[GradedElement] = []
    for mono in generator_monomials(tower.antighosts, max(D, 1)):
        candidates.append(GradedElement(table, {mono: Polynomial.constant(table, 1)}))
    if D >= 2:
        for name in table.names:
            x = Polynomial.var(table, name)
            for g in tower.antighosts:
                candidates.append(GradedElement.gen(table, g, x))
    for f in candidates:
        checked += 1
        dd = apply_derivation(d, apply_derivation(d, f))
        if dd:
            return NilpotencyResult(False, f"delta^2({f}) = {dd}", checked)
    return NilpotencyResult(True, None, checked)


# ---------------------------------------------------------------------------
# homology


def _monomials_with_antighost(gens: Sequence[GradedGenerator], k: int, max_len: int) -> list[GradedMonomial]:
    gens = sorted(g for g in gens if g.r <= k)
    out: list[GradedMonomial] = []

    def rec(start: int, chosen: list[GradedGenerator], weight: int):
        if weight == k:
            _, mono = make_monomial(chosen)
            out.append(mono)
            return
        if len(chosen) >= max_len:
            return
        for j in range(start, len(gens)):
            g = gens[j]
            if weight + g.r > k:
                continue
            rec(j + 1 if g.parity else j, chosen + [g], weight + g.r)

    rec(0, [], 0)
    return out


class _GradedComplex:
    """Bases and differential blocks indexed by (antighost k, total degree d)."""

    def __init__(self, table: VariableTable, gens: Sequence[GradedGenerator], deriv: GradedDerivation):
        self.table = table
        self.gens = list(gens)
        self.deriv = deriv
        self.nvars = len(table)
        self._delta_cache: dict[GradedMonomial, GradedElement] = {}
        self._mono_cache: dict[tuple[int, int], list[GradedMonomial]] = {}

    def monos(self, k: int, max_len: int) -> list[GradedMonomial]:
        key = (k, max_len)
        if key not in self._mono_cache:
            self._mono_cache[key] = _monomials_with_antighost(self.gens, k, max_len)
        return self._mono_cache[key]

    def basis(self, k: int, d: int) -> list[tuple[GradedMonomial, tuple[int, ...]]]:
        out = []
        for mono in self.monos(k, d):
            rest = d - mono.length
            if rest < 0:
                continue
            for e in monomials_of_degree(self.nvars, rest):
                out.append((mono, e))
        return out

    def dim(self, k: int, d: int) -> int:
        total = 0
        for mono in self.monos(k, d):
            rest = d - mono.length
            if rest >= 0:
                total += comb(rest + self.nvars - 1, self.nvars - 1) if self.nvars else int(rest == 0)
        return total

    def _delta(self, mono: GradedMonomial) -> GradedElement:
        if mono not in self._delta_cache:
            el = GradedElement(self.table, {mono: Polynomial.constant(self.table, 1)})
            self._delta_cache[mono] = apply_derivation(self.deriv, el)
        return self._delta_cache[mono]

    def rank(self, k: int, d: int) -> int:
        """Rank of delta: C_{k,d} -> C_{k-1,d}."""
        if k <= 0:
            return 0
        ech = SparseEchelon()
        for mono, e in self.basis(k, d):
            img = self._delta(mono)
            vec = {}
            for m2, coeff in img.terms.items():
                mk = m2.sort_key
                for e2, c in coeff.terms.items():
                    vec[(mk, tuple(a + b for a, b in zip(e, e2)))] = c
            ech.add(vec)
        return ech.rank


@dataclass
class HomologyReport:
    k: int
    D: int
    rows: list[dict] = field(default_factory=list)
    vacuous: bool = False

    def h(self, d: int) -> int:
        return next(r["h"] for r in self.rows if r["d"] == d)

    def total_h(self, up_to: int | None = None) -> int:
        lim = self.D - 1 if up_to is None else up_to
        return sum(r["h"] for r in self.rows if r["d"] <= lim)

    @property
    def acyclic(self) -> bool:
        return all(r["h"] == 0 for r in self.rows)

    def to_json(self) -> dict:
        return {"k": self.k, "D": self.D, "vacuous": self.vacuous, "table": self.rows}


def _homology(cx: _GradedComplex, k: int, D: int, expected0=None) -> HomologyReport:
    rep = HomologyReport(k=k, D=D)
    for d in range(D):
        dim = cx.dim(k, d)
        rk_out = cx.rank(k, d)
        ker = dim - rk_out
        im = cx.rank(k + 1, d)
        row = {"d": d, "dim": dim, "ker": ker, "im": im, "h": ker - im}
        if expected0 is not None:
            row["expected"] = expected0(d)
        rep.rows.append(row)
    return rep


def _quotient_count(nvars: int, rank_R: int):
    free = nvars - rank_R

    def count(d: int) -> int:
        return comb(d + free - 1, free - 1) if free > 0 else int(d == 0)

    return count


def homology(tower: AntighostTower, pr: Projectors, k: int, D: int) -> HomologyReport:
    """Dimensions of ``H_k`` in each total degree ``d <= D - 1``."""
    if k >= tower.R_max:
        raise WindowError(f"H_{k} needs generators up to antighost {k + 1}; tower stops at R_max = {tower.R_max}")
    cx = _GradedComplex(tower.table, tower.antighosts, kt_derivation(tower, pr))
    expected = _quotient_count(len(tower.table), linalg.rank(pr.R)) if k == 0 else None
    rep = _homology(cx, k, D, expected)
    rep.vacuous = linalg.is_zero(pr.R)
    return rep


@dataclass
class SubcomplexResult:
    generators: list[GradedGenerator]
    h0: HomologyReport
    h1: HomologyReport
    resolves: bool

    def to_json(self) -> dict:
        return {
            "generators": [str(g) for g in self.generators],
            "H0": self.h0.to_json(),
            "H1": self.h1.to_json(),
            "resolves": self.resolves,
        }


def irreducible_subcomplex(tower: AntighostTower, a: Matrix, pr: Projectors, D: int = 3) -> SubcomplexResult | None:
    """For diagonal ``a``: the antighost-1 generators of the constrained directions.

    Only generators with ``delta(c_i^(1)) != 0`` are kept; a generator with
    zero differential would be an unkilled cycle in ``H_1``.
    """
    if not is_diagonal(linalg.to_matrix(a)):
        return None
    gens = [g for g in tower.antighosts if g.r == 1 and any(pr.R[g.index - 1])]
    sub = AntighostTower(tower.m, tower.n, 1, False, tower.table, tuple(gens))
    deriv = kt_derivation(sub, pr)
    cx = _GradedComplex(tower.table, gens, deriv)
    expected = _quotient_count(len(tower.table), linalg.rank(pr.R))
    h0 = _homology(cx, 0, D, expected)
    h1 = _homology(cx, 1, D)
    ok = all(r["h"] == r["expected"] for r in h0.rows) and h1.acyclic
    return SubcomplexResult(gens, h0, h1, ok)


# ---------------------------------------------------------------------------
# BRST


GHOST_RULE = "{Q, cbar^k_(r)} = (-1)^(r+1) M_jk cbar^j_(r+1), M = P for odd r, M = R for even r"

SIGN_CONVENTION = (
    "left derivatives in every generator; in each product the factor differentiated "
    "from the first argument stands to the left; {,}_S taken with no extra normalization"
)


@dataclass(frozen=True)
class BRSTCharge:
    Q: GradedElement
    R_max: int
    convention: str = SIGN_CONVENTION

    def to_json(self) -> dict:
        return {"charge": str(self.Q), "R_max": self.R_max, "sign_convention": self.convention}


def brst_charge(tower: AntighostTower, pr: Projectors, R_max: int | None = None) -> BRSTCharge:
    if not tower.with_ghosts:
        raise ValueError("BRST charge needs a tower built with ghosts")
    R_max = tower.R_max if R_max is None else min(R_max, tower.R_max)
    table = tower.table
    M = tower.M
    p = [Polynomial.var(table, n) for n in table.by_role("momentum")]
    Q = GradedElement.zero(table)
    for i in range(M):
        Rp = sum((p[k] * pr.R[i][k] for k in range(M) if pr.R[i][k]), Polynomial.zero(table))
        if Rp:
            Q = Q + tower.cbar(i + 1, 1) * Rp
    for r in range(2, R_max + 1):
        mat = pr.P if r % 2 == 0 else pr.R
        for i in range(M):
            for k in range(M):
                if mat[i][k]:
                    Q = Q + tower.cbar(i + 1, r) * tower.c(k + 1, r - 1) * mat[i][k]
    return BRSTCharge(Q * I, R_max)


def _split_parity(f: GradedElement) -> list[tuple[int, GradedElement]]:
    parts: dict[int, dict] = {}
    for mono, c in f.terms.items():
        parts.setdefault(mono.parity, {})[mono] = c
    return [(par, GradedElement._raw(f.table, t)) for par, t in sorted(parts.items())]


def _graded_generators(f: GradedElement, g: GradedElement) -> set[GradedGenerator]:
    return f.generators() | g.generators()


def _vv_part(f: GradedElement, g: GradedElement) -> GradedElement:
    table = f.table
    q = table.by_role("position")
    p = table.by_role("momentum")
    qd = table.by_role("vel_position")
    pd = table.by_role("vel_momentum")
    out = GradedElement.zero(table)
    if not qd:
        return out
    for mom, pos in list(zip(pd, q)) + list(zip(p, qd)):
        a, b = f.diff_base(mom), g.diff_base(pos)
        if a and b:
            out = out + a * b
        a, b = f.diff_base(pos), g.diff_base(mom)
        if a and b:
            out = out - a * b
    return out


def graded_bracket_S(f: GradedElement, g: GradedElement) -> GradedElement:
    """Graded bracket on functions of ``(t, q, p, qd, pd)`` and ghost pairs."""
    if f.table != g.table:
        raise ValueError("bracket arguments over different tables")
    table = f.table
    out = _vv_part(f, g)
    pairs: dict[tuple[int, int], None] = {}
    for h in _graded_generators(f, g):
        pairs[(h.index, h.r)] = None
    ghost = GradedElement.zero(table)
    for par_f, fp in _split_parity(f):
        for (i, r) in pairs:
            sgn_f = -1 if (r * par_f) % 2 else 1
            sr = -1 if r % 2 else 1
            cbl, cu = GradedGenerator("cbarl", i, r), GradedGenerator("cu", i, r)
            cb, c = GradedGenerator("cbar", i, r), GradedGenerator("c", i, r)
            term = (
                fp.diff_gen(cbl) * g.diff_gen(cu)
                + fp.diff_gen(cb) * g.diff_gen(c) * sr
                - fp.diff_gen(c) * g.diff_gen(cb)
                - fp.diff_gen(cu) * g.diff_gen(cbl) * sr
            )
            if term:
                ghost = ghost + term * sgn_f
    if ghost:
        out = out - ghost * I
    return out


@dataclass
class BRSTVerification:
    generator_checks: list[dict]
    base_checks: list[dict]
    ghost_checks: list[dict]
    nilpotency_checks: list[dict]
    convention: str = SIGN_CONVENTION

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.generator_checks + self.base_checks + self.ghost_checks + self.nilpotency_checks)

    def failures(self) -> list[dict]:
        return [c for c in self.generator_checks + self.base_checks + self.ghost_checks + self.nilpotency_checks if not c["ok"]]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "sign_convention": self.convention,
            "generators": self.generator_checks,
            "base_variables": self.base_checks,
            "ghost_transformations": self.ghost_checks,
            "ghost_rule": GHOST_RULE,
            "nilpotency": self.nilpotency_checks,
        }


def verify_brst_generates_delta(Q: BRSTCharge, tower: AntighostTower, pr: Projectors, R_max: int | None = None) -> BRSTVerification:
    R_max = tower.R_max if R_max is None else R_max
    table = tower.table
    d = kt_derivation(tower, pr)
    gen_checks = []
    for g in tower.antighosts:
        if g.r > R_max - 1 and R_max > 1:
            continue
        el = GradedElement.gen(table, g)
        lhs = graded_bracket_S(Q.Q, el)
        rhs = apply_derivation(d, el)
        entry = {"generator": str(g), "bracket": str(lhs), "delta": str(rhs), "ok": lhs == rhs}
        if not entry["ok"] and lhs == -rhs:
            entry["sign_correction"] = -1
        gen_checks.append(entry)
    base_checks = []
    for name in table.by_role("time") + table.by_role("position") + table.by_role("momentum"):
        lhs = graded_bracket_S(Q.Q, GradedElement.from_poly(Polynomial.var(table, name)))
        base_checks.append({"variable": name, "bracket": str(lhs), "ok": lhs.is_zero()})
    ghost_checks = []
    M = tower.M
    for r in range(1, R_max):
        mat = pr.P if r % 2 == 1 else pr.R
        sign = 1 if r % 2 == 1 else -1
        for i in range(1, M + 1):
            lhs = graded_bracket_S(Q.Q, tower.cbar(i, r))
            expected = GradedElement.zero(table)
            for k in range(1, M + 1):
                coef = mat[k - 1][i - 1]
                if coef:
                    expected = expected + tower.cbar(k, r + 1) * (coef * sign)
            ghost_checks.append({"ghost": f"cb{i}_{r}", "image": str(lhs), "expected": str(expected), "ok": lhs == expected})
    nil_checks = []
    for g in tower.antighosts:
        if g.r > R_max - 2:
            continue
        el = GradedElement.gen(table, g)
        twice = graded_bracket_S(Q.Q, graded_bracket_S(Q.Q, el))
        nil_checks.append({"generator": str(g), "QQ": str(twice), "ok": twice.is_zero()})
    return BRSTVerification(gen_checks, base_checks, ghost_checks, nil_checks)


def perturbed_projectors(pr: Projectors, eps: Fraction = Fraction(1, 7)) -> Projectors:
    """Negative control: ``R`` shifted by ``eps`` on its first diagonal entry (so ``R^2 != R``)."""
    R = [list(row) for row in pr.R]
    R[0][0] += eps
    return Projectors(P=pr.P, R=R)


def pairing_constant(tower: AntighostTower) -> object:
    """``{cbar^1_(1), c_1^(1)}_S`` under the recorded convention."""
    el = graded_bracket_S(tower.cbar(1, 1), tower.c(1, 1))
    return el.base_part().constant_term()
