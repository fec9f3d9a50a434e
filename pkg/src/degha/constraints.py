"""Poisson brackets, truncated constraint ideals and the Dirac algorithm.

Three brackets are supported:

* ``V``  on ``(t, q, p)``: ``{f, g} = df/dp_i dg/dq^i - dg/dp_i df/dq^i``
  (``t`` is a parameter),
* ``T``  on ``(t, q, p, pt)``: the ``V`` bracket plus the ``(pt, t)`` pair,
* ``VV`` on ``(t, q, p, qd, pd)``: conjugate pairs ``(q, pd)`` and ``(qd, p)``.

Ideal membership is tested in the finite span of ``generator * monomial``
products up to a total degree ``D``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import linalg
from .hamiltonian import HamiltonianData, modified_hamiltonian  # noqa: F401  (re-export)
from .linalg import SparseEchelon
from .poly import Polynomial, TableMismatchError, VariableTable, monomials_up_to

log = logging.getLogger(__name__)

BRACKET_KINDS = ("V", "T", "VV")


class TruncationError(ValueError):
    pass


class ProjectabilityError(ValueError):
    pass


def _pairs(table: VariableTable, kind: str) -> list[tuple[str, str]]:
    """(momentum-like, position-like) name pairs for the bracket ``kind``."""
    q = table.by_role("position")
    p = table.by_role("momentum")
    if kind == "V":
        return list(zip(p, q))
    if kind == "T":
        if "pt" not in table:
            raise TableMismatchError("T bracket needs a table with pt")
        return [("pt", "t")] + list(zip(p, q))
    if kind == "VV":
        qd = table.by_role("vel_position")
        pd = table.by_role("vel_momentum")
        if not qd:
            raise TableMismatchError("VV bracket needs a table with verticals")
        return list(zip(pd, q)) + list(zip(p, qd))
    raise ValueError(f"unknown bracket kind {kind!r}")


def poisson(kind: str, f: Polynomial, g: Polynomial) -> Polynomial:
    if f.table != g.table:
        raise TableMismatchError("bracket arguments over different tables")
    out = Polynomial.zero(f.table)
    for mom, pos in _pairs(f.table, kind):
        a = f.diff(mom)
        b = g.diff(pos)
        if a and b:
            out = out + a * b
        a = g.diff(mom)
        b = f.diff(pos)
        if a and b:
            out = out - a * b
    return out


def t_table(table: VariableTable) -> VariableTable:
    return table.extended(time_momentum=True)


def v_table(table: VariableTable) -> VariableTable:
    return table.extended(time_momentum=False)


def hstar(H: HamiltonianData | Polynomial) -> Polynomial:
    """``pt + H`` on the cotangent table."""
    h = H.H if isinstance(H, HamiltonianData) else H
    T = t_table(h.table)
    return Polynomial.var(T, "pt") + h.embed(T)


def pullback(f: Polynomial) -> Polynomial:
    """Move a ``pt``-free polynomial from the T table back to the V table."""
    if f.depends_on("pt"):
        raise ValueError(f"polynomial {f} depends on pt")
    return f.embed(v_table(f.table))


def evolution_derivative(H: HamiltonianData | Polynomial, f: Polynomial) -> Polynomial:
    """``{H*, f}_T`` pulled back to the V table; equals ``df/dt + {H, f}_V``."""
    h = H.H if isinstance(H, HamiltonianData) else H
    T = t_table(h.table)
    return pullback(poisson("T", hstar(h), f.embed(T)))


# ---------------------------------------------------------------------------
# ideals


@dataclass
class ConstraintSet:
    generators: list[Polynomial]
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if any(g.is_zero() for g in self.generators):
            raise ValueError("constraint generators must be nonzero")
        if not self.tags:
            self.tags = ["primary"] * len(self.generators)
        if len(self.tags) != len(self.generators):
            raise ValueError("one generation tag per generator")
        tables = {g.table for g in self.generators}
        if len(tables) > 1:
            raise TableMismatchError("constraints over different tables")

    @property
    def table(self) -> VariableTable:
        return self.generators[0].table

    def max_degree(self) -> int:
        return max((g.degree() for g in self.generators), default=0)


@dataclass(frozen=True)
class IdealTruncation:
    D: int


class TruncatedIdeal:
    """Span of ``g * x^e`` for generators ``g`` and ``deg(g) + |e| <= D``."""

    def __init__(self, generators: Sequence[Polynomial], D: int):
        self.D = D
        self.generators = list(generators)
        self.table = generators[0].table if generators else None
        for g in self.generators:
            if g.degree() > D:
                raise TruncationError(f"generator {g} has degree {g.degree()} > D = {D}")
        self.echelon = SparseEchelon()
        self._mono_cache: dict[int, list] = {}
        for g in self.generators:
            self._add_generator(g)

    def _monos(self, d: int):
        if d not in self._mono_cache:
            self._mono_cache[d] = [Polynomial.monomial(self.table, e) for e in monomials_up_to(len(self.table), d)]
        return self._mono_cache[d]

    def _add_generator(self, g: Polynomial) -> bool:
        grew = False
        for mono in self._monos(self.D - g.degree()):
            if self.echelon.add(_keyed(g * mono)):
                grew = True
        return grew

    def extend(self, g: Polynomial) -> bool:
        if g.degree() > self.D:
            raise TruncationError(f"generator {g} has degree {g.degree()} > D = {self.D}")
        if self.table is None:
            self.table = g.table
        self.generators.append(g)
        return self._add_generator(g)

    def contains(self, f: Polynomial) -> bool:
        if f.degree() > self.D:
            raise TruncationError(f"degree {f.degree()} exceeds truncation D = {self.D}")
        return self.echelon.contains(_keyed(f))

    def remainder(self, f: Polynomial) -> Polynomial:
        if f.degree() > self.D:
            raise TruncationError(f"degree {f.degree()} exceeds truncation D = {self.D}")
        rem = self.echelon.reduce(_keyed(f))
        return Polynomial(f.table, {_unkey(k): c for k, c in rem.items()})

    @property
    def dimension(self) -> int:
        return self.echelon.rank


def _keyed(f: Polynomial) -> dict:
    # highest graded monomial first so remainders prefer low-degree leftovers
    return {(-sum(e), tuple(-x for x in e)): c for e, c in f.terms.items()}


def _unkey(k) -> tuple:
    return tuple(-x for x in k[1])


def ideal_member(f: Polynomial, S: ConstraintSet, tr: IdealTruncation) -> bool:
    if f.is_zero():
        return True
    return TruncatedIdeal(S.generators, tr.D).contains(f)


# ---------------------------------------------------------------------------
# Dirac algorithm


@dataclass
class DiracReport:
    generations: list[list[Polynomial]]
    closed: bool
    final: ConstraintSet
    truncation: int
    status: str
    closure_verified: bool = False

    def to_json(self) -> dict:
        return {
            "generations": [[str(g) for g in gen] for gen in self.generations],
            "n_generations": len(self.generations),
            "closed": self.closed,
            "status": self.status,
            "closure_verified": self.closure_verified,
            "truncation_degree": self.truncation,
            "final_constraints": [{"constraint": str(g), "tag": t} for g, t in zip(self.final.generators, self.final.tags)],
        }


_TAGS = ["primary", "secondary", "tertiary", "quaternary"]


def _tag(k: int) -> str:
    return _TAGS[k] if k < len(_TAGS) else f"generation-{k + 1}"


def dirac_algorithm(H: HamiltonianData | Polynomial, primary: ConstraintSet | Sequence[Polynomial], tr: IdealTruncation, max_generations: int | None = None) -> DiracReport:
    if not isinstance(primary, ConstraintSet):
        primary = ConstraintSet(list(primary))
    if not primary.generators:
        raise ValueError("primary constraint set is empty")
    h = H.H if isinstance(H, HamiltonianData) else H
    vt = v_table(h.table)
    prim = [g.embed(vt).normalized() for g in primary.generators]
    bound = max_generations if max_generations is not None else 10 * max(vt.m, 1)
    ideal = TruncatedIdeal(prim, tr.D)
    generations = [prim]
    tags = ["primary"] * len(prim)
    gens = list(prim)
    frontier = prim
    status = "closed"
    closed = True
    while True:
        new = []
        try:
            for f in frontier:
                g = evolution_derivative(h, f)
                if g.is_zero() or ideal.contains(g):
                    continue
                g = g.normalized()
                ideal.extend(g)
                new.append(g)
        except TruncationError as exc:
            status = f"truncation overflow: {exc}"
            closed = False
            break
        if not new:
            break
        if len(generations) >= bound:
            status = f"generation bound {bound} reached"
            closed = False
            break
        generations.append(new)
        tags.extend([_tag(len(generations) - 1)] * len(new))
        gens.extend(new)
        frontier = new
    final = ConstraintSet(gens, tags)
    verified = False
    if closed:
        check = TruncatedIdeal(gens, tr.D)
        verified = all(check.contains(evolution_derivative(h, f)) for f in gens)
    log.debug("dirac: %d generations, status=%s", len(generations), status)
    return DiracReport(generations, closed, final, tr.D, status, verified)


# ---------------------------------------------------------------------------
# classification


@dataclass
class ClassificationReport:
    generators: list[Polynomial]
    classes: list[str]
    brackets: list[list[Polynomial]]
    remainders: list[list[Polynomial]]
    truncation: int

    @property
    def coisotropic(self) -> bool:
        return all(c == "first" for c in self.classes)

    def to_json(self) -> dict:
        return {
            "constraints": [{"constraint": str(g), "class": c} for g, c in zip(self.generators, self.classes)],
            "bracket_matrix": [[str(x) for x in row] for row in self.brackets],
            "reduced_bracket_matrix": [[str(x) for x in row] for row in self.remainders],
            "coisotropic": self.coisotropic,
            "truncation_degree": self.truncation,
        }


def classify(S: ConstraintSet, tr: IdealTruncation) -> ClassificationReport:
    vt = v_table(S.table)
    gens = [g.embed(vt) for g in S.generators]
    ideal = TruncatedIdeal(gens, tr.D)
    brackets, rems, classes = [], [], []
    for f in gens:
        row, rrow = [], []
        for g in gens:
            b = poisson("V", f, g)
            row.append(b)
            rrow.append(ideal.remainder(b) if not b.is_zero() else b)
        brackets.append(row)
        rems.append(rrow)
        classes.append("first" if all(r.is_zero() for r in rrow) else "second")
    return ClassificationReport(gens, classes, brackets, rems, tr.D)


def generalized_hamiltonian_shift(H: HamiltonianData | Polynomial, S: ConstraintSet, tr: IdealTruncation, coeff_degree: int = 0):
    """Look for ``f`` in the span of second-class generators (times monomials of
    degree <= ``coeff_degree``) such that ``{H* + f, g}_T`` lies in the
    truncated ideal for every generator ``g``.  Returns ``f`` or ``None``.
    """
    h = H.H if isinstance(H, HamiltonianData) else H
    vt = v_table(h.table)
    rep = classify(S, tr)
    second = [g for g, c in zip(rep.generators, rep.classes) if c == "second"]
    gens = rep.generators
    ideal = TruncatedIdeal(gens, tr.D)
    basis = []
    for g in second:
        for e in monomials_up_to(len(vt), coeff_degree):
            basis.append(g * Polynomial.monomial(vt, e))
    # unknowns lambda_j; equations: rem(v_g) + sum_j lambda_j rem({B_j, g}) = 0
    rows: dict[tuple, dict[int, object]] = {}
    rhs: dict[tuple, object] = {}
    for gi, g in enumerate(gens):
        v = ideal.remainder(evolution_derivative(h, g))
        for e, c in v.terms.items():
            rhs[(gi, e)] = -c
        for j, B in enumerate(basis):
            w = ideal.remainder(poisson("V", B, g))
            for e, c in w.terms.items():
                rows.setdefault((gi, e), {})[j] = c
    keys = sorted(set(rows) | set(rhs))
    if not keys:
        return Polynomial.zero(vt)
    nb = len(basis)
    aug = [[rows.get(k, {}).get(j, 0) for j in range(nb)] + [rhs.get(k, 0)] for k in keys]
    red, piv = linalg.rref(linalg.to_matrix(aug))
    if nb in piv:
        return None
    lam = [0] * nb
    for i, pc in enumerate(piv):
        lam[pc] = red[i][nb]
    f = Polynomial.zero(vt)
    for l, B in zip(lam, basis):
        if l:
            f = f + B * l
    return f


# ---------------------------------------------------------------------------
# symmetry currents


@dataclass(frozen=True)
class VectorField:
    """Projectable vector field ``ut d/dt + u^i d/dq^i`` on configuration space."""

    ut: object
    uq: tuple[Polynomial, ...]

    def __post_init__(self):
        if isinstance(self.ut, Polynomial):
            if not self.ut.is_constant():
                raise ProjectabilityError("u is not projectable: dt-component must be constant")
        for u in self.uq:
            bad = [v for v in u.variables() if v != "t" and not v.startswith("q")]
            if bad:
                raise ProjectabilityError(f"configuration vector field may depend on (t, q) only; found {bad}")

    @property
    def ut_value(self):
        return self.ut.constant_term() if isinstance(self.ut, Polynomial) else self.ut


def current(u: VectorField, H: HamiltonianData | Polynomial) -> Polynomial:
    """``J_u = u^i p_i - u^t H``."""
    h = H.H if isinstance(H, HamiltonianData) else H
    vt = h.table
    p = [Polynomial.var(vt, n) for n in vt.by_role("momentum")]
    J = Polynomial.zero(vt)
    for ui, pi in zip(u.uq, p):
        J = J + ui.embed(vt) * pi
    return J - h * u.ut_value


def lie_bracket(u: VectorField, v: VectorField) -> VectorField:
    table = u.uq[0].table if u.uq else v.uq[0].table
    qn = table.by_role("position")
    out = []
    for i in range(len(u.uq)):
        c = v.uq[i].diff("t") * u.ut_value - u.uq[i].diff("t") * v.ut_value
        for j, name in enumerate(qn):
            c = c + u.uq[j] * v.uq[i].diff(name) - v.uq[j] * u.uq[i].diff(name)
        out.append(c)
    return VectorField(0, tuple(out))


@dataclass
class CurrentReport:
    currents: list[Polynomial]
    conserved: list[bool]
    bracket_law: list[dict]
    compatible: bool
    coisotropic: bool

    def to_json(self) -> dict:
        return {
            "currents": [str(j) for j in self.currents],
            "conserved": self.conserved,
            "bracket_law": self.bracket_law,
            "compatible": self.compatible,
            "coisotropic": self.coisotropic,
        }


def symmetry_current(fields: Sequence[VectorField], H: HamiltonianData | Polynomial, tr: IdealTruncation | None = None) -> CurrentReport:
    h = H.H if isinstance(H, HamiltonianData) else H
    Js = [current(u, h) for u in fields]
    conserved = [evolution_derivative(h, J).is_zero() for J in Js]
    law = []
    for a in range(len(fields)):
        for b in range(a, len(fields)):
            lhs = poisson("V", Js[a], Js[b])
            rhs = current(lie_bracket(fields[a], fields[b]), h)
            law.append({
                "pair": [a, b],
                "both_symmetries": conserved[a] and conserved[b],
                "holds": lhs == rhs,
                "bracket": str(lhs),
            })
    nonzero = [J for J in Js if not J.is_zero()]
    compatible = coisotropic = True
    if nonzero:
        D = tr.D if tr is not None else max(J.degree() for J in nonzero) + 1
        ideal = TruncatedIdeal(nonzero, D)

        def member(x: Polynomial) -> bool:
            if x.is_zero():
                return True
            try:
                return ideal.contains(x)
            except TruncationError:
                return False

        compatible = all(member(evolution_derivative(h, J)) for J in nonzero)
        coisotropic = all(member(poisson("V", f, g)) for f in nonzero for g in nonzero)
    return CurrentReport(Js, conserved, law, compatible, coisotropic)


def brackets_closed(gens: Iterable[Polynomial], kind: str = "V") -> bool:
    gs = list(gens)
    return all(poisson(kind, f, g).is_zero() for f in gs for g in gs)
