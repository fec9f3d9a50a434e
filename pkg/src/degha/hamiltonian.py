"""Hamiltonian forms weakly associated with a quadratic Lagrangian.

For a kernel connection ``Gamma`` and splitting ``sigma = sigma0 + sigma1``
the Hamiltonian density is::

    H = Gamma.p + 1/2 p.sigma0.p + p.sigma1.p - c'

All maps (Hamiltonian map, constrained density) are derived from gradients
of this polynomial.  Mechanics only (``n = 1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import linalg
from .poly import Polynomial, VariableTable
from .quadratic import (
    KernelConnection,
    Projectors,
    QuadraticLagrangian,
    SigmaSplitting,
    potential_prime,
    projectors,
)


class ProvenanceError(ValueError):
    pass


@dataclass(frozen=True)
class Provenance:
    lagrangian: QuadraticLagrangian
    splitting: SigmaSplitting
    connection: KernelConnection


@dataclass(frozen=True)
class HamiltonianData:
    H: Polynomial
    provenance: Provenance | None = None
    frame_gamma: tuple[Polynomial, ...] | None = None
    energy: Polynomial | None = None

    @property
    def table(self) -> VariableTable:
        return self.H.table

    @property
    def m(self) -> int:
        return self.table.m


@dataclass(frozen=True)
class HamiltonianMapData:
    phi: tuple[Polynomial, ...]


@dataclass(frozen=True)
class ConstrainedHamiltonian:
    H_N: Polynomial


@dataclass
class AssociationReport:
    legendre_identity: bool  # L o Hhat o L == L
    global_identity: bool  # H == H_Hhat + Hhat^* L everywhere
    constrained_identity: bool  # same, restricted to R.p = 0
    sample_results: list[dict] = field(default_factory=list)

    @property
    def association(self) -> str:
        samples_ok = all(s["ok"] for s in self.sample_results if s["on_constraint"])
        if self.legendre_identity and self.global_identity and samples_ok:
            return "associated"
        if self.legendre_identity and self.constrained_identity and samples_ok:
            return "weak"
        return "none"

    def to_json(self) -> dict:
        return {
            "association": self.association,
            "legendre_identity": self.legendre_identity,
            "global_identity": self.global_identity,
            "constrained_identity": self.constrained_identity,
            "samples": self.sample_results,
        }


def momenta(table: VariableTable) -> list[Polynomial]:
    return [Polynomial.var(table, n) for n in table.by_role("momentum")]


def quadratic_form(mat, u: Sequence[Polynomial], v: Sequence[Polynomial], zero: Polynomial) -> Polynomial:
    out = zero
    for i, row in enumerate(mat):
        for j, x in enumerate(row):
            if x:
                out = out + u[i] * v[j] * x
    return out


def build_H_sigma_gamma(L: QuadraticLagrangian, s: SigmaSplitting, gamma: KernelConnection) -> HamiltonianData:
    if L.n != 1:
        raise ValueError("Hamiltonian forms are built for mechanics (n = 1) only")
    if s.a != L.a:
        raise ProvenanceError("sigma splitting was not computed from L.a")
    table = L.table
    zero = Polynomial.zero(table)
    p = momenta(table)
    cprime = potential_prime(L, s)
    # consistency: c' = c + 1/2 b.Gamma for any valid connection
    bg = sum((x * y for x, y in zip(L.b, gamma.gamma)), zero)
    if cprime != L.c + bg * Fraction(1, 2):
        raise ProvenanceError("connection is not a kernel connection of L")
    gp = sum((g * pi for g, pi in zip(gamma.gamma, p)), zero)
    H = gp + quadratic_form(s.sigma0, p, p, zero) * Fraction(1, 2) + quadratic_form(s.sigma1, p, p, zero) - cprime
    energy = H - gp
    return HamiltonianData(H=H, provenance=Provenance(L, s, gamma), frame_gamma=tuple(gamma.gamma), energy=energy)


# The map is the p-gradient of H, so a quadratic term p.sigma1.p enters it twice.
HAMILTONIAN_MAP_RULE = "dH/dp = Gamma + (sigma0 + 2 sigma1).p"


def hamiltonian_map(H: HamiltonianData) -> HamiltonianMapData:
    return HamiltonianMapData(phi=tuple(H.H.diff(n) for n in H.table.by_role("momentum")))


def build_L_H(H: HamiltonianData):
    """Evaluator ``(t, q, p, qdot, pdot) -> p.qdot - H(t, q, p)``."""
    table = H.table
    qn = table.by_role("position")
    pn = table.by_role("momentum")

    def L_H(t, q, p, qdot, pdot=None):
        vals = {"t": t, **dict(zip(qn, q)), **dict(zip(pn, p))}
        return sum((pi * v for pi, v in zip(p, qdot)), Fraction(0)) - H.H.evaluate(vals)

    return L_H


def _momentum_substitution(table: VariableTable, P) -> dict[str, Polynomial]:
    p = momenta(table)
    Pp = linalg.matvec(P, p)
    return dict(zip(table.by_role("momentum"), Pp))


def constrained_hamiltonian(H: HamiltonianData, pr: Projectors | None = None) -> ConstrainedHamiltonian:
    """Pull the density back to the constraint space by ``p -> P.p``."""
    if H.provenance is None:
        raise ProvenanceError("constrained Hamiltonian requires a density of quadratic provenance")
    if pr is None:
        pr = projectors(H.provenance.lagrangian, H.provenance.splitting)
    return ConstrainedHamiltonian(H_N=H.H.substitute(_momentum_substitution(H.table, pr.P)))


def lagrangian_polynomial(L: QuadraticLagrangian, velocities: Sequence[Polynomial], table: VariableTable) -> Polynomial:
    """``1/2 v.a.v + b.v + c`` for polynomial velocities over ``table``."""
    zero = Polynomial.zero(table)
    b = [x.embed(table) for x in L.b]
    return (
        quadratic_form(L.a, velocities, velocities, zero) * Fraction(1, 2)
        + sum((x * v for x, v in zip(b, velocities)), zero)
        + L.c.embed(table)
    )


def check_weak_association(
    H: HamiltonianData,
    L: QuadraticLagrangian,
    s: SigmaSplitting,
    sample_states: Sequence[Mapping[str, object]] = (),
) -> AssociationReport:
    table = H.table
    vtable = table.extended(verticals=True)
    pr = projectors(L, s)
    phi = [x.embed(vtable) for x in hamiltonian_map(H).phi]
    pnames = table.by_role("momentum")
    p = momenta(vtable)

    # L o Hhat o L = L, as an identity in the velocities qd
    qd = [Polynomial.var(vtable, n) for n in vtable.by_role("vel_position")]
    b = [x.embed(vtable) for x in L.b]
    leg = [x + y for x, y in zip(linalg.matvec(L.a, qd), b)]
    vel = [f.substitute(dict(zip(pnames, leg))) for f in phi]
    leg2 = [x + y for x, y in zip(linalg.matvec(L.a, vel), b)]
    legendre_ok = all(x == y for x, y in zip(leg, leg2))

    # H == p.Hhat(p) - L(Hhat(p))
    zero = Polynomial.zero(vtable)
    rhs = sum((pi * f for pi, f in zip(p, phi)), zero) - lagrangian_polynomial(L, phi, vtable)
    diff = H.H.embed(vtable) - rhs
    global_ok = diff.is_zero()
    constrained_ok = diff.substitute(_momentum_substitution(vtable, pr.P)).is_zero()

    samples = []
    for st in sample_states:
        pv = [Fraction(st.get(n, 0)) for n in pnames]
        on = all(x == 0 for x in linalg.matvec(pr.R, pv))
        val = diff.evaluate(st)
        samples.append({"state": {k: str(v) for k, v in st.items()}, "on_constraint": on, "residual": str(val), "ok": val == 0})
    return AssociationReport(legendre_ok, global_ok, constrained_ok, samples)


def frame_split(H: HamiltonianData, gamma: Sequence[Polynomial]) -> Polynomial:
    """Energy function relative to the reference frame ``gamma``: ``H - p.gamma``."""
    zero = Polynomial.zero(H.table)
    p = momenta(H.table)
    return H.H - sum((g.embed(H.table) * pi for g, pi in zip(gamma, p)), zero)


def modified_hamiltonian(H: HamiltonianData, f: Polynomial) -> HamiltonianData:
    """Density of the form ``H - f dt``, i.e. ``H + f``."""
    return HamiltonianData(H=H.H + f.embed(H.table), provenance=None)


def hamiltonian_from_polynomial(H: Polynomial) -> HamiltonianData:
    return HamiltonianData(H=H)
