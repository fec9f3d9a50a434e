"""Almost regular quadratic Lagrangians and their sigma-splitting.

The Lagrangian density is ``1/2 a(ydot, ydot) + b . ydot + c`` with a
constant symmetric kinetic matrix ``a`` over the composite index
``alpha = lam*m + i`` (``lam`` major).  Everything here is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import linalg
from .linalg import Matrix, NotSymmetricError
from .poly import Polynomial, VariableTable


class DimensionError(ValueError):
    pass


class KernelConditionError(ValueError):
    """``a.sigma1 != 0``."""


class ZeroSectionError(ValueError):
    """``R.b != 0``: the constraint space has no zero section."""

    def __init__(self, residual, corrected_b):
        self.residual = residual
        self.corrected_b = corrected_b
        super().__init__(f"zero-section condition R.b = 0 fails; residual r = {[str(x) for x in residual]}")


class SolderingError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticLagrangian:
    m: int
    a: Matrix
    b: tuple[Polynomial, ...]
    c: Polynomial
    n: int = 1
    table: VariableTable = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        M = self.n * self.m
        if linalg.shape(self.a) != (M, M):
            raise DimensionError(f"a must be {M}x{M}, got {linalg.shape(self.a)}")
        if not linalg.is_symmetric(self.a):
            raise NotSymmetricError("kinetic matrix a is not symmetric")
        if len(self.b) != M:
            raise DimensionError(f"b must have length {M}, got {len(self.b)}")
        if self.table is None:
            object.__setattr__(self, "table", self.c.table)
        for p in (*self.b, self.c):
            if p.table != self.table:
                raise DimensionError("b and c must share one variable table")
            bad = [v for v in p.variables() if v != "t" and not v.startswith("q")]
            if bad:
                raise DimensionError(f"b and c may only depend on (t, q); found {bad}")
            if self.n > 1 and not p.is_constant() and p is not self.c:
                raise DimensionError("for n > 1, b must be constant")

    @property
    def M(self) -> int:
        return self.n * self.m

    @classmethod
    def build(cls, a, b=None, c="0", *, m: int | None = None, n: int = 1, table: VariableTable | None = None) -> "QuadraticLagrangian":
        """Convenience constructor from raw literals (strings / numbers)."""
        a = linalg.to_matrix(a)
        M = len(a)
        if m is None:
            if M % n:
                raise DimensionError("size of a is not divisible by n")
            m = M // n
        table = table or VariableTable.phase_space(m, n_momenta=n * m)
        if b is None:
            b = [0] * M

        def P(x):
            if isinstance(x, Polynomial):
                return x.embed(table)
            return Polynomial.parse(table, x) if isinstance(x, str) else Polynomial.constant(table, x)

        return cls(m=m, a=a, b=tuple(P(x) for x in b), c=P(c), n=n, table=table)

    def b_constant_vector(self) -> list[Fraction] | None:
        if all(p.is_constant() for p in self.b):
            return [Fraction(p.constant_term()) for p in self.b]
        return None


@dataclass(frozen=True)
class SigmaSplitting:
    a: Matrix
    sigma0: Matrix
    sigma1: Matrix
    rank: int

    @property
    def sigma(self) -> Matrix:
        return linalg.add(self.sigma0, self.sigma1)


@dataclass(frozen=True)
class Projectors:
    P: Matrix
    R: Matrix


@dataclass(frozen=True)
class KernelConnection:
    gamma: tuple[Polynomial, ...]
    soldering: tuple[Polynomial, ...]


@dataclass(frozen=True)
class VelocitySplit:
    S: list
    F: list


@dataclass(frozen=True)
class MomentumSplit:
    Rp: list
    Pp: list


def _check_vec(v: Sequence, M: int, what: str) -> None:
    if len(v) != M:
        raise DimensionError(f"{what} must have length {M}, got {len(v)}")


def _eval_b(L: QuadraticLagrangian, state: Mapping[str, object]) -> list:
    return [p.evaluate(state) for p in L.b]


def legendre_map(L: QuadraticLagrangian, state: Mapping[str, object], ydot: Sequence) -> list:
    """Momenta ``p = a.ydot + b(t, q)``."""
    _check_vec(ydot, L.M, "ydot")
    av = linalg.matvec(L.a, list(ydot))
    return [x + y for x, y in zip(av, _eval_b(L, state))]


SIGMA0_CONVENTION = "orthogonal complement of Ker a (Moore-Penrose inverse)"


def compute_sigma0(a: Matrix) -> SigmaSplitting:
    """Orthogonal-complement sigma0 (the Moore-Penrose inverse) with sigma1 = 0."""
    a = linalg.to_matrix(a)
    if not linalg.is_symmetric(a):
        raise NotSymmetricError("kinetic matrix a is not symmetric")
    s0 = linalg.pseudo_inverse(a)
    n = len(a)
    return SigmaSplitting(a=a, sigma0=s0, sigma1=linalg.zeros(n), rank=linalg.rank(a))


def attach_sigma1(s: SigmaSplitting, sigma1) -> SigmaSplitting:
    sigma1 = linalg.to_matrix(sigma1)
    if linalg.shape(sigma1) != linalg.shape(s.a):
        raise DimensionError("sigma1 shape does not match a")
    if not linalg.is_symmetric(sigma1):
        raise NotSymmetricError("sigma1 is not symmetric")
    if not linalg.is_zero(linalg.matmul(s.a, sigma1)):
        raise KernelConditionError("a.sigma1 != 0")
    return SigmaSplitting(a=s.a, sigma0=s.sigma0, sigma1=sigma1, rank=s.rank)


def projectors(L: QuadraticLagrangian | Matrix, s: SigmaSplitting) -> Projectors:
    a = L.a if isinstance(L, QuadraticLagrangian) else linalg.to_matrix(L)
    if a != s.a:
        raise ValueError("sigma splitting was not computed from this kinetic matrix")
    P = linalg.matmul(a, s.sigma0)
    R = linalg.sub(linalg.identity(len(a)), P)
    return Projectors(P=P, R=R)


def split_velocity(L: QuadraticLagrangian, s: SigmaSplitting, state: Mapping[str, object], ydot: Sequence) -> VelocitySplit:
    _check_vec(ydot, L.M, "ydot")
    F = linalg.matvec(s.sigma, legendre_map(L, state, ydot))
    S = [y - f for y, f in zip(ydot, F)]
    return VelocitySplit(S=S, F=F)


def split_momentum(pr: Projectors, p: Sequence) -> MomentumSplit:
    _check_vec(p, len(pr.P), "p")
    p = list(p)
    return MomentumSplit(Rp=linalg.matvec(pr.R, p), Pp=linalg.matvec(pr.P, p))


def zero_section_residual(L: QuadraticLagrangian, s: SigmaSplitting) -> list[Polynomial]:
    pr = projectors(L, s)
    return linalg.matvec(pr.R, list(L.b))


def corrected_b(L: QuadraticLagrangian, s: SigmaSplitting) -> list[Polynomial]:
    r = zero_section_residual(L, s)
    return [bi - ri for bi, ri in zip(L.b, r)]


def with_b(L: QuadraticLagrangian, b: Sequence[Polynomial]) -> QuadraticLagrangian:
    return QuadraticLagrangian(m=L.m, a=L.a, b=tuple(b), c=L.c, n=L.n, table=L.table)


def kernel_connection(L: QuadraticLagrangian, s: SigmaSplitting, phi: Sequence | None = None) -> KernelConnection:
    """Connection ``Gamma = -sigma0.b + phi`` with ``a.Gamma + b = 0``."""
    r = zero_section_residual(L, s)
    if any(not x.is_zero() for x in r):
        raise ZeroSectionError(r, corrected_b(L, s))
    table = L.table
    zero = Polynomial.zero(table)
    if phi is None:
        phi_p = [zero] * L.M
    else:
        _check_vec(phi, L.M, "soldering offset")
        phi_p = [x.embed(table) if isinstance(x, Polynomial) else Polynomial.parse(table, x) if isinstance(x, str) else Polynomial.constant(table, x) for x in phi]
        aphi = linalg.matvec(L.a, phi_p)
        if any(not x.is_zero() for x in aphi):
            raise SolderingError("soldering offset violates a.phi = 0")
        dot = sum((f * bb for f, bb in zip(phi_p, L.b)), zero)
        if not dot.is_zero():
            raise SolderingError("soldering offset violates phi.b = 0")
    base = linalg.matvec(s.sigma0, list(L.b))
    gamma = tuple(f - g for f, g in zip(phi_p, base))
    check = linalg.matvec(L.a, list(gamma))
    if any(not (x + y).is_zero() for x, y in zip(check, L.b)):
        raise AssertionError("a.Gamma + b != 0 after construction")
    return KernelConnection(gamma=gamma, soldering=tuple(phi_p))


def potential_prime(L: QuadraticLagrangian, s: SigmaSplitting) -> Polynomial:
    """The potential ``c'`` of the Lagrangian rewritten as ``1/2 a(F,F) + c'``.

    With ``b = a.sigma0.b`` this is ``c - 1/2 b.sigma0.b``.
    """
    sb = linalg.matvec(s.sigma0, list(L.b))
    quad = sum((x * y for x, y in zip(L.b, sb)), Polynomial.zero(L.table))
    return L.c - quad * Fraction(1, 2)


def is_diagonal(a: Matrix) -> bool:
    return all(a[i][j] == 0 for i in range(len(a)) for j in range(len(a)) if i != j)
