"""Graded commutative algebra over a polynomial base ring.

Generators carry an antighost number ``r`` and Grassmann parity ``r % 2``.
A graded monomial is a product of even generators (with multiplicities)
followed by odd generators in canonical order; the permutation sign needed
to reach that order is folded into the coefficient.  Coefficients are
:class:`~degha.poly.Polynomial` objects over a shared variable table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .poly import Coefficient, Polynomial, TableMismatchError, VariableTable

# Antighosts c_i^(r), ghosts cbar^i_(r), and the second conjugate family
# c^i_(r), cbar_i^(r) used by the full graded bracket.
KINDS = ("c", "cbar", "cu", "cbarl")
_KIND_ORDER = {k: n for n, k in enumerate(KINDS)}
_KIND_PREFIX = {"c": "c", "cbar": "cb", "cu": "cu", "cbarl": "cbl"}


@dataclass(frozen=True, order=False)
class GradedGenerator:
    kind: str
    index: int  # 1-based fiber (or composite) index
    r: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.r < 1:
            raise ValueError("antighost number must be >= 1")

    @property
    def parity(self) -> int:
        return self.r % 2

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.r, self.index, _KIND_ORDER[self.kind])

    def __lt__(self, other: "GradedGenerator") -> bool:
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return f"{_KIND_PREFIX[self.kind]}{self.index}_{self.r}"


@dataclass(frozen=True)
class GradedMonomial:
    """Even part as sorted ``(generator, power)`` pairs, odd part sorted, no repeats."""

    even: tuple[tuple[GradedGenerator, int], ...] = ()
    odd: tuple[GradedGenerator, ...] = ()

    @property
    def parity(self) -> int:
        return len(self.odd) % 2

    @property
    def antighost(self) -> int:
        return sum(g.r * k for g, k in self.even) + sum(g.r for g in self.odd)

    @property
    def length(self) -> int:
        """Number of generator factors, counted with multiplicity."""
        return sum(k for _, k in self.even) + len(self.odd)

    def is_unit(self) -> bool:
        return not self.even and not self.odd

    def factors(self) -> list[GradedGenerator]:
        out = []
        for g, k in self.even:
            out.extend([g] * k)
        out.extend(self.odd)
        return out

    def generators(self) -> set[GradedGenerator]:
        return {g for g, _ in self.even} | set(self.odd)

    def power_of(self, g: GradedGenerator) -> int:
        for h, k in self.even:
            if h == g:
                return k
        return 1 if g in self.odd else 0

    def __str__(self) -> str:
        parts = []
        for g, k in self.even:
            parts.append(str(g) if k == 1 else f"{g}^{k}")
        parts.extend(str(g) for g in self.odd)
        return "*".join(parts)

    @property
    def sort_key(self):
        return (
            self.antighost,
            self.length,
            tuple((g.sort_key, k) for g, k in self.even),
            tuple(g.sort_key for g in self.odd),
        )


UNIT = GradedMonomial()


def monomial_product(a: GradedMonomial, b: GradedMonomial) -> tuple[int, GradedMonomial | None]:
    """Return ``(sign, a*b)`` in normal form, or ``(0, None)`` if an odd square appears."""
    if a.odd and b.odd:
        sa = set(a.odd)
        if any(g in sa for g in b.odd):
            return 0, None
        # sign of merging two sorted sequences: count inversions across them
        inv = 0
        j = 0
        for g in a.odd:
            while j < len(b.odd) and b.odd[j] < g:
                j += 1
            inv += j
        odd = tuple(sorted(a.odd + b.odd))
        sign = -1 if inv % 2 else 1
    else:
        odd = a.odd or b.odd
        sign = 1
    if a.even and b.even:
        ev: dict[GradedGenerator, int] = dict(a.even)
        for g, k in b.even:
            ev[g] = ev.get(g, 0) + k
        even = tuple(sorted(ev.items(), key=lambda gk: gk[0].sort_key))
    else:
        even = a.even or b.even
    return sign, GradedMonomial(even, odd)


def make_monomial(factors: Iterable[GradedGenerator]) -> tuple[int, GradedMonomial | None]:
    """Normal form of an ordered product of generators."""
    sign = 1
    mono = UNIT
    for g in factors:
        s, mono = monomial_product(mono, _single(g))
        if mono is None:
            return 0, None
        sign *= s
    return sign, mono


def _single(g: GradedGenerator) -> GradedMonomial:
    if g.parity:
        return GradedMonomial((), (g,))
    return GradedMonomial(((g, 1),), ())


class GradedElement:
    """Sum of ``polynomial * graded monomial`` terms; immutable."""

    __slots__ = ("table", "terms")

    def __init__(self, table: VariableTable, terms: Mapping[GradedMonomial, Polynomial] | None = None):
        self.table = table
        clean = {}
        for mono, coeff in (terms or {}).items():
            if coeff.table != table:
                raise TableMismatchError("coefficient table does not match element table")
            if coeff:
                clean[mono] = coeff
        self.terms: dict[GradedMonomial, Polynomial] = clean

    @classmethod
    def _raw(cls, table, terms) -> "GradedElement":
        g = cls.__new__(cls)
        g.table = table
        g.terms = terms
        return g

    @classmethod
    def zero(cls, table: VariableTable) -> "GradedElement":
        return cls._raw(table, {})

    @classmethod
    def from_poly(cls, p: Polynomial) -> "GradedElement":
        return cls._raw(p.table, {UNIT: p} if p else {})

    @classmethod
    def scalar(cls, table: VariableTable, value) -> "GradedElement":
        return cls.from_poly(Polynomial.constant(table, value))

    @classmethod
    def gen(cls, table: VariableTable, g: GradedGenerator, coeff: Polynomial | None = None) -> "GradedElement":
        c = coeff if coeff is not None else Polynomial.constant(table, 1)
        return cls._raw(table, {_single(g): c} if c else {})

    @classmethod
    def product(cls, table: VariableTable, factors: Iterable[GradedGenerator], coeff: Polynomial | None = None) -> "GradedElement":
        sign, mono = make_monomial(factors)
        if mono is None:
            return cls.zero(table)
        c = coeff if coeff is not None else Polynomial.constant(table, 1)
        return cls._raw(table, {mono: c * sign} if c else {})

    # -- arithmetic
    def _lift(self, other) -> "GradedElement":
        if isinstance(other, GradedElement):
            if other.table != self.table:
                raise TableMismatchError("graded elements over different tables")
            return other
        if isinstance(other, Polynomial):
            if other.table != self.table:
                raise TableMismatchError("graded element and polynomial over different tables")
            return GradedElement.from_poly(other)
        return GradedElement.scalar(self.table, other)

    def __add__(self, other) -> "GradedElement":
        other = self._lift(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out[mono] + c if mono in out else c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return GradedElement._raw(self.table, out)

    __radd__ = __add__

    def __neg__(self) -> "GradedElement":
        return GradedElement._raw(self.table, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "GradedElement":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "GradedElement":
        return self._lift(other) - self

    def __mul__(self, other) -> "GradedElement":
        if not isinstance(other, (GradedElement, Polynomial)):
            if not other:
                return GradedElement.zero(self.table)
            return GradedElement._raw(self.table, {m: c * other for m, c in self.terms.items()})
        other = self._lift(other)
        out: dict[GradedMonomial, Polynomial] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                sign, mono = monomial_product(m1, m2)
                if mono is None:
                    continue
                c = c1 * c2
                if sign < 0:
                    c = -c
                s = out[mono] + c if mono in out else c
                if s:
                    out[mono] = s
                else:
                    out.pop(mono, None)
        return GradedElement._raw(self.table, out)

    def __rmul__(self, other) -> "GradedElement":
        # scalars and polynomials are even, so they commute
        return self.__mul__(other)

    def __eq__(self, other) -> bool:
        if isinstance(other, (Polynomial, int, Fraction)):
            other = self._lift(other)
        if not isinstance(other, GradedElement):
            return NotImplemented
        return self.table == other.table and self.terms == other.terms

    def __hash__(self):
        return hash((self.table, frozenset(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- grading
    def parities(self) -> set[int]:
        return {m.parity for m in self.terms}

    def parity(self) -> int:
        """Parity of a homogeneous element (0 for zero)."""
        ps = self.parities()
        if len(ps) > 1:
            raise ValueError("element is not homogeneous in Grassmann parity")
        return ps.pop() if ps else 0

    def antighost_numbers(self) -> set[int]:
        return {m.antighost for m in self.terms}

    def generators(self) -> set[GradedGenerator]:
        out = set()
        for m in self.terms:
            out |= m.generators()
        return out

    def base_part(self) -> Polynomial:
        return self.terms.get(UNIT, Polynomial.zero(self.table))

    def map_coefficients(self, fn) -> "GradedElement":
        out = {}
        for m, c in self.terms.items():
            nc = fn(c)
            if nc:
                out[m] = nc
        return GradedElement._raw(self.table, out)

    def diff_base(self, name: str) -> "GradedElement":
        """Partial derivative in an (even) base variable."""
        return self.map_coefficients(lambda c: c.diff(name))

    def diff_gen(self, g: GradedGenerator) -> "GradedElement":
        """Left partial derivative with respect to a generator."""
        out: dict[GradedMonomial, Polynomial] = {}
        for mono, c in self.terms.items():
            if g.parity == 0:
                k = mono.power_of(g)
                if not k:
                    continue
                ev = tuple((h, j - 1 if h == g else j) for h, j in mono.even if not (h == g and j == 1))
                nm = GradedMonomial(ev, mono.odd)
                nc = c * k
            else:
                if g not in mono.odd:
                    continue
                pos = mono.odd.index(g)
                nm = GradedMonomial(mono.even, mono.odd[:pos] + mono.odd[pos + 1 :])
                nc = -c if pos % 2 else c
            s = out[nm] + nc if nm in out else nc
            if s:
                out[nm] = s
            else:
                out.pop(nm, None)
        return GradedElement._raw(self.table, out)

    def embed(self, table: VariableTable) -> "GradedElement":
        return GradedElement._raw(table, {m: c.embed(table) for m, c in self.terms.items()})

    def homogeneous_part(self, antighost: int) -> "GradedElement":
        return GradedElement._raw(self.table, {m: c for m, c in self.terms.items() if m.antighost == antighost})

    def sorted_terms(self) -> list[tuple[GradedMonomial, Polynomial]]:
        return sorted(self.terms.items(), key=lambda mc: mc[0].sort_key)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            ms = str(mono)
            cs = str(c)
            if not ms:
                parts.append(cs)
            elif cs == "1":
                parts.append(ms)
            elif cs == "-1":
                parts.append("-" + ms)
            elif len(c.terms) == 1:
                parts.append(f"{cs}*{ms}")
            else:
                parts.append(f"({cs})*{ms}")
        s = parts[0]
        for t in parts[1:]:
            s += " - " + t[1:] if t.startswith("-") else " + " + t
        return s

    def __repr__(self) -> str:
        return f"GradedElement({self})"


def graded_mul(f: GradedElement, g: GradedElement) -> GradedElement:
    return f * g


@dataclass(frozen=True)
class GradedDerivation:
    """Graded derivation given by its values on base variables and generators.

    Components not listed are zero.  ``parity`` is the Grassmann parity of
    the derivation; the action obeys
    ``u(f g) = u(f) g + (-1)^(|u||f|) f u(g)``.
    """

    table: VariableTable
    parity: int
    base: Mapping[str, GradedElement] = field(default_factory=dict)
    gens: Mapping[GradedGenerator, GradedElement] = field(default_factory=dict)

    @classmethod
    def partial(cls, table: VariableTable, g: GradedGenerator, coeff: Polynomial | None = None) -> "GradedDerivation":
        c = coeff if coeff is not None else Polynomial.constant(table, 1)
        return cls(table, g.parity, {}, {g: GradedElement.from_poly(c)})

    def __call__(self, f: GradedElement) -> GradedElement:
        return apply_derivation(self, f)


def apply_derivation(u: GradedDerivation, f: GradedElement) -> GradedElement:
    if f.table != u.table:
        raise TableMismatchError("derivation and element over different tables")
    table = f.table
    out = GradedElement.zero(table)
    cache: dict[GradedMonomial, GradedElement] = {}
    for mono, coeff in f.terms.items():
        mono_el = GradedElement._raw(table, {mono: Polynomial.constant(table, 1)})
        # u(coeff) * mono; coeff is even
        for name, comp in u.base.items():
            dc = coeff.diff(name)
            if dc:
                out = out + (comp * dc) * mono_el
        if mono not in cache:
            cache[mono] = _derive_monomial(u, mono, table)
        um = cache[mono]
        if um:
            out = out + um * coeff
    return out


def _derive_monomial(u: GradedDerivation, mono: GradedMonomial, table: VariableTable) -> GradedElement:
    factors = mono.factors()
    out = GradedElement.zero(table)
    prefix_parity = 0
    for j, g in enumerate(factors):
        ug = u.gens.get(g)
        if ug is not None and ug:
            sign = -1 if (u.parity * prefix_parity) % 2 else 1
            left = GradedElement.product(table, factors[:j])
            right = GradedElement.product(table, factors[j + 1 :])
            out = out + (left * ug * right) * sign
        prefix_parity += g.parity
    return out


def generator_element(table: VariableTable, kind: str, index: int, r: int) -> GradedElement:
    return GradedElement.gen(table, GradedGenerator(kind, index, r))


def coefficient_of(el: GradedElement, mono: GradedMonomial) -> Polynomial:
    return el.terms.get(mono, Polynomial.zero(el.table))


def scalar_times(el: GradedElement, c: Coefficient) -> GradedElement:
    return el * c
