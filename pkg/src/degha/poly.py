"""Exact sparse multivariate polynomials over phase-space variables.

A polynomial maps exponent tuples (one entry per variable of its
:class:`VariableTable`) to exact coefficients.  Coefficients are
:class:`fractions.Fraction`, or :class:`GaussianRational` once a factor of
``I`` has entered (BRST computations).  Zero coefficients are never stored.

Text syntax::

    3/2*q1^2*p2 - t*p1 + pt

Variables are ``t``, ``q1..qm``, ``p1..pm``, ``qd1..``, ``pd1..`` and ``pt``.
Floating point literals are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

Exponent = tuple[int, ...]


class TableMismatchError(ValueError):
    pass


class PolynomialParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Gaussian rationals


class GaussianRational:
    """Exact complex number ``re + im*I`` with rational parts.

    Arithmetic that produces a zero imaginary part collapses back to a plain
    ``Fraction``, so real polynomials never carry this type.
    """

    __slots__ = ("re", "im")

    def __init__(self, re: Fraction | int = 0, im: Fraction | int = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def make(re, im):
        if im == 0:
            return Fraction(re)
        return GaussianRational(re, im)

    @staticmethod
    def _parts(x):
        if isinstance(x, GaussianRational):
            return x.re, x.im
        if isinstance(x, (int, Fraction)):
            return Fraction(x), Fraction(0)
        return None

    def __add__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.make(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.make(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.make(o[0] - self.re, o[1] - self.im)

    def __mul__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = o
        return self.make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        c, d = o
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        a, b = self.re, self.im
        return self.make((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussianRational(*o) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __eq__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return format_coefficient(self)


I = GaussianRational(0, 1)

Coefficient = Union[Fraction, GaussianRational]


def as_coefficient(x) -> Coefficient:
    if isinstance(x, GaussianRational):
        return GaussianRational.make(x.re, x.im)
    if isinstance(x, float):
        raise TypeError("floating point coefficients are not allowed")
    return Fraction(x)


def format_coefficient(c: Coefficient) -> str:
    if isinstance(c, GaussianRational):
        if c.re == 0:
            if c.im == 1:
                return "I"
            if c.im == -1:
                return "-I"
            return f"{c.im}*I"
        sign = "+" if c.im > 0 else "-"
        im = abs(c.im)
        im_s = "I" if im == 1 else f"{im}*I"
        return f"({c.re}{sign}{im_s})"
    return str(c)


# ---------------------------------------------------------------------------
# Variable tables

ROLES = ("time", "position", "momentum", "vel_position", "vel_momentum", "time_momentum", "base")



@dataclass(frozen=True)
class VariableTable:
    """Ordered list of named base variables with fixed roles."""

    names: tuple[str, ...]
    roles: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) != len(self.roles):
            raise ValueError("names and roles must have equal length")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate variable names in {self.names}")
        for r in self.roles:
            if r not in ROLES:
                raise ValueError(f"unknown variable role {r!r}")

    @classmethod
    def phase_space(
        cls,
        m: int,
        *,
        verticals: bool = False,
        time_momentum: bool = False,
        n_momenta: int | None = None,
    ) -> "VariableTable":
        """Table ``(t, q1..qm, p1..pk[, qd1..qdm, pd1..pdk][, pt])``.

        ``n_momenta`` defaults to ``m``; for a field-theory fiber it is the
        composite count ``n*m``.
        """
        k = m if n_momenta is None else n_momenta
        names = ["t"] + [f"q{i}" for i in range(1, m + 1)] + [f"p{i}" for i in range(1, k + 1)]
        roles = ["time"] + ["position"] * m + ["momentum"] * k
        if verticals:
            names += [f"qd{i}" for i in range(1, m + 1)] + [f"pd{i}" for i in range(1, k + 1)]
            roles += ["vel_position"] * m + ["vel_momentum"] * k
        if time_momentum:
            names.append("pt")
            roles.append("time_momentum")
        return cls(tuple(names), tuple(roles))

    def __len__(self) -> int:
        return len(self.names)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}; table has {self.names}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def by_role(self, role: str) -> list[str]:
        return [n for n, r in zip(self.names, self.roles) if r == role]

    @property
    def m(self) -> int:
        return len(self.by_role("position"))

    def extended(self, *, verticals: bool | None = None, time_momentum: bool | None = None) -> "VariableTable":
        """Same phase space with verticals and/or ``pt`` switched on or off."""
        m = self.m
        k = len(self.by_role("momentum"))
        v = bool(self.by_role("vel_position")) if verticals is None else verticals
        tm = "pt" in self if time_momentum is None else time_momentum
        return VariableTable.phase_space(m, verticals=v, time_momentum=tm, n_momenta=k)


# ---------------------------------------------------------------------------
# Polynomials


class Polynomial:
    """Immutable sparse polynomial with exact coefficients."""

    __slots__ = ("table", "terms", "_hash")

    def __init__(self, table: VariableTable, terms: Mapping[Exponent, object] | None = None):
        self.table = table
        clean: dict[Exponent, Coefficient] = {}
        if terms:
            n = len(table)
            for e, c in terms.items():
                if len(e) != n:
                    raise ValueError(f"exponent {e} does not match table of size {n}")
                c = as_coefficient(c)
                if c:
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, table: VariableTable, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.table = table
        p.terms = terms
        p._hash = None
        return p

    # -- constructors
    @classmethod
    def zero(cls, table: VariableTable) -> "Polynomial":
        return cls._raw(table, {})

    @classmethod
    def constant(cls, table: VariableTable, value) -> "Polynomial":
        c = as_coefficient(value)
        return cls._raw(table, {(0,) * len(table): c} if c else {})

    @classmethod
    def var(cls, table: VariableTable, name: str) -> "Polynomial":
        e = [0] * len(table)
        e[table.index(name)] = 1
        return cls._raw(table, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, table: VariableTable, exps: Exponent, coeff=1) -> "Polynomial":
        return cls(table, {tuple(exps): coeff})

    @classmethod
    def parse(cls, table: VariableTable, text: str) -> "Polynomial":
        return _Parser(table, text).parse()

    # -- basic protocol
    def _check(self, other: "Polynomial") -> None:
        if self.table != other.table:
            raise TableMismatchError(f"variable tables differ: {self.table.names} vs {other.table.names}")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, GaussianRational)):
            return Polynomial.constant(self.table, other)
        raise TypeError(f"cannot combine Polynomial with {type(other).__name__}")

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = Polynomial.constant(self.table, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.table == other.table and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.table, frozenset(self.terms.items())))
        return self._hash

    def __add__(self, other) -> "Polynomial":
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Polynomial._raw(self.table, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.table, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._lift(other) - self

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction, GaussianRational)):
            if not other:
                return Polynomial.zero(self.table)
            return Polynomial._raw(self.table, {e: c * other for e, c in self.terms.items()})
        other = self._lift(other)
        out: dict[Exponent, Coefficient] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Polynomial._raw(self.table, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Polynomial":
        if not isinstance(other, (int, Fraction, GaussianRational)):
            raise TypeError("polynomials can only be divided by constants")
        return self * (Fraction(1) / as_coefficient(other))

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(self.table, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- structure
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Coefficient:
        return self.terms.get((0,) * len(self.table), Fraction(0))

    def variables(self) -> set[str]:
        used = set()
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used.add(self.table.names[i])
        return used

    def depends_on(self, name: str) -> bool:
        if name not in self.table:
            return False
        i = self.table.index(name)
        return any(e[i] for e in self.terms)

    def is_real(self) -> bool:
        return not any(isinstance(c, GaussianRational) for c in self.terms.values())

    def diff(self, name: str) -> "Polynomial":
        """Formal partial derivative with respect to ``name``."""
        i = self.table.index(name)
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                ne = e[:i] + (k - 1,) + e[i + 1 :]
                out[ne] = c * k
        return Polynomial._raw(self.table, out)

    def embed(self, table: VariableTable) -> "Polynomial":
        """Re-express over ``table`` (matching by name); unused variables may be absent."""
        if table == self.table:
            return self
        idx = []
        for i, name in enumerate(self.table.names):
            idx.append(table.index(name) if name in table else None)
        out = {}
        n = len(table)
        for e, c in self.terms.items():
            ne = [0] * n
            for i, k in enumerate(e):
                if k:
                    if idx[i] is None:
                        raise TableMismatchError(
                            f"variable {self.table.names[i]!r} is not present in target table"
                        )
                    ne[idx[i]] = k
            out[tuple(ne)] = c
        return Polynomial._raw(table, out)

    def substitute(self, mapping: Mapping[str, "Polynomial | int | Fraction"], table: VariableTable | None = None) -> "Polynomial":
        """Compose: replace each named variable by a polynomial over ``table``.

        Variables not in ``mapping`` are carried over by name into ``table``.
        """
        target = table or self.table
        images = []
        for name in self.table.names:
            if name in mapping:
                img = mapping[name]
                if not isinstance(img, Polynomial):
                    img = Polynomial.constant(target, img)
                elif img.table != target:
                    img = img.embed(target)
            else:
                img = Polynomial.var(target, name)
            images.append(img)
        cache: dict[tuple[int, int], Polynomial] = {}

        def power(i: int, k: int) -> Polynomial:
            key = (i, k)
            if key not in cache:
                cache[key] = images[i] ** k
            return cache[key]

        out = Polynomial.zero(target)
        for e, c in self.terms.items():
            term = Polynomial.constant(target, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, object]):
        """Evaluate at a point given by name; missing variables default to 0.

        Returns an exact coefficient for exact inputs and a float for floats.
        """
        vals = [values.get(n, 0) for n in self.table.names]
        total = 0
        for e, c in self.terms.items():
            term = c
            for v, k in zip(vals, e):
                if k:
                    term = term * v**k
            total = total + term
        return total

    def coefficients(self) -> Iterator[tuple[Exponent, Coefficient]]:
        return iter(sorted(self.terms.items(), key=lambda kv: _order_key(kv[0]), reverse=True))

    def leading(self) -> tuple[Exponent, Coefficient]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        e = max(self.terms, key=_order_key)
        return e, self.terms[e]

    def normalized(self) -> "Polynomial":
        """Scale to integer coefficients with content 1 and positive leading coefficient."""
        if not self.terms or not self.is_real():
            return self
        from math import gcd, lcm

        den = lcm(*(c.denominator for c in self.terms.values()))
        nums = [int(c * den) for c in self.terms.values()]
        g = 0
        for x in nums:
            g = gcd(g, x)
        scale = Fraction(den, g)
        if self.leading()[1] < 0:
            scale = -scale
        return self * scale

    def __repr__(self) -> str:
        return f"Polynomial({self})"

    def __str__(self) -> str:
        return format_terms(self.table, self.terms)

    def to_float_terms(self) -> list[tuple[float, list[tuple[int, int]]]]:
        """Compact float form for fast repeated evaluation."""
        out = []
        for e, c in self.terms.items():
            if isinstance(c, GaussianRational):
                raise ValueError("cannot evaluate complex polynomial as real")
            out.append((float(c), [(i, k) for i, k in enumerate(e) if k]))
        return out


def _order_key(e: Exponent):
    # graded lexicographic, first variable most significant
    return (sum(e), e)


def format_monomial(names: Sequence[str], e: Exponent) -> str:
    parts = []
    for name, k in zip(names, e):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts)


def format_terms(table: VariableTable, terms: Mapping[Exponent, Coefficient]) -> str:
    if not terms:
        return "0"
    out = []
    for e, c in sorted(terms.items(), key=lambda kv: _order_key(kv[0]), reverse=True):
        mono = format_monomial(table.names, e)
        out.append(_join_term(c, mono))
    s = out[0]
    for t in out[1:]:
        s += " - " + t[1:] if t.startswith("-") else " + " + t
    return s


def _join_term(c: Coefficient, mono: str) -> str:
    if not mono:
        return format_coefficient(c)
    if c == 1:
        return mono
    if c == -1:
        return "-" + mono
    return f"{format_coefficient(c)}*{mono}"


def poly_arith(f: Polynomial, g: Polynomial, op: str) -> Polynomial:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown op {op!r}")


def partial_derivative(f: Polynomial, v: str) -> Polynomial:
    return f.diff(v)


def monomials_up_to(nvars: int, degree: int) -> list[Exponent]:
    """All exponent tuples of total degree <= ``degree``, in graded order."""
    out: list[Exponent] = []
    for d in range(degree + 1):
        out.extend(monomials_of_degree(nvars, d))
    return out


def monomials_of_degree(nvars: int, d: int) -> list[Exponent]:
    if nvars == 0:
        return [()] if d == 0 else []
    if nvars == 1:
        return [(d,)]
    out = []
    for k in range(d, -1, -1):
        for rest in monomials_of_degree(nvars - 1, d - k):
            out.append((k,) + rest)
    return out


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+[eE][-+]?\d+)|(\d+)|([A-Za-z][A-Za-z_0-9]*)|(\S))")


class _Parser:
    def __init__(self, table: VariableTable, text: str):
        self.table = table
        self.text = text
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                break
            flt, num, name, op = m.groups()
            if flt is not None:
                raise PolynomialParseError(f"floating point literal {flt!r} not allowed in {self.text!r}")
            if num is not None:
                self.tokens.append(("num", num))
            elif name is not None:
                self.tokens.append(("name", name))
            elif op is not None:
                if op not in "+-*/^()":
                    raise PolynomialParseError(f"unexpected character {op!r} in {self.text!r}")
                self.tokens.append(("op", op))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> Polynomial:
        if not self.tokens:
            raise PolynomialParseError("empty polynomial text")
        p = self.expr()
        if self.i != len(self.tokens):
            raise PolynomialParseError(f"trailing input {self.tokens[self.i][1]!r} in {self.text!r}")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.take()
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    raise PolynomialParseError(f"division by non-constant or zero in {self.text!r}")
                p = p / q.constant_term()
        return p

    def unary(self) -> Polynomial:
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise PolynomialParseError(f"exponent must be a non-negative integer in {self.text!r}")
            base = base ** int(val)
        return base

    def atom(self) -> Polynomial:
        kind, val = self.take()
        if kind == "num":
            return Polynomial.constant(self.table, int(val))
        if kind == "name":
            if val == "I":
                return Polynomial.constant(self.table, I)
            if val not in self.table:
                raise PolynomialParseError(f"unknown variable {val!r} in {self.text!r}")
            return Polynomial.var(self.table, val)
        if (kind, val) == ("op", "("):
            p = self.expr()
            if self.take() != ("op", ")"):
                raise PolynomialParseError(f"unbalanced parentheses in {self.text!r}")
            return p
        raise PolynomialParseError(f"unexpected token {val!r} in {self.text!r}")


def parse_polynomial(table: VariableTable, text: str | int | Fraction) -> Polynomial:
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return Polynomial.constant(table, text)
    if not isinstance(text, str):
        raise PolynomialParseError(f"expected polynomial string, got {type(text).__name__}")
    return Polynomial.parse(table, text)


def poly_vector_str(vec: Iterable[Polynomial]) -> list[str]:
    return [str(p) for p in vec]
