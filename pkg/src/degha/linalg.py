"""Exact dense and sparse linear algebra over the rationals.

Dense matrices are plain lists of rows of :class:`~fractions.Fraction`.
:class:`SparseEchelon` keeps an incrementally reduced basis of a span of
sparse vectors keyed by arbitrary hashable column labels; it backs both the
truncated ideal-membership test and the homology rank computations.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

Matrix = list[list[Fraction]]
Vector = list[Fraction]


class NotSymmetricError(ValueError):
    pass


def to_matrix(rows: Iterable[Iterable]) -> Matrix:
    out = []
    for row in rows:
        r = []
        for x in row:
            if isinstance(x, float):
                raise TypeError("floating point entries are not allowed in exact matrices")
            r.append(Fraction(x))
        out.append(r)
    return out


def shape(a: Matrix) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(n: int, m: int | None = None) -> Matrix:
    return [[Fraction(0)] * (n if m is None else m) for _ in range(n)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a and len(a[0]) != len(b):
        raise ValueError(f"shape mismatch {shape(a)} @ {shape(b)}")
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def matvec(a: Matrix, v: Sequence):
    """Matrix times vector; entries of ``v`` may be any ring elements (e.g. polynomials)."""
    out = []
    for row in a:
        acc = None
        for x, y in zip(row, v):
            if x:
                term = y * x
                acc = term if acc is None else acc + term
        if acc is None:
            acc = v[0] * 0 if v else Fraction(0)
        out.append(acc)
    return out


def add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(r, s)] for r, s in zip(a, b)]


def sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(r, s)] for r, s in zip(a, b)]


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def is_symmetric(a: Matrix) -> bool:
    n, m = shape(a)
    return n == m and all(a[i][j] == a[j][i] for i in range(n) for j in range(i + 1, n))


def rref(a: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row-echelon form and pivot columns."""
    m = [list(r) for r in a]
    rows, cols = shape(m)
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: Matrix) -> int:
    return len(rref(a)[1])


def inverse(a: Matrix) -> Matrix:
    n, k = shape(a)
    if n != k:
        raise ValueError("inverse of a non-square matrix")
    aug = [list(row) + e for row, e in zip(a, identity(n))]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in red]


def full_rank_factorization(a: Matrix) -> tuple[Matrix, Matrix]:
    """``a = B @ C`` with ``B`` the pivot columns of ``a`` and ``C`` the nonzero rows of rref(a)."""
    red, piv = rref(a)
    r = len(piv)
    c = red[:r]
    b = [[row[j] for j in piv] for row in a]
    return b, c


def pseudo_inverse(a: Matrix) -> Matrix:
    """Exact Moore-Penrose pseudo-inverse, ``C^T (C C^T)^-1 (B^T B)^-1 B^T``."""
    n, k = shape(a)
    b, c = full_rank_factorization(a)
    if not c:
        return zeros(k, n)
    ct = transpose(c)
    bt = transpose(b)
    return matmul(matmul(ct, inverse(matmul(c, ct))), matmul(inverse(matmul(bt, b)), bt))


def kernel_basis(a: Matrix) -> list[Vector]:
    red, piv = rref(a)
    _, cols = shape(a)
    free = [j for j in range(cols) if j not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -red[i][f]
        basis.append(v)
    return basis


def fmt(x) -> str:
    return str(Fraction(x))


def matrix_to_json(a: Matrix) -> list[list[str]]:
    return [[fmt(x) for x in row] for row in a]


def vector_to_json(v: Sequence) -> list[str]:
    return [str(x) for x in v]


class SparseEchelon:
    """Incremental echelon basis of a span of sparse vectors.

    Vectors are ``{column_label: coefficient}`` dicts with mutually comparable
    labels.  Each stored row has its smallest label as pivot, with
    coefficient 1 there.
    """

    def __init__(self):
        self.rows: dict[Hashable, dict[Hashable, object]] = {}

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, v: Mapping) -> dict:
        """Remainder of ``v`` after elimination against the stored rows."""
        w = {k: c for k, c in v.items() if c}
        rows = self.rows
        while w:
            hit = min((k for k in w if k in rows), default=None)
            if hit is None:
                return w
            f = w[hit]
            for k, c in rows[hit].items():
                s = w.get(k, 0) - f * c
                if s:
                    w[k] = s
                else:
                    w.pop(k, None)
        return w

    def add(self, v: Mapping) -> bool:
        """Insert ``v``; returns True if it enlarged the span."""
        w = self.reduce(v)
        if not w:
            return False
        p = min(w)
        inv = 1 / w[p]
        self.rows[p] = {k: c * inv for k, c in w.items()}
        return True

    def contains(self, v: Mapping) -> bool:
        return not self.reduce(v)


def sparse_rank(vectors: Iterable[Mapping]) -> int:
    ech = SparseEchelon()
    for v in vectors:
        ech.add(v)
    return ech.rank
