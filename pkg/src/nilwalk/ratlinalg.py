"""Exact linear algebra over the rationals.

Subspaces of Q^d are stored through reduced row echelon bases, so rank,
containment and equality questions are decided exactly.  Everything here
runs on ``fractions.Fraction``; floating point never enters.  The rest of
the package leans on this for filtration ideals, supplements and adapted
bases, where a wrong rank decision would silently corrupt weights.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional, Sequence

Vector = tuple[Fraction, ...]


def fracvec(v: Iterable) -> Vector:
    """Coerce a sequence of ints/Fractions/strings into a Fraction tuple."""
    return tuple(Fraction(x) for x in v)


def vec_add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, v: Sequence[Fraction]) -> Vector:
    c = Fraction(c)
    return tuple(c * a for a in v)


def is_zero_vec(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def rref(rows: Iterable[Sequence[Fraction]]) -> list[Vector]:
    """Reduced row echelon form of the span of ``rows``.

    Returns a canonical basis: leading entries are 1, pivot columns are
    cleared above and below, rows sorted by pivot position, zero rows
    dropped.  Two iterables span the same subspace iff their rref lists
    are equal.
    """
    mat = [list(fracvec(r)) for r in rows]
    if not mat:
        return []
    ncols = len(mat[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(mat)):
            if mat[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        inv = Fraction(1, 1) / mat[r][c]
        mat[r] = [inv * x for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return [tuple(row) for row in mat[:r]]


class Subspace:
    """A linear subspace of Q^d held in canonical rref form."""

    __slots__ = ("ambient_dim", "basis", "pivots")

    def __init__(self, ambient_dim: int, vectors: Iterable[Sequence] = ()):
        self.ambient_dim = ambient_dim
        self.basis: tuple[Vector, ...] = tuple(rref([fracvec(v) for v in vectors]))
        piv = []
        for row in self.basis:
            for c, x in enumerate(row):
                if x != 0:
                    piv.append(c)
                    break
        self.pivots: tuple[int, ...] = tuple(piv)

    @classmethod
    def full(cls, d: int) -> "Subspace":
        eye = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
        return cls(d, eye)

    @classmethod
    def zero(cls, d: int) -> "Subspace":
        return cls(d, ())

    @property
    def dim(self) -> int:
        return len(self.basis)

    def reduce(self, v: Sequence) -> Vector:
        """Residual of v after elimination against the basis (zero iff v in span)."""
        w = list(fracvec(v))
        for row, p in zip(self.basis, self.pivots):
            if w[p] != 0:
                f = w[p]
                w = [a - f * b for a, b in zip(w, row)]
        return tuple(w)

    def contains(self, v: Sequence) -> bool:
        return is_zero_vec(self.reduce(v))

    def coordinates_of(self, v: Sequence) -> Optional[Vector]:
        """Coefficients of v in the rref basis, or None if v is outside."""
        w = list(fracvec(v))
        coeffs = []
        for row, p in zip(self.basis, self.pivots):
            c = w[p]
            coeffs.append(c)
            if c != 0:
                w = [a - c * b for a, b in zip(w, row)]
        if not is_zero_vec(w):
            return None
        return tuple(coeffs)

    def add(self, other: "Subspace") -> "Subspace":
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        return Subspace(self.ambient_dim, list(self.basis) + list(other.basis))

    def spanned_with(self, vectors: Iterable[Sequence]) -> "Subspace":
        return Subspace(self.ambient_dim, list(self.basis) + [fracvec(v) for v in vectors])

    def is_subspace_of(self, other: "Subspace") -> bool:
        return all(other.contains(row) for row in self.basis)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subspace)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def solve_in_basis(basis_rows: Sequence[Vector], v: Sequence) -> Optional[Vector]:
    """Express v as a combination of (not necessarily rref) basis rows.

    Gaussian elimination on the augmented system; returns None when v is
    not in the span.  Used to compute structure constants in a chosen
    basis, so exactness matters and speed does not.
    """
    rows = [list(r) for r in basis_rows]
    n = len(rows)
    if n == 0:
        return () if is_zero_vec(fracvec(v)) else None
    d = len(rows[0])
    # augmented columns track the expression of each reduced row
    aug = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    w = list(fracvec(v))
    wc = [Fraction(0)] * n
    col = 0
    r = 0
    while r < n and col < d:
        pivot_row = None
        for i in range(r, n):
            if rows[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            col += 1
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        aug[r], aug[pivot_row] = aug[pivot_row], aug[r]
        inv = Fraction(1) / rows[r][col]
        rows[r] = [inv * x for x in rows[r]]
        aug[r] = [inv * x for x in aug[r]]
        for i in range(n):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        if w[col] != 0:
            f = w[col]
            w = [x - f * y for x, y in zip(w, rows[r])]
            wc = [x - f * y for x, y in zip(wc, aug[r])]
        r += 1
        col += 1
    # continue eliminating w against remaining pivot columns
    for rr in range(r):
        # find pivot col of row rr
        pc = next((c for c, x in enumerate(rows[rr]) if x != 0), None)
        if pc is not None and w[pc] != 0:
            f = w[pc]
            w = [x - f * y for x, y in zip(w, rows[rr])]
            wc = [x - f * y for x, y in zip(wc, aug[rr])]
    if not is_zero_vec(w):
        return None
    return tuple(-x for x in wc)


def invert_matrix(rows: Sequence[Sequence[Fraction]]) -> list[Vector]:
    """Exact inverse of a square rational matrix given as a list of rows."""
    n = len(rows)
    mat = [list(fracvec(r)) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        pivot_row = next((i for i in range(c, n) if mat[i][c] != 0), None)
        if pivot_row is None:
            raise ValueError("matrix is singular")
        mat[c], mat[pivot_row] = mat[pivot_row], mat[c]
        inv = Fraction(1) / mat[c][c]
        mat[c] = [inv * x for x in mat[c]]
        for i in range(n):
            if i != c and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[c])]
    return [tuple(row[n:]) for row in mat]
