"""Nilpotent Lie algebras given by structure constants, with two scalar modes.

An algebra is a rational structure-constant table c[i][j][k] with
[e_i, e_j] = sum_k c[i][j][k] e_k, validated for antisymmetry, the Jacobi
identity and the declared nilpotency class; the simply connected group is
identified with the algebra through exponential coordinates, so the group
law is the Baker-Campbell-Hausdorff polynomial truncated at the class.

Coordinates come in one of two modes, never mixed inside a computation:
exact tuples of Fractions (symbolic identities, zero tolerance) and numpy
float arrays (Monte Carlo, vectorized over leading axes).  The BCH
coefficients are not transcribed from a table: the two-letter group
product is generated once per nilpotency class by the free-algebra engine
and cached, which keeps a single source of truth for the series.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from . import freealg
from .freealg import FreePoly, dynkin_product, evaluate_lie
from .ratlinalg import Subspace, fracvec, is_zero_vec, solve_in_basis

ExactVector = tuple[Fraction, ...]


class DimensionMismatch(ValueError):
    pass


@lru_cache(maxsize=32)
def _bch_poly(step: int) -> FreePoly:
    return dynkin_product(2, step)


class NilpotentAlgebra:
    """Immutable structure-constant algebra; safe to share across workers."""

    def __init__(self, dim: int, step: int, brackets: dict, labels: Optional[Sequence[str]] = None,
                 name: str = "", validate: bool = True):
        """brackets maps (i, j) with 0 <= i < j < dim to {k: coefficient}."""
        self.dim = int(dim)
        self.step = int(step)
        if self.dim < 1 or self.step < 1:
            raise ValueError("dim and step must be positive")
        table: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j), comp in brackets.items():
            if not (0 <= i < j < self.dim):
                raise ValueError(f"bracket key ({i},{j}) must satisfy 0 <= i < j < dim")
            entry = {int(k): Fraction(v) for k, v in comp.items() if Fraction(v) != 0}
            if any(not 0 <= k < self.dim for k in entry):
                raise ValueError("bracket component index out of range")
            if entry:
                table[(i, j)] = entry
        self.table = table
        self.labels = tuple(labels) if labels else tuple(f"e{i+1}" for i in range(self.dim))
        self.name = name
        self._sparse_entries = self._build_sparse()
        if validate:
            self.validate()

    # -- construction helpers -------------------------------------------

    def _build_sparse(self) -> list[tuple[int, int, int, float]]:
        entries = []
        for (i, j), comp in self.table.items():
            for k, c in comp.items():
                fc = float(c)
                entries.append((i, j, k, fc))
                entries.append((j, i, k, -fc))
        return entries

    def structure_constant(self, i: int, j: int, k: int) -> Fraction:
        if i == j:
            return Fraction(0)
        if i < j:
            return self.table.get((i, j), {}).get(k, Fraction(0))
        return -self.table.get((j, i), {}).get(k, Fraction(0))

    def zero_vector(self) -> ExactVector:
        return tuple(Fraction(0) for _ in range(self.dim))

    def basis_vector(self, i: int) -> ExactVector:
        return tuple(Fraction(int(j == i)) for j in range(self.dim))

    # -- exact mode ------------------------------------------------------

    def add_exact(self, x: Sequence[Fraction], y: Sequence[Fraction]) -> ExactVector:
        return tuple(a + b for a, b in zip(x, y))

    def scale_exact(self, c, x: Sequence[Fraction]) -> ExactVector:
        c = Fraction(c)
        return tuple(c * a for a in x)

    def bracket_exact(self, x: Sequence[Fraction], y: Sequence[Fraction]) -> ExactVector:
        if len(x) != self.dim or len(y) != self.dim:
            raise DimensionMismatch("coordinate length does not match the algebra")
        out = [Fraction(0)] * self.dim
        for (i, j), comp in self.table.items():
            w = x[i] * y[j] - x[j] * y[i]
            if w:
                for k, c in comp.items():
                    out[k] += c * w
        return tuple(out)

    def bch_exact(self, x: Sequence[Fraction], y: Sequence[Fraction]) -> ExactVector:
        """Group product x * y in exponential coordinates, exact."""
        x = fracvec(x)
        y = fracvec(y)
        if len(x) != self.dim or len(y) != self.dim:
            raise DimensionMismatch("coordinate length does not match the algebra")
        return evaluate_lie(
            _bch_poly(self.step), [x, y],
            bracket=self.bracket_exact, add=self.add_exact,
            scale=self.scale_exact, zero=self.zero_vector(),
        )

    def multi_product_exact(self, xs: Sequence[Sequence[Fraction]]) -> ExactVector:
        if not xs:
            raise ValueError("product of an empty sequence")
        acc = fracvec(xs[0])
        for x in xs[1:]:
            acc = self.bch_exact(acc, x)
        return acc

    def evaluate_poly_exact(self, poly: FreePoly, xs: Sequence[Sequence[Fraction]]) -> ExactVector:
        """Evaluate a Lie element of the free algebra on exact vectors."""
        vecs = [fracvec(x) for x in xs]
        if any(len(v) != self.dim for v in vecs):
            raise DimensionMismatch("coordinate length does not match the algebra")
        return evaluate_lie(
            poly, vecs,
            bracket=self.bracket_exact, add=self.add_exact,
            scale=self.scale_exact, zero=self.zero_vector(),
        )

    # -- float mode --------------------------------------------------------

    def bracket_float(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=float)
        for (i, j, k, v) in self._sparse_entries:
            out[..., k] += v * x[..., i] * y[..., j]
        return out

    def product_map(self):
        """Compiled vectorized group product for float arrays (..., dim).

        Words of the cached two-letter series are evaluated through a prefix
        trie of bracket chains; the quadratic terms are merged into a single
        antisymmetric pass, which makes class-2 algebras a one-bracket step.
        """
        poly = _bch_poly(self.step)
        quad = {}  # (i, j) i<j -> float coefficient of [arg_i, arg_j]
        higher: list[tuple[float, bytes]] = []
        for w, c in poly.terms.items():
            r = len(w)
            if r == 1:
                continue  # handled by x + y
            coeff = Fraction(c, r)
            if r == 2:
                a, b = w
                if a < b:
                    quad[(a, b)] = quad.get((a, b), Fraction(0)) + coeff
                else:
                    quad[(b, a)] = quad.get((b, a), Fraction(0)) - coeff
            else:
                higher.append((float(coeff), bytes(w)))
        quad_items = [(i, j, float(c)) for (i, j), c in quad.items() if c != 0]
        higher.sort(key=lambda t: (len(t[1]), t[1]))
        bracket = self.bracket_float

        def product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            args = (np.asarray(x, dtype=float), np.asarray(y, dtype=float))
            out = args[0] + args[1]
            cache: dict[bytes, np.ndarray] = {}
            for (i, j, v) in quad_items:
                br = bracket(args[i], args[j])
                cache[bytes((i, j))] = br
                out = out + v * br
            for coeff, w in higher:
                v = None
                start = 2
                for plen in range(len(w) - 1, 1, -1):
                    v = cache.get(w[:plen])
                    if v is not None:
                        start = plen
                        break
                if v is None:
                    v = bracket(args[w[0]], args[w[1]])
                    cache[w[:2]] = v
                for pos in range(start, len(w)):
                    v = bracket(v, args[w[pos]])
                    cache[w[: pos + 1]] = v
                out = out + coeff * v
            return out

        return product

    # -- series and validation ----------------------------------------------

    def descending_central_series(self) -> list[Subspace]:
        """[g, g^[i-1]] chain, starting at the full algebra, ending at zero."""
        series = [Subspace.full(self.dim)]
        basis = [self.basis_vector(i) for i in range(self.dim)]
        while series[-1].dim > 0:
            prev = series[-1]
            gens = [
                self.bracket_exact(b, v)
                for b in basis
                for v in prev.basis
            ]
            nxt = Subspace(self.dim, [g for g in gens if not is_zero_vec(g)])
            if nxt == prev:
                raise ValueError("algebra is not nilpotent: central series stalls")
            series.append(nxt)
        return series

    def validate(self) -> None:
        """Exact antisymmetry (by construction), Jacobi, and class check."""
        basis = [self.basis_vector(i) for i in range(self.dim)]
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                bij = self.bracket_exact(basis[i], basis[j])
                for k in range(j + 1, self.dim):
                    jac = self.add_exact(
                        self.bracket_exact(bij, basis[k]),
                        self.add_exact(
                            self.bracket_exact(self.bracket_exact(basis[j], basis[k]), basis[i]),
                            self.bracket_exact(self.bracket_exact(basis[k], basis[i]), basis[j]),
                        ),
                    )
                    if not is_zero_vec(jac):
                        raise ValueError(f"Jacobi identity fails on basis triple ({i},{j},{k})")
        series = self.descending_central_series()
        actual_step = len(series) - 1  # g^[s+1] = 0 and g^[s] != 0
        if actual_step != self.step:
            raise ValueError(f"declared step {self.step} but central series gives {actual_step}")

    def __repr__(self):
        label = self.name or "algebra"
        return f"NilpotentAlgebra({label}, dim={self.dim}, step={self.step})"


class Element:
    """A coordinate vector tied to its algebra; * is the group product."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: NilpotentAlgebra, coords):
        self.algebra = algebra
        self.coords = fracvec(coords)
        if len(self.coords) != algebra.dim:
            raise DimensionMismatch("coordinate length does not match the algebra")

    def __mul__(self, other: "Element") -> "Element":
        if other.algebra is not self.algebra:
            raise ValueError("elements live on different algebras")
        return Element(self.algebra, self.algebra.bch_exact(self.coords, other.coords))

    def __neg__(self) -> "Element":
        return Element(self.algebra, tuple(-c for c in self.coords))

    def bracket(self, other: "Element") -> "Element":
        return Element(self.algebra, self.algebra.bracket_exact(self.coords, other.coords))

    def __eq__(self, other):
        return isinstance(other, Element) and self.algebra is other.algebra and self.coords == other.coords

    def __repr__(self):
        return f"Element{tuple(str(c) for c in self.coords)}"


# -- built-in algebras -------------------------------------------------------


def heisenberg3() -> NilpotentAlgebra:
    """R^3 with [e1, e2] = e3; the group law's third coordinate picks up
    half the signed area x1*y2 - x2*y1."""
    return NilpotentAlgebra(3, 2, {(0, 1): {2: 1}}, name="heisenberg3")


def abelian(dim: int) -> NilpotentAlgebra:
    return NilpotentAlgebra(dim, 1, {}, name=f"abelian{dim}")


def filiform4() -> NilpotentAlgebra:
    """Dim-4 filiform chain: [e1, e2] = e3, [e1, e3] = e4."""
    return NilpotentAlgebra(4, 3, {(0, 1): {2: 1}, (0, 2): {3: 1}}, name="filiform4")


@lru_cache(maxsize=8)
def free_nilpotent(generators: int, step: int) -> NilpotentAlgebra:
    """Free nilpotent algebra on g generators of class s (g <= 3, s <= 4).

    Realized inside the truncated free associative algebra: a basis of the
    Lie subalgebra generated by the letters is extracted degree by degree
    with exact rank decisions, and structure constants are read off by
    solving in that basis.  Dimensions match the Witt formula, which the
    tests pin down.
    """
    if not (1 <= generators <= 3 and 1 <= step <= 4):
        raise ValueError("free_nilpotent is built in only for g <= 3, s <= 4")
    letters = [FreePoly.letter(i, generators, step) for i in range(generators)]

    def poly_coords(p: FreePoly, words: list[bytes]) -> list[Fraction]:
        return [p.terms.get(w, Fraction(0)) for w in words]

    basis_polys: list[FreePoly] = []
    layer = list(letters)
    basis_polys.extend(layer)
    for r in range(2, step + 1):
        words_r = sorted({w for p in layer for u in letters for w in (p.bracket(u)).terms})
        candidates = [p.bracket(u) for p in layer for u in letters]
        chosen: list[FreePoly] = []
        space = Subspace(len(words_r), ())
        for cand in candidates:
            if cand.is_zero():
                continue
            v = poly_coords(cand, words_r)
            if not space.contains(v):
                space = space.spanned_with([v])
                chosen.append(cand)
        layer = chosen
        basis_polys.extend(layer)

    dim = len(basis_polys)
    degree_of = [max(len(w) for w in p.terms) for p in basis_polys]
    all_words = sorted({w for p in basis_polys for w in p.terms})
    rows = [tuple(poly_coords(p, all_words)) for p in basis_polys]

    brackets: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i in range(dim):
        for j in range(i + 1, dim):
            if degree_of[i] + degree_of[j] > step:
                continue
            prod = basis_polys[i].bracket(basis_polys[j])
            if prod.is_zero():
                continue
            coeffs = solve_in_basis(rows, poly_coords(prod, all_words))
            if coeffs is None:
                raise RuntimeError("bracket left the candidate basis; construction is broken")
            entry = {k: c for k, c in enumerate(coeffs) if c != 0}
            if entry:
                brackets[(i, j)] = entry

    return NilpotentAlgebra(dim, step, brackets, name=f"free_nilpotent({generators},{step})")


BUILTIN_FACTORIES = {
    "heisenberg3": heisenberg3,
    "filiform4": filiform4,
}


def builtin_algebra(spec: str) -> NilpotentAlgebra:
    """Resolve names like heisenberg3, abelian(3), free-nilpotent(2,3)."""
    spec = spec.strip()
    if spec in BUILTIN_FACTORIES:
        return BUILTIN_FACTORIES[spec]()
    if spec.startswith("abelian(") and spec.endswith(")"):
        return abelian(int(spec[8:-1]))
    if spec.startswith("free-nilpotent(") and spec.endswith(")"):
        g, s = (int(t) for t in spec[15:-1].split(","))
        return free_nilpotent(g, s)
    raise ValueError(f"unknown builtin algebra {spec!r}")
