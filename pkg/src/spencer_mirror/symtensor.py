"""Symmetric tensors over an ``n``-dimensional algebra in the multiset basis.

The basis of ``Sym^p`` is indexed by sorted multisets ``m = (i_1 <= ... <= i_p)``
and the basis element for ``m`` is the symmetric product ``e_{i_1} ⊙ ... ⊙ e_{i_p}``.
As a multilinear form it is the symmetrization

    e_m(w_1, ..., w_p) = (1/p!) sum_sigma prod_j <e_{i_sigma(j)}, w_j>,

and the inner product is the Euclidean one on the underlying dense tensors, so
``||e_m||^2 = prod(multiplicity!) / p!`` and distinct multisets are orthogonal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


class SymTensorError(ValueError):
    pass


@dataclass(frozen=True)
class SymBasis:
    """Multiset indexing of ``Sym^p(R^n)``."""

    n: int
    p: int
    multisets: tuple = field(repr=False)
    index: dict = field(repr=False)
    gram: np.ndarray = field(repr=False)
    orbit_flat: np.ndarray = field(repr=False)
    orbit_owner: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.multisets)


def sym_dim(n: int, p: int) -> int:
    return math.comb(n + p - 1, p)


@lru_cache(maxsize=None)
def sym_basis(n: int, p: int) -> SymBasis:
    if n < 1 or p < 0:
        raise SymTensorError(f"bad Sym basis request n={n}, p={p}")
    ms = tuple(itertools.combinations_with_replacement(range(n), p))
    index = {m: i for i, m in enumerate(ms)}
    gram = np.array(
        [math.prod(math.factorial(k) for k in _multiplicities(m)) / math.factorial(p) for m in ms]
    )
    # all index arrangements of every multiset, as flat offsets into an n**p array
    flat, owner = [], []
    strides = [n ** (p - 1 - j) for j in range(p)]
    for i, m in enumerate(ms):
        for arr in set(itertools.permutations(m)):
            flat.append(sum(a * s for a, s in zip(arr, strides)))
            owner.append(i)
    order = np.argsort(flat, kind="stable")
    flat = np.asarray(flat, dtype=np.int64)[order]
    owner = np.asarray(owner, dtype=np.int64)[order]
    for a in (gram, flat, owner):
        a.setflags(write=False)
    return SymBasis(n, p, ms, index, gram, flat, owner)


def _multiplicities(m):
    counts = {}
    for i in m:
        counts[i] = counts.get(i, 0) + 1
    return counts.values()


def to_full(coeffs: np.ndarray, n: int, p: int) -> np.ndarray:
    """Dense symmetric tensor of shape ``(n,) * p``; works on a trailing coefficient axis."""
    b = sym_basis(n, p)
    coeffs = np.asarray(coeffs, dtype=float)
    lead = coeffs.shape[:-1]
    scaled = coeffs * b.gram
    out = np.zeros(lead + (n**p,))
    out[..., b.orbit_flat] = scaled[..., b.orbit_owner]
    return out.reshape(lead + (n,) * p)


@lru_cache(maxsize=None)
def _orbit_matrix(n: int, p: int) -> np.ndarray:
    b = sym_basis(n, p)
    agg = np.zeros((n**p, b.size))
    agg[b.orbit_flat, b.orbit_owner] = 1.0
    agg.setflags(write=False)
    return agg


def orbit_sums(dense: np.ndarray, n: int, p: int) -> np.ndarray:
    """Coefficients of ``Sym(T)`` for a (not necessarily symmetric) dense ``T``.

    The coefficient of ``e_m`` in the symmetrization of ``T`` is the sum of ``T``
    over all distinct index arrangements of ``m``. Works on leading batch axes.
    """
    dense = np.asarray(dense, dtype=float)
    lead = dense.shape[: dense.ndim - p]
    return dense.reshape(lead + (n**p,)) @ _orbit_matrix(n, p)


def from_full(dense: np.ndarray, n: int, p: int) -> np.ndarray:
    """Coefficients of a dense symmetric tensor (inverse of :func:`to_full`)."""
    b = sym_basis(n, p)
    dense = np.asarray(dense, dtype=float)
    lead = dense.shape[: dense.ndim - p]
    flat = dense.reshape(lead + (n**p,))
    first = np.zeros(b.size, dtype=np.int64)
    strides = [n ** (p - 1 - j) for j in range(p)]
    for i, m in enumerate(b.multisets):
        first[i] = sum(a * s for a, s in zip(m, strides))
    return flat[..., first] / b.gram


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Element of ``Sym^p(R^n)``."""

    algebra_dim: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.shape[0] != sym_dim(self.algebra_dim, self.degree):
            raise SymTensorError(
                f"Sym^{self.degree}(R^{self.algebra_dim}) has dimension "
                f"{sym_dim(self.algebra_dim, self.degree)}, got {c.shape[0]} coefficients"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, n: int, multiset) -> SymTensor:
        m = tuple(sorted(multiset))
        b = sym_basis(n, len(m))
        c = np.zeros(b.size)
        c[b.index[m]] = 1.0
        return cls(n, len(m), c)

    @classmethod
    def unit(cls, n: int) -> SymTensor:
        return cls(n, 0, [1.0])

    @classmethod
    def vector(cls, v) -> SymTensor:
        v = np.asarray(v, dtype=float)
        return cls(v.shape[0], 1, v)

    @classmethod
    def from_dense(cls, dense) -> SymTensor:
        dense = np.asarray(dense, dtype=float)
        if dense.ndim == 0:
            raise SymTensorError("degree-0 tensors need an explicit algebra dimension")
        return cls(dense.shape[0], dense.ndim, from_full(dense, dense.shape[0], dense.ndim))

    def dense(self) -> np.ndarray:
        return to_full(self.coeffs, self.algebra_dim, self.degree)

    def __add__(self, other: SymTensor) -> SymTensor:
        _same_space(self, other)
        return SymTensor(self.algebra_dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: SymTensor) -> SymTensor:
        _same_space(self, other)
        return SymTensor(self.algebra_dim, self.degree, self.coeffs - other.coeffs)

    def __neg__(self) -> SymTensor:
        return SymTensor(self.algebra_dim, self.degree, -self.coeffs)

    def __mul__(self, scalar: float) -> SymTensor:
        return SymTensor(self.algebra_dim, self.degree, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"degree": self.degree, "coeffs": self.coeffs.tolist()}


def _same_space(s1: SymTensor, s2: SymTensor):
    if s1.algebra_dim != s2.algebra_dim or s1.degree != s2.degree:
        raise SymTensorError("tensors live in different Sym spaces")


@lru_cache(maxsize=None)
def _product_table(n: int, p: int, q: int) -> np.ndarray:
    bp, bq, bpq = sym_basis(n, p), sym_basis(n, q), sym_basis(n, p + q)
    table = np.empty((bp.size, bq.size), dtype=np.int64)
    for i, m1 in enumerate(bp.multisets):
        for j, m2 in enumerate(bq.multisets):
            table[i, j] = bpq.index[tuple(sorted(m1 + m2))]
    table.setflags(write=False)
    return table


def sym_product(s1: SymTensor, s2: SymTensor) -> SymTensor:
    """Symmetric product; on basis elements ``e_m ⊙ e_m' = e_{m ∪ m'}`` (multiset union)."""
    if s1.algebra_dim != s2.algebra_dim:
        raise SymTensorError("algebra dimension mismatch")
    n, p, q = s1.algebra_dim, s1.degree, s2.degree
    table = _product_table(n, p, q)
    out = np.zeros(sym_dim(n, p + q))
    np.add.at(out, table, np.outer(s1.coeffs, s2.coeffs))
    return SymTensor(n, p + q, out)


def evaluate(s: SymTensor, args) -> float:
    """Value of ``s`` as a symmetric multilinear form on ``p`` vectors."""
    args = [np.asarray(a, dtype=float) for a in args]
    if len(args) != s.degree:
        raise SymTensorError(f"degree-{s.degree} tensor needs {s.degree} arguments, got {len(args)}")
    for a in args:
        if a.shape != (s.algebra_dim,):
            raise SymTensorError("argument has wrong length")
    t = s.dense()
    for a in args:
        t = np.tensordot(a, t, axes=([0], [0]))
    return float(t)


def inner_product(s1: SymTensor, s2: SymTensor) -> float:
    if s1.degree != s2.degree:
        raise SymTensorError("inner product of tensors of different degree")
    _same_space(s1, s2)
    b = sym_basis(s1.algebra_dim, s1.degree)
    return float(np.sum(s1.coeffs * b.gram * s2.coeffs))


def norm(s: SymTensor) -> float:
    return math.sqrt(inner_product(s, s))


@dataclass(frozen=True, eq=False)
class GradedSymElement:
    """Element of the truncation ``Sym^0 ⊕ ... ⊕ Sym^P``; missing degrees are zero.

    ``truncated`` records whether nonzero mass above ``max_degree`` was dropped
    when the element was produced.
    """

    algebra_dim: int
    max_degree: int
    components: tuple
    truncated: bool = False

    def __post_init__(self):
        comps = tuple(self.components)
        degrees = [c.degree for c in comps]
        if len(set(degrees)) != len(degrees):
            raise SymTensorError("repeated degree in graded element")
        for c in comps:
            if c.algebra_dim != self.algebra_dim or c.degree > self.max_degree:
                raise SymTensorError(f"component of degree {c.degree} does not fit")
        object.__setattr__(self, "components", tuple(sorted(comps, key=lambda c: c.degree)))

    def component(self, p: int) -> SymTensor:
        for c in self.components:
            if c.degree == p:
                return c
        return SymTensor(self.algebra_dim, p, np.zeros(sym_dim(self.algebra_dim, p)))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.component(p).coeffs for p in range(self.max_degree + 1)])

    def inner(self, other: GradedSymElement) -> float:
        top = max(self.max_degree, other.max_degree)
        return sum(
            inner_product(self.component(p), other.component(p))
            for p in range(top + 1)
        )


def fiber_offsets(n: int, max_degree: int) -> np.ndarray:
    """Start offset of each ``Sym^p`` block in the flat truncated fiber, plus the total."""
    return np.cumsum([0] + [sym_dim(n, p) for p in range(max_degree + 1)])


def fiber_gram(n: int, max_degree: int) -> np.ndarray:
    """Diagonal of the fiber inner product on ``Sym^{<=P}``."""
    return np.concatenate([sym_basis(n, p).gram for p in range(max_degree + 1)])


def fiber_degrees(n: int, max_degree: int) -> np.ndarray:
    return np.concatenate([np.full(sym_dim(n, p), p) for p in range(max_degree + 1)])
