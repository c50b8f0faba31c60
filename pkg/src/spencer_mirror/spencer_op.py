"""The constraint-coupled Spencer operator on the symmetric algebra.

On generators ``v`` the operator returns the symmetric bilinear form

    delta(v)(w1, w2) = 1/2 (<lam, [w1, [w2, v]]> + <lam, [w2, [w1, v]]>).

On ``Sym^p`` it is built as a multilinear form and then symmetrized: with
``Phi(w1, w2)`` the vector defined by ``<Phi(w1, w2), x> = <lam, [w1, [w2, x]]>``,

    T(w_1, ..., w_{p+1}) = s(Phi(w_1, w_2), w_3, ..., w_{p+1}),
    delta(s) = Sym(T),

which is the generator formula with ``s`` in place of ``v``. It is linear in
``lam`` and ``s`` and kills ``Sym^0``. All matrices act on multiset coefficient
vectors (see :mod:`spencer_mirror.symtensor`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from spencer_mirror.lie_core import AlgebraError, DualElement, LieAlgebra, bracket, c_str
from spencer_mirror.symtensor import (
    GradedSymElement,
    SymTensor,
    fiber_offsets,
    from_full,
    orbit_sums,
    sym_basis,
    sym_dim,
    to_full,
)


def _lam(a: LieAlgebra, lam) -> np.ndarray:
    coeffs = lam.coeffs if isinstance(lam, DualElement) else np.asarray(lam, dtype=float)
    if coeffs.shape != (a.dim,):
        raise AlgebraError(f"dual element of length {coeffs.shape} for {a.name} (dim {a.dim})")
    return coeffs


# --- values on test vectors ---------------------------------------------------


def delta_generator_value(a: LieAlgebra, lam, v, w1, w2) -> float:
    """Generator formula evaluated on ``(w1, w2)``, by nested brackets."""
    lv = _lam(a, lam)
    t1 = bracket(a, w1, bracket(a, w2, v))
    t2 = bracket(a, w2, bracket(a, w1, v))
    return 0.5 * (float(lv @ t1) + float(lv @ t2))


def delta_generator_value_alt(a: LieAlgebra, lam, v, w1, w2) -> float:
    """Equivalent form ``<lam, [w2, [w1, v]]> + 1/2 <lam, [[w1, w2], v]>``."""
    lv = _lam(a, lam)
    t1 = bracket(a, w2, bracket(a, w1, v))
    t2 = bracket(a, bracket(a, w1, w2), v)
    return float(lv @ t1) + 0.5 * float(lv @ t2)


def _tensor_from_values(a: LieAlgebra, value) -> SymTensor:
    e = np.eye(a.dim)
    form = np.array([[value(e[i], e[j]) for j in range(a.dim)] for i in range(a.dim)])
    return SymTensor(a.dim, 2, from_full(form, a.dim, 2))


def delta_on_generator(a: LieAlgebra, lam, v) -> SymTensor:
    v = np.asarray(v, dtype=float)
    a._check(v)
    return _tensor_from_values(a, lambda w1, w2: delta_generator_value(a, lam, v, w1, w2))


def delta_on_generator_alt(a: LieAlgebra, lam, v) -> SymTensor:
    v = np.asarray(v, dtype=float)
    a._check(v)
    return _tensor_from_values(a, lambda w1, w2: delta_generator_value_alt(a, lam, v, w1, w2))


def coadjoint_covector(a: LieAlgebra, lam, v) -> np.ndarray:
    """The functional ``w -> <lam, [v, w]>`` as a coefficient vector."""
    lv = _lam(a, lam)
    v = np.asarray(v, dtype=float)
    a._check(v)
    return np.einsum("a,abg,b->g", lv, a.structure_constants, v)


# --- matrices -------------------------------------------------------------------


def _double_brackets(a: LieAlgebra) -> np.ndarray:
    """``G[l, b, c, x] = <e*_l, [e_b, [e_c, e_x]]>``."""
    c = a.structure_constants
    return np.einsum("lbm,mcx->lbcx", c, c)


@lru_cache(maxsize=64)
def _basis_matrices(a: LieAlgebra, p: int) -> np.ndarray:
    """Matrices of the operator on ``Sym^p`` for ``lam = e*_l``; shape ``(dim, N_{p+1}, N_p)``."""
    n = a.dim
    n_out, n_in = sym_dim(n, p + 1), sym_dim(n, p)
    out = np.zeros((n, n_out, n_in))
    if p == 0 or not np.any(a.structure_constants):
        out.setflags(write=False)
        return out
    g = _double_brackets(a)
    # dense forms of every basis element of Sym^p, shape (N_p, n, ..., n)
    basis = to_full(np.eye(n_in), n, p)
    for l in range(n):
        # T[m, w1, w2, rest] = sum_x Phi_l[w1, w2, x] * e_m[x, rest]
        t = np.tensordot(basis, g[l], axes=([1], [2]))  # (N_p, rest..., w1, w2)
        t = np.moveaxis(t, (-2, -1), (1, 2))
        out[l] = orbit_sums(t, n, p + 1).T
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SpencerOperatorMatrix:
    """Matrix of the operator ``Sym^p -> Sym^{p+1}`` on multiset coefficients."""

    algebra: LieAlgebra
    lam: np.ndarray
    degree: int
    matrix: np.ndarray

    def apply(self, s: SymTensor) -> SymTensor:
        if s.degree != self.degree:
            raise AlgebraError(f"operator acts on degree {self.degree}, got {s.degree}")
        return SymTensor(self.algebra.dim, self.degree + 1, self.matrix @ s.coeffs)

    def weighted(self) -> np.ndarray:
        """Matrix in orthonormal bases of the Sym inner products."""
        n = self.algebra.dim
        gi = np.sqrt(sym_basis(n, self.degree).gram)
        go = np.sqrt(sym_basis(n, self.degree + 1).gram)
        return go[:, None] * self.matrix / gi[None, :]

    def to_json(self) -> dict:
        n = self.algebra.dim
        return {
            "algebra": self.algebra.name,
            "lambda": self.lam.tolist(),
            "degree": self.degree,
            "rows": [list(m) for m in sym_basis(n, self.degree + 1).multisets],
            "cols": [list(m) for m in sym_basis(n, self.degree).multisets],
            "matrix": self.matrix.tolist(),
        }


def combine(basis_mats: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """``sum_l lam[l] * basis_mats[l]`` accumulated in a fixed order.

    Negating ``lam`` negates every product and hence every partial sum, so the
    result for ``-lam`` is the bitwise negation of the result for ``lam``.
    """
    out = np.zeros(basis_mats.shape[1:])
    for l in range(basis_mats.shape[0]):
        out += lam[l] * basis_mats[l]
    return out


def delta_matrix(a: LieAlgebra, lam, p: int) -> SpencerOperatorMatrix:
    if p < 0:
        raise AlgebraError("degree must be nonnegative")
    lv = _lam(a, lam)
    return SpencerOperatorMatrix(a, lv.copy(), p, combine(_basis_matrices(a, p), lv))


def delta_extend(a: LieAlgebra, lam, s: SymTensor) -> SymTensor:
    if s.algebra_dim != a.dim:
        raise AlgebraError("tensor and algebra dimensions differ")
    return delta_matrix(a, lam, s.degree).apply(s)


def delta_graded(a: LieAlgebra, lam, g: GradedSymElement) -> GradedSymElement:
    """Apply the operator on ``Sym^{<=P}``; output above ``P`` is dropped and flagged."""
    comps, dropped = [], False
    for s in g.components:
        out = delta_extend(a, lam, s)
        if out.degree > g.max_degree:
            dropped = dropped or bool(np.any(out.coeffs))
            continue
        comps.append(out)
    merged = {}
    for c in comps:
        merged[c.degree] = merged[c.degree] + c if c.degree in merged else c
    return GradedSymElement(a.dim, g.max_degree, tuple(merged.values()), truncated=dropped)


def fiber_basis_blocks(a: LieAlgebra, max_degree: int) -> np.ndarray:
    """Basis matrices on the flat truncated fiber ``Sym^0 ⊕ ... ⊕ Sym^P``.

    Shape ``(dim, N, N)``; the block mapping ``Sym^P`` out of the truncation is
    dropped.
    """
    offs = fiber_offsets(a.dim, max_degree)
    size = int(offs[-1])
    out = np.zeros((a.dim, size, size))
    for p in range(max_degree):
        out[:, offs[p + 1] : offs[p + 2], offs[p] : offs[p + 1]] = _basis_matrices(a, p)
    return out


def truncation_loss(a: LieAlgebra, lam, max_degree: int) -> float:
    """Operator norm of the dropped map ``Sym^P -> Sym^{P+1}``."""
    return operator_norm(a, lam, max_degree) / 2.0


# --- identities and bounds --------------------------------------------------


def operator_norm(a: LieAlgebra, lam, p: int) -> float:
    """Spectral norm of ``S = -2 delta`` on ``Sym^p`` in the Sym inner products."""
    w = delta_matrix(a, lam, p).weighted()
    if w.size == 0 or not np.any(w):
        return 0.0
    return 2.0 * float(np.linalg.norm(w, 2))


def nilpotency_residual(a: LieAlgebra, lam, p: int) -> float:
    """Operator norm of ``delta_{p+1} ∘ delta_p`` in the Sym inner products."""
    d1 = delta_matrix(a, lam, p)
    d2 = delta_matrix(a, lam, p + 1)
    n = a.dim
    comp = d2.matrix @ d1.matrix
    gi = np.sqrt(sym_basis(n, p).gram)
    go = np.sqrt(sym_basis(n, p + 2).gram)
    w = go[:, None] * comp / gi[None, :]
    if not np.any(w):
        return 0.0
    return float(np.linalg.norm(w, 2))


@dataclass(frozen=True)
class BoundCheck:
    algebra: str
    degree: int
    lam_norm: float
    measured_norm: float
    c_str: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra,
            "degree": self.degree,
            "lambda_norm": self.lam_norm,
            "measured": self.measured_norm,
            "c_str": self.c_str,
            "bound": self.bound,
            "pass": self.passed,
        }


def operator_norm_bound_check(a: LieAlgebra, lam, p: int, c_value: float | None = None,
                              *, samples: int = 20_000, seed: int = 0) -> BoundCheck:
    """Compare ``||-2 delta||`` on ``Sym^p`` with ``2 sqrt(p+1) C_str ||lam||``.

    ``c_value`` defaults to the brute-force structure constant.
    """
    lv = _lam(a, lam)
    if c_value is None:
        c_value = c_str(a, "brute_force", samples=samples, seed=seed)
    measured = operator_norm(a, lv, p)
    bound = 2.0 * math.sqrt(p + 1) * c_value * float(np.linalg.norm(lv))
    return BoundCheck(a.name, p, float(np.linalg.norm(lv)), measured, c_value, bound,
                      measured <= bound * (1 + 1e-9))
