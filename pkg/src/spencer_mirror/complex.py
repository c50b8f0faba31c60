"""The discrete Spencer complex over a triangulated surface.

The cochain space is bigraded,

    V = ⊕_{k, p} C^k(mesh) ⊗ Sym^p(g),   k = 0, 1, 2,   p = 0..P,

and the differential

    D(ω ⊗ s) = dω ⊗ s + (-1)^k ω ⊗ δ^{λ(x)} s

raises the total degree ``n = k + p`` by one: the ``d`` part raises ``k``, the
``δ`` part raises ``p``. Cohomology and Laplacians live on the total-degree
spaces ``T^n = ⊕_{k+p=n} C^k ⊗ Sym^p``. λ is evaluated at the barycenter of the
source simplex. The map ``Sym^P -> Sym^{P+1}`` leaves the truncation and is
dropped; ``SpencerDifferential.truncated`` records whether it was nonzero.

Ordering of ``V``: blocks ``(k, p)`` sorted by ``n`` then ``k``; inside a block,
simplex-major and multiset-minor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from spencer_mirror import _kernels
from spencer_mirror.dec import (
    MeshError,
    TriMesh,
    WeightField,
    constraint_weight,
    curvature_weight,
    exterior_derivative,
    hodge_stars,
    mass_matrices,
    unit_weight,
)
from spencer_mirror.lie_core import LieAlgebra
from spencer_mirror.spectral import (
    GapAmbiguityError,
    GapPolicy,
    kernel_dimension,
    singular_kernel_dimension,
    smallest_eigenvalues,
)
from spencer_mirror.spencer_op import _basis_matrices
from spencer_mirror.symtensor import fiber_offsets, sym_dim


class AssemblyError(ValueError):
    pass


# --- lambda fields ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConstantLambdaField:
    """The same dual vector at every point."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def at(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.tile(self.coeffs, (len(points), 1))

    def negated(self) -> ConstantLambdaField:
        return ConstantLambdaField(-self.coeffs)

    def describe(self) -> dict:
        return {"kind": "constant_vector", "coeffs": self.coeffs.tolist()}


def _sample(field_, points, dim) -> np.ndarray:
    lam = np.asarray(field_.at(points), dtype=float)
    if lam.shape != (len(points), dim):
        raise AssemblyError(f"lambda field returned shape {lam.shape}, expected {(len(points), dim)}")
    if not np.all(np.isfinite(lam)):
        raise AssemblyError("lambda field is undefined (non-finite) at a barycenter")
    return lam


# --- indexing ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpencerSpaceIndex:
    counts: tuple
    algebra_dim: int
    max_degree: int
    blocks: tuple = field(init=False)
    offsets: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.max_degree < 0:
            raise AssemblyError("max_degree must be nonnegative")
        blocks = sorted(
            ((k, p) for k in range(3) for p in range(self.max_degree + 1)),
            key=lambda kp: (kp[0] + kp[1], kp[0]),
        )
        offs, pos = {}, 0
        for k, p in blocks:
            offs[(k, p)] = pos
            pos += self.counts[k] * sym_dim(self.algebra_dim, p)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "_size", pos)

    @property
    def size(self) -> int:
        return self._size

    @property
    def top_degree(self) -> int:
        return 2 + self.max_degree

    def fiber_dim(self) -> int:
        return int(fiber_offsets(self.algebra_dim, self.max_degree)[-1])

    def block_size(self, k: int, p: int) -> int:
        return self.counts[k] * sym_dim(self.algebra_dim, p)

    def block_slice(self, k: int, p: int) -> slice:
        o = self.offsets[(k, p)]
        return slice(o, o + self.block_size(k, p))

    def degree_slice(self, n: int) -> slice:
        """Total-degree space ``T^n`` as a contiguous slice of ``V``."""
        inside = [(k, p) for k, p in self.blocks if k + p == n]
        if not inside:
            return slice(0, 0)
        k0, p0 = inside[0]
        start = self.offsets[(k0, p0)]
        return slice(start, start + sum(self.block_size(k, p) for k, p in inside))

    def degree_dim(self, n: int) -> int:
        s = self.degree_slice(n)
        return s.stop - s.start

    def form_dim(self, k: int) -> int:
        return self.counts[k] * self.fiber_dim()

    def flat(self, k: int, simplex: int, p: int, multiset: int) -> int:
        n_p = sym_dim(self.algebra_dim, p)
        if not (0 <= simplex < self.counts[k] and 0 <= multiset < n_p):
            raise IndexError((k, simplex, p, multiset))
        return self.offsets[(k, p)] + simplex * n_p + multiset

    def unflat(self, i: int) -> tuple[int, int, int, int]:
        if not 0 <= i < self.size:
            raise IndexError(i)
        for k, p in self.blocks:
            o = self.offsets[(k, p)]
            if o <= i < o + self.block_size(k, p):
                n_p = sym_dim(self.algebra_dim, p)
                return k, (i - o) // n_p, p, (i - o) % n_p
        raise IndexError(i)  # pragma: no cover

    def sym_degrees(self) -> np.ndarray:
        out = np.empty(self.size, dtype=np.int64)
        for k, p in self.blocks:
            out[self.block_slice(k, p)] = p
        return out

    def form_degrees(self) -> np.ndarray:
        out = np.empty(self.size, dtype=np.int64)
        for k, p in self.blocks:
            out[self.block_slice(k, p)] = k
        return out

    def form_layout(self, k: int) -> np.ndarray:
        """Positions in ``V`` of ``C^k ⊗ Sym^{<=P}`` laid out simplex-major, fiber-minor."""
        offs = fiber_offsets(self.algebra_dim, self.max_degree)
        nf = int(offs[-1])
        out = np.empty(self.counts[k] * nf, dtype=np.int64)
        simplices = np.arange(self.counts[k])
        for p in range(self.max_degree + 1):
            n_p = sym_dim(self.algebra_dim, p)
            local = np.arange(n_p)
            src = (simplices[:, None] * nf + offs[p] + local[None, :]).ravel()
            out[src] = self.offsets[(k, p)] + (simplices[:, None] * n_p + local[None, :]).ravel()
        return out

    def grading_involution(self) -> np.ndarray:
        """Diagonal of ``J``: ``(-1)^p`` on sym-degree-``p`` components."""
        return np.where(self.sym_degrees() % 2 == 0, 1.0, -1.0)


# --- assembly ------------------------------------------------------------------------


def _d_triplets(mesh: TriMesh, index: SpencerSpaceIndex, backend):
    rows, cols, vals = [], [], []
    for k in (0, 1):
        d = exterior_derivative(mesh, k).tocoo()
        for p in range(index.max_degree + 1):
            n_p = sym_dim(index.algebra_dim, p)
            r, c, v = _kernels.kron_identity(d.row, d.col, d.data, n_p, backend=backend)
            rows.append(r + index.offsets[(k + 1, p)])
            cols.append(c + index.offsets[(k, p)])
            vals.append(v)
    return rows, cols, vals


def _delta_triplets(mesh, algebra, index, lam_samples, scale_of_k, backend):
    """Triplets of ``scale_of_k(k) * (1 ⊗ δ^{λ(x)})`` for every block; top block dropped."""
    rows, cols, vals = [], [], []
    for k in range(3):
        w = lam_samples[k] * scale_of_k(k)
        ns = index.counts[k]
        for p in range(index.max_degree):
            basis = _basis_matrices(algebra, p)
            n_in, n_out = sym_dim(algebra.dim, p), sym_dim(algebra.dim, p + 1)
            s = np.arange(ns, dtype=np.int64)
            r, c, v = _kernels.block_lift(
                w, basis,
                index.offsets[(k, p + 1)] + s * n_out,
                index.offsets[(k, p)] + s * n_in,
                backend=backend,
            )
            rows.append(r)
            cols.append(c)
            vals.append(v)
    return rows, cols, vals


def _csr(parts, n):
    rows, cols, vals = parts
    if not rows:
        return sp.csr_matrix((n, n))
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return m.tocsr()


def _lam_samples(mesh, algebra, lam_field):
    return [_sample(lam_field, mesh.barycenters(k), algebra.dim) for k in range(3)]


def _truncation_flag(algebra, index, lam_samples) -> bool:
    top = _basis_matrices(algebra, index.max_degree)
    if not np.any(top):
        return False
    return any(bool(np.any(lam_samples[k])) for k in range(3))


@dataclass(frozen=True, eq=False)
class SpencerDifferential:
    """The assembled operator on all of ``V``."""

    index: SpencerSpaceIndex
    matrix: sp.csr_matrix
    truncated: bool

    def total(self, n: int) -> sp.csr_matrix:
        """``D^n: T^n -> T^{n+1}``."""
        src, dst = self.index.degree_slice(n), self.index.degree_slice(n + 1)
        return self.matrix[dst, :][:, src]

    def form_column(self, k: int) -> sp.csr_matrix:
        """``D`` restricted to ``C^k ⊗ Sym^{<=P}`` (form layout), with values in ``V``."""
        return self.matrix[:, self.index.form_layout(k)]


def assemble_spencer_differential(mesh: TriMesh, algebra: LieAlgebra, lam_field, max_degree: int,
                                  *, backend: str | None = None) -> SpencerDifferential:
    index = SpencerSpaceIndex(mesh.counts, algebra.dim, max_degree)
    lam = _lam_samples(mesh, algebra, lam_field)
    d = _d_triplets(mesh, index, backend)
    delta = _delta_triplets(mesh, algebra, index, lam, lambda k: 1.0 if k % 2 == 0 else -1.0, backend)
    parts = tuple(a + b for a, b in zip(d, delta))
    return SpencerDifferential(index, _csr(parts, index.size), _truncation_flag(algebra, index, lam))


def assemble_mirror_difference(mesh: TriMesh, algebra: LieAlgebra, lam_field, max_degree: int,
                               *, backend: str | None = None) -> sp.csr_matrix:
    """``R = -2 (-1)^k 1 ⊗ δ^λ`` built from its closed form (no ``d`` blocks)."""
    index = SpencerSpaceIndex(mesh.counts, algebra.dim, max_degree)
    lam = _lam_samples(mesh, algebra, lam_field)
    parts = _delta_triplets(mesh, algebra, index, lam, lambda k: -2.0 if k % 2 == 0 else 2.0, backend)
    return _csr(parts, index.size)


def max_abs(m) -> float:
    if sp.issparse(m):
        m = m.tocoo()
        return float(np.abs(m.data).max()) if m.nnz else 0.0
    m = np.asarray(m)
    return float(np.abs(m).max()) if m.size else 0.0


def mirror_difference(mesh, algebra, lam_field, max_degree, *, backend=None):
    """Return ``(R, residual)`` with residual ``||(D_{-λ} - D_λ) - R||_max``."""
    d_plus = assemble_spencer_differential(mesh, algebra, lam_field, max_degree, backend=backend)
    d_minus = assemble_spencer_differential(mesh, algebra, lam_field.negated(), max_degree, backend=backend)
    r = assemble_mirror_difference(mesh, algebra, lam_field, max_degree, backend=backend)
    return r, max_abs((d_minus.matrix - d_plus.matrix) - r)


# --- metrics -------------------------------------------------------------------------


METRICS = ("constraint", "curvature", "unweighted")


def weight_field(mesh: TriMesh, scheme: str, lam_field, radius: float | None = None) -> WeightField:
    if scheme == "constraint":
        return constraint_weight(mesh, lam_field)
    if scheme == "curvature":
        if radius is None:
            raise MeshError("curvature weight needs the sphere radius")
        return curvature_weight(mesh, radius)
    if scheme == "unweighted":
        return unit_weight(mesh)
    raise MeshError(f"unknown metric scheme {scheme!r}")


def mass_diagonal(mesh: TriMesh, index: SpencerSpaceIndex, weight: WeightField) -> np.ndarray:
    """Mass diagonal on ``V``, from the per-form-degree mass matrices."""
    stars = hodge_stars(mesh)
    out = np.empty(index.size)
    for k, m in enumerate(mass_matrices(mesh, weight, index.algebra_dim, index.max_degree, stars)):
        out[index.form_layout(k)] = m
    return out


# --- Laplacians ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Laplacian:
    """``Δ^n = (D^n)* D^n + D^{n-1} (D^{n-1})*`` on ``T^n``.

    ``symmetric`` is the similar matrix ``M^{1/2} Δ M^{-1/2}``, which is symmetric
    PSD and shares the spectrum of Δ.
    """

    degree: int
    laplacian: sp.csr_matrix
    symmetric: sp.csr_matrix
    mass: np.ndarray


def _scaled_blocks(diff: SpencerDifferential, mass: np.ndarray, n: int):
    idx = diff.index
    m_n = mass[idx.degree_slice(n)]
    up = diff.total(n)
    m_up = mass[idx.degree_slice(n + 1)]
    b_up = sp.diags(np.sqrt(m_up)) @ up @ sp.diags(1.0 / np.sqrt(m_n))
    if n > 0:
        down = diff.total(n - 1)
        m_dn = mass[idx.degree_slice(n - 1)]
        b_dn = sp.diags(np.sqrt(m_n)) @ down @ sp.diags(1.0 / np.sqrt(m_dn))
    else:
        b_dn = sp.csr_matrix((len(m_n), 0))
    return b_up.tocsr(), b_dn.tocsr()


def adjoint(op, mass_src: np.ndarray, mass_dst: np.ndarray) -> sp.csr_matrix:
    """``(op)* = M_src^{-1} op^T M_dst`` for diagonal masses."""
    if np.any(mass_src <= 0) or np.any(mass_dst <= 0):
        raise AssemblyError("singular or indefinite mass matrix")
    return (sp.diags(1.0 / mass_src) @ op.T @ sp.diags(mass_dst)).tocsr()


def hodge_laplacian(diff: SpencerDifferential, mass: np.ndarray, n: int) -> Laplacian:
    mass = np.asarray(mass, dtype=float)
    if np.any(mass <= 0):
        raise AssemblyError("singular or indefinite mass matrix")
    idx = diff.index
    m_n = mass[idx.degree_slice(n)]
    b_up, b_dn = _scaled_blocks(diff, mass, n)
    sym = (b_up.T @ b_up + b_dn @ b_dn.T).tocsr()
    sym = ((sym + sym.T) * 0.5).tocsr()
    lap = (sp.diags(1.0 / np.sqrt(m_n)) @ sym @ sp.diags(np.sqrt(m_n))).tocsr()
    return Laplacian(n, lap, sym, m_n)


def laplacian_from_adjoints(diff: SpencerDifferential, mass: np.ndarray, n: int) -> sp.csr_matrix:
    """Direct ``(D^n)* D^n + D^{n-1} (D^{n-1})*``; slower reference for :func:`hodge_laplacian`."""
    idx = diff.index
    m_n = mass[idx.degree_slice(n)]
    up = diff.total(n)
    out = adjoint(up, m_n, mass[idx.degree_slice(n + 1)]) @ up
    if n > 0:
        down = diff.total(n - 1)
        out = out + down @ adjoint(down, mass[idx.degree_slice(n - 1)], m_n)
    return out.tocsr()


# --- harmonic dimensions ------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicCount:
    degree: int
    dim: int
    laplacian: dict
    stacked_svd: dict | None
    rank_formula: int | None
    flags: tuple

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "h": self.dim,
            "laplacian": self.laplacian,
            "stacked_svd": self.stacked_svd,
            "rank_formula": self.rank_formula,
            "flags": list(self.flags),
        }


def harmonic_dimension(diff: SpencerDifferential, mass: np.ndarray, n: int,
                       policy: GapPolicy = GapPolicy(), *, complex_defect: float = 0.0) -> HarmonicCount:
    """Gap-certified ``dim ker Δ^n`` with SVD cross-checks up to ``policy.svd_limit`` columns.

    Cross-check (a): ``dim ker [B^n; (B^{n-1})^T]`` from one SVD; must match.
    Cross-check (b): ``dim ker D^n - rank D^{n-1}``; matches only when ``D∘D = 0``,
    so a mismatch is flagged together with the measured defect.
    """
    lap = hodge_laplacian(diff, mass, n)
    primary = kernel_dimension(lap.symmetric, policy)
    b_up, b_dn = _scaled_blocks(diff, mass, n)
    flags = []
    stacked, rank_formula = None, None
    cols = lap.symmetric.shape[0]
    if cols <= policy.svd_limit and b_up.shape[0] + b_dn.shape[1] <= 2 * policy.dense_limit:
        try:
            st = singular_kernel_dimension(sp.vstack([b_up, b_dn.T]), policy)
            stacked = st.to_json()
            if st.dim != primary.dim:
                flags.append("stacked_svd_mismatch")
            ker_up = singular_kernel_dimension(b_up, policy).dim
            rank_dn = b_dn.shape[1] - singular_kernel_dimension(b_dn, policy).dim if b_dn.shape[1] else 0
            rank_formula = ker_up - rank_dn
            if rank_formula != primary.dim:
                flags.append("rank_formula_mismatch" + ("" if complex_defect > 0 else "_exact_complex"))
        except GapAmbiguityError:
            flags.append("svd_gap_ambiguous")
    else:
        flags.append("svd_skipped_size")
    return HarmonicCount(n, primary.dim, primary.to_json(), stacked, rank_formula, tuple(flags))


def spectrum_head(diff: SpencerDifferential, mass: np.ndarray, n: int, m: int,
                  policy: GapPolicy = GapPolicy()) -> np.ndarray:
    lap = hodge_laplacian(diff, mass, n)
    if lap.symmetric.shape[0] == 0:
        return np.zeros(0)
    ev, _ = smallest_eigenvalues(lap.symmetric, m, policy)
    return np.maximum(ev, 0.0)


def form_degree_hodge_numbers(diff: SpencerDifferential, mass: np.ndarray,
                              policy: GapPolicy = GapPolicy()) -> list[int] | None:
    """``h`` per form degree, defined when ``D`` has no ``δ`` blocks (bigraded case).

    Each fiber coordinate then carries its own scalar complex; coordinates whose
    scalar complexes coincide up to a constant mass factor are solved once.
    """
    idx = diff.index
    deg = idx.sym_degrees()
    coo = diff.matrix.tocoo()
    if np.any(deg[coo.row] != deg[coo.col]):
        return None
    scalar = SpencerSpaceIndex(idx.counts, 1, 0)
    out = [0, 0, 0]
    seen: dict = {}
    for p in range(idx.max_degree + 1):
        n_p = sym_dim(idx.algebra_dim, p)
        for j in range(n_p):
            sel = np.concatenate(
                [idx.offsets[(k, p)] + np.arange(idx.counts[k]) * n_p + j for k in range(3)]
            )
            sub = diff.matrix[sel, :][:, sel].tocsr()
            m = mass[sel]
            key = (sub.data.tobytes(), sub.indices.tobytes(), sub.indptr.tobytes(), (m / m[0]).tobytes())
            if key not in seen:
                d = SpencerDifferential(scalar, sub, False)
                seen[key] = [kernel_dimension(hodge_laplacian(d, m, k).symmetric, policy).dim
                             for k in range(3)]
            out = [a + b for a, b in zip(out, seen[key])]
    return out
