"""The so(3) example on a round sphere: radial dual field ``λ(q) = λ0(q) ν(q)``.

On this example the form-degree-0 fiber is ``Sym^1 = R^3`` and the operator on a
generator is the covector ``w -> <λ, [v, w]> = λ0 <ν × v, w>``. ``D^0`` maps
``C^0 ⊗ R^3`` into ``(C^1 ⊗ R^3) ⊕ (C^0 ⊗ R^3*)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from spencer_mirror.complex import max_abs
from spencer_mirror.dec import MeshError, TriMesh, exterior_derivative, hodge_stars
from spencer_mirror.lie_core import builtin_algebra
from spencer_mirror.spectral import GapAmbiguityError, GapPolicy, gap_cut
from spencer_mirror.spencer_op import delta_matrix
from spencer_mirror.symtensor import sym_dim


def _unit_normals(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points / np.linalg.norm(points, axis=1, keepdims=True)


# --- the radial field ----------------------------------------------------------------


def _shape_constant(nu):
    return np.ones(len(nu))


def _shape_band(nu):
    # cos(theta) with theta the polar angle
    return nu[:, 2].copy()


PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "constant": _shape_constant,
    "band": _shape_band,
}

_PROFILE_RE = re.compile(r"^\s*([a-z_]+)\s*(?::\s*([-+0-9.eE]+))?\s*$")


@dataclass(frozen=True)
class RadialLambdaField:
    """``λ0(q) = amplitude * shape(ν(q))`` times ``ν(q) = q / |q|``.

    Profiles: ``constant`` (shape 1) and ``band`` (shape ``cos θ``).
    """

    profile: str = "constant"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise MeshError(f"unknown lambda profile {self.profile!r}; known: {sorted(PROFILES)}")
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @classmethod
    def parse(cls, text: str) -> RadialLambdaField:
        """Parse ``"constant:2"``, ``"band:0.5"`` or a bare profile name."""
        m = _PROFILE_RE.match(text)
        if not m:
            raise MeshError(f"cannot parse lambda profile {text!r}")
        return cls(m.group(1), float(m.group(2)) if m.group(2) else 1.0)

    @property
    def dim(self) -> int:
        return 3

    def lambda0(self, points) -> np.ndarray:
        nu = _unit_normals(points)
        return self.amplitude * PROFILES[self.profile](nu)

    def at(self, points) -> np.ndarray:
        nu = _unit_normals(points)
        return (self.amplitude * PROFILES[self.profile](nu))[:, None] * nu

    def negated(self) -> RadialLambdaField:
        return RadialLambdaField(self.profile, -self.amplitude)

    def describe(self) -> dict:
        return {"kind": "radial", "profile": self.profile, "amplitude": self.amplitude}


# --- pointwise operator ----------------------------------------------------------------


def cross_delta(lambda0: float, nu, v) -> np.ndarray:
    """The covector ``λ0 (ν × v)``."""
    nu = np.asarray(nu, dtype=float)
    v = np.asarray(v, dtype=float)
    if nu.shape != (3,) or v.shape != (3,):
        raise MeshError("nu and v must be 3-vectors")
    if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
        raise MeshError("nu must be a unit vector")
    return float(lambda0) * np.cross(nu, v)


def _cross_matrices(nu) -> np.ndarray:
    """``[ν]_×`` per row of ``nu``, so that ``[ν]_× v = ν × v``."""
    z = np.zeros(len(nu))
    x, y, w = nu[:, 0], nu[:, 1], nu[:, 2]
    return np.stack(
        [np.stack([z, -w, y], axis=1), np.stack([w, z, -x], axis=1), np.stack([-y, x, z], axis=1)],
        axis=1,
    )


def _vertex_lambda0(mesh: TriMesh, lambda0) -> np.ndarray:
    if isinstance(lambda0, RadialLambdaField):
        return lambda0.lambda0(mesh.vertices)
    lam = np.asarray(lambda0, dtype=float)
    if lam.ndim == 0:
        return np.full(mesh.counts[0], float(lam))
    if lam.shape != (mesh.counts[0],):
        raise MeshError("lambda0 must be a scalar, a per-vertex array, or a radial field")
    return lam


def _lift_block(mesh, lam0, factor=1.0) -> sp.csr_matrix:
    nu = _unit_normals(mesh.vertices)
    blocks = (factor * lam0)[:, None, None] * _cross_matrices(nu)
    return sp.block_diag(list(blocks), format="csr")


def assemble_sphere_D0(mesh: TriMesh, lambda0) -> sp.csr_matrix:
    """``[d^0 ⊗ I_3 ; blockdiag(λ0_i [ν_i]_×)]``, shape ``(3E + 3V, 3V)``."""
    lam0 = _vertex_lambda0(mesh, lambda0)
    d0 = sp.kron(exterior_derivative(mesh, 0), sp.identity(3), format="csr")
    return sp.vstack([d0, _lift_block(mesh, lam0)], format="csr")


def assemble_sphere_R0(mesh: TriMesh, lambda0) -> sp.csr_matrix:
    """``R^0 = -2 λ0 <ν × v, ·>`` in the same layout as :func:`assemble_sphere_D0`."""
    lam0 = _vertex_lambda0(mesh, lambda0)
    zero = sp.csr_matrix((3 * mesh.counts[1], 3 * mesh.counts[0]))
    return sp.vstack([zero, _lift_block(mesh, lam0, -2.0)], format="csr")


def _negate(lambda0):
    if isinstance(lambda0, RadialLambdaField):
        return lambda0.negated()
    return -np.asarray(lambda0, dtype=float)


def mirror_residual_D0(mesh: TriMesh, lambda0) -> float:
    d_plus = assemble_sphere_D0(mesh, lambda0)
    d_minus = assemble_sphere_D0(mesh, _negate(lambda0))
    return max_abs((d_minus - d_plus) - assemble_sphere_R0(mesh, lambda0))


# --- kernel of D^0 ---------------------------------------------------------------------


@dataclass(frozen=True)
class SingularKernel:
    dim: int
    sigma_gap_ratio: float
    smallest: tuple

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "sigma_gap_ratio": float(self.sigma_gap_ratio) if np.isfinite(self.sigma_gap_ratio) else None,
            "smallest_singular_values": list(self.smallest),
        }


def singular_kernel(matrix, policy: GapPolicy = GapPolicy()) -> SingularKernel:
    """Kernel dimension from singular values, with the gap rule applied to ``σ²``."""
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
    sv = np.sort(sla.svdvals(dense))
    if dense.shape[0] < dense.shape[1]:
        sv = np.r_[np.zeros(dense.shape[1] - dense.shape[0]), sv]
    sq = sv**2
    scale = float(sq[-1]) if sq[-1] > 0 else 1.0
    h, ratio, _ = gap_cut(sq, scale, policy)
    if h == len(sq):
        ratio = np.inf
    if ratio < policy.min_ratio:
        raise GapAmbiguityError(f"singular-value gap {ratio:.3g} too small", sv[:20])
    return SingularKernel(h, float(np.sqrt(ratio)), tuple(float(x) for x in sv[: max(6, h + 2)]))


def d0_kernel(mesh: TriMesh, lambda0, policy: GapPolicy = GapPolicy()) -> SingularKernel:
    return singular_kernel(assemble_sphere_D0(mesh, lambda0), policy)


def smallest_nonzero_singular_value(mesh: TriMesh, lambda0, policy: GapPolicy = GapPolicy()) -> float:
    k = d0_kernel(mesh, lambda0, policy)
    return k.smallest[k.dim]


# --- the R^0 bound ----------------------------------------------------------------------


@dataclass(frozen=True)
class R0Bound:
    lhs: float
    rhs: float
    passed: bool

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


def r0_bound_check(mesh: TriMesh, lambda0: float, f, v, *, rtol: float = 1e-12) -> R0Bound:
    """Discrete ``||R^0(f ⊗ v)||_{L²} <= 2 |λ0| ||f||_{L²} ||v||`` with vertex dual areas."""
    f = np.asarray(f, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = mesh.counts[0]
    if f.shape != (nv,) or v.shape != (3,):
        raise MeshError("f must be a vertex function and v a 3-vector")
    area = hodge_stars(mesh)[0]
    out = assemble_sphere_R0(mesh, lambda0) @ np.kron(f, v)
    pointwise = out[3 * mesh.counts[1]:].reshape(nv, 3)
    lhs = float(np.sqrt(np.sum(area * np.sum(pointwise**2, axis=1))))
    rhs = 2.0 * abs(float(lambda0)) * float(np.sqrt(np.sum(area * f**2))) * float(np.linalg.norm(v))
    return R0Bound(lhs, rhs, lhs <= rhs * (1.0 + rtol))


# --- the first-order block --------------------------------------------------------------


def assemble_sphere_D1(mesh: TriMesh, field: RadialLambdaField) -> sp.csr_matrix:
    """``D^1(α ⊗ s) = dα ⊗ s - α ⊗ δ(s)`` on ``C^1 ⊗ Sym^2``.

    Rows: ``C^2 ⊗ Sym^2`` then ``C^1 ⊗ Sym^3``; λ sits at edge midpoints.
    """
    a = builtin_algebra("so3")
    n2, n3 = sym_dim(3, 2), sym_dim(3, 3)
    d1 = sp.kron(exterior_derivative(mesh, 1), sp.identity(n2), format="csr")
    lam = field.at(mesh.barycenters(1))
    blocks = [-delta_matrix(a, row, 2).matrix for row in lam]
    lift = sp.block_diag(blocks, format="csr") if blocks else sp.csr_matrix((0, 0))
    assert lift.shape == (mesh.counts[1] * n3, mesh.counts[1] * n2)
    return sp.vstack([d1, lift], format="csr")


def higher_order_display_value(lambda0: float, nu, s, u, v, w) -> float:
    """The six-term cyclic expression for ``δ(s)(u, v, w)`` as displayed for degree 2.

    Each term is ``<ν × x, y> s(z)``; since ``<ν × x, y>`` is antisymmetric in
    ``(x, y)``, the terms cancel in pairs and the value is always zero.
    """
    nu, s = np.asarray(nu, dtype=float), np.asarray(s, dtype=float)
    u, v, w = (np.asarray(t, dtype=float) for t in (u, v, w))

    def pair(x, y):
        return float(np.cross(nu, x) @ y)

    total = 0.0
    for x, y, z in ((u, v, w), (v, w, u), (w, u, v)):
        total += pair(x, y) * float(s @ z) + pair(x, z) * float(s @ y)
    return float(lambda0) * total
