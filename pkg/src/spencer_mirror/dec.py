"""Triangulated closed surfaces and lumped discrete exterior calculus.

Simplices are oriented as follows: edges run from the lower to the higher vertex
index, faces keep the vertex order they were built with (outward normals on
generated spheres). Hodge stars are diagonal with barycentric duals:
``star0 = dual area``, ``star1 = dual edge length / edge length``,
``star2 = 1 / face area``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from spencer_mirror.symtensor import fiber_gram


class MeshError(ValueError):
    """Malformed mesh input or invalid metric data."""


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray = field(init=False, repr=False)
    face_edges: np.ndarray = field(init=False, repr=False)
    face_edge_signs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        f = np.array(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("faces must be an (m, 3) array of triangles")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face references a missing vertex")
        if np.any(f[:, 0] == f[:, 1]) or np.any(f[:, 1] == f[:, 2]) or np.any(f[:, 0] == f[:, 2]):
            raise MeshError("degenerate face")
        half = np.stack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=1)  # (F, 3, 2)
        lo = half.min(axis=2)
        hi = half.max(axis=2)
        keys = lo * len(v) + hi
        uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
        edges = np.stack([uniq // len(v), uniq % len(v)], axis=1)
        signs = np.where(half[:, :, 0] == lo, 1, -1).astype(np.int64)
        for a in (v, f, edges):
            a.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "face_edges", inverse.reshape(-1, 3))
        object.__setattr__(self, "face_edge_signs", signs)

    @property
    def counts(self) -> tuple[int, int, int]:
        return len(self.vertices), len(self.edges), len(self.faces)

    def euler_characteristic(self) -> int:
        nv, ne, nf = self.counts
        return nv - ne + nf

    def check_closed_oriented(self):
        """Every edge borders two faces that induce opposite orientations on it."""
        ne = len(self.edges)
        count = np.bincount(self.face_edges.ravel(), minlength=ne)
        total = np.bincount(self.face_edges.ravel(), weights=self.face_edge_signs.ravel(), minlength=ne)
        if np.any(count != 2):
            raise MeshError(f"{int(np.sum(count != 2))} edges do not border exactly two faces")
        if np.any(total != 0):
            raise MeshError("faces are not consistently oriented")

    def barycenters(self, k: int) -> np.ndarray:
        if k == 0:
            return self.vertices.copy()
        if k == 1:
            return self.vertices[self.edges].mean(axis=1)
        if k == 2:
            return self.vertices[self.faces].mean(axis=1)
        raise MeshError(f"no {k}-simplices on a surface")

    def n_simplices(self, k: int) -> int:
        return self.counts[k]


# --- construction --------------------------------------------------------------


def _icosahedron():
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]],
        dtype=np.int64,
    )
    return v, f


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    """Loop-style midpoint subdivision of the icosahedron, projected to the sphere."""
    if not isinstance(subdivisions, (int, np.integer)) or not 0 <= subdivisions <= 6:
        raise MeshError("subdivisions must be an integer in [0, 6]")
    if not radius > 0:
        raise MeshError("radius must be positive")
    v, f = _icosahedron()
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    verts = [row for row in v]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = np.array(new, dtype=np.int64)
    v = np.array(verts) * radius
    # re-project so every vertex norm is the radius to rounding
    v *= radius / np.linalg.norm(v, axis=1, keepdims=True)
    mesh = TriMesh(v, f)
    _orient_outward(mesh)
    return mesh


def _orient_outward(mesh: TriMesh):
    v, f = mesh.vertices, mesh.faces
    n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    if np.any(np.einsum("ij,ij->i", n, v[f].mean(axis=1)) <= 0):
        raise MeshError("generated face with inward normal")


def read_off(path) -> TriMesh:
    """ASCII OFF reader: header, counts, vertices, then ``3 i j k`` faces."""
    tokens = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = np.array(tokens[pos : pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise MeshError(f"{path}: only triangular faces are supported (got {k}-gon)")
            faces.append([int(t) for t in tokens[pos + 1 : pos + 4]])
            pos += 4
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: truncated or malformed OFF data ({exc})") from None
    return TriMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))


def write_off(mesh: TriMesh, path):
    nv, ne, nf = mesh.counts
    lines = ["OFF", f"{nv} {nf} {ne}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- operators --------------------------------------------------------------------


def exterior_derivative(mesh: TriMesh, k: int) -> sp.csr_matrix:
    """Signed incidence matrix ``d^k`` (integer entries, stored as float)."""
    nv, ne, nf = mesh.counts
    if k == 0:
        rows = np.repeat(np.arange(ne), 2)
        cols = mesh.edges.ravel()
        vals = np.tile([-1.0, 1.0], ne)
        return sp.csr_matrix((vals, (rows, cols)), shape=(ne, nv))
    if k == 1:
        rows = np.repeat(np.arange(nf), 3)
        return sp.csr_matrix(
            (mesh.face_edge_signs.ravel().astype(float), (rows, mesh.face_edges.ravel())),
            shape=(nf, ne),
        )
    raise MeshError("exterior derivative is defined for k in {0, 1}")


def face_areas(mesh: TriMesh) -> np.ndarray:
    v, f = mesh.vertices, mesh.faces
    return 0.5 * np.linalg.norm(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1)


def dual_volumes(mesh: TriMesh) -> list[np.ndarray]:
    """Barycentric dual cell sizes: vertex areas, dual edge lengths, and 1 per face."""
    nv, ne, _ = mesh.counts
    area = face_areas(mesh)
    vert = np.bincount(mesh.faces.ravel(), weights=np.repeat(area / 3.0, 3), minlength=nv)
    mids = mesh.barycenters(1)
    cent = mesh.barycenters(2)
    seg = np.linalg.norm(cent[:, None, :] - mids[mesh.face_edges], axis=2)  # (F, 3)
    edge = np.bincount(mesh.face_edges.ravel(), weights=seg.ravel(), minlength=ne)
    return [vert, edge, np.ones(mesh.counts[2])]


def hodge_stars(mesh: TriMesh) -> list[np.ndarray]:
    dv = dual_volumes(mesh)
    v = mesh.vertices
    elen = np.linalg.norm(v[mesh.edges[:, 1]] - v[mesh.edges[:, 0]], axis=1)
    return [dv[0], dv[1] / elen, 1.0 / face_areas(mesh)]


def _rank_d0(mesh: TriMesh) -> int:
    nv = mesh.counts[0]
    adj = sp.csr_matrix((np.ones(len(mesh.edges)), (mesh.edges[:, 0], mesh.edges[:, 1])), shape=(nv, nv))
    ncomp, _ = connected_components(adj, directed=False)
    return nv - ncomp


def _rank_d1(mesh: TriMesh) -> int:
    # kernel of d1^T: face cochains whose contributions cancel on every edge.
    # On a closed surface these are constants on consistently oriented dual components.
    nf = mesh.counts[2]
    fe = mesh.face_edges.ravel()
    owner = np.repeat(np.arange(nf), 3)
    order = np.argsort(fe, kind="stable")
    fe_sorted, own_sorted = fe[order], owner[order]
    starts = np.flatnonzero(np.r_[True, fe_sorted[1:] != fe_sorted[:-1]])
    sizes = np.diff(np.r_[starts, len(fe_sorted)])
    if np.any(sizes != 2):
        return int(np.linalg.matrix_rank(exterior_derivative(mesh, 1).toarray()))
    a, b = own_sorted[starts], own_sorted[starts + 1]
    adj = sp.csr_matrix((np.ones(len(a)), (a, b)), shape=(nf, nf))
    ncomp, labels = connected_components(adj, directed=False)
    signs = mesh.face_edge_signs.ravel()[order]
    consistent = np.ones(ncomp, dtype=bool)
    bad = signs[starts] + signs[starts + 1] != 0
    consistent[np.unique(labels[a[bad]])] = False
    return nf - int(consistent.sum())


def betti_numbers(mesh: TriMesh) -> tuple[int, int, int]:
    nv, ne, nf = mesh.counts
    r0, r1 = _rank_d0(mesh), _rank_d1(mesh)
    return nv - r0, ne - r1 - r0, nf - r1


# --- weights and metrics ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightField:
    """Positive weights sampled at simplex barycenters, one array per form degree."""

    scheme: str
    values: tuple

    def __post_init__(self):
        vals = tuple(np.asarray(v, dtype=float) for v in self.values)
        for v in vals:
            if np.any(~np.isfinite(v)) or np.any(v <= 0):
                raise MeshError(f"{self.scheme} weight must be positive everywhere")
        object.__setattr__(self, "values", vals)


def constraint_weight(mesh: TriMesh, lam_field) -> WeightField:
    """``w = 1 + ||lam(x)||^2`` at the barycenters of every simplex."""
    vals = []
    for k in range(3):
        lam = np.asarray(lam_field.at(mesh.barycenters(k)), dtype=float)
        vals.append(1.0 + np.sum(lam * lam, axis=1))
    return WeightField("constraint", tuple(vals))


def curvature_weight(mesh: TriMesh, radius: float) -> WeightField:
    """Constant ``1 + K^2`` with Gaussian curvature ``K = 1/R^2``; sphere meshes only."""
    r = np.linalg.norm(mesh.vertices, axis=1)
    if not np.allclose(r, radius, rtol=1e-9, atol=0):
        raise MeshError("curvature weight is only available on sphere meshes of the given radius")
    kappa = 1.0 + 1.0 / radius**4
    return WeightField("curvature", tuple(np.full(mesh.counts[k], kappa) for k in range(3)))


def unit_weight(mesh: TriMesh) -> WeightField:
    return WeightField("unweighted", tuple(np.ones(mesh.counts[k]) for k in range(3)))


def mass_matrices(mesh: TriMesh, weight: WeightField, algebra_dim: int, max_degree: int,
                  stars: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """Diagonals of the mass matrices on ``C^k ⊗ Sym^{<=P}`` (simplex-major, fiber-minor).

    Entry = Hodge star of the simplex × weight at its barycenter × fiber Gram entry.
    """
    stars = hodge_stars(mesh) if stars is None else stars
    gram = fiber_gram(algebra_dim, max_degree)
    out = []
    for k in range(3):
        base = stars[k] * weight.values[k]
        if np.any(base <= 0):
            raise MeshError("nonpositive mass entry")
        out.append(np.outer(base, gram).ravel())
    return out


def metric_equivalence_constants(mass_a, mass_b) -> tuple[float, float]:
    """Best ``c1, c2`` with ``c1 <u,u>_A <= <u,u>_B <= c2 <u,u>_A`` for diagonal SPD masses."""
    a = np.asarray(mass_a.diagonal() if sp.issparse(mass_a) else mass_a, dtype=float)
    b = np.asarray(mass_b.diagonal() if sp.issparse(mass_b) else mass_b, dtype=float)
    a, b = a.reshape(-1), b.reshape(-1)
    if a.shape != b.shape:
        raise MeshError("mass matrices have different sizes")
    if np.any(a <= 0) or np.any(b <= 0):
        raise MeshError("mass matrices must be positive definite")
    ratio = b / a
    return float(ratio.min()), float(ratio.max())
