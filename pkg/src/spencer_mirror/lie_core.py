"""Finite-dimensional real Lie algebras given by structure constants.

Every algebra carries an orthonormal basis ``e_0, ..., e_{n-1}``; the structure
constants ``c[a, b, g]`` are defined by ``[e_b, e_g] = sum_a c[a, b, g] e_a``.
Norms on the algebra and on its dual are both Euclidean norms of coefficient
vectors.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri
from scipy.stats import qmc

from spencer_mirror import _kernels


class AlgebraError(ValueError):
    """Invalid algebra name, data or dimension mismatch."""


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A real Lie algebra in an orthonormal basis.

    Attributes:
        name: short label.
        structure_constants: array of shape ``(dim, dim, dim)``.
    """

    name: str
    structure_constants: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.structure_constants, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise AlgebraError(f"structure constants must have shape (n, n, n), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def _check(self, *vectors):
        for v in vectors:
            if np.shape(v) != (self.dim,):
                raise AlgebraError(f"{self.name}: expected vector of length {self.dim}, got shape {np.shape(v)}")

    def ad(self, x) -> np.ndarray:
        """Matrix of ``ad_x = [x, .]``."""
        x = np.asarray(x, dtype=float)
        self._check(x)
        return np.einsum("abg,b->ag", self.structure_constants, x)

    def antisymmetry_residual(self) -> float:
        c = self.structure_constants
        return float(np.abs(c + c.transpose(0, 2, 1)).max())

    def jacobi_residual(self) -> float:
        """Max violation of the Jacobi identity over all basis triples."""
        c = self.structure_constants
        # [e_b, [e_g, e_d]] component a
        nested = np.einsum("mgd,abm->abgd", c, c)
        cyc = nested + nested.transpose(0, 2, 3, 1) + nested.transpose(0, 3, 1, 2)
        return float(np.abs(cyc).max())

    def to_config(self) -> dict:
        c = self.structure_constants
        idx = np.argwhere(c != 0)
        return {
            "name": self.name,
            "dim": self.dim,
            "constants": [[int(a), int(b), int(g), float(c[a, b, g])] for a, b, g in idx],
        }


@dataclass(frozen=True, eq=False)
class DualElement:
    """An element of the dual algebra, in the dual orthonormal basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise AlgebraError("dual element must be a vector")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def pair(self, x) -> float:
        return float(self.coeffs @ np.asarray(x, dtype=float))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __neg__(self) -> DualElement:
        return DualElement(-self.coeffs)


def is_nilpotent(a: LieAlgebra, tol: float = 1e-10) -> bool:
    """Whether the lower central series ``g, [g, g], [g, [g, g]], ...`` reaches zero."""
    c = a.structure_constants
    basis = np.eye(a.dim)
    while basis.shape[0]:
        # [e_b, x] for every basis vector e_b and every spanning vector x
        img = np.einsum("abg,kg->kba", c, basis).reshape(-1, a.dim)
        s = np.linalg.svd(img, compute_uv=False)
        rank = int(np.sum(s > tol))
        if rank == 0:
            return True
        if rank >= basis.shape[0]:
            return False
        basis = np.linalg.svd(img, full_matrices=False)[2][:rank]
    return True


def bracket(a: LieAlgebra, x, y) -> np.ndarray:
    """Lie bracket ``[x, y]`` of coefficient vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a._check(x, y)
    return np.einsum("abg,b,g->a", a.structure_constants, x, y)


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    return eps


def _from_table(n: int, table) -> np.ndarray:
    """Fill antisymmetric constants from ``[e_b, e_g] = v e_a`` entries ``(a, b, g, v)``."""
    c = np.zeros((n, n, n))
    for a, b, g, v in table:
        c[a, b, g] = v
        c[a, g, b] = -v
    return c


def _su3_constants() -> np.ndarray:
    # Gell-Mann basis e_a = -i lambda_a / 2, [e_a, e_b] = f_abc e_c (1-based in the table)
    s = np.sqrt(3.0) / 2.0
    f = {
        (1, 2, 3): 1.0,
        (1, 4, 7): 0.5,
        (1, 5, 6): -0.5,
        (2, 4, 6): 0.5,
        (2, 5, 7): 0.5,
        (3, 4, 5): 0.5,
        (3, 6, 7): -0.5,
        (4, 5, 8): s,
        (6, 7, 8): s,
    }
    c = np.zeros((8, 8, 8))
    for (i, j, k), v in f.items():
        # f is totally antisymmetric: [e_i, e_j] has e_k coefficient f_ijk
        for (p, q, r), sign in (((i, j, k), 1), ((j, k, i), 1), ((k, i, j), 1),
                                ((j, i, k), -1), ((i, k, j), -1), ((k, j, i), -1)):
            c[r - 1, p - 1, q - 1] = sign * v
    return c


_ABELIAN = re.compile(r"^abelian\((\d+)\)$|^abelian(\d+)$")


def builtin_algebra(name: str) -> LieAlgebra:
    """Return a built-in algebra.

    Recognized names: ``so3`` (cross-product basis), ``su2`` (``e_i = -i sigma_i / 2``),
    ``su3`` (``e_a = -i lambda_a / 2`` with Gell-Mann matrices), ``heisenberg3``
    (``[e_1, e_2] = e_3``) and ``abelian(n)``.
    """
    key = name.strip().lower()
    if key in ("so3", "su2"):
        return LieAlgebra(key, _levi_civita())
    if key == "su3":
        return LieAlgebra("su3", _su3_constants())
    if key == "heisenberg3":
        return LieAlgebra("heisenberg3", _from_table(3, [(2, 0, 1, 1.0)]))
    m = _ABELIAN.match(key)
    if m:
        n = int(m.group(1) or m.group(2))
        if n < 1:
            raise AlgebraError("abelian algebra needs n >= 1")
        return LieAlgebra(f"abelian({n})", np.zeros((n, n, n)))
    raise AlgebraError(f"unknown algebra {name!r}")


BUILTIN_NAMES = ("so3", "su2", "su3", "heisenberg3")


def algebra_from_config(cfg: dict, *, tol: float = 1e-12) -> LieAlgebra:
    """Build an algebra from ``{name, dim, constants: [[a, b, g, value], ...]}``.

    Indices are 0-based. Listed entries are taken literally; the loader rejects
    (never repairs) data whose listed entries violate antisymmetry, or which fail
    the Jacobi identity.
    """
    try:
        name = str(cfg["name"])
        n = int(cfg["dim"])
        entries = cfg["constants"]
    except (KeyError, TypeError, ValueError) as exc:
        raise AlgebraError(f"algebra config needs name, dim and constants: {exc}") from None
    extra = set(cfg) - {"name", "dim", "constants"}
    if extra:
        raise AlgebraError(f"unknown algebra config fields: {sorted(extra)}")
    if n < 1:
        raise AlgebraError("dim must be positive")
    c = np.zeros((n, n, n))
    given = {}
    for entry in entries:
        if len(entry) != 4:
            raise AlgebraError(f"constant entry must be (a, b, g, value): {entry!r}")
        a, b, g = (int(t) for t in entry[:3])
        v = float(entry[3])
        if not all(0 <= t < n for t in (a, b, g)):
            raise AlgebraError(f"index out of range in {entry!r}")
        given[(a, b, g)] = v
        c[a, b, g] = v
    for (a, b, g), v in given.items():
        partner = given.get((a, g, b))
        if b == g and v != 0.0:
            raise AlgebraError(f"antisymmetry violated by {[a, b, g, v]}: [e_b, e_b] must vanish")
        if partner is None or abs(partner + v) > tol:
            raise AlgebraError(
                f"antisymmetry violated by {[a, b, g, v]}: partner {[a, g, b]} is {partner}"
            )
    alg = LieAlgebra(name, c)
    if alg.jacobi_residual() > 1e-9:
        raise AlgebraError(f"{name}: Jacobi identity fails (residual {alg.jacobi_residual():.3g})")
    return alg


def load_algebra(path) -> LieAlgebra:
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AlgebraError(f"{path}: {exc}") from None
    return algebra_from_config(cfg)


def algebra_from_spec(spec: str) -> LieAlgebra:
    """Built-in name, or a path to a JSON algebra file."""
    p = Path(spec)
    if p.suffix == ".json" or p.exists():
        return load_algebra(p)
    return builtin_algebra(spec)


# --- the structure constant --------------------------------------------------


def _unit_pairs(n: int, samples: int, seed: int) -> np.ndarray:
    """Low-discrepancy points on the product of two unit spheres, shape ``(samples, 2, n)``.

    Sobol points pushed through the normal quantile function and normalized;
    the first ``k`` points do not depend on ``samples``.
    """
    sampler = qmc.Sobol(d=2 * n, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(samples, 2))))
    u = sampler.random_base2(m)[:samples]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    z = ndtri(u).reshape(samples, 2, n)
    z /= np.linalg.norm(z, axis=2, keepdims=True)
    return z


def _bracket_norm_of(c: np.ndarray, flat: np.ndarray) -> float:
    n = c.shape[0]
    x, y = flat[:n], flat[n:]
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return 0.0
    return float(np.linalg.norm(np.einsum("abg,b,g->a", c, x / nx, y / ny)))


def c_str(a: LieAlgebra, mode: str = "formula", samples: int = 100_000, seed: int = 0) -> float:
    """Structure constant bounding ``||[X, Y]||`` over unit ``X, Y``.

    ``formula`` returns ``max_{b,g} sqrt(sum_a c[a,b,g]^2)``. ``brute_force`` samples
    unit pairs from a scrambled Sobol sequence and polishes every running-record
    sample with Nelder-Mead; since the Sobol prefix and its records are nested,
    the estimate is nondecreasing in ``samples`` for a fixed seed.
    """
    c = a.structure_constants
    if mode == "formula":
        return float(np.sqrt((c**2).sum(axis=0)).max())
    if mode != "brute_force":
        raise AlgebraError(f"unknown c_str mode {mode!r}")
    if samples < 1:
        raise AlgebraError("samples must be >= 1")
    if not np.any(c):
        return 0.0
    pts = _unit_pairs(a.dim, samples, seed)
    scores = _kernels.bracket_norms(c, pts)
    running = np.maximum.accumulate(scores)
    records = np.flatnonzero(np.r_[True, running[1:] > running[:-1]])
    best = float(running[-1])
    for i in records:
        x0 = pts[i].reshape(-1)
        res = minimize(
            lambda z: -_bracket_norm_of(c, z),
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000 * a.dim, "maxfev": 8000 * a.dim},
        )
        best = max(best, -float(res.fun))
    return best
