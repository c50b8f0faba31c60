"""Gap-certified kernel dimensions of symmetric PSD matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class GapAmbiguityError(RuntimeError):
    """No clear gap separates the zero cluster from the rest of the spectrum."""

    def __init__(self, message, spectrum_head):
        super().__init__(message)
        self.spectrum_head = [float(x) for x in spectrum_head]


@dataclass(frozen=True)
class GapPolicy:
    """How a kernel dimension is read off a sorted spectrum.

    The cut sits at the largest ratio ``ev[h] / ev[h-1]`` among positions whose
    lower neighbour is below ``floor * scale``; it must reach ``min_ratio``.
    """

    window: int = 20
    floor: float = 1e-8
    min_ratio: float = 1e3
    dense_limit: int = 2500
    max_window: int = 640
    svd_limit: int = 1500


@dataclass(frozen=True)
class KernelCount:
    dim: int
    gap_ratio: float
    cut: float
    head: tuple
    method: str
    scale: float = 1.0

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "gap_ratio": _finite(self.gap_ratio),
            "cut": self.cut,
            "head": list(self.head),
            "method": self.method,
            "scale": self.scale,
        }


def _finite(x: float):
    return float(x) if np.isfinite(x) else None


def spectral_scale(a) -> float:
    """Gershgorin bound on the largest eigenvalue magnitude."""
    if sp.issparse(a):
        s = float(abs(a).sum(axis=1).max()) if a.shape[0] else 0.0
    else:
        s = float(np.abs(a).sum(axis=1).max()) if a.shape[0] else 0.0
    return s if s > 0 else 1.0


def gap_cut(ev, scale: float, policy: GapPolicy = GapPolicy()) -> tuple[int, float, float]:
    """Return ``(h, ratio, cut)`` for ascending eigenvalues ``ev`` of a PSD matrix.

    ``h == len(ev)`` means every supplied eigenvalue sits below the floor, so the
    caller must supply a longer head.
    """
    ev = np.maximum(np.asarray(ev, dtype=float), 0.0)
    floor = policy.floor * scale
    tiny = np.finfo(float).eps * scale
    best_h, best_r = 0, ev[0] / tiny if len(ev) else np.inf
    if len(ev) and ev[0] <= floor:
        best_r = 0.0
    for h in range(1, len(ev) + 1):
        if ev[h - 1] > floor:
            break
        if h == len(ev):
            return h, np.inf, floor
        r = ev[h] / max(ev[h - 1], tiny)
        if r > best_r:
            best_h, best_r = h, r
    cut = float(np.sqrt(ev[best_h - 1] * ev[best_h])) if 0 < best_h < len(ev) else floor
    return best_h, float(best_r), cut


def _block_smallest(s, m: int, *, seed: int = 0) -> np.ndarray:
    """LOBPCG preconditioned by an exact factorization of ``s + tau I``.

    A block method keeps exactly repeated eigenvalues (large kernels) from being
    missed. Residuals of the wanted pairs are checked after the solve.
    """
    n = s.shape[0]
    scale = spectral_scale(s)
    lu = spla.splu(sp.csc_matrix(s + 1e-6 * scale * sp.identity(n, format="csc")))
    prec = spla.LinearOperator((n, n), matvec=lu.solve, matmat=lu.solve, dtype=float)
    rng = np.random.default_rng(seed)
    extra, iters = 10, 60
    for _ in range(3):
        x = rng.standard_normal((n, min(m + extra, n // 5)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            w, v = spla.lobpcg(s, x, M=prec, largest=False, tol=1e-8 * scale, maxiter=iters)
        order = np.argsort(w)[:m]
        w, v = w[order], v[:, order]
        resid = np.linalg.norm(s @ v - v * w, axis=0)
        if np.all(resid <= 1e-6 * scale):
            return w
        extra, iters = 2 * extra, 2 * iters
    raise GapAmbiguityError("block eigensolver did not converge", np.sort(w)[:20])


def smallest_eigenvalues(s, m: int, policy: GapPolicy = GapPolicy()) -> tuple[np.ndarray, str]:
    """``m`` smallest eigenvalues of a symmetric PSD matrix, ascending."""
    n = s.shape[0]
    m = min(m, n)
    if n <= policy.dense_limit or 5 * (m + 10) >= n:
        dense = s.toarray() if sp.issparse(s) else np.asarray(s)
        return sla.eigvalsh(dense, subset_by_index=[0, m - 1]), "dense"
    return np.sort(_block_smallest(s, m)), "lobpcg"


def kernel_dimension(s, policy: GapPolicy = GapPolicy()) -> KernelCount:
    """Gap-certified ``dim ker s`` for a symmetric PSD matrix."""
    n = s.shape[0]
    if n == 0:
        return KernelCount(0, np.inf, 0.0, (), "empty")
    scale = spectral_scale(s)
    m = min(policy.window, n)
    while True:
        ev, method = smallest_eigenvalues(s, m, policy)
        h, ratio, cut = gap_cut(ev, scale, policy)
        if h < len(ev) or m == n:
            break
        if m >= policy.max_window:
            raise GapAmbiguityError(f"zero cluster exceeds the {m}-eigenvalue window", ev[:20])
        m = min(2 * m, n)
    if h == n:
        ratio = np.inf
    if ratio < policy.min_ratio:
        raise GapAmbiguityError(
            f"largest relative gap {ratio:.3g} is below {policy.min_ratio:.3g}", ev[:20]
        )
    return KernelCount(h, ratio, cut, tuple(float(x) for x in ev[: max(10, h + 1)]), method, scale)


def singular_kernel_dimension(a, policy: GapPolicy = GapPolicy()) -> KernelCount:
    """``dim ker a`` (column null space) from a dense SVD, with the same gap rule on squared values."""
    dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
    rows, cols = dense.shape
    if cols == 0:
        return KernelCount(0, np.inf, 0.0, (), "svd")
    sv = sla.svdvals(dense) if rows else np.zeros(0)
    sq = np.sort(np.r_[sv**2, np.zeros(max(cols - len(sv), 0))])
    scale = float(sq[-1]) if sq[-1] > 0 else 1.0
    h, ratio, cut = gap_cut(sq, scale, policy)
    if h == cols:
        ratio = np.inf
    if ratio < policy.min_ratio:
        raise GapAmbiguityError(f"singular-value gap {ratio:.3g} is below {policy.min_ratio:.3g}", sq[:20])
    return KernelCount(h, ratio, cut, tuple(float(x) for x in sq[: max(10, h + 1)]), "svd", scale)
