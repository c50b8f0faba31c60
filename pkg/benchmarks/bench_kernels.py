"""Compare the numba and numpy kernel paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on realistic inputs after one warm-up call (which also
triggers compilation on the numba path); outputs are checked for agreement.
"""

import argparse
import time

import numpy as np

from spencer_mirror import _kernels
from spencer_mirror.complex import assemble_spencer_differential
from spencer_mirror.dec import exterior_derivative, icosphere
from spencer_mirror.lie_core import _unit_pairs, builtin_algebra
from spencer_mirror.spencer_op import _basis_matrices
from spencer_mirror.sphere import RadialLambdaField
from spencer_mirror.symtensor import sym_dim


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    su3 = builtin_algebra("su3")
    pts = _unit_pairs(8, 100_000, 0)
    yield "bracket_norms su3 x 1e5", lambda b: _kernels.bracket_norms(su3.structure_constants, pts, backend=b)

    so3 = builtin_algebra("so3")
    mesh = icosphere(4)
    lam = RadialLambdaField("band", 1.0).at(mesh.barycenters(2))
    basis = _basis_matrices(so3, 2)
    ns = len(lam)
    ro = np.arange(ns) * sym_dim(3, 3)
    co = np.arange(ns) * sym_dim(3, 2)
    yield f"block_lift so3 p=2 x {ns} faces", lambda b: _kernels.block_lift(lam, basis, ro, co, backend=b)

    d = exterior_derivative(mesh, 0).tocoo()
    yield f"kron_identity d0 ({d.nnz} nnz) x I_10", lambda b: _kernels.kron_identity(d.row, d.col, d.data, 10, backend=b)

    m3 = icosphere(3)
    field = RadialLambdaField("band", 1.0)
    yield "full assembly icosphere(3) P=3", lambda b: assemble_spencer_differential(m3, so3, field, 3, backend=b).matrix


def agree(x, y):
    if hasattr(x, "tocoo"):
        return (x != y).nnz == 0
    if isinstance(x, tuple):
        return all(np.array_equal(a, b) for a, b in zip(x, y))
    return np.allclose(x, y, rtol=1e-13, atol=0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.USE_NUMBA:
        raise SystemExit("numba path disabled (SPENCER_MIRROR_NUMPY set or numba missing)")
    print(f"{'kernel':42s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}  agree")
    for name, fn in cases():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        ok = agree(fn("numpy"), fn("numba"))
        print(f"{name:42s} {1e3 * t_np:10.2f} {1e3 * t_nb:10.2f} {t_np / t_nb:8.2f}  {ok}")


if __name__ == "__main__":
    main()
