import numpy as np
import pytest
import scipy.sparse as sp

from conftest import sphere_mesh
from spencer_mirror import _kernels
from spencer_mirror.complex import (
    AssemblyError,
    ConstantLambdaField,
    SpencerSpaceIndex,
    assemble_mirror_difference,
    assemble_spencer_differential,
    form_degree_hodge_numbers,
    harmonic_dimension,
    hodge_laplacian,
    laplacian_from_adjoints,
    mass_diagonal,
    max_abs,
    mirror_difference,
    weight_field,
)
from spencer_mirror.dec import exterior_derivative
from spencer_mirror.lie_core import builtin_algebra
from spencer_mirror.spencer_op import delta_matrix
from spencer_mirror.sphere import RadialLambdaField
from spencer_mirror.symtensor import sym_dim

SO3 = builtin_algebra("so3")


def naive_differential(mesh, algebra, field, P):
    """Loop-by-loop D in the index layout, from d^k and per-simplex delta matrices."""
    idx = SpencerSpaceIndex(mesh.counts, algebra.dim, P)
    out = np.zeros((idx.size, idx.size))
    for k in range(3):
        lam = field.at(mesh.barycenters(k))
        for p in range(P + 1):
            n_p = sym_dim(algebra.dim, p)
            if k < 2:
                d = exterior_derivative(mesh, k).toarray()
                for r, c in zip(*np.nonzero(d)):
                    for j in range(n_p):
                        out[idx.flat(k + 1, r, p, j), idx.flat(k, c, p, j)] += d[r, c]
            if p < P:
                for s in range(mesh.counts[k]):
                    m = delta_matrix(algebra, lam[s], p).matrix * (-1) ** k
                    for r in range(m.shape[0]):
                        for c in range(m.shape[1]):
                            if m[r, c]:
                                out[idx.flat(k, s, p + 1, r), idx.flat(k, s, p, c)] += m[r, c]
    return out


def test_index_roundtrip_and_layout():
    idx = SpencerSpaceIndex((12, 30, 20), 3, 2)
    assert idx.size == 62 * 10
    assert [(k, p) for k, p in idx.blocks][:3] == [(0, 0), (0, 1), (1, 0)]
    for i in (0, 17, 300, idx.size - 1):
        assert idx.flat(*idx.unflat(i)) == i
    assert sum(idx.degree_dim(n) for n in range(idx.top_degree + 1)) == idx.size
    for k in range(3):
        assert sorted(idx.form_layout(k)) == sorted(np.flatnonzero(idx.form_degrees() == k))


@pytest.mark.parametrize("field", [ConstantLambdaField([0.3, -0.5, 0.8]), RadialLambdaField("band", 1.3)])
def test_matches_naive_assembly(field):
    mesh = sphere_mesh(0)
    diff = assemble_spencer_differential(mesh, SO3, field, 2)
    assert np.allclose(diff.matrix.toarray(), naive_differential(mesh, SO3, field, 2), atol=1e-14)


def test_raises_total_degree():
    mesh = sphere_mesh(0)
    diff = assemble_spencer_differential(mesh, SO3, RadialLambdaField(), 2)
    idx = diff.index
    n_of = idx.form_degrees() + idx.sym_degrees()
    coo = diff.matrix.tocoo()
    assert np.all(n_of[coo.row] == n_of[coo.col] + 1)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_backends_agree(backend):
    if backend == "numba" and not _kernels.USE_NUMBA:
        pytest.skip("numba backend disabled")
    mesh = sphere_mesh(1)
    field = RadialLambdaField("band", 0.7)
    ref = assemble_spencer_differential(mesh, SO3, field, 3, backend="numpy").matrix
    got = assemble_spencer_differential(mesh, SO3, field, 3, backend=backend).matrix
    assert (ref != got).nnz == 0


def test_kernel_functions_agree_across_backends(rng):
    if not _kernels.USE_NUMBA:
        pytest.skip("numba backend disabled")
    c = SO3.structure_constants
    pts = rng.standard_normal((50, 2, 3))
    assert np.allclose(_kernels.bracket_norms(c, pts, backend="numpy"), _kernels.bracket_norms(c, pts, backend="numba"))
    rows, cols, vals = np.array([0, 1, 1]), np.array([2, 0, 1]), np.array([1.0, -1.0, 2.0])
    a = _kernels.kron_identity(rows, cols, vals, 3, backend="numpy")
    b = _kernels.kron_identity(rows, cols, vals, 3, backend="numba")
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize("field", [ConstantLambdaField([0.0, 0.0, 1.0]), RadialLambdaField("constant", 1.0),
                                   RadialLambdaField("band", 2.0)])
def test_mirror_difference_exact(field):
    mesh = sphere_mesh(1)
    r, residual = mirror_difference(mesh, SO3, field, 3)
    assert residual == 0.0
    assert max_abs(r) > 0


def test_difference_has_no_derivative_blocks():
    mesh = sphere_mesh(1)
    r = assemble_mirror_difference(mesh, SO3, RadialLambdaField(), 2)
    idx = SpencerSpaceIndex(mesh.counts, 3, 2)
    coo = r.tocoo()
    assert np.all(idx.form_degrees()[coo.row] == idx.form_degrees()[coo.col])


def test_grading_involution_conjugates(rng):
    mesh = sphere_mesh(1)
    field = ConstantLambdaField(rng.standard_normal(3))
    dp = assemble_spencer_differential(mesh, SO3, field, 3)
    dm = assemble_spencer_differential(mesh, SO3, field.negated(), 3)
    j = sp.diags(dp.index.grading_involution())
    assert max_abs(j @ dp.matrix @ j - dm.matrix) == 0.0


def test_laplacian_forms_agree():
    mesh = sphere_mesh(1)
    field = RadialLambdaField("band", 1.0)
    diff = assemble_spencer_differential(mesh, SO3, field, 2)
    mass = mass_diagonal(mesh, diff.index, weight_field(mesh, "constraint", field))
    for n in range(diff.index.top_degree + 1):
        lap = hodge_laplacian(diff, mass, n)
        ref = laplacian_from_adjoints(diff, mass, n)
        # the direct form is not symmetrized, so compare at rounding level
        assert max_abs(lap.laplacian - ref) <= 1e-10 * max(max_abs(ref), 1.0)
        weighted = sp.diags(lap.mass) @ lap.laplacian
        assert max_abs(weighted - weighted.T) <= 1e-12 * max_abs(weighted)


def test_kunneth_at_zero_lambda():
    mesh = sphere_mesh(1)
    field = ConstantLambdaField([0.0, 0.0, 0.0])
    diff = assemble_spencer_differential(mesh, SO3, field, 3)
    assert not diff.truncated
    mass = mass_diagonal(mesh, diff.index, weight_field(mesh, "unweighted", field))
    h = [harmonic_dimension(diff, mass, n).dim for n in range(6)]
    dims = [sym_dim(3, p) for p in range(4)]
    expect = [sum(b * dims[n - k] for k, b in enumerate((1, 0, 1)) if 0 <= n - k <= 3) for n in range(6)]
    assert h == expect == [1, 3, 7, 13, 6, 10]
    assert form_degree_hodge_numbers(diff, mass) == [20, 0, 20]


def test_form_degree_numbers_undefined_when_coupled():
    mesh = sphere_mesh(0)
    field = RadialLambdaField()
    diff = assemble_spencer_differential(mesh, SO3, field, 2)
    mass = mass_diagonal(mesh, diff.index, weight_field(mesh, "constraint", field))
    assert form_degree_hodge_numbers(diff, mass) is None


def test_cross_checks_flag_inexact_complex():
    mesh = sphere_mesh(1)
    field = RadialLambdaField()
    diff = assemble_spencer_differential(mesh, SO3, field, 2)
    defect = max_abs(diff.matrix @ diff.matrix)
    assert defect > 0  # d and the pointwise operator do not commute for this field
    mass = mass_diagonal(mesh, diff.index, weight_field(mesh, "constraint", field))
    for n in range(diff.index.top_degree + 1):
        hc = harmonic_dimension(diff, mass, n, complex_defect=defect)
        assert "stacked_svd_mismatch" not in hc.flags
        assert hc.stacked_svd["dim"] == hc.dim
        assert "rank_formula_mismatch_exact_complex" not in hc.flags


def test_heisenberg_complex_is_exact():
    mesh = sphere_mesh(1)
    a = builtin_algebra("heisenberg3")
    diff = assemble_spencer_differential(mesh, a, ConstantLambdaField([0.2, 0.4, 1.0]), 2)
    assert max_abs(diff.matrix @ diff.matrix) == 0.0


def test_truncation_flag():
    mesh = sphere_mesh(0)
    assert assemble_spencer_differential(mesh, SO3, RadialLambdaField(), 2).truncated
    assert not assemble_spencer_differential(mesh, builtin_algebra("heisenberg3"),
                                             ConstantLambdaField([1.0, 0, 0]), 2).truncated


def test_field_shape_is_checked():
    with pytest.raises(AssemblyError):
        assemble_spencer_differential(sphere_mesh(0), SO3, ConstantLambdaField([1.0, 2.0]), 2)


def test_non_finite_field_rejected():
    with pytest.raises(AssemblyError):
        assemble_spencer_differential(sphere_mesh(0), SO3, ConstantLambdaField([np.nan, 0, 0]), 1)


def test_mass_is_even_in_lambda():
    mesh = sphere_mesh(1)
    field = RadialLambdaField("band", 1.5)
    idx = SpencerSpaceIndex(mesh.counts, 3, 2)
    for scheme in ("constraint", "curvature", "unweighted"):
        a = mass_diagonal(mesh, idx, weight_field(mesh, scheme, field, 1.0))
        b = mass_diagonal(mesh, idx, weight_field(mesh, scheme, field.negated(), 1.0))
        assert np.array_equal(a, b)
