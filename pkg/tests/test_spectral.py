import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sphere_mesh
from spencer_mirror.dec import exterior_derivative, hodge_stars
from spencer_mirror.spectral import (
    GapAmbiguityError,
    GapPolicy,
    gap_cut,
    kernel_dimension,
    singular_kernel_dimension,
    smallest_eigenvalues,
    spectral_scale,
)


def scalar_laplacian(mesh):
    d0 = exterior_derivative(mesh, 0)
    s0, s1 = hodge_stars(mesh)[:2]
    # symmetric form M0^{-1/2} d0^T M1 d0 M0^{-1/2}
    b = sp.diags(np.sqrt(s1)) @ d0 @ sp.diags(1 / np.sqrt(s0))
    return (b.T @ b).tocsr()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 15), st.integers(1, 30), st.floats(1e-3, 10))
def test_gap_cut_on_synthetic_spectra(zeros, rest, lowest):
    ev = np.r_[np.full(zeros, 1e-15), lowest + np.arange(rest)]
    h, ratio, _ = gap_cut(np.sort(ev), scale=100.0)
    assert h == zeros
    if zeros:
        assert ratio >= lowest / 1e-13


def test_gap_cut_reports_full_window():
    h, ratio, _ = gap_cut(np.zeros(5), 1.0)
    assert h == 5 and ratio == np.inf


def test_kernel_of_diagonal():
    s = sp.diags(np.r_[np.zeros(4), np.linspace(1, 2, 40)]).tocsr()
    k = kernel_dimension(s)
    assert k.dim == 4 and k.method == "dense"


def test_ambiguous_gap_raises():
    s = sp.diags(np.r_[1e-12, 1e-11, np.logspace(-10, 0, 30)]).tocsr()
    with pytest.raises(GapAmbiguityError) as info:
        kernel_dimension(s)
    assert len(info.value.spectrum_head) > 0


def test_window_grows_past_large_kernel():
    s = sp.diags(np.r_[np.zeros(45), np.ones(100)]).tocsr()
    assert kernel_dimension(s, GapPolicy(window=8)).dim == 45


def test_block_solver_agrees_with_dense():
    lap = scalar_laplacian(sphere_mesh(3))
    ev_dense, m1 = smallest_eigenvalues(lap, 12, GapPolicy())
    ev_block, m2 = smallest_eigenvalues(lap, 12, GapPolicy(dense_limit=100))
    assert (m1, m2) == ("dense", "lobpcg")
    assert np.allclose(ev_block, ev_dense, atol=1e-9 * spectral_scale(lap))


def test_block_solver_keeps_degenerate_kernel():
    # three disjoint copies: kernel dimension 3, exactly degenerate
    lap = scalar_laplacian(sphere_mesh(2))
    s = sp.block_diag([lap, lap, lap], format="csr")
    assert kernel_dimension(s, GapPolicy(dense_limit=100)).dim == 3


def test_singular_kernel_of_incidence():
    d0 = exterior_derivative(sphere_mesh(1), 0)
    assert singular_kernel_dimension(d0).dim == 1
    assert singular_kernel_dimension(d0.T).dim == d0.shape[0] - d0.shape[1] + 1


def test_empty_matrix():
    assert kernel_dimension(sp.csr_matrix((0, 0))).dim == 0
