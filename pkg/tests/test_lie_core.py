import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spencer_mirror.lie_core import (
    AlgebraError,
    BUILTIN_NAMES,
    DualElement,
    algebra_from_config,
    algebra_from_spec,
    bracket,
    builtin_algebra,
    c_str,
    is_nilpotent,
)

finite = st.floats(-10, 10, allow_nan=False)


def gell_mann():
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return lam


def test_so3_is_cross_product(rng):
    a = builtin_algebra("so3")
    for _ in range(20):
        x, y = rng.standard_normal((2, 3))
        assert np.allclose(bracket(a, x, y), np.cross(x, y), atol=1e-14)


def test_su2_matches_pauli_commutators():
    a = builtin_algebra("su2")
    sigma = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    e = [-0.5j * s for s in sigma]
    for b in range(3):
        for g in range(3):
            comm = e[b] @ e[g] - e[g] @ e[b]
            expect = sum(a.structure_constants[k, b, g] * e[k] for k in range(3))
            assert np.allclose(comm, expect, atol=1e-14)


def test_su3_matches_matrix_commutators():
    a = builtin_algebra("su3")
    e = [-0.5j * m for m in gell_mann()]
    for b in range(8):
        for g in range(8):
            comm = e[b] @ e[g] - e[g] @ e[b]
            expect = sum(a.structure_constants[k, b, g] * e[k] for k in range(8))
            assert np.allclose(comm, expect, atol=1e-14)


def test_su3_basis_is_orthonormal_for_trace_form():
    e = [-0.5j * m for m in gell_mann()]
    gram = np.array([[(-2 * np.trace(x @ y)).real for y in e] for x in e])
    assert np.allclose(gram, np.eye(8), atol=1e-14)


def test_heisenberg_bracket():
    a = builtin_algebra("heisenberg3")
    e = np.eye(3)
    assert np.allclose(bracket(a, e[0], e[1]), e[2])
    assert np.allclose(bracket(a, e[0], e[2]), 0)
    assert np.allclose(bracket(a, e[1], e[2]), 0)


@pytest.mark.parametrize("name", BUILTIN_NAMES + ("abelian4",))
def test_builtin_identities(name):
    a = builtin_algebra(name)
    assert a.antisymmetry_residual() == 0.0
    assert a.jacobi_residual() < 1e-14


@pytest.mark.parametrize("name,expected", [("so3", False), ("su3", False), ("heisenberg3", True), ("abelian(2)", True)])
def test_is_nilpotent(name, expected):
    assert is_nilpotent(builtin_algebra(name)) is expected


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3, 8), elements=finite), st.floats(-3, 3))
def test_bracket_bilinear_antisymmetric(vs, s):
    a = builtin_algebra("su3")
    x, y, z = vs
    assert np.allclose(bracket(a, x, y), -bracket(a, y, x), atol=1e-10)
    assert np.allclose(bracket(a, s * x + z, y), s * bracket(a, x, y) + bracket(a, z, y), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (2, 3), elements=finite))
def test_ad_matrix_matches_bracket(vs):
    a = builtin_algebra("heisenberg3")
    x, y = vs
    assert np.allclose(a.ad(x) @ y, bracket(a, x, y), atol=1e-10)


def test_unknown_builtin_rejected():
    with pytest.raises(AlgebraError):
        builtin_algebra("e8")


def test_dimension_mismatch_rejected():
    with pytest.raises(AlgebraError):
        bracket(builtin_algebra("so3"), np.ones(8), np.ones(3))


def test_dual_element_negation():
    lam = DualElement([1.0, -2.0, 3.0])
    assert np.array_equal((-lam).coeffs, -lam.coeffs)
    assert lam.pair([1, 1, 1]) == 2.0


def test_config_roundtrip(tmp_path):
    a = builtin_algebra("su3")
    path = tmp_path / "su3.json"
    path.write_text(json.dumps(a.to_config()))
    b = algebra_from_spec(str(path))
    assert np.array_equal(a.structure_constants, b.structure_constants)


def test_config_rejects_one_sided_entry():
    with pytest.raises(AlgebraError, match="antisymmetry"):
        algebra_from_config({"name": "bad", "dim": 2, "constants": [[0, 0, 1, 1.0]]})


def test_config_rejects_inconsistent_partner():
    cfg = {"name": "bad", "dim": 2, "constants": [[0, 0, 1, 1.0], [0, 1, 0, -0.5]]}
    with pytest.raises(AlgebraError, match="antisymmetry"):
        algebra_from_config(cfg)


def test_config_rejects_jacobi_failure():
    # [e0,e1]=e2, [e1,e2]=e0, [e0,e2]=e0: the cyclic sum on (e0,e1,e2) is e2
    cfg = {"name": "bad", "dim": 3, "constants": [
        [2, 0, 1, 1.0], [2, 1, 0, -1.0],
        [0, 1, 2, 1.0], [0, 2, 1, -1.0],
        [0, 0, 2, 1.0], [0, 2, 0, -1.0],
    ]}
    with pytest.raises(AlgebraError, match="Jacobi"):
        algebra_from_config(cfg)


def test_config_rejects_unknown_field():
    with pytest.raises(AlgebraError):
        algebra_from_config({"name": "x", "dim": 1, "constants": [], "extra": 1})


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_c_str_orthonormal_builtins(name):
    a = builtin_algebra(name)
    assert c_str(a, "formula") == pytest.approx(1.0, abs=1e-15)
    assert c_str(a, "brute_force", samples=4096) == pytest.approx(1.0, abs=1e-9)


def test_c_str_abelian_is_zero():
    assert c_str(builtin_algebra("abelian3"), "brute_force", samples=64) == 0.0


def test_c_str_brute_force_is_monotone_in_samples():
    a = builtin_algebra("su3")
    vals = [c_str(a, "brute_force", samples=n, seed=3) for n in (16, 128, 1024)]
    assert vals[0] <= vals[1] <= vals[2]


def test_c_str_rescaled_algebra():
    base = builtin_algebra("so3")
    a = algebra_from_config({**base.to_config(),
                             "constants": [[i, j, k, 2.5 * v] for i, j, k, v in base.to_config()["constants"]]})
    assert c_str(a, "brute_force", samples=2048) == pytest.approx(2.5, rel=1e-9)


def test_c_str_brute_force_deterministic():
    a = builtin_algebra("su3")
    assert c_str(a, "brute_force", samples=256, seed=1) == c_str(a, "brute_force", samples=256, seed=1)
