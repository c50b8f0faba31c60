import numpy as np
import pytest
from conftest import sphere_mesh

from spencer_mirror.config import RunConfig
from spencer_mirror.report import cohomology
from spencer_mirror.sphere import d0_kernel, r0_bound_check


@pytest.mark.slow
@pytest.mark.parametrize("lam", [{"kind": "radial", "profile": "constant:1"},
                                 {"kind": "vector", "coeffs": [0.3, -0.5, 0.8]}])
def test_hodge_numbers_stable_under_refinement(lam):
    hs = []
    for sub in (1, 2, 3):
        cfg = RunConfig.from_dict({"mesh": {"subdivisions": sub}, "lambda": lam,
                                   "max_sym_degree": 2, "c_str_samples": 256})
        hs.append(cohomology(cfg).per_sign["plus"]["h"])
    assert hs[0] == hs[1] == hs[2]


def test_sphere_kernel_stable_under_refinement():
    assert [d0_kernel(sphere_mesh(s), 0.0).dim for s in (1, 2, 3)] == [3, 3, 3]
    assert [d0_kernel(sphere_mesh(s), 1.0).dim for s in (1, 2, 3)] == [0, 0, 0]


def test_quadrature_converges_monotonically():
    target = 32 * np.pi / 3
    errs = []
    for s in (1, 2, 3):
        m = sphere_mesh(s)
        errs.append(abs(r0_bound_check(m, 1.0, np.ones(m.counts[0]), [0, 0, 1.0]).lhs ** 2 - target))
    assert errs[0] > errs[1] > errs[2]
