import functools

import numpy as np
import pytest

from spencer_mirror.dec import icosphere
from spencer_mirror.lie_core import builtin_algebra


@functools.lru_cache(maxsize=None)
def sphere_mesh(subdivisions: int):
    return icosphere(subdivisions)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture(params=["so3", "su2", "su3", "heisenberg3"])
def algebra(request):
    return builtin_algebra(request.param)


def random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
