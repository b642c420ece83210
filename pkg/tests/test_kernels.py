import os
import subprocess
import sys

import numpy as np
import pytest

from einmax import _kernels_py, kernels
from einmax.weakfield import ConormalSourceSpec, GridSpec, simulate

compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled extension not built")


def random_fields(shape, ncomp, seed):
    rng = np.random.default_rng(seed)
    return [np.ascontiguousarray(rng.standard_normal((ncomp,) + shape)) for _ in range(3)]


@compiled
@pytest.mark.parametrize("shape", [(5, 6, 7), (12, 12, 12)])
def test_leapfrog_backends_agree(shape):
    cy = kernels.backends()["cython"]
    a, b, f = random_fields(shape, 4, 0)
    want = _kernels_py.leapfrog_step(a, b, f, np.empty_like(a), 0.1, 0.2, 0.05, 0.01)
    got = cy.leapfrog_step(a, b, f, np.empty_like(a), 0.1, 0.2, 0.05, 0.01)
    assert np.allclose(got, want, rtol=1e-14, atol=1e-14)
    assert np.all(got[:, 0] == 0) and np.all(got[:, :, :, -1] == 0)


@compiled
def test_stress_backends_agree():
    cy = kernels.backends()["cython"]
    a, b, c = random_fields((9, 8, 10), 4, 1)
    inv2h = np.array([3.0, 2.5, 4.0])
    want = _kernels_py.em_stress(a, b, c, 5.0, inv2h)
    got = cy.em_stress(a, b, c, 5.0, inv2h)
    assert got.shape == (10, 9, 8, 10)
    assert np.allclose(got, want, rtol=1e-13, atol=1e-12)


@compiled
def test_simulation_backends_agree():
    grid = GridSpec.cube(20, steps=12)
    spec = ConormalSourceSpec()
    ref = simulate(spec, grid, kernel=_kernels_py)
    got = simulate(spec, grid, kernel=kernels.backends()["cython"])
    assert ref.diagnostics["backend"] == "numpy"
    assert got.diagnostics["backend"] == "cython"
    assert np.allclose(got.snapshots["g1"], ref.snapshots["g1"], rtol=1e-12, atol=1e-15)


def test_default_backend_choice():
    expected = "cython" if kernels.compiled_available() and not kernels.forced_pure() else "numpy"
    assert kernels.BACKEND == expected


def test_pure_python_switch():
    env = dict(os.environ, EINMAX_PURE_PYTHON="1")
    code = "from einmax import kernels; print(kernels.BACKEND, kernels.forced_pure())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_leapfrog_allows_aliasing_output_with_previous_step():
    a, b, f = random_fields((6, 6, 6), 1, 2)
    want = _kernels_py.leapfrog_step(a, b, f, np.empty_like(a), 0.2, 0.2, 0.2, 0.04)
    for mod in kernels.backends().values():
        prev = a.copy()
        mod.leapfrog_step(prev, b, f, prev, 0.2, 0.2, 0.2, 0.04)
        assert np.allclose(prev, want, rtol=1e-14, atol=1e-14)
