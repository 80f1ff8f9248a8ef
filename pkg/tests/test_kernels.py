import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wnil import kernels

PY = kernels.backend("python")
try:
    C = kernels.backend("compiled")
except ImportError:  # pragma: no cover - extension not built
    C = None

needs_core = pytest.mark.skipif(C is None, reason="compiled extension not built")


def setup_arrays(rng, ny=9, nx=11, ns=7):
    src = rng.normal(size=(ny, nx))
    pad = 3
    cy = rng.integers(pad, ny - pad, size=20)
    cx = rng.integers(pad, nx - pad, size=20)
    oy = rng.integers(-pad, pad + 1, size=ns)
    ox = rng.integers(-pad, pad + 1, size=ns)
    return src, cy, cx, oy, ox


@needs_core
class TestEquivalence:
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_stencil_sum_bitwise(self, seed):
        args = setup_arrays(np.random.default_rng(seed))
        assert np.array_equal(kernels.stencil_sum(*args, impl=PY), kernels.stencil_sum(*args, impl=C))

    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_stencil_max_bitwise(self, seed):
        args = setup_arrays(np.random.default_rng(seed))
        assert np.array_equal(kernels.stencil_max(*args, impl=PY), kernels.stencil_max(*args, impl=C))

    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_scatter_max_bitwise(self, seed):
        rng = np.random.default_rng(seed)
        src, cy, cx, oy, ox = setup_arrays(rng)
        vals = rng.normal(size=len(cy)).round(1)  # ties exercise the first-wins rule
        ids = np.arange(len(cy), dtype=np.int64)
        out = []
        for impl in (PY, C):
            dst = np.full(src.shape, -np.inf)
            arg = np.full(src.shape, -1, dtype=np.int64)
            kernels.scatter_max(dst, arg, cy, cx, oy, ox, vals, ids, impl=impl)
            out.append((dst, arg))
        assert np.array_equal(out[0][0], out[1][0]) and np.array_equal(out[0][1], out[1][1])

    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_offset_sum_bitwise(self, seed):
        rng = np.random.default_rng(seed)
        src = rng.normal(size=(6, 13))
        oy = rng.integers(-7, 8, size=9)
        ox = rng.integers(-14, 15, size=9)
        w = rng.uniform(0, 1, size=9)
        assert np.array_equal(kernels.offset_sum(src, oy, ox, w, impl=PY),
                              kernels.offset_sum(src, oy, ox, w, impl=C))

    @pytest.mark.parametrize("shape", [(1, 17), (6, 5)])
    def test_toeplitz(self, shape, rng):
        f = rng.normal(size=shape)
        st_ = rng.normal(size=(2 * shape[0] - 1, 2 * shape[1] - 1))
        # direct oracle: out[i] = sum_j f[j] st[i - j + n - 1]
        ny, nx = shape
        ref = np.zeros(shape)
        for i in np.ndindex(shape):
            for j in np.ndindex(shape):
                ref[i] += f[j] * st_[i[0] - j[0] + ny - 1, i[1] - j[1] + nx - 1]
        np.testing.assert_allclose(kernels.toeplitz(f, st_, impl=C), ref, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(kernels.toeplitz(f, st_, impl=PY), ref, rtol=1e-10, atol=1e-12)


def test_backend_names():
    assert kernels.backend("python") is PY
    with pytest.raises(ValueError):
        kernels.backend("fortran")
    assert kernels.BACKEND in ("compiled", "python")


def test_env_forces_fallback():
    env = dict(os.environ, WNIL_BACKEND="python")
    r = subprocess.run([sys.executable, "-c", "from wnil import kernels; print(kernels.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"
