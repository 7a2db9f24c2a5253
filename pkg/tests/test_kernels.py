import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopisac.kernels import _pykernels

try:
    from coopisac.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python"),
            pytest.param(_ckernels, id="cython",
                         marks=pytest.mark.skipif(_ckernels is None, reason="extension not built"))]


@pytest.mark.parametrize("kern", BACKENDS)
def test_block_threshold(kern):
    blocks = np.array([[0.5, 0.5], [0.2, 0.7], [1.0, 0.0], [0.0, 0.0]])
    assert kern.block_threshold(blocks, 0.5).tolist() == [1.0, 0.0, 1.0, 0.0]


@pytest.mark.parametrize("kern", BACKENDS)
@given(seed=st.integers(0, 10_000), budget=st.floats(0.01, 10.0))
@settings(max_examples=50, deadline=None)
def test_power_multipliers_tight(kern, seed, budget):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 2.0, (4, 3))
    s = rng.uniform(0.0, 5.0, (4, 3))
    t = kern.power_multipliers(w, s, budget)
    assert np.all(t >= 0)
    power = (w * s / (1 + t[:, None] * w) ** 2).sum(axis=1)
    active = (w * s).sum(axis=1) > budget
    assert np.allclose(power[active], budget, rtol=1e-9)
    assert np.all(t[~active] == 0)


@pytest.mark.parametrize("kern", BACKENDS)
@given(seed=st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_box_halfspace_tight(kern, seed):
    rng = np.random.default_rng(seed)
    v0 = rng.uniform(-0.5, 1.5, (3, 5))
    w = rng.uniform(0.0, 1.0, (3, 5))
    bound = rng.uniform(0.0, 1.5, 3)
    nu = kern.box_halfspace_multipliers(v0, w, bound)
    g = (w * np.clip(v0 - nu[:, None] * w, 0, 1)).sum(axis=1) - bound
    assert np.all(nu >= 0)
    assert np.all(g <= 1e-9)
    assert np.all(np.abs(g[nu > 0]) <= 1e-9)


@pytest.mark.skipif(_ckernels is None, reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(0)
    w, s = rng.uniform(0.1, 2, (50, 6)), rng.uniform(0, 5, (50, 6))
    assert np.allclose(_pykernels.power_multipliers(w, s, 1.0), _ckernels.power_multipliers(w, s, 1.0), rtol=1e-10)
    v0, ww, b = rng.uniform(-1, 2, (50, 6)), rng.uniform(0, 1, (50, 6)), rng.uniform(0, 2, 50)
    assert np.allclose(_pykernels.box_halfspace_multipliers(v0, ww, b),
                       _ckernels.box_halfspace_multipliers(v0, ww, b), rtol=1e-10, atol=1e-14)


def test_env_var_selects_python():
    code = "import coopisac.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, COOPISAC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_name():
    k = importlib.import_module("coopisac.kernels")
    expected = "python" if _ckernels is None or os.environ.get("COOPISAC_PURE_PYTHON") else "cython"
    assert k.BACKEND == expected
