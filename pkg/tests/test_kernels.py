import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from travelsample import _kernels_py, kernels

try:
    from travelsample import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def grouped(draw):
    g = draw(st.integers(1, 8))
    n = draw(st.integers(0, 60))
    codes = np.array(draw(st.lists(st.integers(0, g - 1), min_size=n, max_size=n)), dtype=np.int64)
    values = np.array(draw(st.lists(finite, min_size=n, max_size=n)), dtype=np.float64)
    return codes, values, g


def test_group_moments_reference():
    counts, means, m2 = _kernels_py.group_moments([0, 0, 2], [1.0, 3.0, 5.0], 3)
    assert counts.tolist() == [2, 0, 1]
    assert means[0] == 2.0 and np.isnan(means[1]) and means[2] == 5.0
    assert m2.tolist() == [2.0, 0.0, 0.0]
    with pytest.raises(IndexError):
        _kernels_py.group_moments([3], [1.0], 3)


def test_tabulate_and_mask_reference():
    mask = _kernels_py.sample_mask(np.array([0, 2]), 4)
    assert mask.tolist() == [1, 0, 1, 0]
    hh = np.array([0, 1, 2, 2], dtype=np.int64)
    cell = np.array([0, 0, 1, 0], dtype=np.int64)
    w = np.ones(4)
    assert _kernels_py.tabulate_sampled(mask, hh, cell, w, 2, 2.0).tolist() == [4.0, 2.0]


@needs_ext
@settings(max_examples=200, deadline=None)
@given(grouped())
def test_group_moments_parity(data):
    codes, values, g = data
    a = _kernels_py.group_moments(codes, values, g)
    b = compiled.group_moments(codes, values, g)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@needs_ext
@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.data())
def test_tabulate_parity(n_units, data):
    n = data.draw(st.integers(0, 80))
    k = data.draw(st.integers(1, 6))
    hh = np.array(data.draw(st.lists(st.integers(0, n_units - 1), min_size=n, max_size=n)), dtype=np.int64)
    cell = np.array(data.draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n)), dtype=np.int64)
    w = np.array(data.draw(st.lists(st.floats(0.1, 100), min_size=n, max_size=n)), dtype=np.float64)
    chosen = np.array(data.draw(st.lists(st.integers(0, n_units - 1), unique=True)), dtype=np.int64)
    ma, mb = _kernels_py.sample_mask(chosen, n_units), compiled.sample_mask(chosen, n_units)
    np.testing.assert_array_equal(ma, mb)
    np.testing.assert_array_equal(
        _kernels_py.tabulate_sampled(ma, hh, cell, w, k, 3.5),
        compiled.tabulate_sampled(mb, hh, cell, w, k, 3.5),
    )


@needs_ext
def test_compiled_backend_is_default():
    if os.environ.get("TRAVELSAMPLE_PURE") != "1":
        assert kernels.BACKEND == "cython"


def test_pure_env_var_forces_numpy():
    env = dict(os.environ, TRAVELSAMPLE_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import travelsample; print(travelsample.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
