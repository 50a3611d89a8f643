import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy.linalg import hadamard

from hybriddp import kernels

BACKENDS = sorted(kernels.BACKENDS)
u64 = hnp.arrays(np.uint64, st.integers(0, 64), elements=st.integers(0, 2**64 - 1))


def test_backend_selected():
    assert kernels.BACKEND in kernels.BACKENDS


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("log_size", [0, 1, 3, 6])
def test_fwht_matches_dense_hadamard(backend, log_size):
    rng = np.random.default_rng(log_size)
    v = rng.normal(size=1 << log_size)
    got = kernels.BACKENDS[backend].fwht(v.copy())
    assert np.allclose(got, hadamard(1 << log_size) @ v)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        kernels.fwht(np.ones(6))


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_parity_and_backends_agree(data):
    a = data.draw(u64)
    b = data.draw(hnp.arrays(np.uint64, len(a), elements=st.integers(0, 2**64 - 1)))
    expect = np.array([bin(int(x) & int(y)).count("1") % 2 for x, y in zip(a, b)], dtype=np.uint8)
    for impl in kernels.BACKENDS.values():
        assert np.array_equal(np.asarray(impl.parity_and(a, b)).astype(np.uint8), expect)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 300), st.floats(0.5, 0.99), st.integers(0, 2**32))
def test_hadamard_encode_backends_agree(count, keep, seed):
    rng = np.random.default_rng(seed)
    items = rng.integers(0, 64, count, dtype=np.uint64)
    rows = rng.integers(0, 64, count, dtype=np.uint64)
    uniforms = rng.random(count)
    outs = [np.asarray(impl.hadamard_encode(items, rows, uniforms, keep)) for impl in kernels.BACKENDS.values()]
    for out in outs[1:]:
        assert np.array_equal(out, outs[0])
    truth = np.array([bin(int(i) & int(r)).count("1") % 2 for i, r in zip(items, rows)])
    assert np.array_equal(outs[0], np.where(uniforms < keep, truth, 1 - truth))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 200), st.integers(0, 2**32))
def test_signed_row_sums_backends_agree(count, seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 16, count, dtype=np.uint64)
    bits = rng.integers(0, 2, count).astype(np.int8)
    expect = np.zeros(16)
    np.add.at(expect, rows.astype(np.int64), 1 - 2 * bits.astype(np.float64))
    for impl in kernels.BACKENDS.values():
        assert np.allclose(impl.signed_row_sums(rows, bits, 16), expect)


def test_pure_python_switch(monkeypatch):
    import importlib

    monkeypatch.setenv("HYBRIDDP_PURE_PYTHON", "1")
    module = importlib.reload(kernels)
    try:
        assert module.BACKEND == "python"
    finally:
        monkeypatch.delenv("HYBRIDDP_PURE_PYTHON")
        importlib.reload(kernels)
