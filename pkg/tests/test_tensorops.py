import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coopisac.tensorops import IndexKind, collapse, expand, make_index, unvec, vec, vec_hadamard

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def complex_pair(draw):
    r = draw(st.integers(1, 8))
    c = draw(st.integers(1, 6))
    parts = [draw(arrays(float, (r, c), elements=finite)) for _ in range(4)]
    return parts[0] + 1j * parts[1], parts[2] + 1j * parts[3]


def test_vec_stacks_columns():
    X = np.array([[1, 2, 3], [4, 5, 6]])
    assert vec(X).tolist() == [1, 4, 2, 5, 3, 6]
    assert np.array_equal(unvec(vec(X), 2), X)


def test_vec_batch_matches_single():
    X = np.arange(24).reshape(2, 3, 4)
    assert np.array_equal(vec(X), np.stack([vec(X[0]), vec(X[1])]))
    assert np.array_equal(unvec(vec(X), 3), X)


def test_unvec_rejects_bad_length():
    with pytest.raises(ValueError):
        unvec(np.arange(7), 2)


@given(complex_pair())
@settings(max_examples=200, deadline=None)
def test_vec_hadamard_equals_diag_product(pair):
    A, X = pair
    ref = np.diag(vec(A)) @ vec(X)
    out = vec_hadamard(A, X)
    scale = max(np.abs(ref).max(), 1.0)
    assert np.max(np.abs(out - ref)) <= 1e-12 * scale


def test_vec_hadamard_shape_mismatch():
    with pytest.raises(ValueError):
        vec_hadamard(np.ones((2, 2)), np.ones((2, 3)))


def test_index_vectors_small_case():
    # N=2, K=2: precoder vec has 3 blocks of 2
    assert make_index("A", "c", 2, 2).entries.tolist() == [1, 1, 0, 0, 0, 0]
    assert make_index("A", 2, 2, 2).entries.tolist() == [0, 0, 0, 0, 1, 1]
    assert make_index("C", 2, 2, 2).entries.tolist() == [0, 1, 0, 1, 0, 1]
    # N=2, M=3
    assert make_index("B", 3, 2, 3).entries.tolist() == [0, 0, 0, 0, 1, 1]
    assert make_index("D", 1, 2, 3).entries.tolist() == [1, 0, 1, 0, 1, 0]
    assert make_index("E", 2, 2, 3).entries.tolist() == [0, 0, 1, 0, 0, 0]


@given(st.integers(1, 6), st.integers(1, 5))
def test_index_partitions(N, K):
    a = sum(make_index(IndexKind.A, i, N, K).entries for i in range(K + 1))
    c = sum(make_index(IndexKind.C, n, N, K).entries for n in range(1, N + 1))
    b = sum(make_index(IndexKind.B, m, N, K).entries for m in range(1, K + 1))
    assert np.all(a == 1) and np.all(c == 1) and np.all(b == 1)
    e = sum(make_index(IndexKind.E, m, N, K).entries for m in range(1, K + 1))
    assert e.sum() == K and np.all(e <= make_index(IndexKind.D, 1, N, K).entries)


@pytest.mark.parametrize("kind,index", [("A", -1), ("A", 4), ("B", 0), ("C", 5), ("E", 4)])
def test_index_out_of_range(kind, index):
    with pytest.raises(IndexError):
        make_index(kind, index, 4, 3)


def test_index_bad_arguments():
    with pytest.raises(ValueError):
        make_index("B", "c", 4, 3)
    with pytest.raises(ValueError):
        make_index("A", 1, 0, 3)
    with pytest.raises(ValueError):
        make_index("Z", 1, 4, 3)


def test_index_vector_is_array_like():
    iv = make_index("B", 1, 2, 2)
    assert np.asarray(iv).tolist() == [1, 1, 0, 0]


@given(arrays(float, st.integers(1, 6), elements=st.floats(0, 1)), st.integers(1, 5))
def test_expand_collapse_roundtrip(rho, N):
    p = expand(rho, N, "schedule")
    assert p.shape == (N * len(rho),)
    assert np.array_equal(collapse(p, N), rho)


def test_expand_channel_modes():
    v = np.array([1, 2])
    assert expand(v, 3).tolist() == [1, 2, 1, 2, 1, 2]
    assert expand(np.array([[1, 2], [3, 4]]), 2).tolist() == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        expand(v, 0)
    with pytest.raises(ValueError):
        expand(v, 2, "other")


def test_collapse_threshold():
    p = np.array([0.6, 0.6, 0.2, 0.4])
    assert collapse(p, 2, 0.5).tolist() == [1.0, 0.0]
    assert collapse(p, 2, 0.3).tolist() == [1.0, 1.0]
