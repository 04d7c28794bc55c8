import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import zperm
from qttfem.errors import ShapeError
from qttfem.tt import TTMatrix, tt_random, tt_to_dense
from qttfem.zorder import (
    canonical_index,
    range_vector,
    z_affine,
    z_coords,
    z_decode,
    z_index,
    z_kron,
    z_meshgrid,
    z_permutation,
)


def test_examples():
    assert z_index(3, 5, 3) == 39
    assert z_permutation(1).tolist() == [0, 1, 2, 3]
    assert canonical_index(3, 5, 3) == 43


@given(d=st.integers(1, 10), data=st.data())
def test_decode_inverts_index(d, data):
    i = data.draw(st.integers(0, (1 << d) - 1))
    j = data.draw(st.integers(0, (1 << d) - 1))
    assert z_decode(z_index(i, j, d), d) == (i, j)


def test_out_of_range():
    with pytest.raises(IndexError):
        z_index(4, 0, 2)
    with pytest.raises(IndexError):
        z_decode(16, 2)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_permutation_matches_oracle(d):
    assert np.array_equal(z_permutation(d), zperm(d))
    i, j = z_coords(d)
    assert all(z_index(a, b, d) == z for z, (a, b) in enumerate(zip(i, j)))


def test_range_and_meshgrid():
    d = 3
    assert np.array_equal(tt_to_dense(range_vector(d)), np.arange(8))
    fi, fj = z_meshgrid(d)
    i, j = z_coords(d)
    assert np.array_equal(tt_to_dense(fi), i)
    assert np.array_equal(tt_to_dense(fj), j)
    f = z_affine(d, 0.5, -2.0, 3.0)
    assert f.max_rank <= 2
    assert np.allclose(tt_to_dense(f), 3.0 + 0.5 * i - 2.0 * j)


def test_zkron_vector():
    rng = np.random.default_rng(0)
    d = 3
    k = tt_random([2] * d, [1, 2, 2, 1], rng)
    l = tt_random([2] * d, [1, 3, 2, 1], rng)
    i, j = z_coords(d)
    expected = tt_to_dense(k)[i] * tt_to_dense(l)[j]
    assert np.allclose(tt_to_dense(z_kron(k, l)), expected)


def test_zkron_mismatch():
    rng = np.random.default_rng(1)
    k = tt_random([2] * 2, [1, 2, 1], rng)
    l = tt_random([2] * 3, [1, 2, 2, 1], rng)
    with pytest.raises(ShapeError):
        z_kron(k, l)
    m = TTMatrix([np.ones((1, 2, 2, 1))] * 2)
    with pytest.raises(ShapeError):
        z_kron(k, m)
