from sagepy import utils
from sagepy.errors import InvalidInputError
import numpy as np
import pytest


def test_as_array():
    a = utils.as_array([[1, 2], [3, 4]], ndim=2)
    assert a.dtype == np.float64
    assert a.shape == (2, 2)

    with pytest.raises(InvalidInputError):
        utils.as_array([1.0, np.nan])
    with pytest.raises(InvalidInputError):
        utils.as_array([1.0, np.inf])
    with pytest.raises(InvalidInputError):
        utils.as_array([1.0, 2.0], ndim=2)
    with pytest.raises(InvalidInputError):
        utils.as_array(['a', 'b'])


def test_check_shape():
    utils.check_shape(np.zeros((2, 3)), (2, 3))
    with pytest.raises(InvalidInputError):
        utils.check_shape(np.zeros((2, 3)), (3, 2))


def test_frozen():
    a = utils.frozen([1, 2, 3])
    assert a.dtype == np.float64
    with pytest.raises(ValueError):
        a[0] = 5


def test_top_k_indices():
    assert utils.top_k_indices([1, 3, 3, 2], 2).tolist() == [1, 2]
    assert utils.top_k_indices([5, 1, 4, 2], 2).tolist() == [0, 2]
    # Ties go to the smaller index
    assert utils.top_k_indices([0, 0, 0], 2).tolist() == [0, 1]


def test_spawn_rng():
    a = utils.spawn_rng(5, 1).standard_normal(4)
    b = utils.spawn_rng(5, 1).standard_normal(4)
    c = utils.spawn_rng(5, 2).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(InvalidInputError):
        utils.spawn_rng(-1)


def test_round_to_f32():
    r = utils.round_to_f32(np.array([0.1, 1.0 / 3.0]))
    assert r.dtype == np.float64
    assert r[0] == float(np.float32(0.1))
    assert np.array_equal(utils.round_to_f32(r), r)


if __name__ == "__main__":
    test_as_array()
    test_check_shape()
    test_frozen()
    test_top_k_indices()
    test_spawn_rng()
    test_round_to_f32()
