from sagepy.latent import (CategoryLibrary, RelevantDictionary, build_relevant_dictionary,
                           class_embedding, irrelevant_delta)
from sagepy.errors import InvalidInputError
from hypothesis import given, settings, strategies as st
import numpy as np
import pytest


def make_library():
    rng = np.random.default_rng(0)
    codes = {'b': rng.standard_normal((3, 2, 4)), 'a': rng.standard_normal((2, 2, 4)),
             'u': rng.standard_normal((1, 2, 4))}
    roles = {'a': 'seen', 'b': 'seen', 'u': 'unseen'}
    return CategoryLibrary(2, 4, codes, roles, {'note': 'test'})


def test_class_embedding():
    e = class_embedding([[[1.0, 2.0]], [[3.0, 4.0]]])
    assert np.allclose(e, [[2.0, 3.0]])

    with pytest.raises(InvalidInputError):
        class_embedding([])
    with pytest.raises(InvalidInputError):
        class_embedding(np.zeros((0, 2, 3)))
    with pytest.raises(InvalidInputError):
        class_embedding(np.zeros((2, 3)))


@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_class_embedding_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((n, 3, 5))
    shuffled = samples[rng.permutation(n)]
    assert np.allclose(class_embedding(samples), class_embedding(shuffled), atol=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_irrelevant_delta_involution(seed):
    rng = np.random.default_rng(seed)
    w, e = rng.standard_normal((2, 3, 5))
    assert np.allclose(e + irrelevant_delta(w, e), w, atol=1e-12)


def test_irrelevant_delta_shapes():
    with pytest.raises(InvalidInputError):
        irrelevant_delta(np.zeros((2, 3)), np.zeros((3, 2)))


def test_library():
    lib = make_library()
    assert lib.ids() == ['a', 'b', 'u']
    assert lib.seen_ids() == ['a', 'b']
    assert lib.unseen_ids() == ['u']
    assert lib.shape == (2, 4)
    assert len(lib) == 3
    assert 'a' in lib and 'zzz' not in lib
    assert lib.count('b') == 3
    assert lib.role('u') == 'unseen'

    with pytest.raises(InvalidInputError):
        lib.codes('zzz')
    with pytest.raises(ValueError):
        lib.codes('a')[0, 0, 0] = 1.0


def test_library_errors():
    with pytest.raises(InvalidInputError):
        CategoryLibrary(2, 4, {'a': np.zeros((1, 2, 4))}, {})
    with pytest.raises(InvalidInputError):
        CategoryLibrary(2, 4, {'a': np.zeros((1, 2, 4))}, {'a': 'other'})
    with pytest.raises(InvalidInputError):
        CategoryLibrary(2, 4, {'a': np.zeros((1, 4, 2))}, {'a': 'seen'})
    with pytest.raises(InvalidInputError):
        CategoryLibrary(2, 4, {'': np.zeros((1, 2, 4))}, {'': 'seen'})
    with pytest.raises(InvalidInputError):
        CategoryLibrary(0, 4, {}, {})


def test_library_subset_merge():
    lib = make_library()
    seen = lib.subset(role='seen')
    assert seen.ids() == ['a', 'b']
    window = lib.subset(['b'], max_codes=2, start=1)
    assert np.array_equal(window.codes('b'), lib.codes('b')[1:3])
    with pytest.raises(InvalidInputError):
        lib.subset(['a'], start=5)

    merged = seen.merge(lib.subset(['b', 'u']))
    assert merged.count('b') == 6
    assert merged.role('u') == 'unseen'

    clash = CategoryLibrary(2, 4, {'a': np.zeros((1, 2, 4))}, {'a': 'unseen'})
    with pytest.raises(InvalidInputError):
        lib.merge(clash)

    other = lib.with_codes({'x': np.ones((2, 2, 4))}, {'x': 'unseen'}, metadata={'kind': 'new'})
    assert other.ids() == ['x'] and other.metadata == {'kind': 'new'}


def test_build_relevant_dictionary():
    lib = make_library()
    b = build_relevant_dictionary(lib)
    assert b.ids == ('a', 'b')
    assert b.matrices.shape == (2, 4, 2)
    assert np.allclose(b.matrices[:, :, 0], class_embedding(lib.codes('a')))
    assert np.allclose(b.embedding('b'), class_embedding(lib.codes('b')))

    with pytest.raises(InvalidInputError):
        b.embedding('u')
    with pytest.raises(InvalidInputError):
        build_relevant_dictionary(lib.subset(['a', 'u']))


def test_relevant_dictionary_errors():
    with pytest.raises(InvalidInputError):
        RelevantDictionary(['a'], np.zeros((1, 2, 1)))
    with pytest.raises(InvalidInputError):
        RelevantDictionary(['a', 'a'], np.zeros((1, 2, 2)))
    with pytest.raises(InvalidInputError):
        RelevantDictionary(['a', 'b', 'c'], np.zeros((1, 2, 2)))


if __name__ == "__main__":
    test_class_embedding()
    test_irrelevant_delta_shapes()
    test_library()
    test_library_errors()
    test_library_subset_merge()
    test_build_relevant_dictionary()
    test_relevant_dictionary_errors()
