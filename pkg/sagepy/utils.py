"""
# utils.py
useful helper functions for common array manipulation tasks
"""
import numpy as np

from .errors import InvalidInputError


def as_array(x, ndim=None, name='input'):
    """ Convert x to a finite float64 numpy array.

    Args:
        x (array-like): data
        ndim (int): required number of dimensions, or None for any
        name (str): name used in error messages

    Returns:
        a (np.array): float64 copy-free view where possible
    """
    try:
        a = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError):
        raise InvalidInputError("%s is not numeric" % name)
    if ndim is not None and a.ndim != ndim:
        raise InvalidInputError("%s must have %i dimensions, got %i" % (name, ndim, a.ndim))
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("%s contains non-finite values" % name)
    return a


def check_shape(a, shape, name='input'):
    """ Raise InvalidInputError unless a.shape == shape """
    if tuple(a.shape) != tuple(shape):
        raise InvalidInputError("%s has shape %s, expected %s" % (name, tuple(a.shape), tuple(shape)))


def frozen(a):
    """ Return a read-only float64 copy of a """
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def spawn_rng(seed, *keys):
    """ Derive an independent random generator from a seed and integer keys.

    Used to give every output index its own sub-stream, so results do not
    depend on evaluation order.

    Args:
        seed (int): base seed
        keys (int): sub-stream identifiers, e.g. an output index

    Returns:
        rng (np.random.Generator)
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise InvalidInputError("Seeds must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def top_k_indices(values, k):
    """ Indices of the k largest values, ties broken towards the smaller index.

    Returns the selected indices in increasing order.
    """
    values = np.asarray(values)
    order = np.lexsort((np.arange(values.size), -values))
    return np.sort(order[:k])


def round_to_f32(a):
    """ Round an array to float32 precision while keeping float64 storage """
    return np.asarray(a, dtype=np.float32).astype(np.float64)
