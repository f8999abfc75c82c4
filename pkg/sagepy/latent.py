"""
# latent.py

Core data model for latent codes: categories, class embeddings and the
category-relevant dictionary.

Latent codes, deltas and class embeddings are all L x D float64 arrays
(one D-dim vector per generator layer).

    lib = CategoryLibrary(6, 32, {'cat': codes}, {'cat': 'seen'})
    e = class_embedding(lib.codes('cat'))
    dw = irrelevant_delta(lib.codes('cat')[0], e)
"""
import numpy as np

from .errors import InvalidInputError
from .utils import as_array, check_shape, frozen

SEEN = 'seen'
UNSEEN = 'unseen'
ROLES = (SEEN, UNSEEN)


class CategoryLibrary(object):
    """ Latent codes grouped by category, each category flagged seen or unseen.

    Args:
        layers (int): layer count L
        dims (int): dims per layer D
        codes (dict): category id -> array (N, L, D) or list of (L, D) codes
        roles (dict): category id -> 'seen' | 'unseen'
        metadata (dict): optional provenance information
    """

    def __init__(self, layers, dims, codes, roles, metadata=None):
        self.layers = int(layers)
        self.dims = int(dims)
        if self.layers < 1 or self.dims < 1:
            raise InvalidInputError("Library dimensions must be positive")
        if set(codes.keys()) != set(roles.keys()):
            raise InvalidInputError("Every category needs both codes and a role")

        self._codes = {}
        self._roles = {}
        for cat_id in codes:
            if not isinstance(cat_id, str) or not cat_id:
                raise InvalidInputError("Category ids must be non-empty strings")
            role = roles[cat_id]
            if role not in ROLES:
                raise InvalidInputError("Unknown role %r for category %s" % (role, cat_id))
            arr = as_array(codes[cat_id], name='codes of %s' % cat_id)
            if arr.ndim == 2:
                arr = arr[np.newaxis]
            if arr.ndim != 3 or arr.shape[0] < 1:
                raise InvalidInputError("Category %s needs at least one code" % cat_id)
            check_shape(arr, (arr.shape[0], self.layers, self.dims), name='codes of %s' % cat_id)
            self._codes[cat_id] = frozen(arr)
            self._roles[cat_id] = role

        self.metadata = dict(metadata or {})

    def __repr__(self):
        return "CategoryLibrary: %i seen, %i unseen, L=%i D=%i" % (
            len(self.seen_ids()), len(self.unseen_ids()), self.layers, self.dims)

    def __contains__(self, cat_id):
        return cat_id in self._codes

    def __len__(self):
        return len(self._codes)

    @property
    def shape(self):
        return (self.layers, self.dims)

    def ids(self):
        """ All category ids, lexicographic """
        return sorted(self._codes)

    def seen_ids(self):
        return sorted(c for c, r in self._roles.items() if r == SEEN)

    def unseen_ids(self):
        return sorted(c for c, r in self._roles.items() if r == UNSEEN)

    def role(self, cat_id):
        self._require(cat_id)
        return self._roles[cat_id]

    def codes(self, cat_id):
        """ Read-only (N, L, D) array of a category's codes """
        self._require(cat_id)
        return self._codes[cat_id]

    def count(self, cat_id):
        return self.codes(cat_id).shape[0]

    def subset(self, cat_ids=None, role=None, max_codes=None, start=0):
        """ New library restricted to categories, a role and/or a code window.

        Args:
            cat_ids (list): categories to keep (default all)
            role (str): keep only categories with this role
            max_codes (int): keep at most this many codes per category
            start (int): index of the first code kept
        """
        cat_ids = self.ids() if cat_ids is None else list(cat_ids)
        codes, roles = {}, {}
        for cat_id in cat_ids:
            self._require(cat_id)
            if role is not None and self._roles[cat_id] != role:
                continue
            stop = None if max_codes is None else start + max_codes
            chosen = self._codes[cat_id][start:stop]
            if chosen.shape[0] == 0:
                raise InvalidInputError("No codes left for %s in window [%i:%s]" % (cat_id, start, stop))
            codes[cat_id] = chosen
            roles[cat_id] = self._roles[cat_id]
        return CategoryLibrary(self.layers, self.dims, codes, roles, self.metadata)

    def with_codes(self, codes, roles, metadata=None):
        """ New library with the same dimensions and different content """
        return CategoryLibrary(self.layers, self.dims, codes, roles,
                               self.metadata if metadata is None else metadata)

    def merge(self, other):
        """ Union of two libraries; codes of shared categories are concatenated """
        if other.shape != self.shape:
            raise InvalidInputError("Cannot merge libraries of shape %s and %s" % (self.shape, other.shape))
        codes = {c: self._codes[c] for c in self._codes}
        roles = dict(self._roles)
        for cat_id in other.ids():
            if cat_id in codes:
                if roles[cat_id] != other.role(cat_id):
                    raise InvalidInputError("Role conflict for %s" % cat_id)
                codes[cat_id] = np.concatenate([codes[cat_id], other.codes(cat_id)])
            else:
                codes[cat_id] = other.codes(cat_id)
                roles[cat_id] = other.role(cat_id)
        return CategoryLibrary(self.layers, self.dims, codes, roles, self.metadata)

    def _require(self, cat_id):
        if cat_id not in self._codes:
            raise InvalidInputError("Unknown category id: %s" % cat_id)


class RelevantDictionary(object):
    """ Category-relevant dictionary B: class embeddings of the seen categories.

    Args:
        ids (list): category ids, one per column, lexicographic
        matrices (np.array): (L, D, S) per-layer stacked embeddings
    """

    def __init__(self, ids, matrices):
        matrices = as_array(matrices, ndim=3, name='relevant dictionary')
        ids = list(ids)
        if len(ids) != matrices.shape[2]:
            raise InvalidInputError("Need one category id per dictionary column")
        if len(ids) < 2:
            raise InvalidInputError("Relevant dictionary needs at least 2 categories")
        if len(set(ids)) != len(ids):
            raise InvalidInputError("Category ids must be unique")
        self.ids = tuple(ids)
        self.matrices = frozen(matrices)

    def __repr__(self):
        return "RelevantDictionary: S=%i L=%i D=%i" % (self.n_categories, self.layers, self.dims)

    @property
    def layers(self):
        return self.matrices.shape[0]

    @property
    def dims(self):
        return self.matrices.shape[1]

    @property
    def n_categories(self):
        return self.matrices.shape[2]

    def embedding(self, cat_id):
        """ Class embedding (L, D) of one seen category """
        try:
            k = self.ids.index(cat_id)
        except ValueError:
            raise InvalidInputError("Category %s is not in the relevant dictionary" % cat_id)
        return self.matrices[:, :, k]


def class_embedding(samples):
    """ Class embedding: element-wise mean of a category's latent codes.

    Args:
        samples (list or np.array): N codes of shape (L, D)

    Returns:
        e (np.array): (L, D)
    """
    if samples is None or len(samples) == 0:
        raise InvalidInputError("class_embedding needs at least one sample")
    arr = as_array(samples, name='samples')
    if arr.ndim != 3:
        raise InvalidInputError("samples must be a list of (L, D) codes of uniform shape")
    return arr.mean(axis=0)


def irrelevant_delta(w, e):
    """ Category-irrelevant direction sample w - e """
    w = as_array(w, ndim=2, name='latent code')
    e = as_array(e, ndim=2, name='class embedding')
    check_shape(w, e.shape, name='latent code')
    return w - e


def build_relevant_dictionary(library):
    """ Stack the class embeddings of every seen category (lexicographic order).

    Args:
        library (CategoryLibrary): library with >= 2 seen categories

    Returns:
        RelevantDictionary
    """
    seen = library.seen_ids()
    if len(seen) < 2:
        raise InvalidInputError("build_relevant_dictionary needs >= 2 seen categories, got %i" % len(seen))
    columns = [class_embedding(library.codes(cat_id)) for cat_id in seen]
    return RelevantDictionary(seen, np.stack(columns, axis=-1))
