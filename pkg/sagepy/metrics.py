"""
# metrics.py

Desk-scale quality metrics on feature vectors:

* frechet: squared Frechet distance between Gaussian fits of two feature sets
* intra_diversity: mean pairwise distance within each generated category
* nas: nearest-centroid accuracy without and with generated training data
* pca2d: 2-D principal component projection for distribution plots
"""
import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.decomposition import PCA
from sklearn.neighbors import NearestCentroid

from .errors import InvalidInputError
from .linalg import psd_sqrt
from .utils import as_array

logger = logging.getLogger(__name__)


class FeatureSet(object):
    """ Equal-length feature vectors with a source label.

    Args:
        vectors (np.array): (N, dim), N >= 1
        label (str): where the vectors come from
    """

    def __init__(self, vectors, label=''):
        vectors = as_array(vectors, name='feature vectors')
        if vectors.ndim == 1:
            vectors = vectors[np.newaxis]
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise InvalidInputError("A feature set needs at least one vector of length >= 1")
        self.vectors = vectors
        self.label = label

    def __repr__(self):
        return "FeatureSet(%r, n=%i, dim=%i)" % (self.label, len(self), self.dim)

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def moments(self):
        """ Mean and unbiased covariance; diagonal when there are fewer than dim + 1 vectors """
        n = len(self)
        if n < 2:
            raise InvalidInputError("Feature set %r needs >= 2 vectors for a covariance" % self.label)
        mu = self.vectors.mean(axis=0)
        if n < self.dim + 1:
            logger.warning('Feature set %r has %i vectors for dim %i: using a diagonal covariance.'
                           % (self.label, n, self.dim))
            return mu, np.diag(self.vectors.var(axis=0, ddof=1))
        return mu, np.atleast_2d(np.cov(self.vectors, rowvar=False))


def as_feature_set(x, label=''):
    return x if isinstance(x, FeatureSet) else FeatureSet(x, label)


def frechet_from_moments(mu1, cov1, mu2, cov2):
    """ ||mu1 - mu2||^2 + Tr(C1 + C2 - 2 (C1 C2)^(1/2)), clamped at 0.

    The cross term uses the symmetric form (C1^(1/2) C2 C1^(1/2))^(1/2), which has
    the same trace.
    """
    mu1, mu2 = as_array(mu1, ndim=1, name='mean'), as_array(mu2, ndim=1, name='mean')
    cov1, cov2 = as_array(cov1, ndim=2, name='covariance'), as_array(cov2, ndim=2, name='covariance')
    if mu1.shape != mu2.shape or cov1.shape != cov2.shape or cov1.shape != (mu1.size, mu1.size):
        raise InvalidInputError("Moment dimensions do not match")
    s1 = psd_sqrt(cov1)
    inner = s1 @ cov2 @ s1
    cross = psd_sqrt((inner + inner.T) / 2.0)
    d2 = float(np.sum((mu1 - mu2) ** 2) + np.trace(cov1) + np.trace(cov2) - 2.0 * np.trace(cross))
    return max(d2, 0.0)


def frechet(a, b):
    """ Squared Frechet distance between two feature sets.

    Args:
        a, b (FeatureSet or (N, dim) array)

    Returns:
        float >= 0
    """
    a, b = as_feature_set(a, 'a'), as_feature_set(b, 'b')
    if a.dim != b.dim:
        raise InvalidInputError("Feature dimensions differ: %i vs %i" % (a.dim, b.dim))
    mu1, cov1 = a.moments()
    mu2, cov2 = b.moments()
    d1 = frechet_from_moments(mu1, cov1, mu2, cov2)
    d2 = frechet_from_moments(mu2, cov2, mu1, cov1)
    return (d1 + d2) / 2.0


def intra_diversity(sets):
    """ Mean over categories of the mean pairwise Euclidean distance.

    Args:
        sets (dict or list): per-category FeatureSet / (N, dim) arrays, N >= 2 each
    """
    items = list(sets.items()) if isinstance(sets, dict) else list(enumerate(sets))
    if not items:
        raise InvalidInputError("intra_diversity needs at least one category")
    scores = []
    for key, fs in items:
        fs = as_feature_set(fs, str(key))
        if len(fs) < 2:
            raise InvalidInputError("Category %s has fewer than 2 items" % key)
        scores.append(pdist(fs.vectors, 'euclidean').mean())
    return float(np.mean(scores))


@dataclass
class NasReport:
    """ Nearest-centroid accuracies without (standard) and with generated data. """
    standard_acc: float
    augmented_acc: float
    per_category: Dict[str, tuple] = field(default_factory=dict)
    seed: int = 0


def _stack(per_category, cats):
    x, y = [], []
    for c in cats:
        v = as_feature_set(per_category[c], c).vectors
        x.append(v)
        y.extend([c] * v.shape[0])
    return np.concatenate(x), np.array(y)


def _per_category_accuracy(y_true, y_pred, cats):
    return {c: float(np.mean(y_pred[y_true == c] == c)) for c in cats}


def nas(real_train, generated, test, seed=0):
    """ Naive augmentation score with a nearest-centroid classifier.

    Args:
        real_train (dict): category -> (K, dim) real training features
        generated (dict): category -> (M, dim) generated features
        test (dict): category -> (T, dim) test features
        seed (int): recorded in the report; the classifier is deterministic

    Returns:
        NasReport
    """
    cats = sorted(real_train)
    if len(cats) < 2:
        raise InvalidInputError("nas needs at least 2 categories to classify, got %i" % len(cats))
    for name, split in (('generated', generated), ('test', test)):
        missing = sorted(set(cats) - set(split))
        extra = sorted(set(split) - set(cats))
        if missing or extra:
            raise InvalidInputError("Category mismatch in %s split: missing %s, unexpected %s"
                                    % (name, missing, extra))

    x_real, y_real = _stack(real_train, cats)
    x_gen, y_gen = _stack(generated, cats)
    x_test, y_test = _stack(test, cats)

    standard = NearestCentroid().fit(x_real, y_real)
    augmented = NearestCentroid().fit(np.concatenate([x_real, x_gen]), np.concatenate([y_real, y_gen]))
    pred_std = standard.predict(x_test)
    pred_aug = augmented.predict(x_test)

    acc_std = _per_category_accuracy(y_test, pred_std, cats)
    acc_aug = _per_category_accuracy(y_test, pred_aug, cats)
    per_category = {c: (acc_std[c], acc_aug[c]) for c in cats}
    return NasReport(float(np.mean(pred_std == y_test)), float(np.mean(pred_aug == y_test)),
                     per_category, int(seed))


def pca2d(codes):
    """ Project >= 3 flattened vectors on their top-2 principal directions.

    Args:
        codes (np.array): (N, dim) or (N, L, D)

    Returns:
        (N, 2) points, variance along axis 0 >= axis 1
    """
    codes = as_array(codes, name='codes')
    if codes.ndim < 2:
        raise InvalidInputError("pca2d needs a list of vectors")
    codes = codes.reshape(codes.shape[0], -1)
    if codes.shape[0] < 3:
        raise InvalidInputError("pca2d needs at least 3 vectors, got %i" % codes.shape[0])
    if codes.shape[1] < 2:
        raise InvalidInputError("pca2d needs vectors of length >= 2")
    return PCA(n_components=2, svd_solver='full').fit_transform(codes)
