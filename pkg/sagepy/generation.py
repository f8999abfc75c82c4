"""
# generation.py

Stable few-shot generation for unseen categories.

    bf = reduce_relevant(model.relevant, t_b)           # span of seen class embeddings
    e_hat = estimate_class_embedding(shots, bf)        # projected, averaged shots
    cats = nearest_seen(query_embedding(shots, e_hat), model.relevant, t_c)
    sal = direction_saliency(model.atoms, library, model, cats)
    ad = adapt_dictionary(model.atoms, sal, t_a)
    gm = fit_code_gaussian(neighbour codes)
    outputs = sage_generate(e_hat, ad, gm, alpha, count, seed)

sage_pipeline() runs the whole chain; multi_tb_generate() splits the outputs
over several t_B values. age_generate() is the baseline that edits a given
sample with the full dictionary.

All dictionary algebra is per layer. Sparse codes are shared by the layers of
a group, so per-layer back-projections are averaged within each group.
"""
import logging
from dataclasses import dataclass, asdict, field
from typing import List, Optional, Union

import numpy as np

from .errors import InvalidInputError
from .latent import SEEN, RelevantDictionary, class_embedding
from .linalg import thin_svd
from .utils import as_array, check_shape, frozen, spawn_rng, top_k_indices

logger = logging.getLogger(__name__)

DEFAULT_T_C_ONE_SHOT = 30
DEFAULT_T_C_FEW_SHOT = 20


class ReducedRelevant(object):
    """ Per-layer orthonormal basis B_f (L, D, t_B) of the category-relevant span """

    def __init__(self, bases):
        self.bases = frozen(as_array(bases, ndim=3, name='reduced relevant basis'))

    def __repr__(self):
        return "ReducedRelevant(t_B=%i)" % self.t_b

    @property
    def t_b(self):
        return self.bases.shape[2]

    def coordinates(self, w):
        """ B_f^T w per layer: (L, t_B), or (N, L, t_B) for a batch """
        w = np.asarray(w, dtype=np.float64)
        if w.ndim == 3:
            return np.einsum('ldt,nld->nlt', self.bases, w)
        return np.einsum('ldt,ld->lt', self.bases, w)

    def project(self, w):
        """ B_f B_f^T w per layer """
        coords = self.coordinates(w)
        if coords.ndim == 3:
            return np.einsum('ldt,nlt->nld', self.bases, coords)
        return np.einsum('ldt,lt->ld', self.bases, coords)


class AdaptiveDictionary(object):
    """ Atoms selected per layer group.

    Args:
        indices (np.array): (G, t_A) strictly increasing atom indices per group
        matrices (np.array): (L, D, t_A) sliced atoms of each layer
        partition (GroupPartition)
    """

    def __init__(self, indices, matrices, partition):
        self.indices = np.array(indices, dtype=np.intp)
        self.indices.setflags(write=False)
        self.matrices = frozen(matrices)
        self.partition = partition

    def __repr__(self):
        return "AdaptiveDictionary(t_A=%i, indices=%s)" % (self.t_a, self.indices.tolist())

    @property
    def t_a(self):
        return self.indices.shape[1]


class GaussianModel(object):
    """ Diagonal Gaussian over sparse codes.

    Args:
        mean (np.array): (G, l)
        var (np.array): (G, l), unbiased variance per coordinate
        count (int): number of codes the moments were estimated from
    """

    def __init__(self, mean, var, count):
        self.mean = frozen(mean)
        self.var = frozen(var)
        if self.mean.shape != self.var.shape:
            raise InvalidInputError("Gaussian mean and variance shapes differ")
        if np.any(self.var < 0):
            raise InvalidInputError("Gaussian variances must be >= 0")
        self.count = int(count)

    def __repr__(self):
        return "GaussianModel(shape=%s, count=%i)" % (self.mean.shape, self.count)

    @property
    def std(self):
        return np.sqrt(self.var)


@dataclass(frozen=True)
class EditConfig:
    """ Generation knobs. t_c and t_a default to the shot-dependent and l // 2 rules. """
    alpha: float = 2.0
    t_b: Union[int, List[int]] = 10
    t_c: Optional[int] = None
    t_a: Optional[int] = None
    shots: int = 1
    groups: Optional[List[int]] = None

    def validate(self):
        if self.alpha < 0:
            raise InvalidInputError("alpha must be >= 0")
        for t in self.t_b_values():
            if t < 1:
                raise InvalidInputError("t_b values must be >= 1")
        if not self.t_b_values():
            raise InvalidInputError("t_b list must not be empty")
        for name in ('t_c', 't_a'):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise InvalidInputError("%s must be >= 1" % name)
        if self.shots < 1:
            raise InvalidInputError("shots must be >= 1")
        return self

    def t_b_values(self):
        return list(self.t_b) if isinstance(self.t_b, (list, tuple)) else [self.t_b]

    def resolve_t_c(self, n_seen):
        """ t_C, clamped to the number of seen categories """
        t_c = self.t_c
        if t_c is None:
            t_c = DEFAULT_T_C_ONE_SHOT if self.shots == 1 else DEFAULT_T_C_FEW_SHOT
        if t_c > n_seen:
            logger.warning('t_C=%i exceeds the %i seen categories, using %i.' % (t_c, n_seen, n_seen))
            t_c = n_seen
        return t_c

    def resolve_t_a(self, n_atoms):
        return max(1, n_atoms // 2) if self.t_a is None else self.t_a

    def to_dict(self):
        return asdict(self)


@dataclass
class SageResult:
    """ Outputs and intermediate products of one sage_pipeline() run. """
    outputs: np.ndarray
    embedding: np.ndarray
    neighbours: List[str]
    adaptive: AdaptiveDictionary
    gaussian: GaussianModel
    t_b: int
    provenance: dict = field(default_factory=dict)


def reduce_relevant(b, t_b):
    """ First t_B left-singular vectors of every layer of B.

    Args:
        b (RelevantDictionary)
        t_b (int): 1 <= t_b <= S

    Returns:
        ReducedRelevant
    """
    if not 1 <= t_b <= b.n_categories:
        raise InvalidInputError("t_B must be in 1..%i, got %i" % (b.n_categories, t_b))
    if t_b > b.dims:
        raise InvalidInputError("t_B (%i) cannot exceed D (%i)" % (t_b, b.dims))
    bases = np.stack([thin_svd(b.matrices[ell])[0][:, :t_b] for ell in range(b.layers)])
    return ReducedRelevant(bases)


def estimate_class_embedding(samples, bf):
    """ Mean of the projections B_f B_f^T w_i of the few-shot samples """
    if samples is None or len(samples) == 0:
        raise InvalidInputError("estimate_class_embedding needs at least one sample")
    samples = as_array(samples, ndim=3, name='samples')
    check_shape(samples, (samples.shape[0],) + bf.bases.shape[:2], name='samples')
    return bf.project(samples).mean(axis=0)


def back_project(a, delta):
    """ Sparse code of a delta through the per-layer pseudo-inverses of A.

    Args:
        a (IrrelevantDictionary)
        delta (np.array): (L, D)

    Returns:
        (G, l) code, per-layer codes averaged within each group
    """
    delta = as_array(delta, ndim=2, name='delta')
    check_shape(delta, (a.layers, a.dims), name='delta')
    per_layer = np.einsum('lkd,ld->lk', a.pinv, delta)
    return a.partition.group_mean(per_layer)


def back_project_batch(a, deltas):
    """ back_project over (N, L, D) deltas -> (N, G, l) """
    deltas = as_array(deltas, ndim=3, name='deltas')
    check_shape(deltas, (deltas.shape[0], a.layers, a.dims), name='deltas')
    return a.partition.group_mean(np.einsum('lkd,nld->nlk', a.pinv, deltas))


def query_embedding(samples, embedding=None):
    """ Retrieval query: the projected embedding for one shot, the mean code for several """
    samples = as_array(samples, ndim=3, name='samples')
    if samples.shape[0] == 0:
        raise InvalidInputError("query_embedding needs at least one sample")
    if samples.shape[0] == 1:
        return samples[0] if embedding is None else np.asarray(embedding, dtype=np.float64)
    return samples.mean(axis=0)


def nearest_seen(query, b, t_c):
    """ The t_C seen categories whose class embeddings are closest to query.

    Distances are Euclidean over all layers; ties go to the lexicographically
    smaller id.

    Returns:
        list of category ids, nearest first
    """
    query = as_array(query, ndim=2, name='query')
    check_shape(query, (b.layers, b.dims), name='query')
    if not 1 <= t_c <= b.n_categories:
        raise InvalidInputError("t_C must be in 1..%i, got %i" % (b.n_categories, t_c))
    dist = np.sqrt(np.sum((b.matrices - query[:, :, None]) ** 2, axis=(0, 1)))
    rank = np.argsort(np.argsort(np.array(b.ids)))
    order = np.lexsort((rank, dist))
    return [b.ids[k] for k in order[:t_c]]


def _relevant_of(model):
    if model is None:
        return None
    if isinstance(model, RelevantDictionary):
        return model
    return model.relevant


def category_codes(a, library, model, cats):
    """ Back-projected codes (N, G, l) of each category's deltas from its class embedding """
    relevant = _relevant_of(model)
    codes = {}
    for cat_id in cats:
        if cat_id not in library:
            raise InvalidInputError("Unknown category id: %s" % cat_id)
        if library.role(cat_id) != SEEN:
            raise InvalidInputError("Category %s is not a seen category" % cat_id)
        samples = library.codes(cat_id)
        if relevant is not None and cat_id in relevant.ids:
            e = relevant.embedding(cat_id)
        else:
            e = class_embedding(samples)
        codes[cat_id] = back_project_batch(a, samples - e)
    return codes


def direction_saliency(a, library, model, cats):
    """ Commonality of each atom among categories.

    Mean over categories of the mean |code| of that category's samples.

    Args:
        a (IrrelevantDictionary)
        library (CategoryLibrary): holds the categories' codes
        model (FactorizationModel or RelevantDictionary): supplies class embeddings;
            None to use the library means
        cats (list): seen category ids

    Returns:
        (G, l) non-negative saliency
    """
    cats = list(cats)
    if not cats:
        raise InvalidInputError("direction_saliency needs at least one category")
    return _saliency(category_codes(a, library, model, cats), cats)


def _saliency(codes, cats):
    return np.mean([np.abs(codes[c]).mean(axis=0) for c in cats], axis=0)


def adapt_dictionary(a, saliency, t_a):
    """ Keep the t_A most salient atoms of each group.

    Args:
        a (IrrelevantDictionary)
        saliency (np.array): (G, l)
        t_a (int): 1 <= t_a <= l

    Returns:
        AdaptiveDictionary
    """
    saliency = as_array(saliency, ndim=2, name='saliency')
    check_shape(saliency, a.code_shape, name='saliency')
    if not 1 <= t_a <= a.n_atoms:
        raise InvalidInputError("t_A must be in 1..%i, got %i" % (a.n_atoms, t_a))
    indices = np.stack([top_k_indices(saliency[g], t_a) for g in range(a.partition.n_groups)])
    per_layer = indices[a.partition.group_of_layer]
    matrices = np.take_along_axis(a.atoms, per_layer[:, None, :], axis=2)
    return AdaptiveDictionary(indices, matrices, a.partition)


def fit_code_gaussian(codes):
    """ Coordinate-wise mean and unbiased variance of >= 2 sparse codes (N, G, l) """
    if codes is None or len(codes) < 2:
        raise InvalidInputError("fit_code_gaussian needs at least 2 codes")
    codes = as_array(codes, ndim=3, name='codes')
    return GaussianModel(codes.mean(axis=0), codes.var(axis=0, ddof=1), codes.shape[0])


def _group_mask(partition, groups):
    mask = np.ones(partition.n_groups)
    if groups is not None:
        groups = list(groups)
        for g in groups:
            if not 0 <= g < partition.n_groups:
                raise InvalidInputError("Layer group %i out of range 0..%i" % (g, partition.n_groups - 1))
        mask[:] = 0.0
        mask[groups] = 1.0
    return mask


def sage_generate(e_hat, ad, gm, alpha, count, seed, groups=None, indices=None):
    """ e_hat + alpha * A_cu n for codes n drawn from gm on the selected atoms.

    Args:
        e_hat (np.array): (L, D) estimated class embedding
        ad (AdaptiveDictionary)
        gm (GaussianModel): fitted over all l atoms
        alpha (float): manipulation intensity
        count (int): number of outputs
        seed (int): base seed; output j draws from sub-stream (seed, indices[j])
        groups (list): edit only these layer groups, None for all
        indices (list): sub-stream index of every output, default 0..count-1

    Returns:
        (count, L, D) latent codes
    """
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    e_hat = as_array(e_hat, ndim=2, name='class embedding')
    check_shape(e_hat, ad.matrices.shape[:2], name='class embedding')
    indices = list(range(count)) if indices is None else list(indices)
    if len(indices) != count:
        raise InvalidInputError("Need one sub-stream index per output")

    mean = np.take_along_axis(gm.mean, ad.indices, axis=1)
    std = np.take_along_axis(gm.std, ad.indices, axis=1)
    mask = _group_mask(ad.partition, groups)[:, None]
    group_of_layer = ad.partition.group_of_layer

    outputs = np.empty((count,) + e_hat.shape)
    for j, index in enumerate(indices):
        rng = spawn_rng(seed, index)
        n = (mean + std * rng.standard_normal(mean.shape)) * mask
        outputs[j] = e_hat + alpha * np.einsum('ldk,lk->ld', ad.matrices, n[group_of_layer])
    return outputs


def age_generate(w, a, gm, alpha, count, seed):
    """ Baseline: edit the sample w itself with codes drawn over all atoms """
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    w = as_array(w, ndim=2, name='latent code')
    check_shape(w, (a.layers, a.dims), name='latent code')
    check_shape(gm.mean, a.code_shape, name='Gaussian mean')
    group_of_layer = a.partition.group_of_layer

    outputs = np.empty((count,) + w.shape)
    for j in range(count):
        rng = spawn_rng(seed, j)
        n = gm.mean + gm.std * rng.standard_normal(gm.mean.shape)
        outputs[j] = w + alpha * np.einsum('ldk,lk->ld', a.atoms, n[group_of_layer])
    return outputs


def seen_code_gaussian(a, library, model=None):
    """ Gaussian over the codes of every seen category (the baseline's sampling law) """
    codes = category_codes(a, library, model, library.seen_ids())
    return fit_code_gaussian(np.concatenate([codes[c] for c in sorted(codes)]))


def sage_pipeline(samples, model, library, cfg, count, seed, t_b=None, indices=None):
    """ Full single-t_B generation chain for one unseen category.

    Args:
        samples (np.array): (K, L, D) few-shot codes of the unseen category
        model (FactorizationModel): A and B
        library (CategoryLibrary): codes of the seen categories
        cfg (EditConfig)
        count (int): number of outputs
        seed (int): base seed
        t_b (int): overrides cfg.t_b
        indices (list): per-output sub-stream indices

    Returns:
        SageResult
    """
    cfg.validate()
    samples = as_array(samples, ndim=3, name='samples')
    if t_b is None:
        t_b = cfg.t_b_values()[0]
    bf = reduce_relevant(model.relevant, t_b)
    e_hat = estimate_class_embedding(samples, bf)
    t_c = cfg.resolve_t_c(model.relevant.n_categories)
    neighbours = nearest_seen(query_embedding(samples, e_hat), model.relevant, t_c)

    codes = category_codes(model.atoms, library, model, neighbours)
    saliency = _saliency(codes, neighbours)
    t_a = cfg.resolve_t_a(model.atoms.n_atoms)
    ad = adapt_dictionary(model.atoms, saliency, t_a)
    gm = fit_code_gaussian(np.concatenate([codes[c] for c in neighbours]))
    logger.debug('t_B=%i neighbours=%s atoms=%s' % (t_b, neighbours, ad.indices.tolist()))

    outputs = sage_generate(e_hat, ad, gm, cfg.alpha, count, seed, groups=cfg.groups, indices=indices)
    provenance = {'method': 'sage', 'alpha': cfg.alpha, 't_b': t_b, 't_c': t_c, 't_a': t_a,
                  'seed': int(seed)}
    return SageResult(outputs, e_hat, neighbours, ad, gm, t_b, provenance)


def multi_tb_generate(samples, model, library, cfg, count, seed):
    """ Split count outputs round-robin over the t_B values of cfg and concatenate.

    Output slot j belongs to t_B value j mod m and draws from sub-stream (seed, j),
    so a single-value list reproduces sage_pipeline().

    Returns:
        (count, L, D) latent codes, grouped by t_B value in list order
    """
    t_bs = cfg.validate().t_b_values()
    if count < len(t_bs):
        raise InvalidInputError("count (%i) must cover every t_B value (%i)" % (count, len(t_bs)))
    chunks = []
    for i, t_b in enumerate(t_bs):
        slots = list(range(i, count, len(t_bs)))
        chunks.append(sage_pipeline(samples, model, library, cfg, len(slots), seed,
                                    t_b=t_b, indices=slots).outputs)
    return np.concatenate(chunks)


sage_multi = multi_tb_generate


def salient_editing_directions(a):
    """ Per-layer left-singular vectors of A, by decreasing singular value.

    Returns:
        (u, s): u (L, D, l) orthonormal directions, s (L, l) singular values
    """
    us, ss = [], []
    for ell in range(a.layers):
        u, s, _ = thin_svd(a.atoms[ell])
        us.append(u)
        ss.append(s)
    return np.stack(us), np.stack(ss)


def group_direction(a, group, k):
    """ Delta moving along the k-th salient direction on the layers of one group """
    if not 0 <= group < a.partition.n_groups:
        raise InvalidInputError("Layer group %i out of range" % group)
    if not 0 <= k < a.n_atoms:
        raise InvalidInputError("Direction index %i out of range" % k)
    u, _ = salient_editing_directions(a)
    delta = np.zeros((a.layers, a.dims))
    for ell in a.partition.layers(group):
        delta[ell] = u[ell, :, k]
    return delta


def apply_direction(w, direction, alpha):
    """ w + alpha * direction """
    w = as_array(w, ndim=2, name='latent code')
    direction = as_array(direction, ndim=2, name='direction')
    check_shape(direction, w.shape, name='direction')
    return w + alpha * direction


def relevant_drift(outputs, e_hat, bf):
    """ Mean of ||B_f^T (w - e_hat)|| / ||B_f^T e_hat|| over the outputs """
    outputs = as_array(outputs, ndim=3, name='outputs')
    base = np.linalg.norm(bf.coordinates(e_hat))
    if base == 0:
        raise InvalidInputError("Embedding has no category-relevant component")
    moved = bf.coordinates(outputs - np.asarray(e_hat)[None])
    return float(np.mean(np.sqrt(np.sum(moved ** 2, axis=(1, 2)))) / base)
