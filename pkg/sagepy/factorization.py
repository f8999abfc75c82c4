"""
# factorization.py

Learns the category-irrelevant dictionary A and the sparse-code encoder.

For a seen sample w of category c with class embedding e, the delta
dw = w - e is encoded to a group-shared sparse code n and decoded as A n.
Training minimises

    L = L_rec + lambda1 * L_orth + lambda2 * L_sparse

with L_rec = ||e + A n - w||_2 (or ||G(e + A n) - G(w)||_2 through the toy
renderer), L_orth = sum_l ||B_l^T A_l||_F^2 and L_sparse = sum sigmoid(theta0 * n - theta1),
using Adam and analytic gradients. A trained dictionary is then aligned:
within each layer group the atoms are re-expressed in the basis in which
categories vary independently, and the encoder output is mapped to match.
"""
import logging
import time
from dataclasses import dataclass, asdict
from typing import List, Optional

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.special import expit

from . import encoder as enc
from .adam import Adam
from .encoder import EncoderParams
from .errors import InvalidInputError, TrainingDivergedError
from .latent import RelevantDictionary, build_relevant_dictionary
from .linalg import joint_diagonalize, pseudo_inverse
from .utils import as_array, check_shape, frozen, round_to_f32
from .world import toy_render, toy_render_adjoint

logger = logging.getLogger(__name__)

REC_SPACES = ('feature', 'latent')
LOG_COLUMNS = ['iteration', 'total', 'rec', 'orth', 'sparse']
# Pooled code variances are floored at this fraction of the largest before whitening.
EIGEN_FLOOR = 1e-12


class GroupPartition(object):
    """ Ordered, disjoint, contiguous layer ranges covering 0..L-1.

    Args:
        ranges (list): [(start, stop), ...] half-open layer ranges
    """

    def __init__(self, ranges):
        ranges = [(int(a), int(b)) for a, b in ranges]
        if not ranges:
            raise InvalidInputError("A partition needs at least one group")
        expected = 0
        for start, stop in ranges:
            if start != expected or stop <= start:
                raise InvalidInputError("Layer groups must be contiguous, disjoint and non-empty: %s" % ranges)
            expected = stop
        self.ranges = tuple(ranges)
        self.group_of_layer = np.concatenate([np.full(b - a, g, dtype=np.intp)
                                              for g, (a, b) in enumerate(self.ranges)])
        self.group_of_layer.setflags(write=False)

    def __repr__(self):
        return "GroupPartition(%s)" % list(self.ranges)

    def __eq__(self, other):
        return isinstance(other, GroupPartition) and self.ranges == other.ranges

    def __hash__(self):
        return hash(self.ranges)

    @property
    def n_groups(self):
        return len(self.ranges)

    @property
    def n_layers(self):
        return self.ranges[-1][1]

    def layers(self, group):
        start, stop = self.ranges[group]
        return list(range(start, stop))

    def group_sum(self, per_layer):
        """ Sum a (..., L, k) array over the layers of each group -> (..., G, k) """
        return np.stack([per_layer[..., a:b, :].sum(axis=-2) for a, b in self.ranges], axis=-2)

    def group_mean(self, per_layer):
        return np.stack([per_layer[..., a:b, :].mean(axis=-2) for a, b in self.ranges], axis=-2)


def default_partition(layers):
    """ Bottom / middle / top groups, scaled from the 18-layer split 0-2, 3-6, 7-17 """
    if layers < 3:
        return GroupPartition([(0, layers)])
    b1 = max(1, int(round(3.0 * layers / 18)))
    b2 = max(b1 + 1, int(round(7.0 * layers / 18)))
    b2 = min(b2, layers - 1)
    return GroupPartition([(0, b1), (b1, b2), (b2, layers)])


class IrrelevantDictionary(object):
    """ Category-irrelevant dictionary A: per-layer D x l atom matrices.

    Args:
        atoms (np.array): (L, D, l)
        partition (GroupPartition): layer groups sharing a sparse code
    """

    def __init__(self, atoms, partition):
        atoms = as_array(atoms, ndim=3, name='irrelevant dictionary')
        if atoms.shape[2] >= atoms.shape[1]:
            raise InvalidInputError("Atom count l (%i) must be smaller than D (%i)" % (atoms.shape[2], atoms.shape[1]))
        if partition.n_layers != atoms.shape[0]:
            raise InvalidInputError("Partition covers %i layers, dictionary has %i" % (partition.n_layers, atoms.shape[0]))
        self.atoms = frozen(atoms)
        self.partition = partition
        self._pinv = None

    def __repr__(self):
        return "IrrelevantDictionary: L=%i D=%i l=%i %r" % (self.layers, self.dims, self.n_atoms, self.partition)

    @property
    def layers(self):
        return self.atoms.shape[0]

    @property
    def dims(self):
        return self.atoms.shape[1]

    @property
    def n_atoms(self):
        return self.atoms.shape[2]

    @property
    def code_shape(self):
        return (self.partition.n_groups, self.n_atoms)

    @property
    def pinv(self):
        """ (L, l, D) per-layer pseudo-inverses, computed once """
        if self._pinv is None:
            self._pinv = frozen(np.stack([pseudo_inverse(a) for a in self.atoms]))
        return self._pinv


@dataclass(frozen=True)
class TrainConfig:
    """ Optimisation settings for train(). """
    lambda1: float = 0.0005
    lambda2: float = 0.005
    theta0: float = 0.5
    theta1: float = -1.0
    learning_rate: float = 0.0003
    iterations: int = 3000
    batch_size: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    n_atoms: int = 22
    hidden: Optional[int] = None
    negative_slope: float = 0.2
    init_std: float = 0.02
    rec_space: str = 'latent'
    align_atoms: bool = True
    partition: Optional[List[List[int]]] = None
    log_every: int = 500

    def validate(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning_rate must be positive")
        if self.iterations < 0:
            raise InvalidInputError("iterations must be >= 0")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if self.n_atoms < 1:
            raise InvalidInputError("n_atoms must be >= 1")
        if self.hidden is not None and self.hidden < 1:
            raise InvalidInputError("hidden must be >= 1")
        if self.rec_space not in REC_SPACES:
            raise InvalidInputError("rec_space must be one of %s" % (REC_SPACES,))
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise InvalidInputError("Invalid Adam moments")
        if self.init_std < 0:
            raise InvalidInputError("init_std must be >= 0")
        if self.partition is not None:
            GroupPartition(self.partition)
        return self

    def hidden_dim(self):
        return 4 * self.n_atoms if self.hidden is None else self.hidden

    def group_partition(self, layers):
        if self.partition is None:
            return default_partition(layers)
        return GroupPartition(self.partition)

    def to_dict(self):
        return asdict(self)


class FactorizationModel(object):
    """ Trained factorization: dictionaries, encoder and training log.

    Args:
        atoms (IrrelevantDictionary): A
        encoder (EncoderParams): None for a dictionary-only model
        relevant (RelevantDictionary): B
        log (pd.DataFrame): per-iteration loss components
        config (dict): echo of the training configuration
    """

    def __init__(self, atoms, encoder, relevant, log=None, config=None):
        if atoms.layers != relevant.layers or atoms.dims != relevant.dims:
            raise InvalidInputError("A and B disagree on (L, D)")
        if encoder is not None and encoder.input_dim != atoms.layers * atoms.dims:
            raise InvalidInputError("Encoder input %i != L*D" % encoder.input_dim)
        if encoder is not None and encoder.code_shape != atoms.code_shape:
            raise InvalidInputError("Encoder code shape %s != dictionary code shape %s"
                                    % (encoder.code_shape, atoms.code_shape))
        self.atoms = atoms
        self.encoder = encoder
        self.relevant = relevant
        self.log = log if log is not None else pd.DataFrame(columns=LOG_COLUMNS)
        self.config = dict(config or {})

    @classmethod
    def from_dictionaries(cls, atoms, relevant):
        """ Model without an encoder, e.g. around a ground-truth dictionary """
        return cls(atoms, None, relevant)

    def __repr__(self):
        return "FactorizationModel(%r, %r)" % (self.atoms, self.relevant)

    @property
    def partition(self):
        return self.atoms.partition

    @property
    def shape(self):
        return (self.atoms.layers, self.atoms.dims)


def encode(delta, params):
    """ Sparse code (G, l) of one delta (L, D) """
    delta = as_array(delta, ndim=2, name='delta')
    if delta.size != params.input_dim:
        raise InvalidInputError("delta has %i entries, encoder expects %i" % (delta.size, params.input_dim))
    out, _ = enc.forward(params, delta.reshape(1, -1))
    return out.reshape(params.code_shape)


def encode_batch(deltas, params):
    deltas = as_array(deltas, ndim=3, name='deltas')
    out, _ = enc.forward(params, deltas.reshape(deltas.shape[0], -1))
    return out.reshape((deltas.shape[0],) + params.code_shape)


def expand_edit(a, n):
    """ Edit delta from a sparse code: delta[l] = A[l] @ n[group(l)].

    Args:
        a (IrrelevantDictionary)
        n (np.array): (G, l) code

    Returns:
        (L, D) delta
    """
    n = as_array(n, ndim=2, name='sparse code')
    check_shape(n, a.code_shape, name='sparse code')
    return np.einsum('ldk,lk->ld', a.atoms, n[a.partition.group_of_layer])


def expand_edit_batch(atoms, partition, codes):
    """ expand_edit over a batch of codes (B, G, l) -> (B, L, D) """
    return np.einsum('ldk,blk->bld', atoms, codes[:, partition.group_of_layer, :])


def sparsity_loss(n, theta0, theta1):
    """ Smooth L0 surrogate: sum of sigmoid(theta0 * n - theta1) """
    n = as_array(n, name='sparse code')
    return float(np.sum(expit(theta0 * n - theta1)))


def sparsity_grad(n, theta0, theta1):
    """ Elementwise derivative of sparsity_loss wrt n """
    s = expit(theta0 * np.asarray(n, dtype=np.float64) - theta1)
    return theta0 * s * (1.0 - s)


def _relevant_matrices(b):
    if isinstance(b, RelevantDictionary):
        return b.matrices
    return as_array(b, ndim=3, name='relevant dictionary')


def _atom_matrices(a):
    if isinstance(a, IrrelevantDictionary):
        return a.atoms
    return as_array(a, ndim=3, name='irrelevant dictionary')


def orthogonality_loss(b, a):
    """ sum over layers of ||B[l]^T A[l]||_F^2

    Args:
        b (RelevantDictionary or (L, D, S) array)
        a (IrrelevantDictionary or (L, D, l) array)
    """
    bm, am = _relevant_matrices(b), _atom_matrices(a)
    if bm.shape[:2] != am.shape[:2]:
        raise InvalidInputError("B %s and A %s disagree on (L, D)" % (bm.shape, am.shape))
    return float(np.sum(np.einsum('lds,ldk->lsk', bm, am) ** 2))


def orthogonality_grad(b, a):
    """ Gradient of orthogonality_loss wrt A: 2 B B^T A per layer """
    bm, am = _relevant_matrices(b), _atom_matrices(a)
    return 2.0 * np.einsum('lds,lsk->ldk', bm, np.einsum('lds,ldk->lsk', bm, am))


def normalized_orthogonality(b, a):
    """ Per-layer ||B^T A||_F / (||B||_F ||A||_F) """
    bm, am = _relevant_matrices(b), _atom_matrices(a)
    cross = np.sqrt(np.sum(np.einsum('lds,ldk->lsk', bm, am) ** 2, axis=(1, 2)))
    norms = np.sqrt(np.sum(bm ** 2, axis=(1, 2))) * np.sqrt(np.sum(am ** 2, axis=(1, 2)))
    return np.where(norms > 0, cross / np.where(norms > 0, norms, 1.0), 0.0)


def _residual(world, e, delta_hat, target, rec_space):
    if rec_space == 'feature':
        return toy_render(world, e + delta_hat) - target
    return (e + delta_hat - target).reshape(-1)


def reconstruction_loss(world, e, a, n, target, rec_space='feature'):
    """ ||G(e + A n) - target||_2

    Args:
        world (World): supplies the toy renderer G
        e (np.array): (L, D) class embedding
        a (IrrelevantDictionary)
        n (np.array): (G, l) code
        target (np.array): (P,) feature, or (L, D) code when rec_space == 'latent'
    """
    e = as_array(e, ndim=2, name='class embedding')
    check_shape(e, (a.layers, a.dims), name='class embedding')
    target = as_array(target, name='target')
    if rec_space == 'feature':
        check_shape(target, (world.spec.feature_dim,), name='target feature')
    else:
        check_shape(target, e.shape, name='target code')
    r = _residual(world, e, expand_edit(a, n), target, rec_space)
    return float(np.linalg.norm(r))


def reconstruction_grad(world, e, a, n, target, rec_space='feature'):
    """ Gradients (dA, dn) of reconstruction_loss """
    e = np.asarray(e, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    r = _residual(world, e, expand_edit(a, n), target, rec_space)
    norm = np.linalg.norm(r)
    if norm == 0:
        return np.zeros_like(a.atoms), np.zeros_like(n)
    g_r = r / norm
    g_delta = toy_render_adjoint(world, g_r) if rec_space == 'feature' else g_r.reshape(e.shape)
    per_layer_n = n[a.partition.group_of_layer]
    grad_a = np.einsum('ld,lk->ldk', g_delta, per_layer_n)
    grad_n = a.partition.group_sum(np.einsum('ldk,ld->lk', a.atoms, g_delta))
    return grad_a, grad_n


def total_loss(rec, orth, sparse, lambda1, lambda2):
    """ rec + lambda1 * orth + lambda2 * sparse """
    if not all(np.isfinite(v) for v in (rec, orth, sparse)):
        raise InvalidInputError("Loss components must be finite")
    return rec + lambda1 * orth + lambda2 * sparse


def batch_loss_and_grads(world, atoms, partition, params, relevant, embeddings, codes, targets, cfg):
    """ Batch objective and its gradients wrt A and every encoder tensor.

    The reconstruction and sparsity terms are batch means; the orthogonality
    term does not depend on the batch.

    Args:
        atoms (np.array): (L, D, l) current dictionary
        partition (GroupPartition)
        params (EncoderParams)
        relevant (np.array): (L, D, S) frozen B
        embeddings (np.array): (B, L, D) class embedding of each sample's category
        codes (np.array): (B, L, D) latent codes w
        targets (np.array): (B, P) rendered codes, or (B, L, D) codes in latent space
        cfg (TrainConfig)

    Returns:
        (losses, grads): losses dict with total/rec/orth/sparse, grads dict with 'A' and encoder keys
    """
    batch = codes.shape[0]
    deltas = codes - embeddings
    out, cache = enc.forward(params, deltas.reshape(batch, -1))
    n = out.reshape((batch,) + params.code_shape)
    delta_hat = expand_edit_batch(atoms, partition, n)

    if cfg.rec_space == 'feature':
        r = (embeddings + delta_hat).reshape(batch, -1) @ world.renderer.T - targets
    else:
        r = (embeddings + delta_hat - targets).reshape(batch, -1)
    norms = np.linalg.norm(r, axis=1)
    rec = float(norms.mean())
    safe = np.where(norms > 0, norms, 1.0)
    g_r = np.where(norms[:, None] > 0, r / safe[:, None], 0.0) / batch
    if cfg.rec_space == 'feature':
        g_delta = (g_r @ world.renderer).reshape(delta_hat.shape)
    else:
        g_delta = g_r.reshape(delta_hat.shape)

    grad_a = np.einsum('bld,blk->ldk', g_delta, n[:, partition.group_of_layer, :])
    g_n = partition.group_sum(np.einsum('ldk,bld->blk', atoms, g_delta))

    sparse = sparsity_loss(n, cfg.theta0, cfg.theta1) / batch
    g_n = g_n + cfg.lambda2 * sparsity_grad(n, cfg.theta0, cfg.theta1) / batch

    orth = orthogonality_loss(relevant, atoms)
    grad_a = grad_a + cfg.lambda1 * orthogonality_grad(relevant, atoms)

    grads = enc.backward(params, cache, g_n.reshape(batch, -1))
    grads['A'] = grad_a
    losses = {'rec': rec, 'orth': orth, 'sparse': sparse,
              'total': rec + cfg.lambda1 * orth + cfg.lambda2 * sparse}
    return losses, grads

def align_atoms(atoms, partition, deltas, labels):
    """ Canonical basis of every group's atom span.

    Codes of the training deltas are whitened against their pooled
    within-category covariance, then the per-category covariances are jointly
    diagonalised, so that each new atom carries variance that rises and falls
    with the category on its own. Atoms are scaled to unit norm over the
    group's layers, ordered by decreasing pooled code variance and signed so
    that their largest entry is positive. The span of each group is unchanged.

    Args:
        atoms (np.array): (L, D, l) trained dictionary
        partition (GroupPartition)
        deltas (np.array): (N, L, D) training codes minus their class embedding
        labels (np.array): (N,) category of every delta

    Returns:
        (aligned, transforms): aligned (L, D, l) with aligned[layer] = atoms[layer] @ transforms[g]
        for every layer of group g; codes map as n_aligned = inv(transforms[g]) @ n
    """
    atoms = as_array(atoms, ndim=3, name='irrelevant dictionary')
    deltas = as_array(deltas, ndim=3, name='deltas')
    labels = np.asarray(labels)
    if deltas.shape[1:] != atoms.shape[:2] or labels.shape != (deltas.shape[0],):
        raise InvalidInputError("deltas %s and labels %s do not match atoms %s"
                                % (deltas.shape, labels.shape, atoms.shape))
    n_atoms = atoms.shape[2]
    per_layer = np.stack([deltas[:, ell] @ pseudo_inverse(atoms[ell]).T for ell in range(atoms.shape[0])], axis=1)
    codes = partition.group_mean(per_layer)
    cats = [c for c in np.unique(labels) if np.sum(labels == c) > 1]
    if not cats:
        raise InvalidInputError("align_atoms needs a category with at least 2 deltas")

    aligned = atoms.copy()
    transforms = np.empty((partition.n_groups, n_atoms, n_atoms))
    for g in range(partition.n_groups):
        covs = np.stack([np.atleast_2d(np.cov(codes[labels == c, g], rowvar=False)) for c in cats])
        evals, evecs = scipy.linalg.eigh(covs.mean(axis=0))
        evals = np.maximum(evals, max(evals.max(), 0.0) * EIGEN_FLOOR + np.finfo(float).tiny)
        whiten = evecs / np.sqrt(evals)
        rotation = joint_diagonalize(np.einsum('ai,kab,bj->kij', whiten, covs, whiten))
        t = (evecs * np.sqrt(evals)) @ rotation

        layers = partition.layers(g)
        stacked = np.einsum('ldk,kj->ldj', atoms[layers], t).reshape(-1, n_atoms)
        norms = np.linalg.norm(stacked, axis=0)
        norms = np.where(norms > 0, norms, 1.0)
        order = np.argsort(-norms, kind='stable')
        stacked, t, norms = stacked[:, order], t[:, order], norms[order]
        pivots = np.argmax(np.abs(stacked), axis=0)
        signs = np.where(stacked[pivots, np.arange(n_atoms)] < 0, -1.0, 1.0)
        t = t * (signs / norms)
        transforms[g] = t
        aligned[layers] = np.einsum('ldk,kj->ldj', atoms[layers], t)
    return aligned, transforms


def fold_code_transform(params, transforms):
    """ Encoder whose output is inv(transforms[g]) @ n for every group code n """
    params = params.copy()
    n_groups, n_atoms = params.code_shape
    w, b = params.weights[-1], params.biases[-1]
    for g in range(n_groups):
        block = slice(g * n_atoms, (g + 1) * n_atoms)
        w[:, block] = np.linalg.solve(transforms[g], w[:, block].T).T
        b[block] = np.linalg.solve(transforms[g], b[block])
    return params


def _training_pool(library, world, cfg, relevant):
    """ Stack every seen sample with its class embedding, target and category """
    codes, embeddings, labels = [], [], []
    for cat_id in library.seen_ids():
        samples = library.codes(cat_id)
        e = relevant.embedding(cat_id)
        codes.append(samples)
        embeddings.append(np.broadcast_to(e, samples.shape))
        labels += [cat_id] * samples.shape[0]
    codes = np.concatenate(codes)
    embeddings = np.concatenate(embeddings)
    targets = toy_render(world, codes) if cfg.rec_space == 'feature' else codes
    return codes, embeddings, targets, np.array(labels)


def train(library, world, cfg):
    """ Train the irrelevant dictionary A and the encoder on the seen categories.

    Args:
        library (CategoryLibrary): codes; only seen categories are used
        world (World): supplies the toy renderer
        cfg (TrainConfig)

    Returns:
        FactorizationModel, with parameters rounded to float32 precision so that
        a written model reloads bit-exactly
    """
    cfg.validate()
    if not library.seen_ids():
        raise InvalidInputError("train needs a library with seen categories")
    if library.shape != world.shape:
        raise InvalidInputError("Library shape %s does not match world shape %s" % (library.shape, world.shape))

    L, D = library.shape
    partition = cfg.group_partition(L)
    if partition.n_layers != L:
        raise InvalidInputError("Partition covers %i layers, library has %i" % (partition.n_layers, L))
    if cfg.n_atoms >= D:
        raise InvalidInputError("n_atoms (%i) must be smaller than D (%i)" % (cfg.n_atoms, D))
    relevant = build_relevant_dictionary(library)
    codes, embeddings, targets, labels = _training_pool(library, world, cfg, relevant)

    rng = np.random.default_rng(cfg.seed)
    code_shape = (partition.n_groups, cfg.n_atoms)
    params = EncoderParams.initialize(L * D, cfg.hidden_dim(), code_shape, rng,
                                      std=cfg.init_std, negative_slope=cfg.negative_slope)
    atoms = rng.normal(0.0, cfg.init_std, size=(L, D, cfg.n_atoms))

    optimizer = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    tensors = params.as_dict()
    tensors['A'] = atoms
    rows = []

    t0 = time.time()
    for it in range(cfg.iterations):
        idx = rng.integers(0, codes.shape[0], size=cfg.batch_size)
        losses, grads = batch_loss_and_grads(world, atoms, partition, params, relevant.matrices,
                                             embeddings[idx], codes[idx], targets[idx], cfg)
        if not all(np.isfinite(v) for v in losses.values()):
            raise TrainingDivergedError(it)
        rows.append((it, losses['total'], losses['rec'], losses['orth'], losses['sparse']))
        optimizer.step(tensors, grads)

        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            logger.info('Training iteration %i of %i: total %.5f rec %.5f orth %.5f sparse %.3f'
                        % (it + 1, cfg.iterations, losses['total'], losses['rec'], losses['orth'], losses['sparse']))

    if cfg.iterations:
        logger.info('Training time: %2.2fsec' % (time.time() - t0))

    if cfg.align_atoms and cfg.iterations:
        atoms, transforms = align_atoms(atoms, partition, codes - embeddings, labels)
        params = fold_code_transform(params, transforms)
        logger.debug('Aligned the atoms of %i groups' % partition.n_groups)

    log = pd.DataFrame(rows, columns=LOG_COLUMNS)
    model = FactorizationModel(IrrelevantDictionary(round_to_f32(atoms), partition),
                               params.rounded(),
                               RelevantDictionary(relevant.ids, round_to_f32(relevant.matrices)),
                               log=log, config=cfg.to_dict())
    return model
