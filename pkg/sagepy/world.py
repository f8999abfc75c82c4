"""
# world.py

Synthetic generative world: the ground truth behind every oracle.

Each layer of the latent space is split by a random orthogonal matrix into a
category-relevant subspace (rank ``relevant_rank``), a category-irrelevant
subspace (``q`` directions) and the remaining complement. Class centers live in
the relevant subspace and are clustered by family; samples are

    w = c_k + V * diag(s_k) * eps + noise,    eps ~ N(0, I_q)

where V (L*D x q) is orthonormal, each column spreading evenly over the layers,
and s_k is the activation profile shared by every category of a family.
The toy renderer G is the linear map W_G (P x L*D).
"""
import logging
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InvalidInputError
from .latent import CategoryLibrary, SEEN, UNSEEN
from .utils import as_array, check_shape, frozen

logger = logging.getLogger(__name__)

# Inactive irrelevant directions still get this fraction of a family's activation.
INACTIVE_FRACTION = 0.1


@dataclass(frozen=True)
class WorldSpec:
    """ Parameters of a synthetic world.

    Unseen categories are close relatives: all of them belong to family
    ``unseen_family`` (-1 deals them round-robin over the families) and their
    centers scatter by ``unseen_spread`` instead of ``family_spread``.
    """
    seed: int = 0
    n_seen: int = 20
    n_unseen: int = 5
    layers: int = 6
    dims: int = 32
    q: int = 8
    families: int = 5
    center_scale: float = 3.0
    activation_scale: float = 1.0
    noise_scale: float = 0.1
    feature_dim: int = 64
    relevant_rank: int = 10
    family_spread: float = 0.3
    active_dims: int = 4
    unseen_family: int = 0
    unseen_spread: float = 0.03

    def validate(self):
        """ Raise InvalidInputError when the dimensions are infeasible """
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")
        for name in ('n_seen', 'layers', 'dims', 'q', 'families', 'feature_dim',
                     'relevant_rank', 'active_dims'):
            if getattr(self, name) < 1:
                raise InvalidInputError("%s must be >= 1" % name)
        if self.n_unseen < 0:
            raise InvalidInputError("n_unseen must be >= 0")
        if self.q >= self.layers * self.dims:
            raise InvalidInputError("q must be < L*D")
        if self.relevant_rank + self.q > self.dims:
            raise InvalidInputError("relevant_rank + q (%i) exceeds dims per layer (%i)"
                                    % (self.relevant_rank + self.q, self.dims))
        if self.active_dims > self.q:
            raise InvalidInputError("active_dims must be <= q")
        if self.families > self.n_seen:
            raise InvalidInputError("families must be <= n_seen")
        if not -1 <= self.unseen_family < self.families:
            raise InvalidInputError("unseen_family must be -1 or a family index below %i" % self.families)
        for name in ('center_scale', 'activation_scale', 'noise_scale', 'family_spread', 'unseen_spread'):
            if getattr(self, name) < 0:
                raise InvalidInputError("%s must be >= 0" % name)
        return self

    def to_dict(self):
        return asdict(self)


class World(object):
    """ Immutable synthetic world built by make_world().

    Attributes:
        spec (WorldSpec)
        relevant_basis (np.array): (L, D, r) per-layer relevant subspace
        layer_irrelevant_basis (np.array): (L, D, q) per-layer irrelevant subspace
        complement_basis (np.array): (L, D, D-r-q) directions outside both
        irrelevant_basis (np.array): V, (L*D, q) orthonormal columns
        centers (dict): category id -> (L, D) true center
        roles (dict): category id -> 'seen' | 'unseen'
        family_of (dict): category id -> family index
        profiles (dict): category id -> activation profile s_k (q,)
        active_directions (dict): family index -> sorted tuple of strongly active V columns
        renderer (np.array): W_G, (P, L*D)
    """

    def __init__(self, spec, relevant_basis, layer_irrelevant_basis, complement_basis,
                 centers, roles, family_of, family_profiles, active_directions, renderer):
        self.spec = spec
        self.relevant_basis = frozen(relevant_basis)
        self.layer_irrelevant_basis = frozen(layer_irrelevant_basis)
        self.complement_basis = frozen(complement_basis)
        L, D, q = self.layer_irrelevant_basis.shape
        self.irrelevant_basis = frozen(self.layer_irrelevant_basis.reshape(L * D, q) / np.sqrt(L))
        self.centers = {k: frozen(v) for k, v in centers.items()}
        self.roles = dict(roles)
        self.family_of = dict(family_of)
        self.family_profiles = frozen(family_profiles)
        self.profiles = {k: self.family_profiles[f] for k, f in self.family_of.items()}
        self.active_directions = {f: tuple(v) for f, v in active_directions.items()}
        self.renderer = frozen(renderer)

    def __repr__(self):
        return "World(seed=%i, S=%i, U=%i, L=%i, D=%i, q=%i)" % (
            self.spec.seed, self.spec.n_seen, self.spec.n_unseen,
            self.spec.layers, self.spec.dims, self.spec.q)

    @property
    def shape(self):
        return (self.spec.layers, self.spec.dims)

    def seen_ids(self):
        return sorted(c for c, r in self.roles.items() if r == SEEN)

    def unseen_ids(self):
        return sorted(c for c, r in self.roles.items() if r == UNSEEN)

    def family_members(self, family, role=None):
        return sorted(c for c, f in self.family_of.items()
                      if f == family and (role is None or self.roles[c] == role))


def category_ids(prefix, count):
    """ Zero-padded ids that sort lexicographically in numeric order """
    width = max(2, len(str(max(count - 1, 0))))
    return ['%s_%0*d' % (prefix, width, i) for i in range(count)]


def make_world(spec):
    """ Build a world deterministically from its spec.

    Args:
        spec (WorldSpec): world parameters

    Returns:
        World
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    L, D, q, r = spec.layers, spec.dims, spec.q, spec.relevant_rank

    relevant = np.empty((L, D, r))
    irrelevant = np.empty((L, D, q))
    complement = np.empty((L, D, D - r - q))
    for ell in range(L):
        # Sign-fixed QR of a Gaussian matrix gives a uniformly random rotation.
        qmat, rmat = np.linalg.qr(rng.standard_normal((D, D)))
        qmat = qmat * np.where(np.diag(rmat) < 0, -1.0, 1.0)
        relevant[ell] = qmat[:, :r]
        irrelevant[ell] = qmat[:, r:r + q]
        complement[ell] = qmat[:, r + q:]

    v = irrelevant.reshape(L * D, q) / np.sqrt(L)

    seen = category_ids('seen', spec.n_seen)
    unseen = category_ids('unseen', spec.n_unseen)
    family_of = {cat_id: k % spec.families for k, cat_id in enumerate(seen)}
    if spec.unseen_family < 0:
        family_of.update({cat_id: k % spec.families for k, cat_id in enumerate(unseen)})
    else:
        family_of.update({cat_id: spec.unseen_family for cat_id in unseen})
    roles = {cat_id: SEEN for cat_id in seen}
    roles.update({cat_id: UNSEEN for cat_id in unseen})

    family_coords = rng.standard_normal((spec.families, L, r))
    centers = {}
    for cat_id in seen + unseen:
        spread = spec.family_spread if roles[cat_id] == SEEN else spec.unseen_spread
        coords = family_coords[family_of[cat_id]] + spread * rng.standard_normal((L, r))
        center = spec.center_scale * np.einsum('ldr,lr->ld', relevant, coords)
        # Remove any component along V so orthogonality holds to rounding.
        flat = center.reshape(-1)
        flat = flat - v @ (v.T @ flat)
        centers[cat_id] = flat.reshape(L, D)

    family_profiles = np.empty((spec.families, q))
    active_directions = {}
    for f in range(spec.families):
        active = np.sort(rng.choice(q, size=spec.active_dims, replace=False))
        profile = spec.activation_scale * INACTIVE_FRACTION * rng.uniform(0.5, 1.0, size=q)
        profile[active] = spec.activation_scale * rng.uniform(0.5, 1.0, size=spec.active_dims)
        family_profiles[f] = profile
        active_directions[f] = [int(a) for a in active]

    renderer = rng.standard_normal((spec.feature_dim, L * D)) / np.sqrt(L * D)

    world = World(spec, relevant, irrelevant, complement, centers, roles, family_of,
                  family_profiles, active_directions, renderer)
    logger.debug('Built %r' % world)
    return world


def sample_category(world, cat_id, n, rng):
    """ Draw n codes of one category: center + V diag(s) eps + noise """
    L, D = world.shape
    s = world.profiles[cat_id]
    eps = rng.standard_normal((n, world.spec.q))
    deviation = ((eps * s) @ world.irrelevant_basis.T).reshape(n, L, D)
    noise = world.spec.noise_scale * rng.standard_normal((n, L, D))
    return world.centers[cat_id] + deviation + noise


def sample_library(world, n_per_seen, n_per_unseen, seed):
    """ Sample a CategoryLibrary from the world.

    Args:
        world (World)
        n_per_seen (int): codes per seen category
        n_per_unseen (int): codes per unseen category
        seed (int): sampling seed

    Returns:
        CategoryLibrary
    """
    if n_per_seen < 1 or (world.unseen_ids() and n_per_unseen < 1):
        raise InvalidInputError("Sample counts must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([world.spec.seed, int(seed)]))
    codes = {}
    for cat_id in sorted(world.roles):
        n = n_per_seen if world.roles[cat_id] == SEEN else n_per_unseen
        codes[cat_id] = sample_category(world, cat_id, n, rng)
    metadata = {'world': world.spec.to_dict(), 'sample_seed': int(seed),
                'n_per_seen': int(n_per_seen), 'n_per_unseen': int(n_per_unseen)}
    return CategoryLibrary(world.spec.layers, world.spec.dims, codes, dict(world.roles), metadata)


def toy_render(world, w):
    """ Toy generator G: feature = W_G * vec(w).

    Args:
        w (np.array): (L, D) code, or (N, L, D) batch

    Returns:
        (P,) feature vector, or (N, P) for a batch
    """
    w = as_array(w, name='latent code')
    L, D = world.shape
    if w.ndim == 2:
        check_shape(w, (L, D), name='latent code')
        return world.renderer @ w.reshape(-1)
    if w.ndim == 3:
        check_shape(w, (w.shape[0], L, D), name='latent batch')
        return w.reshape(w.shape[0], -1) @ world.renderer.T
    raise InvalidInputError("latent code must be (L, D) or (N, L, D)")


def toy_render_adjoint(world, r):
    """ Adjoint of toy_render: reshape(W_G^T r).

    Args:
        r (np.array): (P,) feature vector, or (N, P) batch

    Returns:
        (L, D) gradient, or (N, L, D) for a batch
    """
    r = as_array(r, name='feature vector')
    L, D = world.shape
    P = world.spec.feature_dim
    if r.ndim == 1:
        check_shape(r, (P,), name='feature vector')
        return (world.renderer.T @ r).reshape(L, D)
    if r.ndim == 2:
        check_shape(r, (r.shape[0], P), name='feature batch')
        return (r @ world.renderer).reshape(r.shape[0], L, D)
    raise InvalidInputError("feature vector must be (P,) or (N, P)")


def simulate_inversion(w, eta, seed):
    """ Stand-in for GAN inversion loss: w + eta * g, g ~ N(0, I).

    Args:
        w (np.array): code (L, D) or batch (N, L, D)
        eta (float): noise level, >= 0
        seed (int): noise seed
    """
    if eta < 0:
        raise InvalidInputError("eta must be >= 0, got %g" % eta)
    w = as_array(w, name='latent code')
    if eta == 0:
        return w.copy()
    rng = np.random.default_rng(int(seed))
    return w + eta * rng.standard_normal(w.shape)


def oracle_dictionary(world, n_atoms=None, partition=None):
    """ Ground-truth irrelevant dictionary of a world.

    The first q atoms of every layer are that layer's irrelevant directions
    (atom j matches V column j); the rest are taken from the complement, which
    is orthogonal to both the relevant and the irrelevant subspace.

    Args:
        n_atoms (int): atom count l, q <= l <= D - relevant_rank (default: all available)
        partition (GroupPartition): layer groups (default: default_partition(L))

    Returns:
        IrrelevantDictionary
    """
    from .factorization import IrrelevantDictionary, default_partition

    L, D = world.shape
    q, r = world.spec.q, world.spec.relevant_rank
    if n_atoms is None:
        n_atoms = D - r
    if not q <= n_atoms <= D - r:
        raise InvalidInputError("oracle dictionary needs q <= n_atoms <= D - relevant_rank")
    atoms = np.concatenate([world.layer_irrelevant_basis,
                            world.complement_basis[:, :, :n_atoms - q]], axis=2)
    if partition is None:
        partition = default_partition(L)
    return IrrelevantDictionary(atoms, partition)


def render_image(world, w, shape=None, scale=0.1):
    """ Render a code to an H x W x C image grid in [0, 1].

    Pixel values are 0.5 + scale * feature, clipped.

    Args:
        shape (tuple): (H, W, C) with H*W*C == P; default square single channel
    """
    feature = toy_render(world, w)
    P = world.spec.feature_dim
    if shape is None:
        side = int(round(np.sqrt(P)))
        if side * side != P:
            raise InvalidInputError("feature_dim %i is not square, give an explicit shape" % P)
        shape = (side, side, 1)
    if int(np.prod(shape)) != P:
        raise InvalidInputError("image shape %s does not hold %i features" % (tuple(shape), P))
    return np.clip(0.5 + scale * feature.reshape(shape), 0.0, 1.0)
