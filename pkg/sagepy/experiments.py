"""
# experiments.py

Desk-scale experiments on a synthetic world: augmentation accuracy of the
baseline and stable generators, manipulation-intensity and t_B ablations,
fusion compensation trials, frequency-band sensitivity, over-editing drift
and the embedding-denoising trial.

Every experiment is deterministic in its seed. Results are pandas DataFrames
(or small dataclasses) ready for CSV export.
"""
import logging
from dataclasses import dataclass, asdict, replace

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.neighbors import NearestCentroid

from . import generation as gen
from .errors import InvalidInputError
from .factorization import FactorizationModel, expand_edit
from .fusion import FusionConfig, frequency_decompose, frequency_fuse, gaussian_lowpass
from .latent import build_relevant_dictionary, class_embedding
from .metrics import nas
from .utils import spawn_rng
from .world import oracle_dictionary, render_image, sample_category, simulate_inversion, toy_render

logger = logging.getLogger(__name__)

FEATURE_SPACES = ('feature', 'latent')


@dataclass(frozen=True)
class EvalConfig:
    """ Evaluation protocol sizes. """
    shots: int = 10
    n_generated: int = 100
    n_test: int = 50
    eta: float = 0.3
    feature_space: str = 'feature'

    def validate(self):
        if self.shots < 1 or self.n_generated < 1 or self.n_test < 1:
            raise InvalidInputError("shots, n_generated and n_test must be >= 1")
        if self.eta < 0:
            raise InvalidInputError("eta must be >= 0")
        if self.feature_space not in FEATURE_SPACES:
            raise InvalidInputError("feature_space must be one of %s" % (FEATURE_SPACES,))
        return self

    def to_dict(self):
        return asdict(self)


def derive_seed(seed, *keys):
    """ Integer seed of the sub-stream (seed, *keys) """
    return int(spawn_rng(seed, *keys).integers(0, 2 ** 31 - 1))


def features(world, codes, space='feature'):
    """ Rendered features (N, P) or flattened codes (N, L*D) """
    codes = np.asarray(codes, dtype=np.float64)
    if space == 'feature':
        return toy_render(world, codes)
    if space == 'latent':
        return codes.reshape(codes.shape[0], -1)
    raise InvalidInputError("Unknown feature space %r" % space)


def oracle_model(world, library, n_atoms=None):
    """ Encoder-free model around the world's ground-truth irrelevant dictionary """
    return FactorizationModel.from_dictionaries(oracle_dictionary(world, n_atoms),
                                                build_relevant_dictionary(library))


def unseen_splits(world, shots, n_test, seed):
    """ Fresh real-train and test codes for every unseen category """
    train, test = {}, {}
    for i, cat_id in enumerate(world.unseen_ids()):
        rng = spawn_rng(seed, 1, i)
        train[cat_id] = sample_category(world, cat_id, shots, rng)
        test[cat_id] = sample_category(world, cat_id, n_test, rng)
    if not train:
        raise InvalidInputError("The world has no unseen categories")
    return train, test


def age_outputs(shots, model, gaussian, alpha, count, seed):
    """ Baseline outputs spread round-robin over the (inverted) shots """
    chunks = []
    for k in range(min(len(shots), count)):
        n = len(range(k, count, len(shots)))
        chunks.append(gen.age_generate(shots[k], model.atoms, gaussian, alpha, n, derive_seed(seed, k)))
    return np.concatenate(chunks)


def nas_experiment(world, model, library, edit_cfg, eval_cfg, seed, methods=('age', 'sage')):
    """ Nearest-centroid accuracy with baseline and stable augmentation.

    Real-train features come from the true shots; generators only see the
    shots after simulated inversion (eta).

    Returns:
        dict: method -> NasReport, each carrying the shared standard accuracy
    """
    eval_cfg.validate()
    edit_cfg = replace(edit_cfg, shots=eval_cfg.shots)
    space = eval_cfg.feature_space
    real, test = unseen_splits(world, eval_cfg.shots, eval_cfg.n_test, seed)
    inverted = {c: simulate_inversion(real[c], eval_cfg.eta, derive_seed(seed, 2, i))
                for i, c in enumerate(sorted(real))}

    generated = {m: {} for m in methods}
    seen_gaussian = gen.seen_code_gaussian(model.atoms, library, model) if 'age' in methods else None
    for i, cat_id in enumerate(sorted(real)):
        cat_seed = derive_seed(seed, 3, i)
        for method in methods:
            if method == 'sage':
                codes = gen.sage_pipeline(inverted[cat_id], model, library, edit_cfg,
                                          eval_cfg.n_generated, cat_seed).outputs
            elif method == 'sage-multi':
                codes = gen.multi_tb_generate(inverted[cat_id], model, library, edit_cfg,
                                              eval_cfg.n_generated, cat_seed)
            elif method == 'age':
                codes = age_outputs(inverted[cat_id], model, seen_gaussian, edit_cfg.alpha,
                                    eval_cfg.n_generated, cat_seed)
            else:
                raise InvalidInputError("Unknown generation method %r" % method)
            generated[method][cat_id] = features(world, codes, space)

    real_f = {c: features(world, real[c], space) for c in real}
    test_f = {c: features(world, test[c], space) for c in test}
    reports = {m: nas(real_f, generated[m], test_f, seed) for m in methods}
    for m, r in reports.items():
        logger.info('NAS %s: standard %.4f augmented %.4f' % (m, r.standard_acc, r.augmented_acc))
    return reports


def nas_sign_test(world, model, library, edit_cfg, eval_cfg, seeds):
    """ Repeat nas_experiment over seeds and test SAGE >= AGE with a one-sided sign test.

    Returns:
        (DataFrame of per-seed accuracies, p-value)
    """
    rows = []
    for seed in seeds:
        reports = nas_experiment(world, model, library, edit_cfg, eval_cfg, seed)
        rows.append({'seed': seed, 'standard_acc': reports['sage'].standard_acc,
                     'age_acc': reports['age'].augmented_acc, 'sage_acc': reports['sage'].augmented_acc})
    table = pd.DataFrame(rows, columns=['seed', 'standard_acc', 'age_acc', 'sage_acc'])
    diff = (table['sage_acc'] - table['age_acc']).to_numpy()
    wins, losses = int(np.sum(diff > 0)), int(np.sum(diff < 0))
    if wins + losses == 0:
        return table, 1.0
    return table, float(stats.binomtest(wins, wins + losses, 0.5, alternative='greater').pvalue)


def alpha_ablation(world, model, library, alphas, edit_cfg, eval_cfg, seed):
    """ Augmented accuracy of stable generation for every manipulation intensity """
    rows = []
    for alpha in alphas:
        report = nas_experiment(world, model, library, replace(edit_cfg, alpha=float(alpha)),
                                eval_cfg, seed, methods=('sage',))['sage']
        rows.append((float(alpha), report.standard_acc, report.augmented_acc))
    return pd.DataFrame(rows, columns=['alpha', 'standard_acc', 'augmented_acc'])


def tb_ablation(world, model, library, t_bs, edit_cfg, eval_cfg, seed):
    """ Augmented accuracy and embedding error for every t_B """
    real, _ = unseen_splits(world, eval_cfg.shots, 1, seed)
    rows = []
    for t_b in t_bs:
        bf = gen.reduce_relevant(model.relevant, t_b)
        errors = [np.linalg.norm(gen.estimate_class_embedding(real[c], bf) - world.centers[c]) for c in sorted(real)]
        report = nas_experiment(world, model, library, replace(edit_cfg, t_b=int(t_b)),
                                eval_cfg, seed, methods=('sage',))['sage']
        rows.append((int(t_b), report.augmented_acc, float(np.mean(errors))))
    return pd.DataFrame(rows, columns=['t_b', 'augmented_acc', 'embedding_error'])


def embedding_error_trial(world, relevant, shots, t_b, seed):
    """ Distance to the true center of the projected estimate and of the raw shot mean.

    Args:
        relevant (RelevantDictionary): B from the seen categories
        shots (int): K
        t_b (int)
        seed (int): picks the unseen category and draws the shots

    Returns:
        (projected_error, mean_error)
    """
    unseen = world.unseen_ids()
    if not unseen:
        raise InvalidInputError("The world has no unseen categories")
    rng = spawn_rng(seed, 4)
    cat_id = unseen[int(rng.integers(len(unseen)))]
    samples = sample_category(world, cat_id, shots, rng)
    e_hat = gen.estimate_class_embedding(samples, gen.reduce_relevant(relevant, t_b))
    center = world.centers[cat_id]
    return float(np.linalg.norm(e_hat - center)), float(np.linalg.norm(class_embedding(samples) - center))


def category_drift(world, model, library, edit_cfg, count, seed, shots=3):
    """ Category-relevant drift of stable outputs against the baseline.

    The baseline starts from the sample of each unseen category lying
    farthest from that category's estimated embedding.

    Returns:
        DataFrame with columns category, sage_drift, age_drift
    """
    edit_cfg = replace(edit_cfg, shots=shots)
    real, _ = unseen_splits(world, shots, 1, seed)
    seen_gaussian = gen.seen_code_gaussian(model.atoms, library, model)
    rows = []
    for i, cat_id in enumerate(sorted(real)):
        result = gen.sage_pipeline(real[cat_id], model, library, edit_cfg, count, derive_seed(seed, 5, i))
        bf = gen.reduce_relevant(model.relevant, result.t_b)
        far = real[cat_id][int(np.argmax(np.linalg.norm((real[cat_id] - result.embedding).reshape(shots, -1), axis=1)))]
        age = gen.age_generate(far, model.atoms, seen_gaussian, edit_cfg.alpha, count, derive_seed(seed, 6, i))
        rows.append((cat_id, gen.relevant_drift(result.outputs, result.embedding, bf),
                     gen.relevant_drift(age, result.embedding, bf)))
    return pd.DataFrame(rows, columns=['category', 'sage_drift', 'age_drift'])


def _mse(a, b):
    return float(np.mean((a - b) ** 2))


def fusion_experiment(world, trials, eta, alpha, fusion_cfg=None, seed=0, shape=None, scale=0.1):
    """ Low-band error to the real image of the edited image and of the fused image.

    Each trial renders a real code, its simulated inversion and an edit of the
    inversion along the world's irrelevant directions. Both errors compare
    low-passed images; the fused image is clamped first, as frequency_fuse returns it.

    Returns:
        DataFrame with columns trial, category, edited_mse, fused_mse, pixel_mse
    """
    fusion_cfg = fusion_cfg or FusionConfig()
    atoms = oracle_dictionary(world)
    cats = world.unseen_ids() or world.seen_ids()
    rows = []
    for t in range(trials):
        rng = spawn_rng(seed, 7, t)
        cat_id = cats[t % len(cats)]
        w = sample_category(world, cat_id, 1, rng)[0]
        inv = simulate_inversion(w, eta, derive_seed(seed, 8, t))
        edit = alpha * expand_edit(atoms, rng.standard_normal(atoms.code_shape))

        real_img = render_image(world, w, shape, scale)
        inv_img = render_image(world, inv, shape, scale)
        edited_img = render_image(world, inv + edit, shape, scale)
        fused = frequency_fuse(real_img, inv_img, edited_img, fusion_cfg)

        target = gaussian_lowpass(real_img, fusion_cfg.sigma_lp)
        rows.append((t, cat_id,
                     _mse(gaussian_lowpass(edited_img, fusion_cfg.sigma_lp), target),
                     _mse(gaussian_lowpass(fused, fusion_cfg.sigma_lp), target),
                     _mse(fused, real_img)))
    return pd.DataFrame(rows, columns=['trial', 'category', 'edited_mse', 'fused_mse', 'pixel_mse'])


def band_accuracy(world, library, sigma, n_test, seed, shape=None, scale=0.1):
    """ Nearest-centroid accuracy on full, low-band and high-band images.

    Centroids come from the library's rendered images; test images are fresh
    samples of the same categories.

    Returns:
        dict: band -> accuracy
    """
    cats = library.ids()
    images = {'full': ([], []), 'low': ([], []), 'high': ([], [])}

    def add(split, cat_id, code):
        img = render_image(world, code, shape, scale)
        low, high = frequency_decompose(img, sigma)
        for band, x in (('full', img), ('low', low), ('high', high)):
            images[band][split].append((cat_id, x.reshape(-1)))

    for i, cat_id in enumerate(cats):
        for code in library.codes(cat_id):
            add(0, cat_id, code)
        for code in sample_category(world, cat_id, n_test, spawn_rng(seed, 9, i)):
            add(1, cat_id, code)

    result = {}
    for band, (train, test) in images.items():
        clf = NearestCentroid().fit(np.array([x for _, x in train]), np.array([c for c, _ in train]))
        pred = clf.predict(np.array([x for _, x in test]))
        result[band] = float(np.mean(pred == np.array([c for c, _ in test])))
    return result
