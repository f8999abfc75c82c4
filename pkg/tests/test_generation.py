from sagepy import generation as gen
from sagepy.errors import InvalidInputError
from sagepy.factorization import GroupPartition, IrrelevantDictionary, expand_edit
from sagepy.generation import EditConfig, GaussianModel
from sagepy.latent import CategoryLibrary, RelevantDictionary
from sagepy.world import oracle_dictionary
from sagepy.experiments import oracle_model
from sagepy.utils import top_k_indices
from tests.data import (default_library, default_oracle, default_world, small_library, small_world, trained_model,
                        world_and_library)
import numpy as np
import pytest


def axis_dictionary():
    """ One layer, columns 5 e1, 3 e2, 1 e3 in four dims """
    m = np.zeros((1, 4, 3))
    m[0, 0, 0], m[0, 1, 1], m[0, 2, 2] = 5.0, 3.0, 1.0
    return RelevantDictionary(['a', 'b', 'c'], m)


def small_oracle():
    library = small_library()
    return oracle_model(small_world(), library.subset(role='seen'), n_atoms=4)


def test_reduce_relevant():
    bf = gen.reduce_relevant(axis_dictionary(), 2)
    assert bf.t_b == 2
    assert np.allclose(bf.bases[0], np.eye(4)[:, :2])

    w = np.array([[1.0, 2.0, 3.0, 4.0]])
    assert np.allclose(bf.coordinates(w), [[1.0, 2.0]])
    assert np.allclose(bf.project(w), [[1.0, 2.0, 0.0, 0.0]])

    with pytest.raises(InvalidInputError):
        gen.reduce_relevant(axis_dictionary(), 0)
    with pytest.raises(InvalidInputError):
        gen.reduce_relevant(axis_dictionary(), 4)


def test_estimate_class_embedding():
    bf = gen.reduce_relevant(axis_dictionary(), 2)
    inside = np.array([[[1.0, -2.0, 0.0, 0.0]]])
    assert np.allclose(gen.estimate_class_embedding(inside, bf), inside[0])
    outside = np.array([[[0.0, 0.0, 3.0, 1.0]]])
    assert np.allclose(gen.estimate_class_embedding(outside, bf), 0.0)

    samples = np.random.default_rng(0).standard_normal((3, 1, 4))
    e_hat = gen.estimate_class_embedding(samples, bf)
    assert np.allclose(gen.estimate_class_embedding(e_hat[np.newaxis], bf), e_hat)
    assert np.allclose(e_hat, bf.project(samples.mean(axis=0)))

    with pytest.raises(InvalidInputError):
        gen.estimate_class_embedding([], bf)
    with pytest.raises(InvalidInputError):
        gen.estimate_class_embedding(np.zeros((1, 2, 4)), bf)


def test_back_project():
    world = default_world()
    a = oracle_dictionary(world)
    n = np.random.default_rng(1).standard_normal(a.code_shape)
    assert np.allclose(gen.back_project(a, expand_edit(a, n)), n, atol=1e-10)

    deltas = np.stack([expand_edit(a, n), expand_edit(a, 2 * n)])
    assert np.allclose(gen.back_project_batch(a, deltas)[1], 2 * n, atol=1e-10)
    with pytest.raises(InvalidInputError):
        gen.back_project(a, np.zeros((2, 2)))


def test_query_embedding():
    samples = np.random.default_rng(2).standard_normal((3, 2, 4))
    assert np.allclose(gen.query_embedding(samples), samples.mean(axis=0))
    assert np.allclose(gen.query_embedding(samples[:1]), samples[0])
    assert np.allclose(gen.query_embedding(samples[:1], np.ones((2, 4))), 1.0)


def test_nearest_seen():
    m = np.array([1.0, -1.0, 5.0]).reshape(1, 1, 3)
    b = RelevantDictionary(['x', 'y', 'z'], m)
    # Tie between x and y goes to the smaller id
    assert gen.nearest_seen([[0.0]], b, 2) == ['x', 'y']
    assert gen.nearest_seen([[4.0]], b, 1) == ['z']
    assert gen.nearest_seen([[5.0]], b, 3) == ['z', 'x', 'y']

    b = RelevantDictionary(['y', 'x'], np.array([1.0, -1.0]).reshape(1, 1, 2))
    assert gen.nearest_seen([[0.0]], b, 1) == ['x']

    with pytest.raises(InvalidInputError):
        gen.nearest_seen([[0.0]], b, 3)
    with pytest.raises(InvalidInputError):
        gen.nearest_seen([[0.0]], b, 0)


def saliency_setup():
    atoms = np.zeros((1, 3, 2))
    atoms[0, 0, 0] = atoms[0, 1, 1] = 1.0
    a = IrrelevantDictionary(atoms, GroupPartition([(0, 1)]))
    codes = {'a': np.array([[[1.0, 0.0, 0.0]], [[-1.0, 0.0, 0.0]]]),
             'b': np.array([[[0.0, 2.0, 0.0]], [[0.0, -2.0, 0.0]]]),
             'u': np.array([[[0.0, 0.0, 1.0]], [[0.0, 0.0, 2.0]]])}
    library = CategoryLibrary(1, 3, codes, {'a': 'seen', 'b': 'seen', 'u': 'unseen'})
    return a, library


def test_direction_saliency():
    a, library = saliency_setup()
    assert np.allclose(gen.direction_saliency(a, library, None, ['a']), [[1.0, 0.0]])
    assert np.allclose(gen.direction_saliency(a, library, None, ['a', 'b']), [[0.5, 1.0]])

    with pytest.raises(InvalidInputError):
        gen.direction_saliency(a, library, None, [])
    with pytest.raises(InvalidInputError):
        gen.direction_saliency(a, library, None, ['zzz'])
    with pytest.raises(InvalidInputError):
        gen.direction_saliency(a, library, None, ['u'])


def test_adapt_dictionary():
    rng = np.random.default_rng(3)
    a = IrrelevantDictionary(rng.standard_normal((3, 5, 3)), GroupPartition([(0, 1), (1, 3)]))
    ad = gen.adapt_dictionary(a, [[0.1, 0.9, 0.5], [1.0, 1.0, 1.0]], 2)
    assert ad.indices.tolist() == [[1, 2], [0, 1]]
    assert ad.t_a == 2
    assert np.array_equal(ad.matrices[0], a.atoms[0][:, [1, 2]])
    assert np.array_equal(ad.matrices[2], a.atoms[2][:, [0, 1]])

    with pytest.raises(InvalidInputError):
        gen.adapt_dictionary(a, np.ones((2, 3)), 0)
    with pytest.raises(InvalidInputError):
        gen.adapt_dictionary(a, np.ones((2, 3)), 4)
    with pytest.raises(InvalidInputError):
        gen.adapt_dictionary(a, np.ones((3, 3)), 1)


def test_fit_code_gaussian():
    gm = gen.fit_code_gaussian(np.array([[[0.0, 0.0]], [[2.0, 2.0]]]))
    assert np.allclose(gm.mean, [[1.0, 1.0]])
    assert np.allclose(gm.var, [[2.0, 2.0]])
    assert gm.count == 2
    with pytest.raises(InvalidInputError):
        gen.fit_code_gaussian(np.zeros((1, 1, 2)))
    with pytest.raises(InvalidInputError):
        GaussianModel(np.zeros((1, 2)), -np.ones((1, 2)), 2)


def generation_setup():
    rng = np.random.default_rng(4)
    a = IrrelevantDictionary(rng.standard_normal((3, 6, 4)), GroupPartition([(0, 1), (1, 3)]))
    ad = gen.adapt_dictionary(a, rng.random((2, 4)), 2)
    gm = GaussianModel(rng.standard_normal((2, 4)), rng.random((2, 4)), 10)
    e_hat = rng.standard_normal((3, 6))
    return a, ad, gm, e_hat


def test_sage_generate():
    a, ad, gm, e_hat = generation_setup()
    out = gen.sage_generate(e_hat, ad, gm, 0.0, 5, seed=1)
    assert out.shape == (5, 3, 6)
    assert np.all(out == e_hat)

    first = gen.sage_generate(e_hat, ad, gm, 2.0, 5, seed=1)
    second = gen.sage_generate(e_hat, ad, gm, 2.0, 5, seed=1)
    assert np.array_equal(first, second)
    assert not np.array_equal(first[0], first[1])
    assert not np.array_equal(first, gen.sage_generate(e_hat, ad, gm, 2.0, 5, seed=2))

    # Each output has its own sub-stream
    single = gen.sage_generate(e_hat, ad, gm, 2.0, 1, seed=1, indices=[3])
    assert np.array_equal(single[0], first[3])

    # Zero variance gives identical outputs at the Gaussian mean
    flat = GaussianModel(gm.mean, np.zeros_like(gm.var), 10)
    out = gen.sage_generate(e_hat, ad, flat, 2.0, 3, seed=1)
    assert np.allclose(out[0], out[1]) and np.allclose(out[1], out[2])

    # Only the layers of the selected group move
    out = gen.sage_generate(e_hat, ad, gm, 2.0, 3, seed=1, groups=[1])
    assert np.all(out[:, 0] == e_hat[0])
    assert not np.allclose(out[:, 1], e_hat[1])

    with pytest.raises(InvalidInputError):
        gen.sage_generate(e_hat, ad, gm, 2.0, 0, seed=1)
    with pytest.raises(InvalidInputError):
        gen.sage_generate(e_hat, ad, gm, 2.0, 3, seed=1, groups=[2])
    with pytest.raises(InvalidInputError):
        gen.sage_generate(e_hat, ad, gm, 2.0, 3, seed=1, indices=[0])
    with pytest.raises(InvalidInputError):
        gen.sage_generate(e_hat[:2], ad, gm, 2.0, 3, seed=1)


def test_age_generate():
    a, _, gm, w = generation_setup()
    assert np.all(gen.age_generate(w, a, gm, 0.0, 4, seed=0) == w)
    out = gen.age_generate(w, a, gm, 1.0, 4, seed=0)
    assert out.shape == (4, 3, 6)
    assert np.array_equal(out, gen.age_generate(w, a, gm, 1.0, 4, seed=0))
    with pytest.raises(InvalidInputError):
        gen.age_generate(w, a, gm, 1.0, 0, seed=0)


def test_edit_config():
    cfg = EditConfig()
    assert cfg.resolve_t_c(50) == 30
    assert EditConfig(shots=3).resolve_t_c(50) == 20
    assert cfg.resolve_t_c(8) == 8
    assert EditConfig(t_c=5).resolve_t_c(50) == 5
    assert cfg.resolve_t_a(24) == 12
    assert EditConfig(t_a=3).resolve_t_a(24) == 3
    assert EditConfig(t_b=[8, 10]).t_b_values() == [8, 10]
    for bad in (dict(alpha=-1.0), dict(t_b=0), dict(t_b=[]), dict(t_c=0), dict(shots=0)):
        with pytest.raises(InvalidInputError):
            EditConfig(**bad).validate()


def test_sage_pipeline():
    library = small_library()
    model = small_oracle()
    seen = library.subset(role='seen')
    samples = library.codes('unseen_00')[:1]
    cfg = EditConfig(t_b=4, t_c=3)
    result = gen.sage_pipeline(samples, model, seen, cfg, 6, seed=3)
    assert result.outputs.shape == (6, 3, 12)
    assert len(result.neighbours) == 3
    assert result.adaptive.t_a == 2
    assert result.t_b == 4
    assert result.provenance['method'] == 'sage'

    still = gen.sage_pipeline(samples, model, seen, EditConfig(t_b=4, t_c=3, alpha=0.0), 6, seed=3)
    assert np.all(still.outputs == still.embedding)
    assert np.array_equal(still.embedding, result.embedding)

    again = gen.sage_pipeline(samples, model, seen, cfg, 6, seed=3)
    assert np.array_equal(again.outputs, result.outputs)


def test_multi_tb_generate():
    library = small_library()
    model = small_oracle()
    seen = library.subset(role='seen')
    samples = library.codes('unseen_01')[:3]

    cfg = EditConfig(t_b=[4], t_c=3, shots=3)
    single = gen.sage_pipeline(samples, model, seen, EditConfig(t_b=4, t_c=3, shots=3), 5, seed=7)
    assert np.array_equal(gen.multi_tb_generate(samples, model, seen, cfg, 5, seed=7), single.outputs)

    cfg = EditConfig(t_b=[3, 5], t_c=3, shots=3)
    out = gen.multi_tb_generate(samples, model, seen, cfg, 5, seed=7)
    assert out.shape == (5, 3, 12)
    first = gen.sage_pipeline(samples, model, seen, cfg, 3, seed=7, t_b=3, indices=[0, 2, 4])
    assert np.array_equal(out[:3], first.outputs)
    assert np.array_equal(gen.sage_multi(samples, model, seen, cfg, 5, seed=7), out)
    with pytest.raises(InvalidInputError):
        gen.multi_tb_generate(samples, model, seen, cfg, 1, seed=7)


def test_salient_directions():
    a, _, _, w = generation_setup()
    u, s = gen.salient_editing_directions(a)
    assert u.shape == (3, 6, 4) and s.shape == (3, 4)
    for ell in range(3):
        assert np.allclose(u[ell].T @ u[ell], np.eye(4), atol=1e-10)
        assert np.all(np.diff(s[ell]) <= 0)

    d = gen.group_direction(a, 1, 0)
    assert np.all(d[0] == 0)
    assert np.allclose(np.linalg.norm(d[1:], axis=1), 1.0)
    moved = gen.apply_direction(w, d, 1.5)
    assert np.allclose(gen.apply_direction(moved, d, -1.5), w)

    with pytest.raises(InvalidInputError):
        gen.group_direction(a, 2, 0)
    with pytest.raises(InvalidInputError):
        gen.group_direction(a, 0, 4)


def test_relevant_drift():
    bf = gen.reduce_relevant(axis_dictionary(), 2)
    e_hat = np.array([[3.0, 4.0, 0.0, 0.0]])
    assert gen.relevant_drift(np.stack([e_hat, e_hat]), e_hat, bf) == 0.0
    moved = e_hat + np.array([[0.0, 0.0, 7.0, 0.0]])
    assert np.isclose(gen.relevant_drift(moved[np.newaxis], e_hat, bf), 0.0, atol=1e-12)
    moved = e_hat + np.array([[1.0, 0.0, 0.0, 0.0]])
    assert np.isclose(gen.relevant_drift(moved[np.newaxis], e_hat, bf), 0.2)
    with pytest.raises(InvalidInputError):
        gen.relevant_drift(moved[np.newaxis], np.zeros((1, 4)), bf)


def test_family_neighbours():
    world, library, model = default_world(), default_library(), default_oracle()
    seen = library.subset(role='seen')
    for cat_id in world.unseen_ids():
        family = world.family_of[cat_id]
        result = gen.sage_pipeline(library.codes(cat_id)[:1], model, seen, EditConfig(t_c=3), 4, seed=0)
        assert all(world.family_of[c] == family for c in result.neighbours), cat_id


def test_saliency_finds_active_directions():
    world, library, model = default_world(), default_library(), default_oracle()
    k = world.spec.active_dims
    for family, active in world.active_directions.items():
        cats = world.family_members(family, role='seen')
        sal = gen.direction_saliency(model.atoms, library, model, cats)
        for g in range(model.partition.n_groups):
            assert top_k_indices(sal[g], k).tolist() == list(active), (family, g)

def test_trained_saliency_finds_active_directions():
    aligned = 0
    for seed in range(11, 21):
        world, library = world_and_library(seed)
        model = trained_model(seed)
        family = world.family_of[world.unseen_ids()[0]]
        active = list(world.active_directions[family])
        sal = gen.direction_saliency(model.atoms, library, model, world.family_members(family, role='seen'))
        found = True
        for g in range(model.partition.n_groups):
            layers = model.partition.layers(g)
            atoms = model.atoms.atoms[layers].reshape(-1, model.atoms.n_atoms)
            atoms = atoms / np.linalg.norm(atoms, axis=0)
            truth = world.layer_irrelevant_basis[layers][:, :, active].reshape(-1, len(active))
            truth = truth / np.linalg.norm(truth, axis=0)
            cos = np.abs(truth.T @ atoms[:, top_k_indices(sal[g], len(active))])
            found = found and bool(np.all(cos.max(axis=1) > 0.8))
        aligned += found
    assert aligned >= 9



if __name__ == "__main__":
    test_reduce_relevant()
    test_estimate_class_embedding()
    test_back_project()
    test_query_embedding()
    test_nearest_seen()
    test_direction_saliency()
    test_adapt_dictionary()
    test_fit_code_gaussian()
    test_sage_generate()
    test_age_generate()
    test_edit_config()
    test_sage_pipeline()
    test_multi_tb_generate()
    test_salient_directions()
    test_relevant_drift()
    test_family_neighbours()
    test_saliency_finds_active_directions()
    test_trained_saliency_finds_active_directions()
