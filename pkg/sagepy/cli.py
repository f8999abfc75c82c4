#!/usr/bin/env python
"""
# cli.py

Command line tool tying the pipeline together.

    sagetool synth --config c.json --seed 7 --out lib.sagl
    sagetool train lib.sagl --config c.json --out model.sagm
    sagetool generate model.sagm lib.sagl --method sage --count 100 --seed 1 --out gen.sagl
    sagetool eval --train lib.sagl --shots 10 --test test.sagl --generated gen.sagl --nas nas.csv
    sagetool fuse-freq real.pgm inv.pgm edited.pgm --out fused.pgm
    sagetool inspect model.sagm

Exit status: 0 success, 2 usage error, 3 invalid configuration, 4 file error,
5 invalid input, 6 training diverged.
"""
import json
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from . import experiments
from . import generation as gen
from .config import config_from_dict, config_to_dict, load_config
from .errors import ConfigError, FormatError, InvalidInputError, TrainingDivergedError
from .factorization import train
from .fusion import combined_fuse, frequency_fuse, pixel_fuse
from .io import binary, tables
from .io.archive import read_archive, write_archive
from .io.file_wrapper import describe
from .io.images import read_image, write_image
from .io.model_file import read_model, write_model
from .latent import UNSEEN
from .metrics import frechet, intra_diversity, nas, pca2d
from .world import make_world, sample_library

#------
# Logging set up
import logging
logger = logging.getLogger(__name__)

level_log = logging.INFO


def log_format(level):
    """ Console stream and record format for a log level """
    if level == logging.INFO:
        return sys.stdout, '%(name)-15s %(levelname)-8s %(message)s'
    return sys.stderr, '%(relativeCreated)5d %(name)-15s %(levelname)-8s %(message)s'


stream, format = log_format(level_log)
console = logging.StreamHandler(stream)
console.setFormatter(logging.Formatter(format))
logging.basicConfig(level=level_log, handlers=[console])


def set_log_level(level):
    """ Switch the package log level and the console stream and format with it """
    stream, format = log_format(level)
    console.setStream(stream)
    console.setFormatter(logging.Formatter(format))
    logging.getLogger('sagepy').setLevel(level)
#------

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FILE = 4
EXIT_INPUT = 5
EXIT_DIVERGED = 6

METHODS = ('age', 'sage', 'sage-multi')


def int_list(text):
    """ '8,10,12' -> [8, 10, 12] """
    try:
        values = [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise InvalidInputError("Expected a comma separated list of integers, got %r" % text)
    if not values:
        raise InvalidInputError("Empty integer list")
    return values


def write_json(filename, doc):
    logger.info('Writing file : %s' % filename)
    binary.atomic_write(filename, (json.dumps(doc, sort_keys=True, indent=2) + '\n').encode('utf-8'))


def load_world(filename=None, *metadata):
    """ World from a JSON spec file, or from the 'world' entry of file metadata """
    if filename:
        if not os.path.isfile(filename):
            raise IOError("No such file or directory: " + filename)
        with open(filename, 'r') as fh:
            try:
                doc = json.load(fh)
            except ValueError as err:
                raise ConfigError("%s is not valid JSON: %s" % (filename, err))
        return make_world(config_from_dict({'world': doc}).world)
    for meta in metadata:
        if isinstance(meta, dict) and isinstance(meta.get('world'), dict):
            return make_world(config_from_dict({'world': meta['world']}).world)
    raise InvalidInputError("No world description found: pass --world")


def target_categories(library, category=None):
    """ The requested category, else the unseen categories, else all """
    if category:
        if category not in library:
            raise InvalidInputError("Unknown category id: %s" % category)
        return [category]
    return library.unseen_ids() or library.ids()


def shot_codes(library, cat_id, shots):
    codes = library.codes(cat_id)
    if shots is None:
        return codes
    if shots < 1 or shots > codes.shape[0]:
        raise InvalidInputError("Category %s has %i codes, cannot take %i shots" % (cat_id, codes.shape[0], shots))
    return codes[:shots]


def cmd_synth(args, cfg):
    world = make_world(cfg.world)
    library = sample_library(world, args.n_seen, args.n_unseen, args.seed)
    write_archive(args.out, library, dict(library.metadata, config=config_to_dict(cfg)))
    write_json(args.world_out or args.out + '.world.json', world.spec.to_dict())
    if args.test_out:
        test = sample_library(world, args.n_test, args.n_test, experiments.derive_seed(args.seed, 1))
        test = test.subset(role=UNSEEN) if world.unseen_ids() else test
        write_archive(args.test_out, test, dict(test.metadata, config=config_to_dict(cfg)))


def cmd_train(args, cfg):
    library = read_archive(args.archive)
    world = load_world(args.world, library.metadata)
    if args.oracle:
        model = experiments.oracle_model(world, library.subset(role='seen'), cfg.train.n_atoms)
        model.config = cfg.train.to_dict()
    else:
        train_cfg = cfg.train
        if args.seed is not None:
            train_cfg = replace(train_cfg, seed=args.seed)
        if args.iterations is not None:
            train_cfg = replace(train_cfg, iterations=args.iterations)
        model = train(library, world, train_cfg)
        if args.plot:
            from .plotting import plot_training_log
            from .plotting.config import plt
            plt.figure("Training", figsize=(8, 6))
            plot_training_log(model.log)
            plt.savefig(args.plot)
            plt.close()
    model.config = dict(model.config, world=world.spec.to_dict(), run=config_to_dict(cfg))
    write_model(args.out, model)


def cmd_embed(args, cfg):
    model = read_model(args.model)
    library = read_archive(args.archive)
    edit = replace(cfg.edit, shots=args.shots or cfg.edit.shots)
    t_b = args.t_b or edit.t_b_values()[0]
    bf = gen.reduce_relevant(model.relevant, t_b)
    t_c = edit.resolve_t_c(model.relevant.n_categories)

    embeddings, rows = {}, []
    for cat_id in target_categories(library, args.category):
        samples = shot_codes(library, cat_id, edit.shots)
        e_hat = gen.estimate_class_embedding(samples, bf)
        embeddings[cat_id] = e_hat
        query = gen.query_embedding(samples, e_hat)
        for rank, seen_id in enumerate(gen.nearest_seen(query, model.relevant, t_c)):
            rows.append((cat_id, rank, seen_id, float(np.linalg.norm(model.relevant.embedding(seen_id) - query))))
        logger.info('%s: embedding norm %.4f' % (cat_id, np.linalg.norm(e_hat)))

    out = library.with_codes(embeddings, {c: library.role(c) for c in embeddings},
                             metadata={'kind': 'embedding', 't_b': t_b, 'shots': edit.shots,
                                       'world': model.config.get('world'), 'config': config_to_dict(cfg)})
    write_archive(args.out, out)
    if args.report:
        tables.write_table(args.report, pd.DataFrame(rows, columns=['category', 'rank', 'neighbour', 'distance']))


def cmd_edit(args, cfg):
    model = read_model(args.model)
    library = read_archive(args.archive)
    cat_id = target_categories(library, args.category)[0]
    w = library.codes(cat_id)[args.index]
    direction = gen.group_direction(model.atoms, args.group, args.direction)
    alpha = cfg.edit.alpha if args.alpha is None else args.alpha
    alphas = np.linspace(-alpha, alpha, args.steps) if args.steps > 1 else np.array([alpha])
    codes = np.stack([gen.apply_direction(w, direction, a) for a in alphas])
    meta = {'method': 'direction', 'category': cat_id, 'index': args.index, 'group': args.group,
            'direction': args.direction, 'alphas': [float(a) for a in alphas],
            'world': model.config.get('world'), 'config': config_to_dict(cfg)}
    write_archive(args.out, library.with_codes({cat_id: codes}, {cat_id: library.role(cat_id)}, meta))


def cmd_generate(args, cfg):
    model = read_model(args.model)
    library = read_archive(args.archive)
    seen = library.subset(role='seen')
    edit = cfg.edit
    if args.alpha is not None:
        edit = replace(edit, alpha=args.alpha)
    if args.t_b is not None:
        edit = replace(edit, t_b=args.t_b if args.method == 'sage-multi' else args.t_b[0])
    if args.t_c is not None:
        edit = replace(edit, t_c=args.t_c)
    if args.t_a is not None:
        edit = replace(edit, t_a=args.t_a)
    shots = args.shots or edit.shots
    edit = replace(edit, shots=shots).validate()
    if args.count < 1:
        raise InvalidInputError("count must be >= 1")

    outputs, provenance = {}, {}
    seen_gaussian = gen.seen_code_gaussian(model.atoms, seen, model) if args.method == 'age' else None
    for i, cat_id in enumerate(target_categories(library, args.category)):
        samples = shot_codes(library, cat_id, shots)
        cat_seed = experiments.derive_seed(args.seed, i)
        if args.method == 'sage':
            result = gen.sage_pipeline(samples, model, seen, edit, args.count, cat_seed)
            outputs[cat_id] = result.outputs
            provenance[cat_id] = {'neighbours': result.neighbours, 'atoms': result.adaptive.indices.tolist()}
        elif args.method == 'sage-multi':
            outputs[cat_id] = gen.multi_tb_generate(samples, model, seen, edit, args.count, cat_seed)
        else:
            outputs[cat_id] = experiments.age_outputs(samples, model, seen_gaussian, edit.alpha, args.count, cat_seed)
        logger.info('Generated %i codes for %s with %s' % (args.count, cat_id, args.method))

    meta = {'method': args.method, 'alpha': edit.alpha, 't_b': edit.t_b,
            't_c': edit.resolve_t_c(model.relevant.n_categories),
            't_a': edit.resolve_t_a(model.atoms.n_atoms), 'seed': args.seed, 'count': args.count,
            'shots': shots, 'categories': provenance, 'world': model.config.get('world'),
            'config': config_to_dict(cfg)}
    write_archive(args.out, library.with_codes(outputs, {c: library.role(c) for c in outputs}, meta))


def cmd_fuse(args, cfg):
    real, inv, edited = read_image(args.real), read_image(args.inv), read_image(args.edited)
    if args.command == 'fuse-pixel':
        fused = pixel_fuse(real, inv, edited, cfg.fusion)
    elif args.combined:
        fused = combined_fuse(real, inv, edited, cfg.fusion)
    else:
        fused = frequency_fuse(real, inv, edited, cfg.fusion)
    write_image(args.out, fused)


def cmd_eval(args, cfg):
    if not (args.metrics or args.nas or args.pca or args.plot):
        raise InvalidInputError("Nothing to do: give --metrics, --nas, --pca or --plot")
    train_lib = read_archive(args.train)
    generated = read_archive(args.generated)
    test = read_archive(args.test) if args.test else None
    space = args.features or cfg.eval.feature_space
    world = None
    if space == 'feature':
        world = load_world(args.world, generated.metadata, train_lib.metadata)

    cats = generated.ids()
    for cat_id in cats:
        if cat_id not in train_lib:
            raise InvalidInputError("Category %s missing from the training archive" % cat_id)

    def feats(lib, cat_id, shots=None):
        return experiments.features(world, shot_codes(lib, cat_id, shots), space)

    real_f = {c: feats(train_lib, c, args.shots) for c in cats}
    gen_f = {c: feats(generated, c) for c in cats}

    if args.metrics:
        reference = real_f
        if test is not None:
            reference = {c: feats(test, c) for c in cats if c in test}
        rows = [('frechet', c, frechet(reference[c], gen_f[c])) for c in cats if c in reference]
        rows.append(('frechet', 'all', frechet(np.concatenate([reference[c] for c in cats if c in reference]),
                                               np.concatenate([gen_f[c] for c in cats]))))
        rows.append(('diversity', 'all', intra_diversity(gen_f)))
        tables.write_table(args.metrics, tables.metrics_table(rows))

    if args.nas:
        if test is None:
            raise InvalidInputError("--nas needs a --test archive")
        report = nas(real_f, gen_f, {c: feats(test, c) for c in cats}, args.seed)
        logger.info('NAS: standard %.4f augmented %.4f' % (report.standard_acc, report.augmented_acc))
        tables.write_table(args.nas, tables.nas_table(report))

    if args.pca or args.plot:
        codes, labels = [], []
        for source, lib, shots in (('real', train_lib, args.shots), ('generated', generated, None)):
            for c in cats:
                block = shot_codes(lib, c, shots)
                codes.append(block.reshape(block.shape[0], -1))
                labels += ['%s:%s' % (source, c)] * block.shape[0]
        points = pca2d(np.concatenate(codes))
        if args.pca:
            tables.write_table(args.pca, tables.pca_table(labels, points))
        if args.plot:
            from .plotting import plot_pca
            from .plotting.config import plt
            plt.figure("PCA", figsize=(8, 6))
            plot_pca(points, labels)
            plt.savefig(args.plot)
            plt.close()


def cmd_inspect(args, cfg):
    for filename in args.files:
        summary = describe(filename)
        print('--- File Info ---')
        print('%16s : %s' % ('filename', filename))
        for key in sorted(summary):
            value = summary[key]
            if isinstance(value, (dict, list)):
                value = json.dumps(value, sort_keys=True)
            print('%16s : %s' % (key, value))


COMMANDS = {
    'synth': cmd_synth,
    'train': cmd_train,
    'embed': cmd_embed,
    'edit': cmd_edit,
    'generate': cmd_generate,
    'fuse-pixel': cmd_fuse,
    'fuse-freq': cmd_fuse,
    'eval': cmd_eval,
    'inspect': cmd_inspect,
}


def build_parser():
    from argparse import ArgumentParser

    parser = ArgumentParser(prog='sagetool',
                            description="Command line utility for latent attribute-group editing experiments.")
    parser.add_argument('-v', '--verbose', action='store_true', default=False, dest='verbose',
                        help='Debug logging on stderr.')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument('-c', '--config', action='store', default=None, dest='config', type=str,
                       help='JSON run configuration (default: built-in defaults)')
        return p

    p = command('synth', 'Sample a latent archive from a synthetic world.')
    p.add_argument('--seed', action='store', default=0, dest='seed', type=int, help='Sampling seed')
    p.add_argument('--n-seen', action='store', default=50, dest='n_seen', type=int,
                   help='Codes per seen category')
    p.add_argument('--n-unseen', action='store', default=20, dest='n_unseen', type=int,
                   help='Codes per unseen category')
    p.add_argument('--test-out', action='store', default=None, dest='test_out', type=str,
                   help='Also write fresh test codes of the unseen categories to this archive')
    p.add_argument('--n-test', action='store', default=50, dest='n_test', type=int,
                   help='Codes per category in the test archive')
    p.add_argument('--world-out', action='store', default=None, dest='world_out', type=str,
                   help='World file (default: <out>.world.json)')
    p.add_argument('-o', '--out', action='store', required=True, dest='out', type=str, help='Output archive')

    p = command('train', 'Learn the irrelevant dictionary and encoder.')
    p.add_argument('archive', type=str, help='Latent archive with seen categories')
    p.add_argument('--world', action='store', default=None, dest='world', type=str,
                   help='World file (default: from the archive metadata)')
    p.add_argument('--seed', action='store', default=None, dest='seed', type=int, help='Training seed')
    p.add_argument('--iterations', action='store', default=None, dest='iterations', type=int)
    p.add_argument('--oracle', action='store_true', default=False, dest='oracle',
                   help="Skip training and use the world's ground-truth dictionary")
    p.add_argument('--plot', action='store', default=None, dest='plot', type=str,
                   help='Save the training curves to this image file')
    p.add_argument('-o', '--out', action='store', required=True, dest='out', type=str, help='Output model')

    p = command('embed', 'Estimate class embeddings of few-shot categories.')
    p.add_argument('model', type=str)
    p.add_argument('archive', type=str, help='Archive holding the few-shot codes')
    p.add_argument('--category', action='store', default=None, dest='category', type=str)
    p.add_argument('--shots', action='store', default=None, dest='shots', type=int)
    p.add_argument('--t-b', action='store', default=None, dest='t_b', type=int)
    p.add_argument('--report', action='store', default=None, dest='report', type=str,
                   help='CSV of the nearest seen categories')
    p.add_argument('-o', '--out', action='store', required=True, dest='out', type=str)

    p = command('edit', 'Move a code along a salient direction of one layer group.')
    p.add_argument('model', type=str)
    p.add_argument('archive', type=str)
    p.add_argument('--category', action='store', default=None, dest='category', type=str)
    p.add_argument('--index', action='store', default=0, dest='index', type=int, help='Code index in the category')
    p.add_argument('--group', action='store', default=0, dest='group', type=int, help='Layer group')
    p.add_argument('--direction', action='store', default=0, dest='direction', type=int,
                   help='Salient direction rank')
    p.add_argument('--alpha', action='store', default=None, dest='alpha', type=float)
    p.add_argument('--steps', action='store', default=1, dest='steps', type=int,
                   help='Write codes for this many intensities in [-alpha, alpha]')
    p.add_argument('-o', '--out', action='store', required=True, dest='out', type=str)

    p = command('generate', 'Generate codes for few-shot categories.')
    p.add_argument('model', type=str)
    p.add_argument('archive', type=str, help='Archive with seen categories and few-shot codes')
    p.add_argument('--method', action='store', default='sage', dest='method', choices=METHODS)
    p.add_argument('--category', action='store', default=None, dest='category', type=str)
    p.add_argument('--alpha', action='store', default=None, dest='alpha', type=float)
    p.add_argument('--t-b', action='store', default=None, dest='t_b', type=int_list,
                   help='t_B, or a comma separated list for sage-multi')
    p.add_argument('--t-c', action='store', default=None, dest='t_c', type=int)
    p.add_argument('--t-a', action='store', default=None, dest='t_a', type=int)
    p.add_argument('--count', action='store', default=100, dest='count', type=int)
    p.add_argument('--shots', action='store', default=None, dest='shots', type=int)
    p.add_argument('--seed', action='store', default=0, dest='seed', type=int)
    p.add_argument('-o', '--out', action='store', required=True, dest='out', type=str)

    for name in ('fuse-pixel', 'fuse-freq'):
        p = command(name, 'Fuse a real image, its inversion and an edited image.')
        p.add_argument('real', type=str)
        p.add_argument('inv', type=str)
        p.add_argument('edited', type=str)
        if name == 'fuse-freq':
            p.add_argument('--combined', action='store_true', default=False, dest='combined',
                           help='Apply pixel fusion first')
        p.add_argument('-o', '--out', action='store', required=True, dest='out', type=str)

    p = command('eval', 'Metrics of generated codes.')
    p.add_argument('--train', action='store', required=True, dest='train', type=str,
                   help='Archive with the real training codes')
    p.add_argument('--generated', action='store', required=True, dest='generated', type=str)
    p.add_argument('--test', action='store', default=None, dest='test', type=str)
    p.add_argument('--shots', action='store', default=None, dest='shots', type=int,
                   help='Use only the first SHOTS training codes per category')
    p.add_argument('--world', action='store', default=None, dest='world', type=str)
    p.add_argument('--features', action='store', default=None, dest='features', choices=experiments.FEATURE_SPACES)
    p.add_argument('--metrics', action='store', default=None, dest='metrics', type=str,
                   help='CSV of Frechet distance and diversity')
    p.add_argument('--nas', action='store', default=None, dest='nas', type=str, help='NAS report CSV')
    p.add_argument('--pca', action='store', default=None, dest='pca', type=str, help='PCA points CSV')
    p.add_argument('--plot', action='store', default=None, dest='plot', type=str, help='PCA scatter image')
    p.add_argument('--seed', action='store', default=0, dest='seed', type=int)

    p = command('inspect', 'Print header summaries.')
    p.add_argument('files', nargs='+', type=str)
    return parser


def run(argv=None):
    """ Run one command.

    Args:
        argv (list): arguments without the program name, default sys.argv[1:]

    Returns:
        exit status
    """
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE

    set_log_level(logging.DEBUG if args.verbose else level_log)

    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](args, cfg)
    except ConfigError as err:
        logger.error('Invalid configuration: %s' % err)
        return EXIT_CONFIG
    except TrainingDivergedError as err:
        logger.error('%s' % err)
        return EXIT_DIVERGED
    except (InvalidInputError, ValueError) as err:
        logger.error('Invalid input: %s' % err)
        return EXIT_INPUT
    except (FormatError, IOError, OSError, NotImplementedError) as err:
        logger.error('File error: %s' % err)
        return EXIT_FILE
    return EXIT_OK


def cmd_tool(args=None):
    """ Entry point of the sagetool console script """
    sys.exit(run(args))


if __name__ == "__main__":
    cmd_tool()
