"""
# model_file.py

Model file (.sagm): a FactorizationModel in one little-endian file.

    magic 'SAGM' | u32 version | u32 L | u32 D | u32 l | u32 G
    G x (u32 start, u32 stop) layer groups
    A: L * D * l float32
    u32 n_layers (0 for a dictionary-only model)
      per layer: u32 n_in | u32 n_out | n_in * n_out float32 | n_out float32
    f32 negative slope (only when n_layers > 0)
    u32 S | S x (u32 length, UTF-8 id) | B: L * D * S float32
    u32 length | UTF-8 JSON training-config echo
"""
import json
import logging
import time

import numpy as np

from ..encoder import N_AFFINE_LAYERS, EncoderParams
from ..errors import CorruptHeaderError, InvalidInputError
from ..factorization import FactorizationModel, GroupPartition, IrrelevantDictionary
from ..latent import RelevantDictionary
from .binary import (ByteReader, atomic_write, pack_f32, pack_f32_array, pack_str, pack_u32,
                     read_file, read_magic)

logger = logging.getLogger(__name__)

MAGIC = b'SAGM'
VERSION = 1


def model_bytes(model):
    """ Serialise a FactorizationModel """
    a = model.atoms
    L, D, l = a.atoms.shape
    parts = [MAGIC, pack_u32(VERSION), pack_u32(L), pack_u32(D), pack_u32(l),
             pack_u32(a.partition.n_groups)]
    for start, stop in a.partition.ranges:
        parts += [pack_u32(start), pack_u32(stop)]
    parts.append(pack_f32_array(a.atoms))

    enc = model.encoder
    if enc is None:
        parts.append(pack_u32(0))
    else:
        parts.append(pack_u32(N_AFFINE_LAYERS))
        for w, b in zip(enc.weights, enc.biases):
            parts += [pack_u32(w.shape[0]), pack_u32(w.shape[1]), pack_f32_array(w), pack_f32_array(b)]
        parts.append(pack_f32(enc.negative_slope))

    rel = model.relevant
    parts.append(pack_u32(rel.n_categories))
    parts += [pack_str(cat_id) for cat_id in rel.ids]
    parts.append(pack_f32_array(rel.matrices))
    try:
        parts.append(pack_str(json.dumps(model.config, sort_keys=True, separators=(',', ':'))))
    except (TypeError, ValueError) as err:
        raise InvalidInputError("Model config is not JSON serialisable: %s" % err)
    return b''.join(parts)


def write_model(filename, model):
    """ Write a FactorizationModel to a .sagm file (atomically) """
    t0 = time.time()
    logger.info('Writing file : %s' % filename)
    atomic_write(filename, model_bytes(model))
    logger.info('Conversion time: %2.2fsec' % (time.time() - t0))


def _corrupt(reader, what, offset=None):
    offset = reader.offset if offset is None else offset
    return CorruptHeaderError("%s: %s at offset %i" % (reader.name, what, offset))


def _read_encoder(reader, L, D, l, G):
    offset = reader.offset
    n_layers = reader.read_u32()
    if n_layers == 0:
        return None
    if n_layers != N_AFFINE_LAYERS:
        raise _corrupt(reader, "encoder declares %i layers" % n_layers, offset)
    weights, biases = [], []
    expected_in = L * D
    for i in range(n_layers):
        offset = reader.offset
        n_in, n_out = reader.read_u32(), reader.read_u32()
        if n_in != expected_in or n_out < 1:
            raise _corrupt(reader, "encoder layer %i shape (%i, %i) does not chain" % (i, n_in, n_out), offset)
        weights.append(reader.read_f32_array((n_in, n_out)))
        biases.append(reader.read_f32_array((n_out,)))
        expected_in = n_out
    if expected_in != G * l:
        raise _corrupt(reader, "encoder output %i does not match G*l=%i" % (expected_in, G * l))
    offset = reader.offset
    slope = reader.read_f32()
    if not np.isfinite(slope):
        raise _corrupt(reader, "non-finite negative slope", offset)
    try:
        return EncoderParams(weights, biases, slope, (G, l))
    except InvalidInputError as err:
        raise _corrupt(reader, "invalid encoder payload (%s)" % err)


def parse_model(data, name='<bytes>'):
    """ Parse the bytes of a .sagm file into a FactorizationModel """
    reader = ByteReader(data, name)
    read_magic(reader, MAGIC, VERSION)
    L, D, l, G = (reader.read_u32() for _ in range(4))
    if min(L, D, l, G) < 1 or l >= D or G > L:
        raise _corrupt(reader, "inconsistent dimensions L=%i D=%i l=%i G=%i" % (L, D, l, G), 8)

    ranges = []
    for _ in range(G):
        offset = reader.offset
        start, stop = reader.read_u32(), reader.read_u32()
        if stop > L:
            raise _corrupt(reader, "layer group (%i, %i) exceeds L=%i" % (start, stop, L), offset)
        ranges.append((start, stop))
    try:
        partition = GroupPartition(ranges)
    except InvalidInputError as err:
        raise _corrupt(reader, "invalid layer groups (%s)" % err)
    if partition.n_layers != L:
        raise _corrupt(reader, "layer groups cover %i layers, header says %i" % (partition.n_layers, L))

    atoms = reader.read_f32_array((L, D, l))
    encoder = _read_encoder(reader, L, D, l, G)

    offset = reader.offset
    S = reader.read_u32()
    if S < 2:
        raise _corrupt(reader, "relevant dictionary declares %i categories" % S, offset)
    ids = [reader.read_str() for _ in range(S)]
    matrices = reader.read_f32_array((L, D, S))

    offset = reader.offset
    try:
        config = json.loads(reader.read_str())
    except ValueError:
        raise _corrupt(reader, "config echo is not valid JSON", offset)
    if not isinstance(config, dict):
        raise _corrupt(reader, "config echo is not a JSON object", offset)
    reader.expect_end()

    try:
        return FactorizationModel(IrrelevantDictionary(atoms, partition), encoder,
                                  RelevantDictionary(ids, matrices), config=config)
    except InvalidInputError as err:
        raise CorruptHeaderError("%s: invalid payload (%s)" % (name, err))


def read_model(filename):
    """ Read a .sagm file.

    Returns:
        FactorizationModel (without the training log)
    """
    return parse_model(read_file(filename), filename)


def read_model_header(filename):
    """ Summary dictionary of a .sagm file, for inspect """
    model = read_model(filename)
    return {'format': 'SAGM', 'version': VERSION, 'layers': model.atoms.layers, 'dims': model.atoms.dims,
            'atoms': model.atoms.n_atoms, 'groups': [list(r) for r in model.partition.ranges],
            'encoder': None if model.encoder is None else [list(s) for s in model.encoder.layer_shapes()],
            'seen_categories': model.relevant.n_categories, 'config': model.config}
