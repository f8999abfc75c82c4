"""
# archive.py

Latent archive (.sagl): a CategoryLibrary in one little-endian file.

    magic 'SAGL' | u32 version | u32 L | u32 D | u32 n_categories
    per category: u32 id length | UTF-8 id | u8 role (0 seen, 1 unseen)
                  | u32 code count | count * L * D float32, layer-major
    optional:     u32 length | UTF-8 JSON metadata
"""
import json
import logging
import time

from ..errors import CorruptHeaderError, InvalidInputError
from ..latent import CategoryLibrary, SEEN, UNSEEN
from .binary import (ByteReader, atomic_write, pack_f32_array, pack_str, pack_u32, pack_u8,
                     read_file, read_magic)

logger = logging.getLogger(__name__)

MAGIC = b'SAGL'
VERSION = 1
ROLE_CODES = {SEEN: 0, UNSEEN: 1}
ROLE_NAMES = {v: k for k, v in ROLE_CODES.items()}


def encode_metadata(metadata):
    return json.dumps(metadata, sort_keys=True, separators=(',', ':'))


def archive_bytes(library, metadata=None):
    """ Serialise a library; metadata defaults to library.metadata """
    metadata = library.metadata if metadata is None else metadata
    parts = [MAGIC, pack_u32(VERSION), pack_u32(library.layers), pack_u32(library.dims),
             pack_u32(len(library))]
    for cat_id in library.ids():
        codes = library.codes(cat_id)
        parts += [pack_str(cat_id), pack_u8(ROLE_CODES[library.role(cat_id)]),
                  pack_u32(codes.shape[0]), pack_f32_array(codes)]
    if metadata:
        try:
            parts.append(pack_str(encode_metadata(metadata)))
        except (TypeError, ValueError) as err:
            raise InvalidInputError("Archive metadata is not JSON serialisable: %s" % err)
    return b''.join(parts)


def write_archive(filename, library, metadata=None):
    """ Write a CategoryLibrary to a .sagl file (atomically).

    Args:
        filename (str): output path
        library (CategoryLibrary)
        metadata (dict): provenance trailer, default library.metadata
    """
    t0 = time.time()
    logger.info('Writing file : %s' % filename)
    atomic_write(filename, archive_bytes(library, metadata))
    logger.info('Conversion time: %2.2fsec' % (time.time() - t0))


def _read_header(reader):
    read_magic(reader, MAGIC, VERSION)
    layers = reader.read_u32()
    dims = reader.read_u32()
    n_categories = reader.read_u32()
    if layers < 1 or dims < 1:
        raise CorruptHeaderError("%s: invalid dimensions L=%i D=%i" % (reader.name, layers, dims))
    return layers, dims, n_categories


def parse_archive(data, name='<bytes>'):
    """ Parse the bytes of a .sagl file into a CategoryLibrary """
    reader = ByteReader(data, name)
    layers, dims, n_categories = _read_header(reader)

    codes, roles = {}, {}
    for _ in range(n_categories):
        start = reader.offset
        cat_id = reader.read_str()
        if not cat_id or cat_id in codes:
            raise CorruptHeaderError("%s: empty or duplicate category id at offset %i" % (name, start))
        role_offset = reader.offset
        role = reader.read_u8()
        if role not in ROLE_NAMES:
            raise CorruptHeaderError("%s: invalid role byte %i at offset %i" % (name, role, role_offset))
        count_offset = reader.offset
        count = reader.read_u32()
        if count < 1:
            raise CorruptHeaderError("%s: category %s declares no codes at offset %i" % (name, cat_id, count_offset))
        codes[cat_id] = reader.read_f32_array((count, layers, dims))
        roles[cat_id] = ROLE_NAMES[role]

    metadata = {}
    if reader.remaining:
        start = reader.offset
        text = reader.read_str()
        try:
            metadata = json.loads(text)
        except ValueError:
            raise CorruptHeaderError("%s: metadata at offset %i is not valid JSON" % (name, start))
        if not isinstance(metadata, dict):
            raise CorruptHeaderError("%s: metadata at offset %i is not a JSON object" % (name, start))
    reader.expect_end()

    try:
        return CategoryLibrary(layers, dims, codes, roles, metadata)
    except InvalidInputError as err:
        raise CorruptHeaderError("%s: invalid payload (%s)" % (name, err))


def read_archive(filename):
    """ Read a .sagl file.

    Returns:
        CategoryLibrary
    """
    return parse_archive(read_file(filename), filename)


def read_archive_header(filename):
    """ Summary dictionary of a .sagl file, for inspect """
    library = read_archive(filename)
    return {'format': 'SAGL', 'version': VERSION, 'layers': library.layers, 'dims': library.dims,
            'categories': len(library), 'seen': len(library.seen_ids()),
            'unseen': len(library.unseen_ids()),
            'codes': sum(library.count(c) for c in library.ids()),
            'metadata': library.metadata}
