#!/usr/bin/env python
""" This module handles file types.
"""
import os

from .archive import MAGIC as ARCHIVE_MAGIC
from .archive import read_archive, read_archive_header
from .images import PNM_MAGICS, read_image
from .model_file import MAGIC as MODEL_MAGIC
from .model_file import read_model, read_model_header


def file_type(filename):
    """ Detect a file type from its magic bytes.

    ================== ==================================================
    Magic              File type
    ================== ==================================================
    SAGL               latent archive
    SAGM               model file
    P5, P6             binary PGM / PPM image
    *other*            Will raise NotImplementedError
    ================== ==================================================
    """
    filename = os.path.expandvars(os.path.expanduser(filename))
    if not os.path.isfile(filename):
        raise IOError("No such file or directory: " + filename)
    with open(filename, 'rb') as fh:
        head = fh.read(4)
    if head == ARCHIVE_MAGIC:
        return 'archive'
    if head == MODEL_MAGIC:
        return 'model'
    if head[:2] in PNM_MAGICS:
        return 'image'
    raise NotImplementedError('Cannot open this type of file with sagepy: %s' % filename)


def open_file(filename):
    """ Open a latent archive, model file or image by its magic bytes.

    Returns:
        CategoryLibrary, FactorizationModel or H x W x C image array
    """
    kind = file_type(filename)
    filename = os.path.expandvars(os.path.expanduser(filename))
    if kind == 'archive':
        return read_archive(filename)
    if kind == 'model':
        return read_model(filename)
    return read_image(filename)


def describe(filename):
    """ Header summary dictionary of any supported file """
    kind = file_type(filename)
    filename = os.path.expandvars(os.path.expanduser(filename))
    if kind == 'archive':
        return read_archive_header(filename)
    if kind == 'model':
        return read_model_header(filename)
    img = read_image(filename)
    return {'format': 'P5' if img.shape[2] == 1 else 'P6', 'height': img.shape[0],
            'width': img.shape[1], 'channels': img.shape[2]}
