"""
# images.py

8-bit binary PGM (P5, grayscale) and PPM (P6, RGB) images, mapped linearly
to float grids in [0, 1] of shape H x W x C.
"""
import io
import logging

import numpy as np
from PIL import Image

from ..errors import CorruptHeaderError, InvalidInputError
from ..utils import as_array
from .binary import atomic_write

logger = logging.getLogger(__name__)

PNM_MAGICS = (b'P5', b'P6')


def is_pnm(filename):
    """ True if the file starts with a binary PGM/PPM magic """
    with open(filename, 'rb') as fh:
        return fh.read(2) in PNM_MAGICS


def read_image(filename):
    """ Read a P5/P6 image.

    Returns:
        np.array: H x W x C floats in [0, 1], C = 1 or 3
    """
    if not is_pnm(filename):
        raise CorruptHeaderError("%s: not a binary PGM/PPM file" % filename)
    try:
        with Image.open(filename) as im:
            im.load()
            if im.mode not in ('L', 'RGB'):
                raise CorruptHeaderError("%s: unsupported image mode %s" % (filename, im.mode))
            arr = np.asarray(im, dtype=np.uint8)
    except (OSError, SyntaxError, ValueError) as err:
        raise CorruptHeaderError("%s: unreadable image (%s)" % (filename, err))
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    return arr.astype(np.float64) / 255.0


def image_bytes(img):
    """ Encode an H x W x C image (C = 1 or 3), clamping to [0, 1] first """
    img = as_array(img, name='image')
    if img.ndim == 2:
        img = img[:, :, np.newaxis]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise InvalidInputError("Images must be H x W x 1 or H x W x 3, got %s" % (img.shape,))
    arr = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        im = Image.fromarray(arr[:, :, 0])
    else:
        im = Image.fromarray(arr)
    buf = io.BytesIO()
    im.save(buf, format='PPM')
    return buf.getvalue()


def write_image(filename, img):
    """ Write a grayscale image as P5 or an RGB image as P6 (atomically) """
    logger.info('Writing file : %s' % filename)
    atomic_write(filename, image_bytes(img))
