"""
# fusion.py

Class-consistency enhancement of edited images: Gaussian low-pass filtering,
low/high frequency split, pixel-domain mask fusion and frequency-domain fusion.

Images are H x W x C float arrays (a 2-D array is treated as one channel).
Channels are filtered independently; only the fused outputs are clamped to [0, 1].
"""
import logging
from dataclasses import dataclass, asdict

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .utils import as_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FusionConfig:
    """ Weights of the fusion operators. """
    beta: float = 1.0
    sigma_mask: float = 3.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    sigma_lp: float = 5.0

    def validate(self):
        if not (self.sigma_mask > 0 and self.sigma_lp > 0):
            raise InvalidInputError("Filter widths must be > 0")
        return self

    def to_dict(self):
        return asdict(self)


def as_image(img, name='image'):
    """ Float64 H x W x C view of an image; 2-D input gains a channel axis """
    img = as_array(img, name=name)
    if img.ndim == 2:
        img = img[:, :, np.newaxis]
    if img.ndim != 3 or img.shape[0] < 1 or img.shape[1] < 1 or img.shape[2] < 1:
        raise InvalidInputError("%s must be H x W or H x W x C" % name)
    return img


def _same_shape(*images):
    shapes = set(im.shape for im in images)
    if len(shapes) != 1:
        raise InvalidInputError("Images must share one shape, got %s" % sorted(shapes))


def gaussian_kernel(sigma):
    """ Normalized 1-D Gaussian of radius ceil(3 sigma) """
    if not sigma > 0:
        raise InvalidInputError("sigma must be > 0, got %g" % sigma)
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_lowpass(img, sigma):
    """ Separable Gaussian blur of every channel, mirrored about the edge pixels.

    Args:
        img (np.array): H x W x C image
        sigma (float): standard deviation in pixels, > 0

    Returns:
        blurred image, same shape, not clamped
    """
    kernel = gaussian_kernel(sigma)
    img = as_image(img)
    out = ndimage.convolve1d(img, kernel, axis=0, mode='mirror')
    return ndimage.convolve1d(out, kernel, axis=1, mode='mirror')


def frequency_decompose(img, sigma):
    """ (low, high) with low = gaussian_lowpass(img) and high = img - low """
    img = as_image(img)
    low = gaussian_lowpass(img, sigma)
    return low, img - low


def fusion_mask(real, inv, edited, cfg):
    """ blur(| |real - inv| - beta |edited - inv| |) clamped to [0, 1] """
    raw = np.abs(np.abs(real - inv) - cfg.beta * np.abs(edited - inv))
    return np.clip(gaussian_lowpass(raw, cfg.sigma_mask), 0.0, 1.0)


def pixel_fuse(real, inv, edited, cfg):
    """ Mask fusion: edited + mask * real, clamped.

    Args:
        real, inv, edited (np.array): real image, its inversion and the edited inversion
        cfg (FusionConfig)
    """
    cfg.validate()
    real, inv, edited = as_image(real, 'real'), as_image(inv, 'inv'), as_image(edited, 'edited')
    _same_shape(real, inv, edited)
    mask = fusion_mask(real, inv, edited, cfg)
    return np.clip(edited + mask * real, 0.0, 1.0)


def frequency_fuse_bands(real, inv, edited, cfg):
    """ Unclamped frequency fusion as (low, high).

    high is the high band of the edited image; low is
    gamma1 low(edited) + low(real) - gamma2 low(inv).
    """
    cfg.validate()
    real, inv, edited = as_image(real, 'real'), as_image(inv, 'inv'), as_image(edited, 'edited')
    _same_shape(real, inv, edited)
    low_edited, high_edited = frequency_decompose(edited, cfg.sigma_lp)
    low = (cfg.gamma1 * low_edited + gaussian_lowpass(real, cfg.sigma_lp)
           - cfg.gamma2 * gaussian_lowpass(inv, cfg.sigma_lp))
    return low, high_edited


def frequency_fuse(real, inv, edited, cfg, clip=True):
    """ Replace the inversion's low-band error with the real image's low band.

    Args:
        real, inv, edited (np.array): real image, its inversion and the edited inversion
        cfg (FusionConfig)
        clip (bool): clamp the result to [0, 1]
    """
    low, high = frequency_fuse_bands(real, inv, edited, cfg)
    fused = low + high
    return np.clip(fused, 0.0, 1.0) if clip else fused


def combined_fuse(real, inv, edited, cfg):
    """ Pixel mask fusion followed by frequency fusion """
    return frequency_fuse(real, inv, pixel_fuse(real, inv, edited, cfg), cfg)
