from sagepy import fusion
from sagepy.errors import InvalidInputError
from sagepy.fusion import FusionConfig
import numpy as np
import pytest


def smooth_image(h=48, w=40):
    i, j = np.meshgrid(np.arange(h), np.arange(w), indexing='ij')
    return 0.5 + 0.25 * np.sin(2 * np.pi * i / 32.0) * np.cos(2 * np.pi * j / 24.0)


def test_gaussian_kernel():
    k = fusion.gaussian_kernel(1.0)
    assert k.size == 7
    assert np.isclose(k.sum(), 1.0)
    assert np.allclose(k, k[::-1])
    assert fusion.gaussian_kernel(1.2).size == 9
    with pytest.raises(InvalidInputError):
        fusion.gaussian_kernel(0.0)


def test_lowpass_constant():
    img = np.full((9, 7, 3), 0.3)
    low, high = fusion.frequency_decompose(img, 2.0)
    assert np.allclose(low, img, atol=1e-12)
    assert np.allclose(high, 0.0, atol=1e-12)


def test_lowpass_impulse():
    img = np.zeros((41, 41))
    img[20, 20] = 1.0
    low = fusion.gaussian_lowpass(img, 2.0)
    k = fusion.gaussian_kernel(2.0)
    r = k.size // 2
    expected = np.zeros((41, 41))
    expected[20 - r:20 + r + 1, 20 - r:20 + r + 1] = np.outer(k, k)
    assert low.shape == (41, 41, 1)
    assert np.allclose(low[:, :, 0], expected, atol=1e-15)


def test_lowpass_semigroup():
    img = smooth_image()
    twice = fusion.gaussian_lowpass(fusion.gaussian_lowpass(img, 1.5), 2.0)
    once = fusion.gaussian_lowpass(img, 2.5)
    assert np.mean(np.abs(twice - once)) < 1e-3


def test_lowpass_checkerboard():
    i, j = np.meshgrid(np.arange(32), np.arange(32), indexing='ij')
    img = ((i + j) % 2).astype(float)
    low = fusion.gaussian_lowpass(img, 5.0)[:, :, 0]
    assert np.linalg.norm(low - 0.5) <= 0.01 * np.linalg.norm(img - 0.5)


def test_frequency_decompose():
    img = np.random.default_rng(0).random((10, 12, 3))
    low, high = fusion.frequency_decompose(img, 1.5)
    assert np.allclose(low + high, img, atol=1e-12)
    # Channels are filtered independently
    alone = fusion.gaussian_lowpass(img[:, :, 1], 1.5)
    assert np.allclose(low[:, :, 1:2], alone)


def test_pixel_fuse():
    cfg = FusionConfig()
    rng = np.random.default_rng(1)
    real = rng.random((8, 8, 1))
    same = fusion.pixel_fuse(real, real, real, cfg)
    assert np.allclose(same, real)

    inv, edited = rng.random((2, 8, 8, 1))
    fused = fusion.pixel_fuse(real, inv, edited, cfg)
    assert fused.shape == (8, 8, 1)
    assert fused.min() >= 0.0 and fused.max() <= 1.0
    mask = fusion.fusion_mask(real, inv, edited, cfg)
    assert mask.min() >= 0.0 and mask.max() <= 1.0
    assert np.allclose(fused, np.clip(edited + mask * real, 0.0, 1.0))


def test_frequency_fuse():
    cfg = FusionConfig(sigma_lp=2.0)
    rng = np.random.default_rng(2)
    real, inv, edited = rng.random((3, 12, 10))

    # A perfect inversion leaves the edit untouched
    assert np.allclose(fusion.frequency_fuse(real, real, edited, cfg, clip=False)[:, :, 0], edited)

    low, high = fusion.frequency_fuse_bands(real, inv, edited, cfg)
    assert np.allclose(high, fusion.frequency_decompose(edited, 2.0)[1])
    expected_low = (fusion.gaussian_lowpass(edited, 2.0) + fusion.gaussian_lowpass(real, 2.0)
                    - fusion.gaussian_lowpass(inv, 2.0))
    assert np.allclose(low, expected_low)

    fused = fusion.frequency_fuse(real, inv, edited, cfg)
    assert np.allclose(fused, np.clip(low + high, 0.0, 1.0))

    combined = fusion.combined_fuse(real, inv, edited, cfg)
    assert combined.shape == (12, 10, 1)
    assert combined.min() >= 0.0 and combined.max() <= 1.0


def test_fusion_errors():
    cfg = FusionConfig()
    with pytest.raises(InvalidInputError):
        fusion.pixel_fuse(np.zeros((4, 4)), np.zeros((4, 5)), np.zeros((4, 4)), cfg)
    with pytest.raises(InvalidInputError):
        fusion.frequency_fuse(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4)), FusionConfig(sigma_lp=0.0))
    with pytest.raises(InvalidInputError):
        fusion.as_image(np.zeros(4))


if __name__ == "__main__":
    test_gaussian_kernel()
    test_lowpass_constant()
    test_lowpass_impulse()
    test_lowpass_semigroup()
    test_lowpass_checkerboard()
    test_frequency_decompose()
    test_pixel_fuse()
    test_frequency_fuse()
    test_fusion_errors()
