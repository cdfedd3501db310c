import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

import synth
from roimark import DimensionMismatch, GrayImage, TooSmall, measure, mssim, psnr


class TestPsnr:
    def test_identical_is_infinite(self):
        img = synth.gradient(size=64)
        assert math.isinf(psnr(img, img))

    def test_all_pixels_off_by_one(self):
        # closed form: 10*log10(255^2 / 1) = 48.1308...
        a = np.full((64, 64), 100, dtype=np.uint8)
        assert psnr(a, a + 1) == pytest.approx(48.1308, abs=0.01)

    def test_single_pixel_saturated(self):
        # closed form: 10*log10(255^2 * 65536 / 255^2) = 48.1648...
        a = np.zeros((256, 256), dtype=np.uint8)
        b = a.copy()
        b[10, 10] = 255
        assert psnr(a, b) == pytest.approx(48.1648, abs=0.01)

    def test_symmetry(self, rng):
        a = rng.integers(0, 256, size=(40, 40), dtype=np.uint8)
        b = rng.integers(0, 256, size=(40, 40), dtype=np.uint8)
        assert psnr(a, b) == psnr(b, a)

    def test_decreases_with_noise(self, rng):
        a = rng.integers(60, 200, size=(64, 64), dtype=np.uint8)
        small = np.clip(a.astype(np.int16) + rng.integers(-2, 3, a.shape), 0, 255)
        large = np.clip(a.astype(np.int16) + rng.integers(-30, 31, a.shape), 0, 255)
        assert psnr(a, small.astype(np.uint8)) > psnr(a, large.astype(np.uint8))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            psnr(np.zeros((16, 16)), np.zeros((16, 17)))


class TestMssim:
    def test_self_similarity_is_one(self):
        img = synth.shapes(size=96, seed=2)
        assert mssim(img, img) == 1.0

    def test_inverted_scores_below_one(self):
        img = synth.gradient(size=96)
        inv = GrayImage(255 - img.pixels)
        assert mssim(img, inv) < 1.0

    def test_lsb_noise_stays_high(self, rng):
        for img in (synth.shapes(size=96, seed=5), synth.smooth_noise(size=96, seed=6)):
            noisy = GrayImage(img.pixels | rng.integers(0, 2, img.pixels.shape, dtype=np.uint8))
            assert mssim(img, noisy) >= 0.9

    def test_symmetry(self, rng):
        a = rng.integers(0, 256, size=(48, 48), dtype=np.uint8)
        b = rng.integers(0, 256, size=(48, 48), dtype=np.uint8)
        assert mssim(a, b) == pytest.approx(mssim(b, a), abs=1e-12)

    def test_matches_reference_implementation(self, rng):
        # oracle: scikit-image with the canonical parameter set
        for _ in range(5):
            a = rng.integers(0, 256, size=(64, 80), dtype=np.uint8)
            b = np.clip(
                a.astype(np.int16) + rng.integers(-20, 21, a.shape), 0, 255
            ).astype(np.uint8)
            expected = structural_similarity(
                a, b, win_size=11, gaussian_weights=True, sigma=1.5,
                use_sample_covariance=False, data_range=255,
            )
            assert mssim(a, b) == pytest.approx(expected, abs=1e-7)

    def test_too_small(self):
        with pytest.raises(TooSmall):
            mssim(np.zeros((10, 10)), np.zeros((10, 10)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mssim(np.zeros((16, 16)), np.zeros((17, 16)))


def test_measure_bundles_both():
    img = synth.gradient(size=64)
    score = measure(img, img)
    assert math.isinf(score.psnr_db)
    assert score.mssim == 1.0
