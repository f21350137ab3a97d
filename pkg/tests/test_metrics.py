"""Metric tests: PSNR pinned values, SSIM closed forms, class accuracy."""

import math

import numpy as np
import pytest

from pdls.degrade import GaussianBlur, ImageGrid, NoiseModel, apply
from pdls.flowfield import GaussianMixture
from pdls.metrics import class_accuracy, mse, psnr, report, ssim


class TestPsnr:
    def test_identical_images_hit_the_infinity_sentinel(self):
        img = np.full((16, 16), 0.3)
        assert psnr(img, img) == math.inf

    def test_twenty_decibels(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 0.1)  # mse 0.01
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-12)

    def test_forty_decibels(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 0.01)  # mse 1e-4
        assert psnr(a, b) == pytest.approx(40.0, abs=1e-12)

    def test_peak_validation(self):
        with pytest.raises(ValueError, match="peak"):
            psnr(np.zeros(4), np.zeros(4), peak=0.0)

    def test_mse_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            mse(np.zeros((4, 4)), np.zeros((4, 5)))


class TestSsim:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, (32, 32))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_constant_images_reduce_to_luminance_term(self):
        c1, c2 = 0.3, 0.6
        a = np.full((16, 16), c1)
        b = np.full((16, 16), c2)
        k1 = (0.01 * 1.0) ** 2
        expected = (2 * c1 * c2 + k1) / (c1**2 + c2**2 + k1)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-12)

    def test_negative_image_scores_low(self):
        yy, xx = np.mgrid[0:32, 0:32]
        pattern = 0.5 + 0.4 * np.sin(xx / 3.0) * np.cos(yy / 4.0)
        assert ssim(pattern, 1.0 - pattern) < 0.5

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 1, (20, 20))
        b = rng.uniform(0, 1, (20, 20))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_monotone_under_increasing_blur(self):
        rng = np.random.default_rng(2)
        img = ImageGrid(rng.uniform(0, 1, (32, 32)))
        scores = []
        for sigma in (0.5, 1.5, 3.0):
            blurred = apply(GaussianBlur(7, sigma), img, NoiseModel(0.0))
            scores.append(ssim(blurred, img))
        assert scores[0] > scores[1] > scores[2]

    def test_small_images_rejected(self):
        with pytest.raises(ValueError, match="at least"):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))


class TestClassAccuracy:
    def _mixture(self):
        return GaussianMixture(
            [0.25, 0.25, 0.5],
            [[1.0, 0.0], [-1.0, 0.0], [0.0, 2.0]],
            [0.0, 0.0, 0.0],
            ["a", "b", "c"],
        )

    def test_component_mean_scores_its_own_label(self):
        mix = self._mixture()
        assert class_accuracy(np.array([1.0, 0.0]), mix, "a") == 1
        assert class_accuracy(np.array([1.0, 0.0]), mix, "b") == 0

    def test_equidistant_tie_breaks_to_lowest_index(self):
        mix = self._mixture()
        # The origin is equidistant from components 0 and 1.
        assert class_accuracy(np.array([0.0, 0.0]), mix, "a") == 1
        assert class_accuracy(np.array([0.0, 0.0]), mix, "b") == 0

    def test_report_bundles_all_metrics(self):
        rng = np.random.default_rng(3)
        ref = ImageGrid(rng.uniform(0, 1, (16, 16)))
        rep = report(ref, ref)
        assert rep.mse == 0.0
        assert rep.psnr_db == math.inf
        assert rep.ssim == pytest.approx(1.0, abs=1e-12)
        assert rep.class_accuracy is None
