"""Degradation-operator tests: kernels, linearity, noise, masks, parsing."""

import numpy as np
import pytest

from pdls.degrade import (
    Downsample,
    FreeformMask,
    GaussianBlur,
    Identity,
    ImageGrid,
    MotionBlur,
    NoiseModel,
    apply,
    block_average,
    block_replicate,
    gaussian_kernel,
    make_freeform_mask,
    motion_kernel,
    parse_descriptor,
)


class TestGaussianKernel:
    def test_size_one_is_identity(self):
        assert np.array_equal(gaussian_kernel(1, 3.0), [[1.0]])

    def test_large_kernel_normalized_with_central_peak(self):
        k = gaussian_kernel(61, 3.0)
        assert abs(k.sum() - 1.0) < 1e-12
        assert k[30, 30] == k.max()

    def test_center_to_edge_ratio(self):
        for sigma in (0.8, 1.5, 3.0):
            k = gaussian_kernel(3, sigma)
            assert k[1, 1] / k[1, 0] == pytest.approx(np.exp(1 / (2 * sigma**2)), abs=1e-12)

    def test_even_size_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            gaussian_kernel(4, 1.0)

    def test_sigma_validation(self):
        with pytest.raises(ValueError, match="sigma"):
            gaussian_kernel(3, 0.0)


class TestMotionKernel:
    def test_minimum_length_is_single_pixel(self):
        k = motion_kernel(7, 0.1, 45.0)
        assert np.count_nonzero(k) == 1
        assert k[3, 3] == 1.0

    def test_axis_aligned_half_length_line(self):
        k = motion_kernel(61, 0.5, 0.0)
        row = k[30]
        nz = np.nonzero(row)[0]
        assert nz.size == 31
        assert np.allclose(row[nz], 1.0 / 31, atol=1e-12)
        assert np.count_nonzero(k) == 31

    def test_unit_sum(self):
        for size, inten, ang in ((7, 0.5, 45.0), (61, 0.5, 30.0), (9, 1.0, 120.0)):
            assert abs(motion_kernel(size, inten, ang).sum() - 1.0) < 1e-12

    def test_intensity_validation(self):
        with pytest.raises(ValueError, match="intensity"):
            motion_kernel(7, 0.0)
        with pytest.raises(ValueError, match="intensity"):
            motion_kernel(7, 1.5)


class TestApply:
    def test_identity_returns_input_exactly(self):
        rng = np.random.default_rng(0)
        img = ImageGrid(rng.uniform(0, 1, (16, 16)))
        out = apply(Identity(), img, NoiseModel(0.0))
        assert np.array_equal(out.pixels, img.pixels)

    def test_downsample_preserves_constants(self):
        img = ImageGrid(np.full((64, 64), 0.42))
        out = apply(Downsample(8), img, NoiseModel(0.0))
        assert out.pixels.shape == (8, 8)
        assert np.allclose(out.pixels, 0.42, atol=1e-12)

    def test_blur_of_a_centered_delta_is_the_kernel(self):
        img = np.zeros((31, 31))
        img[15, 15] = 1.0
        op = GaussianBlur(7, 1.5)
        out = apply(op, ImageGrid(img), NoiseModel(0.0))
        assert np.allclose(out.pixels[12:19, 12:19], op.kernel(), atol=1e-12)
        assert np.allclose(np.delete(out.pixels.ravel(),
                                     [31 * r + c for r in range(12, 19) for c in range(12, 19)]),
                           0.0, atol=1e-12)

    def test_operators_are_linear_on_convex_combinations(self):
        rng = np.random.default_rng(1)
        a = ImageGrid(rng.uniform(0, 1, (32, 32)))
        b = ImageGrid(rng.uniform(0, 1, (32, 32)))
        alpha = 0.3
        mixd = ImageGrid(alpha * a.pixels + (1 - alpha) * b.pixels)
        ops = [GaussianBlur(7, 1.5), MotionBlur(7, 0.5, 45.0), Downsample(8),
               FreeformMask(make_freeform_mask(32, 32, 0.15, seed=3)), Identity()]
        for op in ops:
            lhs = apply(op, mixd, NoiseModel(0.0)).pixels
            rhs = (alpha * apply(op, a, NoiseModel(0.0)).pixels
                   + (1 - alpha) * apply(op, b, NoiseModel(0.0)).pixels)
            assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_noise_standard_deviation(self):
        img = ImageGrid(np.full((256, 256), 0.5))
        out = apply(Identity(), img, NoiseModel(0.1, seed=2))
        resid = out.pixels - 0.5
        assert abs(resid.std() - 0.1) / 0.1 < 0.02

    def test_noise_is_seeded(self):
        img = ImageGrid(np.full((16, 16), 0.5))
        a = apply(Identity(), img, NoiseModel(0.05, seed=9))
        b = apply(Identity(), img, NoiseModel(0.05, seed=9))
        assert np.array_equal(a.pixels, b.pixels)

    def test_mask_zeroes_masked_pixels(self):
        mask = np.zeros((8, 8))
        mask[:4] = 1.0
        img = ImageGrid(np.full((8, 8), 0.7))
        out = apply(FreeformMask(ImageGrid(mask)), img, NoiseModel(0.0))
        assert np.all(out.pixels[:4] == 0.0)
        assert np.all(out.pixels[4:] == 0.7)

    def test_mask_shape_mismatch(self):
        with pytest.raises(ValueError, match="mask dimensions"):
            apply(FreeformMask(ImageGrid(np.zeros((4, 4)))),
                  ImageGrid(np.zeros((8, 8))))

    def test_output_is_clamped(self):
        img = ImageGrid(np.full((16, 16), 0.99))
        out = apply(Identity(), img, NoiseModel(0.3, seed=0))
        assert out.pixels.max() <= 1.0
        assert out.pixels.min() >= 0.0


class TestBlocks:
    def test_average_then_replicate_round_trip_on_blocks(self):
        rng = np.random.default_rng(4)
        small = rng.uniform(0, 1, (4, 4))
        big = block_replicate(small, 8)
        assert np.allclose(block_average(big, 8), small, atol=1e-12)

    def test_factor_must_divide(self):
        with pytest.raises(ValueError, match="factor must divide dimensions"):
            block_average(np.zeros((31, 31)), 8)


class TestFreeformMask:
    def test_coverage_within_band(self):
        mask = make_freeform_mask(64, 64, 0.15, seed=0)
        frac = mask.pixels.mean()
        assert 0.13 <= frac <= 0.17

    def test_determinism(self):
        a = make_freeform_mask(32, 32, 0.2, seed=5)
        b = make_freeform_mask(32, 32, 0.2, seed=5)
        assert np.array_equal(a.pixels, b.pixels)

    def test_tiny_coverage_still_masks_something(self):
        mask = make_freeform_mask(32, 32, 0.01, seed=1)
        assert mask.pixels.sum() >= 1

    def test_coverage_validation(self):
        with pytest.raises(ValueError, match="coverage"):
            make_freeform_mask(32, 32, 0.0, seed=0)


class TestDescriptors:
    def test_round_trip_presets(self):
        for op in (GaussianBlur(7, 1.5), MotionBlur(7, 0.5, 45.0),
                   Downsample(8), Identity()):
            parsed = parse_descriptor(op.descriptor(), image_shape=(32, 32))
            assert parsed == op

    def test_large_kernel_descriptor(self):
        op = parse_descriptor("gblur:size=61,sigma=3.0")
        assert op == GaussianBlur(61, 3.0)

    def test_inpaint_needs_shape(self):
        with pytest.raises(ValueError, match="image shape"):
            parse_descriptor("inpaint:coverage=0.15")

    def test_inpaint_with_shape(self):
        op = parse_descriptor("inpaint:coverage=0.15,seed=2", image_shape=(32, 32))
        assert isinstance(op, FreeformMask)
        assert 0.13 <= op.mask.pixels.mean() <= 0.17

    def test_unknown_operator(self):
        with pytest.raises(ValueError, match="unknown operator"):
            parse_descriptor("sharpen:amount=2")

    def test_malformed_descriptor(self):
        with pytest.raises(ValueError, match="malformed operator"):
            parse_descriptor("gblur:size")


class TestImageGrid:
    def test_clamps_on_construction(self):
        img = ImageGrid(np.array([[-0.5, 0.5], [1.5, 1.0]]))
        assert img.pixels.min() == 0.0
        assert img.pixels.max() == 1.0

    def test_vector_round_trip(self):
        rng = np.random.default_rng(6)
        img = ImageGrid(rng.uniform(0, 1, (5, 7)))
        back = ImageGrid.from_vector(img.flatten(), 5, 7)
        assert np.array_equal(back.pixels, img.pixels)

    def test_vector_length_validation(self):
        with pytest.raises(ValueError, match="vector length"):
            ImageGrid.from_vector(np.zeros(10), 3, 4)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError, match="sigma_y"):
            NoiseModel(-0.1)
