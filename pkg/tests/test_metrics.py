import math

import numpy as np
import pytest

from qpalloc.imageio import RasterImage
from qpalloc.metrics import lpips_to_db, metric_report, ms_ssim, psnr, ssim

from conftest import textured_pixels
from _oracles import noisy_variant, reference_ms_ssim


def constant_image(value, shape=(16, 16, 3)):
    return RasterImage(pixels=np.full(shape, value, np.uint8))


class TestPsnr:
    def test_identical_is_infinite(self, textured_image):
        assert psnr(textured_image, textured_image) == math.inf

    def test_uniform_offset_of_16(self):
        a = constant_image(100)
        b = constant_image(116)
        # MSE 256 -> 10*log10(255^2/256)
        assert psnr(a, b) == pytest.approx(24.048403955560614, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            psnr(constant_image(0, (2, 2, 3)), constant_image(0, (3, 3, 3)))


class TestSsim:
    def test_self_similarity(self, textured_image):
        assert ssim(textured_image, textured_image) == pytest.approx(1.0, abs=1e-9)

    def test_constant_images_match_closed_form(self):
        c1 = (0.01 * 255) ** 2
        expected = (2 * 100 * 120 + c1) / (100 ** 2 + 120 ** 2 + c1)
        value = ssim(constant_image(100), constant_image(120))
        assert value == pytest.approx(expected, abs=1e-9)

    def test_window_precondition(self):
        with pytest.raises(ValueError, match="window"):
            ssim(constant_image(0, (8, 8, 3)), constant_image(0, (8, 8, 3)))

    def test_exact_symmetry_and_bound(self):
        for seed in range(4):
            a = RasterImage(pixels=textured_pixels(32, 48, seed=seed))
            b = noisy_variant(a, sigma=12.0, seed=seed + 100)
            forward = ssim(a, b)
            assert forward == ssim(b, a)
            assert abs(forward) <= 1.0


class TestMsSsim:
    def test_self_similarity(self):
        img = RasterImage(pixels=textured_pixels(176, 176, seed=9))
        assert ms_ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_minimum_size_precondition(self):
        small = constant_image(0, (128, 128, 3))
        with pytest.raises(ValueError, match="scale|small"):
            ms_ssim(small, small)

    def test_against_reference_implementation(self):
        for seed, sigma in [(0, 4.0), (1, 10.0), (2, 20.0), (3, 35.0), (4, 60.0)]:
            a = RasterImage(pixels=textured_pixels(176, 176, seed=seed))
            b = noisy_variant(a, sigma=sigma, seed=seed + 50)
            assert ms_ssim(a, b) == pytest.approx(reference_ms_ssim(a, b), abs=1e-4)

    def test_exact_symmetry(self):
        a = RasterImage(pixels=textured_pixels(176, 176, seed=5))
        b = noisy_variant(a, sigma=15.0, seed=77)
        assert ms_ssim(a, b) == ms_ssim(b, a)

    def test_monotone_degradation(self):
        base = RasterImage(pixels=textured_pixels(176, 176, seed=6))
        prev_psnr = math.inf
        prev_ms = 1.0
        noise = np.zeros(base.pixels.shape)
        rng = np.random.default_rng(123)
        for step in range(5):
            noise = noise + rng.normal(0.0, 6.0, base.pixels.shape)
            degraded = RasterImage(pixels=np.clip(
                np.round(base.pixels + noise), 0, 255).astype(np.uint8))
            cur_psnr = psnr(base, degraded)
            cur_ms = ms_ssim(base, degraded)
            assert cur_psnr < prev_psnr
            assert cur_ms <= prev_ms + 1e-12
            assert 0.0 <= cur_ms <= 1.0
            prev_psnr, prev_ms = cur_psnr, cur_ms


class TestLpipsToDb:
    @pytest.mark.parametrize("value,expected", [(0.1, 10.0), (1.0, 0.0), (0.01, 20.0)])
    def test_powers_of_ten(self, value, expected):
        assert lpips_to_db(value) == pytest.approx(expected, abs=1e-12)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            lpips_to_db(0.0)

    def test_round_trip_with_inverse(self):
        for x in np.linspace(-30.0, 30.0, 13):
            assert lpips_to_db(10.0 ** (-x / 10.0)) == pytest.approx(x, abs=1e-12)


class TestReport:
    def test_bundles_all_metrics(self):
        img = RasterImage(pixels=textured_pixels(176, 176, seed=7))
        report = metric_report(img, img, lpips=0.1)
        assert report.psnr == math.inf
        assert report.ssim == pytest.approx(1.0, abs=1e-12)
        assert report.ms_ssim == pytest.approx(1.0, abs=1e-12)
        assert report.lpips_db == pytest.approx(10.0, abs=1e-12)
