import numpy as np
import pytest

from qpalloc.bdrate import (RdCurve, bd_quality, bd_rate, cubic_fit_residuals,
                            quality_overlap, read_rd_csv)
from qpalloc.errors import CurveError, FormatError, OverlapError


def curve(rates, qualities, tag="psnr"):
    return RdCurve(rates=np.asarray(rates, float),
                   qualities=np.asarray(qualities, float), metric_tag=tag)


RATES = [0.25, 0.55, 1.1, 2.3]
QUALS = [30.4, 33.1, 35.9, 38.6]


class TestCurveValidation:
    def test_three_points_rejected(self):
        with pytest.raises(CurveError, match="4 points"):
            curve(RATES[:3], QUALS[:3])

    def test_sorted_internally(self):
        shuffled = curve(RATES[::-1], QUALS[::-1])
        np.testing.assert_array_equal(shuffled.rates, RATES)
        np.testing.assert_array_equal(shuffled.qualities, QUALS)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(CurveError, match="positive"):
            curve([0.0, 0.5, 1.0, 2.0], QUALS)

    def test_non_monotone_quality_rejected(self):
        with pytest.raises(CurveError, match="increase"):
            curve(RATES, [30.0, 35.0, 33.0, 38.0])

    def test_duplicate_rates_rejected(self):
        with pytest.raises(CurveError, match="strictly increasing"):
            curve([0.25, 0.25, 1.0, 2.0], QUALS)


class TestBdRate:
    def test_identical_curves(self):
        assert bd_rate(curve(RATES, QUALS), curve(RATES, QUALS)) == \
            pytest.approx(0.0, abs=1e-9)

    def test_constant_rate_scaling(self):
        anchor = curve(RATES, QUALS)
        test = curve([r * 0.9 for r in RATES], QUALS)
        assert bd_rate(anchor, test) == pytest.approx(-10.0, abs=1e-6)

    def test_point_order_is_irrelevant(self):
        anchor = curve(RATES, QUALS)
        shuffled = curve(RATES[::-1], QUALS[::-1])
        test = curve([r * 1.15 for r in RATES], QUALS)
        assert bd_rate(anchor, test) == bd_rate(shuffled, test)

    def test_antisymmetry_product(self):
        anchor = curve(RATES, QUALS)
        test = curve([0.22, 0.5, 1.3, 2.1], [30.9, 33.4, 36.4, 38.2])
        a = bd_rate(anchor, test)
        b = bd_rate(test, anchor)
        assert (1 + a / 100.0) * (1 + b / 100.0) == pytest.approx(1.0, abs=1e-6)

    def test_rate_scale_equivariance(self):
        anchor = curve(RATES, QUALS)
        test = curve([0.22, 0.5, 1.3, 2.1], [30.9, 33.4, 36.4, 38.2])
        baseline = bd_rate(anchor, test)
        for factor in (0.01, 3.0, 1000.0):
            scaled = bd_rate(curve([r * factor for r in RATES], QUALS),
                             curve([r * factor for r in (0.22, 0.5, 1.3, 2.1)],
                                   [30.9, 33.4, 36.4, 38.2]))
            assert scaled == pytest.approx(baseline, abs=1e-9)

    def test_no_quality_overlap(self):
        low = curve(RATES, [10.0, 11.0, 12.0, 13.0])
        high = curve(RATES, [20.0, 21.0, 22.0, 23.0])
        with pytest.raises(OverlapError):
            bd_rate(low, high)

    def test_pchip_mode_close_to_cubic_on_smooth_curves(self):
        anchor = curve(RATES, QUALS)
        test = curve([r * 0.9 for r in RATES], QUALS)
        assert bd_rate(anchor, test, mode="pchip") == pytest.approx(-10.0, abs=1e-6)


class TestBdQuality:
    def test_identical_curves(self):
        assert bd_quality(curve(RATES, QUALS), curve(RATES, QUALS)) == \
            pytest.approx(0.0, abs=1e-9)

    def test_constant_quality_shift(self):
        anchor = curve(RATES, QUALS)
        test = curve(RATES, [q + 1.0 for q in QUALS])
        assert bd_quality(anchor, test) == pytest.approx(1.0, abs=1e-6)

    def test_disjoint_rate_ranges(self):
        anchor = curve(RATES, QUALS)
        test = curve([r * 100 for r in RATES], QUALS)
        with pytest.raises(OverlapError):
            bd_quality(anchor, test)


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("rate_bpp,quality\n"
                        + "".join(f"{r},{q}\n" for r, q in zip(RATES, QUALS)))
        loaded = read_rd_csv(path, metric_tag="msssim")
        np.testing.assert_array_equal(loaded.rates, RATES)
        assert loaded.metric_tag == "msssim"

    def test_header_required(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("bpp,psnr\n0.2,30\n")
        with pytest.raises(FormatError, match="header"):
            read_rd_csv(path)

    def test_bad_row(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("rate_bpp,quality\n0.2,30,9\n")
        with pytest.raises(FormatError, match="row"):
            read_rd_csv(path)


class TestDiagnostics:
    def test_residuals_have_curve_length(self):
        res = cubic_fit_residuals(curve(RATES, QUALS))
        assert res.shape == (4,)
        # cubic through 4 points interpolates them
        np.testing.assert_allclose(res, 0.0, atol=1e-9)

    def test_overlap_reported(self):
        lo, hi = quality_overlap(curve(RATES, QUALS),
                                 curve(RATES, [31.0, 34.0, 36.0, 39.0]))
        assert (lo, hi) == (31.0, 38.6)
