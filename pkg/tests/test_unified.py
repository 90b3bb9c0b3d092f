import numpy as np
import pytest

from hdrvqa.config import Settings
from hdrvqa.errors import GeometryError, StateError, TooSmallError
from hdrvqa.metrics import transform_count
from hdrvqa.models import HdrmaxChannel, Plane
from hdrvqa.unified import (
    FrameTransforms,
    ViewingGeometry,
    apply_csf,
    csf_table_rows,
    csf_weights,
    haar_dwt,
    haar_idwt,
    sast_factor,
    sast_rescale,
    snap_factor,
    transform_plane,
    unified_transform,
)

from .conftest import make_frame, textured_plane


class TestGeometry:

    def test_parse(self):
        geom = ViewingGeometry.parse("3:1080")
        assert geom.distance_to_height == 3.0
        assert geom.display_height_px == 1080

    def test_parse_ratio_only(self):
        assert ViewingGeometry.parse("2.0").display_height_px == 2160

    @pytest.mark.parametrize("value", ["abc:2160", "1.5:tall", "1.5:2160:1"])
    def test_parse_errors(self, value):
        with pytest.raises(GeometryError):
            ViewingGeometry.parse(value)

    def test_pixels_per_degree(self, geom):
        assert geom.pixels_per_degree == pytest.approx(58.6, abs=0.1)

    def test_default_factor_snaps_to_one(self, geom):
        assert sast_factor(geom) == pytest.approx(0.927, abs=1e-3)
        assert snap_factor(sast_factor(geom)) == 1.0

    def test_snap(self):
        assert snap_factor(1.9) == 2.0
        assert snap_factor(1.5) == 1.5
        with pytest.raises(GeometryError):
            snap_factor(0.0)


class TestSast:

    def test_identity_factor_returns_input(self, plane):
        assert sast_rescale(plane, 1.0) is plane

    def test_halving(self, plane):
        out = sast_rescale(plane, 2.0)
        assert out.shape == (64, 64)

    def test_too_small(self):
        with pytest.raises(TooSmallError):
            sast_rescale(np.zeros((20, 20)), 2.0, levels=4)


class TestHaar:

    @pytest.mark.parametrize("shape", [(64, 64), (128, 96), (37, 53)])
    def test_perfect_reconstruction(self, rng, shape):
        x = rng.uniform(size=shape)
        pyr = haar_dwt(x, 3)
        assert np.max(np.abs(haar_idwt(pyr) - x)) < 1e-12

    def test_energy_preserved(self, rng):
        x = rng.uniform(size=(64, 64))
        pyr = haar_dwt(x, 4)
        assert pyr.energy() == pytest.approx(float(np.sum(x * x)), rel=1e-12)

    def test_constant_plane_has_no_detail(self):
        pyr = haar_dwt(np.full((32, 32), 0.25), 3)
        for l in range(1, 4):
            bands = pyr.level(l)
            assert np.all(bands.H == 0) and np.all(bands.V == 0) and np.all(bands.D == 0)
        assert np.allclose(pyr.level(3).A, 0.25 * 8)

    @pytest.mark.parametrize("axis", [0, 1])
    def test_two_pixel_shift_moves_level_one_by_one(self, plane, axis):
        bands = haar_dwt(plane, 1).level(1)
        shifted = haar_dwt(np.roll(plane, 2, axis=axis), 1).level(1)
        for name in ("A", "H", "V", "D"):
            expected = np.roll(getattr(bands, name), 1, axis=axis)
            assert np.array_equal(getattr(shifted, name)[4:-4, 4:-4], expected[4:-4, 4:-4]), name

    def test_level_shapes(self, plane):
        pyr = haar_dwt(plane, 4)
        assert [pyr.level(l).A.shape for l in range(1, 5)] == [(64, 64), (32, 32), (16, 16), (8, 8)]

    def test_level_out_of_range(self, plane):
        with pytest.raises(GeometryError):
            haar_dwt(plane, 2).level(3)

    def test_too_small(self):
        with pytest.raises(TooSmallError):
            haar_dwt(np.zeros((15, 64)), 4)

    def test_bands_read_only(self, plane):
        pyr = haar_dwt(plane, 1)
        with pytest.raises(ValueError):
            pyr.level(1).A[0, 0] = 1.0


class TestCsf:

    def test_default_weights(self, geom):
        w = csf_weights(geom, 4)
        assert w.weight(1, "H") == pytest.approx(0.7575, abs=0.005)
        assert w.weight(2, "V") == pytest.approx(0.978, abs=0.005)
        assert w.weight(3, "A") == 1.0

    def test_flat(self, geom):
        w = csf_weights(geom, 4, flat=True)
        assert {v for _, _, v in w.rows()} == {1.0}

    def test_table_rows(self, geom):
        rows = csf_table_rows(geom, 4)
        assert len(rows) == 16
        assert rows[0] == (1, "A", 1.0)

    def test_weighted_pyramid_refuses_second_pass(self, geom, plane):
        weighted = apply_csf(haar_dwt(plane, 4), csf_weights(geom, 4))
        assert weighted.csf_applied
        with pytest.raises(StateError):
            apply_csf(weighted, csf_weights(geom, 4))
        with pytest.raises(StateError):
            haar_idwt(weighted)

    def test_weights_scale_details_only(self, geom, plane):
        raw = haar_dwt(plane, 2)
        weighted = transform_plane(plane, geom, 2)
        w = csf_weights(geom, 2)
        assert np.array_equal(weighted.level(2).A, raw.level(2).A)
        assert np.allclose(weighted.level(1).D, raw.level(1).D * w.weight(1, "D"))


class TestFrameTransforms:

    def test_base_is_memoized(self, frame, transforms):
        t = transforms(frame, role="ref")
        before = transform_count("ref", "Y", "base")
        first = t.base(Plane.Y)
        assert t.base("Y") is first
        assert transform_count("ref", "Y", "base") - before == 1
        assert t.built == [("Y", "base")]

    def test_hdrmax_pyramids_are_separate(self, frame, transforms):
        t = transforms(frame, role="test")
        before = transform_count("test", "Y", "H2_POS")
        pos = t.hdrmax(HdrmaxChannel.H2_POS)
        t.hdrmax("H2_POS")
        assert pos is not t.base(Plane.Y)
        assert transform_count("test", "Y", "H2_POS") - before == 1

    def test_temporal_of_static_pair_is_zero(self, frame, transforms):
        cur = transforms(frame)
        prev = transforms(make_frame(frame.y, index=1))
        pyr = cur.temporal(prev)
        assert all(np.all(band == 0) for band in pyr.level(1))

    def test_chroma_uses_subsampled_density(self, frame, geom):
        t = FrameTransforms(frame, geom, settings=Settings())
        cb = t.base(Plane.CB)
        assert cb.level(1).A.shape == (32, 32)

    def test_levels_override(self, frame, geom):
        assert FrameTransforms(frame, geom, settings=Settings(), levels=2).base().n_levels == 2

    def test_unified_transform_covers_planes(self, rng, geom):
        pyramids = unified_transform(make_frame(textured_plane(rng, (64, 64))), geom, 3, settings=Settings())
        assert set(pyramids) == set(Plane)
        assert pyramids[Plane.CR].level(3).A.shape == (4, 4)
