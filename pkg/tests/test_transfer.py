import csv
import io
import math

import numpy as np
import pytest

from hdrvqa.errors import DomainError
from hdrvqa.models import CurveName, HdrmaxChannel
from hdrvqa.transfer import (
    LocalNormConfig,
    NONLINEARITY_HEADER,
    gaussian_kernel,
    hdrmax1,
    hdrmax2_neg,
    hdrmax2_pos,
    hdrmax_transform,
    local_meansub_normalize,
    local_minmax_normalize,
    nonlinearity_csv,
    pq_eotf,
    pu21_coefficients,
    pu21_encode,
    sample_curve,
)

from .conftest import textured_plane


def pq_oracle(e: float) -> float:
    """ST 2084 written out with the published rational constants"""
    m1, m2 = 0.1593017578125, 78.84375
    c1, c2, c3 = 0.8359375, 18.8515625, 18.6875
    p = e ** (1 / m2)
    return 10000.0 * (max(p - c1, 0.0) / (c2 - c3 * p)) ** (1 / m1)


class TestPq:

    def test_endpoints(self):
        assert pq_eotf(0.0) == 0.0
        assert pq_eotf(1.0) == 10000.0

    def test_hundred_nits(self):
        assert pq_eotf(0.5081) == pytest.approx(100.0, rel=0.01)

    @pytest.mark.parametrize("code", [0.1, 0.25, 0.5081, 0.75, 0.9])
    def test_matches_oracle(self, code):
        assert pq_eotf(code) == pytest.approx(pq_oracle(code), rel=1e-12)

    def test_monotone(self):
        values = pq_eotf(np.linspace(0.0, 1.0, 10_000))
        assert np.all(np.diff(values[1:]) > 0)

    @pytest.mark.parametrize("code", [-0.01, 1.01, float("nan")])
    def test_domain(self, code):
        with pytest.raises(DomainError):
            pq_eotf(code)


class TestPu21:

    def test_coefficients_load(self):
        assert len(pu21_coefficients()) == 7

    def test_floor_near_zero(self):
        assert abs(pu21_encode(0.005)) < 1e-3

    def test_clamped_below_floor(self):
        assert pu21_encode(0.0) == pu21_encode(0.005)

    def test_monotone(self):
        assert pu21_encode(100.0) < pu21_encode(1000.0)
        grid = np.logspace(np.log10(0.005), 4, 10_000)
        assert np.all(np.diff(pu21_encode(grid)) > 0)

    def test_composition_with_pq(self):
        values = pu21_encode(pq_eotf(np.linspace(0.1, 1.0, 1000)))
        assert np.all(np.diff(values) > 0)

    def test_negative(self):
        with pytest.raises(DomainError):
            pu21_encode(-1.0)


class TestLocalNormalization:

    def test_minmax_extremes(self, plane):
        cfg = LocalNormConfig()
        out = local_minmax_normalize(plane, cfg)
        assert out.min() >= -1.0 and out.max() <= 1.0
        assert out[np.unravel_index(np.argmin(plane), plane.shape)] == -1.0
        assert out[np.unravel_index(np.argmax(plane), plane.shape)] == 1.0

    def test_minmax_constant(self):
        out = local_minmax_normalize(np.full((32, 32), 0.3))
        assert np.all(out == 0.0)

    def test_meansub_constant(self):
        out = local_meansub_normalize(np.full((40, 40), 0.7))
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_meansub_impulse(self):
        x = np.zeros((64, 64))
        x[32, 32] = 1.0
        cfg = LocalNormConfig()
        g = gaussian_kernel(cfg.meansub_window, cfg.sigma)
        out = local_meansub_normalize(x, cfg)
        assert out[32, 32] == pytest.approx(1.0 - g[cfg.meansub_window // 2] ** 2, abs=1e-14)

    def test_meansub_bounded(self, plane):
        out = local_meansub_normalize(plane)
        assert np.all(np.abs(out) < 1.0)

    def test_sigma_default(self):
        assert LocalNormConfig().sigma == pytest.approx(31 / 6)
        assert LocalNormConfig(gaussian_sigma=2.0).sigma == 2.0

    @pytest.mark.parametrize("window", [2, 1, 16])
    def test_windows_must_be_odd(self, window):
        with pytest.raises(ValueError):
            LocalNormConfig(minmax_window=window)

    @pytest.mark.parametrize("channel,radius", [(HdrmaxChannel.H1, 8), (HdrmaxChannel.H2_POS, 15)])
    def test_translation_equivariance(self, rng, channel, radius):
        x = textured_plane(rng, (80, 80))
        dy, dx = 3, 5
        shifted = np.roll(x, (dy, dx), axis=(0, 1))
        out = hdrmax_transform(x, channel)
        out_s = hdrmax_transform(shifted, channel)
        r = radius
        assert np.allclose(out_s[r + dy:80 - r, r + dx:80 - r], out[r:80 - r - dy, r:80 - r - dx], rtol=1e-12, atol=1e-12)


class TestNonlinearities:

    def test_hdrmax1_values(self):
        assert hdrmax1(0.0) == 0.0
        assert hdrmax1(1.0) == pytest.approx(math.e ** 4 - 1, rel=1e-12)
        assert hdrmax1(-1.0) == pytest.approx(-(math.e ** 4 - 1), rel=1e-12)

    def test_hdrmax1_odd(self, rng):
        x = rng.uniform(-1, 1, 1000)
        assert np.max(np.abs(hdrmax1(-x) + hdrmax1(x))) < 1e-12

    def test_hdrmax1_literal_is_discontinuous(self):
        assert hdrmax1(0.0, literal=True) == -1.0
        assert hdrmax1(1e-9, literal=True) == pytest.approx(0.0, abs=1e-6)

    def test_hdrmax2(self):
        assert hdrmax2_pos(0.0) == 1.0
        assert hdrmax2_neg(0.0) == 1.0
        assert hdrmax2_pos(1.0) == pytest.approx(1.6487212707, rel=1e-9)
        assert hdrmax2_neg(-1.0) == pytest.approx(148.4131591026, rel=1e-9)

    def test_monotone(self):
        x = np.linspace(-1, 1, 10_000)
        assert np.all(np.diff(hdrmax1(x)) > 0)
        assert np.all(np.diff(hdrmax2_pos(x)) > 0)
        assert np.all(np.diff(hdrmax2_neg(x)) < 0)

    def test_constant_plane_transforms(self):
        flat = np.full((40, 40), 0.4)
        assert np.all(hdrmax_transform(flat, HdrmaxChannel.H1) == 0.0)
        assert np.allclose(hdrmax_transform(flat, HdrmaxChannel.H2_POS), 1.0)

    def test_h1_bounds(self, plane):
        out = hdrmax_transform(plane, HdrmaxChannel.H1)
        assert np.all(np.abs(out) <= math.e ** 4 - 1 + 1e-9)


class TestCurves:

    @pytest.mark.parametrize("name", list(CurveName))
    def test_samples_strictly_increasing(self, name):
        curve = sample_curve(name, 101)
        xs = [x for x, _ in curve.samples]
        assert len(xs) == 101
        assert all(b > a for a, b in zip(xs, xs[1:]))

    def test_csv_layout(self):
        rows = list(csv.reader(io.StringIO(nonlinearity_csv())))
        assert rows[0] == NONLINEARITY_HEADER
        body = [[float(v) for v in r] for r in rows[1:]]
        assert len(body) == 1001
        assert body[500] == [0.0, 0.0, 1.0, 1.0]
        h1 = np.array([r[1] for r in body])
        assert np.max(np.abs(h1 + h1[::-1])) < 1e-12
        assert np.all(np.diff([r[3] for r in body]) < 0)
