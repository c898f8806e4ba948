"""Region algebra: membership, analytic distances, cutoff construction."""

import numpy as np
import pytest

from nlslab.core import make_grid
from nlslab.data import smooth_bump
from nlslab.regions import (
    Ball,
    Complement,
    Dilation,
    HalfSpace,
    NoAnalyticDistance,
    cutoff_build,
    mask_points,
    max_grad_fd,
    point_distance,
    region_distance,
)


@pytest.fixture(scope="module")
def line():
    return make_grid(1, 10.0, 512)


class TestMembership:
    def test_half_space(self, line):
        m = mask_points(HalfSpace(0, "above", 1.0), line.coords())
        assert m.shape == line.shape
        assert np.array_equal(m, line.x1 > 1.0)

    def test_ball_and_complement(self, line):
        b = Ball((0.5,), 2.0)
        m = mask_points(b, line.coords())
        mc = mask_points(Complement(b), line.coords())
        assert np.array_equal(m, ~mc)
        assert np.array_equal(m, np.abs(line.x1 - 0.5) < 2.0)

    def test_dilation(self, line):
        m = mask_points(Dilation(Ball((0.0,), 1.0), 2.0), line.coords())
        assert np.array_equal(m, np.abs(line.x1) <= 3.0)

    def test_two_dimensional_half_space(self):
        g = make_grid(2, 4.0, 32)
        m = mask_points(HalfSpace(1, "below", 0.0), g.coords())
        assert m.shape == g.shape
        assert m[:, : g.N // 2].all() and not m[:, g.N // 2 :].any()

    def test_axis_out_of_range(self, line):
        with pytest.raises(ValueError):
            mask_points(HalfSpace(1, "above", 0.0), line.coords())


class TestPointDistance:
    def test_half_space(self, line):
        d = point_distance(HalfSpace(0, "below", -1.0), line.coords())
        assert np.allclose(d, np.maximum(0.0, line.x1 + 1.0))

    def test_complement_of_ball(self, line):
        d = point_distance(Complement(Ball((0.0,), 3.0)), line.coords())
        assert np.allclose(d, np.maximum(0.0, 3.0 - np.abs(line.x1)))


class TestRegionDistance:
    def test_parallel_half_spaces(self):
        a = HalfSpace(0, "below", -3.0)
        b = HalfSpace(0, "above", 3.0)
        assert region_distance(a, b) == pytest.approx(6.0)
        assert region_distance(b, a) == pytest.approx(6.0)

    def test_touching_half_spaces(self):
        a = HalfSpace(0, "below", -3.0)
        b = HalfSpace(0, "above", 0.0)
        assert region_distance(a, b) == pytest.approx(3.0)
        assert region_distance(a, HalfSpace(0, "above", -3.0)) == 0.0

    def test_ball_vs_half_space(self):
        assert region_distance(Ball((0.0,), 1.0), HalfSpace(0, "above", 4.0)) == pytest.approx(3.0)
        assert region_distance(HalfSpace(0, "below", -2.0), Ball((0.0,), 1.0)) == pytest.approx(1.0)

    def test_ball_vs_ball(self):
        assert region_distance(Ball((-2.0,), 0.5), Ball((3.0,), 1.0)) == pytest.approx(3.5)
        assert region_distance(Ball((0.0,), 2.0), Ball((1.0,), 2.0)) == 0.0

    def test_two_dimensional_balls(self):
        a = Ball((0.0, 0.0), 1.0)
        b = Ball((3.0, 4.0), 1.5)
        assert region_distance(a, b) == pytest.approx(2.5)

    def test_dilation_peels(self):
        a = Ball((0.0,), 1.0)
        b = HalfSpace(0, "above", 7.0)
        assert region_distance(Dilation(a, 2.0), b) == pytest.approx(4.0)

    def test_complement_of_own_dilation(self):
        a = HalfSpace(0, "below", 0.0)
        assert region_distance(a, Complement(Dilation(a, 2.5))) == pytest.approx(2.5)
        assert region_distance(Complement(Dilation(a, 2.5)), a) == pytest.approx(2.5)
        # r = 0: the set and its complement touch
        assert region_distance(a, Complement(a)) == 0.0

    def test_complement_of_half_space_normalizes(self):
        a = HalfSpace(0, "below", -1.0)
        b = Complement(HalfSpace(0, "below", 1.0))  # effectively {x >= 1}
        assert region_distance(a, b) == pytest.approx(2.0)

    def test_crossing_half_spaces_meet(self):
        a = HalfSpace(0, "below", 0.0)
        b = HalfSpace(1, "above", 5.0)
        assert region_distance(a, b) == 0.0

    def test_unsupported_pair_raises(self):
        a = Ball((0.0,), 1.0)
        b = Complement(Ball((5.0,), 1.0))
        with pytest.raises(NoAnalyticDistance):
            region_distance(a, b)


class TestCutoff:
    def test_standard_ramp(self):
        g = make_grid(1, 10.0, 512)
        a = HalfSpace(0, "below", -1.0)
        b = HalfSpace(0, "above", 1.0)
        phi = cutoff_build(a, b, g)
        vals = phi.values.real
        mid = np.argmin(np.abs(g.x1))
        assert abs(vals[mid] - 0.5) <= 0.05
        assert np.abs(vals[mask_points(a, g.coords())]).max() <= 1e-3
        assert np.abs(vals[mask_points(b, g.coords())] - 1.0).max() <= 1e-3
        # ramp slope 1/2 plus the tau = 0.05 allowance
        assert max_grad_fd(g, vals) <= 0.525

    def test_ball_source(self):
        g = make_grid(2, 8.0, 128)
        a = Ball((0.0, 0.0), 1.0)
        b = HalfSpace(0, "above", 5.0)
        phi = cutoff_build(a, b, g)
        vals = phi.values.real
        assert max_grad_fd(g, vals) <= 1.05 / 4.0
        assert np.abs(vals[mask_points(a, g.coords())]).max() <= 1e-3

    def test_touching_regions_rejected(self):
        g = make_grid(1, 10.0, 512)
        a = HalfSpace(0, "below", 0.0)
        b = HalfSpace(0, "above", 0.0)
        with pytest.raises(ValueError):
            cutoff_build(a, b, g)

    def test_product_with_supported_field_keeps_target_norm(self):
        # phi * u equals u on the far region when u vanishes near the ramp
        g = make_grid(1, 20.0, 1024)
        u = smooth_bump(g, amp=1.0, radius=1.0, center=[6.0])
        a = HalfSpace(0, "below", 0.0)
        b = HalfSpace(0, "above", 4.0)
        phi = cutoff_build(a, b, g)
        prod = phi.values.real * u.values
        assert np.max(np.abs(prod - u.values)) < 1e-12
