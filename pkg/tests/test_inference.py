import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from extremo.core import DomainError, GridSpec, LagSets
from extremo.extremogram import EstimationError
from extremo.fit import FitConfig, WlseFit, fit_field
from extremo.inference import (BlockScheme, enumerate_blocks, inf_quantile,
                               interval_from_c, permutation_test, rate, subsample_ci)
from extremo.simulate import RngStream, SpaceTimeField


def frechet_field(n, T, seed):
    rng = np.random.default_rng(seed)
    return SpaceTimeField(GridSpec(n, T), 1 / rng.exponential(size=(n, n, T)))


def smooth_field(n, T, seed):
    """Moving-maximum field with short-range spatial and temporal dependence."""
    rng = np.random.default_rng(seed)
    z = 1 / rng.exponential(size=(n + 2, n + 2, T + 1))
    vals = np.maximum.reduce([z[:-2, 1:-1, :-1], z[1:-1, 1:-1, :-1], z[2:, 1:-1, :-1],
                              z[1:-1, :-2, :-1], z[1:-1, 2:, :-1], z[1:-1, 1:-1, 1:]])
    return SpaceTimeField(GridSpec(n, T), vals)


class TestBlocks:
    def test_published_layout_count(self):
        blocks = enumerate_blocks(GridSpec(70, 10), BlockScheme(b_s=50, e_s=2), "spatial")
        assert len(blocks) == 121

    def test_single_block(self):
        g = GridSpec(5, 3)
        blocks = enumerate_blocks(g, BlockScheme(b_s=5, e_s=1), "spatial")
        assert blocks == [(slice(0, 5), slice(0, 5), slice(0, 3))]

    def test_tiling(self):
        g = GridSpec(6, 2)
        blocks = enumerate_blocks(g, BlockScheme(b_s=2, e_s=2), "spatial")
        assert len(blocks) == 9
        cover = np.zeros(g.shape, int)
        for b in blocks:
            cover[b] += 1
        assert_array_equal(cover, 1)

    def test_temporal(self):
        g = GridSpec(3, 10)
        blocks = enumerate_blocks(g, BlockScheme(b_t=4, e_t=3), "temporal")
        assert [b[2] for b in blocks] == [slice(0, 4), slice(3, 7), slice(6, 10)]
        assert all(b[0] == slice(0, 3) for b in blocks)

    @given(st.integers(2, 30), st.data())
    def test_blocks_inside_grid(self, n, data):
        b = data.draw(st.integers(1, n))
        e = data.draw(st.integers(1, b))
        g = GridSpec(n, 2)
        scheme = BlockScheme(b_s=b, e_s=e)
        blocks = enumerate_blocks(g, scheme, "spatial")
        q = (n - b) // e + 1
        assert len(blocks) == q * q == scheme.block_count(g, "spatial")
        for s1, s2, _ in blocks:
            assert 0 <= s1.start and s1.stop <= n and s1.stop - s1.start == b
            assert 0 <= s2.start and s2.stop <= n

    @pytest.mark.parametrize("scheme", [BlockScheme(b_s=8, e_s=1), BlockScheme(b_s=3, e_s=4),
                                        BlockScheme(b_s=3), BlockScheme(b_s=0, e_s=1)])
    def test_invalid(self, scheme):
        with pytest.raises(DomainError):
            enumerate_blocks(GridSpec(5, 2), scheme, "spatial")


class TestInfQuantile:
    def test_example(self):
        assert inf_quantile([1, 2, 3, 4], 0.95) == 4
        assert inf_quantile([4, 1, 3, 2], 0.5) == 2

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=80), st.floats(0.01, 1.0))
    def test_defining_inequalities(self, xs, level):
        xs = np.array(xs)
        c = inf_quantile(xs, level)
        assert np.mean(xs <= c) >= level - 1e-9
        smaller = xs[xs < c]
        if smaller.size:
            assert np.mean(xs <= smaller.max()) < level - 1e-12 or \
                math.isclose(np.mean(xs <= smaller.max()), level)

    def test_errors(self):
        with pytest.raises(EstimationError):
            inf_quantile([], 0.5)
        with pytest.raises(DomainError):
            inf_quantile([1.0], 0.0)


class TestIntervals:
    def fit(self, theta=0.4, alpha=1.5):
        return WlseFit(theta, alpha, False, alpha, 0.0, 0.0)

    def test_hand_example(self):
        th, al = interval_from_c(self.fit(), 0.1, 1.0)
        assert_allclose(th, (0.4 * math.exp(-0.1), 0.4 * math.exp(0.1)), rtol=1e-12)
        assert_allclose(th, (0.3619, 0.4421), atol=1e-4)
        assert_allclose(al, (1.4, 1.6), rtol=1e-12)

    def test_alpha_clipped(self):
        _, al = interval_from_c(self.fit(alpha=1.95), 0.5, 2.0)
        assert al == (1.7, 2.0)
        _, al = interval_from_c(self.fit(alpha=0.1), 0.5, 1.0)
        assert al[0] == 0.0

    def test_zero_radius(self):
        th, al = interval_from_c(self.fit(), 0.0, 3.0)
        assert th == (0.4, 0.4) and al == (1.5, 1.5)

    def test_rate(self):
        assert_allclose(rate(70, 0.3, "spatial"), 70 ** 0.7)
        assert_allclose(rate(300, 0.3, "temporal"), math.sqrt(300) ** 0.7)


class TestSubsampling:
    def test_spatial_ci(self):
        field = smooth_field(14, 4, 1)
        cfg = FitConfig(LagSets((1, 2, 4, 5), (1, 2)), quantile=0.8)
        region = subsample_ci(field, BlockScheme(b_s=10, e_s=2), cfg, 0.9, "spatial")
        full, _ = fit_field(field, "spatial", cfg)
        assert region.estimate.theta == full.theta
        lo, hi = region.theta_interval
        assert lo <= full.theta <= hi
        a_lo, a_hi = region.alpha_interval
        assert 0 <= a_lo <= full.alpha <= a_hi <= 2
        d = region.distribution
        assert d.n_blocks == 9
        assert len(d.deviations) + len(d.failures) == 9
        assert_allclose(d.tau_n, 14 ** 0.7)
        assert_allclose(d.tau_b, 10 ** 0.7)
        assert region.c_quantile == inf_quantile(d.deviations, 0.9)
        assert np.mean(d.deviations <= region.c_quantile) >= 0.9
        assert set(region.to_dict()) >= {"theta_interval", "alpha_interval", "c_quantile"}

    def test_identical_blocks_give_point_interval(self):
        # one block equal to the whole grid reproduces the full estimate
        field = smooth_field(10, 4, 1)
        cfg = FitConfig(LagSets((1, 2, 4), (1,)), quantile=0.8)
        region = subsample_ci(field, BlockScheme(b_s=10, e_s=1), cfg, 0.95, "spatial")
        assert region.c_quantile == 0.0
        assert region.theta_interval == (region.estimate.theta,) * 2
        assert region.alpha_interval == (region.estimate.alpha,) * 2

    def test_temporal_ci(self):
        field = smooth_field(4, 60, 2)
        cfg = FitConfig(LagSets((1,), (1, 2, 3)), quantile=0.8, bias_correct=False)
        region = subsample_ci(field, BlockScheme(b_t=40, e_t=5), cfg, 0.9, "temporal")
        assert region.axis == "temporal"
        assert_allclose(region.distribution.tau_n, math.sqrt(60) ** 0.7)
        lo, hi = region.theta_interval
        assert lo <= region.estimate.theta <= hi

    def test_too_many_failures(self):
        # independent noise: most blocks have no joint exceedances at larger lags
        field = frechet_field(6, 1, 0)
        cfg = FitConfig(LagSets((1, 2), (1,)), quantile=0.95)
        with pytest.raises(EstimationError):
            subsample_ci(field, BlockScheme(b_s=3, e_s=1), cfg, 0.9, "spatial")

    def test_level_domain(self):
        with pytest.raises(DomainError):
            subsample_ci(frechet_field(4, 2, 0), BlockScheme(b_s=2, e_s=1), level=1.0)


class TestPermutation:
    def test_null_field(self):
        field = frechet_field(8, 8, 4)
        lags = LagSets((1, 2, 4), (1, 2, 3))
        env = permutation_test(field, lags, 0.9, n_perm=200, band=0.9, rng=RngStream(1))
        sp, tp = env.inside()
        assert sp.shape == (3,) and tp.shape == (3,)
        assert np.all(env.spatial_lo <= env.spatial_hi)
        assert np.mean(np.concatenate([sp, tp])) >= 0.5
        assert len(list(env.rows())) == 6

    def test_order_statistics(self):
        # with band 0.95 and 1000 permutations the bounds are the 25th and 975th
        field = frechet_field(5, 5, 1)
        lags = LagSets((1,), (1,))
        env = permutation_test(field, lags, 0.8, n_perm=1000, band=0.95, rng=RngStream(2))
        assert env.n_perm == 1000
        assert env.temporal_lo[0] <= env.temporal_hi[0]

    def test_constant_field_is_degenerate(self):
        field = SpaceTimeField(GridSpec(3, 3), np.full((3, 3, 3), 2.0))
        env = permutation_test(field, LagSets((1,), (1,)), 0.5, n_perm=40, band=0.9,
                               rng=RngStream(0))
        # nothing exceeds the threshold, so every value is missing
        assert np.isnan(env.spatial_observed).all()

    def test_dependent_field_leaves_envelope(self):
        field = smooth_field(10, 10, 3)
        env = permutation_test(field, LagSets((1, 2), (1,)), 0.9, n_perm=200, band=0.95,
                               rng=RngStream(3))
        assert env.spatial_observed[0] > env.spatial_hi[0]
        assert env.temporal_observed[0] > env.temporal_hi[0]

    def test_reproducible(self):
        field = frechet_field(5, 4, 2)
        lags = LagSets((1, 2), (1,))
        a = permutation_test(field, lags, 0.8, n_perm=60, band=0.9, rng=RngStream(5))
        b = permutation_test(field, lags, 0.8, n_perm=60, band=0.9, rng=RngStream(5), batch=7)
        assert_array_equal(a.spatial_lo, b.spatial_lo)
        assert_array_equal(a.temporal_hi, b.temporal_hi)

    def test_too_few_permutations(self):
        with pytest.raises(DomainError):
            permutation_test(frechet_field(4, 4, 0), LagSets((1,), (1,)), n_perm=30, band=0.95)
