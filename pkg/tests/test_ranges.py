import numpy as np
import pytest

from depthtone import (
    BlockSweepConfig,
    DepthGrid,
    EmptyGrid,
    extract_depth_block,
    generate_blocks,
    locate_anchor,
    make_hemisphere_grid,
)

from conftest import random_grid


def grid_of(depths):
    depths = np.asarray(depths, dtype=float).reshape(1, -1)
    return DepthGrid(depths, np.ones_like(depths, dtype=bool))


class TestLocateAnchor:
    def test_percentile_zero_is_minimum(self):
        assert locate_anchor(grid_of([3.0, 7.0, 9.0]), 0.0) == 3.0

    def test_constant_grid(self):
        assert locate_anchor(grid_of([5.0, 5.0, 5.0]), 0.02) == 5.0

    def test_outlier_rejection(self):
        # sort-and-index oracle: sorted[floor(0.002 * 999)] = sorted[1] = 10
        depths = np.concatenate(([0.0], np.full(999, 10.0)))
        assert locate_anchor(grid_of(depths), 0.002) == 10.0

    def test_monotone_below_median(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            grid = random_grid(rng)
            anchor = locate_anchor(grid, rng.uniform(0.0, 0.05))
            assert anchor <= np.median(grid.valid_depths())

    def test_empty_grid(self):
        grid = DepthGrid(np.zeros((1, 1)), np.zeros((1, 1), dtype=bool))
        with pytest.raises(EmptyGrid):
            locate_anchor(grid)


class TestExtractBlock:
    def test_simple_slab(self):
        grid = grid_of([0.0, 30.0, 70.0])
        block = extract_depth_block(grid, 60.0, anchor=0.0)
        np.testing.assert_array_equal(block.valid_mask, [[True, True, False]])

    def test_block_covering_everything_is_noop(self):
        rng = np.random.default_rng(1)
        grid = random_grid(rng)
        depths = grid.valid_depths()
        span = depths.max() - depths.min()
        block = extract_depth_block(grid, span + 1.0, anchor=depths.min())
        np.testing.assert_array_equal(block.valid_mask, grid.valid_mask)

    def test_pixels_nearer_than_anchor_are_masked(self):
        grid = grid_of([1.0, 5.0, 8.0])
        block = extract_depth_block(grid, 100.0, anchor=5.0)
        np.testing.assert_array_equal(block.valid_mask, [[False, True, True]])

    def test_empty_block(self):
        grid = grid_of([1.0, 2.0])
        with pytest.raises(EmptyGrid):
            extract_depth_block(grid, 1.0, anchor=50.0)

    def test_hemisphere_cap_fraction(self):
        # spherical-cap oracle: a dome of radius R cut d_i below its apex
        # keeps projected radius^2 = R^2 - (R - d_i)^2, so the masked
        # fraction of dome pixels is ((R - d_i)/R)^2 = (20/80)^2 = 1/16
        grid = make_hemisphere_grid(size=401, radius_mm=80.0, apex_mm=120.0,
                                    background_mm=200.0)
        anchor = locate_anchor(grid, 0.0)
        assert anchor == 120.0
        block = extract_depth_block(grid, 60.0, anchor)
        on_dome = grid.samples < 200.0
        assert not block.valid_mask[~on_dome].any(), "background must be fully masked"
        masked_frac = 1.0 - block.valid_mask[on_dome].sum() / on_dome.sum()
        assert masked_frac == pytest.approx(0.0625, rel=0.02)


class TestGenerateBlocks:
    def test_default_sweep_has_ten_blocks(self):
        grid = grid_of(np.linspace(0.0, 200.0, 64))
        blocks = generate_blocks(grid, BlockSweepConfig(50.0, 140.0, 10.0))
        assert [d for d, _ in blocks] == [50.0, 60.0, 70.0, 80.0, 90.0,
                                          100.0, 110.0, 120.0, 130.0, 140.0]

    def test_single_block_when_dmin_equals_dmax(self):
        grid = grid_of(np.linspace(0.0, 200.0, 64))
        blocks = generate_blocks(grid, BlockSweepConfig(60.0, 60.0, 10.0))
        assert len(blocks) == 1

    def test_nesting(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            grid = random_grid(rng)
            blocks = generate_blocks(grid, BlockSweepConfig(50.0, 140.0, 10.0))
            for (_, small), (_, big) in zip(blocks, blocks[1:]):
                assert not (small.valid_mask & ~big.valid_mask).any()

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BlockSweepConfig(d_min_mm=100.0, d_max_mm=50.0)
        with pytest.raises(ValueError):
            BlockSweepConfig(delta_d_mm=0.0)
        with pytest.raises(ValueError):
            BlockSweepConfig(anchor_percentile=0.2)


class TestProperties:
    def test_idempotence_fixed_anchor(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            grid = random_grid(rng)
            anchor = locate_anchor(grid, 0.001)
            once = extract_depth_block(grid, 80.0, anchor)
            twice = extract_depth_block(once, 80.0, anchor)
            np.testing.assert_array_equal(once.valid_mask, twice.valid_mask)

    def test_idempotence_recomputed_minimum_anchor(self):
        # with percentile 0 the anchor survives extraction, so re-running
        # the whole selection changes nothing
        rng = np.random.default_rng(4)
        for _ in range(20):
            grid = random_grid(rng)
            once = extract_depth_block(grid, 80.0, locate_anchor(grid, 0.0))
            twice = extract_depth_block(once, 80.0, locate_anchor(once, 0.0))
            np.testing.assert_array_equal(once.valid_mask, twice.valid_mask)

    def test_shift_invariance(self):
        # integer depths and shifts keep the float arithmetic exact
        rng = np.random.default_rng(5)
        for _ in range(20):
            grid = random_grid(rng, integer_mm=True)
            shift = float(rng.integers(1, 1000))
            shifted = DepthGrid(grid.samples + shift, grid.valid_mask)
            anchor = locate_anchor(grid, 0.001)
            assert locate_anchor(shifted, 0.001) == anchor + shift
            block = extract_depth_block(grid, 60.0, anchor)
            shifted_block = extract_depth_block(shifted, 60.0, anchor + shift)
            np.testing.assert_array_equal(block.valid_mask, shifted_block.valid_mask)
