import numpy as np
import pytest

from depthtone import (
    DepthGrid,
    EnhanceConfig,
    Histogram,
    MappingFunction,
    MismatchedN,
    apply_mapping,
    batch_generate,
    build_histogram,
    image_entropy,
    make_face_grid,
    mapping_entropy,
    solve_gemax,
    uniform_mapping,
)

from conftest import random_grid


def grid_of(depths, shape=None):
    depths = np.asarray(depths, dtype=float)
    if shape is None:
        shape = (1, depths.size)
    return DepthGrid(depths.reshape(shape), np.ones(shape, dtype=bool))


class TestApplyMapping:
    def test_identity_mapping_reproduces_bins(self):
        grid = grid_of(np.arange(16.0), shape=(4, 4))
        hist = build_histogram(grid, N=16)
        image = apply_mapping(grid, hist, MappingFunction(np.arange(17)))
        np.testing.assert_array_equal(np.sort(image.levels.ravel()), np.arange(16))

    def test_single_segment_collapses_to_zero(self):
        grid = grid_of(np.arange(16.0))
        hist = build_histogram(grid, N=16)
        image = apply_mapping(grid, hist, MappingFunction([0, 16]))
        assert np.all(image.levels == 0)

    def test_interval_counting(self):
        # 16 one-pixel depths, breakpoints {0, 8, 12, 16}: 8 / 4 / 4 pixels
        grid = grid_of(np.arange(16.0), shape=(4, 4))
        hist = build_histogram(grid, N=16)
        image = apply_mapping(grid, hist, MappingFunction([0, 8, 12, 16]))
        np.testing.assert_array_equal(np.bincount(image.levels.ravel()), [8, 4, 4])

    def test_background_level_on_invalid(self):
        samples = np.array([[1.0, 2.0], [3.0, 4.0]])
        mask = np.array([[True, False], [True, True]])
        grid = DepthGrid(samples, mask)
        hist = build_histogram(grid, N=4)
        image = apply_mapping(grid, hist, MappingFunction([0, 2, 4]), background_level=0)
        assert image.levels[0, 1] == 0
        assert not image.valid_mask[0, 1]

    def test_level_monotonicity(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            grid = random_grid(rng)
            hist = build_histogram(grid, N=32)
            res = solve_gemax(hist, 8, 8)
            image = apply_mapping(grid, hist, res.mapping)
            depths = grid.samples[grid.valid_mask]
            levels = image.levels[grid.valid_mask]
            order = np.argsort(depths, kind="stable")
            assert np.all(np.diff(levels[order]) >= 0)

    def test_round_trip_entropy(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            grid = random_grid(rng, height=24, width=24)
            hist = build_histogram(grid, N=32)
            res = solve_gemax(hist, 8, 16)
            image = apply_mapping(grid, hist, res.mapping)
            assert image_entropy(image) == pytest.approx(
                mapping_entropy(hist, res.mapping), abs=1e-9
            )

    def test_mismatched_n(self):
        grid = grid_of(np.arange(16.0))
        hist = build_histogram(grid, N=16)
        with pytest.raises(MismatchedN):
            apply_mapping(grid, hist, MappingFunction([0, 4, 8]))


class TestBatchGenerate:
    def test_five_tau_training_set(self):
        grid = make_face_grid(size=96, seed=5)
        cfg = EnhanceConfig(N=1024, K=128, tau=20)
        coll = batch_generate(grid, cfg, [20, 30, 40, 50, 60], source_id="demo")
        assert coll.taus() == [20, 30, 40, 50, 60]
        assert coll.source_id == "demo"
        assert not coll.skipped
        entropies = [e.entropy_bits for e in coll.entries]
        assert all(b >= a - 1e-9 for a, b in zip(entropies, entropies[1:]))

    def test_boundary_tau_equals_uniform_quantization(self):
        grid = make_face_grid(size=96, seed=6)
        cfg = EnhanceConfig(N=1024, K=128, tau=8)
        coll = batch_generate(grid, cfg, [8])
        hist_img = coll.entries[0].image

        from depthtone.ranges import extract_depth_block, locate_anchor

        anchor = locate_anchor(grid, 0.001)
        block = extract_depth_block(grid, cfg.d_i_mm, anchor)
        hist = build_histogram(block, cfg.N)
        uniform_img = apply_mapping(block, hist, uniform_mapping(cfg.N, cfg.K))
        np.testing.assert_array_equal(hist_img.levels, uniform_img.levels)

    def test_infeasible_tau_recorded_not_fatal(self):
        grid = make_face_grid(size=64, seed=7)
        cfg = EnhanceConfig(N=1024, K=128, tau=20)
        coll = batch_generate(grid, cfg, [4, 20])
        assert coll.taus() == [20]
        assert len(coll.skipped) == 1 and coll.skipped[0][0] == 4

    def test_entries_sorted_by_tau(self):
        grid = make_face_grid(size=64, seed=8)
        cfg = EnhanceConfig(N=512, K=64, tau=10)
        coll = batch_generate(grid, cfg, [40, 10, 20])
        assert coll.taus() == [10, 20, 40]
