"""Synthetic depth scans for benchmarks, demos, and tests."""

from __future__ import annotations

import numpy as np

from .core import DepthGrid

__all__ = ["make_face_grid", "make_hemisphere_grid"]


def make_hemisphere_grid(
    size: int = 401,
    radius_mm: float = 80.0,
    apex_mm: float = 120.0,
    background_mm: float = 200.0,
    span_mm: float = 220.0,
) -> DepthGrid:
    """Hemisphere bulging toward the sensor on a flat background plane.

    The sphere center sits at apex_mm + radius_mm, so the closest point is
    the apex and the silhouette boundary meets the background depth.
    """
    half = span_mm / 2
    xs = np.linspace(-half, half, size)
    r2 = xs[None, :] ** 2 + xs[:, None] ** 2
    on_dome = r2 <= radius_mm**2
    dome = (apex_mm + radius_mm) - np.sqrt(np.maximum(radius_mm**2 - r2, 0.0))
    samples = np.where(on_dome, dome, background_mm)
    return DepthGrid(samples, np.ones_like(samples, dtype=bool))


def make_face_grid(size: int = 224, seed: int = 0, noise_mm: float = 1.5) -> DepthGrid:
    """Face-like scan: a hemisphere with smooth surface relief, some dropout.

    Deterministic for a given (size, seed, noise_mm); used by the benchmark
    command so timings run on inputs with a non-degenerate depth histogram.
    """
    rng = np.random.default_rng(seed)
    grid = make_hemisphere_grid(size=size, span_mm=200.0)
    samples = grid.samples.copy()
    mask = grid.valid_mask.copy()

    # low-frequency relief: a few broad gaussian bumps and dents
    half = 100.0
    xs = np.linspace(-half, half, size)
    X, Y = np.meshgrid(xs, xs)
    relief = np.zeros_like(samples)
    for _ in range(6):
        cx, cy = rng.uniform(-60, 60, size=2)
        sigma = rng.uniform(10, 30)
        amp = rng.uniform(-noise_mm, noise_mm) * 4
        relief += amp * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma**2))
    samples += relief + rng.normal(0.0, noise_mm / 3, size=samples.shape)
    samples = np.maximum(samples, 0.0)

    # sensor dropout speckle
    mask &= rng.random(samples.shape) > 0.02
    return DepthGrid(samples, mask)
