import numpy as np
import pytest
from hypothesis import settings

from depthtone import DepthGrid, Histogram

# solver tests trip the JIT compiler on first call; don't let hypothesis
# flag that as a slow example
settings.register_profile("depthtone", deadline=None, max_examples=50)
settings.load_profile("depthtone")


def random_grid(rng: np.random.Generator, height=12, width=15, integer_mm=False) -> DepthGrid:
    """Random depth grid with some invalid pixels; at least one valid."""
    if integer_mm:
        samples = rng.integers(0, 500, size=(height, width)).astype(float)
    else:
        samples = rng.uniform(0.0, 500.0, size=(height, width))
    mask = rng.random((height, width)) > 0.2
    if not mask.any():
        mask[0, 0] = True
    return DepthGrid(samples, mask)


def random_histogram(rng: np.random.Generator, n: int, zero_fraction=0.0) -> Histogram:
    counts = rng.random(n)
    if zero_fraction > 0:
        counts[rng.random(n) < zero_fraction] = 0.0
    if counts.sum() <= 0:
        counts[int(rng.integers(0, n))] = 1.0
    return Histogram.from_counts(counts)


@pytest.fixture(scope="session")
def warm_solver():
    """Force the jitted solver kernel to compile before any timed assertions."""
    from depthtone import solve_gemax

    hist = Histogram(np.full(8, 0.125), 0.0, 1.0)
    solve_gemax(hist, 2, 8)
    return True
