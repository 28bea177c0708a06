"""Depth-range selection: nose-anchored block extraction and overlapped sweeps.

A frontal face scan has its nose as the closest surface point, so the anchor
is a low quantile of the valid depths (quantile 0 is the literal minimum; a
small positive quantile resists sensor speckle). A depth block keeps only the
slab [anchor, anchor + d_i].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DepthGrid
from .errors import EmptyGrid

__all__ = [
    "BlockSweepConfig",
    "locate_anchor",
    "extract_depth_block",
    "generate_blocks",
]


@dataclass(frozen=True)
class BlockSweepConfig:
    """Sweep of nested depth blocks: d_min, d_min+delta, ..., d_max (mm)."""

    d_min_mm: float = 50.0
    d_max_mm: float = 140.0
    delta_d_mm: float = 10.0
    anchor_percentile: float = 0.001

    def __post_init__(self):
        if self.d_min_mm > self.d_max_mm:
            raise ValueError("d_min_mm must not exceed d_max_mm")
        if not self.delta_d_mm > 0:
            raise ValueError("delta_d_mm must be positive")
        if not 0.0 <= self.anchor_percentile <= 0.05:
            raise ValueError("anchor_percentile must lie in [0, 0.05]")

    def depths(self) -> np.ndarray:
        """The sweep's block depths d_i in millimeters."""
        steps = int(np.floor((self.d_max_mm - self.d_min_mm) / self.delta_d_mm + 1e-9))
        return self.d_min_mm + self.delta_d_mm * np.arange(steps + 1)


def locate_anchor(grid: DepthGrid, anchor_percentile: float = 0.001) -> float:
    """Depth (mm) of the near-surface anchor: a low quantile of valid depths.

    Uses the "lower" quantile (an actual sample value), so percentile 0
    returns the exact minimum.
    """
    if not 0.0 <= anchor_percentile <= 0.5:
        raise ValueError("anchor_percentile must lie in [0, 0.5]")
    depths = grid.valid_depths()
    if depths.size == 0:
        raise EmptyGrid("grid has no valid pixels")
    return float(np.quantile(depths, anchor_percentile, method="lower"))


def extract_depth_block(grid: DepthGrid, d_i_mm: float, anchor: float) -> DepthGrid:
    """Restrict validity to the slab anchor <= z <= anchor + d_i_mm."""
    if not d_i_mm > 0:
        raise ValueError("d_i_mm must be positive")
    z = grid.samples
    keep = grid.valid_mask & (z >= anchor) & (z - anchor <= d_i_mm)
    if not keep.any():
        raise EmptyGrid(f"block [{anchor:g}, {anchor + d_i_mm:g}] mm contains no pixels")
    return DepthGrid(grid.samples, keep)


def generate_blocks(
    grid: DepthGrid, cfg: BlockSweepConfig = BlockSweepConfig()
) -> list[tuple[float, DepthGrid]]:
    """Overlapped depth blocks for every d_i in the sweep, sharing one anchor.

    Blocks are nested: the valid set at d_i is a subset of the one at d_{i+1}.
    """
    anchor = locate_anchor(grid, cfg.anchor_percentile)
    return [(float(d), extract_depth_block(grid, float(d), anchor)) for d in cfg.depths()]
