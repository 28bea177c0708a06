"""Applying mapping functions to depth grids and collecting multi-tau map sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DepthGrid,
    EnhanceConfig,
    Histogram,
    LdrImage,
    MappingFunction,
    build_histogram,
    depth_to_bins,
    image_entropy,
)
from .errors import Infeasible, MismatchedN
from .ranges import extract_depth_block, locate_anchor
from .solver import solve_gemax

__all__ = ["MapEntry", "MapCollection", "apply_mapping", "batch_generate"]


@dataclass(frozen=True)
class MapEntry:
    tau: int
    image: LdrImage
    entropy_bits: float


@dataclass(frozen=True)
class MapCollection:
    """Maps generated from one scan at several tau values, ordered by tau."""

    entries: list[MapEntry]
    source_id: str = ""
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        taus = [e.tau for e in self.entries]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("entries must be strictly increasing in tau")
        shapes = {e.image.levels.shape for e in self.entries}
        if len(shapes) > 1:
            raise ValueError("all images in a collection must share dimensions")

    def taus(self) -> list[int]:
        return [e.tau for e in self.entries]


def apply_mapping(
    grid: DepthGrid,
    hist: Histogram,
    mapping: MappingFunction,
    background_level: int = 0,
) -> LdrImage:
    """Render the grid to a K-level image: bin b -> the k with d_k <= b < d_{k+1}.

    Invalid pixels take background_level. The lookup is a precomputed
    N-entry table, so each pixel costs O(1).
    """
    if mapping.N != hist.N:
        raise MismatchedN(f"mapping covers {mapping.N} levels but histogram has {hist.N}")
    table = mapping.level_table()
    levels = table[depth_to_bins(grid, hist)]
    levels = np.where(grid.valid_mask, levels, background_level)
    return LdrImage(levels, mapping.K, grid.valid_mask, background_level)


def batch_generate(
    grid: DepthGrid,
    cfg: EnhanceConfig,
    taus,
    source_id: str = "",
    anchor_percentile: float = 0.001,
) -> MapCollection:
    """Extract the cfg.d_i_mm block once, then solve and render per tau.

    Infeasible taus are recorded in .skipped instead of aborting the batch.
    Entries come back sorted by tau regardless of the requested order.
    """
    anchor = locate_anchor(grid, anchor_percentile)
    block = extract_depth_block(grid, cfg.d_i_mm, anchor)
    hist = build_histogram(block, cfg.N)
    entries: list[MapEntry] = []
    skipped: list[tuple[int, str]] = []
    for tau in sorted(set(int(t) for t in taus)):
        try:
            result = solve_gemax(hist, cfg.K, tau)
        except Infeasible as exc:
            skipped.append((tau, str(exc)))
            continue
        image = apply_mapping(block, hist, result.mapping, cfg.background_level)
        entries.append(MapEntry(tau, image, image_entropy(image)))
    return MapCollection(entries, source_id, skipped)
