"""Core data types: depth grids, level histograms, mapping functions, LDR images.

Depths are millimeters throughout. A mapping function is an ordered integer
breakpoint vector d_0 < d_1 < ... < d_K with d_0 = 0 and d_K = N; input level b
is rendered at output intensity k when d_k <= b < d_{k+1}, so the K half-open
intervals tile [0, N) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGrid, EmptyImage

__all__ = [
    "DepthGrid",
    "Histogram",
    "MappingFunction",
    "LdrImage",
    "EnhanceConfig",
    "build_histogram",
    "shannon_entropy",
    "image_entropy",
]


def _plog2p(p: np.ndarray) -> np.ndarray:
    """Elementwise -p*log2(p) with the 0*log(0)=0 convention, clamped to [0, 1].

    Every entropy-like quantity in the package funnels through this one
    routine so that identical probabilities always yield bitwise-identical
    weights (the solver's tie-breaking depends on it).
    """
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    out = np.zeros_like(p)
    nz = p > 0.0
    out[nz] = -p[nz] * np.log2(p[nz])
    return out


@dataclass(frozen=True)
class DepthGrid:
    """2-D grid of raw depth samples (mm) with a validity mask."""

    samples: np.ndarray
    valid_mask: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        mask = np.asarray(self.valid_mask, dtype=bool)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValueError(f"samples must be a non-empty 2-D array, got shape {samples.shape}")
        if mask.shape != samples.shape:
            raise ValueError(f"valid_mask shape {mask.shape} != samples shape {samples.shape}")
        valid = samples[mask]
        if valid.size and (not np.all(np.isfinite(valid)) or np.any(valid < 0)):
            raise ValueError("valid samples must be finite and >= 0")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def valid_count(self) -> int:
        return int(self.valid_mask.sum())

    def valid_depths(self) -> np.ndarray:
        """Flat array of the depths at valid pixels."""
        return self.samples[self.valid_mask]

    @classmethod
    def from_samples(cls, samples, invalid_value=None) -> "DepthGrid":
        """Build a grid, marking nonfinite samples (and optionally a sentinel) invalid."""
        samples = np.asarray(samples, dtype=np.float64)
        mask = np.isfinite(samples)
        if invalid_value is not None:
            mask &= samples != invalid_value
        return cls(samples, mask)


@dataclass(frozen=True)
class Histogram:
    """Probability per input depth level over the selected range.

    bins[i] is the probability of level i; level i covers depths
    [range_origin + i*bin_width, range_origin + (i+1)*bin_width).
    """

    bins: np.ndarray
    range_origin: float
    bin_width: float
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.float64)
        if bins.ndim != 1 or bins.size < 2:
            raise ValueError("bins must be a 1-D vector with N >= 2")
        if np.any(bins < 0):
            raise ValueError("bins must be nonnegative")
        total = float(bins.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"bins must sum to 1 (got {total!r})")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        object.__setattr__(self, "bins", bins)
        # cumulative table: _cdf[i] = sum(bins[:i]), so P[i, j) = _cdf[j] - _cdf[i];
        # the endpoint is pinned to exactly 1 so a full-range segment weighs 0
        cdf = np.concatenate(([0.0], np.cumsum(bins)))
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @property
    def N(self) -> int:
        return self.bins.size

    @classmethod
    def from_counts(cls, counts, range_origin: float = 0.0, bin_width: float = 1.0) -> "Histogram":
        counts = np.asarray(counts, dtype=np.float64)
        total = counts.sum()
        if total <= 0:
            raise ValueError("counts must have positive total mass")
        return cls(counts / total, range_origin, bin_width)


@dataclass(frozen=True)
class MappingFunction:
    """Ordered integer breakpoints d_0..d_K defining the level compression."""

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.int64)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("breakpoints must hold at least d_0 and d_1")
        if bp[0] != 0:
            raise ValueError(f"d_0 must be 0, got {bp[0]}")
        if np.any(np.diff(bp) < 1):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)

    @property
    def K(self) -> int:
        return self.breakpoints.size - 1

    @property
    def N(self) -> int:
        """Number of input levels covered (the last breakpoint)."""
        return int(self.breakpoints[-1])

    def gaps(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def max_span(self) -> int:
        return int(self.gaps().max())

    def level_table(self) -> np.ndarray:
        """Length-N lookup: table[b] = output level of input level b."""
        return np.repeat(np.arange(self.K, dtype=np.int64), self.gaps())


@dataclass(frozen=True)
class LdrImage:
    """K-level integer image; invalid pixels carry background_level."""

    levels: np.ndarray
    K: int
    valid_mask: np.ndarray
    background_level: int = 0

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.int64)
        mask = np.asarray(self.valid_mask, dtype=bool)
        if levels.ndim != 2 or levels.shape != mask.shape:
            raise ValueError("levels and valid_mask must be matching 2-D arrays")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        shown = levels[mask]
        if shown.size and (shown.min() < 0 or shown.max() >= self.K):
            raise ValueError("valid pixel levels must lie in [0, K)")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.levels.shape[0]

    @property
    def width(self) -> int:
        return self.levels.shape[1]


@dataclass(frozen=True)
class EnhanceConfig:
    """End-to-end pipeline settings."""

    N: int = 4096
    K: int = 256
    tau: int = 20
    d_i_mm: float = 60.0
    background_level: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.K > self.N:
            raise ValueError(f"K ({self.K}) must not exceed N ({self.N})")
        if self.tau * self.K < self.N or self.tau > self.N:
            raise ValueError(f"tau must lie in [N/K, N] = [{self.N / self.K:g}, {self.N}], got {self.tau}")
        if not self.d_i_mm > 0:
            raise ValueError("d_i_mm must be positive")


def build_histogram(grid: DepthGrid, N: int) -> Histogram:
    """Quantize the grid's valid depths into an N-level normalized histogram.

    The range is per-scan: bin 0 starts at the minimum valid depth and the
    full span (max - min) is divided into N equal bins; a degenerate span
    falls back to 1 mm bins with all mass in bin 0.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    depths = grid.valid_depths()
    if depths.size == 0:
        raise EmptyGrid("grid has no valid pixels")
    origin = float(depths.min())
    span = float(depths.max()) - origin
    width = span / N if span > 0 else 1.0
    idx = np.floor((depths - origin) / width).astype(np.int64)
    np.clip(idx, 0, N - 1, out=idx)
    counts = np.bincount(idx, minlength=N).astype(np.float64)
    return Histogram(counts / depths.size, origin, width)


def depth_to_bins(grid: DepthGrid, hist: Histogram) -> np.ndarray:
    """Bin index of every pixel under hist's quantization (invalid pixels -> 0)."""
    idx = np.floor((grid.samples - hist.range_origin) / hist.bin_width)
    idx = np.where(grid.valid_mask, idx, 0.0)
    return np.clip(idx.astype(np.int64), 0, hist.N - 1)


def shannon_entropy(values) -> float:
    """Entropy in bits of a probability vector, tolerating exact zeros."""
    return float(np.sum(_plog2p(values)))


def image_entropy(image: LdrImage) -> float:
    """Entropy in bits of the K-bin level distribution over valid pixels."""
    shown = image.levels[image.valid_mask]
    if shown.size == 0:
        raise EmptyImage("image has no valid pixels")
    counts = np.bincount(shown, minlength=image.K).astype(np.float64)
    return shannon_entropy(counts / shown.size)
