"""Attention-map operators and the facial-attention loss with analytic gradients.

A feature volume is pooled to a channel query, the query reweights the volume,
and a channel pool collapses it to a spatial attention map. The loss over a
stack of maps pushes different maps apart (a margin on the cross-map maximum)
while concentrating each map around its own peak. Peaks are treated as
constants when differentiating (straight-through through both argmaxes), and
at a tied maximum the first index in scan order takes the derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadSizes, LengthMismatch, TooFewMaps

__all__ = [
    "FeatureVolume",
    "AttentionStack",
    "FaLossParams",
    "QProjection",
    "spatial_average_pool",
    "channel_reweight_pool",
    "fa_loss",
    "fa_loss_grad",
    "fa_loss_fd_grad",
    "fd_relative_error",
    "peak_crop_box",
    "bilinear_resize",
]


@dataclass(frozen=True)
class FeatureVolume:
    """C x H x W real-valued feature activations."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or min(values.shape) < 1:
            raise ValueError(f"values must be a non-empty C x H x W array, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def _argmax_2d(m: np.ndarray) -> tuple[int, int]:
    """(x, y) of the first maximum in row-major scan order."""
    flat = int(np.argmax(m))
    y, x = divmod(flat, m.shape[1])
    return x, y


@dataclass(frozen=True)
class AttentionStack:
    """N_M nonnegative H x W maps with per-map peak locations (t_x, t_y)."""

    maps: np.ndarray

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.float64)
        if maps.ndim != 3 or min(maps.shape) < 1:
            raise ValueError(f"maps must be N_M x H x W, got shape {maps.shape}")
        if not np.all(np.isfinite(maps)) or np.any(maps < 0):
            raise ValueError("maps must be finite and nonnegative")
        object.__setattr__(self, "maps", maps)

    @property
    def count(self) -> int:
        return self.maps.shape[0]

    @property
    def peaks(self) -> list[tuple[int, int]]:
        return [_argmax_2d(m) for m in self.maps]


@dataclass(frozen=True)
class FaLossParams:
    alpha: float = 1e3
    beta: float = 1e2
    mrg: float = 0.1

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")


def spatial_average_pool(volume: FeatureVolume) -> np.ndarray:
    """Mean over the spatial domain, one value per channel."""
    return volume.values.mean(axis=(1, 2))


def channel_reweight_pool(volume: FeatureVolume, query: np.ndarray) -> np.ndarray:
    """Reweight channels by the query, then average over channels.

    out(y, x) = (1/C) * sum_c query[c] * values[c, y, x]. Linear in both
    arguments.
    """
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1 or query.size != volume.channels:
        raise LengthMismatch(f"query length {query.size} != channel count {volume.channels}")
    return np.tensordot(query, volume.values, axes=(0, 0)) / volume.channels


def _dist2_grid(shape: tuple[int, int], peak: tuple[int, int]) -> np.ndarray:
    h, w = shape
    tx, ty = peak
    dx2 = (np.arange(w, dtype=np.float64) - tx) ** 2
    dy2 = (np.arange(h, dtype=np.float64) - ty) ** 2
    return dy2[:, None] + dx2[None, :]


def _cross_max(maps: np.ndarray, i: int) -> np.ndarray:
    others = np.delete(maps, i, axis=0)
    return others.max(axis=0)


def fa_loss(stack: AttentionStack, params: FaLossParams = FaLossParams()) -> float:
    """Diversity-plus-concentration loss over an attention stack.

    sum_i sum_{x,y} alpha*M_i*(max_{j!=i} M_j - mrg)
                  + beta*M_i*((x-t_x)^2 + (y-t_y)^2)
    with (t_x, t_y) the peak of M_i.
    """
    maps = stack.maps
    if stack.count < 2:
        raise TooFewMaps("the cross-map maximum needs at least two maps")
    peaks = stack.peaks
    total = 0.0
    for i in range(stack.count):
        diversity = maps[i] * (_cross_max(maps, i) - params.mrg)
        concentration = maps[i] * _dist2_grid(maps[i].shape, peaks[i])
        total += params.alpha * diversity.sum() + params.beta * concentration.sum()
    return float(total)


def fa_loss_grad(stack: AttentionStack, params: FaLossParams = FaLossParams()) -> np.ndarray:
    """Analytic d(loss)/d(M_i), elementwise, peaks held fixed.

    Map i receives alpha*(max_{j!=i} M_j - mrg) + beta*dist2_i from its own
    terms, plus alpha*M_j at every pixel where it wins the cross-map maximum
    inside map j's diversity term.
    """
    maps = stack.maps
    if stack.count < 2:
        raise TooFewMaps("the cross-map maximum needs at least two maps")
    peaks = stack.peaks
    n, h, w = maps.shape
    grad = np.empty_like(maps)
    for i in range(n):
        grad[i] = params.alpha * (_cross_max(maps, i) - params.mrg)
        # an all-zero map has no peak to freeze: raising any pixel makes it
        # the peak, so the true directional derivative of the beta term is 0
        if maps[i].any():
            grad[i] += params.beta * _dist2_grid((h, w), peaks[i])
    yy, xx = np.divmod(np.arange(h * w), w)
    for j in range(n):
        # winner of max_{i != j}: first index in scan order at ties
        others = np.delete(np.arange(n), j)
        winner = others[np.argmax(maps[others], axis=0)]
        np.add.at(grad, (winner.ravel(), yy, xx), params.alpha * maps[j].ravel())
    return grad


def fa_loss_fd_grad(
    stack: AttentionStack,
    params: FaLossParams = FaLossParams(),
    step: float = 1e-5,
) -> np.ndarray:
    """Central finite-difference gradient of fa_loss (independent check)."""
    base = stack.maps
    grad = np.empty_like(base)
    it = np.nditer(base, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        plus = base.copy()
        plus[idx] += step
        minus = base.copy()
        minus[idx] -= step
        minus[idx] = max(minus[idx], 0.0)
        span = plus[idx] - minus[idx]
        f_plus = fa_loss(AttentionStack(plus), params)
        f_minus = fa_loss(AttentionStack(minus), params)
        grad[idx] = (f_plus - f_minus) / span
    return grad


def fd_relative_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    """Max elementwise relative error, with near-zero entries measured
    against 1e-3 of the gradient's own scale instead of their tiny magnitude."""
    analytic = np.asarray(analytic, dtype=np.float64)
    fd = np.asarray(fd, dtype=np.float64)
    scale = max(float(np.abs(analytic).max(initial=0.0)), float(np.abs(fd).max(initial=0.0)), 1e-12)
    denom = np.maximum(np.abs(analytic), 1e-3 * scale)
    return float((np.abs(fd - analytic) / denom).max())


def peak_crop_box(
    attention_map: np.ndarray, input_size: int, crop_size: int
) -> tuple[int, int, int]:
    """Square crop (x0, y0, side) centered on the map's peak, clamped inside.

    The peak is located at map resolution and scaled to input coordinates
    with the pixel-center convention ((t + 0.5) * input_size / map_size).
    """
    attention_map = np.asarray(attention_map, dtype=np.float64)
    if attention_map.ndim != 2 or min(attention_map.shape) < 1:
        raise BadSizes(f"attention map must be 2-D, got shape {attention_map.shape}")
    if not 1 <= crop_size <= input_size:
        raise BadSizes(f"need 1 <= crop_size <= input_size, got {crop_size} > {input_size}")
    h, w = attention_map.shape
    tx, ty = _argmax_2d(attention_map)
    cx = (tx + 0.5) * input_size / w
    cy = (ty + 0.5) * input_size / h
    x0 = int(round(cx - crop_size / 2))
    y0 = int(round(cy - crop_size / 2))
    x0 = min(max(x0, 0), input_size - crop_size)
    y0 = min(max(y0, 0), input_size - crop_size)
    return x0, y0, crop_size


def bilinear_resize(image: np.ndarray, target_size) -> np.ndarray:
    """Corner-aligned bilinear resampling to (target_h, target_w).

    A scalar target gives a square output. Constant images stay constant and
    corner samples are preserved exactly.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 1:
        raise BadSizes(f"image must be a non-empty 2-D array, got shape {image.shape}")
    th, tw = (target_size, target_size) if np.isscalar(target_size) else target_size
    if th < 1 or tw < 1:
        raise BadSizes("target size must be >= 1 in both dimensions")
    sh, sw = image.shape

    def src_coords(t: int, s: int) -> np.ndarray:
        if t == 1 or s == 1:
            return np.zeros(t)
        return np.arange(t) * (s - 1) / (t - 1)

    ys = src_coords(th, sh)
    xs = src_coords(tw, sw)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, max(sh - 2, 0))
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, max(sw - 2, 0))
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    tl = image[np.ix_(y0, x0)]
    tr = image[np.ix_(y0, x1)]
    bl = image[np.ix_(y1, x0)]
    br = image[np.ix_(y1, x1)]
    top = tl * (1 - wx) + tr * wx
    bottom = bl * (1 - wx) + br * wx
    return top * (1 - wy) + bottom * wy


@dataclass(frozen=True)
class QProjection:
    """Two affine layers with a rectifier between: the channel-query encoder.

    q = W2 @ relu(W1 @ s + b1) + b2 for a pooled channel vector s.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        w1, b1 = np.asarray(self.w1, np.float64), np.asarray(self.b1, np.float64)
        w2, b2 = np.asarray(self.w2, np.float64), np.asarray(self.b2, np.float64)
        if w1.ndim != 2 or w2.ndim != 2 or b1.shape != (w1.shape[0],) or b2.shape != (w2.shape[0],):
            raise ValueError("layer shapes are inconsistent")
        if w2.shape[1] != w1.shape[0]:
            raise ValueError(f"hidden sizes disagree: {w1.shape[0]} vs {w2.shape[1]}")
        for name, arr in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            object.__setattr__(self, name, arr)

    @property
    def in_features(self) -> int:
        return self.w1.shape[1]

    @property
    def out_features(self) -> int:
        return self.w2.shape[0]

    def apply(self, pooled: np.ndarray) -> np.ndarray:
        pooled = np.asarray(pooled, dtype=np.float64)
        if pooled.shape != (self.in_features,):
            raise LengthMismatch(f"expected vector of {self.in_features}, got shape {pooled.shape}")
        hidden = np.maximum(self.w1 @ pooled + self.b1, 0.0)
        return self.w2 @ hidden + self.b2
