"""x2 convex upsampling of flow fields and forward-warp initialization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import as_flow_field, zero_flow

#: 3x3 neighborhood offsets in fixed row-major order (dy outer, dx inner).
NEIGHBOR_OFFSETS = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1))


def normalize_mask(logits) -> np.ndarray:
    """Softmax raw per-pixel 9-logit fields into convex weights.

    Input and output have shape (9, 2H, 2W); each fine pixel's weights are
    non-negative and sum to 1.
    """
    raw = np.asarray(logits, dtype=np.float64)
    if raw.ndim != 3 or raw.shape[0] != 9:
        raise InputError(f"mask logits must be (9, 2H, 2W), got {raw.shape}")
    if not np.isfinite(raw).all():
        raise InputError("mask logits contain non-finite values")
    shifted = raw - raw.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def uniform_mask(fine_height: int, fine_width: int) -> np.ndarray:
    """Uniform convex weights (1/9 everywhere) for a (fine_height, fine_width) grid."""
    return np.full((9, fine_height, fine_width), 1.0 / 9.0, dtype=np.float64)


def convex_upsample2(flow, mask) -> np.ndarray:
    """Upsample a (2, H, W) flow to (2, 2H, 2W) by convex combination.

    Each fine pixel mixes the 3x3 coarse neighborhood of its parent with the
    mask weights, renormalized over in-range neighbors, then doubles the
    result to convert displacements to fine-grid units.
    """
    flow = as_flow_field(flow)
    h, w = flow.shape[1:]
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (9, 2 * h, 2 * w):
        raise InputError(f"mask shape {mask.shape} does not match fine grid {(9, 2 * h, 2 * w)}")
    if (mask < 0).any() or not np.isfinite(mask).all():
        raise InputError("mask weights must be finite and non-negative")

    fy, fx = np.mgrid[0:2 * h, 0:2 * w]
    py = fy // 2
    px = fx // 2
    num = np.zeros((2, 2 * h, 2 * w), dtype=np.float64)
    den = np.zeros((2 * h, 2 * w), dtype=np.float64)
    for k, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        ny = py + dy
        nx = px + dx
        inside = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        wk = np.where(inside, mask[k], 0.0)
        den += wk
        nyc = np.clip(ny, 0, h - 1)
        nxc = np.clip(nx, 0, w - 1)
        num[0] += wk * flow[0, nyc, nxc]
        num[1] += wk * flow[1, nyc, nxc]
    if (den == 0).any():
        raise InputError("mask assigns zero total weight to an in-range neighborhood")
    return 2.0 * num / den


def forward_warp(prev_flow) -> np.ndarray:
    """Splat each pixel's flow vector onto its rounded target position.

    Targets hit multiple times store the arithmetic mean of the incoming
    vectors; untouched targets stay zero; off-grid targets are dropped.
    Rounding is to nearest with ties toward +inf.
    """
    prev_flow = as_flow_field(prev_flow)
    h, w = prev_flow.shape[1:]
    ys, xs = np.mgrid[0:h, 0:w]
    tx = np.floor(xs + prev_flow[0] + 0.5).astype(np.int64)
    ty = np.floor(ys + prev_flow[1] + 0.5).astype(np.int64)
    inside = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
    lin = (ty[inside] * w + tx[inside])
    counts = np.bincount(lin, minlength=h * w)
    sum_u = np.bincount(lin, weights=prev_flow[0][inside], minlength=h * w)
    sum_v = np.bincount(lin, weights=prev_flow[1][inside], minlength=h * w)
    denom = np.maximum(counts, 1)
    out = np.zeros((2, h, w), dtype=np.float64)
    out[0] = (sum_u / denom).reshape(h, w)
    out[1] = (sum_v / denom).reshape(h, w)
    return out


@dataclass
class WarmStartState:
    """Flow of the previous image pair, when one exists in the sequence.

    The stored flow must itself come from a zero-initialized estimate; warm
    starting is deliberately non-recursive.
    """

    prev_flow: np.ndarray | None = None
    has_previous: bool = False

    def __post_init__(self):
        if self.prev_flow is not None:
            self.prev_flow = as_flow_field(self.prev_flow)
            if not self.has_previous:
                raise InputError("prev_flow given but has_previous is False")


def warm_start_init(state: WarmStartState, shape) -> np.ndarray:
    """Initial flow for a new pair: forward-warped previous flow, else zeros."""
    h, w = int(shape[0]), int(shape[1])
    if state.has_previous and state.prev_flow is not None:
        if state.prev_flow.shape[1:] != (h, w):
            raise InputError(
                f"previous flow dims {state.prev_flow.shape[1:]} do not match frame {(h, w)}")
        return forward_warp(state.prev_flow)
    return zero_flow(h, w)
