"""Dense grid primitives: validation, bilinear sampling, pooling, flow resizing.

Array conventions used throughout the package:

- feature map: float64 array of shape ``(C, H, W)``, row-major per channel
- flow field:  float64 array of shape ``(2, H, W)``; ``[0]`` is the horizontal
  displacement u (pixels along width), ``[1]`` the vertical displacement v
- pixel mask:  bool array of shape ``(H, W)``
- coordinates: pixel centers, ``(x=0, y=0)`` at the top-left pixel; x runs
  along width, y along height

Bilinear reads outside ``[0, W-1] x [0, H-1]`` treat out-of-range corners as
zero.  This zero-padding rule is the single out-of-range convention shared
with the correlation machinery.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError


def as_feature_map(data) -> np.ndarray:
    """Validate and convert ``data`` to a float64 (C, H, W) feature map."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise InputError(f"feature map must be (C, H, W) with positive dims, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError("feature map contains non-finite values")
    return arr


def as_flow_field(data) -> np.ndarray:
    """Validate and convert ``data`` to a float64 (2, H, W) flow field."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2 or min(arr.shape[1:]) < 1:
        raise InputError(f"flow field must be (2, H, W), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError("flow field contains non-finite values")
    return arr


def as_mask(data, shape=None) -> np.ndarray:
    """Validate and convert ``data`` to a bool (H, W) mask."""
    arr = np.asarray(data)
    if arr.dtype != np.bool_:
        arr = arr.astype(bool)
    if arr.ndim != 2:
        raise InputError(f"mask must be (H, W), got {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise InputError(f"mask shape {arr.shape} does not match {tuple(shape)}")
    return arr


def zero_flow(height: int, width: int) -> np.ndarray:
    return np.zeros((2, height, width), dtype=np.float64)


def pixel_grid(height: int, width: int):
    """Return (X, Y) coordinate grids of shape (height, width)."""
    ys, xs = np.mgrid[0:height, 0:width]
    return xs.astype(np.float64), ys.astype(np.float64)


def _bilinear_plane(plane: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample a single (H, W) plane at float positions, zero outside the grid."""
    h, w = plane.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    def corner(xi, yi):
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        vals = plane[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
        return np.where(inside, vals, 0.0)

    v00 = corner(x0, y0)
    v01 = corner(x0 + 1, y0)
    v10 = corner(x0, y0 + 1)
    v11 = corner(x0 + 1, y0 + 1)
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11)


def bilinear_sample(fmap: np.ndarray, coords) -> np.ndarray:
    """Sample a (C, H, W) feature map at sub-pixel positions.

    Args:
        fmap: feature map, shape (C, H, W).
        coords: array-like of shape (N, 2) holding (x, y) sample positions.

    Returns:
        (N, C) array.  Integer positions reproduce stored values exactly;
        fractional positions blend the four surrounding grid values, with
        out-of-range corners contributing zero.
    """
    fmap = as_feature_map(fmap)
    pts = np.asarray(coords, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError(f"coords must be (N, 2), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise InputError("sample coordinates contain non-finite values")
    out = np.empty((pts.shape[0], fmap.shape[0]), dtype=np.float64)
    for c in range(fmap.shape[0]):
        out[:, c] = _bilinear_plane(fmap[c], pts[:, 0], pts[:, 1])
    return out


def avg_pool2(fmap: np.ndarray) -> np.ndarray:
    """2x2 average pooling with ceil output dims; odd edges average the cells present."""
    fmap = as_feature_map(fmap)
    c, h, w = fmap.shape
    row_starts = np.arange(0, h, 2)
    col_starts = np.arange(0, w, 2)
    sums = np.add.reduceat(np.add.reduceat(fmap, row_starts, axis=1), col_starts, axis=2)
    row_sizes = np.minimum(row_starts + 2, h) - row_starts
    col_sizes = np.minimum(col_starts + 2, w) - col_starts
    counts = row_sizes[:, np.newaxis] * col_sizes[np.newaxis, :]
    return sums / counts


def scale_flow(flow: np.ndarray, out_hw) -> np.ndarray:
    """Bilinearly resize a flow field and rescale its displacement values.

    u values are multiplied by W'/W and v values by H'/H so the field keeps
    describing the same motion at the new resolution.  Source positions use
    the pixel-center mapping ``src = (dst + 0.5) * size/size' - 0.5`` clamped
    to the source rectangle; resizing to the same dims is bit-identical.
    """
    flow = as_flow_field(flow)
    h, w = flow.shape[1:]
    try:
        oh, ow = int(out_hw[0]), int(out_hw[1])
    except (TypeError, IndexError) as exc:
        raise InputError(f"target dims must be (H, W), got {out_hw!r}") from exc
    if oh < 1 or ow < 1:
        raise InputError(f"target dims must be >= 1, got {(oh, ow)}")
    xs = np.clip((np.arange(ow, dtype=np.float64) + 0.5) * (w / ow) - 0.5, 0.0, w - 1.0)
    ys = np.clip((np.arange(oh, dtype=np.float64) + 0.5) * (h / oh) - 0.5, 0.0, h - 1.0)
    gx, gy = np.meshgrid(xs, ys)
    out = np.empty((2, oh, ow), dtype=np.float64)
    out[0] = _bilinear_plane(flow[0], gx, gy) * (ow / w)
    out[1] = _bilinear_plane(flow[1], gx, gy) * (oh / h)
    return out


def scale_valid_mask(mask: np.ndarray, out_hw) -> np.ndarray:
    """Downscale a validity mask: a target pixel is valid iff every source
    pixel contributing to its bilinear footprint (weight > 0) is valid."""
    mask = as_mask(mask)
    h, w = mask.shape
    oh, ow = int(out_hw[0]), int(out_hw[1])
    if oh < 1 or ow < 1:
        raise InputError(f"target dims must be >= 1, got {(oh, ow)}")
    xs = np.clip((np.arange(ow, dtype=np.float64) + 0.5) * (w / ow) - 0.5, 0.0, w - 1.0)
    ys = np.clip((np.arange(oh, dtype=np.float64) + 0.5) * (h / oh) - 0.5, 0.0, h - 1.0)
    gx, gy = np.meshgrid(xs, ys)
    x0 = np.floor(gx).astype(np.int64)
    y0 = np.floor(gy).astype(np.int64)
    fx = gx - x0
    fy = gy - y0
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    out = mask[y0, x0].copy()
    out &= (fx == 0.0) | mask[y0, x1]
    out &= (fy == 0.0) | mask[y1, x0]
    out &= ((fx == 0.0) | (fy == 0.0)) | mask[y1, x1]
    return out
