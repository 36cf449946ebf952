"""Correlation cost machinery.

Two routes produce identical cost features (up to float summation order):

- precomputed: the all-pairs cost volume is built, pooled into a pyramid,
  and sampled bilinearly around each lookup center.  Memory grows with
  H1*W1*H2*W2, so this route is the small-instance oracle.
- on-demand: per pixel and level, only the local window of feature dot
  products needed by the lookup is computed.  Memory stays linear in the
  frame area.  This is the route the estimation pipeline uses.

The on-demand route has a compiled kernel (``msraft._corrkernel``) and a
pure-numpy fallback; the compiled one is picked at import when available.
Set ``MSRAFT_CORR_BACKEND=python`` or ``=native`` to force a choice.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import _corr_numpy
from .errors import InputError, VolumeLimitError
from .grid import as_feature_map, as_flow_field, avg_pool2, pixel_grid

try:
    from . import _corrkernel
except ImportError:  # pragma: no cover - depends on build environment
    _corrkernel = None

DEFAULT_RADIUS = 4
DEFAULT_LEVELS = 4

#: Refuse to materialize all-pairs volumes above this many entries (~1 GiB f64).
MAX_VOLUME_ENTRIES = 2 ** 27


def _pick_default_backend() -> str:
    forced = os.environ.get("MSRAFT_CORR_BACKEND", "").strip().lower()
    if forced in ("python", "native"):
        if forced == "native" and _corrkernel is None:
            raise ImportError("MSRAFT_CORR_BACKEND=native but msraft._corrkernel is not built")
        return forced
    return "native" if _corrkernel is not None else "python"


_DEFAULT_BACKEND = _pick_default_backend()


def available_backends() -> tuple[str, ...]:
    return ("python", "native") if _corrkernel is not None else ("python",)


def default_backend() -> str:
    return _DEFAULT_BACKEND


def _resolve_backend(backend: str | None) -> str:
    if backend is None:
        return _DEFAULT_BACKEND
    if backend not in ("python", "native"):
        raise InputError(f"unknown correlation backend {backend!r}")
    if backend == "native" and _corrkernel is None:
        raise InputError("native correlation backend is not built")
    return backend


def offset_grid(radius: int) -> np.ndarray:
    """Integer lookup offsets in fixed row-major order (dy outer, dx inner)."""
    if radius < 0:
        raise InputError(f"radius must be >= 0, got {radius}")
    k = 2 * radius + 1
    dy, dx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return np.stack([dx.ravel(), dy.ravel()], axis=1).reshape(k * k, 2)


def build_all_pairs(f1, f2, max_entries: int = MAX_VOLUME_ENTRIES) -> np.ndarray:
    """All-pairs cost volume c(x1, x2) = <F1(x1), F2(x2)> / sqrt(C).

    Returns a (H1, W1, H2, W2) array.  Raises :class:`VolumeLimitError` when
    the volume would exceed ``max_entries`` entries; the on-demand route
    exists precisely to avoid this allocation.
    """
    f1 = as_feature_map(f1)
    f2 = as_feature_map(f2)
    if f1.shape[0] != f2.shape[0]:
        raise InputError(f"channel mismatch: {f1.shape[0]} vs {f2.shape[0]}")
    h1, w1 = f1.shape[1:]
    h2, w2 = f2.shape[1:]
    entries = h1 * w1 * h2 * w2
    if entries > max_entries:
        raise VolumeLimitError(
            f"all-pairs volume needs {entries} entries "
            f"({h1}x{w1}x{h2}x{w2}), cap is {max_entries}")
    vol = np.tensordot(f1, f2, axes=([0], [0]))  # (H1, W1, H2, W2)
    return vol / math.sqrt(f1.shape[0])


def build_cost_pyramid(vol: np.ndarray, levels: int) -> list[np.ndarray]:
    """Pool the frame-2 axes of a cost volume into ``levels`` pyramid levels."""
    vol = np.asarray(vol, dtype=np.float64)
    if vol.ndim != 4:
        raise InputError(f"cost volume must be 4-D, got shape {vol.shape}")
    h2, w2 = vol.shape[2:]
    if levels < 1:
        raise InputError(f"levels must be >= 1, got {levels}")
    if 2 ** (levels - 1) > min(h2, w2):
        raise InputError(f"{levels} levels exceed frame-2 dims {(h2, w2)}")
    pyramid = [vol]
    h1, w1 = vol.shape[:2]
    for _ in range(levels - 1):
        prev = pyramid[-1]
        pooled = avg_pool2(prev.reshape(h1 * w1, *prev.shape[2:]))
        pyramid.append(pooled.reshape(h1, w1, *pooled.shape[1:]))
    return pyramid


def max_levels(height: int, width: int) -> int:
    """Largest pyramid depth whose coarsest level is still >= 1x1 pre-ceil."""
    return int(math.floor(math.log2(min(height, width)))) + 1


def build_feature_pyramid(f2, levels: int) -> list[np.ndarray]:
    """Successive 2x2 average pooling of frame-2 features; level 0 is F2 itself."""
    f2 = as_feature_map(f2)
    h2, w2 = f2.shape[1:]
    if levels < 1:
        raise InputError(f"levels must be >= 1, got {levels}")
    if 2 ** (levels - 1) > min(h2, w2):
        raise InputError(f"{levels} levels exceed feature dims {(h2, w2)}")
    pyramid = [f2]
    for _ in range(levels - 1):
        pyramid.append(avg_pool2(pyramid[-1]))
    return pyramid


def _lookup_centers(flow: np.ndarray):
    xs, ys = pixel_grid(*flow.shape[1:])
    return xs + flow[0], ys + flow[1]


def max_relative_deviation(a, b):
    """Largest elementwise |a-b| / max(|a|, |b|, floor), plus its index.

    The floor (1e-8 of the overall value scale) keeps exact-cancellation
    near-zeros from dominating the ratio, as in allclose-style comparisons.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-300)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8 * scale)
    rel = np.abs(a - b) / denom
    idx = np.unravel_index(np.argmax(rel), rel.shape)
    return float(rel[idx]), idx


def lookup_precomputed(pyramid: list[np.ndarray], flow, radius: int = DEFAULT_RADIUS) -> np.ndarray:
    """Sample a cost pyramid around each pixel's lookup center.

    For pixel x and level l the centers are (x + flow(x)) / 2**l and the
    window offsets run over [-r, r]^2 in row-major order.  Returns
    (H1, W1, L*(2r+1)**2) with levels ordered outermost.
    """
    flow = as_flow_field(flow)
    if radius < 0:
        raise InputError(f"radius must be >= 0, got {radius}")
    h1, w1 = pyramid[0].shape[:2]
    if flow.shape[1:] != (h1, w1):
        raise InputError(f"flow dims {flow.shape[1:]} do not match volume dims {(h1, w1)}")
    k = 2 * radius + 1
    out = np.empty((h1, w1, len(pyramid) * k * k), dtype=np.float64)
    tx, ty = _lookup_centers(flow)
    rows, cols = np.mgrid[0:h1, 0:w1]
    for lvl, vol in enumerate(pyramid):
        hl, wl = vol.shape[2:]
        cx = tx / (2 ** lvl)
        cy = ty / (2 ** lvl)
        base = lvl * k * k
        for j, (dx, dy) in enumerate(offset_grid(radius)):
            px = cx + dx
            py = cy + dy
            x0 = np.floor(px).astype(np.int64)
            y0 = np.floor(py).astype(np.int64)
            fx = px - x0
            fy = py - y0

            def corner(xi, yi):
                inside = (xi >= 0) & (xi < wl) & (yi >= 0) & (yi < hl)
                vals = vol[rows, cols, np.clip(yi, 0, hl - 1), np.clip(xi, 0, wl - 1)]
                return np.where(inside, vals, 0.0)

            v00 = corner(x0, y0)
            v01 = corner(x0 + 1, y0)
            v10 = corner(x0, y0 + 1)
            v11 = corner(x0 + 1, y0 + 1)
            out[:, :, base + j] = ((1.0 - fy) * ((1.0 - fx) * v00 + fx * v01)
                                   + fy * ((1.0 - fx) * v10 + fx * v11))
    return out


def lookup_on_demand(f1, pyramid: list[np.ndarray], flow,
                     radius: int = DEFAULT_RADIUS, backend: str | None = None) -> np.ndarray:
    """Compute cost features without materializing any all-pairs volume.

    ``pyramid`` is a frame-2 feature pyramid (see :func:`build_feature_pyramid`).
    Output layout and values match :func:`lookup_precomputed` up to float
    summation order.
    """
    f1 = as_feature_map(f1)
    flow = as_flow_field(flow)
    if radius < 0:
        raise InputError(f"radius must be >= 0, got {radius}")
    if not pyramid:
        raise InputError("feature pyramid is empty")
    c, h1, w1 = f1.shape
    if flow.shape[1:] != (h1, w1):
        raise InputError(f"flow dims {flow.shape[1:]} do not match feature dims {(h1, w1)}")
    impl = _corrkernel if _resolve_backend(backend) == "native" else _corr_numpy
    inv_sqrt_c = 1.0 / math.sqrt(c)
    k = 2 * radius + 1
    out = np.empty((h1, w1, len(pyramid) * k * k), dtype=np.float64)
    tx, ty = _lookup_centers(flow)
    for lvl, f2l in enumerate(pyramid):
        f2l = as_feature_map(f2l)
        if f2l.shape[0] != c:
            raise InputError(f"channel mismatch at level {lvl}: {f2l.shape[0]} vs {c}")
        cx = np.ascontiguousarray(tx / (2 ** lvl))
        cy = np.ascontiguousarray(ty / (2 ** lvl))
        impl.lookup_level(f1, f2l, cx, cy, radius, inv_sqrt_c, out, lvl * k * k)
    return out
