"""Flow visualization with the 55-hue Middlebury color wheel."""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .grid import as_flow_field

# Hue segment lengths around the wheel: red-yellow, yellow-green, green-cyan,
# cyan-blue, blue-magenta, magenta-red.
WHEEL_SEGMENTS = (15, 6, 4, 11, 13, 6)


def color_wheel() -> np.ndarray:
    """(55, 3) RGB wheel in [0, 255]; row 0 is pure red."""
    ry, yg, gc, cb, bm, mr = WHEEL_SEGMENTS
    ncols = sum(WHEEL_SEGMENTS)
    wheel = np.zeros((ncols, 3))
    col = 0
    wheel[col:col + ry, 0] = 255
    wheel[col:col + ry, 1] = np.floor(255 * np.arange(ry) / ry)
    col += ry
    wheel[col:col + yg, 0] = 255 - np.floor(255 * np.arange(yg) / yg)
    wheel[col:col + yg, 1] = 255
    col += yg
    wheel[col:col + gc, 1] = 255
    wheel[col:col + gc, 2] = np.floor(255 * np.arange(gc) / gc)
    col += gc
    wheel[col:col + cb, 1] = 255 - np.floor(255 * np.arange(cb) / cb)
    wheel[col:col + cb, 2] = 255
    col += cb
    wheel[col:col + bm, 2] = 255
    wheel[col:col + bm, 0] = np.floor(255 * np.arange(bm) / bm)
    col += bm
    wheel[col:col + mr, 2] = 255 - np.floor(255 * np.arange(mr) / mr)
    wheel[col:col + mr, 0] = 255
    return wheel


def flow_to_color(flow, max_norm: float | None = None) -> np.ndarray:
    """Map a flow field to an (H, W, 3) uint8 image.

    Hue encodes the vector angle on the wheel (row 0 at angle 0, i.e. the
    (1, 0) direction), saturation the magnitude relative to ``max_norm``
    (the field maximum when omitted).  Zero flow is white.
    """
    flow = as_flow_field(flow)
    u, v = flow[0], flow[1]
    mag = np.sqrt(u ** 2 + v ** 2)
    if max_norm is None:
        max_norm = float(mag.max())
    elif max_norm <= 0:
        raise InputError(f"max_norm must be positive, got {max_norm}")
    rad = np.clip(mag / max_norm, 0.0, 1.0) if max_norm > 0 else np.zeros_like(mag)

    wheel = color_wheel() / 255.0
    ncols = wheel.shape[0]
    angle = np.arctan2(v, u)
    fk = (angle / (2.0 * np.pi)) % 1.0 * ncols
    k0 = np.floor(fk).astype(np.int64) % ncols
    k1 = (k0 + 1) % ncols
    f = fk - np.floor(fk)

    img = np.empty(flow.shape[1:] + (3,), dtype=np.float64)
    for c in range(3):
        col = (1.0 - f) * wheel[k0, c] + f * wheel[k1, c]
        img[:, :, c] = 1.0 - rad * (1.0 - col)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)
