"""Pure-numpy backend for the on-demand correlation lookup.

Used when the compiled extension is unavailable (or forced via
``MSRAFT_CORR_BACKEND=python``).  Work is chunked over frame-1 rows so no
intermediate grows with the product of both frame areas.
"""

from __future__ import annotations

import numpy as np

# Soft cap (bytes) for the gathered-feature intermediate per row chunk.
_CHUNK_BYTES = 48 * 1024 * 1024


def lookup_level(f1, f2l, cx, cy, radius, inv_sqrt_c, out, base):
    """Fill ``out[:, :, base:base + (2r+1)**2]`` with one pyramid level's costs.

    f1:   (C, H1, W1) frame-1 features
    f2l:  (C, Hl, Wl) pooled frame-2 features for this level
    cx/cy: (H1, W1) lookup centers in level coordinates
    """
    c, h1, w1 = f1.shape
    hl, wl = f2l.shape[1:]
    k = 2 * radius + 1
    win = k + 1  # integer window covering every bilinear corner

    rows = max(1, int(_CHUNK_BYTES // (8 * c * w1 * win * win)))
    offs = np.arange(-radius, radius + 2, dtype=np.int64)
    for r0 in range(0, h1, rows):
        r1 = min(r0 + rows, h1)
        x0 = np.floor(cx[r0:r1]).astype(np.int64)
        y0 = np.floor(cy[r0:r1]).astype(np.int64)
        fx = cx[r0:r1] - x0
        fy = cy[r0:r1] - y0

        gx = x0[:, :, np.newaxis] + offs  # (rows, W1, win)
        gy = y0[:, :, np.newaxis] + offs
        ok_x = (gx >= 0) & (gx < wl)
        ok_y = (gy >= 0) & (gy < hl)
        gathered = f2l[:, np.clip(gy, 0, hl - 1)[:, :, :, np.newaxis],
                       np.clip(gx, 0, wl - 1)[:, :, np.newaxis, :]]
        dots = np.einsum("chw,chwab->hwab", f1[:, r0:r1], gathered) * inv_sqrt_c
        dots *= ok_y[:, :, :, np.newaxis] & ok_x[:, :, np.newaxis, :]

        a = dots[:, :, :-1, :-1]
        b = dots[:, :, :-1, 1:]
        cc = dots[:, :, 1:, :-1]
        d = dots[:, :, 1:, 1:]
        fxe = fx[:, :, np.newaxis, np.newaxis]
        fye = fy[:, :, np.newaxis, np.newaxis]
        vals = (1.0 - fye) * ((1.0 - fxe) * a + fxe * b) + fye * ((1.0 - fxe) * cc + fxe * d)
        out[r0:r1, :, base:base + k * k] = vals.reshape(r1 - r0, w1, k * k)
