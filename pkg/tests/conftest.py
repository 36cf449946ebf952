"""Shared synthetic inputs for the test suite.

The translation-recovery tests need frame pairs whose pooled features keep a
strict, uniquely-localized correlation peak at every pyramid scale.  Two
constructions provide that:

- quadrature_frames: four channels (cos ax, sin ax, cos by, sin by).  Each
  quadrature pair pools exactly to another quadrature pair (halved grid,
  doubled slope, shrunk amplitude), so the per-pixel cost of candidate
  offset d is rx**2 * cos(a_s (dx - tx_s)) + ry**2 * cos(b_s (dy - ty_s)) at
  every scale: separable, maximal at the rounded true offset, no spurious
  peaks inside a lookup window as long as slope * window < pi.
- ramp_image: a positive 3-channel variant for image files.  Colors sit on
  a circle around the gray axis with angle linear in x, so the gray offset
  is orthogonal to the signal and horizontal shifts remain localized; the
  vertical axis is constant and ties resolve to zero vertical motion.

Both cut frame 1 and frame 2 out of one larger master field, so every pixel
of frame 1 has a true correspondence inside frame 2.
"""

import numpy as np
import pytest

GRAY_AXIS = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
PLANE_E1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
PLANE_E2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)


def quadrature_frames(size, t, slope=0.03, margin=16):
    """Frame pair translated by integer t = (tu, tv), 4 channels, zero-mean."""
    tu, tv = t
    assert max(abs(tu), abs(tv)) <= margin
    big = size + 2 * margin
    xs = np.arange(big) * slope
    ys = np.arange(big) * slope * 1.2317  # decouple the axes
    f = np.empty((4, big, big))
    f[0] = np.cos(xs)[np.newaxis, :]
    f[1] = np.sin(xs)[np.newaxis, :]
    f[2] = np.cos(ys)[:, np.newaxis]
    f[3] = np.sin(ys)[:, np.newaxis]
    f1 = f[:, margin:margin + size, margin:margin + size]
    f2 = f[:, margin - tv:margin - tv + size, margin - tu:margin - tu + size]
    return f1.copy(), f2.copy()


def ramp_image(size, slope=0.03, center=30000.0, radius=12000.0):
    """Positive 3-channel field, angle linear in x; values fit 16-bit."""
    xs = np.arange(size) * slope
    theta = np.broadcast_to(xs[np.newaxis, :], (size, size))
    img = (center * GRAY_AXIS[:, np.newaxis, np.newaxis]
           + radius * (np.cos(theta) * PLANE_E1[:, np.newaxis, np.newaxis]
                       + np.sin(theta) * PLANE_E2[:, np.newaxis, np.newaxis]))
    return np.floor(img + 0.5)


def ramp_pair(size, tu, margin=16):
    """Horizontally translated 16-bit-valued frame pair from one master."""
    assert abs(tu) <= margin
    big = ramp_image(size + 2 * margin)
    f1 = big[:, margin:margin + size, margin:margin + size]
    f2 = big[:, margin:margin + size, margin - tu:margin - tu + size]
    return f1.copy(), f2.copy()


def in_frame_mask(size, t):
    """Pixels of frame 1 whose true correspondence lies inside frame 2."""
    tu, tv = t
    ys, xs = np.mgrid[0:size, 0:size]
    return ((xs + tu >= 0) & (xs + tu < size)
            & (ys + tv >= 0) & (ys + tv < size))


def center_mask_provider(scale, flow):
    """Convex masks selecting the center neighbor (nearest-neighbor x2)."""
    h, w = flow.shape[1:]
    mask = np.zeros((9, 2 * h, 2 * w))
    mask[4] = 1.0
    return mask


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
