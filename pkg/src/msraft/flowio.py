"""Flow-file codecs and raster image I/O.

Formats:

- ``.flo``: little-endian; float32 magic 202021.25, int32 width, int32
  height, then height*width interleaved (float32 u, float32 v) row-major.
- KITTI flow PNG: 16-bit RGB, no interlacing; u = (R - 2**15)/64,
  v = (G - 2**15)/64, B in {0, 1} is the validity flag.  Only this exact
  PNG profile is accepted.
- images: binary PGM (P5) / PPM (P6) with maxval 255 or 65535, or PNG
  (8/16-bit grayscale or RGB, decoded with OpenCV).  Returned channels-first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import FormatError, InputError
from .grid import as_flow_field, as_mask

FLO_MAGIC = 202021.25
_FLO_MAGIC_BYTES = struct.pack("<f", FLO_MAGIC)
_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_KITTI_SCALE = 64.0
_KITTI_OFFSET = 2 ** 15


@dataclass
class FlowFileRecord:
    """A decoded flow field plus optional validity mask and its source format."""

    flow: np.ndarray
    valid: np.ndarray | None = None
    source_format: str = ""

    def __post_init__(self):
        self.flow = as_flow_field(self.flow)
        if self.valid is not None:
            self.valid = as_mask(self.valid, self.flow.shape[1:])


def write_flo(path, flow) -> None:
    flow = as_flow_field(flow)
    h, w = flow.shape[1:]
    data = np.empty((h, w, 2), dtype="<f4")
    data[:, :, 0] = flow[0]
    data[:, :, 1] = flow[1]
    with open(path, "wb") as f:
        f.write(_FLO_MAGIC_BYTES)
        f.write(struct.pack("<ii", w, h))
        f.write(data.tobytes())


def read_flo(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != _FLO_MAGIC_BYTES:
        got = struct.unpack("<f", raw[:4])[0]
        raise FormatError(f"{path}: bad magic {got!r}, expected {FLO_MAGIC}")
    w, h = struct.unpack("<ii", raw[4:12])
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: non-positive dims {w}x{h}")
    expected = 12 + 8 * h * w
    if len(raw) != expected:
        raise FormatError(f"{path}: payload is {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w, 2)
    return np.ascontiguousarray(np.moveaxis(data, 2, 0)).astype(np.float64)


def _check_kitti_png_header(path) -> None:
    with open(path, "rb") as f:
        head = f.read(33)
    if len(head) < 33 or head[:8] != _PNG_SIGNATURE:
        raise FormatError(f"{path}: not a PNG file")
    if head[12:16] != b"IHDR":
        raise FormatError(f"{path}: missing IHDR chunk")
    _, _, depth, ctype, _, _, interlace = struct.unpack(">IIBBBBB", head[16:29])
    if depth != 16 or ctype != 2 or interlace != 0:
        raise FormatError(
            f"{path}: expected 16-bit non-interlaced RGB PNG, "
            f"got depth={depth} color_type={ctype} interlace={interlace}")


def write_kitti_png(path, flow, valid=None) -> None:
    """Encode flow (and validity) in the KITTI 16-bit PNG profile.

    Components are quantized to 1/64 px with round-to-nearest, so the decode
    error stays within 1/128 px inside the representable range.
    """
    flow = as_flow_field(flow)
    h, w = flow.shape[1:]
    valid = np.ones((h, w), dtype=bool) if valid is None else as_mask(valid, (h, w))
    enc_u = np.clip(np.floor(flow[0] * _KITTI_SCALE + _KITTI_OFFSET + 0.5), 0, 65535)
    enc_v = np.clip(np.floor(flow[1] * _KITTI_SCALE + _KITTI_OFFSET + 0.5), 0, 65535)
    bgr = np.zeros((h, w, 3), dtype=np.uint16)
    bgr[:, :, 2] = enc_u.astype(np.uint16)
    bgr[:, :, 1] = enc_v.astype(np.uint16)
    bgr[:, :, 0] = valid.astype(np.uint16)
    if not cv2.imwrite(str(path), bgr):
        raise InputError(f"could not write {path}")


def read_kitti_png(path) -> FlowFileRecord:
    _check_kitti_png_header(path)
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FormatError(f"{path}: PNG decode failed")
    if img.dtype != np.uint16 or img.ndim != 3 or img.shape[2] != 3:
        raise FormatError(
            f"{path}: expected 16-bit 3-channel data, got {img.dtype} shape {img.shape}")
    valid = img[:, :, 0] != 0
    u = (img[:, :, 2].astype(np.float64) - _KITTI_OFFSET) / _KITTI_SCALE
    v = (img[:, :, 1].astype(np.float64) - _KITTI_OFFSET) / _KITTI_SCALE
    flow = np.stack([np.where(valid, u, 0.0), np.where(valid, v, 0.0)])
    return FlowFileRecord(flow=flow, valid=valid, source_format="kitti-png")


def read_flow_file(path) -> FlowFileRecord:
    """Dispatch on extension: ``.flo`` or KITTI ``.png``."""
    suffix = Path(path).suffix.lower()
    if suffix == ".flo":
        return FlowFileRecord(flow=read_flo(path), valid=None, source_format="flo")
    if suffix == ".png":
        return read_kitti_png(path)
    raise FormatError(f"{path}: unsupported flow file extension {suffix!r}")


def _read_pnm(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] not in (b"P5", b"P6"):
        raise FormatError(f"{path}: not a binary PGM/PPM file")
    channels = 1 if raw[:2] == b"P5" else 3

    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(raw):
            raise FormatError(f"{path}: truncated PNM header")
        ch = raw[pos:pos + 1]
        if ch == b"#":
            pos = raw.index(b"\n", pos) + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(raw) and not raw[end:end + 1].isspace():
                end += 1
            tokens.append(int(raw[pos:end]))
            pos = end
    pos += 1  # single whitespace after maxval
    w, h, maxval = tokens
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: non-positive dims {w}x{h}")
    if maxval not in (255, 65535):
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    dtype = np.dtype(np.uint8 if maxval == 255 else ">u2")
    count = h * w * channels
    if len(raw) - pos < count * dtype.itemsize:
        raise FormatError(f"{path}: truncated pixel data")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    img = data.reshape(h, w, channels).astype(np.float64)
    return np.ascontiguousarray(np.moveaxis(img, 2, 0))


def read_image(path) -> np.ndarray:
    """Load an 8/16-bit grayscale or RGB raster as float64 (C, H, W)."""
    suffix = Path(path).suffix.lower()
    if suffix in (".pgm", ".ppm", ".pnm"):
        return _read_pnm(path)
    if suffix == ".png":
        img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise FormatError(f"{path}: PNG decode failed")
        if img.ndim == 2:
            return img.astype(np.float64)[np.newaxis]
        if img.ndim == 3 and img.shape[2] in (3, 4):
            rgb = cv2.cvtColor(img, cv2.COLOR_BGRA2RGB if img.shape[2] == 4 else cv2.COLOR_BGR2RGB)
            return np.ascontiguousarray(np.moveaxis(rgb.astype(np.float64), 2, 0))
        raise FormatError(f"{path}: unsupported channel layout {img.shape}")
    raise FormatError(f"{path}: unsupported image extension {suffix!r}")


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an 8-bit (H, W, 3) RGB array as binary PPM."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise InputError(f"expected uint8 (H, W, 3), got {rgb.dtype} {rgb.shape}")
    h, w = rgb.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())


def write_image(path, rgb: np.ndarray) -> None:
    """Write an 8-bit RGB image; PPM natively, PNG via OpenCV."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ppm":
        write_ppm(path, rgb)
    elif suffix == ".png":
        if not cv2.imwrite(str(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR)):
            raise InputError(f"could not write {path}")
    else:
        raise FormatError(f"{path}: unsupported output extension {suffix!r}")
