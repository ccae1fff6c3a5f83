"""Binary raster files for incidence fields and depth maps.

Layout (all little-endian)::

    offset  size  field
    0       8     magic b"INCFLD01"
    8       1     dtype code (1 = float32)
    9       1     channels (3 = incidence field, 1 = depth)
    10      4     height (u32)
    14      4     width (u32)
    18      ...   payload, row-major, channel-interleaved

Rays are float64 in memory and float32 on disk.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .camera import IncidenceField, Normalization, normalize_field
from .depth_normal import DepthMap
from .errors import RasterFormatError

MAGIC = b"INCFLD01"
HEADER = struct.Struct("<8sBBII")
DTYPES = {1: np.dtype("<f4")}


def encode_raster(array: np.ndarray) -> bytes:
    a = np.asarray(array)
    if a.ndim == 2:
        a = a[..., None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ValueError(f"raster must be (H, W) or (H, W, 1|3), got {np.shape(array)}")
    h, w, c = a.shape
    if h == 0 or w == 0:
        raise ValueError("raster dimensions must be positive")
    return HEADER.pack(MAGIC, 1, c, h, w) + np.ascontiguousarray(a, dtype="<f4").tobytes()


def decode_raster(data: bytes) -> np.ndarray:
    """Parse raster bytes into a float32 array of shape ``(H, W, C)``."""
    if len(data) < HEADER.size:
        raise RasterFormatError(f"file too short for header: {len(data)} of {HEADER.size} bytes", len(data))
    magic, code, channels, h, w = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise RasterFormatError(f"bad magic {magic!r}", 0)
    if code not in DTYPES:
        raise RasterFormatError(f"unsupported dtype code {code}", 8)
    if channels not in (1, 3):
        raise RasterFormatError(f"unsupported channel count {channels}", 9)
    if h == 0 or w == 0:
        raise RasterFormatError(f"zero-sized raster {h}x{w}", 10 if h == 0 else 14)
    dtype = DTYPES[code]
    expected = h * w * channels * dtype.itemsize
    got = len(data) - HEADER.size
    if got != expected:
        kind = "truncated" if got < expected else "oversized"
        raise RasterFormatError(f"{kind} payload: expected {expected} bytes, found {got}", len(data) if got < expected else HEADER.size + expected)
    return np.frombuffer(data, dtype=dtype, offset=HEADER.size).reshape(h, w, channels)


def write_raster(path, array) -> None:
    Path(path).write_bytes(encode_raster(array))


def read_raster(path) -> np.ndarray:
    return decode_raster(Path(path).read_bytes())


def write_field(path, V: IncidenceField) -> None:
    write_raster(path, V.rays)


def read_field(path) -> IncidenceField:
    """Load a 3-channel raster as a z-normalized field.

    Stored rays may use any positive scale (e.g. unit length); each is divided
    by its third component.
    """
    a = read_raster(path)
    if a.shape[2] != 3:
        raise RasterFormatError(f"incidence field needs 3 channels, file has {a.shape[2]}", 9)
    return normalize_field(a.astype(np.float64), Normalization.Z_ONE)


def write_depth(path, D: DepthMap) -> None:
    write_raster(path, D.depth)


def read_depth(path) -> DepthMap:
    a = read_raster(path)
    if a.shape[2] != 1:
        raise RasterFormatError(f"depth map needs 1 channel, file has {a.shape[2]}", 9)
    return DepthMap(a[..., 0].astype(np.float64))
