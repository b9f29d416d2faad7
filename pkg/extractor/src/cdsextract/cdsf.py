"""Minimal CDSF tensor writer and reader.

The selection package owns this format; the extractor re-implements
just enough of it to emit consumable files without importing that
package. Layout: magic "CDSF", u32 LE version (1), u32 dtype tag
(1 = float32, 2 = uint32), u32 ndim (1 or 2), ndim u64 dims, then the
densely packed row-major payload. Writes go through a temp file and
os.replace so an interrupted run never leaves a half-written tensor.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CDSF"
VERSION = 1
DTYPE_F32 = 1
DTYPE_U32 = 2

_TAG_TO_DTYPE = {DTYPE_F32: np.dtype("<f4"), DTYPE_U32: np.dtype("<u4")}


class TensorFormatError(ValueError):
    """Malformed tensor file or unwritable values."""


def write_tensor(tensor, path) -> None:
    """Atomically write a 1-D or 2-D array to `path` in CDSF form."""
    arr = np.asarray(tensor)
    if arr.ndim not in (1, 2):
        raise TensorFormatError(f"only 1-D/2-D tensors supported, got ndim={arr.ndim}")
    if np.issubdtype(arr.dtype, np.floating):
        if arr.size and not np.all(np.isfinite(arr)):
            raise TensorFormatError("refusing to write non-finite values")
        arr = arr.astype("<f4")
        tag = DTYPE_F32
    elif np.issubdtype(arr.dtype, np.integer):
        if arr.size and (arr.min() < 0 or arr.max() > np.iinfo(np.uint32).max):
            raise TensorFormatError("integer values out of u32 range")
        arr = arr.astype("<u4")
        tag = DTYPE_U32
    else:
        raise TensorFormatError(f"unsupported dtype {arr.dtype}")

    header = MAGIC + struct.pack("<III", VERSION, tag, arr.ndim)
    header += b"".join(struct.pack("<Q", d) for d in arr.shape)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + np.ascontiguousarray(arr).tobytes())
    os.replace(tmp, path)


def read_tensor(path):
    """Read a tensor written by :func:`write_tensor` (bit-exact)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"tensor file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 16:
        raise TensorFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise TensorFormatError(f"{path}: bad magic {raw[:4]!r}")
    version, tag, ndim = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    if tag not in _TAG_TO_DTYPE:
        raise TensorFormatError(f"{path}: unknown dtype tag {tag}")
    if ndim not in (1, 2):
        raise TensorFormatError(f"{path}: ndim must be 1 or 2, got {ndim}")
    if len(raw) < 16 + 8 * ndim:
        raise TensorFormatError(f"{path}: truncated dims")
    shape = struct.unpack_from("<" + "Q" * ndim, raw, 16)

    dtype = _TAG_TO_DTYPE[tag]
    count = int(np.prod(shape, dtype=np.int64))
    payload = raw[16 + 8 * ndim:]
    if len(payload) != count * dtype.itemsize:
        raise TensorFormatError(
            f"{path}: payload is {len(payload)} bytes, expected "
            f"{count * dtype.itemsize} for shape {shape}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
