"""Tensor file IO and dataset/coreset containers.

Binary container ("CDSF"):
  - bytes 0-3    magic, ASCII "CDSF"
  - bytes 4-7    format version, u32 little-endian (currently 1)
  - bytes 8-11   dtype tag, u32 LE: 1 = float32, 2 = uint32
  - bytes 12-15  ndim, u32 LE: 1 or 2
  - next ndim*8  dims, u64 LE each
  - payload      row-major values, little-endian, densely packed

No padding, no checksum. CSV (by ".csv" extension) is accepted as a
human-editable fallback: comma-separated decimal, one row per line, no
header. A CSV whose rows all hold a single value parses as a 1-D vector.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

MAGIC = b"CDSF"
VERSION = 1
DTYPE_F32 = 1
DTYPE_U32 = 2

_TAG_TO_DTYPE = {DTYPE_F32: np.dtype("<f4"), DTYPE_U32: np.dtype("<u4")}


class TensorFormatError(ValueError):
    """Malformed tensor file: bad header, size mismatch, or bad values."""


class DatasetValidationError(ValueError):
    """Dataset files violate the shape/label/probability invariants."""


def write_tensor(tensor, path) -> None:
    """Write a 1-D or 2-D array to `path` (CDSF, or CSV by extension).

    Float arrays are stored as f32 (tag 1), integer arrays as u32 (tag 2).
    """
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

    path = Path(path)
    if path.suffix.lower() == ".csv":
        _write_csv(arr, tag, path)
        return

    header = MAGIC + struct.pack("<III", VERSION, tag, arr.ndim)
    header += b"".join(struct.pack("<Q", d) for d in arr.shape)
    path.write_bytes(header + np.ascontiguousarray(arr).tobytes())


def read_tensor(path):
    """Read a tensor written by :func:`write_tensor`.

    Binary reads are bit-exact. Returns float32 or uint32 arrays; a
    non-finite float payload is rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"tensor file not found: {path}")
    if path.suffix.lower() == ".csv":
        return _read_csv(path)

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
    count = int(np.prod(shape, dtype=np.int64)) if shape else 0
    payload = raw[16 + 8 * ndim:]
    if len(payload) != count * dtype.itemsize:
        raise TensorFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {count * dtype.itemsize} "
            f"for shape {shape}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    if tag == DTYPE_F32 and arr.size and not np.all(np.isfinite(arr)):
        raise TensorFormatError(f"{path}: non-finite float payload")
    return arr


def _write_csv(arr, tag, path: Path) -> None:
    # %.9g round-trips any float32 exactly through decimal.
    fmt = "%.9g" if tag == DTYPE_F32 else "%d"
    rows = arr.reshape(-1, 1) if arr.ndim == 1 else arr
    lines = [",".join(fmt % v for v in row) for row in rows]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def _read_csv(path: Path):
    text = path.read_text()
    rows = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rows.append([tok.strip() for tok in line.split(",")])
    if not rows:
        return np.zeros((0,), dtype="<f4")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise TensorFormatError(f"{path}: ragged CSV rows")
    tokens = [tok for row in rows for tok in row]
    integral = all(_is_uint_token(t) for t in tokens)
    try:
        if integral:
            arr = np.array([[int(t) for t in row] for row in rows], dtype="<u4")
        else:
            arr = np.array([[float(t) for t in row] for row in rows], dtype="<f4")
    except (ValueError, OverflowError) as exc:
        raise TensorFormatError(f"{path}: unparseable CSV value ({exc})") from exc
    if not integral and not np.all(np.isfinite(arr)):
        raise TensorFormatError(f"{path}: non-finite CSV value")
    if width == 1:
        return arr[:, 0]
    return arr


def _is_uint_token(tok: str) -> bool:
    return tok.isdigit()


@dataclass
class Dataset:
    """An embedding universe: features, labels, optional predicted probs."""

    features: np.ndarray          # (n, K) float64
    labels: np.ndarray            # (n,) int64, values in [0, C)
    C: int
    probs: Optional[np.ndarray] = None   # (n, C) float64, rows sum to 1

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def K(self) -> int:
        return self.features.shape[1]

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def validate(self) -> None:
        if self.features.ndim != 2:
            raise DatasetValidationError("features must be a matrix")
        n = self.features.shape[0]
        if self.labels.shape != (n,):
            raise DatasetValidationError(
                f"labels length {self.labels.shape[0]} != feature rows {n}"
            )
        if n and not np.all(np.isfinite(self.features)):
            raise DatasetValidationError("features contain non-finite entries")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.C):
            raise DatasetValidationError(
                f"labels must lie in [0, {self.C}), got range "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        if self.probs is not None:
            if self.probs.shape != (n, self.C):
                raise DatasetValidationError(
                    f"probs shape {self.probs.shape} != ({n}, {self.C})"
                )
            sums = self.probs.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-5)
            if bad.size:
                raise DatasetValidationError(
                    f"probs row {bad[0]} sums to {sums[bad[0]]:.7f}, expected 1 +- 1e-5"
                )


def load_dataset(features_path, labels_path, probs_path=None) -> Dataset:
    """Load and validate a dataset from tensor files.

    The class count C is the probs width when probs are given, otherwise
    max(label) + 1.
    """
    features = np.asarray(read_tensor(features_path), dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    labels_raw = np.asarray(read_tensor(labels_path))
    if labels_raw.ndim != 1:
        raise DatasetValidationError(
            f"labels must be a vector, got shape {labels_raw.shape}"
        )
    if np.issubdtype(labels_raw.dtype, np.floating):
        if not np.all(labels_raw == np.floor(labels_raw)):
            raise DatasetValidationError("labels must be integral")
    labels = labels_raw.astype(np.int64)
    if labels.size == 0:
        raise DatasetValidationError("empty dataset")

    probs = None
    if probs_path is not None:
        probs = np.asarray(read_tensor(probs_path), dtype=np.float64)
        if probs.ndim == 1:
            probs = probs.reshape(-1, 1)
        C = probs.shape[1]
    else:
        C = int(labels.max()) + 1

    ds = Dataset(features=features, labels=labels, C=C, probs=probs)
    ds.validate()
    return ds


@dataclass
class Coreset:
    """Ordered selected indices with optional weights and provenance."""

    indices: np.ndarray
    weights: Optional[np.ndarray] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)

    def __len__(self) -> int:
        return int(self.indices.size)

    def validate(self, n: int, budget: Optional[int] = None) -> None:
        if self.indices.size != np.unique(self.indices).size:
            raise ValueError("coreset indices are not distinct")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError(f"coreset indices out of range [0, {n})")
        if budget is not None and self.indices.size != min(budget, n):
            raise ValueError(
                f"coreset size {self.indices.size} != resolved budget {min(budget, n)}"
            )
        if self.weights is not None:
            if self.weights.shape != self.indices.shape:
                raise ValueError("weights not aligned with indices")
            if self.weights.size and self.weights.min() <= 0:
                raise ValueError("weights must be strictly positive")


def write_coreset(coreset: Coreset, path) -> None:
    """Serialize a coreset to its JSON interchange form (deterministic bytes)."""
    doc = {
        "indices": [int(i) for i in coreset.indices],
        "weights": None if coreset.weights is None
        else [float(w) for w in coreset.weights],
        "provenance": coreset.provenance,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def read_coreset(path) -> Coreset:
    doc = json.loads(Path(path).read_text())
    return Coreset(
        indices=np.asarray(doc["indices"], dtype=np.int64),
        weights=None if doc.get("weights") is None
        else np.asarray(doc["weights"], dtype=np.float64),
        provenance=doc.get("provenance", {}),
    )
