"""Dataset loading, saving, and synthesis.

Two on-disk formats are understood: CSV (optional header, optional label
column by index or name) and a little-endian binary layout with magic
"AAM1", three u64 fields (n, d, has_labels), row-major float64 features,
and optional u32 labels. Labels are always remapped to dense integers
0..c'-1 in first-appearance order.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

_MAGIC = b"AAM1"
_HEADER = struct.Struct("<QQQ")


class DataFormatError(ValueError):
    """A dataset file does not conform to its format."""


@dataclass
class LabeledDataset:
    """Instance matrix with optional dense integer labels."""

    X: np.ndarray
    labels: Optional[np.ndarray]
    name: str = ""

    @property
    def n_classes(self) -> Optional[int]:
        if self.labels is None:
            return None
        return int(np.unique(self.labels).size)


def _parse_float(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def _dense_labels(raw: list) -> np.ndarray:
    seen: dict = {}
    out = np.empty(len(raw), dtype=np.intp)
    for pos, value in enumerate(raw):
        if value not in seen:
            seen[value] = len(seen)
        out[pos] = seen[value]
    return out


def load_csv(path, label_column=None) -> LabeledDataset:
    """Load a CSV dataset.

    The first row counts as a header when none of its cells parses as a
    float. ``label_column`` selects the label column by integer index
    (negative indices count from the right) or by name, which requires a
    header. Label cells may hold arbitrary strings or numbers; they come
    back as dense integers in first-appearance order.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [
            [cell.strip() for cell in row]
            for row in csv.reader(fh)
            if row and any(cell.strip() for cell in row)
        ]
    if not rows:
        raise DataFormatError(f"{path}: empty file")

    header: Optional[list[str]] = None
    if all(_parse_float(cell) is None for cell in rows[0]):
        header = rows[0]
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    width = len(header) if header is not None else len(rows[0])
    label_idx: Optional[int] = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None:
                raise DataFormatError(
                    f"{path}: label column {label_column!r} requested by "
                    "name but the file has no header"
                )
            try:
                label_idx = header.index(label_column)
            except ValueError:
                raise DataFormatError(
                    f"{path}: no column named {label_column!r} in header"
                ) from None
        else:
            label_idx = int(label_column)
            if label_idx < 0:
                label_idx += width
            if not 0 <= label_idx < width:
                raise DataFormatError(
                    f"{path}: label column {label_column} is out of range "
                    f"for {width} columns"
                )

    first_line = 2 if header is not None else 1
    data = np.empty((len(rows), width - (1 if label_idx is not None else 0)))
    raw_labels: list[str] = []
    for r, row in enumerate(rows):
        line = first_line + r
        if len(row) != width:
            raise DataFormatError(
                f"{path}: row {line} has {len(row)} cells, expected {width}"
            )
        col_out = 0
        for col, cell in enumerate(row):
            if col == label_idx:
                raw_labels.append(cell)
                continue
            value = _parse_float(cell)
            if value is None or not math.isfinite(value):
                raise DataFormatError(
                    f"{path}: row {line}, column {col + 1}: "
                    f"cannot parse {cell!r} as a finite number"
                )
            data[r, col_out] = value
            col_out += 1

    labels = _dense_labels(raw_labels) if label_idx is not None else None
    return LabeledDataset(data, labels, name=path.stem)


def save_csv(path, X, labels=None, header: bool = True, prefix: str = "f") -> None:
    """Write a CSV dataset (floats via repr, so values round-trip)."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            names = [f"{prefix}{c + 1}" for c in range(X.shape[1])]
            if labels is not None:
                names.append("label")
            writer.writerow(names)
        for r in range(X.shape[0]):
            row = [repr(float(v)) for v in X[r]]
            if labels is not None:
                row.append(str(int(labels[r])))
            writer.writerow(row)


def save_binary(path, X, labels=None) -> None:
    """Write the binary dataset format (bit-exact round trip)."""
    X = np.ascontiguousarray(np.asarray(X, dtype="<f8"))
    if X.ndim != 2:
        raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
    n, d = X.shape
    if n == 0 or d == 0:
        raise ValueError(f"refusing to write an empty dataset ({n} x {d})")
    buf = bytearray()
    buf += _MAGIC
    buf += _HEADER.pack(n, d, 1 if labels is not None else 0)
    buf += X.tobytes(order="C")
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
        if labels.min() < 0 or labels.max() >= 2 ** 32:
            raise ValueError("labels must fit in an unsigned 32-bit integer")
        buf += labels.astype("<u4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(buf)


def load_binary(path) -> LabeledDataset:
    """Read the binary dataset format written by :func:`save_binary`."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < len(_MAGIC):
        raise DataFormatError(f"{path}: truncated file (no magic)")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise DataFormatError(
            f"{path}: bad magic {blob[:len(_MAGIC)]!r}, expected {_MAGIC!r}"
        )
    if len(blob) < len(_MAGIC) + _HEADER.size:
        raise DataFormatError(f"{path}: truncated file (incomplete header)")
    n, d, has_labels = _HEADER.unpack_from(blob, len(_MAGIC))
    if has_labels not in (0, 1):
        raise DataFormatError(f"{path}: has_labels must be 0 or 1, got {has_labels}")
    if n == 0 or d == 0:
        raise DataFormatError(f"{path}: empty dataset ({n} x {d})")
    expected = len(_MAGIC) + _HEADER.size + 8 * n * d + 4 * n * has_labels
    if len(blob) < expected:
        raise DataFormatError(
            f"{path}: truncated file ({len(blob)} bytes, expected {expected})"
        )
    if len(blob) > expected:
        raise DataFormatError(
            f"{path}: {len(blob) - expected} bytes of trailing data"
        )
    offset = len(_MAGIC) + _HEADER.size
    X = np.frombuffer(blob, dtype="<f8", count=n * d, offset=offset)
    X = X.reshape(n, d).astype(np.float64, copy=True)
    if not np.all(np.isfinite(X)):
        raise DataFormatError(f"{path}: data contains non-finite values")
    labels = None
    if has_labels:
        raw = np.frombuffer(blob, dtype="<u4", count=n, offset=offset + 8 * n * d)
        labels = _dense_labels(list(raw))
    return LabeledDataset(X, labels, name=path.stem)


def load_dataset(path, label_column=None) -> LabeledDataset:
    """Load a dataset, sniffing the binary magic, else parsing as CSV."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(len(_MAGIC))
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc.strerror or exc}") from exc
    if head == _MAGIC:
        if label_column is not None:
            raise DataFormatError(
                f"{path}: label column selection only applies to CSV files"
            )
        return load_binary(path)
    try:
        return load_csv(path, label_column)
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path}: not a CSV file ({exc})") from exc


def synth_blobs(c: int, n: int, d: int, separation: float = 10.0,
                sigma: float = 1.0, seed: int = 0) -> LabeledDataset:
    """Gaussian blobs with a guaranteed center separation.

    Cluster centers are drawn from a seeded standard normal and rescaled so
    the minimum pairwise center distance is exactly separation * sigma;
    points get isotropic noise of scale sigma. Cluster sizes differ by at
    most one (the first n mod c clusters get the extra point) and labels
    come back in block order.
    """
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    if n < c:
        raise ValueError(f"n must be >= c, got n = {n}, c = {c}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not (math.isfinite(separation) and separation > 0):
        raise ValueError(f"separation must be positive, got {separation}")
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")

    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(c, d))
    if c > 1:
        dmin = float(pdist(centers).min())
        if dmin == 0.0:
            raise ValueError(
                f"degenerate center draw for seed {seed}; pick another seed"
            )
        centers *= separation * sigma / dmin

    sizes = np.full(c, n // c, dtype=np.intp)
    sizes[: n % c] += 1
    labels = np.repeat(np.arange(c, dtype=np.intp), sizes)
    X = centers[labels] + sigma * rng.normal(size=(n, d))
    return LabeledDataset(
        X, labels, name=f"blobs-c{c}-n{n}-d{d}-seed{seed}"
    )
