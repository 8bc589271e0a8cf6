"""Dataset loading: libsvm text, IDX image/label pairs, and a cached binary format.

Everything is normalized into a `Dataset` with either dense or CSR sparse
feature rows and scalar, real, or multi-label targets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

CACHE_MAGIC = b"FSDS"
CACHE_VERSION = 1

LABELS_CLASS = 0  # integer class ids
LABELS_REAL = 1  # real regression targets
LABELS_MULTI = 2  # (n, L) binary indicator matrix


@dataclass
class Dataset:
    rows: object  # ndarray (n, dim) or csr_matrix
    labels: np.ndarray
    dim: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dataset must contain at least one sample")
        if self.rows.shape != (self.n, self.dim):
            raise ValueError("rows shape does not match (n, dim)")
        if self.labels.shape[0] != self.n:
            raise ValueError("label count does not match sample count")

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.rows)

    @property
    def is_multilabel(self) -> bool:
        return self.labels.ndim == 2


class FormatError(ValueError):
    """Malformed input file."""


def read_libsvm(path, dim: int | None = None, zero_based: bool = False, multilabel: bool = False) -> Dataset:
    """Parse libsvm text lines `label[,label...] idx:val ...` into a sparse Dataset.

    Indices are 1-based unless zero_based is set; dim may be declared or is
    inferred from the largest index seen. Malformed lines raise FormatError
    with the offending line number.
    """
    path = Path(path)
    data, indices, indptr = [], [], [0]
    labels: list = []
    max_idx = -1
    with path.open("r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if multilabel:
                    labels.append([int(float(tok)) for tok in parts[0].split(",")] if parts[0] else [])
                    feats = parts[1:]
                elif ":" in parts[0]:
                    raise ValueError("missing label field")
                else:
                    labels.append(float(parts[0]))
                    feats = parts[1:]
                for tok in feats:
                    idx_s, val_s = tok.split(":")
                    idx = int(idx_s) - (0 if zero_based else 1)
                    if idx < 0:
                        raise ValueError(f"negative feature index {idx_s}")
                    if dim is not None and idx >= dim:
                        raise ValueError(f"feature index {idx_s} >= declared dim {dim}")
                    indices.append(idx)
                    data.append(float(val_s))
                    max_idx = max(max_idx, idx)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            indptr.append(len(data))
    n = len(labels)
    if n == 0:
        raise FormatError(f"{path}: no samples")
    dim = dim if dim is not None else max_idx + 1
    rows = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(n, max(dim, 1)),
    )
    if multilabel:
        vocab = sorted({l for ls in labels for l in ls})
        pos = {l: j for j, l in enumerate(vocab)}
        Y = np.zeros((n, max(len(vocab), 1)), dtype=np.int8)
        for i, ls in enumerate(labels):
            for l in ls:
                Y[i, pos[l]] = 1
        return Dataset(rows, Y, rows.shape[1], n)
    return Dataset(rows, np.asarray(labels), rows.shape[1], n)


def write_libsvm(path, dataset: Dataset, zero_based: bool = False) -> None:
    """Inverse of read_libsvm, used for round-trip checks and exports."""
    rows = dataset.rows.tocsr() if dataset.is_sparse else sp.csr_matrix(dataset.rows)
    off = 0 if zero_based else 1
    with Path(path).open("w") as fh:
        for i in range(dataset.n):
            if dataset.is_multilabel:
                label = ",".join(str(j) for j in np.flatnonzero(dataset.labels[i]))
            else:
                label = format(dataset.labels[i], "g")
            start, end = rows.indptr[i], rows.indptr[i + 1]
            feats = " ".join(
                f"{rows.indices[p] + off}:{rows.data[p]:.7g}" for p in range(start, end)
            )
            fh.write(f"{label} {feats}".rstrip() + "\n")


def read_idx(images_path, labels_path) -> Dataset:
    """Read an IDX image/label file pair into dense [0, 1] pixel rows."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    with images_path.open("rb") as fh:
        header = fh.read(16)
        if len(header) < 16:
            raise FormatError(f"{images_path}: truncated header")
        magic, count, h, w = struct.unpack(">IIII", header)
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(f"{images_path}: bad magic {magic:#010x}")
        raw = fh.read(count * h * w)
        if len(raw) != count * h * w:
            raise FormatError(f"{images_path}: truncated payload")
        X = np.frombuffer(raw, dtype=np.uint8).reshape(count, h * w).astype(np.float64) / 255.0
    with labels_path.open("rb") as fh:
        header = fh.read(8)
        if len(header) < 8:
            raise FormatError(f"{labels_path}: truncated header")
        magic, lcount = struct.unpack(">II", header)
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(f"{labels_path}: bad magic {magic:#010x}")
        raw = fh.read(lcount)
        if len(raw) != lcount:
            raise FormatError(f"{labels_path}: truncated payload")
        y = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
    if count != lcount:
        raise FormatError(f"image count {count} != label count {lcount}")
    return Dataset(X, y, X.shape[1], count)


def select_top_labels(dataset: Dataset, k: int) -> tuple[Dataset, float]:
    """Keep the k most frequent labels of a multi-label dataset.

    Samples left without any label are dropped. Returns the reduced dataset
    and the fraction of label assignments retained.
    """
    if not dataset.is_multilabel:
        raise ValueError("select_top_labels needs a multi-label dataset")
    counts = dataset.labels.sum(axis=0)
    vocab = dataset.labels.shape[1]
    if k > vocab:
        raise ValueError(f"k={k} exceeds label vocabulary of {vocab}")
    keep = np.sort(np.argsort(-counts, kind="stable")[:k])
    Y = dataset.labels[:, keep]
    alive = Y.sum(axis=1) > 0
    retained = float(counts[keep].sum() / max(counts.sum(), 1))
    rows = dataset.rows[alive]
    return Dataset(rows, Y[alive], dataset.dim, int(alive.sum())), retained


def save_dataset(path, dataset: Dataset) -> None:
    """Write the cached binary format: magic, version, layout flags, then
    little-endian payloads (see README for the exact layout)."""
    label_kind = LABELS_MULTI if dataset.is_multilabel else (
        LABELS_CLASS if np.issubdtype(dataset.labels.dtype, np.integer) else LABELS_REAL
    )
    with Path(path).open("wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IIIII", CACHE_VERSION, int(dataset.is_sparse), label_kind, dataset.n, dataset.dim))
        if dataset.is_sparse:
            csr = dataset.rows.tocsr()
            fh.write(struct.pack("<Q", csr.nnz))
            fh.write(csr.indptr.astype("<i8").tobytes())
            fh.write(csr.indices.astype("<i8").tobytes())
            fh.write(csr.data.astype("<f8").tobytes())
        else:
            fh.write(np.asarray(dataset.rows, dtype="<f8").tobytes())
        if label_kind == LABELS_MULTI:
            fh.write(struct.pack("<I", dataset.labels.shape[1]))
            fh.write(dataset.labels.astype("<i1").tobytes())
        elif label_kind == LABELS_CLASS:
            fh.write(dataset.labels.astype("<i8").tobytes())
        else:
            fh.write(dataset.labels.astype("<f8").tobytes())


def load_dataset(path) -> Dataset:
    with Path(path).open("rb") as fh:
        magic = fh.read(4)
        if magic != CACHE_MAGIC:
            raise FormatError(f"{path}: not a cached dataset file")
        version, is_sparse, label_kind, n, dim = struct.unpack("<IIIII", fh.read(20))
        if version != CACHE_VERSION:
            raise FormatError(f"{path}: unsupported cache version {version}")
        if is_sparse:
            (nnz,) = struct.unpack("<Q", fh.read(8))
            indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8")
            indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8")
            data = np.frombuffer(fh.read(8 * nnz), dtype="<f8")
            rows = sp.csr_matrix((data, indices, indptr), shape=(n, dim))
        else:
            rows = np.frombuffer(fh.read(8 * n * dim), dtype="<f8").reshape(n, dim).copy()
        if label_kind == LABELS_MULTI:
            (n_labels,) = struct.unpack("<I", fh.read(4))
            labels = np.frombuffer(fh.read(n * n_labels), dtype="<i1").reshape(n, n_labels).copy()
        elif label_kind == LABELS_CLASS:
            labels = np.frombuffer(fh.read(8 * n), dtype="<i8").copy()
        else:
            labels = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
    return Dataset(rows, labels, dim, n)
