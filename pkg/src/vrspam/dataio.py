"""LIBSVM parsing, label binarization, splitting and dataset statistics.

Samples are stored row-wise in a CSR matrix (sparse), while class means and
weight vectors are dense.  Feature indices are 1-based in files and 0-based
in memory.
"""
from __future__ import annotations

import io
import math
import sys
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np
import scipy.sparse as sp


class ParseError(ValueError):
    """Malformed LIBSVM input; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DegenerateDataError(ValueError):
    """Raised when a dataset cannot support the AUC surrogate (e.g. one class)."""


@dataclass(frozen=True)
class Sample:
    """One example: 0-based sorted feature ``indices``, their ``values``, label in {+1, -1}."""

    indices: np.ndarray
    values: np.ndarray
    label: int

    def dense(self, dimension: int) -> np.ndarray:
        x = np.zeros(dimension)
        x[self.indices] = self.values
        return x


@dataclass(frozen=True)
class Dataset:
    """A finite sample: CSR feature matrix ``X`` (n x d) and labels ``y`` in {+1, -1}."""

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y disagree on the number of samples")

    @classmethod
    def from_dense(cls, X, y) -> "Dataset":
        X = sp.csr_matrix(np.asarray(X, dtype=float).reshape(len(y), -1))
        X.sort_indices()
        return cls(X, np.asarray(y, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def sample(self, i: int) -> Sample:
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        return Sample(self.X.indices[lo:hi], self.X.data[lo:hi], int(self.y[i]))

    @property
    def samples(self) -> Iterator[Sample]:
        return (self.sample(i) for i in range(self.n))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx])

    def with_dimension(self, dimension: int) -> "Dataset":
        """Pad with trailing all-zero features (implicit zeros in LIBSVM)."""
        if dimension < self.dimension:
            raise ValueError(f"cannot shrink dimension {self.dimension} to {dimension}")
        X = sp.csr_matrix((self.X.data, self.X.indices, self.X.indptr),
                          shape=(self.n, dimension))
        return Dataset(X, self.y)


@dataclass(frozen=True)
class DatasetStats:
    """Class prior, class-conditional means and the maximum sample norm M."""

    p: float
    mean_pos: np.ndarray
    mean_neg: np.ndarray
    max_norm: float
    n_pos: int
    n_neg: int

    @property
    def dimension(self) -> int:
        return self.mean_pos.shape[0]


Record = tuple[int, dict[int, float]]


def parse_libsvm(text: str | TextIO | Iterable[str]) -> list[Record]:
    """Parse LIBSVM lines into ``(raw_label, {1-based index: value})`` records.

    Blank lines are skipped.  Indices must be positive and strictly ascending
    within a line; the label must be an integer.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    records = []
    for lineno, line in enumerate(text, start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            label = int(tokens[0])
        except ValueError:
            raise ParseError(lineno, f"label {tokens[0]!r} is not an integer") from None
        features: dict[int, float] = {}
        last = 0
        for tok in tokens[1:]:
            idx_str, sep, val_str = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"malformed token {tok!r}")
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ParseError(lineno, f"malformed token {tok!r}") from None
            if idx <= 0:
                raise ParseError(lineno, f"non-positive index {idx}")
            if idx <= last:
                raise ParseError(lineno, f"non-ascending index {idx} after {last}")
            features[idx] = val
            last = idx
        records.append((label, features))
    return records


def serialize_libsvm(records: Iterable[Record]) -> str:
    lines = []
    for label, features in records:
        toks = [str(label)] + [f"{i}:{v!r}" for i, v in features.items()]
        lines.append(" ".join(toks))
    return "\n".join(lines) + ("\n" if lines else "")


def read_libsvm(path: str) -> list[Record]:
    """Parse a LIBSVM file; ``-`` reads standard input."""
    if path == "-":
        return parse_libsvm(sys.stdin)
    with open(path) as fh:
        return parse_libsvm(fh)


def binarize_labels(records: list[Record], dimension: int | None = None) -> Dataset:
    """Map raw labels to {+1, -1}: even -> +1, odd -> -1.

    A label set that is exactly {+1, -1} (or a subset of it) passes through
    unchanged, so the mapping is idempotent.
    """
    raw = np.array([label for label, _ in records], dtype=np.int64)
    if set(raw.tolist()) <= {1, -1}:
        y = raw
    else:
        y = np.where(raw % 2 == 0, 1, -1)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for _, features in records:
        indices.extend(i - 1 for i in features)
        data.extend(features.values())
        indptr.append(len(indices))
    observed = max(indices) + 1 if indices else 0
    d = observed if dimension is None else dimension
    if d < observed:
        raise ValueError(f"feature index {observed} exceeds dimension {d}")
    X = sp.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int32),
                       np.array(indptr, dtype=np.int64)), shape=(len(records), max(d, 1)))
    return Dataset(X, y)


def to_records(data: Dataset) -> list[Record]:
    return [(s.label, {int(i) + 1: float(v) for i, v in zip(s.indices, s.values)})
            for s in data.samples]


def load_dataset(path: str, dimension: int | None = None) -> Dataset:
    return binarize_labels(read_libsvm(path), dimension)


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffle under ``seed``; the first floor(fraction * n) samples train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if data.n == 0:
        raise ValueError("cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(data.n)
    cut = math.floor(train_fraction * data.n)
    return data.subset(perm[:cut]), data.subset(perm[cut:])


def row_norms(data: Dataset) -> np.ndarray:
    return np.sqrt(np.asarray(data.X.multiply(data.X).sum(axis=1)).ravel())


def normalize(data: Dataset, scale: float | None = None) -> Dataset:
    """Divide every sample by the dataset's max Euclidean norm (or by ``scale``).

    Pass the training set's norm as ``scale`` to map test data consistently.
    """
    if scale is None:
        scale = float(row_norms(data).max(initial=0.0))
    if scale <= 0.0:
        raise DegenerateDataError("all samples are zero; cannot normalize")
    X = data.X.copy()
    X.data = X.data / scale
    return Dataset(X, data.y)


def compute_stats(data: Dataset) -> DatasetStats:
    pos = data.y == 1
    n_pos = int(pos.sum())
    n_neg = data.n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("dataset has a single class: p(1-p) = 0, surrogate degenerate")
    mean_pos = np.asarray(data.X[pos].sum(axis=0)).ravel() / n_pos
    mean_neg = np.asarray(data.X[~pos].sum(axis=0)).ravel() / n_neg
    return DatasetStats(
        p=n_pos / data.n,
        mean_pos=mean_pos,
        mean_neg=mean_neg,
        max_norm=float(row_norms(data).max()),
        n_pos=n_pos,
        n_neg=n_neg,
    )


def make_gaussian_classes(n: int, d: int, separation: float = 2.0, p: float = 0.35,
                          seed: int = 0) -> Dataset:
    """Two isotropic unit-variance Gaussian classes whose means are ``separation`` apart.

    The positive count is round(p * n), so the prior is fixed rather than sampled.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(p * n))
    if not 0 < n_pos < n:
        raise ValueError("both classes need at least one sample")
    shift = np.zeros(d)
    shift[0] = separation / 2.0
    X = rng.standard_normal((n, d))
    y = np.full(n, -1, dtype=np.int64)
    y[:n_pos] = 1
    X[y == 1] += shift
    X[y == -1] -= shift
    perm = rng.permutation(n)
    return Dataset.from_dense(X[perm], y[perm])
