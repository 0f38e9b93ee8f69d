"""CSV ingestion and a synthetic RSS-like stream generator."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import CsvParseError, UsageError

# Invented RSS levels in dBm, one per reference-tag location.
DEFAULT_MEANS = (-50.0, -58.0, -66.0, -74.0)


class Dataset(NamedTuple):
    X: np.ndarray
    y: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return int(self.y.max()) + 1 if len(self.y) else 0

    def slice(self, start, end):
        return Dataset(self.X[start:end], self.y[start:end])


@dataclass(frozen=True)
class CsvSchema:
    label_base: int = 0
    skip_header: bool = False
    n_classes: Optional[int] = None

    def __post_init__(self):
        if self.label_base not in (0, 1):
            raise UsageError("label_base must be 0 or 1")


def load_csv(path, schema: CsvSchema = CsvSchema()) -> Dataset:
    """Read features (all but last column) and an integer label (last column).

    Labels are shifted to be 0-based.
    """
    rows, labels = [], []
    p = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and schema.skip_header:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise CsvParseError("need at least one feature and a label", lineno)
            if p is None:
                p = len(row) - 1
            elif len(row) - 1 != p:
                raise CsvParseError(f"expected {p + 1} columns, got {len(row)}", lineno)
            try:
                x = [float(cell) for cell in row[:-1]]
            except ValueError as exc:
                raise CsvParseError(f"non-numeric feature ({exc})", lineno) from None
            if not all(math.isfinite(v) for v in x):
                raise CsvParseError("non-finite feature", lineno)
            try:
                raw = float(row[-1])
            except ValueError:
                raise CsvParseError(f"non-numeric label {row[-1]!r}", lineno) from None
            if not raw.is_integer():
                raise CsvParseError(f"label {row[-1]!r} is not an integer", lineno)
            label = int(raw) - schema.label_base
            if label < 0 or (schema.n_classes is not None and label >= schema.n_classes):
                raise CsvParseError(f"label {row[-1]} out of range", lineno)
            rows.append(x)
            labels.append(label)
    if not rows:
        return Dataset(np.empty((0, p or 0)), np.empty(0, dtype=np.int64))
    return Dataset(np.array(rows, dtype=float), np.array(labels, dtype=np.int64))


def write_csv(path, data: Dataset, label_base=0, header: Optional[Sequence[str]] = None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for x, y in zip(data.X, data.y):
            w.writerow([f"{v:.17g}" for v in x] + [int(y) + label_base])


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic RSS stream settings.

    ``class_means`` holds one mean per class; a scalar per class gives 1-D
    data, a vector per class gives ``p``-dimensional data. The defaults are
    made-up RSS levels, not measurements.
    """

    n: int = 10000
    classes: int = 4
    class_means: Optional[Sequence] = None
    sigma: float | Sequence[float] = 2.0
    drift_rate: float = 0.0
    seed: int = 0

    def means(self) -> np.ndarray:
        if self.class_means is None:
            if self.classes == len(DEFAULT_MEANS):
                m = np.array(DEFAULT_MEANS)
            else:
                m = -50.0 - 8.0 * np.arange(self.classes)
        else:
            m = np.asarray(self.class_means, dtype=float)
        m = m.reshape(self.classes, -1)
        return m

    def sigmas(self) -> np.ndarray:
        s = np.broadcast_to(np.asarray(self.sigma, dtype=float), (self.classes,))
        return np.array(s)

    def __post_init__(self):
        if self.classes < 1 or self.n < self.classes:
            raise UsageError("need n >= classes >= 1")
        if np.any(self.sigmas() <= 0):
            raise UsageError("sigma must be positive")
        if self.class_means is not None and np.asarray(self.class_means).size % self.classes:
            raise UsageError("class_means must hold one entry (or vector) per class")


def synth_rss(cfg: SynthConfig) -> Dataset:
    """Balanced, shuffled class stream; sample ``t`` of class ``c`` is
    ``Normal(mean_c + drift_rate * t, sigma_c**2)`` in every dimension."""
    rng = np.random.default_rng(cfg.seed)
    means = cfg.means()
    sig = cfg.sigmas()
    y = np.resize(np.arange(cfg.classes), cfg.n)
    rng.shuffle(y)
    t = np.arange(cfg.n, dtype=float)
    noise = rng.standard_normal((cfg.n, means.shape[1]))
    X = means[y] + cfg.drift_rate * t[:, None] + sig[y][:, None] * noise
    return Dataset(X, y.astype(np.int64))
