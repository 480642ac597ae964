"""Labeled dataset container and its CSV serialization."""
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral
from .errors import DimensionMismatch


@dataclass(frozen=True)
class Dataset:
    """N samples ``X[n]`` in R^D with labels ``y[n]`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1:
            raise DimensionMismatch(f"X must be a nonempty (N, D) array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"{X.shape[0]} samples but {y.shape[0]} labels")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be exactly +1 or -1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def signed(self):
        """Rows ``y_n x_n``; margins of w are ``signed @ w``."""
        return self.y[:, None] * self.X

    @property
    def X_hat(self):
        return spectral.dft(self.X)

    def scaled(self, c):
        return Dataset(self.X * c, self.y)

    def to_csv(self, path):
        path = Path(path)
        header = [f"x_{d}" for d in range(self.dim)] + ["y"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for x, label in zip(self.X, self.y):
                writer.writerow([repr(float(v)) for v in x] + [int(label)])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[-1] != "y":
            raise ValueError(f"last CSV column must be 'y', got {header[-1]!r}")
        data = np.array([[float(v) for v in row] for row in body])
        return cls(data[:, :-1], data[:, -1])
