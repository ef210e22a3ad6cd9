"""In-memory dataset container shared by generators, loaders and trainers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with labels.

    Binary datasets carry labels in {-1, +1}; multi-class datasets carry
    class indices 1..k. ``relevant`` optionally marks which columns are
    original (True) versus appended noise (False).
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: Optional[tuple[str, ...]] = None
    relevant: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if y.dtype.kind == "f":
            if not np.all(y == np.round(y)):
                raise ValueError("labels must be integers")
        y = y.astype(np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != X.shape[1]:
                raise ValueError("feature_names length does not match X columns")
            object.__setattr__(self, "feature_names", names)
        if self.relevant is not None:
            rel = np.asarray(self.relevant, dtype=bool)
            if rel.shape != (X.shape[1],):
                raise ValueError("relevant mask length does not match X columns")
            object.__setattr__(self, "relevant", rel)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.y)

    @property
    def is_binary(self) -> bool:
        return set(np.unique(self.y).tolist()) <= {-1, 1}

    def subset(self, idx: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx])

    def with_features(self, X: np.ndarray) -> "Dataset":
        """Same labels and metadata, new feature matrix of identical shape."""
        X = np.asarray(X, dtype=float)
        if X.shape != self.X.shape:
            raise ValueError(f"shape {X.shape} differs from {self.X.shape}")
        return replace(self, X=X)

    def binarize(self, positive_class: int) -> "Dataset":
        """One-vs-rest relabeling: ``positive_class`` -> +1, everything else -> -1."""
        y = np.where(self.y == positive_class, 1, -1)
        return replace(self, y=y)
