"""Small dense linear-algebra and statistics helpers.

Random streams come from NumPy's PCG64 bit generator (``default_rng``) and
its ziggurat standard-normal sampler, which produce identical streams on
every platform for a given integer seed.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator]

PIVOT_MIN = 1e-12
SYMMETRY_TOL = 1e-12

UNIT_L2 = "unit_l2"
UNIT_VARIANCE = "unit_variance"


class CholeskyError(ValueError):
    """Matrix is not (numerically) symmetric positive definite."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


class UndefinedCorrelationError(ValueError):
    pass


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def cholesky(sigma) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == sigma``.

    Raises :class:`CholeskyError` when ``sigma`` is not square, not
    symmetric to 1e-12, or a pivot falls to 1e-12 or below; the error
    carries the 0-based index of the failing pivot.
    """
    A = np.asarray(sigma, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise CholeskyError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise CholeskyError("matrix has non-finite entries")
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL:
        raise CholeskyError("matrix is not symmetric")
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= PIVOT_MIN:
            raise CholeskyError(
                f"matrix is not positive definite: pivot {j} is {pivot:.3g}", pivot_index=j
            )
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def sample_mvn(mu, L, n: int, seed: SeedLike) -> np.ndarray:
    """Draw ``n`` rows ``mu + L u`` with ``u`` standard normal."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape != (mu.size, mu.size):
        raise ValueError(f"mean has dimension {mu.size} but factor has shape {L.shape}")
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    U = make_rng(seed).standard_normal((int(n), mu.size))
    return mu + U @ L.T


def pearson_correlation(x, y) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least two observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a zero-variance input")
    r = float((xc @ yc) / (sx * sy))
    return min(1.0, max(-1.0, r))


def standardize(X, mode: str = UNIT_L2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center each column and rescale it.

    ``mode="unit_l2"`` gives every centered column Euclidean norm 1;
    ``mode="unit_variance"`` gives population variance 1. Constant columns
    are only centered and get scale 1.

    Returns ``(X_std, means, scales)`` with ``X_std = (X - means) / scales``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array")
    means = X.mean(axis=0)
    Xc = X - means
    norms = np.sqrt((Xc * Xc).sum(axis=0))
    if mode == UNIT_L2:
        scales = norms
    elif mode == UNIT_VARIANCE:
        scales = norms / np.sqrt(max(X.shape[0], 1))
    else:
        raise ValueError(f"unknown standardization mode {mode!r}")
    # spread below rounding level of the column magnitude counts as constant
    tiny = norms <= 1e-12 * np.maximum(1.0, np.abs(means)) * np.sqrt(max(X.shape[0], 1))
    scales = np.where(tiny, 1.0, scales)
    Xs = Xc / scales
    Xs[:, tiny] = 0.0
    return Xs, means, scales


def apply_standardization(X, means, scales) -> np.ndarray:
    return (np.asarray(X, dtype=float) - means) / scales
