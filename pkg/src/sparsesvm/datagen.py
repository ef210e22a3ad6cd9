"""Synthetic data for the grouped-feature and four-class experiments."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .matcore import cholesky, make_rng, sample_mvn

# xor-ed into a training seed to get the paired test-set seed
TEST_SEED_SALT = 0x9E3779B97F4A7C15


def derived_test_seed(seed: int) -> int:
    """Seed of the test set generated alongside a training set with ``seed``."""
    return int(seed) ^ TEST_SEED_SALT


@dataclass(frozen=True)
class GroupedBinarySpec:
    """Two Gaussian classes whose means differ on one correlated block.

    The first ``block`` features share pairwise correlation ``rho`` and carry
    mean ``+mean`` (class +1) or ``-mean`` (class -1); the remaining features
    are independent standard normals.
    """

    n_per_class: int = 30
    p: int = 30
    block: int = 5
    rho: float = 0.8
    mean: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        if not 1 <= self.block <= self.p:
            raise ValueError(f"block size {self.block} must lie in 1..p={self.p}")
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho}")

    def covariance(self) -> np.ndarray:
        S = np.eye(self.p)
        S[: self.block, : self.block] = self.rho
        np.fill_diagonal(S, 1.0)
        return S


def gen_grouped_binary(spec: GroupedBinarySpec) -> Dataset:
    """Rows ``0..n-1`` are class +1 and ``n..2n-1`` class -1 (n = n_per_class)."""
    L = cholesky(spec.covariance())
    mu = np.zeros(spec.p)
    mu[: spec.block] = spec.mean
    rng = make_rng(spec.seed)
    Xp = sample_mvn(mu, L, spec.n_per_class, rng)
    Xn = sample_mvn(-mu, L, spec.n_per_class, rng)
    y = np.concatenate([np.ones(spec.n_per_class, dtype=np.int64), -np.ones(spec.n_per_class, dtype=np.int64)])
    relevant = np.zeros(spec.p, dtype=bool)
    relevant[: spec.block] = True
    return Dataset(np.vstack([Xp, Xn]), y, relevant=relevant)


@dataclass(frozen=True)
class FourClassSpec:
    """Four classes shifted by ``d`` along +x1, +x2, -x1, -x2 respectively."""

    n: int = 100
    p: int = 100
    d: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        if self.n < 4 or self.n % 4:
            raise ValueError(f"n must be a positive multiple of 4, got {self.n}")
        if self.p < 2:
            raise ValueError("p must be >= 2")

    def class_means(self) -> np.ndarray:
        M = np.zeros((4, self.p))
        M[0, 0], M[1, 1], M[2, 0], M[3, 1] = self.d, self.d, -self.d, -self.d
        return M


def gen_fourclass(spec: FourClassSpec) -> Dataset:
    """Standard normal features plus the class shift; rows shuffled by seed."""
    rng = make_rng(spec.seed)
    m = spec.n // 4
    X = rng.standard_normal((spec.n, spec.p))
    y = np.repeat(np.arange(1, 5, dtype=np.int64), m)
    X += spec.class_means()[y - 1]
    order = rng.permutation(spec.n)
    relevant = np.zeros(spec.p, dtype=bool)
    relevant[:2] = True
    return Dataset(X[order], y[order], relevant=relevant)


def gen_fourclass_pair(spec: FourClassSpec, n_test: int | None = None) -> tuple[Dataset, Dataset]:
    """Training set and an independent test set drawn the same way."""
    test_spec = replace(spec, seed=derived_test_seed(spec.seed), n=spec.n if n_test is None else n_test)
    return gen_fourclass(spec), gen_fourclass(test_spec)


def contaminate(dataset: Dataset, num_noise_features: int, seed) -> Dataset:
    """Append ``num_noise_features`` standard-normal columns.

    The returned ``relevant`` mask marks every original column True and the
    appended ones False.
    """
    q = int(num_noise_features)
    if q < 0:
        raise ValueError("number of noise features must be >= 0")
    if q == 0:
        return dataset
    noise = make_rng(seed).standard_normal((dataset.n, q))
    names = None
    if dataset.feature_names is not None:
        names = dataset.feature_names + tuple(f"noise{j + 1}" for j in range(q))
    return Dataset(
        np.hstack([dataset.X, noise]),
        dataset.y,
        feature_names=names,
        relevant=np.concatenate([np.ones(dataset.p, dtype=bool), np.zeros(q, dtype=bool)]),
    )
