"""Dataset files, train/test splits and cross-validated grid search.

Two text formats are supported:

* delimited text (default comma), optional header, one row per instance;
  the label column is chosen by index or header name;
* sparse ``label idx:val idx:val ...`` lines with 1-based, strictly
  increasing feature indices.

Floats are always written with ``repr`` so a save/load round trip is exact.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import lp as lpmod
from .dataset import Dataset
from .matcore import apply_standardization, make_rng, standardize
from .solvers import SolverConfig, SolverError
from .svm import (
    L1MSVM,
    OVA,
    LinearModel,
    TrainingError,
    BATCHABLE,
    MultiClassModel,
    _class_labels,
    penalty_from_params,
    predict,
    train_binary,
    train_binary_batch,
    train_l1msvm,
    train_ova,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

HOLDOUT = "holdout"
KFOLD = "kfold"
LOO = "loo"

# slack above this counts as a non-binding margin row
BINDING_TOL = 1e-7


class DataFormatError(ValueError):
    """Malformed dataset file; the message names the offending line."""


# --- delimited text -------------------------------------------------------------------


def _map_labels(raw: list[str], positive_label: Optional[str], where: list[int]) -> np.ndarray:
    if positive_label is not None:
        values = sorted(set(raw))
        if positive_label not in values:
            raise DataFormatError(f"positive label {positive_label!r} does not occur in the file")
        if len(values) > 2:
            other = next(v for v in values if v != positive_label)
            bad = next(i for i, v in enumerate(raw) if v not in (positive_label, other))
            raise DataFormatError(
                f"line {where[bad]}: unknown label value {raw[bad]!r} (binary file with labels "
                f"{positive_label!r}/{other!r})"
            )
        return np.array([1 if v == positive_label else -1 for v in raw], dtype=np.int64)
    out = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw):
        try:
            f = float(v)
        except ValueError:
            raise DataFormatError(
                f"line {where[i]}: unknown label value {v!r}; pass positive_label to map text labels"
            ) from None
        if not math.isfinite(f) or f != round(f):
            raise DataFormatError(f"line {where[i]}: label {v!r} is not an integer")
        out[i] = int(f)
    return out


def load_delimited(
    path: PathLike,
    label_column: Union[int, str] = -1,
    delimiter: str = ",",
    header: bool = False,
    positive_label: Optional[str] = None,
    ignore_columns: Sequence[Union[int, str]] = (),
) -> Dataset:
    """Read a delimited file.

    Labels must be integers unless ``positive_label`` is given, in which case
    that value maps to +1 and the (single) other value to -1.
    ``ignore_columns`` (indices or header names) are dropped, e.g. an id
    column.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh, delimiter=delimiter), start=1)]
    rows = [(i, [c.strip() for c in r]) for i, r in rows if r and any(c.strip() for c in r)]
    names = None
    if header:
        if not rows:
            raise DataFormatError("file is empty")
        names = rows[0][1]
        rows = rows[1:]
    if not rows:
        raise DataFormatError("file has no data rows")
    width = len(rows[0][1])
    for lineno, r in rows:
        if len(r) != width:
            raise DataFormatError(f"line {lineno}: ragged row with {len(r)} fields, expected {width}")
    if isinstance(label_column, str):
        if names is None:
            raise DataFormatError("label column given by name but the file has no header")
        if label_column not in names:
            raise DataFormatError(f"no column named {label_column!r}")
        lc = names.index(label_column)
    else:
        lc = label_column % width if -width <= label_column < width else None
        if lc is None:
            raise DataFormatError(f"label column {label_column} outside 0..{width - 1}")
    def resolve(col) -> int:
        if isinstance(col, str):
            if names is None or col not in names:
                raise DataFormatError(f"no column named {col!r}")
            return names.index(col)
        if not -width <= col < width:
            raise DataFormatError(f"column {col} outside 0..{width - 1}")
        return col % width

    skip = {resolve(c) for c in ignore_columns}
    if lc in skip:
        raise DataFormatError("the label column cannot be ignored")
    feats = [j for j in range(width) if j != lc and j not in skip]
    X = np.empty((len(rows), len(feats)))
    for r, (lineno, cells) in enumerate(rows):
        for c, j in enumerate(feats):
            try:
                X[r, c] = float(cells[j])
            except ValueError:
                raise DataFormatError(f"line {lineno}: non-numeric feature value {cells[j]!r}") from None
    if not np.all(np.isfinite(X)):
        bad = rows[int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])][0]
        raise DataFormatError(f"line {bad}: non-finite feature value")
    y = _map_labels([cells[lc] for _, cells in rows], positive_label, [ln for ln, _ in rows])
    fnames = tuple(names[j] for j in feats) if names is not None else None
    return Dataset(X, y, feature_names=fnames)


def save_delimited(dataset: Dataset, path: PathLike, delimiter: str = ",", header: bool = True) -> None:
    """Write features then the label as the last column."""
    names = dataset.feature_names or tuple(f"x{j + 1}" for j in range(dataset.p))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if header:
            w.writerow(list(names) + ["label"])
        for x, y in zip(dataset.X, dataset.y):
            w.writerow([repr(float(v)) for v in x] + [str(int(y))])


# --- sparse text ------------------------------------------------------------------------


def load_sparse_text(path: PathLike, p: Optional[int] = None) -> Dataset:
    """Read ``label idx:val ...`` lines; absent indices are zero.

    The dimension is the largest index seen unless ``p`` is given.
    """
    labels, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            label, *pairs = line.split()
            try:
                lab = float(label)
            except ValueError:
                raise DataFormatError(f"line {lineno}: unknown label value {label!r}") from None
            if lab != round(lab):
                raise DataFormatError(f"line {lineno}: label {label!r} is not an integer")
            idx, val, last = [], [], 0
            for tok in pairs:
                a, sep, b = tok.partition(":")
                try:
                    j, v = int(a), float(b)
                except ValueError:
                    raise DataFormatError(f"line {lineno}: malformed pair {tok!r}") from None
                if not sep:
                    raise DataFormatError(f"line {lineno}: malformed pair {tok!r}")
                if j < 1:
                    raise DataFormatError(f"line {lineno}: feature index {j} (indices start at 1)")
                if j <= last:
                    raise DataFormatError(f"line {lineno}: index {j} not strictly increasing")
                if not math.isfinite(v):
                    raise DataFormatError(f"line {lineno}: non-finite value for feature {j}")
                idx.append(j)
                val.append(v)
                last = j
            labels.append(int(lab))
            rows.append((lineno, idx, val))
    if not rows:
        raise DataFormatError("file has no data rows")
    width = max((r[1][-1] for r in rows if r[1]), default=0)
    if p is not None:
        if width > p:
            line = next(ln for ln, idx, _ in rows if idx and idx[-1] > p)
            raise DataFormatError(f"line {line}: feature index exceeds p={p}")
        width = p
    X = np.zeros((len(rows), width))
    for r, (_, idx, val) in enumerate(rows):
        X[r, np.asarray(idx, dtype=np.int64) - 1] = val
    return Dataset(X, np.array(labels, dtype=np.int64))


def save_sparse_text(dataset: Dataset, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, y in zip(dataset.X, dataset.y):
            nz = np.flatnonzero(x)
            fh.write(" ".join([str(int(y))] + [f"{j + 1}:{float(x[j])!r}" for j in nz]) + "\n")


def load_dataset(path: PathLike, fmt: str = "auto", **kwargs) -> Dataset:
    """Dispatch on ``fmt`` (``delimited``/``sparse``) or the file suffix."""
    if fmt == "auto":
        fmt = "sparse" if str(path).endswith((".svm", ".sparse", ".libsvm")) else "delimited"
    if fmt == "sparse":
        return load_sparse_text(path, p=kwargs.get("p"))
    if fmt == "delimited":
        kwargs.pop("p", None)
        return load_delimited(path, **kwargs)
    raise ValueError(f"unknown dataset format {fmt!r}")


# --- splits -------------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """``holdout`` (validation ``fraction``), ``kfold`` (``k`` folds) or ``loo``."""

    kind: str = KFOLD
    fraction: float = 1.0 / 3.0
    k: int = 10
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.kind not in (HOLDOUT, KFOLD, LOO):
            raise ValueError(f"unknown split kind {self.kind!r}")
        if self.kind == HOLDOUT and not 0 < self.fraction < 1:
            raise ValueError("holdout fraction must lie in (0, 1)")
        if self.kind == KFOLD and self.k < 2:
            raise ValueError("kfold needs k >= 2")

    @classmethod
    def holdout(cls, fraction: float = 1.0 / 3.0, seed: int = 0, stratified: bool = True) -> "SplitSpec":
        return cls(HOLDOUT, fraction=fraction, seed=seed, stratified=stratified)

    @classmethod
    def kfold(cls, k: int = 10, seed: int = 0, stratified: bool = True) -> "SplitSpec":
        return cls(KFOLD, k=k, seed=seed, stratified=stratified)

    @classmethod
    def loo(cls) -> "SplitSpec":
        return cls(LOO, stratified=False)


Fold = tuple[np.ndarray, np.ndarray]


def _fold_ids(n: int, k: int, y: np.ndarray, stratified: bool, rng: np.random.Generator) -> np.ndarray:
    """Fold id per instance; stratified ids deal each class round-robin."""
    ids = np.empty(n, dtype=np.int64)
    if not stratified:
        ids[rng.permutation(n)] = np.arange(n) % k
        return ids
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(members.size)]
        # continue the deal where the previous class stopped so fold sizes stay balanced
        ids[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return ids


def split(dataset: Dataset, spec: SplitSpec) -> list[Fold]:
    """Disjoint ``(train_idx, test_idx)`` pairs covering every instance once as test.

    A holdout split returns a single pair. Indices are sorted within each
    part.
    """
    n = dataset.n
    if n < 2:
        raise ValueError("need at least two instances to split")
    if spec.kind == LOO:
        all_idx = np.arange(n)
        return [(np.delete(all_idx, i), np.array([i])) for i in range(n)]
    rng = make_rng(spec.seed)
    y = dataset.y
    if spec.kind == KFOLD:
        if spec.k > n:
            raise ValueError(f"kfold k={spec.k} exceeds n={n}")
        if spec.stratified:
            counts = np.bincount(np.unique(y, return_inverse=True)[1])
            if counts.min() < spec.k:
                c = np.unique(y)[int(np.argmin(counts))]
                raise ValueError(
                    f"class {c} has {counts.min()} members, fewer than k={spec.k}: a stratified fold "
                    "would lack it (use stratified=False)"
                )
        ids = _fold_ids(n, spec.k, y, spec.stratified, rng)
        folds = []
        for f in range(spec.k):
            test = np.flatnonzero(ids == f)
            folds.append((np.flatnonzero(ids != f), test))
        return folds
    # holdout
    if spec.stratified:
        test_parts = []
        for c in np.unique(y):
            members = np.flatnonzero(y == c)
            members = members[rng.permutation(members.size)]
            test_parts.append(members[: int(round(spec.fraction * members.size))])
        test = np.sort(np.concatenate(test_parts))
    else:
        perm = rng.permutation(n)
        test = np.sort(perm[: int(round(spec.fraction * n))])
    if test.size == 0 or test.size == n:
        raise ValueError(f"holdout fraction {spec.fraction} leaves an empty part at n={n}")
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    return [(np.flatnonzero(~mask), test)]


# --- grids ---------------------------------------------------------------------------------

GRID_KEYS = {
    "l2": ("lambda",),
    "l1": ("lambda",),
    "elasticnet": ("lambda1", "lambda2"),
    "ksupport": ("lambda", "k"),
    L1MSVM: ("lambda",),
}


def default_values(lo: float = 1e-4, hi: float = 1e4, num: int = 9) -> list[float]:
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), num)]


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per hyperparameter; points are the cross product."""

    values: dict = field(default_factory=dict)

    def validate(self, family: str, p: Optional[int] = None) -> None:
        if family not in GRID_KEYS:
            raise ValueError(f"unknown penalty family {family!r}")
        for key in GRID_KEYS[family]:
            vals = self.values.get(key)
            if not vals:
                raise ValueError(f"grid for {family} needs a nonempty {key!r} list")
            if key == "k":
                if any(int(v) != v or v < 1 or (p is not None and v > p) for v in vals):
                    raise ValueError(f"k values must be integers in 1..{p}")
            elif any(not (math.isfinite(v) and v > 0) for v in vals):
                raise ValueError(f"{key} values must be positive")
        extra = set(self.values) - set(GRID_KEYS[family])
        if extra:
            raise ValueError(f"grid keys {sorted(extra)} do not apply to {family}")

    def points(self, family: str) -> list[dict]:
        keys = GRID_KEYS[family]
        out = []
        for combo in itertools.product(*(self.values[k] for k in keys)):
            out.append({k: (int(v) if k == "k" else float(v)) for k, v in zip(keys, combo)})
        return out


def default_grid(family: str, p: Optional[int] = None, num: int = 9) -> GridSpec:
    """Nine log-spaced values on [1e-4, 1e4] per parameter.

    The elastic net takes the cross product over ``(lambda1, lambda2)``;
    the k-support grid pairs the lambda values with ``k`` in
    ``{1, 2, 5, 10, 20, p}`` capped at ``p``.
    """
    vals = default_values(num=num)
    if family == "elasticnet":
        return GridSpec({"lambda1": vals, "lambda2": list(vals)})
    if family == "ksupport":
        if p is None:
            raise ValueError("the k-support grid needs the feature dimension")
        ks = sorted({k for k in (1, 2, 5, 10, 20) if k <= p} | {p})
        return GridSpec({"lambda": vals, "k": ks})
    if family not in GRID_KEYS:
        raise ValueError(f"unknown penalty family {family!r}")
    return GridSpec({"lambda": vals})


def sparsity_key(family: str, params: dict) -> tuple:
    """Larger tuple = stronger regularization (used to break CV ties)."""
    if family == "elasticnet":
        return (params["lambda1"], params["lambda2"])
    if family == "ksupport":
        return (params["lambda"], -params["k"])
    return (params["lambda"],)


# --- grid search -----------------------------------------------------------------------------


@dataclass
class FoldResult:
    point: int
    fold: int
    n_train: int
    n_val: int
    accuracy: float
    ok: bool = True
    reason: str = ""


@dataclass
class CVResult:
    family: str
    points: list[dict]
    folds: list[FoldResult]
    mean_accuracy: list[float]
    best_index: int
    n_folds: int

    @property
    def best_params(self) -> dict:
        return dict(self.points[self.best_index])

    @property
    def best_accuracy(self) -> float:
        return self.mean_accuracy[self.best_index]

    def table(self) -> list[dict]:
        """One row per (grid point, fold) in grid-then-fold order."""
        rows = []
        for fr in sorted(self.folds, key=lambda r: (r.point, r.fold)):
            row = {"point": fr.point, **self.points[fr.point], "fold": fr.fold, "n_train": fr.n_train,
                   "n_val": fr.n_val, "accuracy": fr.accuracy, "status": "ok" if fr.ok else "failed",
                   "reason": fr.reason}
            rows.append(row)
        return rows


@dataclass(frozen=True)
class Trainer:
    """How one grid point is fit: penalty family plus training mode."""

    family: str
    config: SolverConfig = SolverConfig()
    exact_lp: bool = False
    multiclass: Optional[str] = None  # None (binary), "ova" or "l1msvm"

    def __post_init__(self):
        if self.family == L1MSVM and self.multiclass is None:
            object.__setattr__(self, "multiclass", L1MSVM)
        if self.multiclass == L1MSVM and self.family != L1MSVM:
            raise ValueError("the all-in-one multi-class model uses the l1msvm family")
        if self.exact_lp and self.family != "l1":
            raise ValueError("exact LP training is available for the l1 family only")

    @property
    def is_lp(self) -> bool:
        return self.multiclass == L1MSVM or self.exact_lp

    @property
    def batchable(self) -> bool:
        return (
            not self.is_lp
            and self.family in GRID_KEYS
            and self.family != L1MSVM
            and penalty_from_params(self.family, _probe(self.family)).variant in BATCHABLE
        )

    def fit_batch(self, dataset: Dataset, points: list[dict]) -> list:
        """Fit every point on one training part; failures come back as exceptions."""
        specs = [penalty_from_params(self.family, pt) for pt in points]
        if self.multiclass == OVA:
            try:
                classes = _class_labels(dataset)
            except TrainingError as exc:
                return [exc] * len(points)
            ys = [np.where(dataset.y == c, 1, -1) for c in classes]
            fitted = train_binary_batch(dataset.X, ys * len(specs), [s for s in specs for _ in classes], self.config)
            out = []
            for i, spec in enumerate(specs):
                part = fitted[i * len(classes): (i + 1) * len(classes)]
                bad = next((m for m in part if isinstance(m, Exception)), None)
                if bad is not None:
                    out.append(bad)
                    continue
                out.append(MultiClassModel(
                    intercepts=np.array([m.beta0 for m in part]),
                    coefs=np.vstack([m.beta for m in part]),
                    origin=OVA, penalty=spec, classes=classes.astype(np.int64), binary_models=tuple(part),
                ))
            return out
        if not dataset.is_binary or len(np.unique(dataset.y)) < 2:
            return [TrainingError("binary training needs both classes present")] * len(points)
        return train_binary_batch(dataset.X, [dataset.y] * len(specs), specs, self.config)

    def fit(self, dataset: Dataset, params: dict, init=None):
        if self.multiclass == L1MSVM:
            return train_l1msvm(dataset, params["lambda"])
        spec = penalty_from_params(self.family, params)
        if self.multiclass == OVA:
            return train_ova(dataset, spec, self.config, exact_lp=self.exact_lp)
        return train_binary(dataset, spec, self.config, exact_lp=self.exact_lp, init=init)


def _nonbinding(model, dataset: Dataset, idx: np.ndarray) -> bool:
    """True when every margin row of the instances ``idx`` is slack at the LP optimum.

    Dropping such instances leaves the LP solution optimal, so the fold
    model equals the full-data model.
    """
    if isinstance(model, LinearModel):
        f = model.beta0 + dataset.X[idx] @ model.beta
        return bool(np.all(dataset.y[idx] * f - 1.0 > BINDING_TOL))
    F = model.intercepts + dataset.X[idx] @ model.coefs.T
    pos = np.searchsorted(model.classes, dataset.y[idx])
    own = F[np.arange(idx.size), pos]
    F[np.arange(idx.size), pos] = -np.inf
    return bool(np.all(own - F.max(axis=1) - 1.0 > BINDING_TOL))


def grid_search_cv(
    dataset: Dataset,
    family: str,
    grid: GridSpec,
    split_spec: SplitSpec,
    config: SolverConfig = SolverConfig(),
    *,
    exact_lp: bool = False,
    multiclass: Optional[str] = None,
    standardize_mode: Optional[str] = None,
    jobs: int = 1,
    warm_start: bool = True,
    progress: Optional[Callable[[int, int], None]] = None,
) -> CVResult:
    """Mean validation accuracy for every grid point.

    The best point has the highest mean accuracy; ties go to the stronger
    regularization (:func:`sparsity_key`), then to grid order. A fold that
    fails to train marks its grid point failed, with the reason recorded.

    With ``standardize_mode`` set, scaling is fit on each training part and
    applied to the matching validation part. Iterative fits within a fold
    are warm-started along the path parameter in descending order unless
    ``warm_start`` is False. Exact LP fits reuse the full-data model for
    folds whose held-out instances are all strictly outside the margin.
    """
    trainer = Trainer(family, config, exact_lp, multiclass)
    grid.validate(family, dataset.p)
    points = grid.points(family)
    folds = split(dataset, split_spec)

    full_models: dict[int, object] = {}
    if trainer.is_lp and standardize_mode is None:
        for gi, params in enumerate(points):
            try:
                full_models[gi] = trainer.fit(dataset, params)
            except (TrainingError, SolverError, lpmod.LPError):
                pass

    batched = trainer.batchable
    if batched:
        chains = [list(range(len(points)))]
    else:
        chains = _chains(family, points, warm_start and not trainer.is_lp and trainer.multiclass is None)
    tasks = [(f, chain) for f in range(len(folds)) for chain in chains]

    def run(task) -> list[FoldResult]:
        f, chain = task
        tr, va = folds[f]
        train, val = dataset.subset(tr), dataset.subset(va)
        if standardize_mode is not None:
            Xs, mu, sc = standardize(train.X, standardize_mode)
            train = train.with_features(Xs)
            val = val.with_features(apply_standardization(val.X, mu, sc))
        if batched:
            out = []
            for gi, model in zip(chain, trainer.fit_batch(train, [points[gi] for gi in chain])):
                if isinstance(model, Exception):
                    out.append(FoldResult(gi, f, tr.size, va.size, math.nan, ok=False, reason=str(model)))
                else:
                    acc = float(np.mean(predict(model, val.X) == val.y))
                    out.append(FoldResult(gi, f, tr.size, va.size, acc))
            return out
        out, init = [], None
        for gi in chain:
            try:
                full = full_models.get(gi)
                if full is not None and _nonbinding(full, dataset, va):
                    model = full
                else:
                    model = trainer.fit(train, points[gi], init=init)
                if isinstance(model, LinearModel) and not trainer.is_lp:
                    init = (model.beta0, model.beta)
                acc = float(np.mean(predict(model, val.X) == val.y))
                out.append(FoldResult(gi, f, tr.size, va.size, acc))
            except (TrainingError, SolverError, lpmod.LPError, ValueError) as exc:
                init = None
                out.append(FoldResult(gi, f, tr.size, va.size, math.nan, ok=False, reason=str(exc)))
        return out

    results: list[FoldResult] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, chunk in enumerate(pool.map(run, tasks)):
                results.extend(chunk)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, task in enumerate(tasks):
            results.extend(run(task))
            if progress:
                progress(i + 1, len(tasks))

    by_point: dict[int, list[FoldResult]] = {}
    for r in results:
        by_point.setdefault(r.point, []).append(r)
    means = []
    for gi in range(len(points)):
        rs = by_point[gi]
        if any(not r.ok for r in rs):
            means.append(math.nan)
        else:
            means.append(float(np.mean([r.accuracy for r in sorted(rs, key=lambda r: r.fold)])))
    valid = [gi for gi in range(len(points)) if not math.isnan(means[gi])]
    if not valid:
        reasons = sorted({r.reason for r in results if not r.ok})
        raise TrainingError("every grid point failed: " + "; ".join(reasons[:3]))
    top = max(means[gi] for gi in valid)
    tied = [gi for gi in valid if means[gi] >= top - 1e-12]
    strongest = max(sparsity_key(family, points[gi]) for gi in tied)
    best = next(gi for gi in tied if sparsity_key(family, points[gi]) == strongest)
    return CVResult(family, points, results, means, best, len(folds))


def _probe(family: str) -> dict:
    return {"lambda": 1.0, "lambda1": 1.0, "lambda2": 1.0, "k": 1}


def _chains(family: str, points: list[dict], warm: bool) -> list[list[int]]:
    """Groups of grid indices trained in sequence within one fold.

    Warm chains share all parameters except the path one and run from
    the largest path value down; otherwise every point is its own chain.
    """
    if not warm:
        return [[gi] for gi in range(len(points))]
    key = "lambda1" if family == "elasticnet" else "lambda"
    groups: dict[tuple, list[int]] = {}
    for gi, pt in enumerate(points):
        rest = tuple((k, v) for k, v in pt.items() if k != key)
        groups.setdefault(rest, []).append(gi)
    return [sorted(g, key=lambda gi: -points[gi][key]) for g in groups.values()]
