"""Trainers and predictors for binary, one-vs-all and all-in-one L1 SVMs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import lp as lpmod
from .dataset import Dataset
from .objective import PenaltySpec, Variant
from .solvers import (
    BinaryObjective,
    SolveReport,
    SolverConfig,
    SolverError,
    prox_weights,
    accelerated_subgradient_solve,
    objective_value,
    prox_subgradient_batch,
    prox_subgradient_solve,
)

logger = logging.getLogger(__name__)

OVA = "ova"
L1MSVM = "l1msvm"
SUM_TO_ZERO_TOL = 1e-8


class TrainingError(ValueError):
    """Training data unsuitable for the requested model."""


@dataclass(frozen=True)
class LinearModel:
    """``f(x) = beta0 + x'beta``, optionally after ``(x - means) / scales``."""

    beta0: float
    beta: np.ndarray
    penalty: PenaltySpec
    report: Optional[SolveReport] = None
    exact: bool = False
    means: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None

    @property
    def p(self) -> int:
        return self.beta.size

    def with_standardization(self, means, scales) -> "LinearModel":
        return replace(self, means=np.asarray(means, dtype=float), scales=np.asarray(scales, dtype=float))


@dataclass(frozen=True)
class MultiClassModel:
    """Per-class linear functions combined by argmax.

    ``classes`` holds the label of each row of ``coefs`` (1..k in training
    order). ``binary_models`` is populated for one-vs-all models.
    """

    intercepts: np.ndarray
    coefs: np.ndarray
    origin: str
    penalty: PenaltySpec
    classes: np.ndarray
    binary_models: tuple[LinearModel, ...] = ()
    report: Optional[dict] = None
    exact: bool = False
    means: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None

    @property
    def num_classes(self) -> int:
        return self.coefs.shape[0]

    @property
    def p(self) -> int:
        return self.coefs.shape[1]

    def with_standardization(self, means, scales) -> "MultiClassModel":
        return replace(self, means=np.asarray(means, dtype=float), scales=np.asarray(scales, dtype=float))


Model = Union[LinearModel, MultiClassModel]


def _prepare(model: Model, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.p:
        raise ValueError(f"expected {model.p} features, got shape {x.shape}")
    if model.means is not None:
        X = (X - model.means) / model.scales
    return X, single


# --- binary -------------------------------------------------------------------------


def _check_binary(dataset: Dataset) -> None:
    if not dataset.is_binary:
        raise TrainingError("binary training needs labels in {-1, +1}")
    if dataset.n < 2 or len(np.unique(dataset.y)) < 2:
        raise TrainingError("binary training needs both classes present")


def train_binary(
    dataset: Dataset,
    penalty: PenaltySpec,
    config: SolverConfig = SolverConfig(),
    exact_lp: bool = False,
    init: Optional[tuple[float, np.ndarray]] = None,
) -> LinearModel:
    """Fit a binary SVM.

    L2/L1/elastic net use the proximal subgradient solver, k-support the
    accelerated subgradient solver (``k = 1`` is the L1 norm and goes to the
    proximal solver); ``exact_lp=True`` (L1 only) solves the
    linear program instead and yields exact zeros.
    """
    _check_binary(dataset)
    penalty.check_dimension(dataset.p)
    if exact_lp:
        if penalty.variant is not Variant.L1:
            raise TrainingError("the exact LP path exists for the L1 penalty only")
        sol = lpmod.simplex_solve(lpmod.binary_l1_svm_to_lp(dataset, penalty.lam))
        if sol.status is not lpmod.LPStatus.OPTIMAL:
            raise TrainingError(f"L1 SVM linear program reported {sol.status.value}")
        beta0, beta = lpmod.extract_binary_model(sol, dataset.n, dataset.p)
        report = SolveReport(
            iterations=sol.iterations,
            objective=objective_value(dataset, penalty, beta0, beta),
            converged=True,
            solver=f"simplex-{sol.method}",
        )
        return LinearModel(beta0, beta, penalty, report, exact=True)
    if penalty.variant is Variant.KSUPPORT and penalty.k == 1:
        # the 1-support norm is the l1 norm; the prox path yields exact zeros
        beta0, beta, report = prox_subgradient_solve(
            BinaryObjective(dataset, PenaltySpec.l1(penalty.lam)), config, init=init
        )
    elif penalty.variant is Variant.KSUPPORT:
        beta0, beta, report = accelerated_subgradient_solve(dataset, penalty, config, init=init)
    else:
        beta0, beta, report = prox_subgradient_solve(BinaryObjective(dataset, penalty), config, init=init)
    return LinearModel(float(beta0), np.asarray(beta, dtype=float), penalty, report)


def decision_value(model: LinearModel, x):
    """``beta0 + x'beta`` for one sample (float) or a matrix of samples."""
    X, single = _prepare(model, x)
    f = model.beta0 + X @ model.beta
    return float(f[0]) if single else f


def predict_binary(model: LinearModel, x):
    """Sign of the decision value; exactly zero maps to +1."""
    f = decision_value(model, x)
    if np.ndim(f) == 0:
        return 1 if f >= 0 else -1
    return np.where(f >= 0, 1, -1)


BATCHABLE = (Variant.L2, Variant.L1, Variant.ELASTIC_NET)
MAX_BATCH = 512


def train_binary_batch(
    X: np.ndarray,
    labels: Sequence[np.ndarray],
    penalties: Sequence[PenaltySpec],
    config: SolverConfig = SolverConfig(),
) -> list[Union[LinearModel, SolverError]]:
    """Fit many L2/L1/elastic-net problems sharing one feature matrix.

    Problem ``b`` uses ``labels[b]`` and ``penalties[b]``. Each problem runs
    the same iteration as :func:`train_binary` from a zero start; a problem
    whose objective turns non-finite yields a :class:`SolverError` in its
    slot instead of a model.
    """
    if len(labels) != len(penalties):
        raise ValueError("labels and penalties differ in length")
    X = np.asarray(X, dtype=float)
    out: list[Union[LinearModel, SolverError]] = []
    for lo in range(0, len(penalties), MAX_BATCH):
        chunk = list(penalties[lo: lo + MAX_BATCH])
        Y = np.vstack([np.asarray(y, dtype=float) for y in labels[lo: lo + MAX_BATCH]])
        for y in Y:
            if not (set(np.unique(y).tolist()) == {-1.0, 1.0}):
                raise TrainingError("binary training needs both classes present")
        weights = [prox_weights(spec) for spec in chunk]
        res = prox_subgradient_batch(X, Y, [w[0] for w in weights], [w[1] for w in weights], config)
        for b, spec in enumerate(chunk):
            if res.failed[b]:
                out.append(SolverError("objective became non-finite", iteration=int(res.iterations[b])))
                continue
            report = SolveReport(
                iterations=int(res.iterations[b]),
                objective=float(res.objective[b]),
                converged=bool(res.converged[b]),
                solver="prox-subgradient",
            )
            out.append(LinearModel(float(res.beta0[b]), res.beta[b].copy(), spec, report))
    return out


# --- multi-class -------------------------------------------------------------------


def _class_labels(dataset: Dataset) -> np.ndarray:
    classes = np.unique(dataset.y)
    if classes.size < 2:
        raise TrainingError("multi-class training needs at least two classes")
    return classes


def train_ova(
    dataset: Dataset,
    penalty: PenaltySpec,
    config: SolverConfig = SolverConfig(),
    exact_lp: bool = False,
    classes: Optional[Sequence[int]] = None,
) -> MultiClassModel:
    """One binary model per class (class c positive, the rest negative)."""
    labels = np.asarray(classes) if classes is not None else _class_labels(dataset)
    counts = [(dataset.y == c).sum() for c in labels]
    if min(counts) == 0:
        empty = [int(c) for c, m in zip(labels, counts) if m == 0]
        raise TrainingError(f"classes {empty} have no training instances")
    penalty.check_dimension(dataset.p)
    if penalty.variant in BATCHABLE and not exact_lp:
        ys = [np.where(dataset.y == c, 1, -1) for c in labels]
        fitted = train_binary_batch(dataset.X, ys, [penalty] * len(ys), config)
        for m in fitted:
            if isinstance(m, SolverError):
                raise m
        models = tuple(fitted)
    else:
        models = tuple(train_binary(dataset.binarize(int(c)), penalty, config, exact_lp) for c in labels)
    return MultiClassModel(
        intercepts=np.array([m.beta0 for m in models]),
        coefs=np.vstack([m.beta for m in models]),
        origin=OVA,
        penalty=penalty,
        classes=labels.astype(np.int64),
        binary_models=models,
        exact=exact_lp,
    )


def train_l1msvm(dataset: Dataset, lam: float, config: Optional[SolverConfig] = None) -> MultiClassModel:
    """All-in-one multi-class L1 SVM solved exactly as one linear program.

    Labels are remapped to 1..k in sorted order; ``classes`` records the map.
    ``config`` is accepted for interface symmetry and ignored.
    """
    labels = _class_labels(dataset)
    k = labels.size
    index = {int(c): i + 1 for i, c in enumerate(labels)}
    y = np.array([index[int(v)] for v in dataset.y])
    ds = replace(dataset, y=y)
    prog = lpmod.l1msvm_to_lp(ds, lam, k)
    sol = lpmod.simplex_solve(prog)
    if sol.status is not lpmod.LPStatus.OPTIMAL:
        # slack variables make the program always feasible and bounded
        raise RuntimeError(f"internal error: L1MSVM program reported {sol.status.value}")
    b0, W = lpmod.extract_multiclass_coefficients(sol, ds.n, ds.p, k)
    return MultiClassModel(
        intercepts=b0,
        coefs=W,
        origin=L1MSVM,
        penalty=PenaltySpec.l1(lam),
        classes=labels.astype(np.int64),
        report={"iterations": sol.iterations, "objective": sol.objective, "solver": f"simplex-{sol.method}",
                "margin_slacks": sol.slacks[: ds.n * (k - 1)].reshape(ds.n, k - 1)},
        exact=True,
    )


def multiclass_decision_values(model: MultiClassModel, x) -> np.ndarray:
    X, single = _prepare(model, x)
    F = model.intercepts + X @ model.coefs.T
    return F[0] if single else F


def argmax_lowest(F) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest index."""
    F = np.asarray(F, dtype=float)
    return np.argmax(F, axis=-1)


def predict_multiclass(model: MultiClassModel, x):
    """Class label with the largest decision value (ties: lowest class)."""
    F = multiclass_decision_values(model, x)
    idx = argmax_lowest(F)
    out = model.classes[idx]
    return int(out) if np.ndim(out) == 0 else out


def predict(model: Model, x):
    if isinstance(model, LinearModel):
        return predict_binary(model, x)
    return predict_multiclass(model, x)


# --- sparsity ------------------------------------------------------------------------


@dataclass(frozen=True)
class NonzeroCounts:
    total: int
    relevant: Optional[int] = None
    nonrelevant: Optional[int] = None


def nonzero_mask(beta, exact: bool = False) -> np.ndarray:
    """Selected coordinates: ``|b| > 1e-4 * max(1, ||b||_inf)``, or ``b != 0`` when exact."""
    beta = np.asarray(beta, dtype=float)
    if exact:
        return beta != 0.0
    thr = 1e-4 * max(1.0, float(np.abs(beta).max(initial=0.0)))
    return np.abs(beta) > thr


def selected_features(model_or_beta, exact: Optional[bool] = None) -> np.ndarray:
    """Boolean feature mask; a multi-class model selects a feature if any class does."""
    if isinstance(model_or_beta, LinearModel):
        return nonzero_mask(model_or_beta.beta, model_or_beta.exact if exact is None else exact)
    if isinstance(model_or_beta, MultiClassModel):
        ex = model_or_beta.exact if exact is None else exact
        if model_or_beta.binary_models:
            masks = [nonzero_mask(m.beta, ex) for m in model_or_beta.binary_models]
        else:
            masks = [nonzero_mask(row, ex) for row in model_or_beta.coefs]
        return np.any(masks, axis=0)
    return nonzero_mask(model_or_beta, bool(exact))


def count_nonzero(model_or_beta, relevant: Optional[np.ndarray] = None, exact: Optional[bool] = None) -> NonzeroCounts:
    """Total selected features, split by a relevant/non-relevant mask when given."""
    mask = selected_features(model_or_beta, exact)
    if relevant is None:
        return NonzeroCounts(int(mask.sum()))
    relevant = np.asarray(relevant, dtype=bool)
    if relevant.shape != mask.shape:
        raise ValueError("relevant mask does not match the coefficient dimension")
    return NonzeroCounts(int(mask.sum()), int((mask & relevant).sum()), int((mask & ~relevant).sum()))


def mean_binary_feature_count(model: MultiClassModel) -> float:
    """Average number of features selected per binary classifier of an OVA model."""
    if not model.binary_models:
        return float(selected_features(model).sum())
    return float(np.mean([nonzero_mask(m.beta, m.exact).sum() for m in model.binary_models]))


# --- families and paths --------------------------------------------------------------

FAMILIES = ("l2", "l1", "elasticnet", "ksupport")


def penalty_from_params(family: str, params: dict) -> PenaltySpec:
    """Build a penalty from a family name and a ``{"lambda": ..}``-style mapping."""
    fam = family.lower()
    if fam in ("l2", "l1"):
        return PenaltySpec(Variant(fam), lam=params["lambda"])
    if fam == "elasticnet":
        return PenaltySpec.elastic_net(params["lambda1"], params["lambda2"])
    if fam == "ksupport":
        return PenaltySpec.ksupport(params["lambda"], int(params["k"]))
    if fam == L1MSVM:
        return PenaltySpec.l1(params["lambda"])
    raise ValueError(f"unknown penalty family {family!r}")


@dataclass
class PathRow:
    value: float
    params: dict
    beta0: float
    beta: np.ndarray
    nonzero: int
    converged: bool


@dataclass
class RegularizationPath:
    family: str
    rows: list[PathRow] = field(default_factory=list)
    sorted_input: bool = True

    def coefficient_matrix(self) -> np.ndarray:
        return np.vstack([r.beta for r in self.rows])


def path_parameter(family: str) -> str:
    return "lambda1" if family == "elasticnet" else "lambda"


def regularization_path(
    dataset: Dataset,
    family: str,
    grid: Sequence[float],
    config: SolverConfig = SolverConfig(),
    fixed: Optional[dict] = None,
    exact_lp: bool = False,
) -> RegularizationPath:
    """Train along a descending grid of the family's path parameter.

    The path parameter is ``lambda`` (``lambda1`` for the elastic net);
    ``fixed`` supplies the rest (``lambda2`` or ``k``). Iterative fits are
    warm-started from the previous grid point. Unsorted grids are sorted
    descending and flagged via ``sorted_input=False``.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty grid")
    if any(g <= 0 for g in grid):
        raise ValueError("grid values must be positive")
    ordered = sorted(grid, reverse=True)
    path = RegularizationPath(family, sorted_input=(ordered == grid))
    if not path.sorted_input:
        logger.warning("regularization grid was not descending; sorted it")
    key = path_parameter(family)
    init = None
    for v in ordered:
        params = dict(fixed or {})
        params[key] = v
        spec = penalty_from_params(family, params)
        model = train_binary(dataset, spec, config, exact_lp=exact_lp, init=init)
        if not exact_lp:
            init = (model.beta0, model.beta)
        path.rows.append(PathRow(
            value=v,
            params=params,
            beta0=model.beta0,
            beta=model.beta,
            nonzero=count_nonzero(model).total,
            converged=bool(model.report.converged) if model.report else True,
        ))
    return path


def log_grid(lo: float = 1e-4, hi: float = 1e4, num: int = 9) -> list[float]:
    return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), num)]
