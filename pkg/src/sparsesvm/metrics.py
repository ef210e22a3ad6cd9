"""Accuracy, confusion counts, repetition summaries and the grouping audit."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset
from .matcore import UndefinedCorrelationError, pearson_correlation
from .objective import Variant
from .svm import LinearModel, Model, MultiClassModel, count_nonzero, mean_binary_feature_count, predict


class AuditError(ValueError):
    """The grouping audit does not apply to this model."""


@dataclass
class EvalReport:
    """Test-set metrics; aggregated reports also carry standard deviations.

    ``values`` maps metric name to its (mean) value and ``stds`` to the
    sample standard deviation over repetitions (empty for a single run).
    """

    accuracy: float
    confusion: np.ndarray
    classes: np.ndarray
    values: dict = field(default_factory=dict)
    stds: dict = field(default_factory=dict)
    repetitions: int = 1

    @property
    def error(self) -> float:
        return 1.0 - self.accuracy

    def row(self) -> dict:
        out = {}
        for key, val in self.values.items():
            out[key] = val
            out[f"{key}_std"] = self.stds.get(key, 0.0)
        return out


def confusion_matrix(y_true, y_pred, classes) -> np.ndarray:
    """Rows are true classes, columns predicted classes, both in ``classes`` order."""
    classes = np.asarray(classes)
    pos = {int(c): i for i, c in enumerate(classes)}
    C = np.zeros((classes.size, classes.size), dtype=np.int64)
    for t, p in zip(np.asarray(y_true), np.asarray(y_pred)):
        C[pos[int(t)], pos[int(p)]] += 1
    return C


def evaluate(model: Model, test: Dataset, relevant: Optional[np.ndarray] = None) -> EvalReport:
    """Accuracy, confusion matrix and selected-feature counts.

    ``relevant`` defaults to the test set's own mask. Multi-class models
    report the union count (``features``) and, for one-vs-all, the mean
    count per binary classifier (``features_binary``).
    """
    if test.n == 0:
        raise ValueError("empty test set")
    pred = np.asarray(predict(model, test.X))
    if isinstance(model, MultiClassModel):
        classes = np.union1d(model.classes, test.classes)
    else:
        classes = np.array([-1, 1])
    C = confusion_matrix(test.y, pred, classes)
    acc = float(np.trace(C)) / test.n
    mask = relevant if relevant is not None else test.relevant
    counts = count_nonzero(model, mask)
    values = {"accuracy": acc, "error": 1.0 - acc, "features": float(counts.total)}
    if counts.relevant is not None:
        values["relevant"] = float(counts.relevant)
        values["nonrelevant"] = float(counts.nonrelevant)
    if isinstance(model, MultiClassModel) and model.binary_models:
        values["features_binary"] = mean_binary_feature_count(model)
    return EvalReport(acc, C, classes, values)


def aggregate_repetitions(reports: Sequence[EvalReport]) -> EvalReport:
    """Mean and sample standard deviation (ddof 1; zero for one report) per metric."""
    if not reports:
        raise ValueError("no reports to aggregate")
    keys = list(reports[0].values)
    shape = reports[0].confusion.shape
    for r in reports[1:]:
        if list(r.values) != keys or r.confusion.shape != shape:
            raise ValueError("reports differ in shape")
    means, stds = {}, {}
    for k in keys:
        v = np.array([r.values[k] for r in reports], dtype=float)
        means[k] = float(v.mean())
        stds[k] = float(v.std(ddof=1)) if v.size > 1 else 0.0
    C = np.sum([r.confusion for r in reports], axis=0)
    return EvalReport(means["accuracy"], C, reports[0].classes, means, stds, repetitions=len(reports))


# --- grouping audit ----------------------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    j: int
    l: int
    rho: float
    gap: float
    bound: float
    slack: float
    passed: bool


@dataclass
class GroupingAudit:
    records: list[PairRecord]
    lambda2: float
    epsilon: float
    n: int

    @property
    def pass_fraction(self) -> float:
        return 1.0 if not self.records else sum(r.passed for r in self.records) / len(self.records)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[PairRecord]:
        return [r for r in self.records if not r.passed]


def grouping_bound(n: int, lambda2: float, rho: float) -> float:
    """``sqrt(n) / lambda2 * sqrt(2 (1 - rho))`` for unit-norm centered columns."""
    return math.sqrt(n) / lambda2 * math.sqrt(max(0.0, 2.0 * (1.0 - rho)))


def default_epsilon(tolerance: float, n: int) -> float:
    return 10.0 * tolerance * n


def grouping_audit(
    model: LinearModel,
    dataset: Dataset,
    lambda2: Optional[float] = None,
    epsilon: Optional[float] = None,
    tolerance: float = 1e-6,
    pairs: Optional[Sequence[tuple[int, int]]] = None,
) -> GroupingAudit:
    """Check ``|b_j - b_l| <= bound(rho_jl) + epsilon`` for feature pairs.

    ``dataset`` must be the standardized data the model was trained on.
    ``lambda2`` defaults to the model's own; ``epsilon`` to
    ``10 * tolerance * n``. Pairs involving a constant column are skipped.
    """
    if not isinstance(model, LinearModel) or model.penalty.variant is not Variant.ELASTIC_NET:
        raise AuditError("the grouping audit applies to elastic-net models only")
    if model.exact:
        raise AuditError("exact LP models are L1 models; the grouping audit does not apply")
    lam2 = model.penalty.lam2 if lambda2 is None else float(lambda2)
    if not lam2 > 0:
        raise AuditError("the grouping bound needs lambda2 > 0")
    if dataset.p != model.p:
        raise ValueError("dataset and model dimensions differ")
    n = dataset.n
    eps = default_epsilon(tolerance, n) if epsilon is None else float(epsilon)
    if pairs is None:
        pairs = [(j, l) for j in range(dataset.p) for l in range(j + 1, dataset.p)]
    records = []
    beta = model.beta
    for j, l in pairs:
        try:
            rho = pearson_correlation(dataset.X[:, j], dataset.X[:, l])
        except UndefinedCorrelationError:
            continue
        gap = abs(float(beta[j] - beta[l]))
        bound = grouping_bound(n, lam2, rho)
        slack = bound + eps - gap
        records.append(PairRecord(j, l, rho, gap, bound, slack, gap <= bound + eps))
    return GroupingAudit(records, lam2, eps, n)


# --- tables ------------------------------------------------------------------------------


def fmt(v) -> str:
    """Full-precision rendering used in every output table."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def audit_table(audit: GroupingAudit) -> str:
    header = ["j", "l", "rho", "gap", "bound", "slack", "pass"]
    rows = [(r.j + 1, r.l + 1, r.rho, r.gap, r.bound, r.slack, r.passed) for r in audit.records]
    return table_text(header, rows)


def report_summary(report: EvalReport) -> str:
    """``key value`` lines; standard deviations appear as ``key_std``."""
    lines = [f"repetitions {report.repetitions}"]
    for k, v in report.row().items():
        lines.append(f"{k} {fmt(v)}")
    lines.append("confusion " + ";".join(",".join(str(int(c)) for c in row) for row in report.confusion))
    return "\n".join(lines) + "\n"
