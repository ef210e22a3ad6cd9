"""Repetition pipelines behind the benchmark tables.

``table1``: binary data, a random 2/3 : 1/3 train/test split per repetition,
k-fold CV on the training part for each penalty, then test accuracy and
feature counts. ``table2``: four-class synthetic data with an independent
test set, CV-tuned one-vs-all models and the all-in-one L1 SVM.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .datagen import FourClassSpec, GroupedBinarySpec, contaminate, gen_fourclass_pair, gen_grouped_binary
from .dataio import GridSpec, SplitSpec, default_grid, grid_search_cv, split
from .dataset import Dataset
from .matcore import apply_standardization, standardize
from .metrics import EvalReport, aggregate_repetitions, evaluate
from .solvers import SolverConfig, SolverError
from .svm import L1MSVM, OVA, TrainingError, penalty_from_params, train_binary, train_l1msvm, train_ova
from . import lp as lpmod

logger = logging.getLogger(__name__)

TABLE1_METHODS = ("l2", "l1", "elasticnet", "ksupport")
TABLE2_METHODS = ("ova-l2", "ova-l1", "ova-elasticnet", "ova-ksupport", "l1msvm")
FAILURES = (TrainingError, SolverError, lpmod.LPError, ValueError)


def rep_seed(seed: int, rep: int) -> int:
    """Independent 64-bit seed for repetition ``rep`` of a run seeded ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(rep)]).generate_state(1, np.uint64)[0])


@dataclass
class Cell:
    """Outcome of one (setting, method) over all repetitions."""

    setting: str
    method: str
    reports: list[EvalReport] = field(default_factory=list)
    params: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def summary(self) -> Optional[EvalReport]:
        return aggregate_repetitions(self.reports) if self.reports else None


@dataclass(frozen=True)
class Table1Options:
    methods: tuple[str, ...] = TABLE1_METHODS
    contaminate: int = 0
    test_fraction: float = 1.0 / 3.0
    folds: int = 10
    standardize_mode: Optional[str] = "unit_l2"
    exact_l1: bool = False
    grid_num: int = 9
    config: SolverConfig = SolverConfig()


@dataclass(frozen=True)
class Table2Options:
    methods: tuple[str, ...] = TABLE2_METHODS
    n: int = 100
    p: int = 100
    n_test: int = 100
    cv_folds: int = 0  # 0 = leave-one-out
    grid_num: int = 9
    config: SolverConfig = SolverConfig()


def _grid(family: str, p: int, num: int) -> GridSpec:
    return default_grid(family, p=p, num=num)


def table1_repetition(
    source: Callable[[int], Dataset],
    seed: int,
    opts: Table1Options,
) -> dict[str, tuple[Optional[EvalReport], dict, str]]:
    """One repetition: ``method -> (report or None, best params, failure reason)``."""
    data = source(seed)
    if opts.contaminate:
        data = contaminate(data, opts.contaminate, rep_seed(seed, 1))
    tr, te = split(data, SplitSpec.holdout(opts.test_fraction, seed=rep_seed(seed, 2)))[0]
    train, test = data.subset(tr), data.subset(te)
    if opts.standardize_mode:
        Xs, mu, sc = standardize(train.X, opts.standardize_mode)
        train = train.with_features(Xs)
        test = test.with_features(apply_standardization(test.X, mu, sc))
    out = {}
    for method in opts.methods:
        exact = method == "l1" and opts.exact_l1
        try:
            cv = grid_search_cv(
                train, method, _grid(method, train.p, opts.grid_num),
                SplitSpec.kfold(opts.folds, seed=rep_seed(seed, 3)), opts.config, exact_lp=exact,
                standardize_mode=opts.standardize_mode,
            )
            model = train_binary(train, penalty_from_params(method, cv.best_params), opts.config, exact_lp=exact)
            out[method] = (evaluate(model, test), cv.best_params, "")
        except FAILURES as exc:
            out[method] = (None, {}, f"{type(exc).__name__}: {exc}")
    return out


def table2_repetition(d: float, seed: int, opts: Table2Options) -> dict[str, tuple[Optional[EvalReport], dict, str]]:
    train, test = gen_fourclass_pair(FourClassSpec(n=opts.n, p=opts.p, d=d, seed=seed), n_test=opts.n_test)
    splitter = SplitSpec.loo() if opts.cv_folds == 0 else SplitSpec.kfold(opts.cv_folds, seed=rep_seed(seed, 3))
    out = {}
    for method in opts.methods:
        try:
            if method == L1MSVM:
                cv = grid_search_cv(train, L1MSVM, _grid(L1MSVM, train.p, opts.grid_num), splitter, opts.config)
                model = train_l1msvm(train, cv.best_params["lambda"])
            else:
                family = method.split("-", 1)[1]
                cv = grid_search_cv(train, family, _grid(family, train.p, opts.grid_num), splitter, opts.config,
                                    multiclass=OVA)
                model = train_ova(train, penalty_from_params(family, cv.best_params), opts.config)
            out[method] = (evaluate(model, test), cv.best_params, "")
        except FAILURES as exc:
            out[method] = (None, {}, f"{type(exc).__name__}: {exc}")
    return out


def run_repetitions(
    settings: Sequence[tuple[str, Callable[[int], dict]]],
    methods: Sequence[str],
    reps: int,
    seed: int,
    jobs: int = 1,
) -> list[Cell]:
    """Run every setting ``reps`` times; repetition r uses ``rep_seed(seed, r)``.

    ``settings`` pairs a label with a callable taking the repetition seed.
    Results are assembled in (setting, method, repetition) order whatever
    the number of worker threads.
    """
    tasks = [(si, r) for si in range(len(settings)) for r in range(reps)]

    def run(task):
        si, r = task
        return settings[si][1](rep_seed(seed, r))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    cells = []
    for si, (label, _) in enumerate(settings):
        for m in methods:
            cell = Cell(label, m)
            for (sj, r), res in zip(tasks, results):
                if sj != si:
                    continue
                report, params, reason = res[m]
                if report is None:
                    cell.failures.append(f"rep {r}: {reason}")
                else:
                    cell.reports.append(report)
                    cell.params.append(params)
            cells.append(cell)
    return cells


def grouped_source(spec: GroupedBinarySpec) -> Callable[[int], Dataset]:
    return lambda s: gen_grouped_binary(replace(spec, seed=s))


def fixed_source(dataset: Dataset) -> Callable[[int], Dataset]:
    return lambda s: dataset


SUMMARY_COLUMNS = ("accuracy", "error", "features", "features_binary", "relevant", "nonrelevant")


def summary_rows(cells: Sequence[Cell]) -> tuple[list[str], list[list]]:
    header = ["setting", "method", "repetitions", "failures"]
    for key in SUMMARY_COLUMNS:
        header += [key, f"{key}_std"]
    rows = []
    for cell in cells:
        summ = cell.summary()
        row = [cell.setting, cell.method, len(cell.reports), len(cell.failures)]
        for key in SUMMARY_COLUMNS:
            if summ is None or key not in summ.values:
                row += ["", ""]
            else:
                row += [summ.values[key], summ.stds[key]]
        rows.append(row)
    return header, rows


def repetition_rows(cells: Sequence[Cell]) -> tuple[list[str], list[list]]:
    header = ["setting", "method", "index", "params"] + list(SUMMARY_COLUMNS)
    rows = []
    for cell in cells:
        for i, (rep, params) in enumerate(zip(cell.reports, cell.params)):
            ptxt = ";".join(f"{k}={v!r}" for k, v in params.items())
            rows.append([cell.setting, cell.method, i, ptxt] + [rep.values.get(k, "") for k in SUMMARY_COLUMNS])
        for msg in cell.failures:
            rows.append([cell.setting, cell.method, "failed", msg] + [""] * len(SUMMARY_COLUMNS))
    return header, rows
