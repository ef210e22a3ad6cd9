"""Command-line interface: ``sparsesvm <command> [options]``.

Commands: ``synth``, ``train``, ``cv``, ``path``, ``benchmark`` and
``rerun``. Every run writes a JSON manifest next to its outputs; ``rerun``
replays a manifest. Relative output names resolve against ``--outdir``,
which defaults to ``$SPARSESVM_OUTDIR`` or the working directory.

Exit codes: 0 success, 2 bad arguments, 3 bad input data, 4 solver or
training failure, 5 output not writable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from . import lp as lpmod
from .datagen import (
    FourClassSpec,
    GroupedBinarySpec,
    contaminate,
    derived_test_seed,
    gen_fourclass,
    gen_grouped_binary,
)
from .dataio import (
    GRID_KEYS,
    DataFormatError,
    GridSpec,
    SplitSpec,
    default_values,
    grid_search_cv,
    load_dataset,
    save_delimited,
    save_sparse_text,
)
from .dataset import Dataset
from .experiments import (
    TABLE1_METHODS,
    TABLE2_METHODS,
    Table1Options,
    Table2Options,
    fixed_source,
    grouped_source,
    repetition_rows,
    run_repetitions,
    summary_rows,
    table1_repetition,
    table2_repetition,
)
from .matcore import standardize
from .metrics import AuditError, audit_table, fmt, grouping_audit, table_text
from .modelio import save_model
from .solvers import SolverConfig, SolverError
from .svm import (
    L1MSVM,
    OVA,
    LinearModel,
    TrainingError,
    count_nonzero,
    penalty_from_params,
    regularization_path,
    train_binary,
    train_l1msvm,
    train_ova,
)

OUTDIR_ENV = "SPARSESVM_OUTDIR"

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_DATA = 3
EXIT_SOLVER = 4
EXIT_IO = 5

logger = logging.getLogger("sparsesvm")


class ArgumentError(Exception):
    pass


class OutputError(Exception):
    pass


# --- shared option groups ------------------------------------------------------------


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run options")
    g.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    g.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    g.add_argument("--tolerance", type=float, default=1e-6, help="solver convergence tolerance")
    g.add_argument("--max-iters", type=int, default=5000, help="solver iteration cap")
    g.add_argument("--outdir", default=None, help=f"output directory (default ${OUTDIR_ENV} or .)")
    g.add_argument("--manifest", default=None, help="manifest file name (default derived from the output)")
    g.add_argument("-v", "--verbose", action="store_true")


def _data_options(parser: argparse.ArgumentParser, required: bool = True) -> None:
    g = parser.add_argument_group("input data")
    g.add_argument("--data", required=required, help="dataset file (delimited or sparse text)")
    g.add_argument("--format", default="auto", choices=["auto", "delimited", "sparse"])
    g.add_argument("--label-column", default="-1", help="label column index or header name (default last)")
    g.add_argument("--no-header", action="store_true", help="delimited file has no header row")
    g.add_argument("--delimiter", default=",")
    g.add_argument("--positive-label", default=None, help="text label mapped to +1 (others to -1)")
    g.add_argument("--ignore-columns", default="", help="comma-separated columns to drop (index or name)")
    g.add_argument("--relevant", default=None, help="1-based relevant feature range(s), e.g. 1-5 or 1-30,41")


def _penalty_options(parser: argparse.ArgumentParser, families: Sequence[str]) -> None:
    g = parser.add_argument_group("penalty")
    g.add_argument("--penalty", required=True, choices=list(families))
    g.add_argument("--lambda", dest="lam", type=float, default=None)
    g.add_argument("--lambda1", type=float, default=None)
    g.add_argument("--lambda2", type=float, default=None)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--exact-lp", action="store_true", help="solve the L1 problem exactly as a linear program")
    g.add_argument("--multiclass", choices=["auto", "ova"], default="auto",
                   help="multi-class strategy for non-l1msvm penalties (default: ova when labels are not +-1)")
    g.add_argument("--standardize", choices=["none", "unit_l2", "unit_variance"], default="none")


def _grid_options(parser: argparse.ArgumentParser, default_num: int) -> None:
    g = parser.add_argument_group("grid")
    g.add_argument("--grid", default=None, help="comma-separated values of the path parameter (lambda or lambda1)")
    g.add_argument("--lambda2-grid", default=None, help="comma-separated lambda2 values (elastic net)")
    g.add_argument("--k-grid", default=None, help="comma-separated k values (k-support)")
    g.add_argument("--grid-num", type=int, default=default_num)
    g.add_argument("--grid-min", type=float, default=1e-4)
    g.add_argument("--grid-max", type=float, default=1e4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsesvm", description="Sparse linear SVM toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("kind", choices=["grouped", "fourclass"])
    p.add_argument("--n-per-class", type=int, default=30)
    p.add_argument("--p", type=int, default=None, help="dimension (default 30 grouped, 100 fourclass)")
    p.add_argument("--block", type=int, default=5)
    p.add_argument("--rho", type=float, default=0.8)
    p.add_argument("--mean", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=float, default=3.0)
    p.add_argument("--contaminate", type=int, default=0, help="append this many N(0,1) noise features")
    p.add_argument("--test", action="store_true", help="also write an independent test set")
    p.add_argument("--out-format", choices=["delimited", "sparse"], default="delimited")
    p.add_argument("--out", default=None)
    _common(p)

    p = sub.add_parser("train", help="train one model")
    _data_options(p)
    _penalty_options(p, ("l2", "l1", "elasticnet", "ksupport", L1MSVM))
    p.add_argument("--audit-grouping", action="store_true", help="write the elastic-net grouping audit table")
    p.add_argument("--epsilon", type=float, default=None, help="audit slack (default 10 * tolerance * n)")
    p.add_argument("--model-out", default="model.txt")
    p.add_argument("--trace-out", default=None, help="write the objective trace as CSV")
    _common(p)

    p = sub.add_parser("cv", help="cross-validated grid search")
    _data_options(p)
    _penalty_options(p, tuple(GRID_KEYS))
    _grid_options(p, 9)
    s = p.add_mutually_exclusive_group()
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--loo", action="store_true")
    s.add_argument("--holdout", type=float, default=None, help="single validation split of this fraction")
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--out", default="cv", help="output prefix")
    _common(p)

    p = sub.add_parser("path", help="regularization path table")
    _data_options(p)
    _penalty_options(p, ("l2", "l1", "elasticnet", "ksupport"))
    _grid_options(p, 30)
    p.add_argument("--out", default="path.csv")
    _common(p)

    p = sub.add_parser("benchmark", help="repeated train/test experiments")
    p.add_argument("protocol", choices=["table1", "table2"])
    _data_options(p, required=False)
    p.add_argument("--grouped", action="store_true", help="table1 on grouped synthetic data")
    p.add_argument("--contaminate", type=int, default=0)
    p.add_argument("--reps", type=int, default=None, help="repetitions (default 10 table1, 50 table2)")
    p.add_argument("--methods", default=None, help="comma-separated subset of methods")
    p.add_argument("--folds", type=int, default=None,
                   help="CV folds (default 10 for table1, leave-one-out for table2; 0 = leave-one-out)")
    p.add_argument("--test-fraction", type=float, default=1.0 / 3.0)
    p.add_argument("--standardize", choices=["none", "unit_l2", "unit_variance"], default="unit_l2",
                   help="table1 scaling fit on each training part (default unit_l2)")
    p.add_argument("--exact-l1", action="store_true", help="table1 L1 via the exact LP")
    p.add_argument("--d", default="1,2,3", help="table2 shift magnitudes")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--test-n", type=int, default=100)
    p.add_argument("--grid-num", type=int, default=9)
    p.add_argument("--out", default=None)
    _common(p)

    p = sub.add_parser("rerun", help="replay a manifest")
    p.add_argument("manifest_path")
    p.add_argument("--outdir", default=None, help="write outputs here instead of the recorded directory")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


# --- helpers -------------------------------------------------------------------------------


def _floats(text: str, name: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ArgumentError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ArgumentError(f"{name}: empty list")
    return vals


def _ints(text: str, name: str) -> list[int]:
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise ArgumentError(f"{name}: expected integers")
    return [int(v) for v in vals]


def _relevant_mask(spec: Optional[str], p: int) -> Optional[np.ndarray]:
    if spec is None:
        return None
    mask = np.zeros(p, dtype=bool)
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        lo, _, hi = part.partition("-")
        try:
            a, b = int(lo), int(hi or lo)
        except ValueError:
            raise ArgumentError(f"--relevant: bad range {part!r}") from None
        if not 1 <= a <= b <= p:
            raise ArgumentError(f"--relevant: range {part!r} outside 1..{p}")
        mask[a - 1: b] = True
    return mask


def _load(args) -> Dataset:
    label = args.label_column
    try:
        label = int(label)
    except ValueError:
        pass
    ignore = []
    for tok in filter(None, (t.strip() for t in args.ignore_columns.split(","))):
        try:
            ignore.append(int(tok))
        except ValueError:
            ignore.append(tok)
    try:
        ds = load_dataset(
            args.data, args.format, label_column=label, delimiter=args.delimiter,
            header=not args.no_header, positive_label=args.positive_label, ignore_columns=ignore,
        )
    except FileNotFoundError:
        raise DataFormatError(f"cannot read {args.data}") from None
    mask = _relevant_mask(args.relevant, ds.p)
    if mask is not None:
        ds = Dataset(ds.X, ds.y, ds.feature_names, mask)
    return ds


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(max_iterations=args.max_iters, tolerance=args.tolerance, seed=args.seed)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None


def _penalty_params(args) -> dict:
    fam = args.penalty
    need = {"l2": ("lam",), "l1": ("lam",), L1MSVM: ("lam",), "elasticnet": ("lambda1", "lambda2"),
            "ksupport": ("lam", "k")}[fam]
    for attr in need:
        if getattr(args, attr) is None:
            flag = "--lambda" if attr == "lam" else f"--{attr}"
            raise ArgumentError(f"--penalty {fam} needs {flag}")
    if fam == "elasticnet":
        return {"lambda1": args.lambda1, "lambda2": args.lambda2}
    if fam == "ksupport":
        return {"lambda": args.lam, "k": args.k}
    return {"lambda": args.lam}


def _multiclass(args, ds: Dataset) -> Optional[str]:
    if args.penalty == L1MSVM:
        return L1MSVM
    if args.multiclass == "ova" or not ds.is_binary:
        return OVA
    return None


class Run:
    """Output bookkeeping for one command invocation."""

    def __init__(self, args, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        outdir = args.outdir or os.environ.get(OUTDIR_ENV) or "."
        self.outdir = Path(outdir).resolve()
        self.outputs: dict[str, str] = {}
        self.warnings: list[str] = []
        self.results: dict = {}

    def path(self, name: str, key: str) -> Path:
        p = Path(name)
        if not p.is_absolute():
            p = self.outdir / p
        self.outputs[key] = str(p)
        return p

    def write(self, path: Path, text: str) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from None

    def manifest(self, primary: Path) -> Path:
        name = self.args.manifest or (primary.name + ".manifest.json")
        mpath = Path(name) if Path(name).is_absolute() else self.outdir / name
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("outdir", "manifest", "verbose")}
        doc = {
            "command": self.args.command,
            "argv": _strip_outdir(self.argv),
            "cwd": os.getcwd(),
            "outdir": str(self.outdir),
            "parameters": params,
            "seed": self.args.seed,
            "versions": {
                "sparsesvm": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "outputs": self.outputs,
            "warnings": self.warnings,
            "results": self.results,
        }
        self.write(mpath, json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
        return mpath


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _strip_outdir(argv: Sequence[str]) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--outdir":
            skip = True
            continue
        if tok.startswith("--outdir="):
            continue
        out.append(tok)
    return out


# --- commands --------------------------------------------------------------------------------


def cmd_synth(args, run: Run) -> Path:
    try:
        if args.kind == "grouped":
            spec = GroupedBinarySpec(args.n_per_class, args.p or 30, args.block, args.rho, args.mean, args.seed)
            ds = gen_grouped_binary(spec)
            test_ds = gen_grouped_binary(GroupedBinarySpec(args.n_per_class, args.p or 30, args.block, args.rho,
                                                           args.mean, derived_test_seed(args.seed))) if args.test else None
        else:
            spec = FourClassSpec(args.n, args.p or 100, args.d, args.seed)
            ds = gen_fourclass(spec)
            test_ds = gen_fourclass(FourClassSpec(args.n, args.p or 100, args.d, derived_test_seed(args.seed))) \
                if args.test else None
        if args.contaminate < 0:
            raise ValueError("--contaminate must be >= 0")
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
    if args.contaminate:
        ds = contaminate(ds, args.contaminate, args.seed + 1)
        if test_ds is not None:
            test_ds = contaminate(test_ds, args.contaminate, derived_test_seed(args.seed) + 1)
    ext = ".csv" if args.out_format == "delimited" else ".svm"
    out = run.path(args.out or f"{args.kind}{ext}", "dataset")
    targets = [(out, ds)]
    if test_ds is not None:
        targets.append((run.path(out.stem + "_test" + out.suffix, "test_dataset"), test_ds))
    for path, data in targets:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if args.out_format == "delimited":
                save_delimited(data, path)
            else:
                save_sparse_text(data, path)
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from None
    if ds.relevant is not None:
        run.results["relevant"] = _ranges(ds.relevant)
    run.results["shape"] = [ds.n, ds.p]
    return out


def _ranges(mask: np.ndarray) -> str:
    idx = np.flatnonzero(mask) + 1
    parts, start = [], None
    for i, j in enumerate(idx):
        if start is None:
            start = j
        if i + 1 == idx.size or idx[i + 1] != j + 1:
            parts.append(f"{start}-{j}" if j != start else f"{j}")
            start = None
    return ",".join(parts)


def _prepare_training(args, ds: Dataset):
    if args.standardize == "none":
        return ds, None
    Xs, mu, sc = standardize(ds.X, args.standardize)
    return ds.with_features(Xs), (mu, sc)


def cmd_train(args, run: Run) -> Path:
    ds = _load(args)
    params = _penalty_params(args)
    config = _config(args)
    mode = _multiclass(args, ds)
    if args.exact_lp and args.penalty != "l1":
        raise ArgumentError("--exact-lp applies to --penalty l1 only")
    try:
        spec = penalty_from_params(args.penalty, params)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
    train, scaling = _prepare_training(args, ds)
    if mode == L1MSVM:
        model = train_l1msvm(train, params["lambda"])
    elif mode == OVA:
        model = train_ova(train, spec, config, exact_lp=args.exact_lp)
    else:
        model = train_binary(train, spec, config, exact_lp=args.exact_lp)
    if scaling is not None:
        model = model.with_standardization(*scaling)

    mpath = run.path(args.model_out, "model")
    try:
        mpath.parent.mkdir(parents=True, exist_ok=True)
        save_model(model, mpath)
    except OSError as exc:
        raise OutputError(f"cannot write {mpath}: {exc}") from None

    counts = count_nonzero(model, ds.relevant)
    lines = [f"model {mpath.name}", f"penalty {spec.describe() if mode != L1MSVM else 'l1msvm(lambda=%r)' % params['lambda']}"]
    if isinstance(model, LinearModel) and model.report is not None:
        r = model.report
        lines += [f"solver {r.solver}", f"iterations {r.iterations}", f"objective {fmt(r.objective)}",
                  f"converged {int(r.converged)}"]
    elif isinstance(model.report, dict):
        lines += [f"solver {model.report['solver']}", f"iterations {model.report['iterations']}",
                  f"objective {fmt(model.report['objective'])}", "converged 1"]
    else:
        for c, bm in zip(model.classes, model.binary_models):
            r = bm.report
            lines += [f"class {int(c)} solver {r.solver} iterations {r.iterations} "
                      f"objective {fmt(r.objective)} converged {int(r.converged)}"]
    lines.append(f"nonzero {counts.total}")
    if counts.relevant is not None:
        lines += [f"nonzero_relevant {counts.relevant}", f"nonzero_nonrelevant {counts.nonrelevant}"]
    run.write(run.path(mpath.stem + ".report.txt", "report"), "\n".join(lines) + "\n")
    run.results.update({"nonzero": counts.total})

    if args.trace_out and isinstance(model, LinearModel) and model.report is not None:
        run.write(run.path(args.trace_out, "trace"), table_text(["iteration", "objective"], model.report.trace))
    if args.audit_grouping:
        if not isinstance(model, LinearModel):
            raise ArgumentError("--audit-grouping needs a binary elastic-net model")
        try:
            audit = grouping_audit(model if scaling is None else _unscaled(model), train,
                                   epsilon=args.epsilon, tolerance=args.tolerance)
        except AuditError as exc:
            raise ArgumentError(str(exc)) from None
        run.write(run.path(mpath.stem + ".audit.csv", "audit"), audit_table(audit))
        run.results.update({"audit_pairs": len(audit.records), "audit_failures": len(audit.failures())})
        if not audit.all_passed:
            run.warnings.append(f"grouping audit failed on {len(audit.failures())} pairs")
    return mpath


def _unscaled(model: LinearModel) -> LinearModel:
    return replace(model, means=None, scales=None)


def _grid_from_args(args, family: str, p: int) -> GridSpec:
    base = default_values(args.grid_min, args.grid_max, args.grid_num) if args.grid_num > 1 else [args.grid_min]
    path_vals = _floats(args.grid, "--grid") if args.grid else base
    if family == "elasticnet":
        l2 = _floats(args.lambda2_grid, "--lambda2-grid") if args.lambda2_grid else list(base)
        return GridSpec({"lambda1": path_vals, "lambda2": l2})
    if family == "ksupport":
        if args.k_grid:
            ks = _ints(args.k_grid, "--k-grid")
        else:
            ks = sorted({k for k in (1, 2, 5, 10, 20) if k <= p} | {p})
        return GridSpec({"lambda": path_vals, "k": ks})
    return GridSpec({"lambda": path_vals})


def cmd_cv(args, run: Run) -> Path:
    ds = _load(args)
    config = _config(args)
    family = args.penalty
    mode = _multiclass(args, ds)
    grid = _grid_from_args(args, family, ds.p)
    try:
        grid.validate(family, ds.p)
        if args.loo:
            spl = SplitSpec.loo()
        elif args.holdout is not None:
            spl = SplitSpec.holdout(args.holdout, seed=args.seed, stratified=not args.no_stratify)
        else:
            spl = SplitSpec.kfold(args.folds, seed=args.seed, stratified=not args.no_stratify)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
    if args.exact_lp and family != "l1":
        raise ArgumentError("--exact-lp applies to --penalty l1 only")
    std = None if args.standardize == "none" else args.standardize
    try:
        res = grid_search_cv(ds, family, grid, spl, config, exact_lp=args.exact_lp,
                             multiclass=None if mode is None or family == L1MSVM else mode,
                             standardize_mode=std, jobs=args.jobs)
    except ValueError as exc:
        if isinstance(exc, (TrainingError, DataFormatError)):
            raise
        raise ArgumentError(str(exc)) from None

    keys = list(GRID_KEYS[family])
    rows = [[r["point"]] + [r[k] for k in keys] + [r["fold"], r["n_train"], r["n_val"], r["accuracy"], r["status"],
                                                   r["reason"]] for r in res.table()]
    scores = run.path(f"{args.out}_scores.csv", "scores")
    run.write(scores, table_text(["point"] + keys + ["fold", "n_train", "n_val", "accuracy", "status", "reason"], rows))
    summary = [[gi] + [pt[k] for k in keys] + [res.mean_accuracy[gi]] for gi, pt in enumerate(res.points)]
    run.write(run.path(f"{args.out}_summary.csv", "summary"), table_text(["point"] + keys + ["mean_accuracy"], summary))
    best = run.path(f"{args.out}_best.txt", "best")
    lines = [f"family {family}", f"folds {res.n_folds}"] + [f"{k} {fmt(v)}" for k, v in res.best_params.items()]
    lines.append(f"mean_accuracy {fmt(res.best_accuracy)}")
    run.write(best, "\n".join(lines) + "\n")
    run.results.update({"best": res.best_params, "best_accuracy": res.best_accuracy, "folds": res.n_folds})
    return best


def cmd_path(args, run: Run) -> Path:
    ds = _load(args)
    if not ds.is_binary:
        raise DataFormatError("path needs binary labels")
    config = _config(args)
    family = args.penalty
    if args.exact_lp and family != "l1":
        raise ArgumentError("--exact-lp applies to --penalty l1 only")
    if args.grid:
        grid = _floats(args.grid, "--grid")
    else:
        grid = default_values(args.grid_min, args.grid_max, args.grid_num)[::-1]
    fixed = {}
    if family == "elasticnet":
        if args.lambda2 is None:
            raise ArgumentError("--penalty elasticnet path needs --lambda2")
        fixed["lambda2"] = args.lambda2
    if family == "ksupport":
        if args.k is None:
            raise ArgumentError("--penalty ksupport path needs --k")
        fixed["k"] = args.k
    if any(g <= 0 for g in grid):
        raise ArgumentError("grid values must be positive")
    train, _ = _prepare_training(args, ds)
    path = regularization_path(train, family, grid, config, fixed=fixed, exact_lp=args.exact_lp)
    if not path.sorted_input:
        run.warnings.append("grid was not in descending order; sorted descending")
    key = "lambda1" if family == "elasticnet" else "lambda"
    header = [key, "beta0"] + [f"beta{j + 1}" for j in range(ds.p)] + ["nonzero"]
    rows = [[r.value, r.beta0] + list(r.beta) + [r.nonzero] for r in path.rows]
    out = run.path(args.out, "path")
    run.write(out, table_text(header, rows))
    return out


def cmd_benchmark(args, run: Run) -> Path:
    config = _config(args)
    reps = args.reps if args.reps is not None else (10 if args.protocol == "table1" else 50)
    if reps < 1:
        raise ArgumentError("--reps must be >= 1")
    std = None if args.standardize == "none" else args.standardize
    if args.protocol == "table1":
        methods = tuple(args.methods.split(",")) if args.methods else TABLE1_METHODS
        if any(m not in TABLE1_METHODS for m in methods):
            raise ArgumentError(f"table1 methods must be among {','.join(TABLE1_METHODS)}")
        if args.grouped == bool(args.data):
            raise ArgumentError("table1 needs exactly one of --data or --grouped")
        if args.grouped:
            source = grouped_source(GroupedBinarySpec())
        else:
            ds = _load(args)
            if not ds.is_binary:
                raise DataFormatError("table1 needs binary labels (use --positive-label)")
            source = fixed_source(ds)
        folds = 10 if args.folds is None else args.folds
        try:
            opts = Table1Options(methods, args.contaminate, args.test_fraction, folds, std, args.exact_l1,
                                 args.grid_num, config)
        except ValueError as exc:
            raise ArgumentError(str(exc)) from None
        label = f"contaminate={args.contaminate}"
        settings = [(label, lambda s: table1_repetition(source, s, opts))]
    else:
        methods = tuple(args.methods.split(",")) if args.methods else TABLE2_METHODS
        if any(m not in TABLE2_METHODS for m in methods):
            raise ArgumentError(f"table2 methods must be among {','.join(TABLE2_METHODS)}")
        ds_list = _floats(args.d, "--d")
        try:
            for d in ds_list:
                FourClassSpec(args.n, args.p, d, 0)
                FourClassSpec(args.test_n, args.p, d, 0)
        except ValueError as exc:
            raise ArgumentError(str(exc)) from None
        opts = Table2Options(methods, args.n, args.p, args.test_n, args.folds or 0, args.grid_num, config)
        settings = [(f"d={d:g}", (lambda dd: lambda s: table2_repetition(dd, s, opts))(d)) for d in ds_list]
    cells = run_repetitions(settings, methods, reps, args.seed, jobs=args.jobs)
    out = run.path(args.out or f"{args.protocol}.csv", "table")
    run.write(out, table_text(*summary_rows(cells)))
    run.write(run.path(out.stem + "_reps" + out.suffix, "repetitions"), table_text(*repetition_rows(cells)))
    for cell in cells:
        for msg in cell.failures:
            run.warnings.append(f"{cell.setting} {cell.method} {msg}")
    return out


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "cv": cmd_cv, "path": cmd_path, "benchmark": cmd_benchmark}


def _rerun(args) -> int:
    try:
        with open(args.manifest_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        argv = list(doc["argv"])
        cwd = doc["cwd"]
        outdir = args.outdir or doc["outdir"]
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_DATA
    argv += ["--outdir", str(Path(outdir).resolve())]
    if args.jobs is not None:
        argv += ["--jobs", str(args.jobs)]
    here = os.getcwd()
    try:
        os.chdir(cwd)
        return main(argv)
    finally:
        os.chdir(here)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "rerun":
        return _rerun(args)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_ARGS
    run = Run(args, argv)
    try:
        primary = COMMANDS[args.command](args, run)
        run.manifest(primary)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (DataFormatError, TrainingError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, lpmod.LPError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # remaining validation failures come from the input data
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for w in run.warnings:
        logger.warning(w)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
