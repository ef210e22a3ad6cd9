"""First-order solvers for penalized hinge-loss training.

Both solvers minimize ``sum_i hinge_i + penalty(beta)`` over an unpenalized
intercept ``beta0`` and coefficients ``beta`` and return the best iterate
seen, never simply the last one.

``prox_subgradient_solve``
    beta <- prox(beta - eta_t * g_t) with ``g_t`` the dataset-averaged hinge
    subgradient; the prox is taken for ``penalty / n`` so that the update
    descends on the averaged objective. L2, L1 and elastic net only. The
    default step schedule takes normalized steps of a fixed length and
    restarts from the best iterate every ``stage_length`` iterations,
    doubling or halving the length (see :func:`prox_subgradient_batch`).

``accelerated_subgradient_solve``
    Nesterov-style momentum on the full subgradient (hinge plus
    ``lam * ksupport_subgradient``), with step-weighted iterate averaging.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Dataset
from .objective import (
    PenaltySpec,
    Variant,
    ksupport_subgradient,
    penalty_subgradient,
    penalty_value,
    prox_map,
)

CONSTANT = "constant"
DIMINISHING = "diminishing"
RESTARTED = "restarted"
# restarted schedule: stop only once the step length has shrunk this far
STEP_FLOOR = 1e-4


class SolverError(RuntimeError):
    """Non-finite objective or otherwise failed run."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    tolerance: float = 1e-6
    # "restarted" applies to the proximal solver; the accelerated solver
    # treats it as "diminishing"
    step_schedule: str = RESTARTED
    # None: 1 / (largest row norm of X)
    step_scale: Optional[float] = None
    stage_length: int = 500
    # None: solver default (off for the prox solver, on for the accelerated one)
    averaging: Optional[bool] = None
    window: int = 500
    seed: int = 0
    trace_points: int = 200

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.step_schedule not in (CONSTANT, DIMINISHING, RESTARTED):
            raise ValueError(f"unknown step schedule {self.step_schedule!r}")
        if self.step_scale is not None and not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.stage_length < 1:
            raise ValueError("stage_length must be >= 1")


@dataclass
class SolveReport:
    iterations: int
    objective: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    solver: str = ""

    def as_dict(self) -> dict:
        return {
            "solver": self.solver,
            "iterations": self.iterations,
            "objective": self.objective,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "trace": [[t, v] for t, v in self.trace],
        }


@dataclass(frozen=True)
class BinaryObjective:
    """Hinge loss over ``dataset`` plus ``penalty``; the intercept is unpenalized."""

    dataset: Dataset
    penalty: PenaltySpec

    def __post_init__(self):
        if self.dataset.n == 0:
            raise ValueError("empty dataset")
        if not self.dataset.is_binary:
            raise ValueError("binary objective needs labels in {-1, +1}")
        self.penalty.check_dimension(self.dataset.p)

    def value(self, beta0: float, beta: np.ndarray) -> float:
        return objective_value(self.dataset, self.penalty, beta0, beta)


def objective_value(dataset: Dataset, penalty: PenaltySpec, beta0: float, beta) -> float:
    """``sum_i max(0, 1 - y_i (beta0 + x_i'beta)) + penalty(beta)``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dataset.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({dataset.p},)")
    f = beta0 + dataset.X @ beta
    loss = np.maximum(0.0, 1.0 - dataset.y * f).sum()
    return float(loss + penalty_value(penalty, beta))


def objective_subgradient(dataset: Dataset, penalty: PenaltySpec, beta0: float, beta) -> tuple[float, np.ndarray]:
    """Subgradient of :func:`objective_value` in ``(beta0, beta)``."""
    beta = np.asarray(beta, dtype=float)
    X, y = dataset.X, dataset.y
    active = y * (beta0 + X @ beta) < 1.0
    w = np.where(active, -y, 0.0).astype(float)
    return float(w.sum()), X.T @ w + penalty_subgradient(penalty, beta)


def _default_step(X: np.ndarray) -> float:
    rn = np.sqrt((X * X).sum(axis=1)).max(initial=0.0)
    return 1.0 / rn if rn > 0 else 1.0


class _Tracker:
    """Best-iterate bookkeeping, convergence window and a downsampled trace."""

    def __init__(self, config: SolverConfig, f0: float, b0: float, beta: np.ndarray):
        self.config = config
        self.best = f0
        self.best_b0 = b0
        self.best_beta = beta.copy()
        self.history = [f0]
        self.every = max(1, config.max_iterations // max(1, config.trace_points))
        self.trace = [(0, f0)]

    def offer(self, t: int, f: float, b0: float, beta: np.ndarray) -> None:
        if not math.isfinite(f):
            raise SolverError(f"objective became non-finite at iteration {t}", iteration=t)
        if f < self.best:
            self.best = f
            self.best_b0 = b0
            self.best_beta = beta.copy()

    def close_iteration(self, t: int) -> bool:
        self.history.append(self.best)
        if t % self.every == 0:
            self.trace.append((t, self.best))
        w = self.config.window
        if t < w:
            return False
        old = self.history[-1 - w]
        return (old - self.best) <= self.config.tolerance * max(1.0, abs(self.best))


def _steps(config: SolverConfig, c: float):
    if config.step_schedule == CONSTANT:
        return lambda t: c
    return lambda t: c / math.sqrt(t)


def prox_subgradient_solve(
    objective: BinaryObjective,
    config: SolverConfig = SolverConfig(),
    init: Optional[tuple[float, np.ndarray]] = None,
) -> tuple[float, np.ndarray, SolveReport]:
    """Proximal subgradient descent for L2, L1 and elastic-net penalties.

    ``init`` warm-starts from ``(beta0, beta)``; the default start is zero.
    """
    spec = objective.penalty
    if spec.variant is Variant.KSUPPORT:
        raise ValueError("k-support training goes through accelerated_subgradient_solve")
    start = time.perf_counter()
    ds = objective.dataset
    l1, l2 = prox_weights(spec)
    init_b = None if init is None else (np.array([float(init[0])]), np.asarray(init[1], dtype=float)[None, :])
    res = prox_subgradient_batch(ds.X, ds.y[None, :], [l1], [l2], config, init=init_b, trace=True)
    if res.failed[0]:
        raise SolverError(f"objective became non-finite at iteration {res.iterations[0]}", iteration=int(res.iterations[0]))
    b0, beta = float(res.beta0[0]), res.beta[0].copy()
    report = SolveReport(
        iterations=int(res.iterations[0]),
        objective=objective_value(ds, spec, b0, beta),
        trace=res.trace,
        converged=bool(res.converged[0]),
        wall_time=time.perf_counter() - start,
        solver="prox-subgradient",
    )
    return b0, beta, report


def prox_weights(spec: PenaltySpec) -> tuple[float, float]:
    """``(l1, l2)`` with penalty ``l1 ||b||_1 + (l2 / 2) ||b||^2``."""
    if spec.variant is Variant.L2:
        return 0.0, spec.lam
    if spec.variant is Variant.L1:
        return spec.lam, 0.0
    if spec.variant is Variant.ELASTIC_NET:
        return spec.lam1, spec.lam2
    raise ValueError(f"no proximal weights for {spec.variant.value}")


@dataclass
class BatchResult:
    beta0: np.ndarray
    beta: np.ndarray
    objective: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    failed: np.ndarray
    trace: list[tuple[int, float]] = field(default_factory=list)


def prox_subgradient_batch(
    X: np.ndarray,
    Y: np.ndarray,
    l1,
    l2,
    config: SolverConfig = SolverConfig(),
    init: Optional[tuple[np.ndarray, np.ndarray]] = None,
    trace: bool = False,
) -> BatchResult:
    """Run independent proximal subgradient problems that share ``X``.

    Problem ``b`` has labels ``Y[b]`` (entries in {-1, +1}) and penalty
    ``l1[b] ||beta||_1 + (l2[b] / 2) ||beta||^2``. Each problem follows
    exactly the single-problem iteration and stops tracking once its own
    convergence window closes, so results do not depend on the batch
    composition. ``trace`` records the best objective of problem 0.

    Under the ``restarted`` schedule each step moves a fixed distance
    ``ell`` along the normalized subgradient. Every ``stage_length``
    iterations the iterate restarts from the best point found; ``ell``
    doubles if that point lies farther than ``ell * stage_length / 2`` from
    the stage start and halves otherwise. ``ell`` starts at the step scale.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != X.shape[0]:
        raise ValueError(f"labels must have shape (B, {X.shape[0]}), got {Y.shape}")
    n, p = X.shape
    B = Y.shape[0]
    l1 = np.asarray(l1, dtype=float).reshape(B, 1)
    l2 = np.asarray(l2, dtype=float).reshape(B, 1)
    c = config.step_scale if config.step_scale is not None else _default_step(X)
    restarted = config.step_schedule == RESTARTED
    eta = None if restarted else _steps(config, c)
    averaging = bool(config.averaging) and not restarted
    tol, w = config.tolerance, config.window
    K = config.stage_length
    ell = np.full(B, c)

    if init is None:
        b0, beta = np.zeros(B), np.zeros((B, p))
    else:
        b0 = np.array(init[0], dtype=float).reshape(B)
        beta = np.array(init[1], dtype=float).reshape(B, p)

    XT = np.ascontiguousarray(X.T)
    l1v, l2v = l1[:, 0], 0.5 * l2[:, 0]

    def value(b0_, beta_):
        # returns the objective and the decision values it was computed from
        F = b0_[:, None] + beta_ @ XT
        loss = np.maximum(0.0, 1.0 - Y * F).sum(axis=1)
        return loss + l1v * np.abs(beta_).sum(axis=1) + l2v * (beta_ * beta_).sum(axis=1), F

    best, F = value(b0, beta)
    best_b0, best_beta = b0.copy(), beta.copy()
    history = [best.copy()]
    every = max(1, config.max_iterations // max(1, config.trace_points))
    tr = [(0, float(best[0]))] if trace else []
    live = np.ones(B, dtype=bool)
    converged = np.zeros(B, dtype=bool)
    failed = ~np.isfinite(best)
    live &= ~failed
    iterations = np.zeros(B, dtype=np.int64)
    avg_b0, avg_beta, wsum = np.zeros(B), np.zeros((B, p)), 0.0
    stage_b0, stage_beta = b0.copy(), beta.copy()

    def offer(f, cand_b0, cand_beta):
        if not np.isfinite(f).all():
            bad = live & ~np.isfinite(f)
            failed[bad] = True
            live[bad] = False
        better = live & (f < best)
        np.copyto(best, f, where=better)
        np.copyto(best_b0, cand_b0, where=better)
        np.copyto(best_beta, cand_beta, where=better[:, None])

    t = 0
    for t in range(1, config.max_iterations + 1):
        G = np.where(Y * F < 1.0, -Y, 0.0)
        g0 = G.sum(axis=1) / n
        g = (G @ X) / n
        if restarted:
            full = g + (l1 * np.sign(beta) + l2 * beta) / n
            gn = np.sqrt(g0 * g0 + (full * full).sum(axis=1))
            step = np.divide(ell, gn, out=np.zeros(B), where=gn > 0)
            b0 = b0 - step * g0
            V = beta - step[:, None] * g
            thr = (step / n)[:, None]
        else:
            step = eta(t)
            b0 = b0 - step * g0
            V = beta - step * g
            thr = step / n
        beta = np.sign(V) * np.maximum(np.abs(V) - thr * l1, 0.0) / (1.0 + thr * l2)
        f, F = value(b0, beta)
        offer(f, b0, beta)
        if averaging:
            wsum += step
            avg_b0 += step * (b0 - avg_b0) / wsum
            avg_beta += step * (beta - avg_beta) / wsum
            offer(value(avg_b0, avg_beta)[0], avg_b0, avg_beta)
        iterations[live] = t
        history.append(best.copy())
        if trace and t % every == 0:
            tr.append((t, float(best[0])))
        if t >= w:
            old = history[-1 - w]
            done = live & ((old - best) <= tol * np.maximum(1.0, np.abs(best)))
            if restarted:
                # a stalled stage may only mean the step length is too long
                done &= ell <= STEP_FLOOR * c
            if done.any():
                converged[done] = True
                live[done] = False
            history[-1 - w] = None
        if not live.any():
            break
        if restarted and t % K == 0:
            dist = np.sqrt((best_b0 - stage_b0) ** 2 + ((best_beta - stage_beta) ** 2).sum(axis=1))
            ell = np.where(dist > 0.5 * ell * K, 2.0 * ell, 0.5 * ell)
            b0, beta = best_b0.copy(), best_beta.copy()
            stage_b0, stage_beta = b0.copy(), beta.copy()
            F = b0[:, None] + beta @ XT

    if trace and tr[-1][0] != t:
        tr.append((t, float(best[0])))
    return BatchResult(best_b0, best_beta, best, iterations, converged, failed, tr)


def accelerated_subgradient_solve(
    dataset: Dataset,
    penalty: PenaltySpec,
    config: SolverConfig = SolverConfig(),
    init: Optional[tuple[float, np.ndarray]] = None,
) -> tuple[float, np.ndarray, SolveReport]:
    """Momentum subgradient method for the k-support penalty.

    Any penalty is accepted (its subgradient is used), which makes the solver
    usable as a cross-check for the proximal path.
    """
    objective = BinaryObjective(dataset, penalty)
    spec = objective.penalty
    start = time.perf_counter()
    X, y = dataset.X, dataset.y.astype(float)
    n = dataset.n
    c = config.step_scale if config.step_scale is not None else _default_step(X)
    eta = _steps(config, c)
    averaging = True if config.averaging is None else bool(config.averaging)

    b0, beta = (0.0, np.zeros(dataset.p)) if init is None else (float(init[0]), np.array(init[1], dtype=float))
    prev_b0, prev_beta = b0, beta.copy()
    tracker = _Tracker(config, objective_value(dataset, spec, b0, beta), b0, beta)
    avg_b0, avg_beta, wsum = 0.0, np.zeros(dataset.p), 0.0
    converged = False
    t = 0
    for t in range(1, config.max_iterations + 1):
        mom = (t - 1.0) / (t + 2.0)
        yb0 = b0 + mom * (b0 - prev_b0)
        ybeta = beta + mom * (beta - prev_beta)
        f = yb0 + X @ ybeta
        w = np.where(y * f < 1.0, -y, 0.0)
        g0 = w.sum() / n
        g = (X.T @ w) / n + _penalty_grad(spec, ybeta) / n
        step = eta(t)
        prev_b0, prev_beta = b0, beta
        b0 = yb0 - step * g0
        beta = ybeta - step * g
        tracker.offer(t, _value(X, y, spec, b0, beta), b0, beta)
        if averaging:
            wsum += step
            avg_b0 += step * (b0 - avg_b0) / wsum
            avg_beta += step * (beta - avg_beta) / wsum
            tracker.offer(t, _value(X, y, spec, avg_b0, avg_beta), avg_b0, avg_beta)
        if tracker.close_iteration(t):
            converged = True
            break

    return _finish(tracker, dataset, spec, t, converged, start, "accelerated-subgradient")


def _penalty_grad(spec: PenaltySpec, beta: np.ndarray) -> np.ndarray:
    if spec.variant is Variant.KSUPPORT:
        return spec.lam * ksupport_subgradient(beta, spec.k)
    return penalty_subgradient(spec, beta)


def _value(X, y, spec, b0, beta) -> float:
    loss = np.maximum(0.0, 1.0 - y * (b0 + X @ beta)).sum()
    return float(loss + penalty_value(spec, beta))


def _finish(tracker: _Tracker, ds: Dataset, spec: PenaltySpec, t: int, converged: bool, start: float, name: str):
    b0, beta = tracker.best_b0, tracker.best_beta
    final = objective_value(ds, spec, b0, beta)
    if not tracker.trace or tracker.trace[-1][0] != t:
        tracker.trace.append((t, tracker.best))
    report = SolveReport(
        iterations=t,
        objective=final,
        trace=tracker.trace,
        converged=converged,
        wall_time=time.perf_counter() - start,
        solver=name,
    )
    return b0, beta, report
