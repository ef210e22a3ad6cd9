"""Dense tableau simplex and the linear programs behind the L1 SVMs.

The binary L1 SVM

    min  sum_i xi_i + lam * ||beta||_1
    s.t. y_i (beta0 + x_i' beta) >= 1 - xi_i,  xi >= 0

and the all-in-one multi-class L1 SVM (one margin row per pair (i, c != y_i),
sum-to-zero rows over classes) are compiled into :class:`StandardFormLP`
with every free quantity split into nonnegative positive/negative parts.

Two pivoting paths share one tableau:

* primal two-phase simplex with Bland's rule, for arbitrary LPs;
* dual simplex from the all-slack basis, used whenever every cost is
  nonnegative (true of both SVM programs). Rows are priced by dual steepest
  edge; after a run of degenerate pivots it switches to the dual form of
  Bland's rule, which cannot cycle.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg.blas import dger

from .dataset import Dataset

logger = logging.getLogger(__name__)

LE = "<="
EQ = "="

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
# consecutive degenerate pivots before switching to Bland's rule
STALL_LIMIT = 50


class LPError(Exception):
    """Base class for LP construction and solution errors."""


class SimplexIterationError(LPError):
    """Raised when the pivot budget is exhausted; carries the basis reached."""

    def __init__(self, message: str, basis: Sequence[int], phase: str, iterations: int):
        super().__init__(f"{message} (phase {phase}, basis head {list(basis)[:10]})")
        self.basis = tuple(int(b) for b in basis)
        self.phase = phase
        self.iterations = iterations


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class StandardFormLP:
    """``min c'z  s.t.  A z (<= | =) b,  z >= 0``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: tuple[str, ...]
    var_names: Optional[list[str]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = np.zeros((self.b.size, self.c.size))
        self.A = np.atleast_2d(A)
        self.senses = tuple(self.senses)
        m, n = self.A.shape
        if self.c.shape != (n,):
            raise LPError(f"cost vector has length {self.c.size}, A has {n} columns")
        if self.b.shape != (m,) or len(self.senses) != m:
            raise LPError(f"A has {m} rows but b/senses have {self.b.size}/{len(self.senses)}")
        bad = set(self.senses) - {LE, EQ}
        if bad:
            raise LPError(f"unknown row senses {sorted(bad)}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise LPError("LP data must be finite")
        if self.var_names is not None and len(self.var_names) != n:
            raise LPError("var_names length does not match the column count")

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def dump(self, max_terms: int = 12) -> str:
        """Human-readable listing of the objective and rows (debug aid)."""
        names = self.var_names or [f"z{j}" for j in range(self.n_vars)]

        def render(coefs):
            nz = np.flatnonzero(coefs)
            parts = [f"{coefs[j]:+.6g}*{names[j]}" for j in nz[:max_terms]]
            if nz.size > max_terms:
                parts.append(f"... ({nz.size - max_terms} more)")
            return " ".join(parts) if parts else "0"

        lines = [f"min {render(self.c)}"]
        for i in range(self.n_rows):
            lines.append(f"r{i}: {render(self.A[i])} {self.senses[i]} {self.b[i]:.17g}")
        lines.append(f"{self.n_vars} variables >= 0, {self.n_rows} rows")
        return "\n".join(lines)


@dataclass
class LPSolution:
    status: LPStatus
    x: Optional[np.ndarray]
    objective: float
    iterations: int
    basis: tuple[int, ...] = ()
    method: str = ""
    # row slacks b - A z of the originating LP, when optimal
    slacks: Optional[np.ndarray] = None


class _Tableau:
    """Dense tableau ``B^-1 [M | rhs]`` with a reduced-cost row.

    ``T`` is C-contiguous; the rank-one elimination goes through BLAS ``dger``
    on its transposed (Fortran-ordered) view so the update happens in place.
    """

    def __init__(self, T: np.ndarray, rhs: np.ndarray, basis: list[int]):
        self.T = np.ascontiguousarray(T)
        self.rhs = rhs
        self.basis = basis
        self.d = np.zeros(T.shape[1])

    def price(self, cost: np.ndarray) -> None:
        self.d = cost - cost[self.basis] @ self.T

    def pivot(self, r: int, q: int) -> None:
        T, rhs = self.T, self.rhs
        piv = T[r, q]
        T[r] /= piv
        rhs[r] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        prow = T[r].copy()
        dger(-1.0, prow, col, a=T.T, overwrite_a=1)
        rhs -= col * rhs[r]
        T[:, q] = 0.0
        T[r, q] = 1.0
        self.d -= self.d[q] * prow
        self.d[q] = 0.0
        self.basis[r] = q

    def primal_run(self, eligible: np.ndarray, budget: int, phase: str) -> tuple[str, int]:
        """Bland's rule: lowest-index improving column, lowest-index basic on ties."""
        T, rhs = self.T, self.rhs
        it = 0
        while True:
            cand = np.flatnonzero((self.d < -PIVOT_TOL) & eligible)
            if cand.size == 0:
                return "optimal", it
            if it >= budget:
                raise SimplexIterationError(f"simplex exceeded {budget} pivots", self.basis, phase, it)
            q = int(cand[0])
            col = T[:, q]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded", it
            ratios = rhs[rows] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, q)
            it += 1

    def dual_run(self, fixed: np.ndarray, n_struct: int, budget: int) -> tuple[str, int]:
        """Dual simplex; ``fixed`` marks columns with bounds [0, 0].

        The slack block ``T[:, n_struct:]`` is the current basis inverse, from
        which the dual steepest-edge weights are read exactly.
        """
        T, rhs = self.T, self.rhs
        ncols = T.shape[1]
        is_basic = np.zeros(ncols, dtype=bool)
        is_basic[self.basis] = True
        enterable = ~fixed
        it = 0
        stall = 0
        while True:
            basis_arr = np.asarray(self.basis, dtype=np.intp)
            tol = FEAS_TOL * (1.0 + np.abs(rhs))
            viol = np.where(rhs < -tol, -rhs, 0.0)
            over = fixed[basis_arr] & (rhs > tol)
            viol[over] = rhs[over]
            bad = np.flatnonzero(viol)
            if bad.size == 0:
                return "optimal", it
            if it >= budget:
                raise SimplexIterationError(f"dual simplex exceeded {budget} pivots", self.basis, "dual", it)
            if stall >= STALL_LIMIT:
                r = int(bad[np.argmin(basis_arr[bad])])
            else:
                Binv = T[bad, n_struct:]
                w = np.einsum("ij,ij->i", Binv, Binv)
                r = int(bad[np.argmax(viol[bad] ** 2 / w)])
            row = T[r]
            sign = 1.0 if rhs[r] > 0 else -1.0
            # leaving below 0 needs a negative entry; leaving above a fixed bound a positive one
            cand = np.flatnonzero((sign * row > PIVOT_TOL) & enterable & ~is_basic)
            if cand.size == 0:
                return "infeasible", it
            ratios = np.maximum(self.d[cand], 0.0) / np.abs(row[cand])
            best = ratios.min()
            q = int(cand[np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))[0]])
            stall = stall + 1 if best <= 1e-12 else 0
            is_basic[self.basis[r]] = False
            is_basic[q] = True
            self.pivot(r, q)
            it += 1


def _equality_form(lp: StandardFormLP) -> np.ndarray:
    """``[A | S]`` with a slack column for every row; equality slacks are fixed at 0."""
    m, n = lp.A.shape
    M = np.zeros((m, n + m))
    M[:, :n] = lp.A
    M[np.arange(m), n + np.arange(m)] = 1.0
    return M


def simplex_solve(lp: StandardFormLP, max_iter: Optional[int] = None, method: str = "auto") -> LPSolution:
    """Solve ``lp`` by dense tableau simplex.

    ``method`` is ``"primal"`` (two-phase, Bland's rule), ``"dual"`` (requires
    ``c >= 0``) or ``"auto"``, which picks the dual path when it applies.
    Raises :class:`SimplexIterationError` after ``max_iter`` pivots
    (default ``50 * (rows + cols)``).
    """
    if method not in ("auto", "primal", "dual"):
        raise ValueError(f"unknown simplex method {method!r}")
    dual_ok = bool(np.all(lp.c >= 0))
    if method == "dual" and not dual_ok:
        raise LPError("dual simplex start needs nonnegative costs")
    use_dual = dual_ok if method == "auto" else method == "dual"

    m, n = lp.A.shape
    budget = max_iter if max_iter is not None else 50 * (m + n)
    M = _equality_form(lp)
    fixed = np.zeros(n + m, dtype=bool)
    fixed[n:] = np.array([s == EQ for s in lp.senses], dtype=bool)
    cost = np.concatenate([lp.c, np.zeros(m)])

    if use_dual:
        tab = _Tableau(M.copy(), lp.b.copy(), list(range(n, n + m)))
        tab.price(cost)
        status, iterations = tab.dual_run(fixed, n, budget)
        if status == "infeasible":
            return LPSolution(LPStatus.INFEASIBLE, None, float("nan"), iterations, tuple(tab.basis), "dual")
        return _finish(lp, M, tab, iterations, "dual")

    # primal phase one: artificials on every row whose slack cannot start basic
    rhs = lp.b.copy()
    T = M.copy()
    neg = rhs < 0
    T[neg] *= -1.0
    rhs[neg] *= -1.0
    basis = [-1] * m
    for i in range(m):
        if not neg[i] and not fixed[n + i]:
            basis[i] = n + i
    need = [i for i in range(m) if basis[i] < 0]
    ncols = n + m
    T = np.hstack([T, np.zeros((m, len(need)))])
    for a, i in enumerate(need):
        T[i, ncols + a] = 1.0
        basis[i] = ncols + a
    tab = _Tableau(T, rhs, basis)
    iterations = 0
    if need:
        art_cost = np.zeros(T.shape[1])
        art_cost[ncols:] = 1.0
        tab.price(art_cost)
        eligible = np.concatenate([~fixed, np.zeros(len(need), dtype=bool)])
        _, it = tab.primal_run(eligible, budget, "primal-1")
        iterations += it
        infeas = float(art_cost[tab.basis] @ tab.rhs)
        if infeas > FEAS_TOL * max(1.0, float(np.abs(lp.b).max(initial=0.0))) * 10:
            return LPSolution(LPStatus.INFEASIBLE, None, float("nan"), iterations, tuple(tab.basis), "primal")
        _drive_out_artificials(tab, ncols, fixed)
    tab.T = np.ascontiguousarray(tab.T[:, :ncols])
    tab.price(cost)
    # fixed (equality) slacks never enter
    status, it = tab.primal_run(~fixed, budget - iterations, "primal-2")
    iterations += it
    if status == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED, None, float("-inf"), iterations, tuple(tab.basis), "primal")
    return _finish(lp, M, tab, iterations, "primal")


def _drive_out_artificials(tab: _Tableau, ncols: int, fixed: np.ndarray) -> None:
    keep = []
    for r in range(len(tab.basis)):
        if tab.basis[r] < ncols:
            keep.append(r)
            continue
        row = tab.T[r, :ncols]
        nz = np.flatnonzero((np.abs(row) > PIVOT_TOL) & ~fixed)
        if nz.size == 0:
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
        if nz.size:
            tab.pivot(r, int(nz[0]))
            keep.append(r)
        # otherwise the row is redundant and is dropped
    tab.T = tab.T[keep]
    tab.rhs = tab.rhs[keep]
    tab.basis = [tab.basis[r] for r in keep]


def _finish(lp: StandardFormLP, M: np.ndarray, tab: _Tableau, iterations: int, method: str) -> LPSolution:
    m, n = lp.A.shape
    z = np.zeros(n + m)
    B = M[:, tab.basis]
    zb = tab.rhs
    try:
        # re-solve against the original data to shed accumulated pivot error
        sol, *_ = np.linalg.lstsq(B, lp.b, rcond=None)
        if np.all(sol > -1e-9) and np.abs(B @ sol - lp.b).max(initial=0.0) <= 1e-10 * (1 + np.abs(lp.b).max(initial=0.0)):
            zb = sol
    except np.linalg.LinAlgError:
        pass
    z[tab.basis] = zb
    z[np.abs(z) < 1e-13] = 0.0
    z = np.maximum(z, 0.0)
    x = z[:n]
    return LPSolution(LPStatus.OPTIMAL, x, float(lp.c @ x), iterations, tuple(tab.basis), method, lp.b - lp.A @ x)


# --- SVM compilers -------------------------------------------------------------
# --- SVM compilers -------------------------------------------------------------


@dataclass(frozen=True)
class BinaryLayout:
    """Column layout of :func:`binary_l1_svm_to_lp`."""

    n: int
    p: int

    @property
    def xi(self) -> slice:
        return slice(0, self.n)

    @property
    def b0_pos(self) -> int:
        return self.n

    @property
    def b0_neg(self) -> int:
        return self.n + 1

    @property
    def beta_pos(self) -> slice:
        return slice(self.n + 2, self.n + 2 + self.p)

    @property
    def beta_neg(self) -> slice:
        return slice(self.n + 2 + self.p, self.n + 2 + 2 * self.p)

    @property
    def n_vars(self) -> int:
        return self.n + 2 + 2 * self.p


def binary_l1_svm_to_lp(dataset: Dataset, lam: float) -> StandardFormLP:
    """LP whose optimum is the binary L1-penalized hinge objective.

    Columns: ``xi_1..xi_n, b0+, b0-, beta+_1..p, beta-_1..p`` (see
    :class:`BinaryLayout`). Row i reads
    ``-y_i (b0+ - b0- + x_i'(beta+ - beta-)) - xi_i <= -1``.
    """
    if dataset.n == 0:
        raise LPError("empty dataset")
    if lam < 0:
        raise LPError("lambda must be nonnegative")
    if not dataset.is_binary:
        raise LPError("binary L1 SVM needs labels in {-1, +1}")
    X, y = dataset.X, dataset.y.astype(float)
    lay = BinaryLayout(dataset.n, dataset.p)
    n, p = lay.n, lay.p
    c = np.zeros(lay.n_vars)
    c[lay.xi] = 1.0
    c[lay.beta_pos] = lam
    c[lay.beta_neg] = lam
    A = np.zeros((n, lay.n_vars))
    A[np.arange(n), np.arange(n)] = -1.0
    A[:, lay.b0_pos] = -y
    A[:, lay.b0_neg] = y
    yX = y[:, None] * X
    A[:, lay.beta_pos] = -yX
    A[:, lay.beta_neg] = yX
    names = (
        [f"xi{i}" for i in range(n)]
        + ["b0+", "b0-"]
        + [f"b{j}+" for j in range(p)]
        + [f"b{j}-" for j in range(p)]
    )
    return StandardFormLP(c, A, -np.ones(n), (LE,) * n, names)


def extract_binary_model(solution: LPSolution, n: int, p: int) -> tuple[float, np.ndarray]:
    if solution.status is not LPStatus.OPTIMAL:
        raise LPError(f"cannot extract coefficients from a {solution.status.value} LP")
    lay = BinaryLayout(n, p)
    z = solution.x
    beta0 = float(z[lay.b0_pos] - z[lay.b0_neg])
    beta = z[lay.beta_pos] - z[lay.beta_neg]
    return beta0, beta


@dataclass(frozen=True)
class MultiClassLayout:
    """Column layout of :func:`l1msvm_to_lp`.

    Coefficient block: for class c (0-based) and feature j (0 = intercept,
    1..p = features), ``beta+`` sits at ``c*(p+1) + j`` and ``beta-`` at
    ``k*(p+1) + c*(p+1) + j``; slacks follow.
    """

    n: int
    p: int
    k: int

    def pos(self, c: int, j: int) -> int:
        return c * (self.p + 1) + j

    def neg(self, c: int, j: int) -> int:
        return self.k * (self.p + 1) + c * (self.p + 1) + j

    @property
    def n_coef(self) -> int:
        return 2 * self.k * (self.p + 1)

    def xi(self, i: int) -> int:
        return self.n_coef + i

    @property
    def n_vars(self) -> int:
        return self.n_coef + self.n


def l1msvm_to_lp(dataset: Dataset, lam: float, num_classes: int) -> StandardFormLP:
    """Compile the all-in-one multi-class L1 SVM into standard form.

    Labels must be 1..k. One ``<=`` row per (i, c != y_i) encodes
    ``f_{y_i}(x_i) - f_c(x_i) >= 1 - xi_i``; ``p + 1`` equality rows force
    the intercepts and each coefficient to sum to zero over classes. The
    penalty is ``lam * sum(beta+ + beta-)`` over non-intercept coefficients.
    """
    k = int(num_classes)
    if k < 2:
        raise LPError("need at least two classes")
    if lam < 0:
        raise LPError("lambda must be nonnegative")
    y = dataset.y
    if dataset.n == 0:
        raise LPError("empty dataset")
    if y.min() < 1 or y.max() > k:
        raise LPError(f"labels must lie in 1..{k}")
    counts = np.bincount(y, minlength=k + 1)[1:]
    if np.any(counts == 0):
        missing = [c + 1 for c in np.flatnonzero(counts == 0)]
        raise LPError(f"classes {missing} have no training instances")

    n, p = dataset.n, dataset.p
    lay = MultiClassLayout(n, p, k)
    Xa = np.hstack([np.ones((n, 1)), dataset.X])  # column 0 is the intercept

    c = np.zeros(lay.n_vars)
    for cls in range(k):
        c[lay.pos(cls, 1): lay.pos(cls, p) + 1] = lam
        c[lay.neg(cls, 1): lay.neg(cls, p) + 1] = lam
    c[lay.n_coef:] = 1.0

    n_margin = n * (k - 1)
    A = np.zeros((n_margin + p + 1, lay.n_vars))
    b = np.zeros(n_margin + p + 1)
    senses = [LE] * n_margin + [EQ] * (p + 1)
    row = 0
    for i in range(n):
        yi = int(y[i]) - 1
        for cls in range(k):
            if cls == yi:
                continue
            # -(f_yi - f_c) - xi_i <= -1
            A[row, lay.pos(yi, 0): lay.pos(yi, p) + 1] = -Xa[i]
            A[row, lay.neg(yi, 0): lay.neg(yi, p) + 1] = Xa[i]
            A[row, lay.pos(cls, 0): lay.pos(cls, p) + 1] = Xa[i]
            A[row, lay.neg(cls, 0): lay.neg(cls, p) + 1] = -Xa[i]
            A[row, lay.xi(i)] = -1.0
            b[row] = -1.0
            row += 1
    for j in range(p + 1):
        for cls in range(k):
            A[row, lay.pos(cls, j)] = 1.0
            A[row, lay.neg(cls, j)] = -1.0
        row += 1

    names = [""] * lay.n_vars
    for cls in range(k):
        for j in range(p + 1):
            names[lay.pos(cls, j)] = f"b[{cls + 1},{j}]+"
            names[lay.neg(cls, j)] = f"b[{cls + 1},{j}]-"
    for i in range(n):
        names[lay.xi(i)] = f"xi{i}"
    return StandardFormLP(c, A, b, tuple(senses), names)


def extract_multiclass_coefficients(solution: LPSolution, n: int, p: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(intercepts (k,), coefficients (k, p))`` from an optimal LP."""
    if solution.status is not LPStatus.OPTIMAL:
        raise LPError(f"cannot extract coefficients from a {solution.status.value} LP")
    lay = MultiClassLayout(n, p, k)
    z = solution.x
    W = np.empty((k, p + 1))
    for cls in range(k):
        W[cls] = z[lay.pos(cls, 0): lay.pos(cls, p) + 1] - z[lay.neg(cls, 0): lay.neg(cls, p) + 1]
    return W[:, 0].copy(), W[:, 1:].copy()
