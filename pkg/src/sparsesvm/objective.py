"""Hinge losses, penalties, subgradients and proximal maps.

Penalty scalings follow the training objectives used throughout the
package:

* L2:          (lam / 2) ||beta||_2^2
* L1:          lam ||beta||_1
* elastic net: lam1 ||beta||_1 + (lam2 / 2) ||beta||_2^2
* k-support:   lam ||beta||_k^sp

The intercept is never penalized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

TIE_TOL = 1e-12


class Variant(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"
    ELASTIC_NET = "elasticnet"
    KSUPPORT = "ksupport"


class UnsupportedProxError(NotImplementedError):
    """No closed-form prox for this penalty; use the subgradient path."""


@dataclass(frozen=True)
class PenaltySpec:
    variant: Variant
    lam: float = 0.0
    lam1: float = 0.0
    lam2: float = 0.0
    k: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("lam", "lam1", "lam2"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite nonnegative number, got {v}")
            object.__setattr__(self, name, v)
        if self.variant is Variant.KSUPPORT:
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise ValueError(f"k-support penalty needs an integer k >= 1, got {self.k}")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            raise ValueError("k is only meaningful for the k-support penalty")

    @classmethod
    def l2(cls, lam: float) -> "PenaltySpec":
        return cls(Variant.L2, lam=lam)

    @classmethod
    def l1(cls, lam: float) -> "PenaltySpec":
        return cls(Variant.L1, lam=lam)

    @classmethod
    def elastic_net(cls, lam1: float, lam2: float) -> "PenaltySpec":
        return cls(Variant.ELASTIC_NET, lam1=lam1, lam2=lam2)

    @classmethod
    def ksupport(cls, lam: float, k: int) -> "PenaltySpec":
        return cls(Variant.KSUPPORT, lam=lam, k=k)

    def check_dimension(self, p: int) -> None:
        if self.variant is Variant.KSUPPORT and self.k > p:
            raise ValueError(f"k={self.k} exceeds the feature dimension {p}")

    def params(self) -> dict:
        """Hyperparameters as a flat mapping (used in tables and manifests)."""
        if self.variant is Variant.ELASTIC_NET:
            return {"lambda1": self.lam1, "lambda2": self.lam2}
        if self.variant is Variant.KSUPPORT:
            return {"lambda": self.lam, "k": self.k}
        return {"lambda": self.lam}

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.variant.value}({inner})"


# --- losses -----------------------------------------------------------------------


def hinge_loss(y, f):
    """``max(0, 1 - y f)``; works elementwise on arrays."""
    out = np.maximum(0.0, 1.0 - np.asarray(y, dtype=float) * np.asarray(f, dtype=float))
    return float(out) if out.ndim == 0 else out


def hinge_subgradient(y, x, beta0: float, beta) -> tuple[float, np.ndarray]:
    """A subgradient of ``max(0, 1 - y (beta0 + x'beta))`` in ``(beta0, beta)``.

    Zero when the margin is >= 1 (including the kink), ``(-y, -y x)`` otherwise.
    """
    x = np.asarray(x, dtype=float)
    margin = y * (beta0 + x @ np.asarray(beta, dtype=float))
    if margin >= 1.0:
        return 0.0, np.zeros_like(x)
    return -float(y), -float(y) * x


def multiclass_hinge(f, y: int) -> float:
    """``max(0, 1 - min_{c != y} (f_y - f_c))`` with 1-based class ``y``."""
    f = np.asarray(f, dtype=float)
    k = f.size
    if k < 2:
        raise ValueError("need at least two decision values")
    if not 1 <= y <= k:
        raise ValueError(f"class index {y} outside 1..{k}")
    others = np.delete(f, y - 1)
    return max(0.0, 1.0 - float(np.min(f[y - 1] - others)))


# --- k-support norm ---------------------------------------------------------------


def _ksupport_split(z: np.ndarray, k: int) -> int:
    """Active ``r`` for magnitudes ``z`` sorted in decreasing order.

    Scans r = 0..k-1 for ``z[k-r-2] > tail/(r+1) >= z[k-r-1]`` (0-based, with
    the element before the first taken as +inf) where ``tail`` sums
    ``z[k-r-1:]``. The ``>=`` is relaxed by a 1e-12 relative tolerance so
    that ties resolve to the first qualifying r.
    """
    d = z.size
    suffix = np.concatenate([np.cumsum(z[::-1])[::-1], [0.0]])
    scale = max(1.0, float(z[0])) if d else 1.0
    best_r, best_gap = 0, math.inf
    for r in range(k):
        avg = suffix[k - r - 1] / (r + 1)
        upper = math.inf if k - r - 2 < 0 else z[k - r - 2]
        lower = z[k - r - 1]
        if upper > avg and avg >= lower - TIE_TOL * scale:
            return r
        gap = max(0.0, avg - upper) + max(0.0, lower - avg)
        if gap < best_gap:
            best_r, best_gap = r, gap
    return best_r


def ksupport_r(beta, k: int) -> int:
    z = np.sort(np.abs(np.asarray(beta, dtype=float)))[::-1]
    _check_k(k, z.size)
    return _ksupport_split(z, k)


def _check_k(k: int, d: int) -> None:
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in 1..{d}, got {k}")


def ksupport_norm(beta, k: int) -> float:
    """k-support norm: sorted-magnitude closed form at the active split r."""
    z = np.sort(np.abs(np.asarray(beta, dtype=float)))[::-1]
    _check_k(k, z.size)
    if z[0] == 0.0:
        return 0.0
    r = _ksupport_split(z, k)
    # scale by the largest magnitude so tiny or huge inputs do not under/overflow
    zs = z / z[0]
    head = zs[: k - r - 1]
    tail = zs[k - r - 1:].sum()
    return float(z[0] * math.sqrt(head @ head + tail * tail / (r + 1)))


def ksupport_subgradient(beta, k: int) -> np.ndarray:
    """Gradient of the closed form at the active split (zero vector at 0)."""
    beta = np.asarray(beta, dtype=float)
    _check_k(k, beta.size)
    a = np.abs(beta)
    # stable sort keeps the ordering deterministic under ties
    order = np.argsort(-a, kind="stable")
    z = a[order]
    if z[0] == 0.0:
        return np.zeros_like(beta)
    r = _ksupport_split(z, k)
    h = k - r - 1
    zs = z / z[0]
    head = zs[:h]
    tail = zs[h:].sum()
    norm = math.sqrt(head @ head + tail * tail / (r + 1))
    g = np.empty_like(beta)
    g[order[:h]] = beta[order[:h]] / z[0] / norm
    g[order[h:]] = np.sign(beta[order[h:]]) * tail / ((r + 1) * norm)
    return g


# --- penalties ----------------------------------------------------------------------


def penalty_value(spec: PenaltySpec, beta) -> float:
    beta = np.asarray(beta, dtype=float)
    v = spec.variant
    if v is Variant.L2:
        return 0.5 * spec.lam * float(beta @ beta)
    if v is Variant.L1:
        return spec.lam * float(np.abs(beta).sum())
    if v is Variant.ELASTIC_NET:
        return spec.lam1 * float(np.abs(beta).sum()) + 0.5 * spec.lam2 * float(beta @ beta)
    return spec.lam * ksupport_norm(beta, spec.k)


def penalty_subgradient(spec: PenaltySpec, beta) -> np.ndarray:
    """Subgradient of :func:`penalty_value` (sign(0) = 0 for the L1 parts)."""
    beta = np.asarray(beta, dtype=float)
    v = spec.variant
    if v is Variant.L2:
        return spec.lam * beta
    if v is Variant.L1:
        return spec.lam * np.sign(beta)
    if v is Variant.ELASTIC_NET:
        return spec.lam1 * np.sign(beta) + spec.lam2 * beta
    return spec.lam * ksupport_subgradient(beta, spec.k)


def soft_threshold(v, t: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_map(spec: PenaltySpec, v, step: float) -> np.ndarray:
    """``argmin_u 0.5 ||u - v||^2 + step * penalty(u)``."""
    if not step > 0:
        raise ValueError("step must be positive")
    v = np.asarray(v, dtype=float)
    var = spec.variant
    if var is Variant.L2:
        return v / (1.0 + step * spec.lam)
    if var is Variant.L1:
        return soft_threshold(v, step * spec.lam)
    if var is Variant.ELASTIC_NET:
        return soft_threshold(v, step * spec.lam1) / (1.0 + step * spec.lam2)
    raise UnsupportedProxError("the k-support penalty has no closed-form prox here")
