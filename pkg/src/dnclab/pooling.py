"""Sliding-window pooling operators (stride 1) and their Lipschitz constants.

A pooling operator with window parameter mu maps dimension d to d - mu by
scanning windows of mu + 1 consecutive entries:

* ``average`` — the window mean.  A convex combination, hence non-expansive
  for every p (its matrix has unit row sums and column sums <= 1).
* ``max`` — the window maximum, with Lipschitz constant (mu + 1)^(1/p):
  per window |max a - max b| <= max|a - b|, and each coordinate of the
  input feeds at most mu + 1 windows, which is where the factor comes from.
  At p = inf the constant is 1.
* ``identity`` — mu = 0, the do-nothing operator (plain recursions).

Window sums use ``np.convolve`` and window maxima use
``sliding_window_view`` + rowwise max: single-threaded C loops with a fixed
accumulation order, so pooled evaluations are deterministic across runs and
thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .linalg import PNorm

__all__ = [
    "PoolingOp",
    "no_pooling",
    "average_pooling",
    "max_pooling",
    "pool_lipschitz",
]

_KINDS = ("identity", "average", "max")


@dataclass(frozen=True)
class PoolingOp:
    kind: str
    mu: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown pooling kind {self.kind!r}; known: {_KINDS}")
        mu = int(self.mu)
        object.__setattr__(self, "mu", mu)
        if self.kind == "identity" and mu != 0:
            raise ValueError("identity pooling requires mu = 0")
        if self.kind != "identity" and mu < 1:
            raise ValueError(f"{self.kind} pooling requires mu >= 1, got {mu}")

    @property
    def window(self) -> int:
        return self.mu + 1

    def out_dim(self, in_dim: int) -> int:
        if self.kind != "identity" and in_dim < self.window:
            raise ValueError(
                f"{self.kind} pooling with mu={self.mu} needs input dim >= "
                f"{self.window}, got {in_dim}"
            )
        return in_dim - self.mu

    def lipschitz(self, p: PNorm) -> float:
        """Operator Lipschitz constant on l_p: 1 except max pooling's
        (mu+1)^(1/p), which degrades to 1 at p = inf."""
        if self.kind != "max" or p.is_inf:
            return 1.0
        return float(self.window) ** (1.0 / p.p)

    def pool(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"pool: expected a 1-d vector, got shape {arr.shape}")
        self.out_dim(arr.size)  # validates the window fits
        if self.kind == "identity":
            return np.array(arr)
        if self.kind == "average":
            return np.convolve(arr, np.ones(self.window), mode="valid") / self.window
        return sliding_window_view(arr, self.window).max(axis=1)


def no_pooling() -> PoolingOp:
    return PoolingOp("identity", 0)


def average_pooling(mu: int) -> PoolingOp:
    return PoolingOp("average", mu)


def max_pooling(mu: int) -> PoolingOp:
    return PoolingOp("max", mu)


def pool_lipschitz(op: PoolingOp, p: PNorm) -> float:
    return op.lipschitz(p)
