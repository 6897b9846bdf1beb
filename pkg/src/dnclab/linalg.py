"""Deterministic linear-algebra kernel for the convergence laboratory.

Everything downstream (layer recursions, bound evaluation, report tables)
rests on the primitives here, so two properties are enforced globally:

* **Determinism.**  Every reduction that produces a reported number uses
  left-to-right sequential summation over IEEE doubles (:func:`seq_sum`),
  never a BLAS reduction.  Results are bit-reproducible across runs, thread
  counts, and BLAS builds.
* **Exactness discipline.**  Induced matrix norms are computed exactly for
  p in {1, inf}, iteratively for p = 2 (power iteration on ``A^T A`` with a
  deterministic start vector), and are *refused* for any other exponent:
  general p only admits the interpolation upper bound
  ``|A|_1^(1/p) * |A|_inf^(1-1/p)``, which :func:`norm_upper_bound` returns
  labelled as a bound, never as a value.

The module also provides the two vector extensions used to compare networks
of different widths: plain zero padding, and eventually-constant sequences
(:class:`EventuallyConstSeq`) on which constant-padded banded Toeplitz
operators act.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PNorm",
    "ONE",
    "TWO",
    "INF",
    "seq_sum",
    "as_vector",
    "as_matrix",
    "matvec",
    "vector_norm",
    "induced_norm",
    "norm_upper_bound",
    "zero_pad_matrix",
    "zero_pad_vector",
    "extend_vector",
    "EventuallyConstSeq",
    "BandedToeplitz",
    "toeplitz_from_mask",
    "constant_padded_toeplitz",
    "toeplitz_norms",
    "apply_banded",
]


# ---------------------------------------------------------------------------
# deterministic reductions and validated containers
# ---------------------------------------------------------------------------


def seq_sum(values) -> float:
    """Sum ``values`` left to right in double precision.

    Built-in ``sum`` over a list of Python floats fixes both the order and
    the association of the additions, which is the point: the result cannot
    depend on SIMD lanes, BLAS blocking, or thread counts.
    """
    if isinstance(values, np.ndarray):
        values = values.tolist()
    return float(sum(values))


def as_vector(x, *, name: str = "vector") -> np.ndarray:
    """Validate and freeze a 1-d float64 array (length >= 1, finite entries)."""
    arr = np.array(x, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name}: expected a 1-d array, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name}: dimension must be at least 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    arr.flags.writeable = False
    return arr


def as_matrix(a, *, name: str = "matrix") -> np.ndarray:
    """Validate and freeze a 2-d float64 array (both dims >= 1, finite)."""
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-d array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: both dimensions must be at least 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    arr.flags.writeable = False
    return arr


def matvec(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Deterministic matrix-vector product (sequential row sums, no BLAS)."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.size:
        raise ValueError(f"matvec: incompatible shapes {a.shape} and {x.shape}")
    prods = a * x  # elementwise, no reduction
    return np.array([seq_sum(row) for row in prods], dtype=np.float64)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PNorm:
    """Selector for the l_p norm family, p in [1, inf].

    Exact induced matrix norms exist only for p in {1, 2, inf};
    ``exact_induced`` tells those apart from exponents that admit only the
    interpolation bound.
    """

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not p >= 1.0:  # also rejects NaN
            raise ValueError(f"p-norm exponent must satisfy p >= 1, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @property
    def exact_induced(self) -> bool:
        return self.p in (1.0, 2.0) or self.is_inf

    def __str__(self) -> str:
        return "inf" if self.is_inf else f"{self.p:g}"


ONE = PNorm(1.0)
TWO = PNorm(2.0)
INF = PNorm(math.inf)


def vector_norm(x, p: PNorm) -> float:
    """l_p norm of a vector, via sequential summation.

    Accepts the empty vector (norm 0) so that sequence heads of length zero
    need no special casing.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"vector_norm: expected 1-d input, got shape {arr.shape}")
    if arr.size == 0:
        return 0.0
    a = np.abs(arr)
    if p.is_inf:
        return float(np.max(a))
    if p.p == 1.0:
        return seq_sum(a)
    if p.p == 2.0:
        return math.sqrt(seq_sum(a * a))
    return seq_sum(a ** p.p) ** (1.0 / p.p)


_POWER_ITERATIONS = 200
_POWER_RTOL = 1.0e-12


def _rayleigh_iterate(gram: np.ndarray, v0: np.ndarray) -> float:
    """Power iteration on a PSD matrix from a fixed start; returns the
    Rayleigh-quotient estimate of the top eigenvalue (0.0 if the start is
    annihilated, in which case the caller moves to the next start)."""
    nv = vector_norm(v0, TWO)
    v = v0 / nv
    lam = 0.0
    lam_prev = -1.0
    for _ in range(_POWER_ITERATIONS):
        w = matvec(gram, v)
        lam = seq_sum(v * w)
        nw = vector_norm(w, TWO)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if lam_prev >= 0.0 and abs(lam - lam_prev) <= _POWER_RTOL * abs(lam):
            break
        lam_prev = lam
    return max(lam, 0.0)


def _spectral_norm(m: np.ndarray) -> float:
    """Largest singular value via power iteration on the Gram matrix A^T A.

    The Gram entries are exact sequential dot products, the start vector is
    all ones, and if that start happens to lie in the null space the
    iteration restarts from a deterministic ramp and then from coordinate
    vectors — so the routine is fully deterministic and terminates with a
    positive estimate whenever A != 0.
    """
    cols = m.shape[1]
    gram = np.empty((cols, cols), dtype=np.float64)
    for i in range(cols):
        ci = m[:, i]
        for j in range(i, cols):
            v = seq_sum(ci * m[:, j])
            gram[i, j] = v
            gram[j, i] = v
    if not gram.any():
        return 0.0
    starts = [np.ones(cols), 1.0 + np.arange(cols) / (cols + 1.0)]
    starts.extend(np.eye(cols)[k] for k in range(cols))
    for v0 in starts:
        lam = _rayleigh_iterate(gram, v0)
        if lam > 0.0:
            return math.sqrt(lam)
    return 0.0


def induced_norm(a, p: PNorm) -> float:
    """Induced (operator) norm of a matrix on l_p.

    p = 1 is the maximum absolute column sum, p = inf the maximum absolute
    row sum (both exact); p = 2 is the largest singular value by power
    iteration on ``A^T A`` (deterministic all-ones start with fallback
    restarts, at most 200 rounds or a relative Rayleigh change below 1e-12).
    Any other exponent has no closed form and is refused — use
    :func:`norm_upper_bound` for the interpolation estimate.
    """
    m = as_matrix(a, name="induced_norm operand")
    if p.p == 1.0:
        return max(seq_sum(np.abs(m[:, j])) for j in range(m.shape[1]))
    if p.is_inf:
        return max(seq_sum(np.abs(m[i, :])) for i in range(m.shape[0]))
    if p.p == 2.0:
        return _spectral_norm(m)
    raise ValueError(
        "induced_norm: exact induced norms exist only for p in {1, 2, inf}; "
        f"got p = {p}. Use norm_upper_bound for an interpolation upper bound."
    )


def norm_upper_bound(a, p: PNorm) -> float:
    """Interpolation upper bound |A|_1^(1/p) * |A|_inf^(1-1/p), 1 < p < inf.

    This bounds the induced l_p norm for every intermediate exponent
    (Riesz-Thorin between the two exact endpoints); at p = 2 it reduces to
    the familiar sqrt(|A|_1 |A|_inf) >= largest singular value.
    """
    if p.p <= 1.0 or p.is_inf:
        raise ValueError(
            "norm_upper_bound covers 1 < p < inf only; "
            "induced_norm is exact at p in {1, inf}"
        )
    n1 = induced_norm(a, ONE)
    ninf = induced_norm(a, INF)
    t = 1.0 / p.p
    return (n1**t) * (ninf ** (1.0 - t))


# ---------------------------------------------------------------------------
# zero padding
# ---------------------------------------------------------------------------


def zero_pad_matrix(w, size: int, *, keep_cols: bool = False) -> np.ndarray:
    """Embed ``w`` in the top-left corner of a larger zero matrix.

    By default the result is ``size`` x ``size`` (the fixed-width embedding
    of a layer matrix).  With ``keep_cols=True`` only rows are padded — the
    first-layer form, where the input dimension is left alone.  Padding
    never changes induced p-norms; the test suite checks this directly.
    """
    m = as_matrix(w, name="zero_pad_matrix operand")
    rows, cols = m.shape
    if size < rows or (not keep_cols and size < cols):
        raise ValueError(
            f"zero_pad_matrix: target size {size} smaller than source {rows}x{cols}"
        )
    out = np.zeros((size, cols if keep_cols else size), dtype=np.float64)
    out[:rows, :cols] = m
    out.flags.writeable = False
    return out


def zero_pad_vector(v, size: int) -> np.ndarray:
    """Extend a vector to ``size`` entries with zeros."""
    return extend_vector(v, size, 0.0)


def extend_vector(v, size: int, fill: float = 0.0) -> np.ndarray:
    """Extend ``v`` to ``size`` entries, writing ``fill`` in the new slots.

    Zero fill is the padding used for weights and biases; a sigma(0) fill
    appears when states of different widths are compared through their
    extension, whose padded coordinates carry sigma(0) rather than 0.
    """
    arr = as_vector(v, name="extend_vector operand")
    if size < arr.size:
        raise ValueError(f"extend_vector: target size {size} smaller than {arr.size}")
    out = np.full(size, float(fill), dtype=np.float64)
    out[: arr.size] = arr
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# eventually-constant sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventuallyConstSeq:
    """A real sequence with finitely many free entries followed by a constant.

    ``value_at(i)`` is ``head[i]`` for ``i < len(head)`` and ``tail``
    afterwards.  These are the states of constant-padded convolutional
    recursions: the l_inf norm is ``max(|head|_inf, |tail|)``, and the
    sequence lies in l_p for finite p exactly when the tail is zero.
    """

    head: np.ndarray
    tail: float

    def __post_init__(self):
        arr = np.array(self.head, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError(f"sequence head must be 1-d, got shape {arr.shape}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("sequence head entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "head", arr)
        t = float(self.tail)
        if not math.isfinite(t):
            raise ValueError("sequence tail must be finite")
        object.__setattr__(self, "tail", t)

    @property
    def head_len(self) -> int:
        return int(self.head.size)

    def value_at(self, i: int) -> float:
        if i < 0:
            raise IndexError("sequence index must be >= 0")
        return float(self.head[i]) if i < self.head.size else self.tail

    def truncated(self, count: int) -> np.ndarray:
        """First ``count`` entries as a dense vector."""
        if count < 0:
            raise ValueError("truncated: count must be >= 0")
        out = np.full(count, self.tail, dtype=np.float64)
        k = min(count, self.head.size)
        out[:k] = self.head[:k]
        return out

    def in_lp(self, p: PNorm) -> bool:
        return p.is_inf or self.tail == 0.0

    def norm(self, p: PNorm) -> float:
        """l_p(N) norm; +inf for finite p when the tail is nonzero."""
        if p.is_inf:
            head_part = float(np.max(np.abs(self.head))) if self.head.size else 0.0
            return max(head_part, abs(self.tail))
        if self.tail != 0.0:
            return math.inf
        return vector_norm(self.head, p)

    def _combine(self, other: "EventuallyConstSeq", sign: float) -> "EventuallyConstSeq":
        n = max(self.head_len, other.head_len)
        return EventuallyConstSeq(
            self.truncated(n) + sign * other.truncated(n),
            self.tail + sign * other.tail,
        )

    def __add__(self, other: "EventuallyConstSeq") -> "EventuallyConstSeq":
        return self._combine(other, 1.0)

    def __sub__(self, other: "EventuallyConstSeq") -> "EventuallyConstSeq":
        return self._combine(other, -1.0)


# ---------------------------------------------------------------------------
# banded Toeplitz operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandedToeplitz:
    """Lower banded Toeplitz operator ``T[i, j] = mask[i - j]``, 0 <= i-j <= tau.

    With ``in_cols`` set this is the finite convolution matrix of a
    length-(tau+1) mask: ``in_cols + tau`` rows, so applying it lengthens a
    vector by tau (full zero-padded convolution).  With ``in_cols=None`` it
    is the constant-padded semi-infinite form acting on eventually-constant
    sequences; its induced l_1 and l_inf norms both equal the absolute mask
    sum, which also bounds every intermediate p.
    """

    mask: np.ndarray
    in_cols: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mask", as_vector(self.mask, name="Toeplitz mask"))
        if self.in_cols is not None:
            c = int(self.in_cols)
            if c < 1:
                raise ValueError(f"in_cols must be >= 1, got {self.in_cols}")
            object.__setattr__(self, "in_cols", c)

    @property
    def tau(self) -> int:
        return int(self.mask.size - 1)

    @property
    def semi_infinite(self) -> bool:
        return self.in_cols is None

    @property
    def out_rows(self) -> int:
        if self.in_cols is None:
            raise ValueError("semi-infinite operator has no finite row count")
        return self.in_cols + self.tau

    def dense_truncation(self, rows: int, cols: int) -> np.ndarray:
        """Top-left ``rows`` x ``cols`` window of the (possibly infinite) matrix."""
        if rows < 1 or cols < 1:
            raise ValueError("dense_truncation: window dims must be >= 1")
        t = np.zeros((rows, cols), dtype=np.float64)
        for i in range(rows):
            for j in range(max(0, i - self.tau), min(i, cols - 1) + 1):
                t[i, j] = self.mask[i - j]
        t.flags.writeable = False
        return t

    def to_dense(self) -> np.ndarray:
        if self.in_cols is None:
            raise ValueError(
                "to_dense applies to the finite form; use dense_truncation "
                "for a window of the semi-infinite operator"
            )
        return self.dense_truncation(self.out_rows, self.in_cols)


def toeplitz_from_mask(mask, in_cols: int) -> BandedToeplitz:
    """Finite convolution matrix of ``mask`` acting on vectors of length in_cols."""
    return BandedToeplitz(mask, int(in_cols))


def constant_padded_toeplitz(mask) -> BandedToeplitz:
    """Semi-infinite constant-padded form: the mask repeats along every diagonal."""
    return BandedToeplitz(mask, None)


def toeplitz_norms(t: BandedToeplitz, p: PNorm) -> float:
    """Induced norm of the semi-infinite constant-padded operator.

    Equals sum_k |mask[k]| exactly for p in {1, inf}; for intermediate p the
    same number is returned as an upper bound (interpolating the two exact
    endpoints).  Finite forms are ordinary matrices and are refused here —
    take ``induced_norm(t.to_dense(), p)`` instead.
    """
    if not t.semi_infinite:
        raise ValueError(
            "toeplitz_norms handles the semi-infinite form; for the finite "
            "matrix use induced_norm(t.to_dense(), p)"
        )
    return seq_sum(np.abs(t.mask))


def apply_banded(t: BandedToeplitz, x: EventuallyConstSeq) -> EventuallyConstSeq:
    """Apply the semi-infinite constant-padded operator to a sequence.

    The head grows by tau entries; every row past the new head sees only the
    constant tail, so the output tail is ``sum(mask) * x.tail``.  Row sums
    run in column order, matching the sequential-summation convention.
    """
    if not t.semi_infinite:
        raise ValueError("apply_banded requires the semi-infinite operator form")
    mask = t.mask
    tau = t.tau
    out_len = x.head_len + tau
    out = np.empty(out_len, dtype=np.float64)
    for i in range(out_len):
        lo = max(0, i - tau)
        out[i] = seq_sum([mask[i - j] * x.value_at(j) for j in range(lo, i + 1)])
    tail = seq_sum(mask) * x.tail
    return EventuallyConstSeq(out, tail)
