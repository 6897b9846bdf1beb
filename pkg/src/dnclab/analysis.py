"""Convergence conditions, theoretical bounds, and empirical probes.

This module turns the layer data into numbers on both sides of each
inequality the laboratory verifies:

* the **omega condition** lim L*P*|W_n| < 1 (:func:`check_condition`) and
  the three convolution-mask conditions (:func:`check_mask_conditions`),
  evaluated analytically when limits are declared and by labelled window
  scans otherwise;
* the **a-priori bound** on state norms (:func:`apriori_bound`);
* the three-term **deviation bound** on |N_{n+m}(x) - N_n(x)|
  (:func:`deviation_bound`), the workhorse inequality whose structure is

      L * sum_i  Lam^{i-1} * |b_{m+n-i} - b_{n-i}|
    + L*P * sum_i  Lam^{i-1} * |N_{n-1-i}(x)| * |W_{m+n-i} - W_{n-i}|
    + L*P * Lam^{n-2} * |W_{m+1} N_m(x) - W_1 x|

  with Lam^i = prod_{j=0..i} L*P*|W_{n+m-j}| and the empty product
  Lam^{-1} = 1;
* the **limit bound** on the distance to the limit network
  (:func:`limit_bound`), with certified constants derived in
  :func:`derive_limit_constants`;
* empirical counterparts (:func:`empirical_sup_deviation`,
  :class:`Trajectory`), the exponential-rate fit
  (:func:`fit_exponential_rate`), and exact oracles for the two scalar
  sequence lemmas behind the convergence proofs.

Networks of different widths are compared through their extension: states
are extended with the activation's value at zero (which literal zero padding
matches exactly whenever act(0) = 0), while weights and biases are padded
with zeros.  Constant-padded convolutional studies use the l_inf sequence
metric and the exact mask-sum operator norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activations import Activation
from .linalg import (
    INF,
    EventuallyConstSeq,
    PNorm,
    apply_banded,
    as_vector,
    constant_padded_toeplitz,
    extend_vector,
    induced_norm,
    matvec,
    seq_sum,
    vector_norm,
)
from .network import (
    CONSTANT_PAD,
    ZERO_PAD,
    Conv,
    LayerSeq,
    NetworkKind,
    Pooled,
    eval_extended_trajectory,
    eval_trajectory,
    pool_of,
)

__all__ = [
    "Domain",
    "SamplerSpec",
    "ConditionVerdict",
    "check_condition",
    "check_mask_conditions",
    "BoundContext",
    "Trajectory",
    "state_deviation",
    "apriori_bound",
    "deviation_bound",
    "empirical_sup_deviation",
    "LimitConstants",
    "derive_limit_constants",
    "limit_bound",
    "RateFit",
    "fit_exponential_rate",
    "cumulative_products",
    "tail_product_sums",
    "weighted_tail_sums",
]


# ---------------------------------------------------------------------------
# sampling domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerSpec:
    """How to draw inputs from the domain: 'uniform' (count, seed) or 'grid'."""

    kind: str = "uniform"
    count: int = 100
    seed: int = 0
    points_per_axis: int = 5

    def __post_init__(self):
        if self.kind not in ("uniform", "grid"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "uniform" and self.count < 1:
            raise ValueError("uniform sampler needs count >= 1")
        if self.kind == "grid" and self.points_per_axis < 2:
            raise ValueError("grid sampler needs at least 2 points per axis")


@dataclass(frozen=True)
class Domain:
    """The hypercube [-bound, bound]^dim.

    Formulas that consume "the bound on |x|" must use :meth:`norm_bound`,
    not ``bound``: samples from the cube reach l_p norm bound * dim^(1/p)
    for finite p, and the a-priori/limit bounds are only dominating if they
    are evaluated at that value.
    """

    dim: int
    bound: float

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"domain dimension must be >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        b = float(self.bound)
        if not (b > 0.0 and math.isfinite(b)):
            raise ValueError(f"domain bound must be positive and finite, got {self.bound}")
        object.__setattr__(self, "bound", b)

    def norm_bound(self, p: PNorm) -> float:
        """sup of |x|_p over the cube: bound * dim^(1/p), bound at p = inf."""
        if p.is_inf:
            return self.bound
        return self.bound * float(self.dim) ** (1.0 / p.p)

    def uniform_samples(self, count: int, seed: int) -> list[np.ndarray]:
        """`count` uniform draws from the cube (PCG64 stream, fixed seed)."""
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
        out = []
        for _ in range(int(count)):
            x = rng.uniform(-self.bound, self.bound, self.dim)
            x.flags.writeable = False
            out.append(x)
        return out

    def grid_samples(self, points_per_axis: int) -> list[np.ndarray]:
        k = int(points_per_axis)
        if k**self.dim > 20000:
            raise ValueError(
                f"grid of {k}^{self.dim} points is too large; use the uniform sampler"
            )
        axis = np.linspace(-self.bound, self.bound, k)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
        out = []
        for row in pts:
            r = np.array(row)
            r.flags.writeable = False
            out.append(r)
        return out

    def samples(self, spec: SamplerSpec) -> list[np.ndarray]:
        if spec.kind == "uniform":
            return self.uniform_samples(spec.count, spec.seed)
        return self.grid_samples(spec.points_per_axis)


# ---------------------------------------------------------------------------
# condition verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionVerdict:
    """Outcome of a convergence-condition check.

    ``estimate`` is the limit value being tested (omega for weight-norm
    checks, the fitted rate for the exponential mask check), ``method``
    records whether it is analytic (declared limits) or a labelled window
    scan, and ``margin`` is the distance to the pass/fail threshold
    (positive iff passed, threshold - estimate for "below threshold" tests).
    """

    estimate: float
    passed: bool
    method: str
    margin: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "passed": self.passed,
            "method": self.method,
            "margin": self.margin,
            "detail": self.detail,
        }


def _validate_window(window: tuple[int, int]) -> tuple[int, int]:
    n0, n1 = int(window[0]), int(window[1])
    if not 1 <= n0 <= n1:
        raise ValueError(f"scan window must satisfy 1 <= N0 <= N1, got {window}")
    return n0, n1


def check_condition(
    seq: LayerSeq,
    kind: NetworkKind,
    act: Activation,
    p: PNorm,
    window: tuple[int, int] = (8, 64),
) -> ConditionVerdict:
    """Verdict on the central condition omega = lim L*P*|W_n|_p < 1 (strict).

    With declared limits the estimate is analytic: L*P*|W*|_p (norm
    continuity), or L*P*sum|w*_k| for convolutional sequences.  Otherwise it
    is the labelled maximum of L*P*|W_n|_p over the scan window.
    """
    lp = act.lipschitz * pool_of(kind).lipschitz(p)
    if isinstance(kind, Conv) and kind.masks.limit is not None:
        est = lp * seq_sum(np.abs(kind.masks.limit))
        method = "analytic"
    elif seq.weight_limit is not None:
        est = lp * induced_norm(seq.weight_limit, p)
        method = "analytic"
    else:
        n0, n1 = _validate_window(window)
        est = max(lp * seq.weight_norm(n, p) for n in range(n0, n1 + 1))
        method = f"tail-scan[{n0},{n1}]"
    return ConditionVerdict(est, est < 1.0, method, 1.0 - est)


_EXP_FIT_R2_MIN = 0.98


def check_mask_conditions(
    masks, act: Activation, window: tuple[int, int] = (8, 64)
) -> dict[str, ConditionVerdict]:
    """The three mask conditions for convolutional layer sequences.

    * ``vanishing`` — mask coefficients tend to 0 (so the zero-padded
      operators vanish in norm).  Analytic when a limit mask is declared;
      otherwise the endpoint-halving scan max|w(N1)| <= 0.5 * max|w(N0)|.
    * ``mask_sum`` — lim L * sum_k |w_k^(n)| < 1, the constant-padding
      contraction condition.  Analytic via the declared limit, else the
      window maximum of L * sum_k |w_k^(n)|.
    * ``exponential`` — max_k |w_k^(n) - w*_k| = O(r^n): always a log-linear
      fit over the window, passing iff the fitted r < 1 with R^2 >= 0.98
      (sub-exponential decay such as 1/n fails the R^2 gate).
    """
    n0, n1 = _validate_window(window)
    L = act.lipschitz
    out: dict[str, ConditionVerdict] = {}

    if masks.limit is not None:
        lim = masks.limit
        peak = float(np.max(np.abs(lim))) if lim.size else 0.0
        out["vanishing"] = ConditionVerdict(
            peak, peak == 0.0, "analytic", -peak, "max |limit coefficient|"
        )
        s = L * seq_sum(np.abs(lim))
        out["mask_sum"] = ConditionVerdict(
            s, s < 1.0, "analytic", 1.0 - s, "L * sum_k |w*_k|"
        )
    else:
        m0 = float(np.max(np.abs(masks.mask(n0))))
        m1 = float(np.max(np.abs(masks.mask(n1))))
        thresh = 0.5 * m0
        out["vanishing"] = ConditionVerdict(
            m1,
            m1 == 0.0 or m1 <= thresh,
            f"tail-scan[{n0},{n1}]",
            thresh - m1,
            "endpoint-halving rule: max|w(N1)| <= 0.5 max|w(N0)|",
        )
        s = max(L * masks.abs_sum(n) for n in range(n0, n1 + 1))
        out["mask_sum"] = ConditionVerdict(
            s, s < 1.0, f"tail-scan[{n0},{n1}]", 1.0 - s, "window max of L*sum|w_k|"
        )

    lim = masks.limit if masks.limit is not None else np.zeros(masks.tau + 1)
    ns = list(range(n0, n1 + 1))
    peaks = [float(np.max(np.abs(masks.mask(n) - lim))) for n in ns]
    if all(v == 0.0 for v in peaks):
        out["exponential"] = ConditionVerdict(
            0.0, True, f"fit[{n0},{n1}]", 1.0, "mask is exactly constant at its limit"
        )
    else:
        try:
            fit = fit_exponential_rate(peaks, ns)
            ok = fit.rate < 1.0 and fit.r_squared >= _EXP_FIT_R2_MIN
            out["exponential"] = ConditionVerdict(
                fit.rate,
                ok,
                f"fit[{n0},{n1}]",
                1.0 - fit.rate,
                f"log-linear fit, R^2={fit.r_squared:.6f}",
            )
        except ValueError as exc:
            out["exponential"] = ConditionVerdict(
                math.nan, False, f"fit[{n0},{n1}]", math.nan, f"fit failed: {exc}"
            )
    return out


# ---------------------------------------------------------------------------
# bound context: one formula, two geometries (finite / constant-padded)
# ---------------------------------------------------------------------------


def state_deviation(a: np.ndarray, b: np.ndarray, p: PNorm, fill: float) -> float:
    """|a - b|_p with the shorter state extended by the network's padding
    value ``fill`` (the activation's value at zero)."""
    if a.size == b.size:
        return vector_norm(a - b, p)
    size = max(a.size, b.size)
    return vector_norm(
        extend_vector(a, size, fill) - extend_vector(b, size, fill), p
    )


class BoundContext:
    """Caches the x-independent norm and difference data the bounds consume.

    One instance per (layer sequence, kind, activation, p, extension); the
    caches matter because the study grid revisits the same weight-difference
    norms for every (n, m) pair and sample.
    """

    def __init__(
        self,
        seq: LayerSeq,
        kind: NetworkKind,
        act: Activation,
        p: PNorm,
        extension: str = ZERO_PAD,
    ):
        if extension not in (ZERO_PAD, CONSTANT_PAD):
            raise ValueError(f"unknown extension scheme {extension!r}")
        if extension == CONSTANT_PAD:
            if not isinstance(kind, Conv):
                raise ValueError("constant padding applies to convolutional networks")
            if not p.is_inf:
                raise ValueError(
                    "constant-padded comparisons use the l_inf sequence metric"
                )
        self.seq = seq
        self.kind = kind
        self.act = act
        self.p = p
        self.extension = extension
        self.pool = pool_of(kind)
        self.L = act.lipschitz
        self.P = self.pool.lipschitz(p)
        self._wnorm: dict[int, float] = {}
        self._wdiff: dict[tuple[int, int], float] = {}
        self._bdiff: dict[tuple[int, int], float] = {}
        self._elim: dict[int, float] = {}
        self._Elim: dict[int, float] = {}
        self._znorm: dict[int, float] = {}

    # -- operator norms ------------------------------------------------

    def weight_norm(self, n: int) -> float:
        got = self._wnorm.get(n)
        if got is None:
            if self.extension == CONSTANT_PAD and n >= 2:
                got = self.kind.masks.abs_sum(n)
            else:
                got = self.seq.weight_norm(n, self.p)
            self._wnorm[n] = got
        return got

    def weight_diff(self, j: int, k: int) -> float:
        """|W_j - W_k| in the extension (zero padding to a common shape, or
        the exact mask-sum norm of the constant-padded difference)."""
        key = (j, k)
        got = self._wdiff.get(key)
        if got is not None:
            return got
        if self.extension == CONSTANT_PAD:
            if min(j, k) < 2:
                raise ValueError(
                    "constant-padded weight differences are defined for layers >= 2"
                )
            masks = self.kind.masks
            got = seq_sum(np.abs(masks.mask(j) - masks.mask(k)))
        else:
            got = induced_norm(self._padded_diff(j, k), self.p)
        self._wdiff[key] = got
        return got

    def _padded_diff(self, j: int, k: int) -> np.ndarray:
        wj = self.seq.layer(j)[0]
        wk = self.seq.layer(k)[0]
        rows = max(wj.shape[0], wk.shape[0])
        cols = max(wj.shape[1], wk.shape[1])
        out = np.zeros((rows, cols))
        out[: wj.shape[0], : wj.shape[1]] = wj
        out[: wk.shape[0], : wk.shape[1]] -= wk
        return out

    def bias_diff(self, j: int, k: int) -> float:
        """|b_j - b_k| with zero padding across widths."""
        key = (j, k)
        got = self._bdiff.get(key)
        if got is None:
            bj = self.seq.layer(j)[1]
            bk = self.seq.layer(k)[1]
            size = max(bj.size, bk.size)
            got = vector_norm(
                extend_vector(bj, size) - extend_vector(bk, size), self.p
            )
            self._bdiff[key] = got
        return got

    # -- declared limits -------------------------------------------------

    @property
    def weight_limit_norm(self) -> float | None:
        if isinstance(self.kind, Conv):
            lim = self.kind.masks.limit
            if lim is None:
                return None
            if self.extension == CONSTANT_PAD:
                return seq_sum(np.abs(lim))
            # zero-pad extension: only a vanishing mask has a limit operator
            return 0.0 if not lim.any() else None
        if self.seq.weight_limit is None:
            return None
        return induced_norm(self.seq.weight_limit, self.p)

    @property
    def has_limits(self) -> bool:
        return self.weight_limit_norm is not None and self.seq.bias_limit is not None

    def bias_limit_diff(self, k: int) -> float:
        """e_k = |b_k - b*| (zero-padded across widths)."""
        got = self._elim.get(k)
        if got is None:
            if self.seq.bias_limit is None:
                raise ValueError("no declared bias limit")
            bk = self.seq.layer(k)[1]
            size = max(bk.size, self.seq.bias_limit.size)
            got = vector_norm(
                extend_vector(bk, size) - extend_vector(self.seq.bias_limit, size),
                self.p,
            )
            self._elim[k] = got
        return got

    def weight_limit_diff(self, k: int) -> float:
        """E_k = |W_k - W*| in the extension."""
        got = self._Elim.get(k)
        if got is not None:
            return got
        if isinstance(self.kind, Conv):
            lim = self.kind.masks.limit
            if lim is None:
                raise ValueError("no declared mask limit")
            if self.extension == CONSTANT_PAD:
                if k < 2:
                    raise ValueError(
                        "constant-padded weight differences are defined for layers >= 2"
                    )
                got = seq_sum(np.abs(self.kind.masks.mask(k) - lim))
            elif not lim.any():
                got = self.weight_norm(k)  # |W_k - 0|
            else:
                raise ValueError(
                    "zero-padded convolutional weights converge only when the "
                    "limit mask vanishes; use the constant_pad extension"
                )
        else:
            if self.seq.weight_limit is None:
                raise ValueError("no declared weight limit")
            wk = self.seq.layer(k)[0]
            wl = self.seq.weight_limit
            rows = max(wk.shape[0], wl.shape[0])
            cols = max(wk.shape[1], wl.shape[1])
            out = np.zeros((rows, cols))
            out[: wk.shape[0], : wk.shape[1]] = wk
            out[: wl.shape[0], : wl.shape[1]] -= wl
            got = induced_norm(out, self.p)
        self._Elim[k] = got
        return got

    # -- misc pieces ------------------------------------------------------

    def zero_image_norm(self, n: int) -> float:
        """|(act o pool)(0)| at layer n — the additive constant of the
        a-priori recursion.  Constant |act(0)| in the l_inf sequence norm."""
        got = self._znorm.get(n)
        if got is None:
            if self.extension == CONSTANT_PAD:
                got = abs(self.act.value_at_zero)
            else:
                dim = self.seq.width(n) + self.seq.extra_rows
                got = vector_norm(self.act.apply(self.pool.pool(np.zeros(dim))), self.p)
            self._znorm[n] = got
        return got

    def bias_norm(self, n: int) -> float:
        return vector_norm(self.seq.layer(n)[1], self.p)

    def lambda_products(self, top: int, count: int) -> list[float]:
        """vals[i] = Lam^{i-1} = prod_{j=0..i-1} L*P*|W_{top-j}|, vals[0]=1."""
        vals = [1.0]
        acc = 1.0
        for j in range(count):
            acc *= self.L * self.P * self.weight_norm(top - j)
            vals.append(acc)
        return vals


class Trajectory:
    """Per-sample evaluation data shared by deviations and bounds.

    Computes the state trajectory once (the expensive part, eagerly, so a
    thread pool over samples parallelizes it) and serves state norms,
    deviations between depths, and the first-layer product gap
    |W_{m+1} N_m(x) - W_1 x| on demand.
    """

    def __init__(self, ctx: BoundContext, x, depth: int):
        self.ctx = ctx
        self.x = as_vector(x, name="sample")
        self.depth = int(depth)
        if self.depth < 1:
            raise ValueError("trajectory depth must be >= 1")
        if ctx.extension == CONSTANT_PAD:
            self._states = eval_extended_trajectory(
                ctx.seq, ctx.kind, ctx.act, self.x, self.depth, CONSTANT_PAD
            )
            w1 = ctx.seq.layer(1)[0]
            self._first = EventuallyConstSeq(matvec(w1, self.x), 0.0)
        else:
            self._states = eval_trajectory(ctx.seq, ctx.kind, ctx.act, self.x, self.depth)
            self._first = matvec(ctx.seq.layer(1)[0], self.x)
        self._norms: dict[int, float] = {}
        self._gaps: dict[int, float] = {}

    def state(self, n: int):
        return self._states[n - 1]

    def state_norm(self, n: int) -> float:
        got = self._norms.get(n)
        if got is None:
            s = self.state(n)
            if self.ctx.extension == CONSTANT_PAD:
                got = s.norm(INF)
            else:
                got = vector_norm(s, self.ctx.p)
            self._norms[n] = got
        return got

    def deviation(self, n_small: int, n_large: int) -> float:
        """|N_{n_large}(x) - N_{n_small}(x)| in the extension metric."""
        a = self.state(n_large)
        b = self.state(n_small)
        if self.ctx.extension == CONSTANT_PAD:
            return (a - b).norm(INF)
        return state_deviation(a, b, self.ctx.p, self.ctx.act.value_at_zero)

    def product_gap(self, m: int) -> float:
        """|W_{m+1} N_m(x) - W_1 x| — the pre-activation mismatch between
        restarting the recursion at depth m and at the input."""
        got = self._gaps.get(m)
        if got is not None:
            return got
        ctx = self.ctx
        if ctx.extension == CONSTANT_PAD:
            op = constant_padded_toeplitz(ctx.kind.masks.mask(m + 1))
            prod = apply_banded(op, self.state(m))
            got = (prod - self._first).norm(INF)
        else:
            w = ctx.seq.layer(m + 1)[0]
            prod = matvec(w, self.state(m))
            got = state_deviation(prod, self._first, ctx.p, 0.0)
        self._gaps[m] = got
        return got


# ---------------------------------------------------------------------------
# the bounds
# ---------------------------------------------------------------------------


def apriori_bound_ctx(ctx: BoundContext, n: int, x_bound: float) -> float:
    """A-priori bound on |N_n(x)| for |x| <= x_bound (context form)."""
    if n < 1:
        raise ValueError(f"depth must be >= 1, got {n}")
    factors = [ctx.L * ctx.P * ctx.weight_norm(j) for j in range(1, n + 1)]
    # suffix[j-1] = prod_{i=j+1..n} factors
    suffix = [1.0] * (n + 1)
    for j in range(n - 1, 0, -1):
        suffix[j] = suffix[j + 1] * factors[j]  # factors[j] is layer j+1
    full = suffix[1] * factors[0]
    terms = [
        suffix[j] * (ctx.L * ctx.bias_norm(j) + ctx.zero_image_norm(j))
        for j in range(1, n + 1)
    ]
    return full * x_bound + seq_sum(terms)


def apriori_bound(
    seq: LayerSeq,
    kind: NetworkKind,
    act: Activation,
    p: PNorm,
    n: int,
    x_bound: float,
    extension: str = ZERO_PAD,
) -> float:
    """Upper bound on |N_n(x)| over |x| <= x_bound:

        prod_{j<=n} (L*P*|W_j|) * x_bound
        + sum_{j<=n} prod_{i=j+1..n} (L*P*|W_i|) * (L*|b_j| + |(act o pool)(0_j)|)

    where 0_j is the zero vector of the layer's pre-pooling dimension.
    """
    return apriori_bound_ctx(BoundContext(seq, kind, act, p, extension), n, x_bound)


def deviation_bound_ctx(ctx: BoundContext, traj: Trajectory, n: int, m: int) -> float:
    """Three-term deviation bound for |N_{n+m}(x) - N_n(x)| (context form)."""
    if n < 1 or m < 1:
        raise ValueError("deviation bound needs n >= 1 and m >= 1")
    vals = ctx.lambda_products(n + m, n - 1)  # vals[i] = Lam^{i-1}
    t1 = [vals[i] * ctx.bias_diff(m + n - i, n - i) for i in range(n)]
    term1 = ctx.L * seq_sum(t1)
    t2 = [
        vals[i] * traj.state_norm(n - 1 - i) * ctx.weight_diff(m + n - i, n - i)
        for i in range(n - 1)
    ]
    term2 = ctx.L * ctx.P * seq_sum(t2)
    term3 = ctx.L * ctx.P * vals[n - 1] * traj.product_gap(m)
    return term1 + term2 + term3


def deviation_bound(
    seq: LayerSeq,
    kind: NetworkKind,
    act: Activation,
    p: PNorm,
    n: int,
    m: int,
    x,
    extension: str = ZERO_PAD,
) -> float:
    """Three-term upper bound on |N_{n+m}(x) - N_n(x)| at the sample x.

    Term 1 aggregates bias drifts |b_{k+m} - b_k|, term 2 weight drifts
    |W_{k+m} - W_k| weighted by the visited state norms, and term 3 charges
    the depth-m head start |W_{m+1} N_m(x) - W_1 x|; each is discounted by
    the contraction products Lam of the layers still to come.  The bound is
    tight: a scalar constant-weight network achieves equality.
    """
    ctx = BoundContext(seq, kind, act, p, extension)
    traj = Trajectory(ctx, x, max(n + m - 1, m, 1))
    return deviation_bound_ctx(ctx, traj, n, m)


def empirical_sup_deviation(
    seq: LayerSeq,
    kind: NetworkKind,
    act: Activation,
    samples: Sequence,
    p: PNorm,
    n: int,
    m: int,
    extension: str = ZERO_PAD,
) -> float:
    """max over samples of |N_{n+m}(x) - N_n(x)| in the extension metric."""
    if n < 1 or m < 1:
        raise ValueError("empirical deviation needs n >= 1 and m >= 1")
    ctx = BoundContext(seq, kind, act, p, extension)
    best = 0.0
    for x in samples:
        traj = Trajectory(ctx, x, n + m)
        best = max(best, traj.deviation(n, n + m))
    return best


# ---------------------------------------------------------------------------
# limit bound and its certified constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitConstants:
    """Certified constants for the limit bound.

    omega0: bound on L*P*|W_n| over every layer n >= 2 (strictly below 1);
    weight_sup: upper bound w on sup_n |W_n|;
    rho: upper bound on sup_{n, |x|<=D} |N_n(x)|;
    x_bound: the domain norm bound D.  ``note`` records the scan provenance.
    """

    omega0: float
    weight_sup: float
    rho: float
    x_bound: float
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "weight_sup": self.weight_sup,
            "rho": self.rho,
            "x_bound": self.x_bound,
            "note": self.note,
        }


def derive_limit_constants(
    ctx: BoundContext,
    x_bound: float,
    scan: tuple[int, int] = (8, 48),
) -> tuple[LimitConstants | None, str]:
    """Derive (omega0, w, rho) from declared limits and a labelled scan.

    The unscanned tail is capped through the declared decay: past the scan
    end, |W_n| <= |W*| + E_end and |b_n| <= |b*| + e_end (the shipped
    generator families have non-increasing e_n, E_n by construction), and
    the a-priori recursion value(n+1) <= omega0 * value(n) + K yields the
    certified sup rho = max(scanned a-priori values, K / (1 - omega0)).
    Returns (None, reason) when no limits are declared or omega0 >= 1.
    """
    if not ctx.has_limits:
        return None, "no declared limits"
    n0, n1 = _validate_window(scan)
    if n1 < 2:
        return None, "scan window must reach at least layer 2"
    if (
        ctx.extension == ZERO_PAD
        and isinstance(ctx.kind, Conv)
        and ctx.act.value_at_zero != 0.0
        and not ctx.p.is_inf
    ):
        return None, (
            "act(0) != 0 on unbounded widths admits no finite-p tail cap; "
            "use p = inf"
        )
    lp = ctx.L * ctx.P
    e_end = ctx.bias_limit_diff(n1)
    E_end = ctx.weight_limit_diff(n1)
    wlim = ctx.weight_limit_norm
    # the limit bound discounts every peeled layer k in [2, n] by omega0,
    # so omega0 must dominate L*P*|W_k| for ALL k >= 2 — scanning only the
    # declared window would miss the early layers (past n1 the analytic
    # piece L*P*(|W*| + E_end) takes over through the decaying drift)
    scan_lp = max(lp * ctx.weight_norm(n) for n in range(2, n1 + 1))
    omega0 = max(scan_lp, lp * (wlim + E_end))
    if not omega0 < 1.0:
        return None, f"omega0 = {omega0:.6g} >= 1 over layers [2,{n1}]"
    weight_sup = max(
        max(ctx.weight_norm(n) for n in range(1, n1 + 1)), wlim + E_end
    )
    blim_norm = vector_norm(ctx.seq.bias_limit, ctx.p)
    zmax = max(ctx.zero_image_norm(n) for n in range(1, n1 + 1))
    tail_cap = (ctx.L * (blim_norm + e_end) + zmax) / (1.0 - omega0)
    rho = max(
        max(apriori_bound_ctx(ctx, n, x_bound) for n in range(1, n1 + 1)), tail_cap
    )
    note = (
        f"coverage [2,{n1}]; omega0={omega0:.12g}; e_end={e_end:.6g}; "
        f"E_end={E_end:.6g}"
    )
    return LimitConstants(omega0, weight_sup, rho, float(x_bound), note), "ok"


def limit_bound_ctx(ctx: BoundContext, n: int, constants: LimitConstants) -> float:
    if n < 1:
        raise ValueError(f"depth must be >= 1, got {n}")
    w0 = constants.omega0
    # ascending i, sequential accumulation
    s1 = seq_sum([w0**i * ctx.bias_limit_diff(n - i) for i in range(n)])
    s2 = seq_sum([w0**i * ctx.weight_limit_diff(n - i) for i in range(n - 1)])
    lp = ctx.L * ctx.P
    tail = lp * constants.weight_sup * (constants.rho + constants.x_bound) * w0 ** (n - 1)
    # the three terms inherit their prefactors (L, L*P*rho, L*P*w*(rho+D))
    # directly from the deviation estimate after the omega0 substitution;
    # wrapping the last two in another factor of L would undershoot the
    # actual deviation whenever L < 1 (e.g. the sigmoid's L = 1/4)
    return ctx.L * s1 + lp * constants.rho * s2 + tail


def limit_bound(
    seq: LayerSeq,
    kind: NetworkKind,
    act: Activation,
    p: PNorm,
    n: int,
    constants: LimitConstants,
    extension: str = ZERO_PAD,
) -> float:
    """Upper bound on the distance |N(x) - N_n(x)| to the limit network:

        L * sum_{i<n} omega0^i e_{n-i}
          + L*P*rho * sum_{i<n-1} omega0^i E_{n-i}
          + L*P*w*(rho + D) * omega0^(n-1)

    with e_k = |b_k - b*| and E_k = |W_k - W*| in the extension.  Requires
    declared limits; raises otherwise.
    """
    ctx = BoundContext(seq, kind, act, p, extension)
    if not ctx.has_limits:
        raise ValueError("limit_bound requires declared weight and bias limits")
    return limit_bound_ctx(ctx, n, constants)


# ---------------------------------------------------------------------------
# exponential-rate fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of devs ~ amplitude * rate^n on the log scale."""

    rate: float
    amplitude: float
    r_squared: float
    n_used: int
    n_excluded: int

    def as_dict(self) -> dict:
        return {
            "rate": self.rate,
            "amplitude": self.amplitude,
            "r_squared": self.r_squared,
            "n_used": self.n_used,
            "n_excluded": self.n_excluded,
        }


_FIT_FLOOR = 1.0e-300


def fit_exponential_rate(devs: Sequence[float], ns: Sequence[int] | None = None) -> RateFit:
    """Fit log(dev) = log(amplitude) + n*log(rate) by closed-form least
    squares (sequential sums, no LAPACK).

    Zero, denormal, or non-finite deviations are excluded (they carry no
    slope information at double precision); fewer than 4 usable points is an
    error.  A constant series fits rate 1.0 with R^2 = 1.
    """
    devs = [float(v) for v in devs]
    if ns is None:
        ns = list(range(1, len(devs) + 1))
    else:
        ns = [int(n) for n in ns]
    if len(ns) != len(devs):
        raise ValueError("fit_exponential_rate: ns and devs must have equal length")
    pairs = [
        (n, v) for n, v in zip(ns, devs) if math.isfinite(v) and v > _FIT_FLOOR
    ]
    excluded = len(devs) - len(pairs)
    if len(pairs) < 4:
        raise ValueError(
            f"fit_exponential_rate: only {len(pairs)} usable points (need >= 4)"
        )
    xs = [float(n) for n, _ in pairs]
    ys = [math.log(v) for _, v in pairs]
    k = float(len(pairs))
    sx = seq_sum(xs)
    sy = seq_sum(ys)
    sxx = seq_sum([x * x for x in xs])
    sxy = seq_sum([x * y for x, y in zip(xs, ys)])
    denom = k * sxx - sx * sx
    if denom == 0.0:
        raise ValueError("fit_exponential_rate: degenerate abscissa (all n equal)")
    slope = (k * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / k
    resid = [y - (intercept + slope * x) for x, y in zip(xs, ys)]
    ss_res = seq_sum([r * r for r in resid])
    mean_y = sy / k
    ss_tot = seq_sum([(y - mean_y) ** 2 for y in ys])
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1.0e-30 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(math.exp(slope), math.exp(intercept), r2, len(pairs), excluded)


# ---------------------------------------------------------------------------
# scalar sequence oracles
# ---------------------------------------------------------------------------


def _seq_arg(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name}: expected a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr


def cumulative_products(alphas) -> np.ndarray:
    """A_n = prod_{j<=n} alpha_j for n = 1..len(alphas), sequential products."""
    a = _seq_arg(alphas, "cumulative_products")
    out = np.empty(a.size)
    acc = 1.0
    for i, v in enumerate(a.tolist()):
        acc *= v
        out[i] = acc
    return out


def tail_product_sums(alphas) -> np.ndarray:
    """B_n = sum_{j<=n} prod_{i=j+1..n} alpha_i, via B_n = 1 + alpha_n*B_{n-1}.

    The recursion is the algebraic identity obtained by splitting off the
    j = n term (empty product 1); it keeps the oracle O(n) at n = 10^4 while
    tests cross-check the literal nested sum at small n.  When
    lim alpha < 1 the sequence is bounded by 1/(1 - sup tail alpha).
    """
    a = _seq_arg(alphas, "tail_product_sums")
    out = np.empty(a.size)
    acc = 0.0
    for i, v in enumerate(a.tolist()):
        acc = 1.0 + v * acc
        out[i] = acc
    return out


def weighted_tail_sums(alphas, betas) -> np.ndarray:
    """S_n = sum_{i=0}^{n-1} (prod_{j=0}^{i-1} alpha_{n-j}) * beta_{n-i},
    via the identity S_n = beta_n + alpha_n * S_{n-1}.

    This is the discounted-history sum behind the convergence proofs: it
    tends to 0 whenever lim alpha < 1 and beta_n -> 0.
    """
    a = _seq_arg(alphas, "weighted_tail_sums")
    b = _seq_arg(betas, "weighted_tail_sums betas")
    if a.size != b.size:
        raise ValueError("weighted_tail_sums: alphas and betas must have equal length")
    out = np.empty(a.size)
    acc = 0.0
    for i, (av, bv) in enumerate(zip(a.tolist(), b.tolist())):
        acc = bv + av * acc
        out[i] = acc
    return out
