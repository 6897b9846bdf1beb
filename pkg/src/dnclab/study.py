"""Convergence studies: sampled deviations against every bound at once.

A study takes one network family, draws inputs from the domain, evaluates
the state trajectories once per sample, and then audits the full grid of
depth pairs:

* per (n, m): the empirical deviation |N_{n+m}(x) - N_n(x)| against the
  three-term deviation bound (per sample — dominance is checked pointwise,
  not just for the suprema);
* per n: the state norm against the a-priori bound, the deviation to a deep
  reference network, and (when limits are declared and the certified
  constants exist) the limit bound pair J(n) + J(reference);
* the fitted exponential rate of the reference deviations.

Trajectory evaluation is the expensive part and is farmed out to a thread
pool; results are merged in sample-index order, and every reduction is a
sequential sum, so reports are byte-identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .activations import Activation
from .analysis import (
    BoundContext,
    ConditionVerdict,
    Domain,
    LimitConstants,
    RateFit,
    SamplerSpec,
    Trajectory,
    apriori_bound_ctx,
    check_condition,
    check_mask_conditions,
    derive_limit_constants,
    deviation_bound_ctx,
    fit_exponential_rate,
    limit_bound_ctx,
)
from .linalg import PNorm
from .network import ZERO_PAD, Conv, LayerSeq, NetworkKind

__all__ = [
    "DepthPlan",
    "StudyRow",
    "StateRow",
    "StudyResult",
    "build_trajectories",
    "convergence_study",
]


@dataclass(frozen=True)
class DepthPlan:
    """Depth grid of a study: deviation pairs (n, n+m) for n in n_list and
    m in m_list, plus a reference depth for distance-to-limit proxies."""

    n_list: tuple[int, ...] = (1, 2, 3, 4, 6, 8, 10, 12)
    m_list: tuple[int, ...] = (1, 2, 4, 8)
    reference_depth: int | None = None

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_list)
        ms = tuple(int(m) for m in self.m_list)
        if not ns or not ms:
            raise ValueError("depth plan needs nonempty n_list and m_list")
        if min(ns) < 1 or min(ms) < 1:
            raise ValueError("depths must be >= 1")
        if list(ns) != sorted(set(ns)) or list(ms) != sorted(set(ms)):
            raise ValueError("n_list and m_list must be strictly increasing")
        object.__setattr__(self, "n_list", ns)
        object.__setattr__(self, "m_list", ms)
        ref = self.reference_depth
        if ref is not None:
            ref = int(ref)
            if ref <= max(ns):
                raise ValueError(
                    f"reference depth {ref} must exceed max(n_list) = {max(ns)}"
                )
        object.__setattr__(self, "reference_depth", ref)

    @property
    def reference(self) -> int:
        return self.reference_depth if self.reference_depth is not None else max(self.n_list) + 20

    @property
    def max_depth(self) -> int:
        return max(self.reference, max(self.n_list) + max(self.m_list))


@dataclass(frozen=True)
class StudyRow:
    """One (n, m) cell: empirical sup deviation vs the deviation bound.

    ``bound`` is the sample-wise bound's maximum (a valid bound for the
    sup); dominance was still checked per sample.  ``limit_pair`` is
    J(n) + J(n+m) when certified constants exist, else None.
    """

    n: int
    m: int
    empirical: float
    bound: float
    limit_pair: float | None
    dominance_ok: bool
    limit_ok: bool | None
    worst_sample: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "empirical": self.empirical,
            "bound": self.bound,
            "limit_pair": self.limit_pair,
            "dominance_ok": self.dominance_ok,
            "limit_ok": self.limit_ok,
            "worst_sample": self.worst_sample,
        }


@dataclass(frozen=True)
class StateRow:
    """Per-depth audit: sup state norm vs a-priori bound, and deviation to
    the reference depth vs the limit-bound pair."""

    n: int
    sup_norm: float
    apriori: float
    apriori_ok: bool
    dev_to_ref: float | None
    limit_pair: float | None
    limit_ok: bool | None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "sup_norm": self.sup_norm,
            "apriori": self.apriori,
            "apriori_ok": self.apriori_ok,
            "dev_to_ref": self.dev_to_ref,
            "limit_pair": self.limit_pair,
            "limit_ok": self.limit_ok,
        }


@dataclass(frozen=True)
class StudyResult:
    label: str
    p: PNorm
    extension: str
    sample_count: int
    reference_depth: int
    condition: ConditionVerdict
    mask_conditions: dict[str, ConditionVerdict] | None
    constants: LimitConstants | None
    constants_note: str
    rows: tuple[StudyRow, ...]
    state_rows: tuple[StateRow, ...]
    rate: RateFit | None
    rate_note: str
    dominance_violations: tuple[tuple[int, int, int], ...] = field(default=())
    apriori_violations: tuple[tuple[int, int], ...] = field(default=())
    limit_violations: tuple[tuple[int, int], ...] = field(default=())

    @property
    def bounds_ok(self) -> bool:
        """All theorem-backed inequalities held on every sample."""
        return not (
            self.dominance_violations
            or self.apriori_violations
            or self.limit_violations
        )

    @property
    def passed(self) -> bool:
        """Bounds held and the convergence condition verdict is positive."""
        return self.bounds_ok and self.condition.passed

    def summary(self) -> str:
        cond = "<1 ok" if self.condition.passed else ">=1 FAIL"
        parts = [
            f"{self.label or 'study'}: omega={self.condition.estimate:.6g} "
            f"({self.condition.method}, {cond})",
            f"rows={len(self.rows)} samples={self.sample_count}",
        ]
        if self.rate is not None:
            parts.append(f"rate~{self.rate.rate:.4f} (R^2={self.rate.r_squared:.4f})")
        if not self.bounds_ok:
            parts.append(
                f"VIOLATIONS dominance={len(self.dominance_violations)} "
                f"apriori={len(self.apriori_violations)} "
                f"limit={len(self.limit_violations)}"
            )
        return " | ".join(parts)


def build_trajectories(
    ctx: BoundContext,
    samples,
    depth: int,
    threads: int = 1,
) -> list[Trajectory]:
    """Evaluate one trajectory per sample, optionally on a thread pool.

    The result list is in sample order regardless of completion order, and
    trajectory states are pure functions of (layer data, sample), so any
    thread count produces identical values.
    """
    threads = max(1, int(threads))
    if threads == 1 or len(samples) <= 1:
        return [Trajectory(ctx, x, depth) for x in samples]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(Trajectory, ctx, x, depth) for x in samples]
        return [f.result() for f in futures]


def convergence_study(
    seq: LayerSeq,
    kind: NetworkKind,
    act: Activation,
    p: PNorm,
    domain: Domain,
    sampler: SamplerSpec = SamplerSpec(),
    depths: DepthPlan = DepthPlan(),
    *,
    extension: str = ZERO_PAD,
    threads: int = 1,
    dominance_rtol: float = 1.0e-9,
    condition_window: tuple[int, int] = (8, 64),
    constants_scan: tuple[int, int] = (8, 48),
    label: str = "",
) -> StudyResult:
    """Run the full audit for one network family.

    ``dominance_rtol`` is the relative slack granted to the theoretical side
    of each inequality (floating-point noise allowance, not a weakening:
    the default 1e-9 is far below any meaningful violation).
    """
    if domain.dim != seq.input_dim:
        raise ValueError(
            f"domain dimension {domain.dim} != network input dimension {seq.input_dim}"
        )
    ctx = BoundContext(seq, kind, act, p, extension)
    samples = domain.samples(sampler)
    ref = depths.reference
    trajs = build_trajectories(ctx, samples, depths.max_depth, threads)

    condition = check_condition(seq, kind, act, p, condition_window)
    mask_conditions = (
        check_mask_conditions(kind.masks, act, condition_window)
        if isinstance(kind, Conv)
        else None
    )
    constants, constants_note = derive_limit_constants(
        ctx, domain.norm_bound(p), constants_scan
    )

    limit_cache: dict[int, float] = {}

    def lb(n: int) -> float:
        got = limit_cache.get(n)
        if got is None:
            got = limit_bound_ctx(ctx, n, constants)
            limit_cache[n] = got
        return got

    slack = 1.0 + dominance_rtol
    rows: list[StudyRow] = []
    dominance_violations: list[tuple[int, int, int]] = []
    for n in depths.n_list:
        for m in depths.m_list:
            sup_dev = 0.0
            sup_bound = 0.0
            worst = 0
            ok = True
            for i, traj in enumerate(trajs):
                dev = traj.deviation(n, n + m)
                bnd = deviation_bound_ctx(ctx, traj, n, m)
                if dev > bnd * slack:
                    ok = False
                    dominance_violations.append((n, m, i))
                if dev > sup_dev:
                    sup_dev = dev
                    worst = i
                sup_bound = max(sup_bound, bnd)
            pair = lb(n) + lb(n + m) if constants is not None else None
            limit_ok = None if pair is None else sup_dev <= pair * slack
            rows.append(
                StudyRow(n, m, sup_dev, sup_bound, pair, ok, limit_ok, worst)
            )

    x_bound = domain.norm_bound(p)
    state_rows: list[StateRow] = []
    apriori_violations: list[tuple[int, int]] = []
    limit_violations: list[tuple[int, int]] = []
    for n in (*depths.n_list, ref):
        apri = apriori_bound_ctx(ctx, n, x_bound)
        sup_norm = 0.0
        ok = True
        for i, traj in enumerate(trajs):
            norm = traj.state_norm(n)
            if norm > apri * slack:
                ok = False
                apriori_violations.append((n, i))
            sup_norm = max(sup_norm, norm)
        if n == ref:
            state_rows.append(StateRow(n, sup_norm, apri, ok, None, None, None))
            continue
        dev_ref = 0.0
        for traj in trajs:
            dev_ref = max(dev_ref, traj.deviation(n, ref))
        pair = lb(n) + lb(ref) if constants is not None else None
        limit_ok = None
        if pair is not None:
            limit_ok = dev_ref <= pair * slack
            if not limit_ok:
                limit_violations.append((n, ref))
        state_rows.append(
            StateRow(n, sup_norm, apri, ok, dev_ref, pair, limit_ok)
        )

    rate: RateFit | None = None
    rate_note = ""
    ref_devs = [r.dev_to_ref for r in state_rows if r.dev_to_ref is not None]
    ref_ns = [r.n for r in state_rows if r.dev_to_ref is not None]
    try:
        rate = fit_exponential_rate(ref_devs, ref_ns)
    except ValueError as exc:
        rate_note = str(exc)

    return StudyResult(
        label=label,
        p=p,
        extension=extension,
        sample_count=len(samples),
        reference_depth=ref,
        condition=condition,
        mask_conditions=mask_conditions,
        constants=constants,
        constants_note=constants_note,
        rows=tuple(rows),
        state_rows=tuple(state_rows),
        rate=rate,
        rate_note=rate_note,
        dominance_violations=tuple(dominance_violations),
        apriori_violations=tuple(apriori_violations),
        limit_violations=tuple(limit_violations),
    )
