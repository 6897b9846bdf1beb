"""Tests for the orchestrated convergence studies."""

import numpy as np
import pytest

from dnclab.activations import relu
from dnclab.analysis import Domain, SamplerSpec
from dnclab.corpus import control_instances, corpus_instances
from dnclab.linalg import ONE
from dnclab.network import PLAIN, LayerSeq
from dnclab.study import DepthPlan, build_trajectories, convergence_study


def scalar_net(weight: float) -> LayerSeq:
    return LayerSeq(
        1,
        lambda n: 1,
        lambda n: (np.array([[weight]]), np.zeros(1)),
        weight_limit=np.array([[weight]]),
        bias_limit=np.zeros(1),
    )


SMALL_PLAN = DepthPlan(n_list=(1, 2, 3, 4, 6), m_list=(1, 3), reference_depth=16)
SMALL_SAMPLER = SamplerSpec(count=6, seed=3)


def run_scalar(**kw):
    return convergence_study(
        scalar_net(0.4),
        PLAIN,
        relu(),
        ONE,
        Domain(1, 1.0),
        SMALL_SAMPLER,
        SMALL_PLAN,
        label="scalar-0.4",
        **kw,
    )


class TestDepthPlan:
    def test_defaults_and_reference(self):
        plan = DepthPlan()
        assert plan.reference == max(plan.n_list) + 20
        assert plan.max_depth >= plan.reference

    def test_validation(self):
        with pytest.raises(ValueError):
            DepthPlan(n_list=(3, 2))
        with pytest.raises(ValueError):
            DepthPlan(n_list=(1, 1))
        with pytest.raises(ValueError):
            DepthPlan(m_list=(0,))
        with pytest.raises(ValueError, match="reference"):
            DepthPlan(n_list=(1, 8), reference_depth=8)


class TestConvergenceStudy:
    def test_scalar_study_passes(self):
        res = run_scalar()
        assert res.passed and res.bounds_ok
        assert res.condition.passed and res.condition.method == "analytic"
        assert res.constants is not None and res.constants_note == "ok"
        assert res.sample_count == 6
        assert res.reference_depth == 16
        assert [(r.n, r.m) for r in res.rows] == [
            (n, m) for n in (1, 2, 3, 4, 6) for m in (1, 3)
        ]
        assert [s.n for s in res.state_rows] == [1, 2, 3, 4, 6, 16]
        for row in res.rows:
            assert row.dominance_ok and row.empirical <= row.bound * (1 + 1e-9)
            assert row.limit_ok and row.limit_pair >= row.empirical
        assert res.dominance_violations == ()
        assert res.apriori_violations == ()
        assert res.limit_violations == ()
        assert "scalar-0.4" in res.summary()

    def test_scalar_rows_match_closed_form(self):
        res = run_scalar()
        # relu kills negative inputs, so only the largest positive sample counts
        sup = max(max(x[0], 0.0) for x in Domain(1, 1.0).samples(SMALL_SAMPLER))
        for row in res.rows:
            expect = (0.4**row.n - 0.4 ** (row.n + row.m)) * sup
            assert row.empirical == pytest.approx(expect, rel=1e-12)

    def test_rate_fit_recovers_contraction(self):
        res = run_scalar()
        # dev-to-reference is (0.4^n - 0.4^16) * sup|x|: geometric up to the
        # tiny reference offset, so the fit lands close to the contraction
        assert res.rate is not None
        assert res.rate.rate == pytest.approx(0.4, rel=1e-3)
        assert res.rate.r_squared >= 0.999

    def test_thread_count_does_not_change_results(self):
        a = run_scalar(threads=1)
        b = run_scalar(threads=4)
        for ra, rb in zip(a.rows, b.rows):
            assert (ra.empirical, ra.bound, ra.limit_pair) == (
                rb.empirical,
                rb.bound,
                rb.limit_pair,
            )
        for sa, sb in zip(a.state_rows, b.state_rows):
            assert (sa.sup_norm, sa.apriori, sa.dev_to_ref) == (
                sb.sup_norm,
                sb.apriori,
                sb.dev_to_ref,
            )

    def test_domain_dimension_checked(self):
        with pytest.raises(ValueError, match="dimension"):
            convergence_study(
                scalar_net(0.4), PLAIN, relu(), ONE, Domain(2, 1.0), SMALL_SAMPLER
            )


class TestCorpusSmoke:
    def test_one_instance_per_geometry_passes(self):
        by_label = {inst.label: inst for inst in corpus_instances()}
        picks = [
            next(k for k in by_label if k.startswith("fixed4")),
            next(k for k in by_label if k.startswith("avg2")),
            next(k for k in by_label if k.startswith("convz")),
            next(k for k in by_label if k.startswith("convc")),
        ]
        for label in picks:
            inst = by_label[label]
            seq, kind = inst.build()
            res = convergence_study(
                seq,
                kind,
                inst.activation(),
                inst.p,
                inst.domain(),
                SamplerSpec(count=5, seed=1),
                DepthPlan(n_list=(1, 2, 4), m_list=(1, 2), reference_depth=10),
                extension=inst.extension,
                label=inst.label,
            )
            assert res.passed, f"{label}: {res.summary()}"

    def test_controls_fail_condition_but_not_bounds(self):
        for inst in control_instances():
            seq, kind = inst.build()
            res = convergence_study(
                seq,
                kind,
                inst.activation(),
                inst.p,
                inst.domain(),
                SamplerSpec(count=4, seed=2),
                DepthPlan(n_list=(1, 2), m_list=(1,), reference_depth=6),
                extension=inst.extension,
                label=inst.label,
            )
            assert not res.condition.passed
            assert res.bounds_ok, f"{inst.label}: bounds must hold regardless"
            assert not res.passed
            assert res.constants is None


class TestBuildTrajectories:
    def test_order_preserved_across_threads(self):
        from dnclab.analysis import BoundContext

        ctx = BoundContext(scalar_net(0.4), PLAIN, relu(), ONE)
        samples = [np.array([v]) for v in (0.1, -0.5, 0.9)]
        one = build_trajectories(ctx, samples, 5, 1)
        many = build_trajectories(ctx, samples, 5, 3)
        for t1, t2, x in zip(one, many, samples):
            assert t1.x[0] == t2.x[0] == x[0]
            assert t1.state_norm(5) == t2.state_norm(5)
