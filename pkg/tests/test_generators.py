"""Tests for the synthetic layer-sequence generators."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dnclab.activations import relu, sigmoid
from dnclab.analysis import BoundContext
from dnclab.generators import (
    MASK_FAMILIES,
    MATRIX_FAMILIES,
    GenSpec,
    MaskSpec,
    build,
    build_masks,
    rescale_to_norm,
)
from dnclab.linalg import INF, ONE, induced_norm, vector_norm
from dnclab.network import CONSTANT_PAD, PLAIN, Conv


EXP = GenSpec(
    "exp_decay", input_dim=3, widths=3, seed=5, rate=0.5, norm_target=0.55
)


class TestRescale:
    def test_sets_requested_norm(self):
        rng = np.random.default_rng(0)
        w = rng.uniform(-1, 1, (4, 3))
        for p in (ONE, INF):
            assert induced_norm(rescale_to_norm(w, 0.7, p), p) == pytest.approx(
                0.7, rel=1e-12
            )

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            rescale_to_norm(np.zeros((2, 2)), 1.0, ONE)


class TestGenSpecValidation:
    def test_rate_families_require_rate(self):
        with pytest.raises(ValueError, match="rate"):
            GenSpec("exp_decay", input_dim=3, widths=3)
        with pytest.raises(ValueError, match="rate"):
            GenSpec("random_convergent", input_dim=3, widths=3)

    def test_rate_range(self):
        with pytest.raises(ValueError):
            GenSpec("exp_decay", input_dim=3, widths=3, rate=1.0)
        with pytest.raises(ValueError):
            GenSpec("conv", input_dim=2, rate=1.5,
                    mask=MaskSpec("vanishing_exponential", (0.5,), rate=0.5))

    def test_diverging_needs_norm_target(self):
        with pytest.raises(ValueError, match="norm_target"):
            GenSpec("diverging", input_dim=3, widths=3)

    def test_conv_constraints(self):
        mask = MaskSpec("vanishing_exponential", (0.5, 0.2), rate=0.5)
        with pytest.raises(ValueError, match="MaskSpec"):
            GenSpec("conv", input_dim=2)
        with pytest.raises(ValueError, match="widths"):
            GenSpec("conv", input_dim=2, widths=4, mask=mask)
        with pytest.raises(ValueError, match="pooling rows"):
            GenSpec("conv", input_dim=2, extra_rows=1, mask=mask)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="family"):
            GenSpec("mystery", input_dim=3, widths=3)
        assert "exp_decay" in MATRIX_FAMILIES
        assert "conv" not in MATRIX_FAMILIES  # conv dispatches separately


class TestMaskSpecValidation:
    def test_family_requirements(self):
        with pytest.raises(ValueError, match="rate"):
            MaskSpec("vanishing_exponential", (0.5,))
        with pytest.raises(ValueError, match="limit"):
            MaskSpec("constant_limit", (0.5,), rate=0.5)
        with pytest.raises(ValueError):
            MaskSpec("constant_limit", (0.5,), rate=0.5, limit=(0.1, 0.2))
        with pytest.raises(ValueError):
            MaskSpec("diverging", (0.5,), rate=0.5)
        assert set(MASK_FAMILIES) >= {
            "vanishing_exponential",
            "vanishing_harmonic",
            "constant_limit",
            "diverging",
        }

    def test_tau_from_base_length(self):
        assert MaskSpec("diverging", (0.5, 0.2, 0.1)).tau == 2


class TestDriftEnvelopes:
    def test_exp_decay_weight_drift_is_exact(self):
        net = build(EXP)
        ctx = BoundContext(net.seq, PLAIN, relu(), ONE)
        for k in range(2, 10):
            assert ctx.weight_limit_diff(k) == pytest.approx(
                EXP.scale * EXP.rate**k, rel=1e-12
            )

    def test_exp_decay_bias_drift_is_exact(self):
        net = build(EXP)
        ctx = BoundContext(net.seq, PLAIN, relu(), ONE)
        for k in range(1, 10):
            assert ctx.bias_limit_diff(k) == pytest.approx(
                EXP.bias_scale * EXP.rate**k, rel=1e-12
            )

    def test_shared_direction_gives_exact_pair_drift(self):
        # fixed width -> one drift direction, so |W_j - W_k| telescopes
        net = build(EXP)
        ctx = BoundContext(net.seq, PLAIN, relu(), ONE)
        for j, k in ((5, 3), (7, 2), (4, 3)):
            assert ctx.weight_diff(j, k) == pytest.approx(
                EXP.scale * abs(EXP.rate**j - EXP.rate**k), rel=1e-12
            )

    def test_harmonic_weight_drift(self):
        spec = GenSpec("harmonic", input_dim=3, widths=3, seed=2, norm_target=0.5)
        ctx = BoundContext(build(spec).seq, PLAIN, relu(), ONE)
        for k in (2, 4, 8):
            assert ctx.weight_limit_diff(k) == pytest.approx(spec.scale / k, rel=1e-12)

    def test_constant_family_never_drifts(self):
        spec = GenSpec("constant", input_dim=4, widths=4, seed=3, norm_target=0.5)
        seq = build(spec).seq
        w2 = seq.layer(2)[0]
        for n in (3, 5, 9):
            assert np.array_equal(seq.layer(n)[0], w2)
        ctx = BoundContext(seq, PLAIN, relu(), ONE)
        assert ctx.weight_limit_diff(4) == 0.0
        assert ctx.bias_limit_diff(4) == 0.0


class TestNormTargets:
    def test_limit_norm_hits_target(self):
        assert induced_norm(build(EXP).seq.weight_limit, ONE) == pytest.approx(
            0.55, rel=1e-12
        )

    def test_inf_norm_target(self):
        spec = GenSpec(
            "constant", input_dim=3, widths=3, seed=4, norm_target=0.8, norm_p=INF
        )
        seq = build(spec).seq
        assert induced_norm(seq.layer(2)[0], INF) == pytest.approx(0.8, rel=1e-12)

    def test_first_layer_matches_core_norm(self):
        seq = build(EXP).seq
        assert induced_norm(seq.layer(1)[0], ONE) == pytest.approx(0.55, rel=1e-12)


class TestDeterminismAndOrder:
    def test_same_seed_same_network(self):
        a = build(EXP).seq
        b = build(EXP).seq
        for n in (1, 2, 5):
            assert np.array_equal(a.layer(n)[0], b.layer(n)[0])
            assert np.array_equal(a.layer(n)[1], b.layer(n)[1])

    def test_seed_changes_network(self):
        other = GenSpec(
            "exp_decay", input_dim=3, widths=3, seed=6, rate=0.5, norm_target=0.55
        )
        assert not np.array_equal(build(EXP).seq.layer(1)[0], build(other).seq.layer(1)[0])

    def test_access_order_does_not_matter(self):
        a = build(EXP).seq
        a5 = np.array(a.layer(5)[0])
        a2 = np.array(a.layer(2)[0])
        b = build(EXP).seq
        b2 = np.array(b.layer(2)[0])
        b5 = np.array(b.layer(5)[0])
        assert np.array_equal(a5, b5) and np.array_equal(a2, b2)

    def test_random_convergent_fresh_directions(self):
        spec = GenSpec(
            "random_convergent", input_dim=3, widths=3, seed=9, rate=0.5,
            norm_target=0.5,
        )
        seq = build(spec).seq
        ctx = BoundContext(seq, PLAIN, relu(), ONE)
        # drift still bounded by the envelope, but directions are per-layer
        for k in (2, 4, 6):
            assert ctx.weight_limit_diff(k) <= spec.scale * spec.rate**k * (1 + 1e-12)


class TestGeometries:
    def test_cyclic_widths_chain(self):
        spec = GenSpec(
            "exp_decay", input_dim=3, widths=(5, 3, 4), seed=1, rate=0.5,
            norm_target=0.5,
        )
        seq = build(spec).seq
        assert [seq.width(n) for n in range(0, 7)] == [3, 5, 3, 4, 5, 3, 4]
        for n in range(1, 7):
            assert seq.layer(n)[0].shape == (seq.width(n), seq.width(n - 1))

    def test_pooling_rows_reserved(self):
        spec = GenSpec(
            "constant", input_dim=4, widths=5, seed=2, norm_target=0.5, extra_rows=2
        )
        seq = build(spec).seq
        assert seq.layer(1)[0].shape == (7, 4)
        assert seq.layer(3)[0].shape == (7, 5)
        assert seq.layer(1)[1].size == 5

    def test_conv_network_parts(self):
        mask_spec = MaskSpec("vanishing_exponential", (0.6, -0.4), rate=0.5)
        spec = GenSpec("conv", input_dim=2, seed=7, mask=mask_spec)
        net = build(spec)
        assert net.masks is not None and net.masks.tau == 1
        assert [net.seq.width(n) for n in range(4)] == [2, 3, 4, 5]
        assert_allclose(net.masks.mask(3), np.array([0.6, -0.4]) * 0.5**3, rtol=1e-14)
        assert net.seq.bias_limit.shape == (3,)  # s + tau core coordinates

    def test_conv_bias_drift_exact(self):
        mask_spec = MaskSpec("vanishing_exponential", (0.6, -0.4), rate=0.5)
        spec = GenSpec("conv", input_dim=2, seed=7, mask=mask_spec, bias_scale=0.5)
        net = build(spec)
        ctx = BoundContext(net.seq, Conv(net.masks), sigmoid(), INF)
        for k in (1, 3, 6):
            assert ctx.bias_limit_diff(k) == pytest.approx(0.5 * 0.5**k, rel=1e-12)


class TestMaskFamilies:
    def test_vanishing_exponential_values(self):
        masks = build_masks(MaskSpec("vanishing_exponential", (0.6, -0.4), rate=0.5))
        assert_allclose(masks.mask(2), [0.15, -0.1], rtol=1e-14)
        assert np.array_equal(masks.limit, [0.0, 0.0])
        assert masks.rate == 0.5

    def test_vanishing_harmonic_values(self):
        masks = build_masks(MaskSpec("vanishing_harmonic", (0.6, -0.4)))
        assert_allclose(masks.mask(4), [0.15, -0.1], rtol=1e-14)

    def test_constant_limit_values(self):
        masks = build_masks(
            MaskSpec("constant_limit", (0.2, -0.1), rate=0.5, limit=(0.2, -0.1))
        )
        assert_allclose(masks.mask(1), [0.3, -0.15], rtol=1e-14)
        assert np.array_equal(masks.limit, [0.2, -0.1])

    def test_diverging_is_constant_with_declared_limit(self):
        masks = build_masks(MaskSpec("diverging", (0.8, 0.6)))
        assert np.array_equal(masks.mask(1), masks.mask(50))
        assert np.array_equal(masks.limit, [0.8, 0.6])
