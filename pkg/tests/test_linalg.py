"""Tests for the deterministic linear-algebra kernel."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from dnclab.linalg import (
    INF,
    ONE,
    TWO,
    BandedToeplitz,
    EventuallyConstSeq,
    PNorm,
    apply_banded,
    as_matrix,
    as_vector,
    constant_padded_toeplitz,
    extend_vector,
    induced_norm,
    matvec,
    norm_upper_bound,
    seq_sum,
    toeplitz_from_mask,
    toeplitz_norms,
    vector_norm,
    zero_pad_matrix,
    zero_pad_vector,
)

import oracles


class TestSeqSum:
    def test_left_to_right_association(self):
        # 1e16 + 1 rounds back to 1e16, so the sequential sum is exactly 0;
        # any reordering or pairwise scheme would give 1.0 or 2.0
        assert seq_sum([1.0e16, 1.0, 1.0, -1.0e16]) == 0.0
        assert math.fsum([1.0e16, 1.0, 1.0, -1.0e16]) == 2.0

    def test_accepts_arrays_and_lists(self):
        assert seq_sum(np.arange(5.0)) == 10.0
        assert seq_sum([]) == 0.0
        assert isinstance(seq_sum(np.array([1.5])), float)


class TestMatvec:
    def test_matches_dense_product(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            a = rng.normal(size=(rng.integers(1, 7), rng.integers(1, 7)))
            x = rng.normal(size=a.shape[1])
            assert_allclose(matvec(a, x), a @ x, rtol=1e-13, atol=1e-13)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            matvec(np.eye(2), np.ones(3))


class TestPNorm:
    def test_validation(self):
        with pytest.raises(ValueError):
            PNorm(0.5)
        with pytest.raises(ValueError):
            PNorm(float("nan"))
        assert PNorm(3.5).p == 3.5

    def test_formatting_and_flags(self):
        assert str(ONE) == "1" and str(TWO) == "2" and str(INF) == "inf"
        assert ONE.exact_induced and TWO.exact_induced and INF.exact_induced
        assert not PNorm(3.0).exact_induced
        assert INF.is_inf and not TWO.is_inf


class TestVectorNorm:
    def test_known_values(self):
        v = [3.0, -4.0]
        assert vector_norm(v, ONE) == 7.0
        assert vector_norm(v, TWO) == 5.0
        assert vector_norm(v, INF) == 4.0
        assert vector_norm(v, PNorm(3.0)) == pytest.approx((27 + 64) ** (1 / 3))

    def test_empty_vector_is_zero(self):
        assert vector_norm(np.array([]), TWO) == 0.0


FROZEN = np.array([[1.0, -2.0], [3.0, 4.0]])


class TestInducedNorm:
    def test_frozen_values_exact(self):
        # column sums {4, 6}, row sums {3, 7} — worked by hand
        assert induced_norm(FROZEN, ONE) == 6.0
        assert induced_norm(FROZEN, INF) == 7.0

    def test_spectral_matches_svd_oracle(self):
        assert_allclose(
            induced_norm(FROZEN, TWO), oracles.svd_spectral_norm(FROZEN), rtol=1e-11
        )

    def test_random_matrices_against_oracles(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            a = rng.normal(size=(rng.integers(1, 9), rng.integers(1, 9)))
            assert induced_norm(a, ONE) == oracles.abs_col_sum_norm(a)
            assert induced_norm(a, INF) == oracles.abs_row_sum_norm(a)
            assert_allclose(
                induced_norm(a, TWO), oracles.svd_spectral_norm(a), rtol=1e-9
            )

    def test_zero_and_rank_one(self):
        assert induced_norm(np.zeros((3, 4)), TWO) == 0.0
        a = np.outer([1.0, 2.0], [3.0, 4.0])
        assert_allclose(induced_norm(a, TWO), oracles.svd_spectral_norm(a), rtol=1e-11)

    def test_general_p_refused_with_pointer(self):
        with pytest.raises(ValueError, match="norm_upper_bound"):
            induced_norm(FROZEN, PNorm(3.0))


class TestNormUpperBound:
    def test_frozen_value(self):
        # sqrt(|A|_1 * |A|_inf) = sqrt(42)
        assert norm_upper_bound(FROZEN, TWO) == pytest.approx(math.sqrt(42.0))

    def test_dominates_empirical_action(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            a = rng.normal(size=(rng.integers(1, 8), rng.integers(1, 8)))
            for p in (PNorm(1.5), TWO, PNorm(3.0), PNorm(7.0)):
                assert norm_upper_bound(a, p) >= _holder_lower(a, p) * (1 - 1e-12)

    def test_dominates_spectral_norm_at_two(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            a = rng.normal(size=(rng.integers(1, 8), rng.integers(1, 8)))
            assert norm_upper_bound(a, TWO) >= oracles.svd_spectral_norm(a) * (1 - 1e-12)

    def test_endpoints_refused(self):
        with pytest.raises(ValueError):
            norm_upper_bound(FROZEN, ONE)
        with pytest.raises(ValueError):
            norm_upper_bound(FROZEN, INF)


def _holder_lower(a, p: PNorm) -> float:
    """Empirical lower estimate of |A|_p from random probes."""
    rng = np.random.default_rng(11)
    best = 0.0
    for _ in range(32):
        x = rng.normal(size=a.shape[1])
        nx = vector_norm(x, p)
        if nx > 0:
            best = max(best, vector_norm(a @ x, p) / nx)
    return best


class TestPaddingPreservesNorms:
    @pytest.mark.parametrize("p", [ONE, TWO, INF])
    def test_square_padding(self, p):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.normal(size=(rng.integers(1, 6), rng.integers(1, 6)))
            big = zero_pad_matrix(a, 9)
            assert big.shape == (9, 9)
            assert_allclose(induced_norm(big, p), induced_norm(a, p), rtol=1e-11)

    @pytest.mark.parametrize("p", [ONE, TWO, INF])
    def test_rows_only_padding(self, p):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(3, 5))
        big = zero_pad_matrix(a, 8, keep_cols=True)
        assert big.shape == (8, 5)
        assert_allclose(induced_norm(big, p), induced_norm(a, p), rtol=1e-11)

    def test_vector_padding_preserves_norms(self):
        v = np.array([1.0, -2.0, 2.0])
        w = zero_pad_vector(v, 7)
        for p in (ONE, TWO, INF, PNorm(4.0)):
            assert vector_norm(w, p) == vector_norm(v, p)

    def test_rejects_shrinking(self):
        with pytest.raises(ValueError):
            zero_pad_matrix(np.ones((3, 3)), 2)
        with pytest.raises(ValueError):
            extend_vector(np.ones(4), 3)

    def test_extend_vector_fill(self):
        out = extend_vector([1.0, 2.0], 4, fill=0.5)
        assert_array_equal(out, [1.0, 2.0, 0.5, 0.5])
        assert not out.flags.writeable


class TestValidatedContainers:
    def test_as_vector_rejects_bad_input(self):
        with pytest.raises(ValueError):
            as_vector([[1.0, 2.0]])
        with pytest.raises(ValueError):
            as_vector([])
        with pytest.raises(ValueError, match="finite"):
            as_vector([1.0, float("inf")])

    def test_as_matrix_rejects_bad_input(self):
        with pytest.raises(ValueError):
            as_matrix([1.0, 2.0])
        with pytest.raises(ValueError, match="finite"):
            as_matrix([[float("nan")]])

    def test_results_are_frozen_copies(self):
        src = np.ones(3)
        v = as_vector(src)
        src[0] = 99.0
        assert v[0] == 1.0
        with pytest.raises(ValueError):
            v[0] = 5.0


class TestEventuallyConstSeq:
    def test_indexing_and_truncation(self):
        s = EventuallyConstSeq([1.0, 2.0], 0.25)
        assert s.value_at(0) == 1.0
        assert s.value_at(5) == 0.25
        assert_array_equal(s.truncated(4), [1.0, 2.0, 0.25, 0.25])
        with pytest.raises(IndexError):
            s.value_at(-1)

    def test_norms(self):
        s = EventuallyConstSeq([1.0, -3.0], 0.5)
        assert s.norm(INF) == 3.0
        assert s.norm(TWO) == math.inf  # nonzero tail is not in l_2
        assert not s.in_lp(TWO) and s.in_lp(INF)
        z = EventuallyConstSeq([1.0, -3.0], 0.0)
        assert z.norm(TWO) == math.sqrt(10.0)

    def test_empty_head(self):
        s = EventuallyConstSeq(np.array([]), 2.0)
        assert s.head_len == 0
        assert s.value_at(0) == 2.0
        assert s.norm(INF) == 2.0

    def test_add_sub_align_heads(self):
        a = EventuallyConstSeq([1.0, 2.0, 3.0], 1.0)
        b = EventuallyConstSeq([10.0], -1.0)
        d = a - b
        # b reads (10, -1, -1, -1, ...), so a - b = (-9, 3, 4, 2, 2, ...)
        assert_array_equal(d.truncated(5), [-9.0, 3.0, 4.0, 2.0, 2.0])
        assert d.tail == 2.0
        s = a + b
        assert s.tail == 0.0
        assert s.norm(TWO) == math.sqrt(11.0**2 + 1.0 + 4.0)


class TestBandedToeplitz:
    def test_frozen_dense_expansion(self):
        t = toeplitz_from_mask([1.0, 2.0], 3)
        assert_array_equal(
            t.to_dense(),
            [[1.0, 0.0, 0.0], [2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]],
        )
        assert t.out_rows == 4 and t.tau == 1

    def test_dense_matches_entrywise_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            mask = rng.normal(size=rng.integers(1, 5))
            cols = int(rng.integers(1, 7))
            t = toeplitz_from_mask(mask, cols)
            assert_array_equal(t.to_dense(), oracles.toeplitz_window(mask, cols + t.tau, cols))

    def test_semi_infinite_refusals(self):
        semi = constant_padded_toeplitz([0.5, 0.25])
        with pytest.raises(ValueError):
            semi.to_dense()
        with pytest.raises(ValueError):
            _ = semi.out_rows
        finite = toeplitz_from_mask([0.5, 0.25], 4)
        with pytest.raises(ValueError, match="induced_norm"):
            toeplitz_norms(finite, ONE)

    def test_semi_infinite_norms_equal_mask_sum(self):
        mask = [0.2, -0.3]
        semi = constant_padded_toeplitz(mask)
        assert toeplitz_norms(semi, ONE) == 0.5
        assert toeplitz_norms(semi, INF) == 0.5
        # a window with every column fully inside the band reproduces it
        window = semi.dense_truncation(20, 14)
        assert induced_norm(window, ONE) == 0.5
        assert induced_norm(window, INF) == 0.5


class TestApplyBanded:
    def test_frozen_example(self):
        t = constant_padded_toeplitz([1.0, 1.0])
        out = apply_banded(t, EventuallyConstSeq([1.0], 0.0))
        assert_array_equal(out.head, [1.0, 1.0])
        assert out.tail == 0.0

    def test_constant_sequence_reaches_mask_sum(self):
        t = constant_padded_toeplitz([0.5, 0.25, 0.125])
        out = apply_banded(t, EventuallyConstSeq(np.array([]), 2.0))
        # rows see progressively more of the mask: 0.5*2, (0.5+0.25)*2, ...
        assert_allclose(out.truncated(4), [1.0, 1.5, 1.75, 1.75], rtol=0, atol=0)
        assert out.tail == 1.75

    def test_matches_dense_window(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            mask = rng.normal(size=rng.integers(1, 5))
            head = rng.normal(size=rng.integers(0, 6))
            tail = float(rng.normal())
            t = constant_padded_toeplitz(mask)
            x = EventuallyConstSeq(head, tail)
            out = apply_banded(t, x)
            rows = out.head_len
            cols = rows + len(mask)  # wide enough that every row is complete
            window = t.dense_truncation(rows, cols)
            expect = np.array(
                [seq_sum(window[i] * x.truncated(cols)) for i in range(rows)]
            )
            assert_allclose(out.head, expect, rtol=1e-13, atol=1e-13)

    def test_zero_tail_matches_full_convolution(self):
        mask = [1.0, -0.5, 0.25]
        x = [2.0, 0.0, 1.0, -3.0]
        out = apply_banded(constant_padded_toeplitz(mask), EventuallyConstSeq(x, 0.0))
        assert_allclose(out.head, oracles.conv_full(mask, x), rtol=1e-14, atol=1e-14)
        assert out.tail == 0.0

    def test_requires_semi_infinite_form(self):
        with pytest.raises(ValueError):
            apply_banded(toeplitz_from_mask([1.0], 2), EventuallyConstSeq([1.0], 0.0))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=5),
    st.lists(st.floats(-5, 5), min_size=1, max_size=6),
    st.floats(-2, 2),
)
def test_apply_banded_tail_is_mask_sum_times_tail(mask, head, tail):
    out = apply_banded(constant_padded_toeplitz(mask), EventuallyConstSeq(head, tail))
    assert out.tail == pytest.approx(seq_sum(mask) * tail, rel=1e-12, abs=1e-12)
    assert out.head_len == len(head) + len(mask) - 1


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 5),
    st.integers(1, 5),
    st.sampled_from([1.0, 2.0, math.inf]),
    st.integers(0, 2**31 - 1),
)
def test_induced_norm_dominates_action(rows, cols, p_raw, seed):
    """|A x|_p <= |A|_p |x|_p — the defining property of the induced norm."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-3, 3, (rows, cols))
    x = rng.uniform(-3, 3, cols)
    p = PNorm(p_raw)
    lhs = vector_norm(matvec(a, x), p)
    rhs = induced_norm(a, p) * vector_norm(x, p)
    assert lhs <= rhs * (1 + 1e-10) + 1e-12
