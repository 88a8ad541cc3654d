import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaam.graph import (
    SparseAffinity,
    SparsityBudgetWarning,
    affinity_quadratic,
    degree,
    knn_heat_kernel,
    laplacian_quadratic,
    sparsify_top_t,
    top_t_budget,
)
from oracles import greedy_sparsify


def random_signed_symmetric(rng, n):
    A = rng.standard_normal((n, n))
    A = 0.5 * (A + A.T)
    np.fill_diagonal(A, rng.standard_normal(n))
    return A


class TestSparseAffinity:
    def test_dense_round_trip(self):
        rng = np.random.default_rng(0)
        M = random_signed_symmetric(rng, 7)
        aff = SparseAffinity.from_dense(M)
        assert np.allclose(aff.to_dense(), M)

    def test_zero_weights_dropped(self):
        aff = SparseAffinity(3, [0, 0], [1, 2], [0.0, 2.0])
        assert aff.w.size == 1
        assert aff.nnz_cells() == 2

    def test_nnz_counts_pairs_twice_and_diag_once(self):
        aff = SparseAffinity(4, [0, 1], [2, 3], [1.0, -1.0], diag=[1.0, 0.0, 0.0, 2.0])
        assert aff.nnz_cells() == 2 * 2 + 2

    def test_rejects_lower_triangle_and_duplicates(self):
        with pytest.raises(ValueError):
            SparseAffinity(3, [1], [0], [1.0])
        with pytest.raises(ValueError):
            SparseAffinity(3, [0], [0], [1.0])
        with pytest.raises(ValueError):
            SparseAffinity(3, [0, 0], [1, 1], [1.0, 2.0])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SparseAffinity(3, [0], [1], [np.inf])
        with pytest.raises(ValueError):
            SparseAffinity.from_dense(np.array([[0.0, np.nan], [np.nan, 0.0]]))

    def test_rejects_asymmetric_dense(self):
        M = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            SparseAffinity.from_dense(M)

    def test_add_diagonal(self):
        aff = SparseAffinity(3, [0], [1], [1.0])
        shifted = aff.add_diagonal([1.0, 2.0, 3.0])
        assert np.array_equal(shifted.diag, [1.0, 2.0, 3.0])
        assert np.array_equal(aff.diag, np.zeros(3))  # original untouched


class TestQuadraticForms:
    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_against_dense_formulas(self, n, seed):
        rng = np.random.default_rng(seed)
        M = random_signed_symmetric(rng, n)
        Y = rng.standard_normal((n, 3))
        aff = SparseAffinity.from_dense(M)
        assert np.allclose(degree(aff), M.sum(axis=1), atol=1e-10)
        assert np.allclose(affinity_quadratic(aff, Y), Y.T @ M @ Y, atol=1e-9)
        L = np.diag(M.sum(axis=1)) - M
        assert np.allclose(laplacian_quadratic(aff, Y), Y.T @ L @ Y, atol=1e-9)

    def test_laplacian_quadratic_psd_for_nonnegative_weights(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            n = int(rng.integers(3, 15))
            M = np.abs(random_signed_symmetric(rng, n))
            np.fill_diagonal(M, 0.0)
            Y = rng.standard_normal((n, 4))
            Q = laplacian_quadratic(SparseAffinity.from_dense(M), Y)
            assert np.linalg.eigvalsh(Q).min() >= -1e-10

    def test_row_count_mismatch(self):
        aff = SparseAffinity(3, [0], [1], [1.0])
        with pytest.raises(ValueError):
            affinity_quadratic(aff, np.zeros((4, 2)))


class TestHeatKernel:
    def test_basic_shape_and_range(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 5))
        W = knn_heat_kernel(X, 4).to_dense()
        assert np.array_equal(W, W.T)
        assert np.all(np.diag(W) == 0)
        assert W.min() >= 0.0 and W.max() <= 1.0
        row_nnz = (W != 0).sum(axis=1)
        assert np.all(row_nnz >= 4) and np.all(row_nnz <= 29)

    def test_hand_computed_line_graph(self):
        # three collinear points; k=1 gives edges (0,1) and (1,2) via OR-rule
        X = np.array([[0.0], [1.0], [3.0]])
        aff, bw = knn_heat_kernel(X, 1, return_bandwidth=True)
        assert bw == pytest.approx(1.5)  # mean of kept distances 1 and 2
        W = aff.to_dense()
        assert W[0, 1] == pytest.approx(math.exp(-1.0 / 1.5))
        assert W[1, 2] == pytest.approx(math.exp(-2.0 / 1.5))
        assert W[0, 2] == 0.0

    def test_unsquared_exponent_by_default(self):
        X = np.array([[0.0], [2.0]])
        W = knn_heat_kernel(X, 1, bandwidth=4.0).to_dense()
        assert W[0, 1] == pytest.approx(math.exp(-2.0 / 4.0))
        W2 = knn_heat_kernel(X, 1, bandwidth=4.0, squared=True).to_dense()
        assert W2[0, 1] == pytest.approx(math.exp(-4.0 / 4.0))

    def test_squared_auto_bandwidth_uses_squared_mean(self):
        X = np.array([[0.0], [1.0], [3.0]])
        _, bw = knn_heat_kernel(X, 1, squared=True, return_bandwidth=True)
        assert bw == pytest.approx((1.0 + 4.0) / 2.0)

    def test_distance_ties_break_to_lower_index(self):
        # unit square, k=1: every corner has two neighbors at distance 1,
        # the lower-indexed one wins, so edge (2,3) must be absent
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        W = knn_heat_kernel(X, 1).to_dense()
        present = {(i, j) for i in range(4) for j in range(i + 1, 4) if W[i, j] != 0}
        assert present == {(0, 1), (0, 2), (1, 3)}

    def test_k_out_of_range(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError):
            knn_heat_kernel(X, 0)
        with pytest.raises(ValueError):
            knn_heat_kernel(X, 4)

    def test_coincident_points_need_explicit_bandwidth(self):
        X = np.zeros((5, 3))
        with pytest.raises(ValueError):
            knn_heat_kernel(X, 2)
        W = knn_heat_kernel(X, 2, bandwidth=1.0).to_dense()
        assert W.max() == 1.0  # exp(0) for duplicate points

    def test_bad_bandwidth(self):
        X = np.array([[0.0], [1.0]])
        with pytest.raises(ValueError):
            knn_heat_kernel(X, 1, bandwidth=-1.0)
        with pytest.raises(ValueError):
            knn_heat_kernel(X, 1, bandwidth="median")


class TestBudget:
    @pytest.mark.parametrize(
        "n,c,alpha,expected",
        [
            (1440, 20, 2.5, 41472),
            (575, 20, 2.5, 6612),
            (575, 20, 5.0, 3306),
            (400, 4, 5.0, 8000),
            (10, 2, 2.5, 20),
        ],
    )
    def test_hand_computed_values(self, n, c, alpha, expected):
        assert top_t_budget(n, c, alpha) == expected

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            top_t_budget(0, 2, 2.5)
        with pytest.raises(ValueError):
            top_t_budget(10, 0, 2.5)
        with pytest.raises(ValueError):
            top_t_budget(10, 2, 0.0)


class TestSparsifier:
    def test_matches_oracle_on_random_8x8(self):
        rng = np.random.default_rng(2)
        for trial in range(40):
            M = random_signed_symmetric(rng, 8)
            c = int(rng.integers(1, 5))
            alpha = float(rng.choice([1.0, 2.5, 5.0]))
            t = top_t_budget(8, c, alpha)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SparsityBudgetWarning)
                out = sparsify_top_t(M, c, alpha).to_dense()
            assert np.array_equal(out, greedy_sparsify(M, t)), f"trial {trial}"

    def test_matches_oracle_on_random_20x20(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            M = random_signed_symmetric(rng, 20)
            out = sparsify_top_t(M, 2, 2.5).to_dense()
            assert np.array_equal(out, greedy_sparsify(M, top_t_budget(20, 2, 2.5)))

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=6))
    @settings(max_examples=60, deadline=None)
    def test_matches_oracle_with_heavy_ties(self, seed, c):
        # small integer weights force many magnitude ties, including
        # diagonal cells tied with off-diagonal pairs at the cutoff
        rng = np.random.default_rng(seed)
        M = rng.integers(-2, 3, size=(8, 8)).astype(float)
        M = np.triu(M) + np.triu(M, 1).T
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SparsityBudgetWarning)
            out = sparsify_top_t(M, c, 2.5).to_dense()
        assert np.array_equal(out, greedy_sparsify(M, top_t_budget(8, c, 2.5)))

    def test_tie_fill_takes_diagonal_at_cutoff(self):
        M = np.array([[0.0, 5.0, 4.0], [5.0, 0.0, 0.0], [4.0, 0.0, 4.0]])
        out = sparsify_top_t(M, 1, 3.0)  # t = 3
        dense = out.to_dense()
        assert dense[0, 1] == 5.0
        assert dense[2, 2] == 4.0
        assert dense[0, 2] == 0.0
        assert out.nnz_cells() == 3

    def test_leftover_budget_unfillable_below_cutoff(self):
        M = np.array([[0.0, 5.0, 4.0], [5.0, 0.0, 0.0], [4.0, 0.0, 3.0]])
        out = sparsify_top_t(M, 1, 3.0)  # t = 3 but only the top pair fits
        dense = out.to_dense()
        assert dense[0, 1] == 5.0
        assert dense[2, 2] == 0.0
        assert out.nnz_cells() == 2

    def test_kept_magnitudes_dominate_dropped(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            M = random_signed_symmetric(rng, 9)
            out = sparsify_top_t(M, 2, 2.5).to_dense()
            dropped = M[out == 0.0]
            kept = out[out != 0.0]
            if kept.size and dropped.size:
                assert np.abs(kept).min() >= np.abs(dropped).max() - 1e-15

    def test_budget_never_exceeded(self):
        rng = np.random.default_rng(6)
        M = random_signed_symmetric(rng, 10)
        for c, alpha in [(1, 2.5), (2, 2.5), (3, 5.0)]:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SparsityBudgetWarning)
                out = sparsify_top_t(M, c, alpha)
            assert out.nnz_cells() <= top_t_budget(10, c, alpha)

    def test_pairs_kept_atomically(self):
        rng = np.random.default_rng(7)
        M = random_signed_symmetric(rng, 12)
        out = sparsify_top_t(M, 2, 2.5).to_dense()
        assert np.array_equal(out, out.T)

    def test_small_budget_warns(self):
        M = np.eye(6)
        with pytest.warns(SparsityBudgetWarning):
            sparsify_top_t(M, 3, 4.0)  # t = 3 < n = 6

    def test_budget_covering_everything_keeps_everything(self):
        rng = np.random.default_rng(9)
        M = random_signed_symmetric(rng, 6)
        out = sparsify_top_t(M, 1, 1.0).to_dense()  # t = 36 cells
        assert np.array_equal(out, M)

    def test_accepts_sparse_input(self):
        aff = SparseAffinity(4, [0, 1], [1, 2], [3.0, -4.0], diag=[0.5, 0, 0, 0])
        out = sparsify_top_t(aff, 1, 4.0)  # t = 4: both pairs, no diagonal
        dense = out.to_dense()
        assert dense[1, 2] == -4.0 and dense[0, 1] == 3.0
        assert dense[0, 0] == 0.0
