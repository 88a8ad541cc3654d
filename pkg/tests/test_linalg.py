import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaam.linalg import (
    NotPositiveSemidefinite,
    fix_signs,
    generalized_symmetric_eig,
    numerical_rank,
    rank_from_singular_values,
    singular_values,
    symmetric_eig,
    thin_svd,
)
from oracles import jacobi_eigh, max_principal_angle, random_orthonormal


def random_symmetric(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) * scale
    return 0.5 * (A + A.T)


def eigenvalue_groups(values, rel_gap=1e-6):
    """Split ascending eigenvalues into clusters separated by a clear gap."""
    spread = max(values[-1] - values[0], 1.0)
    groups, start = [], 0
    for k in range(1, len(values)):
        if values[k] - values[k - 1] > rel_gap * spread:
            groups.append(slice(start, k))
            start = k
    groups.append(slice(start, len(values)))
    return groups


class TestSymmetricEig:
    def test_matches_jacobi_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n = int(rng.integers(2, 13))
            S = random_symmetric(rng, n, scale=float(rng.uniform(0.1, 10)))
            pairs = symmetric_eig(S)
            ref_vals, ref_vecs = jacobi_eigh(S)
            scale = max(1.0, np.abs(ref_vals).max())
            assert np.allclose(pairs.values, ref_vals, atol=1e-8 * scale)
            for grp in eigenvalue_groups(ref_vals):
                angle = max_principal_angle(pairs.vectors[:, grp], ref_vecs[:, grp])
                assert angle <= 1e-6

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(7)
        S = random_symmetric(rng, 9)
        pairs = symmetric_eig(S)
        V, w = pairs.vectors, pairs.values
        assert np.allclose(V @ np.diag(w) @ V.T, S, atol=1e-10)
        assert np.allclose(V.T @ V, np.eye(9), atol=1e-12)

    def test_values_ascending(self):
        rng = np.random.default_rng(3)
        pairs = symmetric_eig(random_symmetric(rng, 12))
        assert np.all(np.diff(pairs.values) >= 0)

    def test_sign_convention(self):
        rng = np.random.default_rng(5)
        V = symmetric_eig(random_symmetric(rng, 8)).vectors
        for col in V.T:
            assert col[np.argmax(np.abs(col))] > 0

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        S = random_symmetric(rng, 10)
        a = symmetric_eig(S)
        b = symmetric_eig(S.copy())
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.vectors, b.vectors)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            symmetric_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_trace_and_frobenius_preserved(self, n, seed):
        S = random_symmetric(np.random.default_rng(seed), n)
        w = symmetric_eig(S).values
        assert np.isclose(w.sum(), np.trace(S), atol=1e-9 * max(1.0, abs(np.trace(S))))
        assert np.isclose(np.square(w).sum(), np.square(S).sum(), rtol=1e-10)


class TestGeneralizedEig:
    def test_identity_constraint_matches_plain(self):
        rng = np.random.default_rng(19)
        S = random_symmetric(rng, 8)
        plain = symmetric_eig(S)
        gen = generalized_symmetric_eig(S, np.eye(8))
        assert np.allclose(gen.values, plain.values, atol=1e-10)
        assert np.allclose(np.abs(gen.vectors), np.abs(plain.vectors), atol=1e-8)
        assert gen.shift == 0.0

    def test_cholesky_reduction_oracle(self):
        # with PD constraint B = R.T R, eigenvalues equal those of
        # inv(R).T S inv(R) from the plain symmetric solver
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(2, 10))
            S = random_symmetric(rng, n)
            F = rng.standard_normal((n, n))
            B = F @ F.T + n * np.eye(n)
            gen = generalized_symmetric_eig(S, B)
            R = np.linalg.cholesky(B)
            ref = np.linalg.eigvalsh(np.linalg.solve(R, np.linalg.solve(R, S).T).T)
            assert np.allclose(gen.values, ref, atol=1e-8 * max(1.0, np.abs(ref).max()))

    def test_b_orthonormal_columns(self):
        rng = np.random.default_rng(29)
        S = random_symmetric(rng, 7)
        F = rng.standard_normal((7, 7))
        B = F @ F.T + np.eye(7)
        gen = generalized_symmetric_eig(S, B)
        assert np.allclose(gen.vectors.T @ B @ gen.vectors, np.eye(7), atol=1e-8)

    def test_residuals(self):
        rng = np.random.default_rng(31)
        S = random_symmetric(rng, 9)
        F = rng.standard_normal((9, 9))
        B = F @ F.T + np.eye(9)
        gen = generalized_symmetric_eig(S, B)
        res = S @ gen.vectors - B @ gen.vectors * gen.values
        assert np.abs(res).max() <= 1e-7 * max(1.0, np.abs(S).max())

    def test_singular_psd_constraint_is_regularized(self):
        rng = np.random.default_rng(37)
        S = random_symmetric(rng, 6)
        F = rng.standard_normal((6, 2))
        B = F @ F.T  # rank 2, PSD
        gen = generalized_symmetric_eig(S, B)
        assert gen.shift > 0.0
        Breg = B + gen.shift * np.eye(6)
        assert np.allclose(gen.vectors.T @ Breg @ gen.vectors, np.eye(6), atol=1e-6)

    def test_indefinite_constraint_rejected(self):
        S = np.eye(3)
        B = np.diag([1.0, 1.0, -0.5])
        with pytest.raises(NotPositiveSemidefinite):
            generalized_symmetric_eig(S, B)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            generalized_symmetric_eig(np.eye(3), np.eye(4))


class TestThinSvd:
    @pytest.mark.parametrize("n,d", [(12, 7), (7, 12), (10, 10)])
    def test_matches_lapack_svd(self, n, d):
        rng = np.random.default_rng(n * 100 + d)
        X = rng.standard_normal((n, d))
        r = min(n, d)
        fact = thin_svd(X, r)
        ref = np.linalg.svd(X, compute_uv=False)
        assert np.allclose(fact.singular, ref, atol=1e-8 * ref[0])
        assert np.allclose(fact.left @ np.diag(fact.singular) @ fact.right.T, X, atol=1e-8)

    def test_left_factor_spans_gram_eigenvectors(self):
        rng = np.random.default_rng(101)
        for _ in range(20):
            n = int(rng.integers(3, 21))
            d = int(rng.integers(3, 21))
            X = rng.standard_normal((n, d))
            r = int(rng.integers(1, min(n, d) + 1))
            fact = thin_svd(X, r)
            lam, vecs = np.linalg.eigh(X @ X.T)
            top = vecs[:, ::-1][:, :r]
            # only comparable when the subspace is well separated
            if r < min(n, d) and lam[::-1][r - 1] - lam[::-1][r] < 1e-6 * lam[-1]:
                continue
            assert max_principal_angle(fact.left, top) <= 1e-6

    def test_orthonormal_factors(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((9, 15))
        fact = thin_svd(X, 6)
        assert np.allclose(fact.left.T @ fact.left, np.eye(6), atol=1e-10)
        assert np.allclose(fact.right.T @ fact.right, np.eye(6), atol=1e-10)

    def test_rank_deficient_input_still_orthonormal(self):
        rng = np.random.default_rng(17)
        X = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 8))
        fact = thin_svd(X, 5)
        assert np.all(fact.singular[:2] > 1.0e-6)
        assert np.allclose(fact.singular[2:], 0.0, atol=1e-6 * fact.singular[0])
        assert np.allclose(fact.left.T @ fact.left, np.eye(5), atol=1e-8)
        assert np.allclose(fact.right.T @ fact.right, np.eye(5), atol=1e-8)

    def test_sign_keyed_on_left(self):
        rng = np.random.default_rng(41)
        for shape in [(8, 14), (14, 8)]:
            X = rng.standard_normal(shape)
            fact = thin_svd(X, 4)
            for col in fact.left.T:
                assert col[np.argmax(np.abs(col))] > 0

    def test_deterministic(self):
        rng = np.random.default_rng(43)
        X = rng.standard_normal((11, 6))
        a = thin_svd(X, 4)
        b = thin_svd(X.copy(), 4)
        assert np.array_equal(a.left, b.left)
        assert np.array_equal(a.singular, b.singular)
        assert np.array_equal(a.right, b.right)

    def test_rank_bounds(self):
        X = np.ones((4, 3))
        with pytest.raises(ValueError):
            thin_svd(X, 0)
        with pytest.raises(ValueError):
            thin_svd(X, 4)


class TestRanksAndValues:
    def test_singular_values_match_lapack(self):
        rng = np.random.default_rng(53)
        for shape in [(6, 11), (11, 6), (7, 7)]:
            X = rng.standard_normal(shape)
            ref = np.linalg.svd(X, compute_uv=False)
            got = singular_values(X)
            assert np.allclose(got, ref, atol=1e-9 * ref[0])

    def test_numerical_rank_emphatic_cases(self):
        rng = np.random.default_rng(59)
        X = rng.standard_normal((12, 3)) @ rng.standard_normal((3, 9))
        assert numerical_rank(X) == 3
        assert numerical_rank(np.zeros((5, 4))) == 0
        assert numerical_rank(np.eye(6)) == 6

    def test_rank_from_singular_values_edges(self):
        assert rank_from_singular_values(np.array([]), (3, 3)) == 0
        assert rank_from_singular_values(np.array([0.0, 0.0]), (3, 3)) == 0
        assert rank_from_singular_values(np.array([5.0, 1e-16]), (4, 4)) == 1


class TestFixSigns:
    def test_idempotent_and_norm_preserving(self):
        rng = np.random.default_rng(61)
        V = rng.standard_normal((7, 5))
        W = fix_signs(V)
        assert np.array_equal(fix_signs(W), W)
        assert np.allclose(np.linalg.norm(W, axis=0), np.linalg.norm(V, axis=0))

    def test_tie_resolves_to_lowest_index(self):
        col = np.array([[-0.5], [0.5]])
        out = fix_signs(col)
        assert out[0, 0] == 0.5 and out[1, 0] == -0.5

    def test_zero_column_untouched(self):
        V = np.zeros((3, 2))
        V[:, 1] = [0.0, -1.0, 0.5]
        out = fix_signs(V)
        assert np.array_equal(out[:, 0], np.zeros(3))
        assert out[1, 1] == 1.0


def test_orthonormal_helper_is_orthonormal():
    Q = random_orthonormal(np.random.default_rng(0), 9, 4)
    assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-12)
