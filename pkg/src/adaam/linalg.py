"""Dense spectral primitives.

Symmetric eigendecomposition, generalized symmetric eigendecomposition with
an explicit regularization policy for near-singular constraint matrices, and
a thin SVD that always goes through the smaller Gram matrix so the cost is
cubic in min(n, d) rather than max(n, d).

Every factorization is deterministic for a fixed input: eigenvectors and
singular vectors follow a sign convention (largest-magnitude component
positive, ties toward the lowest index) and all BLAS work runs on a pinned
single-threaded schedule.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
import scipy.linalg

from ._threads import pinned_blas
from ._validation import as_float_matrix, as_square_symmetric

_EPS = float(np.finfo(np.float64).eps)


class NotPositiveSemidefinite(ValueError):
    """Constraint matrix has negative eigenvalue mass beyond tolerance."""


class EigenPairs(NamedTuple):
    """Eigenvalues in ascending order with column-aligned eigenvectors.

    ``shift`` is the diagonal regularization that was added to the
    constraint matrix of a generalized problem (0.0 when none was needed,
    and always 0.0 for the plain symmetric case).
    """

    values: np.ndarray
    vectors: np.ndarray
    shift: float = 0.0


class ThinSvd(NamedTuple):
    """Rank-r factors X ~ left @ diag(singular) @ right.T.

    ``singular`` is descending and nonnegative; both factor matrices have
    orthonormal columns.
    """

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-magnitude entry is positive.

    Ties at equal magnitude resolve toward the lowest row index (argmax
    returns the first occurrence). Exact zero columns are left untouched.
    """
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


@pinned_blas
def symmetric_eig(S) -> EigenPairs:
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    S : array-like, shape (dim, dim)
        Symmetric matrix (checked relative to its largest entry).

    Returns
    -------
    EigenPairs
        Ascending eigenvalues and sign-normalized orthonormal eigenvectors.
    """
    S = as_square_symmetric(S, "S")
    S = 0.5 * (S + S.T)
    values, vectors = np.linalg.eigh(S)
    return EigenPairs(values, fix_signs(vectors))


@pinned_blas
def generalized_symmetric_eig(S, B) -> EigenPairs:
    """Solve S v = lambda B v for symmetric S and positive semidefinite B.

    Eigenvalues come back ascending and eigenvectors are B-orthonormal
    (v.T @ B_reg @ v = 1). A singular but PSD constraint matrix is
    regularized in place: when lambda_min(B) < 1e-10 * tr(B)/dim, the
    problem is solved with B + eps*I for eps = 1e-8 * tr(B)/dim (plus
    whatever tiny extra is needed to clear a tolerated negative
    lambda_min), and the applied shift is reported on the result.

    Raises
    ------
    NotPositiveSemidefinite
        If lambda_min(B) < -1e-8 * tr(B)/dim.
    """
    S = as_square_symmetric(S, "S")
    B = as_square_symmetric(B, "B")
    if S.shape != B.shape:
        raise ValueError(f"shape mismatch: S is {S.shape}, B is {B.shape}")
    S = 0.5 * (S + S.T)
    B = 0.5 * (B + B.T)
    dim = B.shape[0]

    b_min = float(np.linalg.eigvalsh(B)[0])
    trace = float(np.trace(B))
    scale = trace / dim if trace > 0.0 else 1.0
    if b_min < -1e-8 * scale:
        raise NotPositiveSemidefinite(
            f"B is not positive semidefinite (lambda_min = {b_min:.3g}, "
            f"tolerance = {-1e-8 * scale:.3g})"
        )
    shift = 0.0
    if b_min < 1e-10 * scale:
        shift = 1e-8 * scale + max(0.0, -b_min)
        B = B + shift * np.eye(dim)
    values, vectors = scipy.linalg.eigh(S, B)
    return EigenPairs(values, fix_signs(vectors), shift)


@pinned_blas
def singular_values(X) -> np.ndarray:
    """All singular values of X, descending, via the smaller Gram matrix."""
    X = as_float_matrix(X, "X")
    n, d = X.shape
    gram = X.T @ X if d <= n else X @ X.T
    lam = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    return np.sqrt(np.clip(lam[::-1], 0.0, None))


def rank_from_singular_values(s, shape, rel_tol=1e-10) -> int:
    """Count singular values above the noise floor of the Gram route.

    The floor is max(rel_tol, sqrt(max(shape) * machine_eps)) relative to
    the largest singular value: eigenvalues of X.T @ X carry an absolute
    error of order eps * sigma_max**2, so singular values below roughly
    sqrt(eps) * sigma_max are indistinguishable from zero on this route.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    floor = max(rel_tol, math.sqrt(max(shape) * _EPS))
    return int(np.count_nonzero(s > floor * s[0]))


def numerical_rank(X, rel_tol=1e-10) -> int:
    """Numerical rank of X under the Gram-route noise floor."""
    X = as_float_matrix(X, "X")
    return rank_from_singular_values(singular_values(X), X.shape, rel_tol)


def _complete_columns(F: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Fill the not-``good`` columns of F with a deterministic orthonormal
    completion of the ``good`` columns.

    Each missing column takes the canonical basis vector with the largest
    residual against everything built so far (ties toward the lowest
    index), orthogonalized twice for stability and sign-normalized.
    """
    if good.all():
        return F
    n = F.shape[0]
    out = F.copy()
    basis = F[:, good]
    rownorm2 = np.square(basis).sum(axis=1)
    for idx in np.flatnonzero(~good):
        j = int(np.argmax(1.0 - rownorm2))
        v = np.zeros(n)
        v[j] = 1.0
        v -= basis @ basis[j, :]
        v -= basis @ (basis.T @ v)
        v /= np.linalg.norm(v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        out[:, idx] = v
        basis = np.column_stack([basis, v])
        rownorm2 += v * v
    return out


@pinned_blas
def thin_svd(X, r: int) -> ThinSvd:
    """Rank-r thin SVD computed from the smaller Gram matrix.

    Eigendecomposes X.T @ X when d <= n (else X @ X.T), takes the top r
    eigenpairs, and recovers the other factor as X v / sigma. Columns whose
    Gram eigenvalue sits below the noise floor max(n, d) * eps * lambda_max
    cannot be recovered that way and get a deterministic orthonormal
    completion instead (their reported sigma is still sqrt(max(lambda, 0))).

    The sign convention is keyed on the left factor: (u, v) pairs flip
    together so each recovered left column has its largest-magnitude entry
    positive; completed columns are sign-normalized independently.

    Raises
    ------
    ValueError
        If r is outside [1, min(n, d)].
    """
    X = as_float_matrix(X, "X")
    n, d = X.shape
    limit = min(n, d)
    if not 1 <= r <= limit:
        raise ValueError(f"requested rank {r} is outside [1, min(n, d) = {limit}]")

    left_is_gram = d > n
    gram = X @ X.T if left_is_gram else X.T @ X
    gram = 0.5 * (gram + gram.T)
    lam_all, vec_all = np.linalg.eigh(gram)
    lam_max = float(lam_all[-1])
    lam = lam_all[::-1][:r].copy()
    base = fix_signs(vec_all[:, ::-1][:, :r])
    singular = np.sqrt(np.clip(lam, 0.0, None))

    floor = max(n, d) * _EPS * max(lam_max, 0.0)
    good = lam > floor

    if left_is_gram:
        left = base
        right = np.zeros((d, r))
        if good.any():
            right[:, good] = (X.T @ left[:, good]) / singular[good]
        right = _complete_columns(right, good)
    else:
        right = base
        left = np.zeros((n, r))
        if good.any():
            left[:, good] = (X @ right[:, good]) / singular[good]
            flips = np.ones(int(good.sum()))
            sub = left[:, good]
            idx = np.argmax(np.abs(sub), axis=0)
            vals = sub[idx, np.arange(sub.shape[1])]
            flips[vals < 0] = -1.0
            left[:, good] = sub * flips
            right[:, good] = right[:, good] * flips
        left = _complete_columns(left, good)
    return ThinSvd(left, singular, right)
