"""Locality preserving projection over an arbitrary signed affinity.

Solves X.T L' X a = lambda X.T D' X a for the m smallest eigenvalues,
where D' holds the (possibly negative) degrees of the affinity and
L' = D' - Aff. Columns of the returned matrix are constraint-orthonormal.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._threads import pinned_blas
from ._validation import as_float_matrix
from .graph import SparseAffinity, degree, laplacian_quadratic
from .linalg import (NotPositiveSemidefinite, fix_signs,
                     generalized_symmetric_eig, rank_from_singular_values,
                     singular_values, thin_svd)


class LppProjection(NamedTuple):
    """Projection matrix (d, m), ascending eigenvalues, and the applied
    regularization: ``b_shift`` is the epsilon added to the constraint
    matrix, ``degree_shift`` the uniform self-loop weight added when the
    signed degrees made the constraint indefinite (both 0.0 when unused).
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    b_shift: float
    degree_shift: float


def _diag_quadratic(dvec: np.ndarray, Y: np.ndarray) -> np.ndarray:
    B = Y.T @ (dvec[:, None] * Y)
    return 0.5 * (B + B.T)


@pinned_blas
def lpp(X, aff: SparseAffinity, m: int) -> LppProjection:
    """Fit a locality preserving projection.

    The pencil is solved on the row space of X: when X is rank deficient
    (always the case for d > n), both sides share the null space of X and
    regularizing would surface meaningless zero directions first, so the
    problem is reduced with an orthonormal row-space basis and the
    solution is mapped back. For full-rank X this is the plain pencil.

    A constraint matrix that fails positive semidefiniteness (possible
    when the signed degrees have negative mass) is retried once with
    uniform self-loops of weight |min degree| + eps added to the affinity,
    which leaves L' unchanged and is recorded as ``degree_shift``.

    Raises
    ------
    ValueError
        On shape mismatch, m outside [1, rank(X)], or numerically zero X.
    """
    X = as_float_matrix(X, "X")
    n, d = X.shape
    if aff.n != n:
        raise ValueError(f"affinity has n = {aff.n} but X has {n} rows")
    rank = rank_from_singular_values(singular_values(X), X.shape)
    if rank == 0:
        raise ValueError("X is numerically zero; no projection exists")
    if not 1 <= m <= rank:
        raise ValueError(
            f"m must be in [1, rank(X) = {rank}], got {m}"
        )

    if rank < d:
        basis = thin_svd(X, rank).right
        Xw = X @ basis
    else:
        basis = None
        Xw = X

    d_signed = degree(aff)
    S = laplacian_quadratic(aff, Xw)
    degree_shift = 0.0
    try:
        pairs = generalized_symmetric_eig(S, _diag_quadratic(d_signed, Xw))
    except NotPositiveSemidefinite:
        scale = max(float(np.abs(d_signed).mean()), 1.0)
        degree_shift = abs(float(d_signed.min())) + 1e-8 * scale
        pairs = generalized_symmetric_eig(
            S, _diag_quadratic(d_signed + degree_shift, Xw)
        )

    A = pairs.vectors[:, :m]
    if basis is not None:
        A = fix_signs(basis @ A)
    return LppProjection(A, pairs.values[:m].copy(), pairs.shift, degree_shift)


def metric_of(A) -> np.ndarray:
    """Input-space Mahalanobis matrix of a projection A (d, m): M = A @ A.T.

    The quadratic form (x - y) @ M @ (x - y) equals the squared Euclidean
    distance between the projected points, so M is PSD with rank <= m.
    """
    A = as_float_matrix(A, "A")
    return A @ A.T
