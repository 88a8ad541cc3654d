"""Affinity graphs over instance points.

A :class:`SparseAffinity` stores a symmetric, possibly signed affinity
matrix as strict upper-triangle coordinates plus a dense diagonal, which is
enough for the three operations the pipeline needs: degrees, Laplacian and
affinity quadratic forms (without ever materializing a dense Laplacian),
and the global top-t magnitude sparsifier.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import as_float_matrix, as_vector


class SparsityBudgetWarning(UserWarning):
    """The top-t budget is smaller than n (fewer kept cells than rows)."""


class SparseAffinity:
    """Symmetric signed affinity with each off-diagonal pair stored once.

    Parameters
    ----------
    n : int
        Number of instances (matrix is n x n).
    i, j : array-like of int
        Strict upper-triangle coordinates, 0 <= i < j < n, no duplicates.
    w : array-like of float
        Edge weights; entries equal to exactly 0.0 are dropped so the
        structure never stores explicit zeros.
    diag : array-like of float, optional
        Dense diagonal (defaults to all zeros).
    """

    __slots__ = ("n", "i", "j", "w", "diag")

    def __init__(self, n, i=(), j=(), w=(), diag=None):
        n = int(n)
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        i = np.asarray(i, dtype=np.intp).ravel()
        j = np.asarray(j, dtype=np.intp).ravel()
        w = np.asarray(w, dtype=np.float64).ravel()
        if not (i.shape == j.shape == w.shape):
            raise ValueError("i, j, w must have matching lengths")
        if w.size:
            if not np.all(np.isfinite(w)):
                raise ValueError("weights contain non-finite values")
            if np.any(i < 0) or np.any(j >= n) or np.any(i >= j):
                raise ValueError("entries must satisfy 0 <= i < j < n")
            flat = i * n + j
            if np.unique(flat).size != flat.size:
                raise ValueError("duplicate (i, j) pairs")
        if diag is None:
            diag = np.zeros(n)
        else:
            diag = as_vector(diag, "diag").copy()
            if diag.shape[0] != n:
                raise ValueError(f"diag must have length {n}, got {diag.shape[0]}")
        keep = w != 0.0
        self.n = n
        self.i = i[keep].copy()
        self.j = j[keep].copy()
        self.w = w[keep].copy()
        self.diag = diag

    @classmethod
    def from_dense(cls, M, name="M") -> "SparseAffinity":
        """Build from a dense symmetric matrix, keeping all nonzero cells.

        Tiny asymmetry from floating-point assembly (up to 1e-8 relative)
        is symmetrized away; anything larger is rejected.
        """
        M = as_float_matrix(M, name)
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"{name} must be square, got shape {M.shape}")
        scale = float(np.abs(M).max()) if M.size else 0.0
        if scale > 0.0:
            asym = float(np.abs(M - M.T).max())
            if asym > 1e-8 * scale:
                raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3g})")
        M = 0.5 * (M + M.T)
        iu, ju = np.nonzero(np.triu(M, 1))
        return cls(M.shape[0], iu, ju, M[iu, ju], np.diag(M).copy())

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.n, self.n))
        M[self.i, self.j] = self.w
        M[self.j, self.i] = self.w
        M[np.arange(self.n), np.arange(self.n)] = self.diag
        return M

    def nnz_cells(self) -> int:
        """Logical nonzero cells of the full n x n grid.

        Each stored off-diagonal pair counts twice (both mirror cells),
        each nonzero diagonal entry once.
        """
        return 2 * int(self.w.size) + int(np.count_nonzero(self.diag))

    def add_diagonal(self, values) -> "SparseAffinity":
        """New affinity with ``values`` added to the diagonal."""
        values = as_vector(values, "values")
        if values.shape[0] != self.n:
            raise ValueError(f"values must have length {self.n}")
        return SparseAffinity(self.n, self.i, self.j, self.w, self.diag + values)

    def __repr__(self) -> str:
        return (
            f"SparseAffinity(n={self.n}, pairs={self.w.size}, "
            f"nnz_cells={self.nnz_cells()})"
        )


def degree(aff: SparseAffinity) -> np.ndarray:
    """Row sums d_i = sum_j w_ij, diagonal included. May be negative."""
    d = aff.diag.copy()
    np.add.at(d, aff.i, aff.w)
    np.add.at(d, aff.j, aff.w)
    return d


def _affinity_product(aff: SparseAffinity, Y: np.ndarray) -> np.ndarray:
    AY = aff.diag[:, None] * Y
    if aff.w.size:
        np.add.at(AY, aff.i, aff.w[:, None] * Y[aff.j])
        np.add.at(AY, aff.j, aff.w[:, None] * Y[aff.i])
    return AY


def affinity_quadratic(aff: SparseAffinity, Y) -> np.ndarray:
    """Y.T @ Aff @ Y via scatter products, symmetrized."""
    Y = as_float_matrix(Y, "Y")
    if Y.shape[0] != aff.n:
        raise ValueError(f"Y has {Y.shape[0]} rows but the affinity has n = {aff.n}")
    R = Y.T @ _affinity_product(aff, Y)
    return 0.5 * (R + R.T)


def laplacian_quadratic(aff: SparseAffinity, Y) -> np.ndarray:
    """Y.T @ (D - Aff) @ Y without materializing the Laplacian densely."""
    Y = as_float_matrix(Y, "Y")
    if Y.shape[0] != aff.n:
        raise ValueError(f"Y has {Y.shape[0]} rows but the affinity has n = {aff.n}")
    d = degree(aff)
    R = Y.T @ (d[:, None] * Y) - Y.T @ _affinity_product(aff, Y)
    return 0.5 * (R + R.T)


def knn_heat_kernel(X, k: int, bandwidth="auto", *, squared: bool = False,
                    return_bandwidth: bool = False):
    """k-nearest-neighbor heat kernel graph with OR-rule symmetrization.

    An edge (i, j) exists when j is among the k nearest neighbors of i or
    vice versa; its weight is exp(-dist(i, j) / bandwidth) with the plain
    Euclidean distance (``squared=True`` switches to the squared distance).
    Neighbor ties at equal distance resolve toward the lower index; a point
    is never its own neighbor.

    Parameters
    ----------
    X : array-like, shape (n, d)
    k : int
        Neighbors per point, 1 <= k <= n - 1.
    bandwidth : "auto" or positive float
        "auto" uses the mean distance over the retained (undirected) edges;
        with ``squared=True`` the mean of squared distances, so the
        exponent stays scale-free either way.
    return_bandwidth : bool
        Also return the resolved bandwidth as a float.

    Raises
    ------
    ValueError
        If k is out of range, the bandwidth is not positive, or all points
        coincide so the auto bandwidth is undefined (pass an explicit
        bandwidth for degenerate data).
    """
    X = as_float_matrix(X, "X")
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, n-1] = [1, {n - 1}], got {k}")

    dist = cdist(X, X)
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    order = np.argsort(masked, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), order.ravel()] = True
    adj |= adj.T

    iu, ju = np.nonzero(np.triu(adj, 1))
    edge_d = dist[iu, ju]
    if squared:
        edge_d = edge_d ** 2

    if isinstance(bandwidth, str):
        if bandwidth != "auto":
            raise ValueError(f"bandwidth must be 'auto' or a positive number, got {bandwidth!r}")
        bw = float(edge_d.mean()) if edge_d.size else 0.0
        if bw <= 0.0:
            raise ValueError(
                "auto bandwidth is undefined: all retained edges have zero "
                "length (coincident points); pass an explicit bandwidth"
            )
    else:
        bw = float(bandwidth)
        if not math.isfinite(bw) or bw <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")

    aff = SparseAffinity(n, iu, ju, np.exp(-edge_d / bw))
    return (aff, bw) if return_bandwidth else aff


def top_t_budget(n: int, c: int, alpha: float) -> int:
    """Sparsity budget t = floor(n**2 / (alpha * c)) in nonzero cells."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if c < 1:
        raise ValueError(f"c must be positive, got {c}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha}")
    return math.floor(n * n / (alpha * c))


def sparsify_top_t(aff, c: int, alpha: float) -> SparseAffinity:
    """Keep the t = floor(n^2 / (alpha c)) largest-magnitude cells.

    The ranking runs over the full n x n grid with the diagonal competing
    alongside off-diagonal cells. A symmetric pair is one candidate that
    costs two cells and is kept or dropped atomically; a diagonal cell
    costs one. Ties at the cutoff magnitude are admitted in lexicographic
    (i, j) order while they still fit, so every kept magnitude is >= every
    dropped magnitude and the kept cell count never exceeds t.

    Accepts a :class:`SparseAffinity` or a dense symmetric matrix. Emits
    :class:`SparsityBudgetWarning` when t < n.
    """
    if not isinstance(aff, SparseAffinity):
        aff = SparseAffinity.from_dense(aff, "aff")
    n = aff.n
    t = top_t_budget(n, c, alpha)
    if t < n:
        warnings.warn(
            f"top-t budget {t} is below n = {n}; the sparsified affinity "
            "cannot keep one cell per row",
            SparsityBudgetWarning,
            stacklevel=2,
        )

    diag_idx = np.flatnonzero(aff.diag)
    cell_i = np.concatenate([aff.i, diag_idx])
    cell_j = np.concatenate([aff.j, diag_idx])
    cell_w = np.concatenate([aff.w, aff.diag[diag_idx]])
    sizes = np.concatenate([
        np.full(aff.i.size, 2, dtype=np.int64),
        np.ones(diag_idx.size, dtype=np.int64),
    ])
    if cell_w.size == 0:
        return SparseAffinity(n)

    mag = np.abs(cell_w)
    order = np.lexsort((cell_j, cell_i, -mag))
    csum = np.cumsum(sizes[order])

    keep = np.zeros(cell_w.size, dtype=bool)
    fits = csum <= t
    if fits.all():
        keep[:] = True
    else:
        first_out = int(np.argmin(fits))
        keep[order[:first_out]] = True
        spent = int(csum[first_out - 1]) if first_out else 0
        if t - spent == 1:
            # only a diagonal cell at the cutoff magnitude can still fit
            cutoff = mag[order[first_out]]
            tail = order[first_out:]
            tail = tail[mag[tail] == cutoff]
            ones = tail[sizes[tail] == 1]
            if ones.size:
                keep[ones[0]] = True

    kept_pairs = keep[: aff.i.size]
    kept_diag = keep[aff.i.size:]
    diag = np.zeros(n)
    diag[diag_idx[kept_diag]] = aff.diag[diag_idx[kept_diag]]
    return SparseAffinity(n, aff.i[kept_pairs], aff.j[kept_pairs],
                          aff.w[kept_pairs], diag)
