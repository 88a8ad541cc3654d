"""The adaptive affinity pipeline.

Fitting proceeds in four spectral steps on centered data: a k-NN heat
kernel graph fixes the local geometry, a low-rank factor of the data builds
a signed intermediate affinity, the smallest eigenvectors of the combined
quadratic form give a projection whose image re-estimates the affinity, and
a locality preserving projection over the final affinity (plus the kernel
degrees) yields the linear map A (d, m) and the input-space metric
M = A @ A.T, so metric distances equal Euclidean distances between
projected points.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_float_matrix
from .graph import (SparseAffinity, degree, knn_heat_kernel,
                    laplacian_quadratic, affinity_quadratic, sparsify_top_t)
from .linalg import (rank_from_singular_values, singular_values,
                     symmetric_eig, thin_svd)
from .lpp import lpp

MODEL_FORMAT_VERSION = 1


class RankDeficiencyWarning(UserWarning):
    """Requested factor rank exceeds the numerical rank of the data."""


class Projection(NamedTuple):
    """Projection matrix (d, m) with its ascending eigenvalues."""

    matrix: np.ndarray
    eigenvalues: np.ndarray


def default_neighbors(n: int, c: int) -> int:
    """Neighbor count rule round(log2(n / c)), clamped to [1, n - 1].

    Rounding is half away from zero, so e.g. n=575, c=20 gives
    log2(28.75) = 4.845 -> 5.
    """
    if n < 2:
        raise ValueError(f"need at least 2 instances, got {n}")
    if not 1 <= c <= n:
        raise ValueError(f"c must be in [1, n], got {c}")
    k = math.floor(math.log2(n / c) + 0.5)
    return min(max(k, 1), n - 1)


def center(X):
    """Subtract column means; returns (centered X, means)."""
    X = as_float_matrix(X, "X")
    if X.shape[0] < 2:
        raise ValueError(f"need at least 2 rows to center, got {X.shape[0]}")
    means = X.mean(axis=0)
    return X - means, means


def _factor_rank(sv, shape, requested, cap, what):
    """Resolve the factor rank against the numerical rank of the data."""
    numrank = rank_from_singular_values(sv, shape)
    if numrank == 0:
        raise ValueError(
            f"{what}: data is numerically zero (rank 0); nothing to factor"
        )
    if requested is None:
        return min(cap, numrank)
    limit = min(shape)
    if not 1 <= requested <= limit:
        raise ValueError(
            f"{what}: rank {requested} is outside [1, min(n, d) = {limit}]"
        )
    if requested > numrank:
        warnings.warn(
            f"{what}: requested rank {requested} exceeds the numerical "
            f"rank {numrank}; truncating",
            RankDeficiencyWarning,
            stacklevel=3,
        )
        return numrank
    return requested


def intermediate_affinity(X, c: int, rank=None, alpha: float = 2.5, *,
                          return_factor: bool = False):
    """Signed low-rank affinity P @ P.T from the data, sparsified.

    P holds the top left singular vectors of X (rank defaults to
    min(c, numerical rank)); the dense product is then cut down to the
    floor(n^2 / (alpha c)) largest-magnitude cells. On centered data every
    column of P is orthogonal to the all-ones vector, so the unsparsified
    affinity has zero row sums.
    """
    X = as_float_matrix(X, "X")
    sv = singular_values(X)
    r = _factor_rank(sv, X.shape, rank, c, "intermediate affinity")
    P = thin_svd(X, r).left
    aff = sparsify_top_t(P @ P.T, c, alpha)
    return (aff, P) if return_factor else aff


def projection_step(X, W: SparseAffinity, delta: SparseAffinity, m: int) -> Projection:
    """Projection from the m smallest eigenvectors of X.T (L - Delta) X.

    L is the Laplacian of the kernel graph W; the signed affinity Delta
    enters with a negative sign (its own degrees vanish on centered data,
    so its Laplacian is just -Delta). Columns are unit length.
    """
    X = as_float_matrix(X, "X")
    n, d = X.shape
    if W.n != n or delta.n != n:
        raise ValueError(
            f"affinity sizes ({W.n}, {delta.n}) do not match n = {n}"
        )
    if not 1 <= m <= d:
        raise ValueError(f"m must be in [1, d = {d}], got {m}")
    G = laplacian_quadratic(W, X) - affinity_quadratic(delta, X)
    pairs = symmetric_eig(G)
    return Projection(pairs.vectors[:, :m], pairs.values[:m])


def final_affinity(X, A, c: int, rank=None, alpha: float = 5.0, *,
                   return_factor: bool = False):
    """Re-estimated affinity from the projected data X @ A, sparsified.

    Same construction as :func:`intermediate_affinity` but the factor comes
    from the image of the projection (rank defaults to min(m, numerical
    rank of X @ A)) and the default sparsity is twice as aggressive.
    """
    X = as_float_matrix(X, "X")
    A = as_float_matrix(A, "A")
    if A.shape[0] != X.shape[1]:
        raise ValueError(
            f"A has {A.shape[0]} rows but X has {X.shape[1]} columns"
        )
    Y = X @ A
    sv = singular_values(Y)
    r = _factor_rank(sv, Y.shape, rank, A.shape[1], "final affinity")
    P = thin_svd(Y, r).left
    aff = sparsify_top_t(P @ P.T, c, alpha)
    return (aff, P) if return_factor else aff


@dataclass
class AdaamModel:
    """Fitted pipeline state: projection, metric, and resolved config."""

    projection: np.ndarray
    metric: np.ndarray
    column_means: np.ndarray
    n: int
    d: int
    c: int
    k: int
    m: int
    alpha1: float
    alpha2: float
    bandwidth: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "n": int(self.n),
            "d": int(self.d),
            "c": int(self.c),
            "k": int(self.k),
            "m": int(self.m),
            "alpha1": float(self.alpha1),
            "alpha2": float(self.alpha2),
            "bandwidth": float(self.bandwidth),
            "iterations": int(self.iterations),
            "column_means": [float(v) for v in self.column_means],
            "A": [float(v) for v in self.projection.ravel(order="C")],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AdaamModel":
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(
                f"unsupported model format_version {version!r} "
                f"(expected {MODEL_FORMAT_VERSION})"
            )
        d = int(payload["d"])
        m = int(payload["m"])
        means = np.asarray(payload["column_means"], dtype=np.float64)
        if means.shape != (d,):
            raise ValueError(
                f"column_means has length {means.size}, expected d = {d}"
            )
        flat = np.asarray(payload["A"], dtype=np.float64)
        if flat.size != d * m:
            raise ValueError(
                f"A has {flat.size} entries, expected d * m = {d * m}"
            )
        A = flat.reshape(d, m)
        return cls(
            projection=A,
            metric=A @ A.T,
            column_means=means,
            n=int(payload["n"]),
            d=d,
            c=int(payload["c"]),
            k=int(payload["k"]),
            m=m,
            alpha1=float(payload["alpha1"]),
            alpha2=float(payload["alpha2"]),
            bandwidth=float(payload["bandwidth"]),
            iterations=int(payload["iterations"]),
        )


def fit_adaam(X, c: int, *, k=None, m=None, iterations: int = 1,
              alpha1: float = 2.5, alpha2: float = 5.0, bandwidth="auto",
              squared_kernel: bool = False, intermediate_rank=None,
              final_rank=None) -> AdaamModel:
    """Fit the adaptive affinity pipeline.

    Parameters
    ----------
    X : array-like, shape (n, d)
        Instance matrix (centered internally; means are kept on the model).
    c : int
        Number of clusters the metric should expose, 2 <= c <= n.
    k : int, optional
        Kernel graph neighbors; defaults to round(log2(n / c)).
    m : int, optional
        Projection dimension; defaults to c.
    iterations : int
        Projection / re-estimation passes (the affinity is re-sparsified
        with alpha2 on every pass). One pass is the default and is
        usually enough.
    alpha1, alpha2 : float
        Sparsity factors for the intermediate and final affinities.
    bandwidth : "auto" or positive float
        Heat kernel bandwidth; "auto" resolves to the mean retained edge
        distance and the resolved value is stored on the model.
    squared_kernel : bool
        Use squared Euclidean distances in the kernel exponent.
    intermediate_rank, final_rank : int, optional
        Explicit factor ranks (default min(c, rank) and min(m, rank)).
    """
    X = as_float_matrix(X, "X")
    n, d = X.shape
    if not 2 <= c <= n:
        raise ValueError(f"c must be in [2, n = {n}], got {c}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if k is None:
        k = default_neighbors(n, c)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, n-1] = [1, {n - 1}], got {k}")
    if m is None:
        m = c
    if not 1 <= m <= d:
        raise ValueError(f"m must be in [1, d = {d}], got {m}")

    Xc, means = center(X)
    W, bw = knn_heat_kernel(Xc, k, bandwidth, squared=squared_kernel,
                            return_bandwidth=True)
    deg = degree(W)
    delta = intermediate_affinity(Xc, c, intermediate_rank, alpha1)
    for _ in range(iterations):
        A = projection_step(Xc, W, delta, m).matrix
        delta = final_affinity(Xc, A, c, final_rank, alpha2)

    proj = lpp(Xc, delta.add_diagonal(deg), m)
    A = proj.matrix
    return AdaamModel(
        projection=A,
        metric=A @ A.T,
        column_means=means,
        n=n,
        d=d,
        c=c,
        k=int(k),
        m=int(m),
        alpha1=float(alpha1),
        alpha2=float(alpha2),
        bandwidth=float(bw),
        iterations=int(iterations),
    )


def transform(model: AdaamModel, X) -> np.ndarray:
    """Map rows of X into the learned space: (X - means) @ A."""
    X = as_float_matrix(X, "X")
    if X.shape[1] != model.d:
        raise ValueError(
            f"X has {X.shape[1]} columns but the model was fit with d = {model.d}"
        )
    return (X - model.column_means) @ model.projection


def save_model(model: AdaamModel, path) -> None:
    """Write the model as JSON (the metric is derived, never stored)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, allow_nan=False)
        fh.write("\n")


def load_model(path) -> AdaamModel:
    """Read a model written by :func:`save_model`; recomputes the metric."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError("model file must contain a JSON object")
    return AdaamModel.from_dict(payload)
