"""Scikit-learn compatible estimators wrapping the functional pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import core
from .core import center, default_neighbors, fit_adaam
from .graph import knn_heat_kernel
from .lpp import lpp, metric_of


class AdaAM(BaseEstimator, TransformerMixin):
    """Adaptive affinity matrix metric learner.

    Learns a linear projection ``projection_`` (d, n_components) and the
    Mahalanobis metric ``metric_ = projection_ @ projection_.T`` from
    unlabeled data by alternating a low-rank signed affinity estimate with
    a spectral projection step, then extracting the final map through a
    locality preserving projection. ``transform`` maps data into the
    learned space; Euclidean distances there are the metric's distances.

    Parameters
    ----------
    n_clusters : int, default=2
        Cluster count the metric should expose (drives the defaults of
        the graph size and projection dimension).
    n_neighbors : int or None
        Heat kernel graph neighbors; None means round(log2(n / c)).
    n_components : int or None
        Projection dimension; None means n_clusters.
    alpha1, alpha2 : float
        Sparsity factors of the intermediate and final affinities.
    bandwidth : "auto" or positive float
        Heat kernel bandwidth ("auto": mean retained edge distance).
    squared_kernel : bool
        Use squared Euclidean distances in the kernel exponent.
    iterations : int
        Projection / affinity re-estimation passes.

    Attributes
    ----------
    projection_ : ndarray of shape (n_features, n_components)
    metric_ : ndarray of shape (n_features, n_features)
    column_means_ : ndarray of shape (n_features,)
    bandwidth_ : float
        Resolved kernel bandwidth.
    model_ : AdaamModel
        Full fitted state (serializable via save/load).
    """

    def __init__(self, n_clusters=2, n_neighbors=None, n_components=None,
                 alpha1=2.5, alpha2=5.0, bandwidth="auto",
                 squared_kernel=False, iterations=1):
        self.n_clusters = n_clusters
        self.n_neighbors = n_neighbors
        self.n_components = n_components
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.bandwidth = bandwidth
        self.squared_kernel = squared_kernel
        self.iterations = iterations

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        model = fit_adaam(
            X,
            self.n_clusters,
            k=self.n_neighbors,
            m=self.n_components,
            iterations=self.iterations,
            alpha1=self.alpha1,
            alpha2=self.alpha2,
            bandwidth=self.bandwidth,
            squared_kernel=self.squared_kernel,
        )
        self._adopt(model)
        return self

    def _adopt(self, model: core.AdaamModel):
        self.model_ = model
        self.projection_ = model.projection
        self.metric_ = model.metric
        self.column_means_ = model.column_means
        self.bandwidth_ = model.bandwidth
        self.n_features_in_ = model.d

    def transform(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return core.transform(self.model_, X)

    def save(self, path) -> None:
        """Serialize the fitted state as JSON."""
        check_is_fitted(self, "model_")
        core.save_model(self.model_, path)

    @classmethod
    def load(cls, path) -> "AdaAM":
        """Rebuild a fitted estimator from a saved model file."""
        model = core.load_model(path)
        est = cls(
            n_clusters=model.c,
            n_neighbors=model.k,
            n_components=model.m,
            alpha1=model.alpha1,
            alpha2=model.alpha2,
            bandwidth=model.bandwidth,
            iterations=model.iterations,
        )
        est._adopt(model)
        return est


class HeatKernelLPP(BaseEstimator, TransformerMixin):
    """Locality preserving projection baseline over a k-NN heat kernel.

    Same graph construction and defaults as :class:`AdaAM` but the
    projection comes straight from the kernel graph, with no adaptive
    affinity. Useful as the reference point the adaptive method is
    supposed to beat.
    """

    def __init__(self, n_clusters=2, n_neighbors=None, n_components=None,
                 bandwidth="auto", squared_kernel=False):
        self.n_clusters = n_clusters
        self.n_neighbors = n_neighbors
        self.n_components = n_components
        self.bandwidth = bandwidth
        self.squared_kernel = squared_kernel

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        n, d = X.shape
        if not 1 <= self.n_clusters <= n:
            raise ValueError(
                f"n_clusters must be in [1, n = {n}], got {self.n_clusters}"
            )
        k = self.n_neighbors
        if k is None:
            k = default_neighbors(n, self.n_clusters)
        m = self.n_components if self.n_components is not None else self.n_clusters

        Xc, means = center(X)
        W, bw = knn_heat_kernel(Xc, k, self.bandwidth,
                                squared=self.squared_kernel,
                                return_bandwidth=True)
        proj = lpp(Xc, W, m)
        self.projection_ = proj.matrix
        self.eigenvalues_ = proj.eigenvalues
        self.metric_ = metric_of(proj.matrix)
        self.column_means_ = means
        self.bandwidth_ = bw
        self.k_ = int(k)
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "projection_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns but the projection was fit "
                f"with {self.n_features_in_}"
            )
        return (X - self.column_means_) @ self.projection_
