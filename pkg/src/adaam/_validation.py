"""Shared input checks for array arguments."""

import numpy as np


def as_float_matrix(X, name="X"):
    """Coerce to a 2-d float64 array, rejecting non-finite values."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_square_symmetric(S, name="S", rel_tol=1e-10):
    """Coerce to a square symmetric float64 matrix.

    Symmetry is checked relative to the largest magnitude entry so that
    matrices assembled from floating-point products pass, while genuinely
    asymmetric input is rejected.
    """
    S = as_float_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    scale = float(np.abs(S).max()) if S.size else 0.0
    if scale > 0.0:
        asym = float(np.abs(S - S.T).max())
        if asym > rel_tol * scale:
            raise ValueError(
                f"{name} is not symmetric (max asymmetry {asym:.3g} "
                f"vs scale {scale:.3g})"
            )
    return S


def as_vector(v, name="v"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v
