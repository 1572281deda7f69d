"""Input validation helpers for the estimator-facing API."""

import numpy as np


def check_matrix_covariates(X, matrix_shape=None):
    """Coerce covariates to a finite float array of shape (n, m1, m2).

    Accepts 3-D input directly, or 2-D input of flattened row-major matrices
    together with ``matrix_shape``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if matrix_shape is None:
            raise ValueError(
                "2-D covariates need matrix_shape=(m1, m2) to recover matrices"
            )
        m1, m2 = matrix_shape
        if X.shape[1] != m1 * m2:
            raise ValueError(
                f"flattened covariates have {X.shape[1]} columns, expected {m1 * m2}"
            )
        X = X.reshape(X.shape[0], m1, m2)
    elif X.ndim != 3:
        raise ValueError(f"covariates must be 2-D or 3-D, got ndim={X.ndim}")
    if matrix_shape is not None and tuple(X.shape[1:]) != tuple(matrix_shape):
        raise ValueError(
            f"covariate matrices are {X.shape[1:]}, expected {tuple(matrix_shape)}"
        )
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    if not np.all(np.isfinite(X)):
        raise ValueError("covariates must be finite")
    return X


def check_binary_responses(y, n):
    """Coerce responses to a uint8 {0,1} vector of length ``n``."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise ValueError(f"responses must be a length-{n} vector")
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"responses must be binary 0/1, got values {vals}")
    return y.astype(np.uint8)
