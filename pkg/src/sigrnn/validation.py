"""Input validation helpers for the estimator layer."""

from __future__ import annotations

import numpy as np


def check_sequence_array(X, name: str = "X") -> np.ndarray:
    """Coerce to a float array of shape (n_sequences, n_steps, n_channels).

    Accepts a 3-D array or a list of equally shaped 2-D arrays; a 2-D input
    is read as a single batch of univariate sequences (n, T) -> (n, T, 1).
    """
    if isinstance(X, (list, tuple)):
        arrays = [np.atleast_2d(np.asarray(x, dtype=float)) for x in X]
        shapes = {a.shape for a in arrays}
        if len(shapes) != 1:
            raise ValueError(f"{name}: sequences must share one shape, got {shapes}")
        X = np.stack(arrays)
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise ValueError(f"{name} must be (n_sequences, n_steps, n_channels), got {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_binary_labels(y, n: int):
    """Validate a two-class label vector; returns (y, sorted class values)."""
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    classes = np.unique(y)
    if len(classes) != 2:
        raise ValueError(f"need exactly 2 classes, got {classes}")
    return y, classes
