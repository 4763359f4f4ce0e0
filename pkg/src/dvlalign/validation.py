"""Input checks shared by the estimators."""
import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import LengthMismatch, ShapeMismatch


def check_windows(X, min_len=2):
    """Validate a stack of ``(n, W, 6)`` velocity windows and return float64."""
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64,
                    ensure_all_finite=True, ensure_min_samples=1)
    if X.ndim != 3 or X.shape[2] != 6:
        raise ShapeMismatch(f"expected windows of shape (n, W, 6), got {X.shape}")
    if X.shape[1] < min_len:
        raise ShapeMismatch(f"windows need at least {min_len} epochs")
    return X


def check_labels(y, n=None):
    """Validate ``(n, 3)`` Euler labels in degrees."""
    y = check_array(y, dtype=np.float64, ensure_all_finite=True)
    if y.shape[1] != 3:
        raise ShapeMismatch(f"labels must be (n, 3), got {y.shape}")
    if n is not None and len(y) != n:
        raise LengthMismatch(f"{len(y)} labels for {n} windows")
    return y
