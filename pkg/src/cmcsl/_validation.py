"""Input validation helpers shared by the estimators and the experiment engine."""

import numpy as np
from sklearn.utils.validation import check_array


class DataError(ValueError):
    """Raised when input data violates a structural or numerical invariant."""


class BudgetError(DataError):
    """Raised when a labeling budget cannot be met by the available class members."""

    def __init__(self, label, available, requested):
        self.label = int(label)
        self.available = int(available)
        self.requested = int(requested)
        super().__init__(
            f"class {self.label} has {self.available} member(s), "
            f"fewer than the requested budget of {self.requested}"
        )


def check_matrix(X, name="X"):
    """Return ``X`` as a finite 2-D float64 array."""
    try:
        return check_array(X, dtype=np.float64, ensure_all_finite=True, input_name=name)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def check_labels(y, n_samples=None, n_classes=None, name="y"):
    """Return ``y`` as a 1-D int64 vector, optionally checking length and range."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.isfinite(y)) or not np.all(np.equal(np.mod(y, 1), 0)):
            raise DataError(f"{name} must contain integer class labels")
    y = y.astype(np.int64)
    if n_samples is not None and y.shape[0] != n_samples:
        raise DataError(f"{name} has {y.shape[0]} entries, expected {n_samples}")
    if n_classes is not None and y.size and (y.min() < 0 or y.max() >= n_classes):
        raise DataError(f"{name} contains labels outside 0..{n_classes - 1}")
    return y


def check_views(views):
    """Validate a sequence of per-modality matrices sharing one instance axis."""
    views = [check_matrix(X, name=f"modality {m}") for m, X in enumerate(views)]
    if not views:
        raise DataError("at least one modality is required")
    n = views[0].shape[0]
    for m, X in enumerate(views):
        if X.shape[0] != n:
            raise DataError(
                f"modality {m} has {X.shape[0]} rows, modality 0 has {n}"
            )
    return views


def resolve_n_classes(y, n_classes=None):
    if n_classes is None:
        return int(y.max()) + 1 if y.size else 0
    return int(n_classes)


def require_all_classes(y, n_classes):
    counts = np.bincount(y, minlength=n_classes)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise DataError(f"class {int(missing[0])} is absent from the training labels")
    return counts
