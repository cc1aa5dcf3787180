"""Per-modality feature preprocessing used before distance-based propagation."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DataError, check_matrix

__all__ = [
    "PreprocessKind",
    "FittedScaler",
    "l2_normalize_rows",
    "fit_scaler",
    "apply_scaler",
    "ModalityScaler",
]


class PreprocessKind(str, enum.Enum):
    RAW = "raw"
    L2 = "l2"
    STD = "std"
    MM = "mm"
    L2STD = "l2std"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown preprocessing {value!r}; expected one of {valid}") from None


@dataclass(frozen=True)
class FittedScaler:
    """Column statistics for one preprocessing kind.

    ``loc`` and ``scale`` hold means/population standard deviations (STD, L2STD)
    or minima/ranges (MM); both are ``None`` for RAW and L2.
    """

    kind: PreprocessKind
    d: int
    loc: np.ndarray = None
    scale: np.ndarray = None


def l2_normalize_rows(X):
    """Scale every nonzero row to unit Euclidean norm; zero rows stay zero."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    out = X.copy()
    nz = norms > 0
    out[nz] /= norms[nz, None]
    return out


def _column_stats(kind, X):
    if kind in (PreprocessKind.STD, PreprocessKind.L2STD):
        return X.mean(axis=0), X.std(axis=0)
    lo = X.min(axis=0)
    return lo, X.max(axis=0) - lo


def fit_scaler(kind, X_fit):
    kind = PreprocessKind.parse(kind)
    X_fit = check_matrix(X_fit, name="X_fit")
    if X_fit.shape[0] == 0:
        raise DataError("cannot fit a scaler on an empty matrix")
    d = X_fit.shape[1]
    if kind in (PreprocessKind.RAW, PreprocessKind.L2):
        return FittedScaler(kind, d)
    if kind is PreprocessKind.L2STD:
        X_fit = l2_normalize_rows(X_fit)
    loc, scale = _column_stats(kind, X_fit)
    return FittedScaler(kind, d, loc, scale)


def _standardize(X, loc, scale):
    out = np.zeros_like(X)
    live = scale > 0
    out[:, live] = (X[:, live] - loc[live]) / scale[live]
    return out


def apply_scaler(scaler, X):
    X = check_matrix(X)
    if X.shape[1] != scaler.d:
        raise DataError(f"scaler was fitted on {scaler.d} features, got {X.shape[1]}")
    kind = scaler.kind
    if kind is PreprocessKind.RAW:
        return X
    if kind is PreprocessKind.L2:
        return l2_normalize_rows(X)
    if kind is PreprocessKind.L2STD:
        X = l2_normalize_rows(X)
    return _standardize(X, scaler.loc, scaler.scale)


class ModalityScaler(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Scikit-learn transformer wrapping :func:`fit_scaler` / :func:`apply_scaler`.

    Parameters
    ----------
    kind : {"raw", "l2", "std", "mm", "l2std"}, default="l2std"
        ``"l2std"`` L2-normalizes rows and then standardizes columns using
        statistics computed on the normalized fit data.  Constant columns map
        to zero under STD and MM.
    """

    def __init__(self, kind="l2std"):
        self.kind = kind

    def fit(self, X, y=None):
        X = check_matrix(X)
        self.scaler_ = fit_scaler(self.kind, X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scaler_")
        return apply_scaler(self.scaler_, X)
