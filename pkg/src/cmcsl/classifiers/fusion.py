"""Multimodal fusion baselines built on any base classifier."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_is_fitted

from .._validation import DataError, check_labels, check_views
from ..preprocess import apply_scaler, fit_scaler


def _check_count(model, views):
    if len(views) != model.n_modalities_:
        raise DataError(f"model was fitted on {model.n_modalities_} modalities, got {len(views)}")


class LateFusionClassifier(ClassifierMixin, BaseEstimator):
    """One classifier per modality, combined by summing class supports."""

    def __init__(self, estimator):
        self.estimator = estimator

    def fit(self, Xs, y, n_classes=None):
        views = check_views(Xs)
        y = check_labels(y, n_samples=views[0].shape[0])
        self.estimators_ = [clone(self.estimator).fit(X, y, n_classes=n_classes) for X in views]
        self.n_modalities_ = len(views)
        self.classes_ = self.estimators_[0].classes_
        return self

    def support(self, Xs):
        """Elementwise sum of the members' ``predict_proba`` outputs."""
        check_is_fitted(self, "estimators_")
        views = check_views(Xs)
        _check_count(self, views)
        return sum(est.predict_proba(X) for est, X in zip(self.estimators_, views))

    def predict_proba(self, Xs):
        return self.support(Xs) / self.n_modalities_

    def predict(self, Xs):
        return np.argmax(self.support(Xs), axis=1)


class EarlyFusionClassifier(ClassifierMixin, BaseEstimator):
    """A single classifier over horizontally concatenated modality features.

    Each modality is preprocessed with its own scaler, fitted on the training
    data, before concatenation.
    """

    def __init__(self, estimator, preprocess="raw"):
        self.estimator = estimator
        self.preprocess = preprocess

    def _concat(self, views):
        return np.hstack([apply_scaler(s, X) for s, X in zip(self.scalers_, views)])

    def fit(self, Xs, y, n_classes=None):
        views = check_views(Xs)
        y = check_labels(y, n_samples=views[0].shape[0])
        self.scalers_ = [fit_scaler(self.preprocess, X) for X in views]
        self.n_modalities_ = len(views)
        self.estimator_ = clone(self.estimator).fit(self._concat(views), y, n_classes=n_classes)
        self.classes_ = self.estimator_.classes_
        return self

    def predict_proba(self, Xs):
        check_is_fitted(self, "estimator_")
        views = check_views(Xs)
        _check_count(self, views)
        return self.estimator_.predict_proba(self._concat(views))

    def predict(self, Xs):
        return np.argmax(self.predict_proba(Xs), axis=1)
