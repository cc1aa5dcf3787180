import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import DataError, check_labels, check_matrix, require_all_classes, resolve_n_classes


class SupportClassifier(ClassifierMixin, BaseEstimator):
    """Shared fit validation and argmax prediction over class supports.

    Classes are always the integers ``0..n_classes-1``.  Subclasses implement
    ``_fit(X, y)`` and ``predict_proba(X)``.
    """

    def fit(self, X, y, n_classes=None):
        X = check_matrix(X)
        y = check_labels(y, n_samples=X.shape[0])
        k = resolve_n_classes(y, n_classes)
        y = check_labels(y, n_classes=k)
        require_all_classes(y, k)
        self.n_classes_ = k
        self.classes_ = np.arange(k)
        self.n_features_in_ = X.shape[1]
        self._fit(X, y)
        return self

    def _check_X(self, X):
        check_is_fitted(self, "n_classes_")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(
                f"model was fitted on {self.n_features_in_} features, got {X.shape[1]}"
            )
        return X

    def predict(self, X):
        # np.argmax returns the first maximum, so ties go to the lowest class
        return np.argmax(self.predict_proba(X), axis=1)
