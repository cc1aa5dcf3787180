import numpy as np

from ._base import SupportClassifier


class GaussianNB(SupportClassifier):
    """Gaussian naive Bayes with class-frequency priors.

    Per-class feature variances are smoothed by ``var_smoothing`` times the
    largest feature variance of the training matrix.
    """

    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing

    def _fit(self, X, y):
        k = self.n_classes_
        counts = np.bincount(y, minlength=k)
        self.class_prior_ = counts / y.shape[0]
        self.theta_ = np.vstack([X[y == c].mean(axis=0) for c in range(k)])
        self.epsilon_ = self.var_smoothing * float(np.max(X.var(axis=0)))
        if self.epsilon_ == 0.0:
            # every feature constant: any positive floor keeps the densities finite
            self.epsilon_ = self.var_smoothing
        self.var_ = np.vstack([X[y == c].var(axis=0) for c in range(k)]) + self.epsilon_

    def joint_log_likelihood(self, X):
        X = self._check_X(X)
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.class_prior_)
        norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_), axis=1)
        # (n, k): sum_j (x_j - mu_kj)^2 / var_kj
        quad = ((X[:, None, :] - self.theta_[None]) ** 2 / self.var_[None]).sum(axis=2)
        return log_prior + norm - 0.5 * quad

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        jll = jll - jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)
