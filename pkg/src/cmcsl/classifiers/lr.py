import numpy as np
from scipy.special import logsumexp

from ._base import SupportClassifier


class LogisticRegression(SupportClassifier):
    """Multinomial logistic regression fitted by full-batch gradient descent.

    Minimizes ``sum_i CE_i + alpha / 2 * ||W||^2`` (bias unpenalized).  Each
    step starts from a Barzilai-Borwein step length and backtracks until the
    Armijo condition holds, so the objective never increases.  Iteration stops
    once the gradient's max-norm drops to ``tol`` or after ``max_iter`` steps.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features, n_classes)
    intercept_ : ndarray of shape (n_classes,)
    loss_curve_ : list of float
        Objective value at the start and after every accepted step.
    """

    def __init__(self, alpha=1.0, max_iter=1000, tol=1e-6):
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol

    def _unpack(self, theta, d, k):
        return theta[: d * k].reshape(d, k), theta[d * k:]

    def _objective(self, theta, X, Y):
        W, b = self._unpack(theta, X.shape[1], Y.shape[1])
        Z = X @ W + b
        lse = logsumexp(Z, axis=1)
        loss = float(np.sum(lse - np.sum(Y * Z, axis=1)) + 0.5 * self.alpha * np.sum(W * W))
        P = np.exp(Z - lse[:, None])
        R = P - Y
        grad = np.concatenate([(X.T @ R + self.alpha * W).ravel(), R.sum(axis=0)])
        return loss, grad

    def _fit(self, X, y):
        n, d = X.shape
        k = self.n_classes_
        Y = np.zeros((n, k))
        Y[np.arange(n), y] = 1.0
        theta = np.zeros(d * k + k)
        loss, grad = self._objective(theta, X, Y)
        self.loss_curve_ = [loss]
        step = 1.0 / (n * (1.0 + float(np.max(np.sum(X * X, axis=1), initial=0.0))) + self.alpha)
        self.n_iter_ = 0
        for _ in range(self.max_iter):
            if np.max(np.abs(grad)) <= self.tol:
                break
            gg = float(grad @ grad)
            t = step
            while True:
                cand = theta - t * grad
                cand_loss, cand_grad = self._objective(cand, X, Y)
                if cand_loss <= loss - 1e-4 * t * gg or t < 1e-20:
                    break
                t *= 0.5
            if cand_loss > loss:
                break
            s = cand - theta
            r = cand_grad - grad
            sr = float(s @ r)
            step = float(s @ s) / sr if sr > 0 else 2.0 * t
            theta, loss, grad = cand, cand_loss, cand_grad
            self.loss_curve_.append(loss)
            self.n_iter_ += 1
        self.coef_, self.intercept_ = self._unpack(theta, d, k)
        self.gradient_ = grad

    def objective(self, X, y, coef=None, intercept=None):
        """Return ``(loss, gradient)`` at the given (default: fitted) parameters.

        The gradient is flattened as ``[coef.ravel(), intercept]``.
        """
        X = self._check_X(X)
        coef = self.coef_ if coef is None else coef
        intercept = self.intercept_ if intercept is None else intercept
        Y = np.zeros((X.shape[0], self.n_classes_))
        Y[np.arange(X.shape[0]), np.asarray(y)] = 1.0
        return self._objective(np.concatenate([np.ravel(coef), intercept]), X, Y)

    def decision_function(self, X):
        X = self._check_X(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        Z = self.decision_function(X)
        return np.exp(Z - logsumexp(Z, axis=1, keepdims=True))
