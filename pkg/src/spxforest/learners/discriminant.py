"""Gaussian class models: LDA, QDA and Gaussian naive Bayes.

All three score a row by the log posterior odds of class 1 and predict class
1 when the odds are nonnegative.
"""

import numpy as np

from .base import Estimator, LearnerError

RIDGE = 1e-6


def _regularise(S, shrinkage=0.0):
    d = S.shape[0]
    tr = np.trace(S)
    S = (1.0 - shrinkage) * S + shrinkage * (tr / d) * np.eye(d)
    return S + RIDGE * max(tr, 1e-300) * np.eye(d)


def _logdet_inv(S):
    sign, logdet = np.linalg.slogdet(S)
    if sign <= 0 or not np.isfinite(logdet):
        raise LearnerError("covariance is singular after regularisation")
    return logdet, np.linalg.inv(S)


def _priors(y):
    n = np.bincount(y, minlength=2).astype(np.float64)
    if n.min() == 0:
        raise LearnerError("training data hold a single class")
    return np.log(n / n.sum())


class LDA(Estimator):
    def fit(self, X, y, hp, rng):
        lp = _priors(y)
        mu = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
        R = X - mu[y]
        S = _regularise(R.T @ R / max(X.shape[0] - 2, 1), float(hp.get("shrinkage", 0.0)))
        _, Si = _logdet_inv(S)
        self.coef = Si @ (mu[1] - mu[0])
        self.intercept = float(-0.5 * (mu[1] @ Si @ mu[1] - mu[0] @ Si @ mu[0]) + lp[1] - lp[0])
        return self

    def decision(self, X):
        return X @ self.coef + self.intercept

    def state(self):
        return {"coef": self.coef, "intercept": np.array([self.intercept])}

    def load(self, s):
        self.coef = s["coef"]
        self.intercept = float(s["intercept"][0])
        return self


class QDA(Estimator):
    def fit(self, X, y, hp, rng):
        self.lp = _priors(y)
        reg = float(hp.get("reg", 0.0))
        self.mu = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
        self.logdet = np.zeros(2)
        self.inv = np.zeros((2, X.shape[1], X.shape[1]))
        for c in (0, 1):
            Xc = X[y == c] - self.mu[c]
            S = _regularise(Xc.T @ Xc / max(Xc.shape[0] - 1, 1), reg)
            self.logdet[c], self.inv[c] = _logdet_inv(S)
        return self

    def _loglik(self, X, c):
        D = X - self.mu[c]
        return -0.5 * np.einsum("ni,ij,nj->n", D, self.inv[c], D) - 0.5 * self.logdet[c] + self.lp[c]

    def decision(self, X):
        return self._loglik(X, 1) - self._loglik(X, 0)

    def state(self):
        return {"mu": self.mu, "logdet": self.logdet, "inv": self.inv, "lp": self.lp}

    def load(self, s):
        self.mu, self.logdet, self.inv, self.lp = s["mu"], s["logdet"], s["inv"], s["lp"]
        return self


class GNB(Estimator):
    def fit(self, X, y, hp, rng):
        self.lp = _priors(y)
        eps = float(hp.get("var_smoothing", 1e-9)) * X.var(axis=0).max()
        self.mu = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
        self.var = np.array([X[y == c].var(axis=0) for c in (0, 1)]) + max(eps, 1e-300)
        return self

    def _loglik(self, X, c):
        return (-0.5 * np.sum(np.log(2 * np.pi * self.var[c]) + (X - self.mu[c]) ** 2 / self.var[c], axis=1)
                + self.lp[c])

    def decision(self, X):
        return self._loglik(X, 1) - self._loglik(X, 0)

    def state(self):
        return {"mu": self.mu, "var": self.var, "lp": self.lp}

    def load(self, s):
        self.mu, self.var, self.lp = s["mu"], s["var"], s["lp"]
        return self
