"""Linear learners: ridge classifier, logistic regression and SGD."""

import numpy as np

from .base import Estimator, LearnerError


def _design(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def ridge_weights(X, y, alpha):
    """Closed-form ridge on +-1 targets with an unpenalised intercept.

    Returns ``[w..., b]``.
    """
    A = _design(X)
    t = np.where(np.asarray(y) == 1, 1.0, -1.0)
    pen = np.full(A.shape[1], float(alpha))
    pen[-1] = 0.0
    return np.linalg.solve(A.T @ A + np.diag(pen), A.T @ t)


class Ridge(Estimator):
    def fit(self, X, y, hp, rng):
        self.w = ridge_weights(X, y, hp.get("alpha", 1.0))
        return self

    def decision(self, X):
        return _design(X) @ self.w

    def state(self):
        return {"w": self.w}

    def load(self, s):
        self.w = s["w"]
        return self


def _class_weights(y, mode):
    if mode in (None, "none"):
        return np.ones(y.shape[0])
    if mode == "balanced":
        n = y.shape[0]
        counts = np.bincount(y, minlength=2)
        return np.where(y == 1, n / (2.0 * counts[1]), n / (2.0 * counts[0]))
    raise LearnerError(f"unknown class_weight {mode!r}")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class Logistic(Estimator):
    """L2-penalised logistic regression, ``sum w_i loss_i + |w|^2 / (2C)``,
    solved by Newton steps with backtracking until the gradient norm is at
    most ``tol``."""

    threshold = 0.5

    def fit(self, X, y, hp, rng):
        C = float(hp.get("C", 1.0))
        tol = float(hp.get("tol", 1e-8))
        max_iter = int(hp.get("max_iter", 100))
        A = _design(X)
        sw = _class_weights(y, hp.get("class_weight", "none"))
        reg = np.full(A.shape[1], 1.0 / C)
        reg[-1] = 0.0
        yy = np.asarray(y, dtype=np.float64)

        def loss(w):
            z = A @ w
            return np.sum(sw * (np.logaddexp(0.0, z) - yy * z)) + 0.5 * np.sum(reg * w * w)

        w = np.zeros(A.shape[1])
        self.iterations = 0
        for it in range(max_iter):
            p = _sigmoid(A @ w)
            g = A.T @ (sw * (p - yy)) + reg * w
            if np.linalg.norm(g) <= tol:
                break
            H = (A * (sw * p * (1 - p))[:, None]).T @ A + np.diag(reg) + 1e-12 * np.eye(A.shape[1])
            step = np.linalg.solve(H, g)
            f0 = loss(w)
            t = 1.0
            while t > 1e-10 and loss(w - t * step) > f0 - 1e-4 * t * (g @ step):
                t *= 0.5
            w = w - t * step
            self.iterations = it + 1
        self.w = w
        return self

    def decision(self, X):
        return _sigmoid(_design(X) @ self.w)

    def state(self):
        return {"w": self.w}

    def load(self, s):
        self.w = s["w"]
        return self


class SGD(Estimator):
    """Linear model trained by plain SGD on hinge or log loss with L2 penalty.

    Each epoch visits the rows in a fresh permutation from the spec's seed;
    the step size is ``eta0 / sqrt(t + 1)``.  The returned weights are the
    average of the iterates of the final epoch.
    """

    def fit(self, X, y, hp, rng):
        loss = hp.get("loss", "hinge")
        if loss not in ("hinge", "log"):
            raise LearnerError(f"unknown SGD loss {loss!r}")
        alpha = float(hp.get("alpha", 1e-4))
        epochs = int(hp.get("epochs", 20))
        eta0 = float(hp.get("eta0", 0.1))
        A = _design(X)
        t_sgn = np.where(np.asarray(y) == 1, 1.0, -1.0)
        w = np.zeros(A.shape[1])
        t = 0
        avg = w.copy()
        for ep in range(epochs):
            avg = np.zeros_like(w)
            order = rng.permutation(A.shape[0])
            for i in order:
                eta = eta0 / np.sqrt(t + 1.0)
                m = t_sgn[i] * (A[i] @ w)
                if loss == "hinge":
                    gl = -t_sgn[i] if m < 1 else 0.0
                else:
                    gl = -t_sgn[i] * _sigmoid(-m)
                grad = gl * A[i]
                grad[:-1] += alpha * w[:-1]
                w = w - eta * grad
                avg += w
                t += 1
            avg /= len(order)
        self.w = avg
        return self

    def decision(self, X):
        return _design(X) @ self.w

    def state(self):
        return {"w": self.w}

    def load(self, s):
        self.w = s["w"]
        return self
