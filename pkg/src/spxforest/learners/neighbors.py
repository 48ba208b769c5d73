import numpy as np

from .base import Estimator


class KNN(Estimator):
    """k nearest standardised exemplars (Euclidean); score = weighted share of
    class-1 neighbours.  Equal distances keep the earlier exemplar."""

    threshold = 0.5

    def fit(self, X, y, hp, rng):
        self.X = np.array(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.k = min(int(hp.get("k", 5)), self.X.shape[0])
        self.weights = hp.get("weights", "uniform")
        return self

    def decision(self, X):
        d2 = ((X[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        nn = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        lab = self.y[nn]
        if self.weights == "distance":
            d = np.sqrt(np.take_along_axis(d2, nn, axis=1))
            exact = d == 0
            w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / np.where(exact, 1.0, d))
        else:
            w = np.ones(lab.shape)
        return (w * lab).sum(axis=1) / w.sum(axis=1)

    def state(self):
        return {"X": self.X, "y": self.y, "k": np.array([self.k]),
                "distance_weighted": np.array([self.weights == "distance"])}

    def load(self, s):
        self.X, self.y = s["X"], s["y"]
        self.k = int(s["k"][0])
        self.weights = "distance" if bool(s["distance_weighted"][0]) else "uniform"
        return self
