"""Shared types for the classifier zoo: tables, specs, models and persistence."""

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

N_FEATURES = 13
STD_FLOOR = 1e-12


class LearnerError(ValueError):
    pass


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=np.float64)
        return cls(X.mean(axis=0), np.maximum(X.std(axis=0), STD_FLOOR))

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


@dataclass(frozen=True)
class TrainingTable:
    """Feature rows and 0/1 labels (1 = deforestation)."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels).astype(np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise LearnerError("features and labels disagree in length")
        if not np.all(np.isfinite(X)):
            raise LearnerError("features contain missing or non-finite values")
        if not set(np.unique(y).tolist()) <= {0, 1}:
            raise LearnerError("labels must be 0 or 1")
        if len(np.unique(y)) < 2:
            raise LearnerError("labels contain a single class")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, idx):
        return TrainingTable(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def name(self):
        return self.algorithm

    def with_params(self, **kw):
        hp = dict(self.hyperparameters)
        hp.update(kw)
        return ClassifierSpec(self.algorithm, hp, self.seed)

    def describe(self):
        inner = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.hyperparameters.items()))
        return f"{self.algorithm}({inner})"


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 6))
    return str(v)


class Estimator:
    """Fitted on standardised rows; ``decision`` returns class-1 scores whose
    sign (or ``>= threshold``) gives the label."""

    threshold = 0.0

    def fit(self, X, y, hp, rng):
        raise NotImplementedError

    def decision(self, X):
        raise NotImplementedError

    def state(self) -> dict:
        """Fitted parameters as named arrays (for hashing and persistence)."""
        raise NotImplementedError

    def load(self, state: dict):
        raise NotImplementedError


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    estimator: Estimator
    standardizer: Standardizer

    @property
    def has_scores(self):
        return True

    def decision(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.standardizer.mean.shape[0]:
            raise LearnerError(f"expected {self.standardizer.mean.shape[0]} feature columns, "
                               f"got {X.shape[-1] if X.ndim else 0}")
        return self.estimator.decision(self.standardizer.transform(X))

    def predict(self, X):
        return (self.decision(X) >= self.estimator.threshold).astype(np.int64)

    def arrays(self) -> dict:
        out = {"std.mean": self.standardizer.mean, "std.std": self.standardizer.std}
        for k, v in self.estimator.state().items():
            out["est." + k] = np.asarray(v)
        return out

    def to_bytes(self) -> bytes:
        return dump_blob(self.arrays(), {"algorithm": self.spec.algorithm,
                                         "hyperparameters": self.spec.hyperparameters,
                                         "seed": self.spec.seed, "format": 1})

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


MAGIC = b"SPXMODEL1\n"


def dump_blob(arrays: dict, meta: dict) -> bytes:
    """Deterministic container: magic, JSON header line, raw little-endian arrays."""
    index = []
    chunks = []
    off = 0
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        if a.dtype.kind == "f":
            a = a.astype("<f8")
        elif a.dtype.kind in "iub":
            a = a.astype("<i8")
        else:
            raise LearnerError(f"cannot store array {name!r} of dtype {a.dtype}")
        b = a.tobytes()
        index.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape), "offset": off})
        chunks.append(b)
        off += len(b)
    head = json.dumps({"meta": meta, "arrays": index}, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(head)) + head + b"".join(chunks)


def load_blob(data: bytes):
    if not data.startswith(MAGIC):
        raise LearnerError("not a model blob")
    p = len(MAGIC)
    (n,) = struct.unpack("<Q", data[p : p + 8])
    head = json.loads(data[p + 8 : p + 8 + n].decode("utf-8"))
    body = data[p + 8 + n :]
    arrays = {}
    for e in head["arrays"]:
        dt = np.dtype(e["dtype"])
        count = int(np.prod(e["shape"])) if e["shape"] else 1
        a = np.frombuffer(body, dtype=dt, count=count, offset=e["offset"]).reshape(e["shape"])
        arrays[e["name"]] = a.copy()
    return head["meta"], arrays
