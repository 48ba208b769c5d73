"""Fitting, stratified cross-validation, ranking and random-search tuning."""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..metrics import Confusion, balanced_accuracy, metric_suite
from .base import ClassifierSpec, LearnerError, Standardizer, TrainedModel, TrainingTable
from .discriminant import GNB, LDA, QDA
from .linear import SGD, Logistic, Ridge
from .neighbors import KNN
from .trees import DecisionTree, ExtraTrees, GradientBoosting, RandomForest

ESTIMATORS = {
    "RC": Ridge,
    "LR": Logistic,
    "LDA": LDA,
    "QDA": QDA,
    "GNB": GNB,
    "SGD": SGD,
    "DT": DecisionTree,
    "KNN": KNN,
    "RF": RandomForest,
    "ET": ExtraTrees,
    "GBC": GradientBoosting,
}

DEFAULT_HYPERPARAMETERS = {
    "RC": {"alpha": 1.0},
    "LR": {"C": 1.0, "class_weight": "none"},
    "LDA": {"shrinkage": 0.0},
    "QDA": {"reg": 0.0},
    "GNB": {"var_smoothing": 1e-9},
    "SGD": {"loss": "hinge", "alpha": 1e-4, "epochs": 20, "eta0": 0.1},
    "DT": {"max_depth": "none", "min_samples_leaf": 1},
    "KNN": {"k": 5, "weights": "uniform"},
    "RF": {"n_trees": 100, "max_features": "sqrt", "max_depth": "none"},
    "ET": {"n_trees": 100, "max_features": "sqrt", "max_depth": "none"},
    "GBC": {"n_trees": 100, "learning_rate": 0.1, "max_depth": 3},
}

DEFAULT_GRIDS = """\
rc.alpha = log-uniform 0.001..100
lr.C = log-uniform 0.01..100
lr.class_weight = {none,balanced}
lda.shrinkage = uniform 0..0.9
qda.reg = uniform 0..0.9
gnb.var_smoothing = log-uniform 1e-12..1e-3
sgd.loss = {hinge,log}
sgd.alpha = log-uniform 1e-6..0.1
dt.max_depth = {2..16}
dt.min_samples_leaf = {1,2,4,8}
knn.k = {1,3,5,7,9}
knn.weights = {uniform,distance}
rf.n_trees = {50,100,200}
rf.max_depth = {4..16}
et.n_trees = {50,100,200}
et.max_depth = {4..16}
gbc.n_trees = {50,100,200}
gbc.learning_rate = {0.05,0.1,0.3}
gbc.max_depth = {2,3,4}
"""

METRIC_KEYS = ("accuracy", "balanced_accuracy", "auc", "recall", "precision", "f1", "kappa", "mcc")


def default_spec(algorithm, seed=0, **overrides) -> ClassifierSpec:
    if algorithm not in ESTIMATORS:
        raise LearnerError(f"unknown algorithm {algorithm!r}; choose from {sorted(ESTIMATORS)}")
    hp = dict(DEFAULT_HYPERPARAMETERS[algorithm])
    hp.update(overrides)
    return ClassifierSpec(algorithm, hp, seed)


def fit(spec: ClassifierSpec, table: TrainingTable) -> TrainedModel:
    """Standardise on the table's rows and fit ``spec``; randomness comes only
    from ``default_rng(spec.seed)``."""
    try:
        cls = ESTIMATORS[spec.algorithm]
    except KeyError:
        raise LearnerError(f"unknown algorithm {spec.algorithm!r}")
    std = Standardizer.fit(table.features)
    rng = np.random.default_rng(spec.seed)
    est = cls().fit(std.transform(table.features), table.labels, spec.hyperparameters, rng)
    return TrainedModel(spec, est, std)


def predict(model: TrainedModel, features):
    return model.predict(features)


def model_from_bytes(data: bytes) -> TrainedModel:
    from .base import load_blob

    meta, arrays = load_blob(data)
    spec = ClassifierSpec(meta["algorithm"], meta["hyperparameters"], meta["seed"])
    std = Standardizer(arrays.pop("std.mean"), arrays.pop("std.std"))
    est = ESTIMATORS[spec.algorithm]().load({k[4:]: v for k, v in arrays.items()})
    return TrainedModel(spec, est, std)


# ---------------------------------------------------------------- folds and CV

def stratified_folds(labels, k=5, seed=0) -> np.ndarray:
    """Fold index per row.

    For each class in increasing order, its row indices (ascending) are
    permuted with ``default_rng(seed)`` and the row at permuted position ``p``
    goes to fold ``p % k``.
    """
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold = np.empty(y.shape[0], dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise LearnerError(f"class {cls} has {idx.size} rows, fewer than {k} folds")
        perm = rng.permutation(idx.size)
        fold[idx[perm]] = np.arange(idx.size) % k
    return fold


@dataclass
class CVReport:
    spec: ClassifierSpec
    folds: list
    seconds: list = field(default_factory=list)

    @property
    def mean(self):
        return {m: float(np.mean([f[m] for f in self.folds])) for m in METRIC_KEYS}

    @property
    def mean_seconds(self):
        return float(np.mean(self.seconds)) if self.seconds else 0.0


def evaluate(model, X, y):
    s = model.decision(X)
    p = (s >= model.estimator.threshold).astype(np.int64)
    c = Confusion.from_labels(y, p)
    out = metric_suite(c, y, s)
    out["balanced_accuracy"] = balanced_accuracy(c) / 100.0
    return out


def cross_validate(spec, table, k=5, seed=0, folds=None) -> CVReport:
    fold = stratified_folds(table.labels, k, seed) if folds is None else folds
    res, secs = [], []
    for f in range(k):
        tr = np.flatnonzero(fold != f)
        te = np.flatnonzero(fold == f)
        t0 = time.perf_counter()
        model = fit(spec, table.subset(tr))
        secs.append(time.perf_counter() - t0)
        res.append(evaluate(model, table.features[te], table.labels[te]))
    return CVReport(spec, res, secs)


@dataclass
class RankEntry:
    spec: ClassifierSpec
    report: CVReport | None
    error: str | None = None

    @property
    def key(self):
        if self.report is None:
            return (1, 0.0, 0.0, 0.0, self.spec.name)
        m = self.report.mean
        return (0, -m["accuracy"], -m["balanced_accuracy"], -m["f1"], self.spec.name)


def rank_models(specs, table, k=5, seed=0) -> list:
    """CV every spec on shared folds; order by mean accuracy, then balanced
    accuracy, F1 and name.  Specs that fail to fit are ranked last."""
    fold = stratified_folds(table.labels, k, seed)
    out = []
    for spec in specs:
        try:
            out.append(RankEntry(spec, cross_validate(spec, table, k, seed, fold)))
        except (LearnerError, np.linalg.LinAlgError) as e:
            out.append(RankEntry(spec, None, str(e)))
    return sorted(out, key=lambda e: e.key)


def top_k(ranking, k=5) -> list:
    return [e.spec for e in ranking[:k]]


# ---------------------------------------------------------------- grids and tuning

@dataclass(frozen=True)
class Dimension:
    kind: str  # "log-uniform", "uniform" or "choice"
    low: float = 0.0
    high: float = 0.0
    values: tuple = ()

    @property
    def discrete(self):
        return self.kind == "choice"

    def sample(self, rng):
        if self.kind == "choice":
            return self.values[int(rng.integers(len(self.values)))]
        u = rng.random()
        if self.kind == "uniform":
            return float(self.low + u * (self.high - self.low))
        return float(math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low))))


def _atom(s):
    s = s.strip()
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def parse_dimension(text: str) -> Dimension:
    """``log-uniform a..b``, ``uniform a..b``, ``{a..b}`` (integers) or ``{x,y,z}``."""
    t = text.strip()
    for kind in ("log-uniform", "uniform"):
        if t.startswith(kind + " "):
            lo, hi = t[len(kind) + 1 :].split("..")
            lo, hi = float(lo), float(hi)
            if not hi >= lo or (kind == "log-uniform" and lo <= 0):
                raise LearnerError(f"bad range in {text!r}")
            return Dimension(kind, lo, hi)
    if t.startswith("{") and t.endswith("}"):
        inner = t[1:-1]
        if ".." in inner and "," not in inner:
            lo, hi = (int(v) for v in inner.split(".."))
            return Dimension("choice", values=tuple(range(lo, hi + 1)))
        return Dimension("choice", values=tuple(_atom(v) for v in inner.split(",")))
    raise LearnerError(f"cannot parse grid {text!r}")


def parse_grids(text: str) -> dict:
    """Grids from ``alg.param = spec`` lines, keyed by upper-case algorithm."""
    grids = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, val = (p.strip() for p in line.split("=", 1))
        alg, param = key.split(".", 1)
        grids.setdefault(alg.upper(), {})[param] = parse_dimension(val)
    return grids


def default_grids():
    return parse_grids(DEFAULT_GRIDS)


@dataclass
class TuneResult:
    spec: ClassifierSpec
    score: float
    trace: list
    evaluated: list


def _candidates(grid, budget, rng):
    names = sorted(grid)
    dims = [grid[n] for n in names]
    if all(d.discrete for d in dims):
        product = list(itertools.product(*[d.values for d in dims]))
        if budget >= len(product):
            chosen = product
        else:
            chosen = [product[i] for i in rng.permutation(len(product))[:budget]]
        return [dict(zip(names, c)) for c in chosen]
    return [{n: d.sample(rng) for n, d in zip(names, dims)} for _ in range(budget)]


def tune_search(spec, table, budget, seed=0, grid=None, k=5) -> TuneResult:
    """Seeded random search scored by mean CV balanced accuracy on fixed folds.

    The input spec is scored first and candidates must beat the best so far
    strictly, so the result never scores below the input.  A fully discrete
    grid no larger than ``budget`` is searched exhaustively.
    """
    if budget < 0:
        raise LearnerError("budget must be >= 0")
    fold = stratified_folds(table.labels, k, seed)

    def score(s):
        return cross_validate(s, table, k, seed, fold).mean["balanced_accuracy"]

    best, best_score = spec, score(spec)
    trace, evaluated = [best_score], []
    if budget == 0:
        return TuneResult(spec, best_score, trace, evaluated)
    grid = (default_grids() if grid is None else grid).get(spec.algorithm, {})
    if not grid:
        return TuneResult(spec, best_score, trace, evaluated)
    rng = np.random.default_rng(seed)
    for cand in _candidates(grid, budget, rng):
        s = spec.with_params(**cand)
        try:
            v = score(s)
        except (LearnerError, np.linalg.LinAlgError):
            continue
        evaluated.append((s, v))
        if v > best_score:
            best, best_score = s, v
        trace.append(best_score)
    return TuneResult(best, best_score, trace, evaluated)


def tune(spec, table, budget, seed=0, grid=None, k=5) -> ClassifierSpec:
    return tune_search(spec, table, budget, seed, grid, k).spec
