"""Classifier diversity (COR), majority voting and UMDA ensemble selection."""

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import MetricError, balanced_accuracy_labels


@dataclass(frozen=True)
class PredictionMatrix:
    """``predictions[i, c]`` is classifier ``c``'s label for sample ``i``."""

    classifiers: tuple
    predictions: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.predictions, dtype=np.int8)
        t = np.asarray(self.truth, dtype=np.int8)
        if p.ndim != 2 or p.shape[0] != t.shape[0] or p.shape[1] != len(self.classifiers):
            raise ValueError("prediction matrix dimensions are inconsistent")
        if len(set(self.classifiers)) != len(self.classifiers):
            raise ValueError("classifier identifiers must be unique")
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "predictions", p)
        object.__setattr__(self, "truth", t)

    @property
    def n_samples(self):
        return self.predictions.shape[0]

    @property
    def n_classifiers(self):
        return self.predictions.shape[1]


@dataclass(frozen=True)
class UmdaParams:
    population: int = 50
    elite_fraction: float = 0.2
    iterations: int = 100
    seed: int = 0
    clamp: float = 0.02

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 < self.elite_fraction < 1 or self.n_elite < 1:
            raise ValueError("elite fraction must keep at least one individual")
        if not 0 < self.clamp < 0.5:
            raise ValueError("clamp must lie in (0, 0.5)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def n_elite(self):
        return max(1, int(math.floor(self.population * self.elite_fraction)))


@dataclass
class EnsembleSelection:
    include: np.ndarray
    fitness: float
    trace: list = field(default_factory=list)
    evaluations: int = 0

    @property
    def n_included(self):
        return int(np.sum(self.include))


def cor_pair(ci, cj, truth):
    """COR diversity of two prediction columns; None when undefined.

    a: both correct, b: only ``cj`` correct, c: only ``ci`` correct,
    d: both wrong (fractions of samples).
    """
    t = np.asarray(truth)
    if t.size == 0:
        raise ValueError("need at least one sample")
    oi = np.asarray(ci) == t
    oj = np.asarray(cj) == t
    n = t.size
    a = np.sum(oi & oj) / n
    b = np.sum(~oi & oj) / n
    c = np.sum(oi & ~oj) / n
    d = np.sum(~oi & ~oj) / n
    return cor_from_fractions(a, b, c, d)


def cor_from_fractions(a, b, c, d):
    den = (a + b) * (c + d) * (a + c) * (b + d)
    if den == 0:
        return None
    return float((a * d - b * c) / math.sqrt(den))


def cor_matrix(p: PredictionMatrix) -> np.ndarray:
    """Pairwise COR; NaN marks undefined cells."""
    C = p.n_classifiers
    out = np.full((C, C), np.nan)
    for i in range(C):
        for j in range(i, C):
            v = cor_pair(p.predictions[:, i], p.predictions[:, j], p.truth)
            out[i, j] = out[j, i] = np.nan if v is None else v
    return out


def majority_vote(p: PredictionMatrix, include) -> np.ndarray:
    """Label chosen by most included classifiers; ties go to the positive class."""
    inc = np.asarray(include, dtype=bool)
    if inc.shape != (p.n_classifiers,):
        raise ValueError("include vector must have one entry per classifier")
    n = int(inc.sum())
    if n == 0:
        raise ValueError("majority vote needs at least one classifier")
    votes = p.predictions[:, inc].sum(axis=1, dtype=np.int64)
    return (2 * votes >= n).astype(np.int8)


def vote_fitness(p: PredictionMatrix, include) -> float:
    return balanced_accuracy_labels(p.truth, majority_vote(p, include))


def umda_select(p: PredictionMatrix, params: UmdaParams = UmdaParams()) -> EnsembleSelection:
    """Bernoulli UMDA over inclusion vectors, fitness = balanced accuracy of MV.

    Individual ``idx`` of generation ``g`` is drawn from
    ``default_rng([seed, g, idx])``, so generations could be scored in
    parallel with the same result.  The best individual so far is copied into
    each new population.
    """
    t = p.truth
    if t.min() == t.max():
        raise MetricError("validation split has a single class")
    C = p.n_classifiers
    marg = np.full(C, 0.5)
    cache = {}

    def fitness(x):
        key = x.tobytes()
        if key not in cache:
            cache[key] = vote_fitness(p, x)
        return cache[key]

    best_x, best_f = None, -math.inf
    trace = []
    for g in range(params.iterations):
        pop = []
        for idx in range(params.population):
            rng = np.random.default_rng([params.seed, g, idx])
            while True:
                x = rng.random(C) < marg
                if x.any():
                    break
            pop.append(x)
        if best_x is not None:
            pop[-1] = best_x.copy()
        scores = np.array([fitness(x) for x in pop])
        # stable order: higher fitness first, then population index
        order = np.argsort(-scores, kind="stable")
        if scores[order[0]] > best_f:
            best_f = float(scores[order[0]])
            best_x = pop[order[0]].copy()
        trace.append(best_f)
        elite = np.array([pop[i] for i in order[: params.n_elite]])
        marg = np.clip(elite.mean(axis=0), params.clamp, 1 - params.clamp)
    return EnsembleSelection(best_x.astype(np.int8), best_f, trace, len(cache))


def exhaustive_best(p: PredictionMatrix):
    """Best MV fitness over all nonempty subsets (small C only)."""
    C = p.n_classifiers
    best = (-math.inf, None)
    for mask in range(1, 1 << C):
        x = np.array([(mask >> i) & 1 for i in range(C)], dtype=bool)
        f = vote_fitness(p, x)
        if f > best[0]:
            best = (f, x)
    return best


def selection_probabilities(runs, methods: dict, classifiers, runs_count=None):
    """CI per classifier and CS per method, in percent.

    ``methods`` maps each classifier identifier to its segmentation method.
    """
    R = runs_count if runs_count is not None else len(runs)
    if R < 1:
        raise ValueError("need at least one run")
    inc = np.array([np.asarray(r.include, dtype=bool) for r in runs])
    ci = {c: 100.0 * inc[:, j].sum() / R for j, c in enumerate(classifiers)}
    cs = {}
    for m in sorted(set(methods[c] for c in classifiers)):
        cols = [j for j, c in enumerate(classifiers) if methods[c] == m]
        cs[m] = 100.0 * inc[:, cols].mean(axis=1).sum() / R
    return ci, cs
