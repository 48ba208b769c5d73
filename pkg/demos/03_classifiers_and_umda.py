"""Rank the classifier zoo by cross-validation on a synthetic 13-feature
table, then let UMDA pick a voting subset from all of them.  On a small
noisy table the vote need not beat the best single model.

Run: python3 demos/03_classifiers_and_umda.py
"""

import numpy as np

from spxforest.ensemble import PredictionMatrix, UmdaParams, majority_vote, umda_select, vote_fitness
from spxforest.learners import ESTIMATORS, TrainingTable, default_spec, fit, predict, rank_models
from spxforest.metrics import Confusion, balanced_accuracy, relative_gain


def make_table(n, seed):
    rng = np.random.default_rng(seed)
    y = (np.arange(n) % 2).astype(np.int64)
    X = rng.normal(size=(n, 13)) * rng.uniform(0.5, 3.0, 13)
    X[:, :4] += 0.9 * y[:, None]
    X[:, 4] += 0.8 * y * X[:, 5]  # one interaction term for trees and kNN
    return TrainingTable(X, y)


train, val, test = make_table(120, 0), make_table(80, 1), make_table(200, 2)

ranking = rank_models([default_spec(a, seed=0) for a in sorted(ESTIMATORS)], train, k=5, seed=0)
print("5-fold CV ranking")
for i, e in enumerate(ranking, 1):
    print(f"  {i:2d} {e.spec.name:5s} acc={e.report.mean['accuracy']:.3f}  ba={e.report.mean['balanced_accuracy']:.3f}")

models = [fit(e.spec, train) for e in ranking]
names = [e.spec.name for e in ranking]


def matrix(table):
    preds = np.column_stack([predict(m, table.features) for m in models])
    return PredictionMatrix(names, preds, table.labels)


sel = umda_select(matrix(val), UmdaParams(iterations=50, seed=0))
chosen = [n for n, x in zip(names, sel.include) if x]
print(f"\nUMDA subset ({len(chosen)} of {len(names)}): {', '.join(chosen)}")

tm = matrix(test)
top1 = balanced_accuracy(Confusion.from_labels(test.labels, tm.predictions[:, 0]))
umda = vote_fitness(tm, sel.include)
every = balanced_accuracy(Confusion.from_labels(test.labels, majority_vote(tm, np.ones(len(names)))))
print(f"test BA: top-1 {top1:.2f}, all-vote {every:.2f}, UMDA {umda:.2f}")
print(f"relative gain of UMDA over top-1: {relative_gain(umda, top1)} %")
