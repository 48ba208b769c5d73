"""Segment statistics, usefulness filter, training-set selection and
cross-method segment correspondence."""

from dataclasses import dataclass, field

import numpy as np

from .raster import DEFORESTATION, FOREST, LabelMap
from .superpixel.segmentation import Segmentation

CLASS_NAMES = {FOREST: "forest", DEFORESTATION: "deforestation"}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SegmentRecord:
    segment_id: int
    method: str
    area_id: str
    pixel_count: int
    forest_fraction: float
    deforestation_fraction: float
    dominant_class: int
    homogeneity: float
    usable: bool = True

    @property
    def key(self):
        return (self.area_id, self.segment_id)


@dataclass
class SplitManifest:
    """Train ids per class and test ids, each as (area_id, segment_id) pairs."""

    method: str
    train: dict
    test: list
    provenance: dict = field(default_factory=dict)

    def train_ids(self):
        return sorted(k for ids in self.train.values() for k in ids)

    def check(self):
        tr = set(self.train_ids())
        if tr & set(self.test):
            raise DatasetError("train and test sets overlap")


def segment_stats(seg: Segmentation, labels: LabelMap, method=None, area_id="0") -> list:
    """One record per segment with class fractions over its valid-label pixels.

    Pixels the label map marks invalid do not count; a segment made only of
    such pixels is returned with ``usable=False``.
    """
    lab = np.asarray(seg.labels)
    cls = np.asarray(labels.labels)
    if lab.shape != cls.shape:
        raise DatasetError(f"segmentation {lab.shape} and label map {cls.shape} differ in shape")
    k = seg.k_actual
    inside = lab >= 0
    s = lab[inside]
    c = cls[inside]
    forest = np.bincount(s[c == FOREST], minlength=k)
    defo = np.bincount(s[c == DEFORESTATION], minlength=k)
    method = method or seg.algorithm
    out = []
    for i in range(k):
        n = int(forest[i] + defo[i])
        if n == 0:
            out.append(SegmentRecord(i, method, str(area_id), 0, 0.0, 0.0, FOREST, 0.0, False))
            continue
        ff = forest[i] / n
        df = defo[i] / n
        dom = FOREST if forest[i] >= defo[i] else DEFORESTATION
        out.append(SegmentRecord(i, method, str(area_id), n, float(ff), float(df), dom,
                                 float(max(ff, df))))
    return out


def filter_useful(records, min_pixels=70, min_homog=0.70) -> list:
    """Records with ``pixel_count > min_pixels`` and ``homogeneity > min_homog``."""
    if min_pixels < 0 or not 0.0 <= min_homog <= 1.0:
        raise DatasetError("thresholds out of range")
    return [r for r in records if r.usable and r.pixel_count > min_pixels and r.homogeneity > min_homog]


def build_training_set(records, n_pure=45, n_mixed=45, seed=0, method=None) -> SplitManifest:
    """Per class: a seeded draw of ``n_pure`` fully homogeneous segments plus the
    ``n_mixed`` least homogeneous ones below 1.0 (ascending; ties by larger
    pixel count, then smaller key).  Every other record becomes test data."""
    records = list(records)
    rng = np.random.default_rng(seed)
    train = {}
    deficits = []
    for cls in (FOREST, DEFORESTATION):
        rs = [r for r in records if r.dominant_class == cls]
        pure = sorted(r.key for r in rs if r.homogeneity == 1.0)
        mixed = [r for r in rs if r.homogeneity < 1.0]
        if len(pure) < n_pure:
            deficits.append(f"{CLASS_NAMES[cls]}: {len(pure)} pure segments, {n_pure} required")
        if len(mixed) < n_mixed:
            deficits.append(f"{CLASS_NAMES[cls]}: {len(mixed)} mixed segments, {n_mixed} required")
        if deficits:
            continue
        picked = [pure[i] for i in sorted(rng.choice(len(pure), n_pure, replace=False))] if n_pure else []
        mixed.sort(key=lambda r: (r.homogeneity, -r.pixel_count, r.key))
        picked += [r.key for r in mixed[:n_mixed]]
        train[cls] = sorted(picked)
    if deficits:
        raise DatasetError("not enough useful segments: " + "; ".join(deficits))
    chosen = {k for ids in train.values() for k in ids}
    test = sorted(r.key for r in records if r.key not in chosen)
    method = method or (records[0].method if records else "")
    prov = {"n_pure": n_pure, "n_mixed": n_mixed, "seed": seed,
            "n_train": len(chosen), "n_test": len(test), "rule": "draw"}
    return SplitManifest(method, train, test, prov)


@dataclass
class Matching:
    mapping: dict
    unmatched: list
    injective: bool


def match_segments(ref: Segmentation, other: Segmentation, ids) -> Matching:
    """Map each ``ref`` segment to the ``other`` segment it overlaps most.

    Ties go to the larger other segment, then to the smaller id.
    """
    a = np.asarray(ref.labels)
    b = np.asarray(other.labels)
    if a.shape != b.shape or not np.array_equal(a >= 0, b >= 0):
        raise DatasetError("segmentations must share dimensions and mask")
    inside = a >= 0
    aa = a[inside].astype(np.int64)
    bb = b[inside].astype(np.int64)
    kb = other.k_actual
    sizes_b = np.bincount(bb, minlength=kb)
    ids = [int(i) for i in ids]
    want = np.zeros(ref.k_actual, dtype=bool)
    want[ids] = True
    sel = want[aa]
    pairs = aa[sel] * kb + bb[sel]
    uniq, cnt = np.unique(pairs, return_counts=True)
    ra, rb = np.divmod(uniq, kb)
    best = {}
    for i, j, n in zip(ra.tolist(), rb.tolist(), cnt.tolist()):
        cand = (-n, -int(sizes_b[j]), j)
        if i not in best or cand < best[i]:
            best[i] = cand
    mapping = {i: best[i][2] for i in ids if i in best}
    unmatched = [i for i in ids if i not in best]
    targets = list(mapping.values())
    return Matching(mapping, unmatched, len(set(targets)) == len(targets))


def stratified_holdout(keys, classes, fraction=0.25, seed=0):
    """Split ``keys`` into (kept, held) with about ``fraction`` of each class held.

    Per class, keys are sorted, shuffled with ``default_rng(seed)`` and the
    first ``floor(fraction * n + 0.5)`` held out.
    """
    rng = np.random.default_rng(seed)
    keys = list(keys)
    classes = np.asarray(classes)
    held = set()
    for cls in sorted(set(classes.tolist())):
        ks = sorted(k for k, c in zip(keys, classes) if c == cls)
        n = int(np.floor(fraction * len(ks) + 0.5))
        perm = rng.permutation(len(ks))
        held.update(ks[i] for i in perm[:n])
    kept = sorted(k for k in keys if k not in held)
    return kept, sorted(held)
