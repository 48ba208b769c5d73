import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from spxforest.dataset import (
    DatasetError,
    SegmentRecord,
    build_training_set,
    filter_useful,
    match_segments,
    segment_stats,
    stratified_holdout,
)
from spxforest.raster import DEFORESTATION, FOREST, INVALID, LabelMap
from spxforest.superpixel import Segmentation


def rec(i, n=100, h=1.0, cls=FOREST, area="0"):
    ff = h if cls == FOREST else 1 - h
    return SegmentRecord(i, "slic", area, n, ff, 1 - ff, cls, h)


def synthetic_records(n=200, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        h = 1.0 if rng.random() < 0.4 else float(np.round(rng.uniform(0.71, 0.99), 2))
        out.append(rec(i, int(rng.integers(71, 90)), h, int(rng.integers(0, 2)), area=str(i % 3)))
    return out


class TestSegmentStats:
    def test_pure_and_mixed(self):
        labels = np.zeros((10, 20), dtype=np.int64)
        labels[:, 10:] = 1
        cls = np.full((10, 20), FOREST, dtype=np.uint8)
        cls[:3, 10:] = DEFORESTATION
        recs = segment_stats(Segmentation(labels, 2, "slic"), LabelMap(cls))
        assert (recs[0].forest_fraction, recs[0].homogeneity, recs[0].pixel_count) == (1.0, 1.0, 100)
        assert recs[1].homogeneity == pytest.approx(0.7)
        assert recs[1].dominant_class == FOREST

    def test_random_map_matches_tally(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 6, (16, 16))
        labels[0, :6] = np.arange(6)
        cls = rng.choice([FOREST, DEFORESTATION, INVALID], (16, 16), p=[0.5, 0.4, 0.1]).astype(np.uint8)
        recs = segment_stats(Segmentation(labels, 6, "ergc"), LabelMap(cls))
        for r in recs:
            f = d = 0
            for y in range(16):
                for x in range(16):
                    if labels[y, x] == r.segment_id:
                        f += cls[y, x] == FOREST
                        d += cls[y, x] == DEFORESTATION
            assert r.pixel_count == f + d
            assert r.forest_fraction == pytest.approx(f / (f + d))
            assert r.forest_fraction + r.deforestation_fraction == pytest.approx(1.0)
            assert 0.5 <= r.homogeneity <= 1.0

    def test_all_invalid_segment_unusable(self):
        labels = np.zeros((4, 4), dtype=np.int64)
        labels[:, 2:] = 1
        cls = np.zeros((4, 4), dtype=np.uint8)
        cls[:, 2:] = INVALID
        recs = segment_stats(Segmentation(labels, 2), LabelMap(cls))
        assert recs[0].usable and not recs[1].usable
        assert filter_useful(recs, 0, 0.0) == [recs[0]]


class TestFilter:
    def test_strict_thresholds(self):
        assert filter_useful([rec(0, n=70)]) == []
        assert filter_useful([rec(0, n=100, h=0.70)]) == []
        assert filter_useful([rec(0, n=71, h=0.71)]) == [rec(0, n=71, h=0.71)]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 200), st.floats(0.5, 1.0), st.integers(0, 30), st.floats(0.0, 0.2))
    def test_monotone(self, px, h, dpx, dh):
        recs = synthetic_records(60, seed=px)
        a = {r.key for r in filter_useful(recs, px, h)}
        b = {r.key for r in filter_useful(recs, px + dpx, min(1.0, h + dh))}
        assert b <= a


class TestBuildTrainingSet:
    def test_single_mixed_per_class(self):
        recs = [rec(0, h=0.8), rec(1, h=0.75), rec(2, h=0.9, cls=DEFORESTATION), rec(3, h=1.0)]
        m = build_training_set(recs, n_pure=0, n_mixed=1)
        assert m.train == {FOREST: [("0", 1)], DEFORESTATION: [("0", 2)]}
        assert m.test == [("0", 0), ("0", 3)]

    def test_matches_sort_and_pick_oracle(self):
        recs = synthetic_records(200, seed=3)
        m = build_training_set(recs, n_pure=8, n_mixed=8, seed=5)
        m.check()
        rng = np.random.default_rng(5)
        for cls in (FOREST, DEFORESTATION):
            rs = [r for r in recs if r.dominant_class == cls]
            pure = sorted(r.key for r in rs if r.homogeneity == 1.0)
            draw = {pure[i] for i in rng.choice(len(pure), 8, replace=False)}
            # full sort over every mixed record, then take the head
            mixed = sorted((r for r in rs if r.homogeneity < 1.0),
                           key=lambda r: (r.homogeneity, -r.pixel_count, r.area_id, r.segment_id))
            want = draw | {r.key for r in mixed[:8]}
            assert set(m.train[cls]) == want
        assert len(m.train_ids()) == 32
        assert len(m.test) == 200 - 32

    def test_quota_deficit(self):
        with pytest.raises(DatasetError, match="deforestation: 0 pure"):
            build_training_set([rec(0), rec(1, h=0.8)], n_pure=1, n_mixed=0)

    def test_deterministic(self):
        recs = synthetic_records(120)
        a = build_training_set(recs, 5, 5, seed=9)
        b = build_training_set(list(reversed(recs)), 5, 5, seed=9)
        assert a.train == b.train and a.test == b.test

    def test_default_quota_gives_180(self):
        recs = [rec(i, h=1.0, cls=i % 2) for i in range(200)]
        recs += [rec(200 + i, h=0.8 + i / 1000, cls=i % 2) for i in range(120)]
        m = build_training_set(recs)
        assert len(m.train_ids()) == 180


class TestMatch:
    def test_identity(self):
        labels = np.arange(16).reshape(4, 4)
        s = Segmentation(labels, 16)
        m = match_segments(s, s, range(16))
        assert m.mapping == {i: i for i in range(16)} and m.injective

    def test_majority_side(self):
        ref = Segmentation(np.zeros((10, 10), dtype=np.int64), 1)
        other = np.zeros((10, 10), dtype=np.int64)
        other[:, 6:] = 1
        assert match_segments(ref, Segmentation(other, 2), [0]).mapping == {0: 0}

    def test_not_injective_reported(self):
        ref = np.zeros((4, 4), dtype=np.int64)
        ref[:, 2:] = 1
        m = match_segments(Segmentation(ref, 2), Segmentation(np.zeros((4, 4), np.int64), 1), [0, 1])
        assert m.mapping == {0: 0, 1: 0} and not m.injective

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_cross_tabulation(self, seed):
        rng = np.random.default_rng(seed)
        valid = rng.random((16, 16)) > 0.1
        a = np.where(valid, rng.integers(0, 7, (16, 16)), -1)
        b = np.where(valid, rng.integers(0, 5, (16, 16)), -1)
        ids = sorted(set(a[valid].tolist()))
        m = match_segments(Segmentation(a, int(a.max()) + 1), Segmentation(b, int(b.max()) + 1), ids)
        assert m.mapping == oracles.overlap_argmax(a, b, ids)

    def test_mask_mismatch(self):
        a = np.zeros((3, 3), dtype=np.int64)
        b = a.copy()
        b[0, 0] = -1
        with pytest.raises(DatasetError):
            match_segments(Segmentation(a, 1), Segmentation(b, 1), [0])


class TestHoldout:
    def test_per_class_fraction(self):
        keys = [("0", i) for i in range(40)]
        classes = [i % 4 == 0 for i in range(40)]
        kept, held = stratified_holdout(keys, classes, 0.25, seed=1)
        assert set(kept).isdisjoint(held) and len(kept) + len(held) == 40
        held_pos = sum(1 for k in held if k[1] % 4 == 0)
        # half-up rounding: 2.5 -> 3 positives, 7.5 -> 8 negatives
        assert held_pos == 3 and len(held) - held_pos == 8

    def test_deterministic(self):
        keys = [("0", i) for i in range(30)]
        cls = [i % 2 for i in range(30)]
        assert stratified_holdout(keys, cls, 0.3, 4) == stratified_holdout(keys[::-1], cls[::-1], 0.3, 4)
