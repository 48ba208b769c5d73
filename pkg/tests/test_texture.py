import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from spxforest.raster import Raster
from spxforest.superpixel import Segmentation
from spxforest.texture import (
    DIRECTIONS,
    FEATURE_NAMES,
    EmptyGlcmError,
    Glcm,
    glcm,
    haralick13,
    quantize,
    segment_features,
)


def close(a, b, rel=1e-9):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.all(np.abs(a - b) <= rel * np.maximum(1.0, np.abs(b)))


def random_segment(rng, h=8, w=8, fill=0.7):
    keep = rng.random((h, w)) < fill
    keep[0, 0] = keep[0, 1] = True
    rows, cols = np.nonzero(keep)
    return rows, cols


class TestQuantize:
    def test_constant(self):
        assert np.all(quantize(np.full(5, 3.0), 8) == 0)

    def test_endpoints(self):
        assert quantize(np.array([0.0, 1.0]), 8).tolist() == [0, 7]

    def test_matches_binning_oracle(self):
        v = np.random.default_rng(0).random(1000)
        q = quantize(v, 8)
        want = oracles.bin_levels(v.tolist(), v.min(), v.max(), 8)
        assert np.array_equal(np.bincount(q, minlength=8), np.bincount(want, minlength=8))
        assert q.tolist() == want

    def test_global_range(self):
        assert quantize(np.array([0.5]), 4, 0.0, 1.0).tolist() == [2]

    def test_levels_validated(self):
        with pytest.raises(ValueError):
            quantize(np.zeros(3), 1)


class TestGlcm:
    def test_constant_segment(self):
        rows, cols = np.mgrid[0:3, 0:3]
        g = glcm(rows.ravel(), cols.ravel(), np.zeros(9), 0, levels=2)
        assert g.matrix[0, 0] == 1.0 and g.matrix.sum() == 1.0

    def test_checkerboard(self):
        g = glcm([0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0], 0, levels=2)
        assert np.array_equal(g.matrix, [[0, 0.5], [0.5, 0]])
        assert haralick13(g)[FEATURE_NAMES.index("contrast")] == pytest.approx(1.0)

    def test_empty_marker(self):
        g = glcm([0], [0], [1], 0, levels=4)
        assert g.empty
        with pytest.raises(EmptyGlcmError):
            haralick13(g)

    def test_directions_are_image_offsets(self):
        # 45 degrees pairs a pixel with its up-right neighbour
        g = glcm([1, 0], [0, 1], [0, 1], 45, levels=2)
        assert g.matrix[0, 1] == 0.5
        assert glcm([1, 0], [0, 1], [0, 1], 135, levels=2).empty

    @pytest.mark.parametrize("direction", sorted(DIRECTIONS))
    def test_matches_pair_enumeration(self, direction):
        rng = np.random.default_rng(direction)
        for _ in range(20):
            rows, cols = random_segment(rng, 10, 10)
            q = rng.integers(0, 6, rows.size)
            g = glcm(rows, cols, q, direction, levels=6)
            want = oracles.glcm_pairs(list(zip(rows.tolist(), cols.tolist(), q.tolist())), direction, 6)
            if want is None:
                assert g.empty
            else:
                assert np.allclose(g.matrix, want, rtol=0, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from(sorted(DIRECTIONS)))
    def test_sum_and_symmetry(self, seed, direction):
        rng = np.random.default_rng(seed)
        rows, cols = random_segment(rng, 6, 6)
        g = glcm(rows, cols, rng.integers(0, 5, rows.size), direction, levels=5)
        if not g.empty:
            assert g.matrix.sum() == pytest.approx(1.0)
            assert np.array_equal(g.matrix, g.matrix.T)

    def test_enumeration_order_invariance(self):
        rng = np.random.default_rng(5)
        rows, cols = random_segment(rng)
        q = rng.integers(0, 8, rows.size)
        perm = rng.permutation(rows.size)
        a = glcm(rows, cols, q, 90, levels=8)
        b = glcm(rows[perm], cols[perm], q[perm], 90, levels=8)
        assert np.allclose(a.matrix, b.matrix)


class TestHaralick:
    def test_constant(self):
        m = np.zeros((4, 4))
        m[2, 2] = 1.0
        f = dict(zip(FEATURE_NAMES, haralick13(Glcm(4, m, 0, 1))))
        assert f["asm"] == 1.0 and f["entropy"] == 0.0 and f["contrast"] == 0.0
        assert f["correlation"] == 0.0

    def test_matches_naive_oracle_100_segments(self):
        rng = np.random.default_rng(11)
        n = 0
        while n < 100:
            rows, cols = random_segment(rng)
            d = int(rng.choice(sorted(DIRECTIONS)))
            g = glcm(rows, cols, rng.integers(0, 16, rows.size), d, levels=16)
            if g.empty:
                continue
            assert close(haralick13(g), oracles.haralick_naive(g.matrix.tolist()))
            n += 1

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31))
    def test_ranges(self, seed):
        rng = np.random.default_rng(seed)
        rows, cols = random_segment(rng, 7, 7)
        g = glcm(rows, cols, rng.integers(0, 8, rows.size), 0, levels=8)
        if g.empty:
            return
        f = dict(zip(FEATURE_NAMES, haralick13(g)))
        assert 0 < f["asm"] <= 1 + 1e-12
        assert f["entropy"] >= 0
        assert 0 < f["idm"] <= 1 + 1e-12
        assert -1 - 1e-12 <= f["correlation"] <= 1 + 1e-12
        assert np.all(np.isfinite(list(f.values())))


class TestSegmentFeatures:
    def random_case(self, n_bands, seed=0, h=24, w=24, k=12):
        rng = np.random.default_rng(seed)
        data = rng.random((n_bands, h, w))
        labels = rng.integers(0, k, (h, w))
        labels[:2] = np.arange(w) % k  # every id present
        return Raster(data), Segmentation(labels, k)

    def oracle_features(self, raster, seg, levels):
        valid = seg.labels >= 0
        out = {}
        for s in range(seg.k_actual):
            rows, cols = np.nonzero(seg.labels == s)
            vals = []
            for band in raster.data:
                q = oracles.bin_levels(band[rows, cols].tolist(), band[valid].min(), band[valid].max(), levels)
                for d in sorted(DIRECTIONS):
                    P = oracles.glcm_pairs(list(zip(rows.tolist(), cols.tolist(), q)), d, levels)
                    if P is not None:
                        vals.append(oracles.haralick_naive(P.tolist()))
            if vals:
                out[s] = np.mean(vals, axis=0)
        return out

    def test_four_bands_equal_mean_of_16_pairs(self):
        raster, seg = self.random_case(4, seed=1, k=3)
        got = segment_features(raster, seg, levels=8)
        want = self.oracle_features(raster, seg, 8)
        assert got.segment_ids.tolist() == sorted(want)
        for i, s in enumerate(got.segment_ids):
            assert close(got.values[i], want[s])

    def test_duplicate_band_is_identity(self):
        raster, seg = self.random_case(1, seed=2)
        two = Raster(np.concatenate([raster.data, raster.data]))
        a = segment_features(raster, seg, levels=16)
        b = segment_features(two, seg, levels=16)
        assert np.allclose(a.values, b.values, rtol=1e-12, atol=1e-15)

    def test_constant_segment(self):
        data = np.zeros((1, 6, 6))
        data[0, :, 3:] = 1.0
        labels = (np.arange(6)[None, :] >= 3).repeat(6, 0).astype(np.int64)
        f = segment_features(Raster(data), Segmentation(labels, 2), levels=4)
        assert np.allclose(f.values[:, FEATURE_NAMES.index("asm")], 1.0)
        assert np.allclose(f.values[:, FEATURE_NAMES.index("entropy")], 0.0)

    def test_single_pixel_segment_excluded(self):
        labels = np.zeros((5, 5), dtype=np.int64)
        labels[2, 2] = 1
        labels[0, 0] = 2
        data = np.random.default_rng(0).random((1, 5, 5))
        f = segment_features(Raster(data), Segmentation(labels, 3), levels=8)
        assert f.excluded == [1, 2]
        assert f.segment_ids.tolist() == [0]

    def test_averaging_order_identity(self):
        raster, seg = self.random_case(4, seed=3, k=4)
        per = np.array([[segment_features(Raster(b[None]), seg, levels=8, directions=(d,)).values
                         for d in sorted(DIRECTIONS)] for b in raster.data])
        flat = per.reshape(16, *per.shape[2:]).mean(axis=0)
        nested = per.mean(axis=1).mean(axis=0)
        got = segment_features(raster, seg, levels=8).values
        assert np.allclose(flat, nested, rtol=1e-12)
        assert np.allclose(got, flat, rtol=1e-12)

    def test_band_selection(self):
        raster, seg = self.random_case(3, seed=4)
        named = Raster(raster.data, ("B6", "B4", "B3"))
        a = segment_features(named, seg, bands=["B4"], levels=8)
        b = segment_features(Raster(raster.data[1:2]), seg, levels=8)
        assert np.array_equal(a.values, b.values)

    def test_masked_pixels_ignored(self):
        raster, seg = self.random_case(1, seed=5)
        labels = seg.labels.copy()
        labels[10:12] = -1
        spoiled = raster.data.copy()
        spoiled[:, 10:12] = 50.0
        ids = np.unique(labels[labels >= 0])
        relabel = np.full(seg.k_actual, -1)
        relabel[ids] = np.arange(ids.size)
        labels = np.where(labels >= 0, relabel[np.maximum(labels, 0)], -1)
        s2 = Segmentation(labels, ids.size)
        a = segment_features(raster, s2, levels=8)
        b = segment_features(Raster(spoiled), s2, levels=8)
        assert np.array_equal(a.values, b.values)
