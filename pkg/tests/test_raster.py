import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from spxforest.raster import (
    INVALID,
    LabelMap,
    Mask,
    Raster,
    RasterError,
    load_label_map,
    load_mask,
    load_raster,
    pca_first_component,
    read_header,
    save_label_map,
    save_mask,
    save_raster,
    select_bands,
)


class TestFormat:
    def test_header_and_payload(self, tmp_path):
        data = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        save_raster(tmp_path / "r.hdr", Raster(data, ("B6", "B4")))
        hdr = read_header(tmp_path / "r.hdr")
        assert (hdr["width"], hdr["height"], hdr["bands"]) == ("4", "3", "2")
        assert hdr["dtype"] == "f32le" and hdr["interleave"] == "bsq"
        assert (tmp_path / "r.bin").stat().st_size == 24 * 4
        r = load_raster(tmp_path / "r.hdr")
        assert r.band_names == ("B6", "B4")
        assert r.data.tobytes() == data.tobytes()

    def test_payload_is_little_endian_band_sequential(self, tmp_path):
        data = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        save_raster(tmp_path / "r.hdr", Raster(data))
        raw = np.frombuffer((tmp_path / "r.bin").read_bytes(), dtype="<f4")
        assert np.array_equal(raw, np.arange(24))

    def test_size_mismatch(self, tmp_path):
        save_raster(tmp_path / "r.hdr", Raster(np.zeros((2, 3, 4), dtype=np.float32)))
        (tmp_path / "r.bin").write_bytes(np.zeros(23, dtype="<f4").tobytes())
        with pytest.raises(RasterError, match="size mismatch"):
            load_raster(tmp_path / "r.hdr")

    def test_missing_file(self, tmp_path):
        with pytest.raises((RasterError, FileNotFoundError)):
            load_raster(tmp_path / "nope.hdr")

    def test_non_finite_sample_names_pixel(self):
        data = np.zeros((1, 3, 4), dtype=np.float32)
        data[0, 1, 2] = np.nan
        with pytest.raises(RasterError, match="pixel 6"):
            Raster(data)

    def test_mask_and_labels_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        valid = rng.random((5, 7)) > 0.3
        labels = np.where(valid, rng.integers(0, 2, (5, 7)), INVALID)
        save_mask(tmp_path / "m.hdr", Mask(valid))
        save_label_map(tmp_path / "l.hdr", LabelMap(labels))
        assert np.array_equal(load_mask(tmp_path / "m.hdr").valid, valid)
        assert np.array_equal(load_label_map(tmp_path / "l.hdr").labels, labels)
        load_label_map(tmp_path / "l.hdr").check_mask(Mask(valid))

    def test_empty_mask_rejected(self):
        with pytest.raises(RasterError):
            Mask(np.zeros((2, 2), dtype=bool))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
    def test_round_trip_property(self, tmp_path_factory, b, h, w, seed):
        d = tmp_path_factory.mktemp("rt")
        data = np.random.default_rng(seed).normal(size=(b, h, w)).astype(np.float32)
        save_raster(d / "x.hdr", Raster(data))
        assert load_raster(d / "x.hdr").data.tobytes() == data.tobytes()


class TestSelectBands:
    raster = Raster(np.arange(4 * 6, dtype=np.float32).reshape(4, 2, 3), ("B1", "B3", "B4", "B6"))

    def test_subset_in_requested_order(self):
        r = select_bands(self.raster, ["B6", "B4"])
        assert r.band_names == ("B6", "B4")
        assert np.array_equal(r.data, self.raster.data[[3, 2]])

    def test_identity(self):
        r = select_bands(self.raster, self.raster.band_names)
        assert np.array_equal(r.data, self.raster.data)

    def test_unknown(self):
        with pytest.raises(RasterError, match="B9"):
            select_bands(self.raster, ["B9"])


class TestPCA:
    def test_single_band_is_rescaled_band(self):
        band = np.random.default_rng(1).normal(size=(6, 5))
        g = pca_first_component(Raster(band[None]), Mask.full(6, 5))
        assert np.allclose(g.values, (band - band.min()) / (band.max() - band.min()))

    def test_collinear_bands(self):
        band = np.random.default_rng(2).normal(size=(6, 5))
        g = pca_first_component(Raster(np.stack([band, 2 * band])), Mask.full(6, 5))
        assert np.allclose(g.values, (band - band.min()) / np.ptp(band))

    def test_matches_power_iteration_oracle(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(3, 8, 8)) * np.array([3.0, 1.0, 0.5])[:, None, None]
        valid = np.ones((8, 8), dtype=bool)
        g = pca_first_component(Raster(data), Mask(valid))
        assert np.max(np.abs(g.values - oracles.pca_power_iteration(data, valid))) < 1e-9

    def test_invalid_pixels_ignored_and_zero(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(2, 6, 6))
        valid = np.ones((6, 6), dtype=bool)
        valid[:2] = False
        spoiled = data.copy()
        spoiled[:, :2] = 1e6
        a = pca_first_component(Raster(data), Mask(valid)).values
        b = pca_first_component(Raster(spoiled), Mask(valid)).values
        assert np.allclose(a, b)
        assert np.all(a[~valid] == 0)
        assert a[valid].min() == 0.0 and a[valid].max() == 1.0

    def test_constant_offset_invariance(self):
        data = np.random.default_rng(5).normal(size=(3, 5, 5))
        shifted = data + np.array([10.0, -3.0, 0.0])[:, None, None]
        m = Mask.full(5, 5)
        assert np.allclose(pca_first_component(Raster(data), m).values,
                           pca_first_component(Raster(shifted), m).values)

    def test_degenerate(self):
        with pytest.raises(RasterError, match="degenerate"):
            pca_first_component(Raster(np.ones((2, 3, 3))), Mask.full(3, 3))
