"""Multiband rasters, masks and label maps.

Rasters live on disk in a flat-binary layout: a UTF-8 text header with one
``key=value`` per line next to a ``.bin`` payload holding band-sequential,
row-major samples.  ``dtype`` is ``f32le`` for rasters, ``u8`` for masks and
label maps and ``u32le`` for segmentations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FOREST = 0
DEFORESTATION = 1
INVALID = 255

_DTYPES = {
    "f32le": np.dtype("<f4"),
    "u8": np.dtype("u1"),
    "u32le": np.dtype("<u4"),
}


class RasterError(ValueError):
    """Raised for malformed raster files or inconsistent raster inputs."""


@dataclass(frozen=True)
class Raster:
    """Multiband image stored as ``data[band, row, col]``."""

    data: np.ndarray
    band_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3 or min(data.shape) < 1:
            raise RasterError(f"raster data must be (bands, height, width), got {data.shape}")
        bad = np.flatnonzero(~np.isfinite(data.ravel()))
        if bad.size:
            b, r, c = np.unravel_index(bad[0], data.shape)
            raise RasterError(f"non-finite sample at band {b}, pixel {r * data.shape[2] + c} (row {r}, col {c})")
        names = tuple(self.band_names) or tuple(f"B{i + 1}" for i in range(data.shape[0]))
        if len(names) != data.shape[0]:
            raise RasterError(f"{len(names)} band names for {data.shape[0]} bands")
        if len(set(names)) != len(names):
            raise RasterError(f"duplicate band names: {names}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "band_names", names)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1:]

    def band(self, name: str) -> np.ndarray:
        return self.data[self.band_names.index(name)]


@dataclass(frozen=True)
class Mask:
    """Per-pixel validity; pixels outside the mask take no part in any step."""

    valid: np.ndarray

    def __post_init__(self):
        valid = np.asarray(self.valid, dtype=bool)
        if valid.ndim != 2:
            raise RasterError("mask must be 2-D")
        if not valid.any():
            raise RasterError("mask has no valid pixel")
        valid.setflags(write=False)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def full(cls, height: int, width: int) -> "Mask":
        return cls(np.ones((height, width), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.valid.shape

    @property
    def count(self) -> int:
        return int(self.valid.sum())


@dataclass(frozen=True)
class GrayImage:
    values: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class LabelMap:
    """Reference classes: 0 forest, 1 deforestation, 255 invalid."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.ndim != 2:
            raise RasterError("label map must be 2-D")
        codes = np.unique(labels)
        unknown = set(codes.tolist()) - {FOREST, DEFORESTATION, INVALID}
        if unknown:
            raise RasterError(f"unknown label codes {sorted(unknown)}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def check_mask(self, mask: Mask) -> None:
        if self.shape != mask.shape:
            raise RasterError(f"label map {self.shape} does not match mask {mask.shape}")
        if not np.array_equal(self.labels == INVALID, ~mask.valid):
            raise RasterError("label map must be invalid exactly where the mask is invalid")


# -- flat-binary IO ---------------------------------------------------------

def _payload_path(header: Path) -> Path:
    return header.with_suffix(".bin")


def write_header(path, fields: dict) -> None:
    lines = [f"{k}={v}" for k, v in fields.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_header(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise RasterError(f"missing header file {path}")
    fields = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise RasterError(f"{path}: malformed header line {line!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    for key in ("width", "height", "bands", "dtype"):
        if key not in fields:
            raise RasterError(f"{path}: header lacks {key!r}")
    if fields.get("interleave", "bsq") != "bsq":
        raise RasterError(f"{path}: only band-sequential interleave is supported")
    if fields["dtype"] not in _DTYPES:
        raise RasterError(f"{path}: unsupported dtype {fields['dtype']!r}")
    return fields


def write_array(path, array: np.ndarray, dtype: str, band_names=None, extra=None) -> None:
    """Write a ``(bands, height, width)`` or ``(height, width)`` array."""
    path = Path(path)
    array = np.asarray(array)
    if array.ndim == 2:
        array = array[None]
    fields = {
        "width": array.shape[2],
        "height": array.shape[1],
        "bands": array.shape[0],
        "dtype": dtype,
        "interleave": "bsq",
    }
    if band_names:
        fields["band_names"] = ",".join(band_names)
    if extra:
        fields.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_header(path, fields)
    _payload_path(path).write_bytes(np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes())


def read_array(path, expect_dtype: str | None = None) -> tuple[np.ndarray, dict]:
    path = Path(path)
    fields = read_header(path)
    if expect_dtype is not None and fields["dtype"] != expect_dtype:
        raise RasterError(f"{path}: expected dtype {expect_dtype}, found {fields['dtype']}")
    w, h, b = (int(fields[k]) for k in ("width", "height", "bands"))
    if min(w, h, b) < 1:
        raise RasterError(f"{path}: dimensions must be positive")
    payload = _payload_path(path)
    if not payload.exists():
        raise RasterError(f"missing payload file {payload}")
    dtype = _DTYPES[fields["dtype"]]
    raw = payload.read_bytes()
    expected = w * h * b
    if len(raw) != expected * dtype.itemsize:
        raise RasterError(
            f"{payload}: size mismatch, header needs {expected} samples, "
            f"payload holds {len(raw) / dtype.itemsize:g}"
        )
    array = np.frombuffer(raw, dtype=dtype).reshape(b, h, w).copy()
    return array, fields


def save_raster(path, raster: Raster) -> None:
    write_array(path, raster.data, "f32le", band_names=raster.band_names)


def load_raster(path) -> Raster:
    data, fields = read_array(path, "f32le")
    names = tuple(n for n in fields.get("band_names", "").split(",") if n)
    return Raster(data.astype(np.float32), names)


def save_mask(path, mask: Mask) -> None:
    write_array(path, mask.valid.astype(np.uint8), "u8")


def load_mask(path) -> Mask:
    data, _ = read_array(path, "u8")
    if data.shape[0] != 1:
        raise RasterError(f"{path}: a mask has exactly one band")
    if not np.isin(data, (0, 1)).all():
        raise RasterError(f"{path}: mask samples must be 0 or 1")
    return Mask(data[0].astype(bool))


def save_label_map(path, labels: LabelMap) -> None:
    write_array(path, labels.labels, "u8")


def load_label_map(path) -> LabelMap:
    data, _ = read_array(path, "u8")
    if data.shape[0] != 1:
        raise RasterError(f"{path}: a label map has exactly one band")
    return LabelMap(data[0])


# -- preprocessing ----------------------------------------------------------

def _check_dims(raster: Raster, mask: Mask) -> None:
    if raster.shape != mask.shape:
        raise RasterError(f"raster {raster.shape} and mask {mask.shape} differ in size")


def select_bands(raster: Raster, names) -> Raster:
    """Sub-raster with the named bands in the requested order."""
    names = tuple(names)
    missing = [n for n in names if n not in raster.band_names]
    if missing:
        raise RasterError(f"unknown band label(s): {', '.join(missing)}")
    if names == raster.band_names:
        return raster
    idx = [raster.band_names.index(n) for n in names]
    return Raster(raster.data[idx], names)


def pca_first_component(raster: Raster, mask: Mask) -> GrayImage:
    """Project valid pixels onto the leading principal axis, rescaled to [0, 1].

    Statistics use mask-valid pixels only and invalid pixels are set to 0.
    The eigenvector sign is chosen so its largest-magnitude entry is positive.
    """
    _check_dims(raster, mask)
    valid = mask.valid
    if valid.sum() < 2:
        raise RasterError("PCA needs at least two valid pixels")
    x = raster.data[:, valid].astype(np.float64).T
    x = x - x.mean(axis=0)
    cov = x.T @ x / (x.shape[0] - 1)
    if not np.any(np.diag(cov) > 0):
        raise RasterError("degenerate input: every band is constant over the mask")
    evals, evecs = np.linalg.eigh(cov)
    v = evecs[:, np.argmax(evals)]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    proj = x @ v
    lo, hi = proj.min(), proj.max()
    out = np.zeros(raster.shape, dtype=np.float64)
    out[valid] = (proj - lo) / (hi - lo)
    return GrayImage(out)
