"""Segmentation container, parameters, persistence and quality measures."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..raster import GrayImage, Mask, RasterError, read_array, write_array

SENTINEL = -1
SENTINEL_U32 = 0xFFFFFFFF
METHODS = ("crs", "ergc", "etps", "rss", "slic")


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class SuperpixelParams:
    """Knobs shared by all five algorithms.

    ``min_size`` of ``None`` means a quarter of the mean segment area
    ``valid_area / k_target``.
    """

    k_target: int
    compactness: float = 0.1
    iterations: int = 10
    seed: int = 0
    min_size: int | None = None

    def __post_init__(self):
        if self.k_target < 1:
            raise SegmentationError("k_target must be >= 1")
        if self.iterations < 1:
            raise SegmentationError("iterations must be >= 1")
        if self.compactness < 0:
            raise SegmentationError("compactness must be nonnegative")
        if self.min_size is not None and self.min_size < 1:
            raise SegmentationError("min_size must be >= 1")

    def resolved_min_size(self, valid_area: int) -> int:
        if self.min_size is not None:
            return self.min_size
        return max(1, int(0.25 * valid_area / self.k_target))


@dataclass
class Segmentation:
    """Per-pixel segment ids ``0..k_actual-1``; masked-out pixels hold ``SENTINEL``."""

    labels: np.ndarray
    k_actual: int
    algorithm: str = ""
    params: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def valid(self) -> np.ndarray:
        return self.labels != SENTINEL

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.valid], minlength=self.k_actual)

    def check(self, mask: Mask | None = None) -> None:
        """Raise if any partition or connectivity invariant is broken."""
        labels = self.labels
        if mask is not None and not np.array_equal(labels != SENTINEL, mask.valid):
            raise SegmentationError("segmented pixels differ from the mask")
        ids = labels[labels != SENTINEL]
        if ids.size and (ids.min() < 0 or ids.max() >= self.k_actual):
            raise SegmentationError("segment id out of range")
        if np.any(np.bincount(ids, minlength=self.k_actual) == 0):
            raise SegmentationError("empty segment id")
        _, counts = connected_components(labels)
        if counts != self.k_actual:
            raise SegmentationError(f"{counts} 4-connected components for {self.k_actual} segments")


def connected_components(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components of equal-label regions (sentinel ignored)."""
    from ._kernels import label_components

    comp = label_components(np.ascontiguousarray(labels, dtype=np.int64))
    return comp, int(comp.max() + 1)


def check_inputs(gray: GrayImage, mask: Mask, params: SuperpixelParams) -> int:
    if gray.shape != mask.shape:
        raise SegmentationError(f"gray image {gray.shape} and mask {mask.shape} differ")
    n_valid = int(mask.valid.sum())
    if n_valid == 0:
        raise SegmentationError("empty mask")
    if params.k_target > n_valid:
        raise SegmentationError(f"k_target={params.k_target} exceeds {n_valid} valid pixels")
    if not np.all(np.isfinite(gray.values[mask.valid])):
        raise SegmentationError("gray image has non-finite values on valid pixels")
    return n_valid


# -- persistence ------------------------------------------------------------

def save_segmentation(path, seg: Segmentation) -> None:
    """Write the u32 label file and a ``.sidecar.txt`` with provenance."""
    path = Path(path)
    out = seg.labels.astype(np.int64)
    out[out == SENTINEL] = SENTINEL_U32
    write_array(path, out.astype(np.uint32), "u32le", extra={"sentinel": SENTINEL_U32})
    lines = [f"algorithm={seg.algorithm}", f"k_actual={seg.k_actual}"]
    lines += [f"params.{k}={v}" for k, v in seg.params.items()]
    lines += [f"info.{k}={v}" for k, v in seg.info.items() if np.isscalar(v) or isinstance(v, str)]
    sidecar_path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".sidecar.txt")


def load_segmentation(path) -> Segmentation:
    data, _ = read_array(path, "u32le")
    if data.shape[0] != 1:
        raise RasterError(f"{path}: a segmentation has exactly one band")
    raw = data[0].astype(np.int64)
    labels = np.where(raw == SENTINEL_U32, SENTINEL, raw)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        for line in side.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                meta[k] = v
    params = {k[7:]: v for k, v in meta.items() if k.startswith("params.")}
    info = {k[5:]: v for k, v in meta.items() if k.startswith("info.")}
    k_actual = int(meta.get("k_actual", labels.max() + 1))
    return Segmentation(labels, k_actual, meta.get("algorithm", ""), params, info)


def params_dict(params: SuperpixelParams) -> dict:
    return asdict(params)


# -- quality measures -------------------------------------------------------

def boundary_map(labels: np.ndarray) -> np.ndarray:
    """Pixels with a 4-neighbour carrying a different label (both sides marked)."""
    b = np.zeros(labels.shape, dtype=bool)
    dh = labels[:, 1:] != labels[:, :-1]
    dv = labels[1:, :] != labels[:-1, :]
    b[:, 1:] |= dh
    b[:, :-1] |= dh
    b[1:, :] |= dv
    b[:-1, :] |= dv
    return b


def boundary_recall(labels: np.ndarray, truth: np.ndarray, tolerance: int = 1, valid=None) -> float:
    """Fraction of ground-truth boundary pixels within ``tolerance`` (Chebyshev)
    of a segmentation boundary.  Boundaries against masked-out pixels are ignored."""
    if valid is None:
        valid = np.ones(labels.shape, dtype=bool)
    t = np.where(valid, truth, -1)
    s = np.where(valid, labels, -1)
    # boundaries that only exist because of the mask edge do not count
    gt = _inner_boundary(t, valid) & valid
    sb = _inner_boundary(s, valid) & valid
    if not gt.any():
        return 1.0
    near = ndimage.binary_dilation(sb, structure=np.ones((2 * tolerance + 1,) * 2, bool))
    return float((near & gt).sum() / gt.sum())


def _inner_boundary(labels: np.ndarray, valid: np.ndarray) -> np.ndarray:
    b = np.zeros(labels.shape, dtype=bool)
    dh = (labels[:, 1:] != labels[:, :-1]) & valid[:, 1:] & valid[:, :-1]
    dv = (labels[1:, :] != labels[:-1, :]) & valid[1:, :] & valid[:-1, :]
    b[:, 1:] |= dh
    b[:, :-1] |= dh
    b[1:, :] |= dv
    b[:-1, :] |= dv
    return b


def undersegmentation_error(labels: np.ndarray, truth: np.ndarray, valid=None) -> float:
    """Corrected undersegmentation error: leak of each segment outside its
    best-overlapping ground-truth region, over the valid area."""
    if valid is None:
        valid = np.ones(labels.shape, dtype=bool)
    s = labels[valid].astype(np.int64)
    t = truth[valid].astype(np.int64)
    t = np.unique(t, return_inverse=True)[1]
    table = np.zeros((s.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (s, t), 1)
    return float((table.sum(axis=1) - table.max(axis=1)).sum() / s.size)
