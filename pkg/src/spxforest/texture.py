"""Gray-level co-occurrence matrices and the 13 Haralick texture features.

Features per segment are computed for every (band, direction) pair and
averaged, so each segment is described by 13 numbers whatever the number of
bands.  Logarithms are base 2 with ``0 log 0 = 0``.
"""

from dataclasses import dataclass

import numpy as np

from .raster import Raster, select_bands
from .superpixel.segmentation import Segmentation

FEATURE_NAMES = (
    "asm",
    "contrast",
    "correlation",
    "variance",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "imc1",
    "imc2",
)

# (row, col) offsets at distance 1 for 0, 45, 90 and 135 degrees
DIRECTIONS = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}

DEFAULT_LEVELS = 64
AVERAGING_NOTE = "per-band GLCM features averaged over 4 directions and all selected bands"


class EmptyGlcmError(ValueError):
    pass


@dataclass(frozen=True)
class Glcm:
    """Symmetric, normalised co-occurrence matrix.  ``matrix`` is None when the
    segment had no pixel pair at this offset (the empty marker)."""

    levels: int
    matrix: np.ndarray | None
    direction: int = 0
    distance: int = 1

    @property
    def empty(self) -> bool:
        return self.matrix is None


def quantize(values, levels=DEFAULT_LEVELS, vmin=None, vmax=None) -> np.ndarray:
    """Linear binning of ``[vmin, vmax]`` into ``levels`` bins (0-based).

    The range defaults to the min/max of ``values``; pass the whole band's range
    to quantise one segment consistently with the rest.  A constant range maps
    everything to level 0.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    v = np.asarray(values, dtype=np.float64)
    lo = float(v.min()) if vmin is None else float(vmin)
    hi = float(v.max()) if vmax is None else float(vmax)
    if not hi > lo:
        return np.zeros(v.shape, dtype=np.int64)
    q = np.floor((v - lo) / (hi - lo) * levels).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def glcm(rows, cols, levels_of, direction=0, distance=1, levels=DEFAULT_LEVELS) -> Glcm:
    """GLCM of one segment given its pixel coordinates and quantised levels."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    q = np.asarray(levels_of, dtype=np.int64)
    dy, dx = DIRECTIONS[direction]
    dy, dx = dy * distance, dx * distance
    # map coordinates to a compact local grid to look up partners
    r0, c0 = rows.min(), cols.min()
    h, w = rows.max() - r0 + 1, cols.max() - c0 + 1
    grid = np.full((h, w), -1, dtype=np.int64)
    grid[rows - r0, cols - c0] = q
    rr, cc = rows - r0 + dy, cols - c0 + dx
    inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    partner = np.full(q.shape, -1, dtype=np.int64)
    partner[inside] = grid[rr[inside], cc[inside]]
    ok = partner >= 0
    if not ok.any():
        return Glcm(levels, None, direction, distance)
    m = np.zeros((levels, levels))
    np.add.at(m, (q[ok], partner[ok]), 1.0)
    m = m + m.T
    return Glcm(levels, m / m.sum(), direction, distance)


def _xlogx(p):
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def haralick_batch(P: np.ndarray) -> np.ndarray:
    """Haralick features of a stack of normalised GLCMs, shape (n, G, G) -> (n, 13)."""
    P = np.asarray(P, dtype=np.float64)
    n, G, _ = P.shape
    lv = np.arange(G, dtype=np.float64)
    px = P.sum(axis=2)
    py = P.sum(axis=1)
    mux = px @ lv
    muy = py @ lv
    cx = lv[None, :] - mux[:, None]
    cy = lv[None, :] - muy[:, None]
    vx = (cx**2 * px).sum(axis=1)
    vy = (cy**2 * py).sum(axis=1)

    diff2 = (lv[:, None] - lv[None, :]) ** 2
    f = np.empty((n, 13))
    f[:, 0] = np.einsum("nij,nij->n", P, P)
    f[:, 1] = np.einsum("nij,ij->n", P, diff2)
    cov = np.einsum("nij,ni,nj->n", P, cx, cy)
    den = np.sqrt(vx * vy)
    f[:, 2] = np.where(den > 0, cov / np.where(den > 0, den, 1.0), 0.0)
    f[:, 3] = vx
    f[:, 4] = np.einsum("nij,ij->n", P, 1.0 / (1.0 + diff2))

    # p_{x+y}(k), k = 0..2G-2 and p_{x-y}(k), k = 0..G-1
    flat = P.reshape(n, -1)
    ks = (np.arange(G)[:, None] + np.arange(G)[None, :]).ravel()
    kd = np.abs(np.arange(G)[:, None] - np.arange(G)[None, :]).ravel()
    psum = flat @ (ks[:, None] == np.arange(2 * G - 1)[None, :])
    pdif = flat @ (kd[:, None] == np.arange(G)[None, :])
    ksum = np.arange(2 * G - 1, dtype=np.float64)
    kdif = np.arange(G, dtype=np.float64)
    f[:, 5] = psum @ ksum
    f[:, 6] = ((ksum[None, :] - f[:, 5:6]) ** 2 * psum).sum(axis=1)
    f[:, 7] = -_xlogx(psum).sum(axis=1)
    hxy = -_xlogx(flat).sum(axis=1)
    f[:, 8] = hxy
    mud = pdif @ kdif
    f[:, 9] = ((kdif[None, :] - mud[:, None]) ** 2 * pdif).sum(axis=1)
    f[:, 10] = -_xlogx(pdif).sum(axis=1)

    hx = -_xlogx(px).sum(axis=1)
    hy = -_xlogx(py).sum(axis=1)
    pxpy = px[:, :, None] * py[:, None, :]
    logpp = np.zeros_like(pxpy)
    nz = pxpy > 0
    logpp[nz] = np.log2(pxpy[nz])
    hxy1 = -np.einsum("nij,nij->n", P, logpp)
    hxy2 = -np.einsum("nij,nij->n", pxpy, logpp)
    hmax = np.maximum(hx, hy)
    f[:, 11] = np.where(hmax > 0, (hxy - hxy1) / np.where(hmax > 0, hmax, 1.0), 0.0)
    f[:, 12] = np.sqrt(np.maximum(1.0 - np.exp2(-2.0 * (hxy2 - hxy)), 0.0))
    return f


def haralick13(g: Glcm) -> np.ndarray:
    """The 13 Haralick statistics of one GLCM, in :data:`FEATURE_NAMES` order."""
    if g.empty:
        raise EmptyGlcmError(
            "empty co-occurrence matrix: the segment has no pixel pair at this offset; "
            "widen the segment filter (e.g. raise the minimum segment size)"
        )
    return haralick_batch(g.matrix[None])[0]


def _pair_glcms(labels, qband, k, levels, direction, chunk_cells=1 << 22):
    """Yield (segment range, GLCM counts) for all segments at one offset."""
    h, w = labels.shape
    dy, dx = DIRECTIONS[direction]
    ys = slice(max(0, -dy), h - max(0, dy))
    xs = slice(max(0, -dx), w - max(0, dx))
    yd = slice(max(0, dy), h - max(0, -dy))
    xd = slice(max(0, dx), w - max(0, -dx))
    a = labels[ys, xs].ravel()
    b = labels[yd, xd].ravel()
    same = (a == b) & (a >= 0)
    seg = a[same]
    code = qband[ys, xs].ravel()[same] * levels + qband[yd, xd].ravel()[same]
    order = np.argsort(seg, kind="stable")
    seg = seg[order]
    code = code[order]
    per = max(1, chunk_cells // (levels * levels))
    for s0 in range(0, k, per):
        s1 = min(k, s0 + per)
        lo, hi = np.searchsorted(seg, [s0, s1])
        idx = (seg[lo:hi] - s0) * levels * levels + code[lo:hi]
        counts = np.bincount(idx, minlength=(s1 - s0) * levels * levels).astype(np.float64)
        yield s0, s1, counts.reshape(s1 - s0, levels, levels)


@dataclass
class SegmentFeatures:
    """Feature table for one segmentation.  ``excluded`` lists ids of segments
    with no co-occurring pair in any (band, direction)."""

    segment_ids: np.ndarray
    values: np.ndarray
    excluded: list
    note: str = AVERAGING_NOTE


def segment_features(raster: Raster, seg: Segmentation, bands=None, levels=DEFAULT_LEVELS,
                     directions=(0, 45, 90, 135)) -> SegmentFeatures:
    """Average Haralick features per segment over bands and directions.

    Each band is quantised over its range on valid pixels.  A (band, direction)
    pair without co-occurring pixels is skipped for that segment; segments
    with no usable pair at all are excluded and reported.
    """
    r = select_bands(raster, bands) if bands else raster
    labels = np.asarray(seg.labels, dtype=np.int64)
    if labels.shape != r.data.shape[1:]:
        raise ValueError(f"segmentation shape {labels.shape} does not match raster {r.data.shape[1:]}")
    valid = labels >= 0
    k = seg.k_actual
    total = np.zeros((k, 13))
    used = np.zeros(k, dtype=np.int64)
    for band in r.data:
        band = np.asarray(band, dtype=np.float64)
        vals = band[valid]
        q = quantize(band, levels, vals.min(), vals.max())
        for d in directions:
            for s0, s1, counts in _pair_glcms(labels, q, k, levels, d):
                n = counts.sum(axis=(1, 2))
                has = n > 0
                if not has.any():
                    continue
                C = counts[has]
                C = C + C.transpose(0, 2, 1)
                C /= C.sum(axis=(1, 2), keepdims=True)
                ids = np.arange(s0, s1)[has]
                total[ids] += haralick_batch(C)
                used[ids] += 1
    keep = used > 0
    ids = np.flatnonzero(keep)
    return SegmentFeatures(ids, total[keep] / used[keep, None], np.flatnonzero(~keep).tolist())
