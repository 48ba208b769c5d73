"""The five superpixel algorithms on a single-band substrate.

All of them take the PCA gray image, the validity mask and a
:class:`SuperpixelParams`, and return a :class:`Segmentation` whose segments
are 4-connected, cover exactly the valid pixels and number about
``k_target``.  The formulations are single-band variants:

* SLIC: k-means on (intensity, row, col) inside a 2S x 2S window.
* ERGC: fast-marching region growing with a region-mean potential.
* ETPS: coarse-to-fine block moves on a variance + boundary-length energy.
* RSS: seeded path forest; max-step / intensity-range cost plus a hop term.
* CRS: contour relaxation of Gaussian likelihood + boundary-length objective.
"""

import math

import numpy as np

from ..raster import GrayImage, Mask
from . import _kernels as K
from ._grid import grid_cells, grid_seeds, lowest_gradient
from .connectivity import relabel_connected
from .segmentation import Segmentation, SuperpixelParams, check_inputs, params_dict

CRS_VAR_FLOOR = 1e-6

# Per-method defaults for an image rescaled to [0, 1].
DEFAULT_COMPACTNESS = {
    "slic": 0.3,
    "ergc": 0.05,
    "etps": 0.02,
    "rss": 0.5,
    "crs": 0.5,
}

NOTES = {
    "slic": "single-band SLIC: d=|dI|+(m/S)*dxy, masked pixels never assigned",
    "ergc": "upwind fast marching, potential |I-mean_region| + (m/S)*dist_to_seed",
    "etps": "block moves 2^j..1, energy=sum SSE + m*boundary_length, no colour/shape terms",
    "rss": "path cost max(max_step, range) + (m/S)*hops, ties by hops then root id",
    "crs": "Gaussian log-likelihood per segment (var floor 1e-6) - m*boundary_length",
}


def default_params(method: str, k_target: int, **overrides) -> SuperpixelParams:
    kw = {"k_target": k_target, "compactness": DEFAULT_COMPACTNESS[method]}
    kw.update(overrides)
    return SuperpixelParams(**kw)


def _finish(method, labels, mask, params, n_valid, min_size=None, **info):
    if min_size is None:
        min_size = params.resolved_min_size(n_valid)
    labels = relabel_connected(labels, mask.valid, min_size)
    k = int(labels.max()) + 1
    info.setdefault("note", NOTES[method])
    return Segmentation(labels, k, method, params_dict(params), info)


def _grid_partition(mask, params, n_valid):
    cells, _, _, step = grid_cells(mask.valid, params.k_target)
    labels = relabel_connected(cells, mask.valid, params.resolved_min_size(n_valid))
    return labels, int(labels.max()) + 1, step


def slic(gray: GrayImage, mask: Mask, params: SuperpixelParams) -> Segmentation:
    n_valid = check_inputs(gray, mask, params)
    img = np.ascontiguousarray(gray.values, dtype=np.float64)
    valid = np.ascontiguousarray(mask.valid)
    seeds, step = grid_seeds(valid, params.k_target)
    seeds = lowest_gradient(img, valid, seeds)
    h, w = img.shape
    ys, xs = np.divmod(seeds, w)
    centers = np.column_stack([ys, xs, img.ravel()[seeds]]).astype(np.float64)
    labels = K.slic_iterate(img, valid, centers, step, params.compactness, params.iterations)
    return _finish("slic", labels, mask, params, n_valid, step=step)


def ergc(gray: GrayImage, mask: Mask, params: SuperpixelParams) -> Segmentation:
    n_valid = check_inputs(gray, mask, params)
    img = np.ascontiguousarray(gray.values, dtype=np.float64)
    valid = np.ascontiguousarray(mask.valid)
    seeds, step = grid_seeds(valid, params.k_target)
    labels, times, pops = K.ergc_march(img, valid, seeds, params.compactness / step)
    return _finish("ergc", labels, mask, params, n_valid, step=step,
                   arrival=times, pop_times=pops)


def rss(gray: GrayImage, mask: Mask, params: SuperpixelParams) -> Segmentation:
    n_valid = check_inputs(gray, mask, params)
    img = np.ascontiguousarray(gray.values, dtype=np.float64)
    valid = np.ascontiguousarray(mask.valid)
    seeds, step = grid_seeds(valid, params.k_target)
    seeds = lowest_gradient(img, valid, seeds)
    labels, cost, hops = K.rss_forest(img, valid, seeds, params.compactness / step)
    return _finish("rss", labels, mask, params, n_valid, step=step,
                   forest=labels.copy(), seeds=seeds, path_cost=cost)


def crs(gray: GrayImage, mask: Mask, params: SuperpixelParams) -> Segmentation:
    n_valid = check_inputs(gray, mask, params)
    img = np.ascontiguousarray(gray.values, dtype=np.float64)
    labels, k, step = _grid_partition(mask, params, n_valid)
    trace = K.crs_relax(img, labels, k, params.compactness, params.iterations,
                        CRS_VAR_FLOOR, 1e-9)
    # relaxation never splits a segment, so only renumbering is left to do
    return _finish("crs", labels, mask, params, n_valid, min_size=1, step=step,
                   objective_trace=trace, relaxed=labels.copy())


def etps(gray: GrayImage, mask: Mask, params: SuperpixelParams) -> Segmentation:
    n_valid = check_inputs(gray, mask, params)
    img = np.ascontiguousarray(gray.values, dtype=np.float64)
    valid = np.ascontiguousarray(mask.valid)
    labels, k, step = _grid_partition(mask, params, n_valid)
    top = max(1, 2 ** int(math.floor(math.log2(max(1.0, step / 2)))))
    sizes = []
    b = top
    while b >= 1:
        sizes.append(b)
        b //= 2
    trace = K.etps_refine(img, valid, labels, k, params.compactness,
                          np.array(sizes, dtype=np.int64), params.iterations, 1e-12)
    return _finish("etps", labels, mask, params, n_valid, min_size=1, step=step,
                   energy_trace=trace, block_sizes=sizes, relaxed=labels.copy())


ALGORITHMS = {"crs": crs, "ergc": ergc, "etps": etps, "rss": rss, "slic": slic}


def segment(method: str, gray: GrayImage, mask: Mask, params: SuperpixelParams) -> Segmentation:
    try:
        fn = ALGORITHMS[method]
    except KeyError:
        raise ValueError(f"unknown superpixel method {method!r}; choose from {sorted(ALGORITHMS)}")
    return fn(gray, mask, params)
