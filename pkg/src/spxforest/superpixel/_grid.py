"""Regular grid layout shared by the seeded and grid-initialised algorithms."""

import math

import numpy as np


def grid_shape(width: int, height: int, k: int) -> tuple[int, int]:
    """Columns and rows whose product is close to ``k`` with near-square cells.

    Cost is relative count error plus a small penalty on cell aspect; ties
    prefer more columns.
    """
    best = None
    for nx in range(1, min(k, width) + 1):
        for ny in {max(1, k // nx), max(1, -(-k // nx))}:
            if ny > height:
                continue
            aspect = abs(math.log((width / nx) / (height / ny)))
            cost = abs(nx * ny - k) / k + 0.1 * aspect
            key = (round(cost, 12), -nx)
            if best is None or key < best[0]:
                best = (key, nx, ny)
    if best is None:
        return 1, 1
    return best[1], best[2]


def _cell_map(valid, r0, r1, c0, c1, k_box):
    nx, ny = grid_shape(c1 - c0, r1 - r0, k_box)
    xe = np.round(np.linspace(c0, c1, nx + 1)).astype(int)
    ye = np.round(np.linspace(r0, r1, ny + 1)).astype(int)
    cx = np.clip(np.searchsorted(xe, np.arange(valid.shape[1]), side="right") - 1, 0, nx - 1)
    cy = np.clip(np.searchsorted(ye, np.arange(valid.shape[0]), side="right") - 1, 0, ny - 1)
    cells = np.where(valid, cy[:, None] * nx + cx[None, :], -1)
    return cells, ye, xe


def grid_cells(valid: np.ndarray, k: int):
    """Rectangular cell id per pixel over the bounding box of the valid area.

    The box cell count is searched between ``k`` and ``k * bbox / valid_area``
    so that the number of cells meeting the mask is closest to ``k`` (ties:
    fewer box cells).  Returns (cell id map with -1 outside the mask, row
    edges, column edges, nominal step S).
    """
    rows = np.flatnonzero(valid.any(axis=1))
    cols = np.flatnonzero(valid.any(axis=0))
    r0, r1 = rows[0], rows[-1] + 1
    c0, c1 = cols[0], cols[-1] + 1
    n_valid = int(valid.sum())
    box = (r1 - r0) * (c1 - c0)
    k_hi = max(k, int(round(k * box / n_valid)))
    candidates = np.unique(np.round(np.geomspace(k, k_hi, min(k_hi - k + 1, 40))).astype(int))
    best = None
    for kb in candidates:
        cells, ye, xe = _cell_map(valid, r0, r1, c0, c1, int(kb))
        n = np.unique(cells[cells >= 0]).size
        if best is None or abs(n - k) < best[0]:
            best = (abs(n - k), cells, ye, xe)
    _, cells, ye, xe = best
    step = math.sqrt(n_valid / k)
    return cells, ye, xe, step


def grid_seeds(valid: np.ndarray, k: int):
    """One seed per cell that meets the mask: the valid pixel nearest the cell
    centre (ties in row-major order).  Returns flat indices and the step S."""
    cells, ye, xe, step = grid_cells(valid, k)
    w = valid.shape[1]
    nx = len(xe) - 1
    idx = np.flatnonzero(cells.ravel() >= 0)
    cid = cells.ravel()[idx]
    iy, ix = np.divmod(cid, nx)
    cyc = 0.5 * (ye[iy] + ye[iy + 1] - 1)
    cxc = 0.5 * (xe[ix] + xe[ix + 1] - 1)
    d = (idx // w - cyc) ** 2 + (idx % w - cxc) ** 2
    order = np.lexsort((idx, d, cid))
    first = np.ones(order.size, dtype=bool)
    first[1:] = cid[order][1:] != cid[order][:-1]
    seeds = idx[order][first]
    return np.array(seeds, dtype=np.int64), step


def lowest_gradient(img: np.ndarray, valid: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Move each seed to the lowest-gradient valid pixel of its 3x3 window.

    Ties keep the original position, then the first pixel in row-major order.
    """
    h, w = img.shape
    gy = np.zeros((h, w))
    gx = np.zeros((h, w))
    gy[1:-1, :] = img[2:, :] - img[:-2, :]
    gx[:, 1:-1] = img[:, 2:] - img[:, :-2]
    g = np.where(valid, gy ** 2 + gx ** 2, np.inf)
    out = seeds.copy()
    taken = set()
    for i, p in enumerate(seeds):
        y, x = divmod(int(p), w)
        best = None
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and valid[yy, xx]:
                    q = yy * w + xx
                    if q in taken:
                        continue
                    cand = (g[yy, xx], q != p, q)
                    if best is None or cand < best:
                        best = cand
        if best is not None:
            out[i] = best[2]
        taken.add(int(out[i]))
    return out
