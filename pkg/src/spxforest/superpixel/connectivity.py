import numpy as np

from ._kernels import adjacency_pairs, label_components
from .segmentation import SENTINEL, Segmentation


def relabel_connected(labels: np.ndarray, valid: np.ndarray, min_size: int) -> np.ndarray:
    """Split segments into 4-connected pieces, merge small pieces, renumber.

    ``labels`` may hold -1 on valid pixels that no segment reached; such
    pixels form pieces of their own.  A piece smaller than ``min_size`` joins
    the largest adjacent piece (ties: lowest piece id); merging repeats until
    every piece reaches ``min_size`` or has no neighbour.  Output ids follow
    row-major order of each segment's first pixel.
    """
    work = np.asarray(labels, dtype=np.int64).copy()
    unassigned = valid & (work < 0)
    if unassigned.any():
        work[unassigned] = work.max() + 1
    work[~valid] = SENTINEL
    comp = label_components(work)
    n = int(comp.max()) + 1
    if n == 0:
        return comp
    size = np.bincount(comp[comp >= 0], minlength=n).astype(np.int64)
    pairs = adjacency_pairs(comp)
    neighbours = [set() for _ in range(n)]
    for a, b in pairs:
        neighbours[a].add(b)
        neighbours[b].add(a)

    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # Pieces are visited in id order; a merged root keeps the union of neighbour sets.
    changed = True
    while changed:
        changed = False
        for c in range(n):
            if parent[c] != c or size[c] >= min_size:
                continue
            nbrs = {find(x) for x in neighbours[c]} - {c}
            if not nbrs:
                continue
            target = min(nbrs, key=lambda r: (-size[r], r))
            parent[c] = target
            size[target] += size[c]
            neighbours[target] |= neighbours[c]
            neighbours[c] = set()
            changed = True

    roots = np.array([find(i) for i in range(n)])
    new_id = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for c in range(n):
        r = roots[c]
        if new_id[r] < 0:
            new_id[r] = nxt
            nxt += 1
    out = np.where(comp >= 0, new_id[roots[np.maximum(comp, 0)]], SENTINEL)
    return out


def enforce_connectivity(seg: Segmentation, min_size: int) -> Segmentation:
    """Return ``seg`` with every segment 4-connected and no piece below ``min_size``
    (unless it has no neighbour), ids renumbered to 0..k_actual-1."""
    valid = seg.labels != SENTINEL
    labels = relabel_connected(seg.labels, valid, min_size)
    k = int(labels.max()) + 1 if valid.any() else 0
    return Segmentation(labels, k, seg.algorithm, dict(seg.params), dict(seg.info))
