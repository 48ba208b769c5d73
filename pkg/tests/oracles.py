"""Slow, independent reference implementations used as test oracles.

Each one is written directly from the definition with plain loops and shares
no code with the library.
"""

import math
from collections import deque

import numpy as np


# -- raster -------------------------------------------------------------------

def pca_power_iteration(data, valid, tol=1e-12, max_iter=100000):
    """First principal component by dense covariance + power iteration."""
    X = data[:, valid].T.astype(np.float64)
    X = X - X.mean(axis=0)
    S = X.T @ X / (X.shape[0] - 1)
    v = np.ones(S.shape[0]) / math.sqrt(S.shape[0])
    for _ in range(max_iter):
        w = S @ v
        w /= np.linalg.norm(w)
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    proj = X @ v
    proj = (proj - proj.min()) / (proj.max() - proj.min())
    out = np.zeros(valid.shape)
    out[valid] = proj
    return out


# -- segmentation -------------------------------------------------------------

def flood_fill_ok(labels, valid):
    """True when every segment is one 4-connected piece and the partition
    covers exactly the valid pixels with ids 0..k-1."""
    h, w = labels.shape
    if np.any(labels[~valid] != -1) or np.any(labels[valid] < 0):
        return False
    ids = sorted(set(labels[valid].tolist()))
    if ids != list(range(len(ids))):
        return False
    seen = np.zeros((h, w), dtype=bool)
    starts = 0
    for y in range(h):
        for x in range(w):
            if not valid[y, x] or seen[y, x]:
                continue
            starts += 1
            lab = labels[y, x]
            q = deque([(y, x)])
            seen[y, x] = True
            while q:
                cy, cx = q.popleft()
                for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx] and labels[ny, nx] == lab:
                        seen[ny, nx] = True
                        q.append((ny, nx))
    return starts == len(ids)


def rss_scan(img, valid, seeds, spatial):
    """Seeded path forest by exhaustive scanning (no priority queue).

    At each step every extension of a conquered pixel to a free 4-neighbour
    (and every unconquered seed) is costed from scratch; the smallest
    (cost, hops, root, pixel, predecessor) is conquered.
    """
    h, w = img.shape
    img = np.asarray(img, dtype=np.float64)
    owner = {}
    state = {}  # pixel -> (max_step, lo, hi, hops)
    n_valid = int(valid.sum())
    while len(owner) < n_valid:
        best = None
        for r, s in enumerate(seeds):
            if s not in owner:
                cand = (0.0, 0, r, s, s)
                best = cand if best is None or cand < best else best
        for u, r in owner.items():
            uy, ux = divmod(u, w)
            ms, lo, hi, hp = state[u]
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ny, nx = uy + dy, ux + dx
                if not (0 <= ny < h and 0 <= nx < w) or not valid[ny, nx]:
                    continue
                q = ny * w + nx
                if q in owner:
                    continue
                v = img[ny, nx]
                m2 = max(ms, abs(v - img[uy, ux]))
                rg = max(hi, v) - min(lo, v)
                cand = (max(m2, rg) + spatial * (hp + 1), hp + 1, r, q, u)
                if best is None or cand < best:
                    best = cand
        if best is None:
            break
        c, hp, r, q, u = best
        owner[q] = r
        v = img.flat[q]
        if q == u:
            state[q] = (0.0, v, v, 0)
        else:
            ms, lo, hi, _ = state[u]
            state[q] = (max(ms, abs(v - img.flat[u])), min(lo, v), max(hi, v), hp)
    out = np.full((h, w), -1, dtype=np.int64)
    for q, r in owner.items():
        out.flat[q] = r
    return out


# -- texture ------------------------------------------------------------------

OFFSETS = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}


def glcm_pairs(coords_levels, direction, levels):
    """Enumerate all ordered pixel pairs of a segment at one offset."""
    dy, dx = OFFSETS[direction]
    lookup = {(y, x): q for y, x, q in coords_levels}
    M = [[0.0] * levels for _ in range(levels)]
    total = 0
    for (y, x), q in lookup.items():
        p = lookup.get((y + dy, x + dx))
        if p is None:
            continue
        M[q][p] += 1
        M[p][q] += 1
        total += 2
    if total == 0:
        return None
    return np.array([[v / total for v in row] for row in M])


def haralick_naive(P):
    """Textbook double-loop Haralick features, base-2 logs, 0-based levels."""
    G = len(P)

    def lg(v):
        return math.log2(v) if v > 0 else 0.0

    px = [sum(P[i][j] for j in range(G)) for i in range(G)]
    py = [sum(P[i][j] for i in range(G)) for j in range(G)]
    mux = sum(i * px[i] for i in range(G))
    muy = sum(j * py[j] for j in range(G))
    sx = math.sqrt(sum((i - mux) ** 2 * px[i] for i in range(G)))
    sy = math.sqrt(sum((j - muy) ** 2 * py[j] for j in range(G)))
    asm = sum(P[i][j] ** 2 for i in range(G) for j in range(G))
    contrast = sum((i - j) ** 2 * P[i][j] for i in range(G) for j in range(G))
    cov = sum((i - mux) * (j - muy) * P[i][j] for i in range(G) for j in range(G))
    corr = cov / (sx * sy) if sx * sy > 0 else 0.0
    var = sum((i - mux) ** 2 * P[i][j] for i in range(G) for j in range(G))
    idm = sum(P[i][j] / (1 + (i - j) ** 2) for i in range(G) for j in range(G))
    psum = [0.0] * (2 * G - 1)
    pdif = [0.0] * G
    for i in range(G):
        for j in range(G):
            psum[i + j] += P[i][j]
            pdif[abs(i - j)] += P[i][j]
    savg = sum(k * psum[k] for k in range(2 * G - 1))
    svar = sum((k - savg) ** 2 * psum[k] for k in range(2 * G - 1))
    sent = -sum(p * lg(p) for p in psum)
    ent = -sum(P[i][j] * lg(P[i][j]) for i in range(G) for j in range(G))
    dmean = sum(k * pdif[k] for k in range(G))
    dvar = sum((k - dmean) ** 2 * pdif[k] for k in range(G))
    dent = -sum(p * lg(p) for p in pdif)
    hx = -sum(p * lg(p) for p in px)
    hy = -sum(p * lg(p) for p in py)
    hxy1 = -sum(P[i][j] * lg(px[i] * py[j]) for i in range(G) for j in range(G))
    hxy2 = -sum(px[i] * py[j] * lg(px[i] * py[j]) for i in range(G) for j in range(G))
    imc1 = (ent - hxy1) / max(hx, hy) if max(hx, hy) > 0 else 0.0
    imc2 = math.sqrt(max(0.0, 1 - math.exp(-2 * (hxy2 - ent) * math.log(2))))
    return np.array([asm, contrast, corr, var, idm, savg, svar, sent, ent, dvar, dent, imc1, imc2])


def bin_levels(values, lo, hi, levels):
    out = []
    for v in values:
        if hi <= lo:
            out.append(0)
            continue
        b = int(math.floor((v - lo) / (hi - lo) * levels))
        out.append(min(max(b, 0), levels - 1))
    return out


# -- learners / metrics / ensemble ---------------------------------------------

def ridge_normal_equations(Xs, y, alpha):
    n, d = Xs.shape
    A = [[0.0] * (d + 1) for _ in range(d + 1)]
    b = [0.0] * (d + 1)
    for r in range(n):
        row = list(Xs[r]) + [1.0]
        t = 1.0 if y[r] == 1 else -1.0
        for i in range(d + 1):
            b[i] += row[i] * t
            for j in range(d + 1):
                A[i][j] += row[i] * row[j]
    for i in range(d):
        A[i][i] += alpha
    return np.linalg.solve(np.array(A), np.array(b))


def auc_pairs(truth, scores):
    pos = [s for t, s in zip(truth, scores) if t == 1]
    neg = [s for t, s in zip(truth, scores) if t == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def vote_tally(P, include):
    out = []
    for row in P:
        ones = sum(int(v) for v, use in zip(row, include) if use)
        n = sum(1 for use in include if use)
        zeros = n - ones
        out.append(1 if ones >= zeros else 0)
    return np.array(out)


def cor_naive(ci, cj, truth):
    n = len(truth)
    a = sum(1 for x, y, t in zip(ci, cj, truth) if x == t and y == t) / n
    b = sum(1 for x, y, t in zip(ci, cj, truth) if x != t and y == t) / n
    c = sum(1 for x, y, t in zip(ci, cj, truth) if x == t and y != t) / n
    d = sum(1 for x, y, t in zip(ci, cj, truth) if x != t and y != t) / n
    den = (a + b) * (c + d) * (a + c) * (b + d)
    return None if den == 0 else (a * d - b * c) / math.sqrt(den)


def overlap_argmax(ref, other, ids):
    """Full cross-tabulation of overlaps, then the max by the stated ties."""
    counts = {}
    sizes = {}
    for a, b in zip(ref.ravel().tolist(), other.ravel().tolist()):
        if b >= 0:
            sizes[b] = sizes.get(b, 0) + 1
        if a >= 0:
            counts[(a, b)] = counts.get((a, b), 0) + 1
    out = {}
    for i in ids:
        cands = [(n, sizes[b], -b) for (a, b), n in counts.items() if a == i]
        if cands:
            out[i] = -max(cands)[2]
    return out
